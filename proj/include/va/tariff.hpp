#pragma once

#include "va/core.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace va {

// Tariff_kj = (n_kj - median_k n_kj) / IQR_k n_kj, column by column over causes;
// 0 when the IQR is 0. `counts` is C x S.
Matrix tariff_matrix(const Matrix &counts);

struct TariffModel {
    std::vector<std::string> symptoms;
    std::vector<std::string> causes;
    Matrix counts; // C x S
    Matrix tariff; // C x S
    // Per cause, ascending scores of resampled true-cause training records.
    std::vector<std::vector<double>> pools;
};

TariffModel tariff_train(const SymptomMatrix &train, const std::vector<std::string> &labels,
                         std::size_t bootstrap = 100, std::uint64_t seed = 1,
                         const std::vector<std::string> *cause_order = nullptr);

// `record` is aligned with model.symptoms.
std::vector<double> tariff_score(std::span<const SymptomValue> record, const TariffModel &model);

// (1 + #pool entries strictly above the score) / pool size, per cause; masked
// causes get +inf. Lower is more likely.
std::vector<double> tariff_rank(std::span<const double> scores, const TariffModel &model,
                                std::span<const std::uint8_t> possible = {});

// Index of the minimal rank; ties go to the earlier cause.
std::size_t best_rank(std::span<const double> ranks);

struct TariffFit {
    std::vector<std::string> ids;
    std::vector<std::string> causes;
    Matrix scores; // N x C
    Matrix ranks;  // N x C
    std::vector<std::size_t> top;
    CSMFEstimate csmf;
    std::vector<std::string> dropped_symptoms;
};

CSMFEstimate tariff_csmf(const std::vector<std::size_t> &top, const std::vector<std::string> &causes);

TariffFit tariff_code(const SymptomMatrix &data, const TariffModel &model,
                      const ImpossibilityMask *mask = nullptr);

} // namespace va
