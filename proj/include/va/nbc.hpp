#pragma once

#include "va/core.hpp"

#include <span>
#include <string>
#include <vector>

namespace va {

struct NbcModel {
    CondProbMatrix probs;
    PriorCSMF prior;
    double alpha = 1.0;
};

// P(s=1|c) = (yes + alpha) / (observed + 2 alpha); prior = (n_c + alpha) / (N + C alpha).
NbcModel nbc_train(const SymptomMatrix &train, const std::vector<std::string> &labels,
                   double alpha = 1.0, const std::vector<std::string> *cause_order = nullptr);

enum class NbcMissing {
    // Missing contributes the absence factor 1 - P.
    AsAbsent,
    // Missing contributes nothing.
    Skip,
};

// `record` is aligned with model.probs rows.
std::vector<double> nbc_posterior(std::span<const SymptomValue> record, const NbcModel &model,
                                  NbcMissing missing = NbcMissing::AsAbsent,
                                  std::span<const std::uint8_t> possible = {});

struct NbcOptions {
    NbcMissing missing = NbcMissing::AsAbsent;
    bool uniform_prior = false;
};

struct NbcFit {
    IndivProbResult indiv;
    CSMFEstimate csmf;
    std::vector<std::string> dropped_symptoms;
};

NbcFit nbc_code(const SymptomMatrix &data, const NbcModel &model, const NbcOptions &options = {},
                const ImpossibilityMask *mask = nullptr);

} // namespace va
