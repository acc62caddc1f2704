#pragma once

#include "va/result.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace va {

// Point or posterior-summary CSMF. Without Undetermined, its mass is dropped
// and the remaining fractions renormalized.
CSMFEstimate get_csmf(const CodingResult &result, bool include_undetermined = true);

// 1 - sum |est - truth| / (2 (1 - min truth)). Vectors must be aligned.
double csmf_accuracy(std::span<const double> est, std::span<const double> truth);

enum class UndeterminedMode {
    // Drop the Undetermined entry and rescale the rest to unit sum.
    Renormalize,
    // Spread the Undetermined mass evenly over the causes.
    Spread,
};

// Matches causes by name. The `undetermined` entry of `est` (when present)
// is handled per `mode`; any other mismatch in cause sets is an error.
double csmf_accuracy(const std::vector<std::string> &est_causes, std::span<const double> est,
                     const std::vector<std::string> &truth_causes, std::span<const double> truth,
                     const std::optional<std::string> &undetermined = std::string(kUndetermined),
                     UndeterminedMode mode = UndeterminedMode::Renormalize);

// Empirical frequencies over `causes`, zero-count causes included.
std::vector<double> truth_csmf(const std::vector<std::string> &labels,
                               const std::vector<std::string> &causes);

struct TopCod {
    std::string id;
    std::string cause;
    // Probability, or the rank for Tariff.
    double score = 0.0;
};

// Argmax per death (minimal rank for Tariff); ties go to the earlier cause.
std::vector<TopCod> get_top_cod(const CodingResult &result);
Table top_cod_table(const std::vector<TopCod> &top, bool ranks = false);

// Throws UnsupportedError for Tariff.
IndivProbResult get_indiv_prob(const CodingResult &result);

struct CauseGrouping {
    std::vector<std::string> causes;
    std::vector<std::string> groups;

    // CSV `cause,group`.
    static CauseGrouping from_table(const Table &table);
    static CauseGrouping from_csv(const std::string &path);
    // Adds the identity entry for Undetermined when absent.
    CauseGrouping with_undetermined() const;
    // Group labels in first-appearance order.
    std::vector<std::string> labels() const;
};

// Sums member-cause mass per group (means only). `order` lists groups first,
// the remaining groups follow in first-appearance order.
CSMFEstimate aggregate_csmf(const CSMFEstimate &csmf, const CauseGrouping &grouping,
                            const std::vector<std::string> &order = {});

} // namespace va
