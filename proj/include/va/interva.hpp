#pragma once

#include "va/core.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace va {

enum class ConvertType { Quantile, Fixed, Empirical };
ConvertType parse_convert_type(std::string_view name);

// Sorted distinct labels, or `order` after checking every listed cause has a record.
std::vector<std::string> training_causes(const std::vector<std::string> &labels,
                                         const std::vector<std::string> *order = nullptr);

// P-hat(s=1|c) = Yes count / non-missing count among cause-c records (0 when
// no cause-c record observes s).
CondProbMatrix empirical_condprob(const SymptomMatrix &train, const std::vector<std::string> &labels,
                                  const std::vector<std::string> *cause_order = nullptr);

CondProbMatrix train_condprob(const SymptomMatrix &train, const std::vector<std::string> &labels,
                              const GradeTable &grades, ConvertType type,
                              const std::vector<std::string> *cause_order = nullptr);

// Rank-share matching: entries sorted descending get grades so that each
// grade's share of entries follows the grade table's reference shares.
std::vector<std::size_t> quantile_grades(const Matrix &values, const GradeTable &grades);

enum class PrevalenceLevel { High, Low, VeryLow };
PrevalenceLevel parse_prevalence(std::string_view name);

struct PrevalenceFactors {
    double high = 1.0;
    double low = 0.05;
    double very_low = 0.005;
    double factor(PrevalenceLevel level) const noexcept;
};

// Which causes respond to the HIV and malaria prevalence settings.
struct PrevalenceTags {
    std::vector<std::string> hiv;
    std::vector<std::string> malaria;
    // CSV `cause,tag` with tag in {hiv, malaria}.
    static PrevalenceTags from_csv(const std::string &path);
};

// Truncation of a posterior to its leading causes. The first cause is kept when
// its probability reaches `top_floor`; each following one (up to max_causes)
// needs at least `floor` and at least `ratio` times the previous kept cause.
struct IntervaPostprocessRule {
    double top_floor = 0.0;
    double floor = 0.1;
    double ratio = 0.5;
    std::size_t max_causes = 3;
};

struct IntervaConfig {
    std::string version = "4.03";
    PrevalenceLevel hiv = PrevalenceLevel::High;
    PrevalenceLevel malaria = PrevalenceLevel::High;
    PrevalenceFactors factors;
    PrevalenceTags tags;
    IntervaPostprocessRule rule;
};

struct PosteriorResult {
    std::vector<double> probs;
    // Every cause had zero likelihood; probs holds the (masked) prior.
    bool degenerate = false;
};

// Presence-only Bayes rule; `record` is aligned with the rows of `probs`.
// `possible` (length C, optional) zeroes masked causes.
PosteriorResult interva_posterior(std::span<const SymptomValue> record, const CondProbMatrix &probs,
                                  const PriorCSMF &prior,
                                  std::span<const std::uint8_t> possible = {});

// Length C+1; the last entry is Undetermined.
std::vector<double> interva_postprocess(std::span<const double> dist,
                                        const IntervaPostprocessRule &rule);

PriorCSMF apply_prevalence(const PriorCSMF &prior, const std::vector<std::string> &causes,
                           const IntervaConfig &config);

// Mean of rows. Throws ValidationError when there are no rows.
CSMFEstimate average_csmf(const IndivProbResult &result);
inline CSMFEstimate interva_csmf(const IndivProbResult &result) { return average_csmf(result); }

struct IntervaFit {
    IndivProbResult raw;
    // Post-processed, with a trailing Undetermined column.
    IndivProbResult post;
    CSMFEstimate csmf;
    CSMFEstimate csmf_raw;
    std::vector<std::string> degenerate_ids;
    std::vector<std::string> dropped_symptoms;
};

// `mask`, when given, is N x probs.num_causes().
IntervaFit interva_code(const SymptomMatrix &data, const CondProbMatrix &probs,
                        const PriorCSMF &prior, const IntervaConfig &config,
                        const ImpossibilityMask *mask = nullptr);

// Built-in probability tables: symptom rows, one column per cause, grade
// labels or numbers in the cells. Optional prior CSV `cause,prior`.
CondProbMatrix read_condprob_csv(const std::string &path, const GradeTable &grades);
void write_condprob_csv(const std::string &path, const CondProbMatrix &probs);
PriorCSMF read_prior_csv(const std::string &path, const std::vector<std::string> &causes);

} // namespace va
