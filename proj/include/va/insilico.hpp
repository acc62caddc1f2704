#pragma once

#include "va/core.hpp"
#include "va/csv.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace va {

enum class LevelMode {
    // Re-estimate level values when the probability table carries grades.
    Auto,
    Fixed,
    Reestimate,
};

struct InsilicoConfig {
    std::size_t nsim = 10000;
    // Defaults to nsim / 2.
    std::optional<std::size_t> burn;
    std::size_t thin = 20;
    bool auto_length = false;
    int max_doublings = 3;
    double indiv_ci = 0.95;
    double csmf_ci = 0.95;
    std::uint64_t seed = 1;

    double mu_mean = 0.0;
    double mu_var = 100.0;
    double sigma_shape = 0.001;
    double sigma_scale = 0.001;
    double proposal_scale = 1.0;
    double target_accept = 0.35;

    LevelMode levels = LevelMode::Auto;
    // Beta prior strength for each level value, as a multiple of N.
    double level_strength = 1.5;

    bool remove_impossible = true;
    std::vector<std::string> demographic;
    // Minimum posterior-mean CSMF for a cause to enter the convergence test.
    double convergence_min_csmf = 0.02;
};

void validate(const InsilicoConfig &config);

struct InsilicoInput {
    SymptomMatrix data;
    CondProbMatrix probs;
    // Per-record sub-population label; empty means a single group "all".
    std::vector<std::string> groups;
    // Optional declared group list; each must have at least one record.
    std::vector<std::string> declared_groups;
    // N x probs.num_causes() physician prior (rows normalized), optional.
    std::optional<Matrix> physician;
    // N x probs.num_causes(), optional.
    ImpossibilityMask mask;
};

struct StationarityResult {
    bool conclusive = false;
    bool passed = false;
    double statistic = 0.0;
    // Fraction of the chain discarded by the passing test.
    double discarded = 0.0;
};

// Heidelberger-Welch stationarity test (Cramer-von Mises on the standardized
// partial-sum process, spectral density at zero from an AIC-selected AR fit).
// Chains shorter than `min_length` are inconclusive.
StationarityResult heidelberger_welch(std::span<const double> chain, std::size_t min_length = 50);

// Spectral density at frequency zero from a Yule-Walker AR fit.
double spectrum0_ar(std::span<const double> x);

struct ConvergenceDetail {
    std::string group;
    std::string cause;
    StationarityResult result;
};

struct ConvergenceReport {
    bool conclusive = false;
    bool passed = false;
    std::vector<ConvergenceDetail> details;
};

struct PosteriorSample {
    std::vector<std::string> groups;
    // Cause list of the probability table, before removal.
    std::vector<std::string> input_causes;
    // Causes remaining after impossible-cause removal.
    std::vector<std::string> causes;
    std::vector<std::string> removed_causes;
    // Per group: retained draws x causes.
    std::vector<Matrix> pi;
    std::vector<std::string> level_labels;
    // Retained draws x levels (empty when levels are fixed).
    Matrix levels;
    std::vector<double> acceptance;
    std::size_t nsim = 0;
    std::size_t burn = 0;
    std::size_t thin = 0;
    int doublings = 0;
    bool levels_reestimated = false;
    ConvergenceReport convergence;

    std::size_t draws() const noexcept { return pi.empty() ? 0 : static_cast<std::size_t>(pi[0].rows()); }
};

ConvergenceReport insilico_convergence(const PosteriorSample &sample, double min_csmf = 0.02);

class InsilicoFit {
  public:
    const PosteriorSample &sample() const noexcept { return sample_; }
    const std::vector<std::string> &ids() const noexcept { return ids_; }
    const std::vector<std::size_t> &record_group() const noexcept { return record_group_; }

    // Per-death quantile summaries recomputed from the retained draws.
    IndivProbResult indiv_summary(double ci) const;
    // Mean, Std.Error, Lower, Median, Upper per group.
    CSMFEstimate csmf(double ci) const;

  private:
    friend InsilicoFit insilico_fit(const InsilicoInput &, const InsilicoConfig &);
    friend struct InsilicoRunner;

    PosteriorSample sample_;
    std::vector<std::string> ids_;
    std::vector<std::size_t> record_group_;
    // Per-record log-likelihood pieces: counts of Yes/No symptoms at each level.
    std::vector<float> yes_counts_; // N x C x L
    std::vector<float> no_counts_;
    // Numeric tables without grades: fixed log-likelihood N x C.
    Matrix fixed_loglik_;
    std::vector<double> level_values_; // initial values, length L
    Matrix log_prior_;                 // N x C physician/mask term (-inf when impossible)
};

InsilicoFit insilico_fit(const InsilicoInput &input, const InsilicoConfig &config);

// Sub-population labels: values of `columns` joined by a single space.
std::vector<std::string> subpop_labels(const Table &table, const std::vector<std::string> &columns);

} // namespace va
