#include "va/insilico.hpp"
#include "va/consistency.hpp"
#include "va/error.hpp"
#include "va/parallel.hpp"
#include "va/stats.hpp"

#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace va {

namespace {

// Double-precision internals; the default promotes to long double, which is several times slower.
using BetaPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double uniform01(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

void validate(const InsilicoConfig &config) {
    if (config.nsim < 1) {
        throw ConfigError("Nsim must be positive");
    }
    if (config.thin < 1) {
        throw ConfigError("thinning must be at least 1");
    }
    std::size_t burn = config.burn.value_or(config.nsim / 2);
    if (burn >= config.nsim) {
        throw ConfigError("burn-in (" + std::to_string(burn) + ") must be below Nsim (" +
                          std::to_string(config.nsim) + ")");
    }
    if ((config.nsim - burn) / config.thin < 1) {
        throw ConfigError("no draws retained: Nsim - burn-in is smaller than the thinning interval");
    }
    for (double ci : {config.indiv_ci, config.csmf_ci}) {
        if (!(ci > 0.0 && ci < 1.0)) {
            throw ConfigError("credible interval level must lie in (0, 1)");
        }
    }
    if (!(config.mu_var > 0.0) || !(config.sigma_shape > 0.0) || !(config.sigma_scale > 0.0) ||
        !(config.proposal_scale > 0.0) || !(config.level_strength > 0.0)) {
        throw ConfigError("hyperparameters must be positive");
    }
    if (!(config.target_accept > 0.0 && config.target_accept < 1.0)) {
        throw ConfigError("target acceptance rate must lie in (0, 1)");
    }
    if (config.max_doublings < 0) {
        throw ConfigError("max doublings must be nonnegative");
    }
}

// ---------------------------------------------------------------------------
// Stationarity

double spectrum0_ar(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) {
        return 0.0;
    }
    double m = mean(x);
    std::size_t max_order =
        std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::floor(10.0 * std::log10(n))));
    std::vector<double> r(max_order + 1, 0.0);
    for (std::size_t lag = 0; lag <= max_order; ++lag) {
        double s = 0.0;
        for (std::size_t t = lag; t < n; ++t) {
            s += (x[t] - m) * (x[t - lag] - m);
        }
        r[lag] = s / static_cast<double>(n);
    }
    if (!(r[0] > 0.0)) {
        return 0.0;
    }
    // Levinson-Durbin recursion; keep the AIC-best order.
    std::vector<double> phi;
    std::vector<double> best_phi;
    double v = r[0];
    double best_v = v;
    std::size_t best_order = 0;
    double best_aic = static_cast<double>(n) * std::log(v);
    for (std::size_t k = 1; k <= max_order; ++k) {
        double acc = r[k];
        for (std::size_t j = 1; j < k; ++j) {
            acc -= phi[j - 1] * r[k - j];
        }
        double kappa = acc / v;
        if (!std::isfinite(kappa) || std::abs(kappa) >= 1.0) {
            break;
        }
        std::vector<double> next(k);
        for (std::size_t j = 1; j < k; ++j) {
            next[j - 1] = phi[j - 1] - kappa * phi[k - j - 1];
        }
        next[k - 1] = kappa;
        phi = std::move(next);
        v *= 1.0 - kappa * kappa;
        if (!(v > 0.0)) {
            break;
        }
        double aic = static_cast<double>(n) * std::log(v) + 2.0 * static_cast<double>(k);
        if (aic < best_aic) {
            best_aic = aic;
            best_order = k;
            best_phi = phi;
            best_v = v;
        }
    }
    double var_pred = best_v * static_cast<double>(n) / static_cast<double>(n - (best_order + 1));
    double denom = 1.0 - std::accumulate(best_phi.begin(), best_phi.end(), 0.0);
    return var_pred / (denom * denom);
}

StationarityResult heidelberger_welch(std::span<const double> chain, std::size_t min_length) {
    // 5% critical value of the Cramer-von Mises statistic.
    constexpr double kCritical = 0.4614;
    StationarityResult out;
    const std::size_t n = chain.size();
    if (n < std::max<std::size_t>(min_length, 4)) {
        return out;
    }
    out.conclusive = true;
    for (std::size_t step = 0; step <= 5; ++step) {
        std::size_t start = step * n / 10;
        auto y = chain.subspan(start);
        const std::size_t m = y.size();
        double s0 = spectrum0_ar(y.subspan(m / 2));
        if (!(s0 > 0.0)) {
            // A constant tail is stationary.
            out.passed = true;
            out.statistic = 0.0;
            out.discarded = static_cast<double>(start) / static_cast<double>(n);
            return out;
        }
        double ybar = mean(y);
        double b = 0.0;
        double sum_sq = 0.0;
        for (std::size_t t = 0; t < m; ++t) {
            b += y[t] - ybar;
            sum_sq += b * b / (static_cast<double>(m) * s0);
        }
        double stat = sum_sq / static_cast<double>(m);
        if (step == 0 || stat < out.statistic) {
            out.statistic = stat;
        }
        if (stat < kCritical) {
            out.passed = true;
            out.statistic = stat;
            out.discarded = static_cast<double>(start) / static_cast<double>(n);
            return out;
        }
    }
    return out;
}

ConvergenceReport insilico_convergence(const PosteriorSample &sample, double min_csmf) {
    ConvergenceReport report;
    report.conclusive = sample.draws() >= 50;
    report.passed = report.conclusive;
    std::vector<double> chain;
    for (std::size_t g = 0; g < sample.groups.size(); ++g) {
        const Matrix &pi = sample.pi[g];
        for (Eigen::Index k = 0; k < pi.cols(); ++k) {
            chain.assign(static_cast<std::size_t>(pi.rows()), 0.0);
            for (Eigen::Index t = 0; t < pi.rows(); ++t) {
                chain[static_cast<std::size_t>(t)] = pi(t, k);
            }
            if (mean(chain) < min_csmf) {
                continue;
            }
            ConvergenceDetail d{sample.groups[g], sample.causes[static_cast<std::size_t>(k)],
                                heidelberger_welch(chain)};
            if (!d.result.conclusive || !d.result.passed) {
                report.passed = false;
            }
            report.details.push_back(std::move(d));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Sampler

struct InsilicoRunner {
    const InsilicoConfig &config;
    const InsilicoFit &fit;
    std::size_t N = 0;
    std::size_t C = 0;
    std::size_t L = 0;
    std::size_t G = 0;
    bool reestimate = false;
    // Level indices that are drawn (values strictly inside (0, 1)).
    std::vector<std::size_t> free_levels{};
    std::vector<std::vector<std::size_t>> active{}; // per group
    std::vector<std::size_t> group_size{};

    void loglik(const std::vector<double> &levels, Matrix &out) const {
        if (!reestimate) {
            out = fit.fixed_loglik_;
            return;
        }
        std::vector<double> ly(L);
        std::vector<double> ln(L);
        for (std::size_t l = 0; l < L; ++l) {
            ly[l] = std::log(levels[l]);
            ln[l] = std::log1p(-levels[l]);
        }
        out.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(C));
        parallel_for(N, [&](std::size_t i) {
            for (std::size_t k = 0; k < C; ++k) {
                const float *y = fit.yes_counts_.data() + (i * C + k) * L;
                const float *no = fit.no_counts_.data() + (i * C + k) * L;
                double s = 0.0;
                for (std::size_t l = 0; l < L; ++l) {
                    if (y[l] != 0.0f) {
                        s += static_cast<double>(y[l]) * ly[l];
                    }
                    if (no[l] != 0.0f) {
                        s += static_cast<double>(no[l]) * ln[l];
                    }
                }
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s;
            }
        });
    }

    // Fills `w` with normalized probabilities for record i.
    void record_probs(std::size_t i, const double *log_pi, const Matrix &ll, std::vector<double> &w) const {
        auto ii = static_cast<Eigen::Index>(i);
        double mx = kNegInf;
        for (std::size_t k = 0; k < C; ++k) {
            auto kk = static_cast<Eigen::Index>(k);
            w[k] = log_pi[k] + fit.log_prior_(ii, kk) + ll(ii, kk);
            mx = std::max(mx, w[k]);
        }
        if (!std::isfinite(mx)) {
            // No cause explains the symptoms; fall back to the prior terms.
            for (std::size_t k = 0; k < C; ++k) {
                auto kk = static_cast<Eigen::Index>(k);
                w[k] = log_pi[k] + fit.log_prior_(ii, kk);
                mx = std::max(mx, w[k]);
            }
        }
        double total = 0.0;
        for (std::size_t k = 0; k < C; ++k) {
            w[k] = std::isfinite(w[k]) ? std::exp(w[k] - mx) : 0.0;
            total += w[k];
        }
        for (std::size_t k = 0; k < C; ++k) {
            w[k] /= total;
        }
    }

    void log_pi_from_theta(const std::vector<double> &theta, std::size_t g, double *out) const {
        double mx = kNegInf;
        for (auto k : active[g]) {
            mx = std::max(mx, theta[g * C + k]);
        }
        double s = 0.0;
        for (auto k : active[g]) {
            s += std::exp(theta[g * C + k] - mx);
        }
        double lse = mx + std::log(s);
        for (std::size_t k = 0; k < C; ++k) {
            out[k] = kNegInf;
        }
        for (auto k : active[g]) {
            out[k] = theta[g * C + k] - lse;
        }
    }

    PosteriorSample run(std::size_t nsim, std::size_t burn) {
        const std::size_t thin = config.thin;
        const std::size_t T = (nsim - burn) / thin;
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                          static_cast<std::uint32_t>(config.seed >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, 1.0);

        std::vector<double> levels = fit.level_values_;
        std::vector<double> theta(G * C, 0.0);
        std::vector<double> log_scale(G * C, std::log(config.proposal_scale));
        std::vector<double> log_pi(G * C);
        double mu = config.mu_mean;
        double sigma2 = 1.0;
        std::vector<std::size_t> y(N, 0);
        std::vector<double> counts(G * C);
        std::vector<double> w(C);
        std::vector<double> accepted(G, 0.0);
        std::vector<double> proposed(G, 0.0);

        PosteriorSample s;
        s.nsim = nsim;
        s.burn = burn;
        s.thin = thin;
        s.pi.assign(G, Matrix::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(C)));
        s.levels_reestimated = reestimate;
        if (reestimate) {
            s.levels = Matrix::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(L));
        }

        Matrix ll;
        loglik(levels, ll);
        const double kappa = config.level_strength * static_cast<double>(N);
        std::size_t kept = 0;

        for (std::size_t t = 1; t <= nsim; ++t) {
            for (std::size_t g = 0; g < G; ++g) {
                log_pi_from_theta(theta, g, log_pi.data() + g * C);
            }
            // (a) cause assignments
            std::fill(counts.begin(), counts.end(), 0.0);
            for (std::size_t i = 0; i < N; ++i) {
                std::size_t g = fit.record_group_[i];
                record_probs(i, log_pi.data() + g * C, ll, w);
                double u = uniform01(rng);
                double c = 0.0;
                std::size_t pick = C;
                std::size_t last_positive = 0;
                for (std::size_t k = 0; k < C; ++k) {
                    if (w[k] > 0.0) {
                        last_positive = k;
                        c += w[k];
                        if (u < c) {
                            pick = k;
                            break;
                        }
                    }
                }
                if (pick == C) {
                    pick = last_positive;
                }
                y[i] = pick;
                counts[g * C + pick] += 1.0;
            }
            // (b) theta, componentwise random-walk Metropolis
            const bool adapting = t <= burn;
            const double gamma = 1.0 / std::pow(static_cast<double>(t), 0.6);
            for (std::size_t g = 0; g < G; ++g) {
                const double n_g = static_cast<double>(group_size[g]);
                auto target = [&](const double *th) {
                    double mx = kNegInf;
                    for (auto k : active[g]) {
                        mx = std::max(mx, th[k]);
                    }
                    double se = 0.0;
                    for (auto k : active[g]) {
                        se += std::exp(th[k] - mx);
                    }
                    double lse = mx + std::log(se);
                    double v = -n_g * lse;
                    for (auto k : active[g]) {
                        v += counts[g * C + k] * th[k] - (th[k] - mu) * (th[k] - mu) / (2.0 * sigma2);
                    }
                    return v;
                };
                double *th = theta.data() + g * C;
                double current = target(th);
                for (auto k : active[g]) {
                    double old = th[k];
                    th[k] = old + std::exp(log_scale[g * C + k]) * normal(rng);
                    double proposal = target(th);
                    double a = 0.0;
                    if (std::log(uniform01(rng)) < proposal - current) {
                        current = proposal;
                        a = 1.0;
                    } else {
                        th[k] = old;
                    }
                    if (adapting) {
                        double &ls = log_scale[g * C + k];
                        ls = std::clamp(ls + gamma * (a - config.target_accept), -10.0, 5.0);
                    } else {
                        accepted[g] += a;
                        proposed[g] += 1.0;
                    }
                }
            }
            // (c) mu and sigma^2, conjugate
            {
                double n = 0.0;
                double sum = 0.0;
                for (std::size_t g = 0; g < G; ++g) {
                    for (auto k : active[g]) {
                        n += 1.0;
                        sum += theta[g * C + k];
                    }
                }
                double prec = 1.0 / config.mu_var + n / sigma2;
                double m = (config.mu_mean / config.mu_var + sum / sigma2) / prec;
                mu = m + normal(rng) / std::sqrt(prec);
                double ss = 0.0;
                for (std::size_t g = 0; g < G; ++g) {
                    for (auto k : active[g]) {
                        ss += (theta[g * C + k] - mu) * (theta[g * C + k] - mu);
                    }
                }
                std::gamma_distribution<double> gam(config.sigma_shape + 0.5 * n, 1.0);
                double draw = gam(rng);
                sigma2 = (config.sigma_scale + 0.5 * ss) / std::max(draw, 1e-300);
            }
            // (d) level values, truncated Beta keeping the ordering
            if (reestimate && !free_levels.empty()) {
                std::vector<double> a(L, 0.0);
                std::vector<double> b(L, 0.0);
                for (std::size_t i = 0; i < N; ++i) {
                    const float *yc = fit.yes_counts_.data() + (i * C + y[i]) * L;
                    const float *nc = fit.no_counts_.data() + (i * C + y[i]) * L;
                    for (std::size_t l = 0; l < L; ++l) {
                        a[l] += yc[l];
                        b[l] += nc[l];
                    }
                }
                for (auto l : free_levels) {
                    double hi = l == 0 ? 1.0 : levels[l - 1];
                    double lo = l + 1 == L ? 0.0 : levels[l + 1];
                    double v0 = fit.level_values_[l];
                    double u = uniform01(rng);
                    try {
                        boost::math::beta_distribution<double, BetaPolicy> dist(kappa * v0 + a[l],
                                                                                kappa * (1.0 - v0) + b[l]);
                        double flo = boost::math::cdf(dist, lo);
                        double fhi = boost::math::cdf(dist, hi);
                        if (fhi > flo) {
                            double x = boost::math::quantile(dist, flo + u * (fhi - flo));
                            if (x > lo && x < hi) {
                                levels[l] = x;
                            }
                        }
                    } catch (const std::exception &) {
                        // Keep the current value when the inverse CDF fails.
                    }
                }
                loglik(levels, ll);
            }
            if (t > burn && (t - burn) % thin == 0 && kept < T) {
                for (std::size_t g = 0; g < G; ++g) {
                    log_pi_from_theta(theta, g, log_pi.data() + g * C);
                    double total = 0.0;
                    for (std::size_t k = 0; k < C; ++k) {
                        double p = std::isfinite(log_pi[g * C + k]) ? std::exp(log_pi[g * C + k]) : 0.0;
                        s.pi[g](static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(k)) = p;
                        total += p;
                    }
                    s.pi[g].row(static_cast<Eigen::Index>(kept)) /= total;
                }
                if (reestimate) {
                    for (std::size_t l = 0; l < L; ++l) {
                        s.levels(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(l)) = levels[l];
                    }
                }
                ++kept;
            }
        }
        s.acceptance.resize(G);
        for (std::size_t g = 0; g < G; ++g) {
            s.acceptance[g] = proposed[g] > 0.0 ? accepted[g] / proposed[g] : 0.0;
        }
        return s;
    }
};

std::vector<std::string> subpop_labels(const Table &table, const std::vector<std::string> &columns) {
    std::vector<std::size_t> idx;
    for (const auto &c : columns) {
        idx.push_back(table.require_column(c));
    }
    std::vector<std::string> labels;
    labels.reserve(table.height());
    for (const auto &row : table.rows) {
        std::string label;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            if (j > 0) {
                label += ' ';
            }
            label += row[idx[j]];
        }
        labels.push_back(std::move(label));
    }
    return labels;
}

InsilicoFit insilico_fit(const InsilicoInput &input, const InsilicoConfig &config) {
    validate(config);
    require_valid(input.data);
    const std::size_t N = input.data.rows();
    if (N == 0) {
        throw ValidationError("no records to code");
    }
    auto aligned = align(input.data, input.probs);
    const std::size_t C0 = input.probs.num_causes();
    if (!input.mask.possible.empty() &&
        (input.mask.causes != C0 || input.mask.possible.size() != N * C0)) {
        throw ValidationError("impossibility mask does not match data and causes");
    }
    if (input.physician && (static_cast<std::size_t>(input.physician->rows()) != N ||
                            static_cast<std::size_t>(input.physician->cols()) != C0)) {
        throw ValidationError("physician prior does not match data and causes");
    }
    if (!input.groups.empty() && input.groups.size() != N) {
        throw ValidationError("sub-population labels do not match the record count");
    }

    // Causes kept for the population and the per-record possibility mask.
    std::vector<std::size_t> kept(C0);
    std::iota(kept.begin(), kept.end(), 0);
    std::vector<std::uint8_t> possible(N * C0, 1);
    std::vector<std::string> removed;
    if (config.remove_impossible) {
        const auto &demo = config.demographic.empty() ? default_demographic_symptoms()
                                                      : config.demographic;
        auto imp = remove_impossible_causes(aligned.data, aligned.probs, demo,
                                            !config.demographic.empty());
        auto full = expand_mask(imp, N, C0);
        possible = full.possible;
        kept = imp.kept;
        removed = imp.removed;
    }
    const std::size_t C = kept.size();
    std::vector<std::uint8_t> mask(N * C);
    for (std::size_t i = 0; i < N; ++i) {
        bool any = false;
        for (std::size_t kk = 0; kk < C; ++kk) {
            std::uint8_t p = possible[i * C0 + kept[kk]];
            if (!input.mask.possible.empty()) {
                p = p && input.mask.possible[i * C0 + kept[kk]];
            }
            mask[i * C + kk] = p;
            any = any || p;
        }
        if (!any) {
            bool base_any = false;
            for (std::size_t kk = 0; kk < C; ++kk) {
                mask[i * C + kk] = possible[i * C0 + kept[kk]];
                base_any = base_any || mask[i * C + kk];
            }
            if (!base_any) {
                std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(i * C), C, 1);
            }
        }
    }
    auto probs = aligned.probs.select_causes(kept);
    const auto &data = aligned.data;

    InsilicoFit fit;
    fit.ids_ = input.data.ids();
    fit.sample_.causes = probs.causes();
    fit.sample_.removed_causes = removed;

    // Groups.
    std::vector<std::string> labels = input.groups;
    if (labels.empty()) {
        labels.assign(N, "all");
    }
    std::set<std::string> group_set(labels.begin(), labels.end());
    for (const auto &d : input.declared_groups) {
        if (!group_set.count(d)) {
            throw ValidationError("sub-population '" + d + "' has no records");
        }
    }
    fit.sample_.groups.assign(group_set.begin(), group_set.end());
    const std::size_t G = fit.sample_.groups.size();
    std::map<std::string, std::size_t> group_index;
    for (std::size_t g = 0; g < G; ++g) {
        group_index.emplace(fit.sample_.groups[g], g);
    }
    fit.record_group_.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        fit.record_group_[i] = group_index.at(labels[i]);
    }

    // Prior terms.
    fit.log_prior_ = Matrix::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(C));
    for (std::size_t i = 0; i < N; ++i) {
        double total = 0.0;
        if (input.physician) {
            for (std::size_t kk = 0; kk < C; ++kk) {
                if (mask[i * C + kk]) {
                    total += (*input.physician)(static_cast<Eigen::Index>(i),
                                                static_cast<Eigen::Index>(kept[kk]));
                }
            }
        }
        for (std::size_t kk = 0; kk < C; ++kk) {
            auto ii = static_cast<Eigen::Index>(i);
            auto kki = static_cast<Eigen::Index>(kk);
            if (!mask[i * C + kk]) {
                fit.log_prior_(ii, kki) = kNegInf;
            } else if (input.physician && total > 0.0) {
                double p = (*input.physician)(ii, static_cast<Eigen::Index>(kept[kk])) / total;
                fit.log_prior_(ii, kki) = p > 0.0 ? std::log(p) : kNegInf;
            }
        }
    }

    // Likelihood pieces.
    bool reestimate = false;
    if (config.levels == LevelMode::Reestimate) {
        if (!probs.has_grades()) {
            throw UnsupportedError("level re-estimation needs a graded probability table");
        }
        reestimate = true;
    } else if (config.levels == LevelMode::Auto) {
        reestimate = probs.has_grades();
    }
    const std::size_t S = data.cols();
    std::vector<bool> observed_col(S, false);
    for (std::size_t j = 0; j < S; ++j) {
        for (std::size_t i = 0; i < N && !observed_col[j]; ++i) {
            observed_col[j] = data(i, j) != SymptomValue::Missing;
        }
    }
    InsilicoRunner runner{config, fit};
    runner.N = N;
    runner.C = C;
    runner.G = G;
    runner.reestimate = reestimate;
    if (reestimate) {
        std::map<double, std::string, std::greater<>> level_map;
        for (std::size_t j = 0; j < S; ++j) {
            if (!observed_col[j]) {
                continue;
            }
            for (std::size_t k = 0; k < C; ++k) {
                level_map.emplace(probs(j, k), probs.grade(j, k));
            }
        }
        std::map<std::string, std::size_t> level_index;
        for (const auto &[value, label] : level_map) {
            level_index.emplace(label, fit.level_values_.size());
            fit.level_values_.push_back(value);
            fit.sample_.level_labels.push_back(label);
        }
        const std::size_t L = fit.level_values_.size();
        runner.L = L;
        for (std::size_t l = 0; l < L; ++l) {
            if (fit.level_values_[l] > 0.0 && fit.level_values_[l] < 1.0) {
                runner.free_levels.push_back(l);
            }
        }
        fit.yes_counts_.assign(N * C * L, 0.0f);
        fit.no_counts_.assign(N * C * L, 0.0f);
        for (std::size_t i = 0; i < N; ++i) {
            auto row = data.row(i);
            for (std::size_t j = 0; j < S; ++j) {
                if (row[j] == SymptomValue::Missing) {
                    continue;
                }
                auto &dst = row[j] == SymptomValue::Yes ? fit.yes_counts_ : fit.no_counts_;
                for (std::size_t k = 0; k < C; ++k) {
                    dst[(i * C + k) * L + level_index.at(probs.grade(j, k))] += 1.0f;
                }
            }
        }
    } else {
        fit.fixed_loglik_ = Matrix::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(C));
        parallel_for(N, [&](std::size_t i) {
            auto row = data.row(i);
            for (std::size_t k = 0; k < C; ++k) {
                double s = 0.0;
                for (std::size_t j = 0; j < S; ++j) {
                    if (row[j] == SymptomValue::Yes) {
                        s += std::log(probs(j, k));
                    } else if (row[j] == SymptomValue::No) {
                        s += std::log1p(-probs(j, k));
                    }
                }
                fit.fixed_loglik_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s;
            }
        });
    }

    runner.active.assign(G, {});
    runner.group_size.assign(G, 0);
    for (std::size_t i = 0; i < N; ++i) {
        ++runner.group_size[fit.record_group_[i]];
    }
    for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t k = 0; k < C; ++k) {
            bool any = false;
            for (std::size_t i = 0; i < N && !any; ++i) {
                any = fit.record_group_[i] == g && mask[i * C + k];
            }
            if (any) {
                runner.active[g].push_back(k);
            }
        }
    }

    std::size_t nsim = config.nsim;
    std::size_t burn = config.burn.value_or(nsim / 2);
    int doublings = 0;
    for (;;) {
        auto groups = fit.sample_.groups;
        auto input_causes = input.probs.causes();
        auto causes = fit.sample_.causes;
        auto level_labels = fit.sample_.level_labels;
        PosteriorSample s = runner.run(nsim, burn);
        s.groups = std::move(groups);
        s.input_causes = std::move(input_causes);
        s.causes = std::move(causes);
        s.removed_causes = removed;
        s.level_labels = std::move(level_labels);
        s.doublings = doublings;
        s.convergence = insilico_convergence(s, config.convergence_min_csmf);
        fit.sample_ = std::move(s);
        if (!config.auto_length || fit.sample_.convergence.passed ||
            doublings >= config.max_doublings) {
            break;
        }
        ++doublings;
        nsim *= 2;
        burn = config.burn ? *config.burn * (std::size_t{1} << doublings) : nsim / 2;
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Summaries

IndivProbResult InsilicoFit::indiv_summary(double ci) const {
    if (!(ci > 0.0 && ci < 1.0)) {
        throw ConfigError("credible interval level must lie in (0, 1)");
    }
    const std::size_t N = ids_.size();
    const std::size_t C = sample_.causes.size();
    const std::size_t T = sample_.draws();
    const std::size_t L = level_values_.size();
    if (T == 0) {
        throw ValidationError("posterior sample holds no draws");
    }
    InsilicoConfig dummy;
    InsilicoRunner runner{dummy, *this};
    runner.N = N;
    runner.C = C;
    runner.L = L;
    runner.reestimate = sample_.levels_reestimated;

    // Log-likelihood per draw (levels may change between draws).
    std::vector<Matrix> ll_per_draw;
    if (runner.reestimate) {
        ll_per_draw.resize(T);
        std::vector<double> levels(L);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t l = 0; l < L; ++l) {
                levels[l] = sample_.levels(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(l));
            }
            runner.loglik(levels, ll_per_draw[t]);
        }
    }
    const auto Ni = static_cast<Eigen::Index>(N);
    const auto Ci = static_cast<Eigen::Index>(C);
    IndivQuantiles q{Matrix(Ni, Ci), Matrix(Ni, Ci), Matrix(Ni, Ci), Matrix(Ni, Ci)};
    const double lo_p = (1.0 - ci) / 2.0;
    const double hi_p = 1.0 - lo_p;
    parallel_for(N, [&](std::size_t i) {
        std::size_t g = record_group_[i];
        std::vector<double> log_pi(C);
        std::vector<double> w(C);
        std::vector<std::vector<double>> per_cause(C, std::vector<double>(T));
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t k = 0; k < C; ++k) {
                double p = sample_.pi[g](static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
                log_pi[k] = p > 0.0 ? std::log(p) : kNegInf;
            }
            runner.record_probs(i, log_pi.data(), runner.reestimate ? ll_per_draw[t] : fixed_loglik_, w);
            for (std::size_t k = 0; k < C; ++k) {
                per_cause[k][t] = w[k];
            }
        }
        auto ii = static_cast<Eigen::Index>(i);
        double total = 0.0;
        for (std::size_t k = 0; k < C; ++k) {
            auto &v = per_cause[k];
            auto kk = static_cast<Eigen::Index>(k);
            q.mean(ii, kk) = mean(v);
            total += q.mean(ii, kk);
            std::sort(v.begin(), v.end());
            q.lower(ii, kk) = quantile_sorted(v, lo_p);
            q.median(ii, kk) = quantile_sorted(v, 0.5);
            q.upper(ii, kk) = quantile_sorted(v, hi_p);
        }
        q.mean.row(ii) /= total;
    });
    Matrix point = q.mean;
    return IndivProbResult(ids_, sample_.causes, std::move(point), std::move(q));
}

CSMFEstimate InsilicoFit::csmf(double ci) const {
    if (!(ci > 0.0 && ci < 1.0)) {
        throw ConfigError("credible interval level must lie in (0, 1)");
    }
    const double lo_p = (1.0 - ci) / 2.0;
    const double hi_p = 1.0 - lo_p;
    const std::size_t C = sample_.causes.size();
    std::vector<CsmfSummary> values;
    for (const Matrix &pi : sample_.pi) {
        CsmfSummary s;
        s.sd.emplace();
        s.lower.emplace();
        s.median.emplace();
        s.upper.emplace();
        std::vector<double> v(static_cast<std::size_t>(pi.rows()));
        double total = 0.0;
        for (std::size_t k = 0; k < C; ++k) {
            for (Eigen::Index t = 0; t < pi.rows(); ++t) {
                v[static_cast<std::size_t>(t)] = pi(t, static_cast<Eigen::Index>(k));
            }
            s.mean.push_back(mean(v));
            total += s.mean.back();
            s.sd->push_back(sample_sd(v));
            std::sort(v.begin(), v.end());
            s.lower->push_back(quantile_sorted(v, lo_p));
            s.median->push_back(quantile_sorted(v, 0.5));
            s.upper->push_back(quantile_sorted(v, hi_p));
        }
        for (double &m : s.mean) {
            m /= total;
        }
        values.push_back(std::move(s));
    }
    return CSMFEstimate(sample_.causes, sample_.groups, std::move(values));
}

} // namespace va
