#include "va/stats.hpp"
#include "va/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace va {

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) {
        throw ValidationError("quantile of an empty sample");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("quantile probability outside [0,1]");
    }
    double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    double frac = h - static_cast<double>(lo);
    if (frac == 0.0) {
        return sorted[lo];
    }
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, p);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double mean(std::span<const double> values) {
    if (values.empty()) {
        return 0.0;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
    if (values.size() < 2) {
        return 0.0;
    }
    double m = mean(values);
    double ss = 0.0;
    for (double v : values) {
        ss += (v - m) * (v - m);
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double log_sum_exp(std::span<const double> x) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : x) {
        mx = std::max(mx, v);
    }
    if (!std::isfinite(mx)) {
        return mx;
    }
    double s = 0.0;
    for (double v : x) {
        s += std::exp(v - mx);
    }
    return mx + std::log(s);
}

bool normalize_log(std::span<double> logw) {
    double lse = log_sum_exp(logw);
    if (!std::isfinite(lse)) {
        return false;
    }
    double total = 0.0;
    for (double &v : logw) {
        v = std::exp(v - lse);
        total += v;
    }
    // Second pass removes the residual rounding of exp().
    for (double &v : logw) {
        v /= total;
    }
    return true;
}

} // namespace va
