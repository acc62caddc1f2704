#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace va {

// Linear interpolation between order statistics (R's type 7).
// `sorted` must be ascending and nonempty.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

double mean(std::span<const double> values);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> values);

// log(sum(exp(x))) with the usual max shift; -inf for an all -inf input.
double log_sum_exp(std::span<const double> x);

// Converts log weights into probabilities in place. Returns false when every
// weight is -inf (nothing to normalize).
bool normalize_log(std::span<double> logw);

} // namespace va
