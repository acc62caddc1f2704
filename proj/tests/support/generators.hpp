#pragma once

// Random instance generators shared by the unit and acceptance tests.

#include "va/consistency.hpp"
#include "va/core.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace va::testing {

inline std::vector<std::string> names(const std::string &prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(prefix + std::to_string(i + 1));
    }
    return out;
}

inline std::size_t uniform_size(std::mt19937_64 &rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform_real(std::mt19937_64 &rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Each cell is Missing with probability `missing`, else Yes with probability `yes`.
inline SymptomMatrix random_symptoms(std::mt19937_64 &rng, std::size_t n, const std::vector<std::string> &symptoms,
                                 double missing = 0.2, double yes = 0.3, const std::string &id_prefix = "r") {
    std::vector<SymptomValue> values;
    for (std::size_t i = 0; i < n * symptoms.size(); ++i) {
        double u = uniform_real(rng);
        if (u < missing) {
            values.push_back(SymptomValue::Missing);
        } else {
            values.push_back(uniform_real(rng) < yes ? SymptomValue::Yes : SymptomValue::No);
        }
    }
    return {names(id_prefix, n), symptoms, std::move(values)};
}

// Grade-labelled table drawing each cell uniformly from `labels`.
inline CondProbMatrix random_graded_probs(std::mt19937_64 &rng, const std::vector<std::string> &symptoms,
                                          const std::vector<std::string> &causes,
                                          const std::vector<std::string> &labels) {
    std::vector<std::string> cells;
    for (std::size_t i = 0; i < symptoms.size() * causes.size(); ++i) {
        cells.push_back(labels[uniform_size(rng, 0, labels.size() - 1)]);
    }
    return CondProbMatrix::from_grades(symptoms, causes, cells, GradeTable::defaults(), Provenance::BuiltIn);
}

// Numeric table with entries in [lo, hi].
inline CondProbMatrix random_probs(std::mt19937_64 &rng, const std::vector<std::string> &symptoms,
                                   const std::vector<std::string> &causes, double lo = 0.001,
                                   double hi = 0.999) {
    Matrix m(static_cast<Eigen::Index>(symptoms.size()), static_cast<Eigen::Index>(causes.size()));
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            m(j, k) = uniform_real(rng, lo, hi);
        }
    }
    return {symptoms, causes, std::move(m), Provenance::Trained};
}

inline std::vector<double> random_simplex(std::mt19937_64 &rng, std::size_t n, double floor = 0.0) {
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::vector<double> v(n);
    double total = 0.0;
    for (auto &x : v) {
        x = gamma(rng) + floor;
        total += x;
    }
    for (auto &x : v) {
        x /= total;
    }
    return v;
}

// Labels covering every cause at least once.
inline std::vector<std::string> random_labels(std::mt19937_64 &rng, std::size_t n,
                                              const std::vector<std::string> &causes) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(i < causes.size() ? causes[i] : causes[uniform_size(rng, 0, causes.size() - 1)]);
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

// Random notask/anc hierarchy over `symptoms` with depth at most 2. A symptom
// is never the target of both a notask rule and an anc implication.
inline SymptomHierarchy random_hierarchy(std::mt19937_64 &rng, const std::vector<std::string> &symptoms,
                                         std::size_t max_rules = 6,
                                         std::vector<std::string> neonate_only = {}) {
    for (;;) {
        std::vector<HierarchyRule> rules;
        std::vector<int> role(symptoms.size(), 0); // 1 = notask target, 2 = anc target
        std::size_t n = uniform_size(rng, 0, max_rules);
        for (std::size_t r = 0; r < n; ++r) {
            std::size_t a = uniform_size(rng, 0, symptoms.size() - 1);
            std::size_t b = uniform_size(rng, 0, symptoms.size() - 1);
            if (a == b) {
                continue;
            }
            HierarchyRule rule;
            rule.symptom = symptoms[a];
            rule.higher = symptoms[b];
            if (uniform_real(rng) < 0.5) {
                if (role[a] == 2) {
                    continue;
                }
                role[a] = 1;
                rule.relation = Relation::NotAsk;
                rule.trigger = SymptomValue::Yes;
            } else {
                if (role[b] == 1) {
                    continue;
                }
                role[b] = 2;
                rule.relation = Relation::Ancestor;
                rule.implied = SymptomValue::Yes;
            }
            rules.push_back(rule);
        }
        try {
            SymptomHierarchy h(rules, neonate_only);
            h.validate(symptoms);
            return h;
        } catch (const std::exception &) {
            continue;
        }
    }
}

} // namespace va::testing
