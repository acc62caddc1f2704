#include "va/metrics.hpp"
#include "va/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace va {

CSMFEstimate get_csmf(const CodingResult &result, bool include_undetermined) {
    const auto &causes = result.csmf.causes();
    auto it = std::find(causes.begin(), causes.end(), kUndetermined);
    if (include_undetermined || it == causes.end()) {
        return result.csmf;
    }
    auto u = static_cast<std::size_t>(it - causes.begin());
    std::vector<std::string> kept;
    for (std::size_t k = 0; k < causes.size(); ++k) {
        if (k != u) {
            kept.push_back(causes[k]);
        }
    }
    std::vector<CsmfSummary> values;
    for (const auto &v : result.csmf.values()) {
        CsmfSummary s;
        double total = 0.0;
        for (std::size_t k = 0; k < causes.size(); ++k) {
            if (k != u) {
                s.mean.push_back(v.mean[k]);
                total += v.mean[k];
            }
        }
        if (total > 0.0) {
            for (double &m : s.mean) {
                m /= total;
            }
        } else {
            std::fill(s.mean.begin(), s.mean.end(), 1.0 / static_cast<double>(s.mean.size()));
        }
        values.push_back(std::move(s));
    }
    return CSMFEstimate(std::move(kept), result.csmf.groups(), std::move(values));
}

double csmf_accuracy(std::span<const double> est, std::span<const double> truth) {
    if (est.size() != truth.size() || est.empty()) {
        throw ValidationError("CSMF vectors differ in length");
    }
    double total = std::accumulate(truth.begin(), truth.end(), 0.0);
    if (std::abs(total - 1.0) > kSumTolerance) {
        throw ValidationError("true CSMF sums to " + format_double(total) + ", not 1");
    }
    double err = 0.0;
    for (std::size_t k = 0; k < est.size(); ++k) {
        err += std::abs(est[k] - truth[k]);
    }
    double denom = 2.0 * (1.0 - *std::min_element(truth.begin(), truth.end()));
    if (err == 0.0) {
        return 1.0;
    }
    if (!(denom > 0.0)) {
        return 0.0;
    }
    return std::clamp(1.0 - err / denom, 0.0, 1.0);
}

double csmf_accuracy(const std::vector<std::string> &est_causes, std::span<const double> est,
                     const std::vector<std::string> &truth_causes, std::span<const double> truth,
                     const std::optional<std::string> &undetermined, UndeterminedMode mode) {
    if (est_causes.size() != est.size() || truth_causes.size() != truth.size()) {
        throw ValidationError("CSMF vector and cause list differ in length");
    }
    std::map<std::string, double> e;
    double undet = 0.0;
    for (std::size_t k = 0; k < est.size(); ++k) {
        if (undetermined && est_causes[k] == *undetermined) {
            undet += est[k];
        } else {
            e[est_causes[k]] = est[k];
        }
    }
    std::set<std::string> truth_set(truth_causes.begin(), truth_causes.end());
    std::vector<std::string> missing;
    for (const auto &c : truth_causes) {
        if (!e.count(c)) {
            missing.push_back(c);
        }
    }
    std::vector<std::string> extra;
    for (const auto &[c, v] : e) {
        if (!truth_set.count(c)) {
            extra.push_back(c);
        }
    }
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "estimated and true CSMFs cover different causes";
        if (!missing.empty()) {
            msg += "; not estimated: " + missing.front() +
                   (missing.size() > 1 ? " (+" + std::to_string(missing.size() - 1) + " more)" : "");
        }
        if (!extra.empty()) {
            msg += "; not in truth: " + extra.front() +
                   (extra.size() > 1 ? " (+" + std::to_string(extra.size() - 1) + " more)" : "");
        }
        throw ValidationError(msg);
    }
    std::vector<double> aligned;
    for (const auto &c : truth_causes) {
        aligned.push_back(e[c]);
    }
    if (undet > 0.0) {
        if (mode == UndeterminedMode::Renormalize) {
            double total = std::accumulate(aligned.begin(), aligned.end(), 0.0);
            if (total > 0.0) {
                for (double &v : aligned) {
                    v /= total;
                }
            } else {
                std::fill(aligned.begin(), aligned.end(), 1.0 / static_cast<double>(aligned.size()));
            }
        } else {
            for (double &v : aligned) {
                v += undet / static_cast<double>(aligned.size());
            }
        }
    }
    return csmf_accuracy(aligned, truth);
}

std::vector<double> truth_csmf(const std::vector<std::string> &labels,
                               const std::vector<std::string> &causes) {
    if (labels.empty()) {
        throw ValidationError("no labels to compute the true CSMF from");
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < causes.size(); ++k) {
        index.emplace(causes[k], k);
    }
    std::vector<double> counts(causes.size(), 0.0);
    for (const auto &l : labels) {
        auto it = index.find(l);
        if (it == index.end()) {
            throw ValidationError("true cause '" + l + "' is not in the estimated cause list");
        }
        counts[it->second] += 1.0;
    }
    for (double &c : counts) {
        c /= static_cast<double>(labels.size());
    }
    return counts;
}

std::vector<TopCod> get_top_cod(const CodingResult &result) {
    std::vector<TopCod> out;
    if (result.model == ModelKind::Tariff) {
        const Matrix &ranks = *result.ranks;
        for (std::size_t i = 0; i < result.ids.size(); ++i) {
            std::vector<double> row(ranks.row(static_cast<Eigen::Index>(i)).begin(),
                                    ranks.row(static_cast<Eigen::Index>(i)).end());
            auto k = best_rank(row);
            out.push_back({result.ids[i], result.causes[k], row[k]});
        }
        return out;
    }
    const auto &indiv = *result.indiv;
    for (std::size_t i = 0; i < indiv.rows(); ++i) {
        auto k = indiv.ranking(i).front();
        out.push_back({indiv.ids()[i], indiv.causes()[k],
                       indiv.point()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))});
    }
    return out;
}

Table top_cod_table(const std::vector<TopCod> &top, bool ranks) {
    Table t;
    t.header = {"ID", "cause", ranks ? "rank" : "probability"};
    for (const auto &r : top) {
        t.rows.push_back({r.id, r.cause, format_double(r.score)});
    }
    return t;
}

IndivProbResult get_indiv_prob(const CodingResult &result) {
    if (result.model == ModelKind::Tariff || !result.indiv) {
        throw UnsupportedError("Tariff does not provide individual cause distributions");
    }
    return *result.indiv;
}

// ---------------------------------------------------------------------------
// Grouping

CauseGrouping CauseGrouping::from_table(const Table &table) {
    auto c = table.require_column("cause");
    auto g = table.require_column("group");
    CauseGrouping out;
    std::set<std::string> seen;
    for (const auto &row : table.rows) {
        if (!seen.insert(row[c]).second) {
            throw ConfigError("cause '" + row[c] + "' appears twice in the grouping");
        }
        out.causes.push_back(row[c]);
        out.groups.push_back(row[g]);
    }
    return out;
}

CauseGrouping CauseGrouping::from_csv(const std::string &path) {
    return from_table(read_csv_file(path));
}

CauseGrouping CauseGrouping::with_undetermined() const {
    CauseGrouping out = *this;
    if (std::find(causes.begin(), causes.end(), kUndetermined) == causes.end()) {
        out.causes.emplace_back(kUndetermined);
        out.groups.emplace_back(kUndetermined);
    }
    return out;
}

std::vector<std::string> CauseGrouping::labels() const {
    std::vector<std::string> out;
    for (const auto &g : groups) {
        if (std::find(out.begin(), out.end(), g) == out.end()) {
            out.push_back(g);
        }
    }
    return out;
}

CSMFEstimate aggregate_csmf(const CSMFEstimate &csmf, const CauseGrouping &grouping,
                            const std::vector<std::string> &order) {
    std::map<std::string, std::string> group_of;
    for (std::size_t i = 0; i < grouping.causes.size(); ++i) {
        group_of.emplace(grouping.causes[i], grouping.groups[i]);
    }
    std::vector<std::string> labels;
    for (const auto &o : order) {
        if (std::find(grouping.groups.begin(), grouping.groups.end(), o) == grouping.groups.end()) {
            throw ConfigError("ordered group '" + o + "' is not in the grouping");
        }
        if (std::find(labels.begin(), labels.end(), o) == labels.end()) {
            labels.push_back(o);
        }
    }
    std::vector<std::size_t> target(csmf.causes().size());
    for (std::size_t k = 0; k < csmf.causes().size(); ++k) {
        auto it = group_of.find(csmf.causes()[k]);
        if (it == group_of.end()) {
            throw ConfigError("cause '" + csmf.causes()[k] + "' is not covered by the grouping");
        }
        auto pos = std::find(labels.begin(), labels.end(), it->second);
        if (pos == labels.end()) {
            labels.push_back(it->second);
            pos = labels.end() - 1;
        }
        target[k] = static_cast<std::size_t>(pos - labels.begin());
    }
    std::vector<CsmfSummary> values;
    for (const auto &v : csmf.values()) {
        CsmfSummary s;
        s.mean.assign(labels.size(), 0.0);
        for (std::size_t k = 0; k < v.mean.size(); ++k) {
            s.mean[target[k]] += v.mean[k];
        }
        values.push_back(std::move(s));
    }
    return CSMFEstimate(std::move(labels), csmf.groups(), std::move(values));
}

} // namespace va
