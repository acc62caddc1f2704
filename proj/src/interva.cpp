#include "va/interva.hpp"
#include "va/csv.hpp"
#include "va/error.hpp"
#include "va/parallel.hpp"
#include "va/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace va {

ConvertType parse_convert_type(std::string_view name) {
    if (name == "quantile") {
        return ConvertType::Quantile;
    }
    if (name == "fixed") {
        return ConvertType::Fixed;
    }
    if (name == "empirical") {
        return ConvertType::Empirical;
    }
    throw ConfigError("unknown convert type '" + std::string(name) +
                      "' (expected quantile, fixed or empirical)");
}

std::vector<std::string> training_causes(const std::vector<std::string> &labels,
                                         const std::vector<std::string> *order) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].empty()) {
            throw TrainingError("training record " + std::to_string(i + 1) + " has no cause label");
        }
    }
    std::set<std::string> present(labels.begin(), labels.end());
    if (!order) {
        if (present.size() < 2) {
            throw TrainingError("training data must cover at least 2 causes");
        }
        return {present.begin(), present.end()};
    }
    for (const auto &c : *order) {
        if (!present.count(c)) {
            throw TrainingError("cause '" + c + "' has no training records");
        }
    }
    std::set<std::string> listed(order->begin(), order->end());
    for (const auto &c : present) {
        if (!listed.count(c)) {
            throw TrainingError("training label '" + c + "' is not in the cause list");
        }
    }
    return *order;
}

namespace {

struct Counts {
    std::vector<std::string> causes;
    Matrix yes;      // S x C
    Matrix observed; // S x C
    std::vector<std::size_t> records; // per cause
};

Counts count_training(const SymptomMatrix &train, const std::vector<std::string> &labels,
                      const std::vector<std::string> *order) {
    if (labels.size() != train.rows()) {
        throw TrainingError("training labels (" + std::to_string(labels.size()) +
                            ") do not match training records (" + std::to_string(train.rows()) +
                            ")");
    }
    Counts c;
    c.causes = training_causes(labels, order);
    const auto S = static_cast<Eigen::Index>(train.cols());
    const auto C = static_cast<Eigen::Index>(c.causes.size());
    c.yes = Matrix::Zero(S, C);
    c.observed = Matrix::Zero(S, C);
    c.records.assign(c.causes.size(), 0);
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < c.causes.size(); ++k) {
        index.emplace(c.causes[k], k);
    }
    for (std::size_t i = 0; i < train.rows(); ++i) {
        auto k = index.at(labels[i]);
        ++c.records[k];
        auto row = train.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] == SymptomValue::Missing) {
                continue;
            }
            c.observed(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) += 1.0;
            if (row[j] == SymptomValue::Yes) {
                c.yes(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) += 1.0;
            }
        }
    }
    return c;
}

} // namespace

CondProbMatrix empirical_condprob(const SymptomMatrix &train, const std::vector<std::string> &labels,
                                  const std::vector<std::string> *cause_order) {
    auto c = count_training(train, labels, cause_order);
    Matrix p = Matrix::Zero(c.yes.rows(), c.yes.cols());
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
        for (Eigen::Index k = 0; k < p.cols(); ++k) {
            if (c.observed(j, k) > 0.0) {
                p(j, k) = c.yes(j, k) / c.observed(j, k);
            }
        }
    }
    return {train.symptoms(), c.causes, std::move(p), Provenance::Trained};
}

std::vector<std::size_t> quantile_grades(const Matrix &values, const GradeTable &grades) {
    const auto n = static_cast<std::size_t>(values.size());
    std::vector<double> cum;
    double total = 0.0;
    for (const auto &g : grades.grades()) {
        total += g.reference_share;
        cum.push_back(total);
    }
    if (!(total > 0.0)) {
        throw ConfigError("quantile conversion needs reference shares in the grade table");
    }
    for (double &c : cum) {
        c /= total;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const double *data = values.data();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return data[a] > data[b]; });
    std::vector<std::size_t> out(n, grades.size() - 1);
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && data[order[end]] == data[order[start]]) {
            ++end;
        }
        // Tied entries share the grade at the midpoint of their rank block.
        double pct = 0.5 * static_cast<double>(start + end) / static_cast<double>(n);
        std::size_t g = 0;
        while (g + 1 < cum.size() && !(pct < cum[g])) {
            ++g;
        }
        for (std::size_t r = start; r < end; ++r) {
            out[order[r]] = g;
        }
        start = end;
    }
    return out;
}

CondProbMatrix train_condprob(const SymptomMatrix &train, const std::vector<std::string> &labels,
                              const GradeTable &grades, ConvertType type,
                              const std::vector<std::string> *cause_order) {
    auto empirical = empirical_condprob(train, labels, cause_order);
    if (type == ConvertType::Empirical) {
        return empirical;
    }
    const Matrix &p = empirical.values();
    std::vector<std::size_t> g;
    if (type == ConvertType::Fixed) {
        g.resize(static_cast<std::size_t>(p.size()));
        for (Eigen::Index idx = 0; idx < p.size(); ++idx) {
            g[static_cast<std::size_t>(idx)] = grades.nearest(p.data()[idx]);
        }
    } else {
        g = quantile_grades(p, grades);
    }
    std::vector<std::string> labels_out;
    labels_out.reserve(g.size());
    for (auto gi : g) {
        labels_out.push_back(grades.grades()[gi].label);
    }
    return CondProbMatrix::from_grades(empirical.symptoms(), empirical.causes(),
                                       std::move(labels_out), grades, Provenance::Converted);
}

PrevalenceLevel parse_prevalence(std::string_view name) {
    if (name == "h") {
        return PrevalenceLevel::High;
    }
    if (name == "l") {
        return PrevalenceLevel::Low;
    }
    if (name == "v") {
        return PrevalenceLevel::VeryLow;
    }
    throw ConfigError("unknown prevalence level '" + std::string(name) + "' (expected h, l or v)");
}

double PrevalenceFactors::factor(PrevalenceLevel level) const noexcept {
    switch (level) {
    case PrevalenceLevel::High:
        return high;
    case PrevalenceLevel::Low:
        return low;
    case PrevalenceLevel::VeryLow:
        return very_low;
    }
    return high;
}

PrevalenceTags PrevalenceTags::from_csv(const std::string &path) {
    Table t = read_csv_file(path);
    auto cc = t.require_column("cause");
    auto tc = t.require_column("tag");
    PrevalenceTags tags;
    for (const auto &row : t.rows) {
        if (row[tc] == "hiv") {
            tags.hiv.push_back(row[cc]);
        } else if (row[tc] == "malaria") {
            tags.malaria.push_back(row[cc]);
        } else {
            throw ConfigError("prevalence tag '" + row[tc] + "' is not hiv or malaria");
        }
    }
    return tags;
}

PriorCSMF apply_prevalence(const PriorCSMF &prior, const std::vector<std::string> &causes,
                           const IntervaConfig &config) {
    std::vector<double> w = prior.weights();
    auto scale = [&](const std::vector<std::string> &names, double f) {
        for (const auto &n : names) {
            auto it = std::find(causes.begin(), causes.end(), n);
            if (it != causes.end()) {
                w[static_cast<std::size_t>(it - causes.begin())] *= f;
            }
        }
    };
    scale(config.tags.hiv, config.factors.factor(config.hiv));
    scale(config.tags.malaria, config.factors.factor(config.malaria));
    return PriorCSMF(std::move(w));
}

PosteriorResult interva_posterior(std::span<const SymptomValue> record, const CondProbMatrix &probs,
                                  const PriorCSMF &prior, std::span<const std::uint8_t> possible) {
    const std::size_t C = probs.num_causes();
    if (record.size() != probs.num_symptoms()) {
        throw AlignmentError("record has " + std::to_string(record.size()) +
                             " symptoms, probability table has " +
                             std::to_string(probs.num_symptoms()));
    }
    if (prior.size() != C) {
        throw ValidationError("prior length does not match the cause count");
    }
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> logw(C);
    for (std::size_t k = 0; k < C; ++k) {
        bool ok = possible.empty() || possible[k] != 0;
        logw[k] = ok && prior[k] > 0.0 ? std::log(prior[k]) : neg_inf;
    }
    for (std::size_t j = 0; j < record.size(); ++j) {
        if (record[j] != SymptomValue::Yes) {
            continue;
        }
        for (std::size_t k = 0; k < C; ++k) {
            logw[k] += std::log(probs(j, k));
        }
    }
    PosteriorResult result;
    if (normalize_log(logw)) {
        result.probs = std::move(logw);
        return result;
    }
    result.degenerate = true;
    std::vector<double> fallback(C);
    double total = 0.0;
    for (std::size_t k = 0; k < C; ++k) {
        bool ok = possible.empty() || possible[k] != 0;
        fallback[k] = ok ? prior[k] : 0.0;
        total += fallback[k];
    }
    if (!(total > 0.0)) {
        fallback = prior.weights();
        total = 1.0;
    }
    for (double &v : fallback) {
        v /= total;
    }
    result.probs = std::move(fallback);
    return result;
}

std::vector<double> interva_postprocess(std::span<const double> dist,
                                        const IntervaPostprocessRule &rule) {
    const std::size_t C = dist.size();
    std::vector<std::size_t> order(C);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
    std::vector<double> out(C + 1, 0.0);
    double previous = 0.0;
    std::size_t kept = 0;
    for (std::size_t r = 0; r < C && kept < rule.max_causes; ++r) {
        double p = dist[order[r]];
        bool keep = r == 0 ? p >= rule.top_floor && p > 0.0
                           : p >= rule.floor && p >= rule.ratio * previous && p > 0.0;
        if (!keep) {
            break;
        }
        out[order[r]] = p;
        previous = p;
        ++kept;
    }
    // Undetermined collects the truncated mass exactly.
    double rest = 0.0;
    for (std::size_t k = 0; k < C; ++k) {
        if (out[k] == 0.0) {
            rest += dist[k];
        }
    }
    out[C] = rest;
    double total = std::accumulate(out.begin(), out.end(), 0.0);
    if (total > 0.0 && std::abs(total - 1.0) > 0.0) {
        for (double &v : out) {
            v /= total;
        }
    }
    return out;
}

CSMFEstimate average_csmf(const IndivProbResult &result) {
    if (result.rows() == 0) {
        throw ValidationError("cannot compute a CSMF from zero records");
    }
    std::vector<double> f(result.cols(), 0.0);
    const Matrix &p = result.point();
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index k = 0; k < p.cols(); ++k) {
            f[static_cast<std::size_t>(k)] += p(i, k);
        }
    }
    double n = static_cast<double>(result.rows());
    double total = 0.0;
    for (double &v : f) {
        v /= n;
        total += v;
    }
    for (double &v : f) {
        v /= total;
    }
    return CSMFEstimate::single(result.causes(), std::move(f));
}

IntervaFit interva_code(const SymptomMatrix &data, const CondProbMatrix &probs,
                        const PriorCSMF &prior, const IntervaConfig &config,
                        const ImpossibilityMask *mask) {
    require_valid(data);
    if (data.rows() == 0) {
        throw ValidationError("no records to code");
    }
    auto aligned = align(data, probs);
    const std::size_t N = data.rows();
    const std::size_t C = probs.num_causes();
    if (mask && !mask->possible.empty() &&
        (mask->causes != C || mask->possible.size() != N * C)) {
        throw ValidationError("impossibility mask does not match data and causes");
    }
    PriorCSMF adjusted = apply_prevalence(prior, probs.causes(), config);

    Matrix raw(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(C));
    Matrix post(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(C + 1));
    std::vector<std::uint8_t> degenerate(N, 0);
    parallel_for(N, [&](std::size_t i) {
        std::span<const std::uint8_t> possible;
        if (mask && !mask->possible.empty()) {
            possible = {mask->possible.data() + i * C, C};
        }
        auto r = interva_posterior(aligned.data.row(i), aligned.probs, adjusted, possible);
        degenerate[i] = r.degenerate ? 1 : 0;
        auto pp = interva_postprocess(r.probs, config.rule);
        for (std::size_t k = 0; k < C; ++k) {
            raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r.probs[k];
        }
        for (std::size_t k = 0; k <= C; ++k) {
            post(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pp[k];
        }
    });

    auto causes = probs.causes();
    auto causes_u = causes;
    causes_u.emplace_back(kUndetermined);
    IntervaFit fit{IndivProbResult(data.ids(), causes, std::move(raw)),
                   IndivProbResult(data.ids(), causes_u, std::move(post)),
                   {},
                   {},
                   {},
                   aligned.dropped_from_data};
    fit.csmf = average_csmf(fit.post);
    fit.csmf_raw = average_csmf(fit.raw);
    for (std::size_t i = 0; i < N; ++i) {
        if (degenerate[i]) {
            fit.degenerate_ids.push_back(data.ids()[i]);
        }
    }
    return fit;
}

CondProbMatrix read_condprob_csv(const std::string &path, const GradeTable &grades) {
    Table t = read_csv_file(path);
    if (t.width() < 3) {
        throw FormatError(path + ": probability table needs a symptom column and at least 2 causes");
    }
    std::vector<std::string> causes(t.header.begin() + 1, t.header.end());
    std::vector<std::string> symptoms;
    const auto S = t.height();
    const auto C = causes.size();
    Matrix values(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(C));
    std::vector<std::string> labels;
    bool all_grades = true;
    for (std::size_t j = 0; j < S; ++j) {
        const auto &row = t.rows[j];
        symptoms.push_back(row[0]);
        for (std::size_t k = 0; k < C; ++k) {
            const auto &cell = row[k + 1];
            double v = 0.0;
            if (auto g = grades.index(cell)) {
                v = grades.grades()[*g].value;
                labels.push_back(cell);
            } else {
                all_grades = false;
                try {
                    std::size_t used = 0;
                    v = std::stod(cell, &used);
                    if (used != cell.size()) {
                        throw std::invalid_argument("trailing");
                    }
                } catch (const std::exception &) {
                    throw FormatError(path + ": cell '" + cell + "' for symptom '" + row[0] +
                                      "' is neither a grade nor a number");
                }
            }
            values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = v;
        }
    }
    std::optional<std::vector<std::string>> grade_labels;
    if (all_grades) {
        grade_labels = std::move(labels);
    }
    return {std::move(symptoms), std::move(causes), std::move(values), Provenance::BuiltIn,
            std::move(grade_labels)};
}

void write_condprob_csv(const std::string &path, const CondProbMatrix &probs) {
    Table t;
    t.header.push_back("symptom");
    t.header.insert(t.header.end(), probs.causes().begin(), probs.causes().end());
    for (std::size_t j = 0; j < probs.num_symptoms(); ++j) {
        std::vector<std::string> row{probs.symptoms()[j]};
        for (std::size_t k = 0; k < probs.num_causes(); ++k) {
            row.push_back(probs.has_grades() ? probs.grade(j, k) : format_double(probs(j, k)));
        }
        t.rows.push_back(std::move(row));
    }
    write_file_atomic(path, to_csv_string(t));
}

PriorCSMF read_prior_csv(const std::string &path, const std::vector<std::string> &causes) {
    Table t = read_csv_file(path);
    auto cc = t.require_column("cause");
    auto pc = t.require_column("prior");
    std::map<std::string, double> m;
    for (const auto &row : t.rows) {
        try {
            m[row[cc]] = std::stod(row[pc]);
        } catch (const std::exception &) {
            throw FormatError(path + ": prior for '" + row[cc] + "' is not numeric");
        }
    }
    std::vector<double> w;
    for (const auto &c : causes) {
        auto it = m.find(c);
        if (it == m.end()) {
            throw ConfigError(path + ": no prior for cause '" + c + "'");
        }
        w.push_back(it->second);
    }
    return PriorCSMF(std::move(w));
}

} // namespace va
