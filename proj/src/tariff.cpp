#include "va/tariff.hpp"
#include "va/error.hpp"
#include "va/interva.hpp"
#include "va/parallel.hpp"
#include "va/stats.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>

namespace va {

Matrix tariff_matrix(const Matrix &counts) {
    Matrix t = Matrix::Zero(counts.rows(), counts.cols());
    std::vector<double> col(static_cast<std::size_t>(counts.rows()));
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
        for (Eigen::Index k = 0; k < counts.rows(); ++k) {
            col[static_cast<std::size_t>(k)] = counts(k, j);
        }
        std::sort(col.begin(), col.end());
        double med = quantile_sorted(col, 0.5);
        double iqr = quantile_sorted(col, 0.75) - quantile_sorted(col, 0.25);
        if (iqr == 0.0) {
            continue;
        }
        for (Eigen::Index k = 0; k < counts.rows(); ++k) {
            t(k, j) = (counts(k, j) - med) / iqr;
        }
    }
    return t;
}

namespace {

double score_against(std::span<const SymptomValue> record, const Matrix &tariff, Eigen::Index k) {
    double s = 0.0;
    for (std::size_t j = 0; j < record.size(); ++j) {
        if (record[j] == SymptomValue::Yes) {
            s += tariff(k, static_cast<Eigen::Index>(j));
        }
    }
    return s;
}

} // namespace

TariffModel tariff_train(const SymptomMatrix &train, const std::vector<std::string> &labels,
                         std::size_t bootstrap, std::uint64_t seed,
                         const std::vector<std::string> *cause_order) {
    if (bootstrap < 1) {
        throw ConfigError("Tariff reference pool size must be at least 1");
    }
    if (labels.size() != train.rows()) {
        throw TrainingError("training labels do not match training records");
    }
    TariffModel m;
    m.symptoms = train.symptoms();
    m.causes = training_causes(labels, cause_order);
    const std::size_t C = m.causes.size();
    const std::size_t S = train.cols();
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < C; ++k) {
        index.emplace(m.causes[k], k);
    }
    std::vector<std::vector<std::size_t>> members(C);
    m.counts = Matrix::Zero(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(S));
    for (std::size_t i = 0; i < train.rows(); ++i) {
        auto k = index.at(labels[i]);
        members[k].push_back(i);
        auto row = train.row(i);
        for (std::size_t j = 0; j < S; ++j) {
            if (row[j] == SymptomValue::Yes) {
                m.counts(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) += 1.0;
            }
        }
    }
    m.tariff = tariff_matrix(m.counts);

    // Uniform-CSMF reference: the same number of draws from every cause, each
    // cause on its own stream so the pools do not depend on thread scheduling.
    m.pools.assign(C, {});
    parallel_for(C, [&](std::size_t k) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        const auto &pool_src = members[k];
        auto &pool = m.pools[k];
        std::uniform_int_distribution<std::size_t> draw(0, pool_src.size() - 1);
        pool.reserve(bootstrap);
        for (std::size_t b = 0; b < bootstrap; ++b) {
            auto pick = pool_src[draw(rng)];
            pool.push_back(score_against(train.row(pick), m.tariff, static_cast<Eigen::Index>(k)));
        }
        std::sort(pool.begin(), pool.end());
    });
    return m;
}

std::vector<double> tariff_score(std::span<const SymptomValue> record, const TariffModel &model) {
    if (record.size() != model.symptoms.size()) {
        throw AlignmentError("record has " + std::to_string(record.size()) +
                             " symptoms, Tariff model has " + std::to_string(model.symptoms.size()));
    }
    std::vector<double> s(model.causes.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        s[k] = score_against(record, model.tariff, static_cast<Eigen::Index>(k));
    }
    return s;
}

std::vector<double> tariff_rank(std::span<const double> scores, const TariffModel &model,
                                std::span<const std::uint8_t> possible) {
    std::vector<double> ranks(scores.size());
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (!possible.empty() && possible[k] == 0) {
            ranks[k] = std::numeric_limits<double>::infinity();
            continue;
        }
        const auto &pool = model.pools[k];
        auto above = pool.end() - std::upper_bound(pool.begin(), pool.end(), scores[k]);
        ranks[k] = (1.0 + static_cast<double>(above)) / static_cast<double>(pool.size());
    }
    return ranks;
}

std::size_t best_rank(std::span<const double> ranks) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < ranks.size(); ++k) {
        if (ranks[k] < ranks[best]) {
            best = k;
        }
    }
    return best;
}

CSMFEstimate tariff_csmf(const std::vector<std::size_t> &top, const std::vector<std::string> &causes) {
    if (top.empty()) {
        throw ValidationError("cannot compute a CSMF from zero records");
    }
    std::vector<double> f(causes.size(), 0.0);
    for (auto k : top) {
        f.at(k) += 1.0;
    }
    for (double &v : f) {
        v /= static_cast<double>(top.size());
    }
    return CSMFEstimate::single(causes, std::move(f));
}

TariffFit tariff_code(const SymptomMatrix &data, const TariffModel &model,
                      const ImpossibilityMask *mask) {
    require_valid(data);
    if (data.rows() == 0) {
        throw ValidationError("no records to code");
    }
    std::vector<std::size_t> cols;
    std::vector<std::size_t> model_cols;
    TariffFit fit;
    for (std::size_t j = 0; j < model.symptoms.size(); ++j) {
        if (auto idx = data.symptom_index(model.symptoms[j])) {
            cols.push_back(*idx);
            model_cols.push_back(j);
        }
    }
    if (cols.empty()) {
        throw AlignmentError("no symptoms shared between the data and the Tariff model");
    }
    {
        std::vector<bool> used(data.cols(), false);
        for (auto c : cols) {
            used[c] = true;
        }
        for (std::size_t j = 0; j < data.cols(); ++j) {
            if (!used[j]) {
                fit.dropped_symptoms.push_back(data.symptoms()[j]);
            }
        }
    }
    // Restrict the tariff matrix to shared symptoms; the reference pools stay
    // as trained.
    TariffModel local = model;
    local.symptoms.clear();
    local.tariff.resize(model.tariff.rows(), static_cast<Eigen::Index>(model_cols.size()));
    for (std::size_t c = 0; c < model_cols.size(); ++c) {
        local.symptoms.push_back(model.symptoms[model_cols[c]]);
        local.tariff.col(static_cast<Eigen::Index>(c)) =
            model.tariff.col(static_cast<Eigen::Index>(model_cols[c]));
    }
    auto sub = data.select_columns(cols);

    const std::size_t N = data.rows();
    const std::size_t C = model.causes.size();
    if (mask && !mask->possible.empty() &&
        (mask->causes != C || mask->possible.size() != N * C)) {
        throw ValidationError("impossibility mask does not match data and causes");
    }
    fit.ids = data.ids();
    fit.causes = model.causes;
    fit.scores.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(C));
    fit.ranks.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(C));
    fit.top.assign(N, 0);
    parallel_for(N, [&](std::size_t i) {
        std::span<const std::uint8_t> possible;
        if (mask && !mask->possible.empty()) {
            possible = {mask->possible.data() + i * C, C};
        }
        auto s = tariff_score(sub.row(i), local);
        auto r = tariff_rank(s, local, possible);
        for (std::size_t k = 0; k < C; ++k) {
            fit.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s[k];
            fit.ranks(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r[k];
        }
        fit.top[i] = best_rank(r);
    });
    fit.csmf = tariff_csmf(fit.top, fit.causes);
    return fit;
}

} // namespace va
