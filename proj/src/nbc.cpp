#include "va/nbc.hpp"
#include "va/error.hpp"
#include "va/interva.hpp"
#include "va/parallel.hpp"
#include "va/stats.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace va {

NbcModel nbc_train(const SymptomMatrix &train, const std::vector<std::string> &labels, double alpha,
                   const std::vector<std::string> *cause_order) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("NBC smoothing pseudo-count must be positive");
    }
    if (labels.size() != train.rows()) {
        throw TrainingError("training labels do not match training records");
    }
    auto causes = training_causes(labels, cause_order);
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < causes.size(); ++k) {
        index.emplace(causes[k], k);
    }
    const auto S = static_cast<Eigen::Index>(train.cols());
    const auto C = static_cast<Eigen::Index>(causes.size());
    Matrix yes = Matrix::Zero(S, C);
    Matrix observed = Matrix::Zero(S, C);
    std::vector<double> n(causes.size(), 0.0);
    for (std::size_t i = 0; i < train.rows(); ++i) {
        auto k = static_cast<Eigen::Index>(index.at(labels[i]));
        n[static_cast<std::size_t>(k)] += 1.0;
        auto row = train.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            auto jj = static_cast<Eigen::Index>(j);
            if (row[j] != SymptomValue::Missing) {
                observed(jj, k) += 1.0;
                if (row[j] == SymptomValue::Yes) {
                    yes(jj, k) += 1.0;
                }
            }
        }
    }
    Matrix p = (yes.array() + alpha) / (observed.array() + 2.0 * alpha);
    std::vector<double> prior(causes.size());
    double total = static_cast<double>(train.rows()) + alpha * static_cast<double>(causes.size());
    for (std::size_t k = 0; k < causes.size(); ++k) {
        prior[k] = (n[k] + alpha) / total;
    }
    return {CondProbMatrix(train.symptoms(), causes, std::move(p), Provenance::Trained),
            PriorCSMF(std::move(prior)), alpha};
}

std::vector<double> nbc_posterior(std::span<const SymptomValue> record, const NbcModel &model,
                                  NbcMissing missing, std::span<const std::uint8_t> possible) {
    const auto &probs = model.probs;
    const std::size_t C = probs.num_causes();
    if (record.size() != probs.num_symptoms()) {
        throw AlignmentError("record has " + std::to_string(record.size()) +
                             " symptoms, model has " + std::to_string(probs.num_symptoms()));
    }
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> logw(C);
    for (std::size_t k = 0; k < C; ++k) {
        bool ok = possible.empty() || possible[k] != 0;
        logw[k] = ok && model.prior[k] > 0.0 ? std::log(model.prior[k]) : neg_inf;
    }
    for (std::size_t j = 0; j < record.size(); ++j) {
        auto v = record[j];
        if (v == SymptomValue::Missing && missing == NbcMissing::Skip) {
            continue;
        }
        for (std::size_t k = 0; k < C; ++k) {
            double p = probs(j, k);
            logw[k] += v == SymptomValue::Yes ? std::log(p) : std::log1p(-p);
        }
    }
    if (!normalize_log(logw)) {
        throw ValidationError("NBC posterior has no possible cause");
    }
    return logw;
}

NbcFit nbc_code(const SymptomMatrix &data, const NbcModel &model, const NbcOptions &options,
                const ImpossibilityMask *mask) {
    require_valid(data);
    if (data.rows() == 0) {
        throw ValidationError("no records to code");
    }
    auto aligned = align(data, model.probs);
    NbcModel used{aligned.probs, options.uniform_prior ? PriorCSMF::uniform(model.prior.size())
                                                       : model.prior,
                  model.alpha};
    const std::size_t N = data.rows();
    const std::size_t C = model.probs.num_causes();
    if (mask && !mask->possible.empty() &&
        (mask->causes != C || mask->possible.size() != N * C)) {
        throw ValidationError("impossibility mask does not match data and causes");
    }
    Matrix p(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(C));
    parallel_for(N, [&](std::size_t i) {
        std::span<const std::uint8_t> possible;
        if (mask && !mask->possible.empty()) {
            possible = {mask->possible.data() + i * C, C};
        }
        auto post = nbc_posterior(aligned.data.row(i), used, options.missing, possible);
        for (std::size_t k = 0; k < C; ++k) {
            p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = post[k];
        }
    });
    NbcFit fit{IndivProbResult(data.ids(), model.probs.causes(), std::move(p)), {},
               aligned.dropped_from_data};
    fit.csmf = average_csmf(fit.indiv);
    return fit;
}

} // namespace va
