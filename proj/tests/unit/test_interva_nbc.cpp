#include "generators.hpp"

#include "va/error.hpp"
#include "va/interva.hpp"
#include "va/nbc.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace va;
using namespace va::testing;

namespace {

constexpr auto Y = SymptomValue::Yes;
constexpr auto N = SymptomValue::No;
constexpr auto M = SymptomValue::Missing;

CondProbMatrix one_symptom(double p1, double p2) {
    Matrix v(1, 2);
    v << p1, p2;
    return CondProbMatrix({"s"}, {"c1", "c2"}, v, Provenance::Trained);
}

// Cause A: `yes_a` of `n_a` records Yes; cause B: none Yes.
std::pair<SymptomMatrix, std::vector<std::string>> labelled(std::size_t n_a, std::size_t yes_a, std::size_t n_b) {
    std::vector<std::string> ids;
    std::vector<SymptomValue> values;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n_a + n_b; ++i) {
        ids.push_back("r" + std::to_string(i));
        values.push_back(i < yes_a ? Y : N);
        labels.push_back(i < n_a ? "A" : "B");
    }
    return {SymptomMatrix(ids, {"s"}, values), labels};
}

} // namespace

TEST(IntervaPosterior, OneYesSymptom) {
    std::vector<SymptomValue> rec = {Y};
    auto post = interva_posterior(rec, one_symptom(0.8, 0.2), PriorCSMF::uniform(2));
    EXPECT_NEAR(post.probs[0], 0.8, 1e-15);
    EXPECT_NEAR(post.probs[1], 0.2, 1e-15);
    EXPECT_FALSE(post.degenerate);
}

TEST(IntervaPosterior, NoYesGivesPrior) {
    std::mt19937_64 rng(41);
    auto probs = random_probs(rng, names("s", 5), names("c", 4));
    PriorCSMF prior(random_simplex(rng, 4, 0.01));
    std::vector<SymptomValue> rec = {N, M, N, M, M};
    auto post = interva_posterior(rec, probs, prior);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(post.probs[k], prior[k], 1e-15);
    }
}

TEST(IntervaPosterior, ZeroLikelihoodIsDegenerate) {
    std::vector<SymptomValue> rec = {Y};
    auto post = interva_posterior(rec, one_symptom(0.0, 0.0), PriorCSMF({0.3, 0.7}));
    EXPECT_TRUE(post.degenerate);
    EXPECT_DOUBLE_EQ(post.probs[1], 0.7);
}

TEST(IntervaPosterior, PriorScaleAndSymptomOrderInvariant) {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 100; ++t) {
        auto s = names("s", uniform_size(rng, 1, 12));
        auto c = names("c", uniform_size(rng, 2, 6));
        auto probs = random_probs(rng, s, c);
        auto w = random_simplex(rng, c.size(), 0.01);
        auto data = random_symptoms(rng, 1, s);
        auto base = interva_posterior(data.row(0), probs, PriorCSMF(w)).probs;

        auto scaled = w;
        double factor = uniform_real(rng, 0.1, 50.0);
        for (auto &x : scaled) {
            x *= factor;
        }
        auto p2 = interva_posterior(data.row(0), probs, PriorCSMF(scaled)).probs;

        std::vector<std::size_t> perm(s.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        auto p3 = interva_posterior(data.select_columns(perm).row(0), probs.select_symptoms(perm), PriorCSMF(w)).probs;
        for (std::size_t k = 0; k < c.size(); ++k) {
            EXPECT_NEAR(p2[k], base[k], 1e-12);
            EXPECT_NEAR(p3[k], base[k], 1e-12);
        }
    }
}

TEST(IntervaPostprocess, DefaultRule) {
    std::vector<double> d = {0.7, 0.2, 0.05, 0.05};
    // 0.2 is below half of 0.7, so only the top cause survives.
    auto out = interva_postprocess(d, IntervaPostprocessRule{});
    std::vector<double> want = {0.7, 0, 0, 0, 0.3};
    for (std::size_t k = 0; k < want.size(); ++k) {
        EXPECT_NEAR(out[k], want[k], 1e-15);
    }
    auto point = interva_postprocess(std::vector<double>{1, 0, 0, 0}, IntervaPostprocessRule{});
    EXPECT_EQ(point, (std::vector<double>{1, 0, 0, 0, 0}));
}

TEST(IntervaPostprocess, ExamplesUnderFloorOnlyRule) {
    IntervaPostprocessRule rule{0.1, 0.1, 0.0, 3};
    auto out = interva_postprocess(std::vector<double>{0.7, 0.2, 0.05, 0.05}, rule);
    EXPECT_NEAR(out[0], 0.7, 1e-15);
    EXPECT_NEAR(out[1], 0.2, 1e-15);
    EXPECT_EQ(out[2], 0.0);
    EXPECT_EQ(out[3], 0.0);
    EXPECT_NEAR(out[4], 0.1, 1e-15);

    std::vector<double> uniform(34, 1.0 / 34.0);
    auto u = interva_postprocess(uniform, rule);
    EXPECT_NEAR(u.back(), 1.0, 1e-15);
}

TEST(IntervaPostprocess, AtMostThreeAndSumsToOne) {
    std::mt19937_64 rng(43);
    IntervaPostprocessRule rule{0.0, 0.01, 0.1, 3};
    for (int t = 0; t < 500; ++t) {
        auto d = random_simplex(rng, uniform_size(rng, 2, 20));
        auto out = interva_postprocess(d, rule);
        ASSERT_EQ(out.size(), d.size() + 1);
        std::size_t kept = 0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            kept += out[k] > 0;
            EXPECT_TRUE(out[k] == 0.0 || std::abs(out[k] - d[k]) < 1e-15);
        }
        EXPECT_LE(kept, 3u);
        EXPECT_NEAR(std::accumulate(out.begin(), out.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(IntervaCsmf, PointMassesAndSingleRecord) {
    Matrix m(2, 3);
    m << 1, 0, 0, 0, 1, 0;
    auto c = interva_csmf(IndivProbResult({"a", "b"}, {"x", "y", kUndetermined}, m));
    EXPECT_EQ(c.group(0).mean, (std::vector<double>{0.5, 0.5, 0.0}));
    Matrix one(1, 3);
    one << 0.2, 0.3, 0.5;
    auto s = interva_csmf(IndivProbResult({"a"}, {"x", "y", kUndetermined}, one));
    EXPECT_EQ(s.group(0).mean, (std::vector<double>{0.2, 0.3, 0.5}));
    EXPECT_THROW(interva_csmf(IndivProbResult({}, {"x"}, Matrix(0, 1))), ValidationError);
}

TEST(TrainCondprob, FixedModeNearestGrade) {
    auto [data, labels] = labelled(100, 79, 10);
    auto probs = train_condprob(data, labels, GradeTable::defaults(), ConvertType::Fixed);
    EXPECT_EQ(probs.grade(0, 0), "A+");
    EXPECT_EQ(probs(0, 0), 0.8);
    EXPECT_EQ(probs.grade(0, 1), "N");
}

TEST(TrainCondprob, EmpiricalIsIdentity) {
    std::mt19937_64 rng(44);
    auto s = names("s", 8);
    auto train = random_symptoms(rng, 200, s, 0.2, 0.4);
    auto labels = random_labels(rng, 200, names("c", 4));
    auto emp = empirical_condprob(train, labels);
    auto out = train_condprob(train, labels, GradeTable::defaults(), ConvertType::Empirical);
    EXPECT_EQ(out.values(), emp.values());
    // Oracle: direct count.
    for (std::size_t j = 0; j < s.size(); ++j) {
        for (std::size_t k = 0; k < 4; ++k) {
            double yes = 0, seen = 0;
            for (std::size_t i = 0; i < 200; ++i) {
                if (labels[i] != emp.causes()[k] || train(i, j) == M) {
                    continue;
                }
                seen += 1;
                yes += train(i, j) == Y;
            }
            EXPECT_DOUBLE_EQ(emp(j, k), seen > 0 ? yes / seen : 0.0);
        }
    }
}

TEST(TrainCondprob, AllYesGetsHighestGradeAndMissingCauseFails) {
    auto [data, labels] = labelled(5, 5, 5);
    auto fixed = train_condprob(data, labels, GradeTable::defaults(), ConvertType::Fixed);
    EXPECT_EQ(fixed.grade(0, 0), "I");
    std::vector<std::string> order = {"A", "B", "Z"};
    EXPECT_THROW(train_condprob(data, labels, GradeTable::defaults(), ConvertType::Fixed, &order), TrainingError);
}

TEST(TrainCondprob, QuantileModeIsRankMonotone) {
    std::mt19937_64 rng(45);
    auto train = random_symptoms(rng, 300, names("s", 10), 0.1, 0.4);
    auto labels = random_labels(rng, 300, names("c", 5));
    auto emp = empirical_condprob(train, labels);
    auto q = train_condprob(train, labels, GradeTable::defaults(), ConvertType::Quantile);
    for (Eigen::Index a = 0; a < emp.values().size(); ++a) {
        for (Eigen::Index b = 0; b < emp.values().size(); ++b) {
            if (emp.values().data()[a] > emp.values().data()[b]) {
                EXPECT_GE(q.values().data()[a], q.values().data()[b]);
            }
        }
    }
}

TEST(Prevalence, LowHivScalesTaggedCauses) {
    IntervaConfig cfg;
    cfg.hiv = PrevalenceLevel::Low;
    cfg.tags.hiv = {"HIV"};
    auto p = apply_prevalence(PriorCSMF({0.5, 0.5}), {"HIV", "Other"}, cfg);
    EXPECT_NEAR(p[0], 0.05 / 1.05, 1e-15);
    EXPECT_THROW(parse_prevalence("x"), ConfigError);
}

TEST(NbcTrain, SmoothingArithmetic) {
    auto [data, labels] = labelled(10, 7, 10);
    auto m = nbc_train(data, labels, 1.0);
    EXPECT_DOUBLE_EQ(m.probs(0, 0), 8.0 / 12.0);
    EXPECT_DOUBLE_EQ(m.probs(0, 1), 1.0 / 12.0);
    EXPECT_DOUBLE_EQ(m.prior[0], 0.5);
    EXPECT_THROW(nbc_train(data, labels, 0.0), ConfigError);
}

TEST(NbcPosterior, AbsentSymptom) {
    NbcModel m{one_symptom(0.9, 0.5), PriorCSMF::uniform(2), 1.0};
    std::vector<SymptomValue> rec = {N};
    auto p = nbc_posterior(rec, m);
    EXPECT_NEAR(p[0], 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(p[1], 5.0 / 6.0, 1e-15);
    std::vector<SymptomValue> miss = {M};
    EXPECT_EQ(nbc_posterior(miss, m), p);
    auto skip = nbc_posterior(miss, m, NbcMissing::Skip);
    EXPECT_NEAR(skip[0], 0.5, 1e-15);
}

TEST(NbcPosterior, SymmetricModelIsUniform) {
    Matrix v(3, 3);
    v.colwise() = Eigen::Vector3d(0.3, 0.6, 0.9);
    NbcModel m{CondProbMatrix(names("s", 3), names("c", 3), v, Provenance::Trained), PriorCSMF::uniform(3), 1.0};
    std::vector<SymptomValue> rec = {Y, N, M};
    for (double x : nbc_posterior(rec, m)) {
        EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
    }
}

TEST(NbcPosterior, AllYesEqualsInterva) {
    std::mt19937_64 rng(46);
    for (int t = 0; t < 200; ++t) {
        auto s = names("s", uniform_size(rng, 1, 15));
        auto c = names("c", uniform_size(rng, 2, 6));
        auto probs = random_probs(rng, s, c);
        PriorCSMF prior(random_simplex(rng, c.size(), 0.01));
        std::vector<SymptomValue> rec(s.size(), Y);
        auto a = nbc_posterior(rec, NbcModel{probs, prior, 1.0});
        auto b = interva_posterior(rec, probs, prior).probs;
        for (std::size_t k = 0; k < c.size(); ++k) {
            EXPECT_NEAR(a[k], b[k], 1e-12);
        }
    }
}

TEST(NbcPosterior, DominantCauseOnAllYes) {
    auto [data, labels] = labelled(10, 10, 10);
    auto m = nbc_train(data, labels);
    std::vector<SymptomValue> rec = {Y};
    auto p = nbc_posterior(rec, m);
    EXPECT_GT(p[0], p[1]);
}

TEST(NbcPosterior, PermutationInvariantAndFinite) {
    std::mt19937_64 rng(47);
    for (int t = 0; t < 100; ++t) {
        auto s = names("s", uniform_size(rng, 1, 40));
        auto train = random_symptoms(rng, 60, s, 0.3, 0.5);
        auto labels = random_labels(rng, 60, names("c", uniform_size(rng, 2, 6)));
        auto m = nbc_train(train, labels, uniform_real(rng, 0.01, 2.0));
        auto rec = random_symptoms(rng, 1, s);
        auto base = nbc_posterior(rec.row(0), m);
        std::vector<std::size_t> perm(s.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        NbcModel pm{m.probs.select_symptoms(perm), m.prior, m.alpha};
        auto p = nbc_posterior(rec.select_columns(perm).row(0), pm);
        for (std::size_t k = 0; k < base.size(); ++k) {
            EXPECT_TRUE(std::isfinite(base[k]));
            EXPECT_NEAR(p[k], base[k], 1e-12);
        }
    }
}

TEST(NbcCode, CsmfIsRowMean) {
    std::mt19937_64 rng(48);
    auto s = names("s", 6);
    auto train = random_symptoms(rng, 90, s);
    auto m = nbc_train(train, random_labels(rng, 90, names("c", 3)));
    auto data = random_symptoms(rng, 25, s);
    auto fit = nbc_code(data, m);
    for (std::size_t k = 0; k < 3; ++k) {
        double sum = 0;
        for (std::size_t i = 0; i < 25; ++i) {
            sum += fit.indiv.point()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        }
        EXPECT_NEAR(fit.csmf.group(0).mean[k], sum / 25.0, 1e-15);
    }
}
