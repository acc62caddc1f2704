#include "generators.hpp"

#include "va/csv.hpp"
#include "va/error.hpp"
#include "va/insilico.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace va;
using namespace va::testing;

namespace {

InsilicoConfig short_chain(std::uint64_t seed = 3) {
    InsilicoConfig c;
    c.nsim = 1000;
    c.thin = 5;
    c.seed = seed;
    return c;
}

InsilicoInput graded_input(std::mt19937_64 &rng, std::size_t n, std::size_t causes) {
    auto s = names("s", 10);
    InsilicoInput in;
    in.probs = random_graded_probs(rng, s, names("c", causes), {"A+", "A", "B", "C", "D"});
    in.data = random_symptoms(rng, n, s, 0.1, 0.3);
    return in;
}

double column_mean(const Matrix &m, Eigen::Index k) { return m.col(k).mean(); }

} // namespace

TEST(Insilico, DrawsAreSimplexAndCountMatchesThinning) {
    std::mt19937_64 rng(61);
    auto fit = insilico_fit(graded_input(rng, 60, 4), short_chain());
    const auto &s = fit.sample();
    EXPECT_EQ(s.draws(), (1000u - 500u) / 5u);
    for (Eigen::Index t = 0; t < s.pi[0].rows(); ++t) {
        EXPECT_NEAR(s.pi[0].row(t).sum(), 1.0, 1e-12);
    }
}

TEST(Insilico, MaskedCauseHasZeroDraws) {
    std::mt19937_64 rng(62);
    auto in = graded_input(rng, 40, 4);
    in.mask.causes = 4;
    in.mask.possible.assign(40 * 4, 1);
    for (std::size_t i = 0; i < 40; ++i) {
        in.mask.possible[i * 4 + 2] = 0;
    }
    auto fit = insilico_fit(in, short_chain());
    EXPECT_TRUE((fit.sample().pi[0].col(2).array() == 0.0).all());
    auto indiv = fit.indiv_summary(0.95);
    EXPECT_TRUE((indiv.point().col(2).array() == 0.0).all());
    EXPECT_TRUE((indiv.quantiles()->upper.col(2).array() == 0.0).all());
}

TEST(Insilico, IntervalsNestAndOrder) {
    std::mt19937_64 rng(63);
    auto fit = insilico_fit(graded_input(rng, 30, 3), short_chain());
    auto wide = fit.indiv_summary(0.95);
    auto narrow = fit.indiv_summary(0.5);
    const auto &w = *wide.quantiles();
    const auto &n = *narrow.quantiles();
    EXPECT_TRUE((w.lower.array() <= w.median.array() + 1e-15).all());
    EXPECT_TRUE((w.median.array() <= w.upper.array() + 1e-15).all());
    EXPECT_TRUE((w.lower.array() <= n.lower.array() + 1e-15).all());
    EXPECT_TRUE((n.upper.array() <= w.upper.array() + 1e-15).all());
    EXPECT_THROW(fit.indiv_summary(1.0), ConfigError);

    auto c = fit.csmf(0.95);
    const auto &g = c.group(0);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_LE((*g.lower)[k], (*g.median)[k]);
        EXPECT_LE((*g.median)[k], (*g.upper)[k]);
    }
}

TEST(Insilico, FixedSeedIsBitIdentical) {
    std::mt19937_64 rng(64);
    auto in = graded_input(rng, 50, 4);
    auto a = insilico_fit(in, short_chain(9));
    auto b = insilico_fit(in, short_chain(9));
    EXPECT_EQ(a.sample().pi[0], b.sample().pi[0]);
    EXPECT_EQ(a.sample().levels, b.sample().levels);
}

TEST(Insilico, AllMissingRecordsRecoverFlatPrior) {
    auto s = names("s", 5);
    std::mt19937_64 rng(65);
    InsilicoInput in;
    in.probs = random_graded_probs(rng, s, names("c", 3), {"A", "B", "C"});
    in.data = SymptomMatrix(names("r", 200), s, std::vector<SymptomValue>(200 * 5, SymptomValue::Missing));
    // A concentrated sigma^2 hyperprior (mean about 0.01); under the diffuse default the
    // prior itself favours near-vertex CSMFs and the chain need not concentrate.
    auto cfg = short_chain();
    cfg.nsim = 4000;
    cfg.thin = 10;
    cfg.sigma_shape = 100.0;
    cfg.sigma_scale = 1.0;
    for (std::uint64_t seed : {1, 2, 3}) {
        cfg.seed = seed;
        auto fit = insilico_fit(in, cfg);
        // Softmax of an exchangeable prior has a uniform mean.
        for (Eigen::Index k = 0; k < 3; ++k) {
            EXPECT_NEAR(column_mean(fit.sample().pi[0], k), 1.0 / 3.0, 0.1) << "seed " << seed;
        }
    }
}

TEST(Insilico, IdenticalGroupsAgree) {
    std::mt19937_64 rng(66);
    auto in = graded_input(rng, 200, 3);
    auto doubled = in.data.values();
    doubled.insert(doubled.end(), in.data.values().begin(), in.data.values().end());
    auto ids = names("a", 200);
    auto more = names("b", 200);
    ids.insert(ids.end(), more.begin(), more.end());
    in.data = SymptomMatrix(ids, in.data.symptoms(), doubled);
    in.groups.assign(200, "g1");
    in.groups.resize(400, "g2");
    auto cfg = short_chain();
    cfg.nsim = 4000;
    cfg.thin = 10;
    auto fit = insilico_fit(in, cfg);
    ASSERT_EQ(fit.sample().groups.size(), 2u);
    for (Eigen::Index k = 0; k < 3; ++k) {
        EXPECT_NEAR(column_mean(fit.sample().pi[0], k), column_mean(fit.sample().pi[1], k), 0.08);
    }
}

TEST(Insilico, DeclaredEmptyGroupFails) {
    std::mt19937_64 rng(67);
    auto in = graded_input(rng, 10, 3);
    in.groups.assign(10, "Men 60+");
    in.declared_groups = {"Men 60+", "Women 60-"};
    try {
        insilico_fit(in, short_chain());
        FAIL() << "expected an empty-group error";
    } catch (const ValidationError &e) {
        EXPECT_NE(std::string(e.what()).find("Women 60-"), std::string::npos);
    }
}

TEST(Insilico, ReestimateNeedsGrades) {
    std::mt19937_64 rng(68);
    InsilicoInput in;
    in.probs = random_probs(rng, names("s", 4), names("c", 3));
    in.data = random_symptoms(rng, 10, names("s", 4));
    auto cfg = short_chain();
    cfg.levels = LevelMode::Reestimate;
    EXPECT_THROW(insilico_fit(in, cfg), UnsupportedError);
    cfg.levels = LevelMode::Auto;
    EXPECT_FALSE(insilico_fit(in, cfg).sample().levels_reestimated);
}

TEST(InsilicoConfig, Validation) {
    InsilicoConfig c;
    EXPECT_NO_THROW(validate(c));
    c.burn = c.nsim;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.thin = 0;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.indiv_ci = 1.5;
    EXPECT_THROW(validate(c), ConfigError);
    c = {};
    c.nsim = 100;
    c.thin = 60;
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(SubpopLabels, JoinWithSpace) {
    auto t = read_csv("sex,age\nMen,60+\nWomen,60-\n");
    EXPECT_EQ(subpop_labels(t, {"sex", "age"}), (std::vector<std::string>{"Men 60+", "Women 60-"}));
    EXPECT_THROW(subpop_labels(t, {"site"}), SchemaError);
}

TEST(Convergence, StationaryChainsPass) {
    std::mt19937_64 rng(69);
    std::normal_distribution<double> z;
    std::vector<double> iid(500);
    for (auto &x : iid) {
        x = z(rng);
    }
    auto r = heidelberger_welch(iid);
    EXPECT_TRUE(r.conclusive);
    EXPECT_TRUE(r.passed);
    std::vector<double> flat(500, 0.25);
    EXPECT_TRUE(heidelberger_welch(flat).passed);
}

TEST(Convergence, TrendFails) {
    std::mt19937_64 rng(70);
    std::normal_distribution<double> z(0.0, 0.1);
    std::vector<double> trend(500);
    for (std::size_t t = 0; t < trend.size(); ++t) {
        trend[t] = 0.01 * static_cast<double>(t) + z(rng);
    }
    auto r = heidelberger_welch(trend);
    EXPECT_TRUE(r.conclusive);
    EXPECT_FALSE(r.passed);
}

TEST(Convergence, ShortChainInconclusive) {
    std::vector<double> x(20, 1.0);
    EXPECT_FALSE(heidelberger_welch(x).conclusive);
}

TEST(Convergence, Spectrum0OfWhiteNoise) {
    std::mt19937_64 rng(71);
    std::normal_distribution<double> z;
    std::vector<double> x(20000);
    for (auto &v : x) {
        v = z(rng);
    }
    EXPECT_NEAR(spectrum0_ar(x), 1.0, 0.1);
}
