#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "stratamix/errors.hpp"
#include "stratamix/estimators.hpp"
#include "stratamix/interval.hpp"
#include "stratamix/simulation.hpp"

using namespace stratamix;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<Observation> sample(const char* preset, std::uint64_t seed, std::size_t n) {
    auto d = draw_dataset(preset_design(preset), seed);
    d.resize(n);
    return d;
}

}  // namespace

TEST_CASE("deviance", "[interval]") {
    const std::vector<Observation> obs{{0, 0}, {0, 0}, {1, 2}, {2, 3}, {1, 2}};
    const auto grid = default_grid(PoissonSampleSize{}, obs, GridSpec{4, 4});
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        const Eigen::VectorXd w = oracle::random_simplex(rng, static_cast<Eigen::Index>(grid.size()));
        CHECK_THAT(deviance(OutcomeTable::tabulate(obs), grid, MixingWeights(w)),
                   WithinRel(oracle::deviance(obs, grid, w), 1e-12));
    }
    const SupportGrid perfect(BinomialSampleSize{1}, {ThetaPoint::binomial(1.0, 0.25)});
    const std::vector<Observation> matched{{1, 1}, {0, 1}, {0, 1}, {0, 1}};
    CHECK_THAT(deviance(OutcomeTable::tabulate(matched), perfect, MixingWeights::uniform(1)), WithinAbs(0.0, 1e-12));
    const SupportGrid one(PoissonSampleSize{}, {ThetaPoint::poisson(1, 1)});
    const std::vector<Observation> single{{1, 2}};
    CHECK_THAT(deviance(OutcomeTable::tabulate(single), one, MixingWeights::uniform(1)), WithinRel(4.0, 1e-12));
}

TEST_CASE("deviance threshold", "[interval]") {
    std::vector<Observation> obs;
    for (int i = 0; i < 100; ++i) obs.push_back({i % 3 == 0 ? 0 : 1, 1 + i % 4});
    const auto table = OutcomeTable::tabulate(obs);
    CiConfig cfg;
    const int m = static_cast<int>(table.size());
    const double chi = deviance_threshold(table, cfg);
    CHECK(chi > m - 1);
    cfg.alpha = 0.5;
    CHECK(deviance_threshold(table, cfg) < chi);
    cfg.mode = ConstraintMode::LogPower;
    cfg.alphaExp = 0.3;
    CHECK_THAT(deviance_threshold(table, cfg), WithinRel(std::pow(std::log(100.0), 1.3), 1e-14));
    CHECK(parse_constraint_mode("chi2") == ConstraintMode::ChiSquare);
    CHECK(parse_constraint_mode("logpower") == ConstraintMode::LogPower);
    CHECK_THROWS(parse_constraint_mode("other"));

    const std::vector<Observation> twoOutcomes{{0, 1}, {1, 1}};
    CiConfig chi2;
    CHECK_THAT(deviance_threshold(OutcomeTable::tabulate(twoOutcomes), chi2), WithinRel(3.841458820694124, 1e-10));
}

TEST_CASE("single grid point", "[interval]") {
    const std::vector<Observation> obs{{1, 1}, {0, 1}, {1, 1}, {0, 1}};
    const SupportGrid one(BinomialSampleSize{1}, {ThetaPoint::binomial(1.0, 0.5)});
    const auto r = ci_bounds(OutcomeTable::tabulate(obs), one, CiConfig{});
    CHECK(r.lower == 0.5);
    CHECK(r.upper == 0.5);
}

TEST_CASE("two-point bounds match a dense scan", "[interval]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    int compared = 0;
    for (int t = 0; t < 8; ++t) {
        const bool poisson = t % 2 == 1;
        const Scenario s = poisson ? Scenario{PoissonSampleSize{}} : Scenario{BinomialSampleSize{2}};
        auto point = [&] { return poisson ? ThetaPoint::poisson(u(rng), u(rng)) : ThetaPoint::binomial(u(rng), u(rng)); };
        const SupportGrid grid(s, {point(), point()});
        std::vector<Observation> obs;
        for (int i = 0; i < 300; ++i) {
            const auto& th = grid[static_cast<std::size_t>(rng() % 2)];
            const int k = poisson ? std::poisson_distribution<int>(th.theta1())(rng)
                                  : std::binomial_distribution<int>(2, th.coord1())(rng);
            obs.push_back({std::binomial_distribution<int>(k, th.theta2())(rng), k});
        }
        CiConfig cfg;
        cfg.alpha = 0.1;
        const auto table = OutcomeTable::tabulate(obs);
        const double c = deviance_threshold(table, cfg);
        std::pair<double, double> scan;
        try {
            scan = oracle::scan_bounds(obs, grid, c);
        } catch (const std::runtime_error&) {
            CHECK_THROWS_AS(ci_bounds(table, grid, cfg), InfeasibleConstraint);
            continue;
        }
        const auto [lo, hi] = scan;
        const auto r = ci_bounds(table, grid, cfg);
        CHECK_THAT(r.lower, WithinAbs(lo, 1e-4));
        CHECK_THAT(r.upper, WithinAbs(hi, 1e-4));
        ++compared;
    }
    CHECK(compared >= 6);
}

TEST_CASE("containment and alpha monotonicity", "[interval][property]") {
    for (int t = 0; t < 6; ++t) {
        const bool poisson = t % 2 == 0;
        const auto obs = sample(poisson ? "t1r1" : "t3r2", static_cast<std::uint64_t>(t), 250);
        const auto grid = default_grid(poisson ? Scenario{PoissonSampleSize{}} : Scenario{BinomialSampleSize{4}}, obs,
                                       GridSpec{});
        const auto table = OutcomeTable::tabulate(obs);
        const auto fit = fit_pipeline(obs, grid);
        const double gmleDev = deviance(table, grid, fit.em.weights);
        double prevLo = 2, prevHi = -1;
        for (double alpha : {0.1, 0.05, 0.01, 0.001}) {
            CiConfig cfg;
            cfg.alpha = alpha;
            if (gmleDev > deviance_threshold(table, cfg)) {
                CHECK_THROWS_AS(ci_bounds(table, grid, cfg, fit.em.weights), InfeasibleConstraint);
                continue;
            }
            const auto r = ci_bounds(table, grid, cfg, fit.em.weights);
            CHECK(r.lower <= fit.report.gmlePlugin);
            CHECK(r.upper >= fit.report.gmlePlugin);
            CHECK(r.lower <= prevLo + 1e-5);
            CHECK(r.upper >= prevHi - 1e-5);
            CHECK(deviance(table, grid, r.lowerWeights) <= r.threshold + 1e-9);
            CHECK(deviance(table, grid, r.upperWeights) <= r.threshold + 1e-9);
            prevLo = r.lower;
            prevHi = r.upper;
        }
    }
}

TEST_CASE("random feasible points do not beat the bounds", "[interval][property]") {
    const auto obs = sample("t1r2", 3, 300);
    const auto grid = default_grid(PoissonSampleSize{}, obs, GridSpec{});
    const auto table = OutcomeTable::tabulate(obs);
    CiConfig cfg;
    const auto r = ci_bounds(table, grid, cfg);
    const Eigen::VectorXd center = r.lowerWeights.values() * 0.5 + r.upperWeights.values() * 0.5;
    const auto th = grid.theta2();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int feasible = 0;
    for (int t = 0; t < 10000; ++t) {
        const Eigen::VectorXd d = oracle::random_simplex(rng, static_cast<Eigen::Index>(grid.size()));
        const double s = std::pow(u(rng), 3);
        const Eigen::VectorXd w = (1 - s) * center + s * d;
        if (oracle::deviance(obs, grid, w) > r.threshold) continue;
        ++feasible;
        const double v = w.dot(th);
        REQUIRE(v >= r.lower - cfg.objectiveTol);
        REQUIRE(v <= r.upper + cfg.objectiveTol);
    }
    CHECK(feasible > 1000);
}

TEST_CASE("infeasible constraint", "[interval]") {
    std::vector<Observation> obs;
    for (int i = 0; i < 200; ++i) obs.push_back({i % 2 == 0 ? 0 : 3, 3});
    const SupportGrid grid(PoissonSampleSize{}, {ThetaPoint::poisson(1.5, 1.5)});
    CHECK_THROWS_AS(ci_bounds(OutcomeTable::tabulate(obs), grid, CiConfig{}), InfeasibleConstraint);
}

TEST_CASE("ci writer", "[interval]") {
    const std::vector<Observation> obs{{1, 2}, {0, 1}, {1, 1}, {0, 0}};
    const auto grid = default_grid(PoissonSampleSize{}, obs, GridSpec{4, 4});
    CiConfig cfg;
    const auto r = ci_bounds(OutcomeTable::tabulate(obs), grid, cfg);
    std::ostringstream os;
    write_ci(os, r, cfg);
    CHECK(os.str().rfind("lower\tupper\talpha\tmode\tdeviance_at_gmle\tgmle_plugin\tthreshold\n", 0) == 0);
    CHECK(os.str().find("\t0.05\tchi2\t") != std::string::npos);
}
