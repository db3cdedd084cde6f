#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stratamix/errors.hpp"
#include "stratamix/mixture.hpp"

using namespace stratamix;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("binomial pmf", "[mixture]") {
    CHECK(binomial_pmf(0, 0, 0.3) == 1.0);
    CHECK_THAT(binomial_pmf(1, 2, 0.5), WithinAbs(0.5, 1e-15));
    CHECK_THAT(binomial_pmf(3, 7, 0.42), WithinRel(oracle::binomial_pmf(3, 7, 0.42), 1e-12));
    CHECK(binomial_pmf(0, 4, 0.0) == 1.0);
    CHECK(binomial_pmf(4, 4, 1.0) == 1.0);
    CHECK(binomial_pmf(1, 4, 0.0) == 0.0);
    CHECK_THROWS_AS(binomial_pmf(3, 2, 0.5), DomainError);
    CHECK_THROWS_AS(binomial_pmf(1, 2, 1.5), DomainError);
    CHECK_THROWS_AS(binomial_pmf(1, 2, -0.1), DomainError);
}

TEST_CASE("poisson pmf", "[mixture]") {
    CHECK(poisson_pmf(0, 0.0) == 1.0);
    CHECK(poisson_pmf(3, 0.0) == 0.0);
    CHECK_THAT(poisson_pmf(0, 2.0), WithinRel(std::exp(-2.0), 1e-14));
    CHECK_THAT(poisson_pmf(4, 1.7), WithinRel(oracle::poisson_pmf(4, 1.7), 1e-12));
    CHECK_THROWS_AS(poisson_pmf(1, -1.0), DomainError);
}

TEST_CASE("component density", "[mixture]") {
    const Scenario pois = PoissonSampleSize{};
    CHECK_THAT(component_density({0, 0}, ThetaPoint::poisson(1, 1), pois), WithinRel(std::exp(-2.0), 1e-14));
    const double v = component_density({1, 2}, ThetaPoint::poisson(0.5, 0.5), pois);
    CHECK_THAT(v, WithinRel(0.25 * std::exp(-1.0), 1e-13));
    CHECK_THAT(v, WithinRel(poisson_pmf(2, 1.0) * binomial_pmf(1, 2, 0.5), 1e-13));
    CHECK_THAT(component_density({0, 0}, ThetaPoint::binomial(0.5, 0.5), BinomialSampleSize{1}),
               WithinAbs(0.5, 1e-15));
}

TEST_CASE("poisson factorization identity on random inputs", "[mixture][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> xi(0.01, 8.0);
    std::uniform_int_distribution<int> kd(0, 25);
    for (int t = 0; t < 500; ++t) {
        const int k = kd(rng);
        const int x = std::uniform_int_distribution<int>(0, k)(rng);
        const double a = xi(rng), b = xi(rng);
        const double lhs = poisson_pmf(x, a) * poisson_pmf(k - x, b);
        const double rhs = poisson_pmf(k, a + b) * binomial_pmf(x, k, a / (a + b));
        CHECK_THAT(lhs, WithinRel(rhs, 1e-12));
    }
}

TEST_CASE("component densities are normalized", "[mixture][property]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const auto tb = ThetaPoint::binomial(u(rng), u(rng));
        const Scenario sb = BinomialSampleSize{1 + t % 6};
        const int kappa = 1 + t % 6;
        double total = 0.0;
        for (int k = 0; k <= kappa; ++k)
            for (int x = 0; x <= k; ++x) total += component_density({x, k}, tb, sb);
        CHECK_THAT(total, WithinAbs(1.0, 1e-12));

        const auto tp = ThetaPoint::poisson(0.01 + 4 * u(rng), 0.01 + 4 * u(rng));
        double mass = 0.0;
        for (int k = 0; k <= 60; ++k)
            for (int x = 0; x <= k; ++x) mass += component_density({x, k}, tp, PoissonSampleSize{});
        CHECK(mass >= 1.0 - 1e-6);
        CHECK(mass <= 1.0 + 1e-12);
    }
}

TEST_CASE("likelihood matrix matches direct evaluation", "[mixture]") {
    const std::vector<Observation> obs{{0, 0}, {1, 2}, {3, 3}, {0, 4}, {1, 2}};
    const auto grid = default_grid(PoissonSampleSize{}, obs, GridSpec{6, 5});
    const auto L = build_likelihood_matrix(obs, grid);
    const auto ref = oracle::likelihood(obs, grid);
    REQUIRE(L.n_rows() == 5);
    REQUIRE(L.n_cols() == 30);
    for (Eigen::Index i = 0; i < L.n_rows(); ++i) {
        CHECK_THAT(L.scaled().row(i).maxCoeff(), WithinAbs(1.0, 1e-15));
        for (Eigen::Index j = 0; j < L.n_cols(); ++j) CHECK_THAT(L.density(i, j), WithinRel(ref(i, j), 1e-12));
    }
    const auto again = build_likelihood_matrix(obs, grid);
    CHECK(again.scaled() == L.scaled());
    CHECK(again.row_scale() == L.row_scale());
}

TEST_CASE("single empty observation on two poisson points", "[mixture]") {
    const std::vector<Observation> obs{{0, 0}};
    const SupportGrid grid(PoissonSampleSize{}, {ThetaPoint::poisson(1, 1), ThetaPoint::poisson(0.5, 2)});
    const auto L = build_likelihood_matrix(obs, grid);
    CHECK_THAT(L.density(0, 0), WithinRel(std::exp(-2.0), 1e-14));
    CHECK_THAT(L.density(0, 1), WithinRel(std::exp(-2.5), 1e-14));
}

TEST_CASE("compressed matrix carries multiplicities", "[mixture]") {
    const std::vector<Observation> obs{{1, 2}, {0, 0}, {1, 2}, {2, 2}, {0, 0}, {0, 0}};
    const auto table = OutcomeTable::tabulate(obs);
    REQUIRE(table.size() == 3);
    CHECK(table.n == 6);
    CHECK(table.outcomes[0] == Observation{0, 0});
    CHECK(table.counts[0] == 3);
    CHECK(table.find({1, 2}).value() == 1);
    CHECK_FALSE(table.find({5, 5}).has_value());
    const auto grid = default_grid(BinomialSampleSize{2}, obs, GridSpec{3, 3});
    const auto L = build_likelihood_matrix(table, grid);
    CHECK(L.total() == 6.0);
    CHECK(L.multiplicity()(0) == 3.0);
}

TEST_CASE("default grids", "[mixture]") {
    const std::vector<Observation> obs{{1, 6}, {0, 2}};
    const auto big = default_grid(BinomialSampleSize{6}, obs, GridSpec{});
    CHECK(big.size() == 1600);
    for (const auto& t : big.points()) {
        CHECK(t.coord1() >= 0.025 - 1e-12);
        CHECK(t.coord2() <= 0.975 + 1e-12);
    }

    GridSpec corner{2, 2, 0.0, 1.0, 0.0, 1.0};
    const auto c = default_grid(BinomialSampleSize{6}, obs, corner);
    REQUIRE(c.size() == 4);
    CHECK_THAT(c[0].coord1(), WithinAbs(0.025, 1e-14));
    CHECK_THAT(c[3].coord2(), WithinAbs(0.975, 1e-14));

    const auto p = default_grid(PoissonSampleSize{}, obs, GridSpec{3, 3});
    REQUIRE(p.size() == 9);
    CHECK_THAT(p[0].coord1(), WithinAbs(0.01, 1e-14));
    CHECK_THAT(p[3].coord1(), WithinAbs(3.005, 1e-12));
    CHECK_THAT(p[8].coord2(), WithinAbs(6.0, 1e-12));

    CHECK_THROWS_AS(default_grid(PoissonSampleSize{}, std::vector<Observation>{}, GridSpec{3, 3}), EmptyData);
}

TEST_CASE("grid range exclusion raises zero likelihood row", "[mixture]") {
    const std::vector<Observation> obs{{1, 2}, {150, 300}};
    const SupportGrid grid(PoissonSampleSize{}, {ThetaPoint::poisson(0.01, 0.01), ThetaPoint::poisson(0.02, 0.01)});
    try {
        build_likelihood_matrix(obs, grid);
        FAIL("expected ZeroLikelihoodRow");
    } catch (const ZeroLikelihoodRow& e) {
        CHECK(e.row() == 1);
    }
}

TEST_CASE("domain validation", "[mixture]") {
    CHECK_THROWS_AS(validate(Observation{3, 2}), DomainError);
    CHECK_THROWS_AS(validate_for(Observation{1, 5}, BinomialSampleSize{4}), DomainError);
    CHECK_THROWS(ThetaPoint::poisson(0, 0));
    CHECK_THROWS(SupportGrid(PoissonSampleSize{}, {ThetaPoint::poisson(1, 1), ThetaPoint::poisson(1, 1)}));
    CHECK_THROWS(SupportGrid(PoissonSampleSize{}, {ThetaPoint::binomial(0.5, 0.5)}));
    CHECK_THROWS(MixingWeights(Eigen::Vector2d(0.7, 0.7)));
    CHECK_THROWS(MixingWeights(Eigen::Vector2d(-0.1, 1.1)));
    const auto w = MixingWeights::from_unnormalized(Eigen::Vector3d(1, 2, 1));
    CHECK_THAT(w[1], WithinAbs(0.5, 1e-15));
}
