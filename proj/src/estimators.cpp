#include "stratamix/estimators.hpp"

#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>

#include "stratamix/errors.hpp"

namespace stratamix {

namespace {

void check_weights(const SupportGrid& grid, const MixingWeights& w) {
    if (w.size() != grid.size()) throw DomainError("mixing weights do not match the grid size");
}

double eta_theta2(const ThetaPoint& t) { return t.theta2(); }

}  // namespace

double naive_estimator(std::span<const Observation> obs) {
    double sum = 0.0;
    long m = 0;
    for (const auto& y : obs) {
        validate(y);
        if (y.k > 0) {
            sum += static_cast<double>(y.x) / y.k;
            ++m;
        }
    }
    if (m == 0) throw AllStrataEmpty("naive estimator undefined: every stratum has k = 0");
    return sum / static_cast<double>(m);
}

double extreme_collapse(std::span<const Observation> obs) {
    long sx = 0, sk = 0;
    for (const auto& y : obs) {
        validate(y);
        sx += y.x;
        sk += y.k;
    }
    if (sk == 0) throw AllStrataEmpty("extreme-collapse estimator undefined: sum of k is 0");
    return static_cast<double>(sx) / static_cast<double>(sk);
}

double gmle_plugin(const SupportGrid& grid, const MixingWeights& w) {
    check_weights(grid, w);
    return w.values().dot(grid.theta2());
}

double gmle_plugin(const SupportGrid& grid, const MixingWeights& w, const Functional& eta) {
    check_weights(grid, w);
    double s = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) s += w[j] * eta(grid[j]);
    return s;
}

double posterior_mean(const Observation& y, const SupportGrid& grid, const MixingWeights& w,
                      std::span<const double> likelihoodRow, const Functional& eta) {
    check_weights(grid, w);
    if (likelihoodRow.size() != grid.size())
        throw DomainError("likelihood row does not match the grid size");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double lw = likelihoodRow[j] * w[j];
        den += lw;
        num += lw * eta(grid[j]);
    }
    if (!(den > 0.0))
        throw NumericalUnderflow("mixture density of (x=" + std::to_string(y.x) + ", k=" +
                                 std::to_string(y.k) + ") is zero");
    return num / den;
}

double posterior_mean(const Observation& y, const SupportGrid& grid, const MixingWeights& w,
                      std::span<const double> likelihoodRow) {
    return posterior_mean(y, grid, w, likelihoodRow, eta_theta2);
}

double empty_stratum_posterior(const SupportGrid& grid, const MixingWeights& w) {
    check_weights(grid, w);
    // P(K = 0 | theta) is (1 - pi)^kappa or e^{-(xi1 + xi2)}.
    std::vector<double> row(grid.size());
    const Observation empty{0, 0};
    if (is_poisson(grid.scenario())) {
        double minLambda = grid[0].theta1();
        for (const auto& p : grid.points()) minLambda = std::min(minLambda, p.theta1());
        for (std::size_t j = 0; j < grid.size(); ++j)
            row[j] = std::exp(-(grid[j].theta1() - minLambda));
    } else {
        for (std::size_t j = 0; j < grid.size(); ++j)
            row[j] = component_density(empty, grid[j], grid.scenario());
    }
    return posterior_mean(empty, grid, w, row);
}

double psi_star_estimator(std::span<const Observation> obs, const SupportGrid& grid,
                          const MixingWeights& w) {
    if (obs.empty()) throw EmptyData("no observations");
    double sum = 0.0;
    long empty = 0;
    for (const auto& y : obs) {
        validate(y);
        if (y.k > 0)
            sum += static_cast<double>(y.x) / y.k;
        else
            ++empty;
    }
    if (empty > 0) sum += static_cast<double>(empty) * empty_stratum_posterior(grid, w);
    return sum / static_cast<double>(obs.size());
}

std::vector<double> row_posterior_means(const LikelihoodMatrix& L, const SupportGrid& grid,
                                        const MixingWeights& w) {
    check_weights(grid, w);
    if (L.n_cols() != static_cast<Eigen::Index>(grid.size()))
        throw DomainError("likelihood matrix does not match the grid size");
    const Eigen::VectorXd t2 = grid.theta2();
    const Eigen::VectorXd den = L.scaled() * w.values();
    const Eigen::VectorXd num = L.scaled() * w.values().cwiseProduct(t2);
    std::vector<double> out(static_cast<std::size_t>(L.n_rows()));
    for (Eigen::Index i = 0; i < L.n_rows(); ++i) {
        if (!(den[i] > 0.0))
            throw NumericalUnderflow("mixture density of row " + std::to_string(i) + " is zero");
        out[static_cast<std::size_t>(i)] = num[i] / den[i];
    }
    return out;
}

double agreement_check(const SupportGrid& grid, const MixingWeights& w, const LikelihoodMatrix& L) {
    const auto post = row_posterior_means(L, grid, w);
    double avg = 0.0;
    for (std::size_t i = 0; i < post.size(); ++i)
        avg += L.multiplicity()[static_cast<Eigen::Index>(i)] * post[i];
    avg /= L.total();
    return std::abs(gmle_plugin(grid, w) - avg);
}

EstimateReport make_report(std::span<const Observation> obs, const SupportGrid& grid,
                           const OutcomeTable& table, const LikelihoodMatrix& L, const EmResult& em) {
    EstimateReport r;
    const MixingWeights& w = em.weights;
    try {
        r.naive = naive_estimator(obs);
        r.extremeCollapse = extreme_collapse(obs);
    } catch (const AllStrataEmpty&) {
    }
    r.gmlePlugin = gmle_plugin(grid, w);
    r.psiStar = psi_star_estimator(obs, grid, w);
    r.agreement = agreement_check(grid, w, L);
    r.iterations = em.iterations;
    r.finalLogLik = em.logLikTrace.back();

    const auto rowPost = row_posterior_means(L, grid, w);
    r.posteriorMeans.reserve(obs.size());
    for (const auto& y : obs) {
        if (y.k == 0) ++r.mZero;
        const auto idx = table.find(y);
        if (!idx) throw DomainError("observation missing from outcome table");
        r.posteriorMeans.push_back(rowPost[*idx]);
    }
    return r;
}

FitResult fit_pipeline(std::span<const Observation> obs, const SupportGrid& grid,
                       const EmConfig& emCfg) {
    if (obs.empty()) throw EmptyData("no observations");
    for (const auto& y : obs) validate_for(y, grid.scenario());
    OutcomeTable table = OutcomeTable::tabulate(obs);
    std::optional<LikelihoodMatrix> built;
    try {
        built.emplace(build_likelihood_matrix(table, grid));
    } catch (const ZeroLikelihoodRow& e) {
        const Observation bad = table.outcomes[e.row()];
        std::size_t stratum = 0;
        while (!(obs[stratum].x == bad.x && obs[stratum].k == bad.k)) ++stratum;
        throw ZeroLikelihoodRow(stratum);
    }
    LikelihoodMatrix L = std::move(*built);
    EmResult em = fit_gmle(L, emCfg);
    EstimateReport report = make_report(obs, grid, table, L, em);
    return FitResult{grid, std::move(table), std::move(L), std::move(em), std::move(report)};
}

FitResult fit_pipeline(std::span<const Observation> obs, const Scenario& scenario,
                       const GridSpec& gridSpec, const EmConfig& emCfg) {
    return fit_pipeline(obs, default_grid(scenario, obs, gridSpec), emCfg);
}

void write_estimates(std::ostream& os, const EstimateReport& r) {
    os << "estimator\tvalue\n" << std::setprecision(12);
    auto opt = [&](const char* name, const std::optional<double>& v) {
        os << name << '\t';
        if (v)
            os << *v;
        else
            os << "NA";
        os << '\n';
    };
    opt("naive", r.naive);
    opt("extreme_collapse", r.extremeCollapse);
    os << "gmle_plugin\t" << r.gmlePlugin << '\n';
    os << "psi_star\t" << r.psiStar << '\n';
    os << "m_zero\t" << r.mZero << '\n';
    os << "agreement\t" << r.agreement << '\n';
    os << "iterations\t" << r.iterations << '\n';
    os << "final_loglik\t" << r.finalLogLik << '\n';
}

void write_posteriors(std::ostream& os, std::span<const Observation> obs, const EstimateReport& r) {
    os << "stratum\tx\tk\tposterior_mean\n" << std::setprecision(12);
    for (std::size_t i = 0; i < obs.size(); ++i)
        os << i << '\t' << obs[i].x << '\t' << obs[i].k << '\t' << r.posteriorMeans[i] << '\n';
}

void write_weights(std::ostream& os, const SupportGrid& grid, const MixingWeights& w,
                   double minWeight) {
    check_weights(grid, w);
    os << "index\tcoord1\tcoord2\ttheta1\ttheta2\tweight\n" << std::setprecision(12);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (w[j] < minWeight) continue;
        const auto& p = grid[j];
        os << j << '\t' << p.coord1() << '\t' << p.coord2() << '\t' << p.theta1() << '\t'
           << p.theta2() << '\t' << w[j] << '\n';
    }
}

}  // namespace stratamix
