#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stratamix/errors.hpp"
#include "stratamix/estimators.hpp"
#include "stratamix/interval.hpp"
#include "stratamix/simulation.hpp"
#include "stratamix/threshold.hpp"

namespace py = pybind11;
using namespace stratamix;

namespace {

std::vector<Observation> observations(const std::vector<int>& x, const std::vector<int>& k) {
    if (x.size() != k.size()) throw DomainError("x and k must have the same length");
    std::vector<Observation> obs(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        obs[i] = {x[i], k[i]};
        validate(obs[i]);
    }
    return obs;
}

Scenario scenario(const std::string& name, int kappa) {
    if (name == "poisson") return PoissonSampleSize{};
    if (name == "binomial") {
        if (kappa < 1) throw DomainError("binomial scenario needs kappa >= 1");
        return BinomialSampleSize{kappa};
    }
    throw DomainError("unknown scenario '" + name + "' (expected binomial or poisson)");
}

GridSpec grid_spec(std::pair<int, int> dims, const std::optional<std::vector<double>>& range) {
    GridSpec g{dims.first, dims.second};
    if (range) {
        if (range->size() != 4) throw DomainError("grid_range needs four values t1min, t1max, t2min, t2max");
        g.t1min = (*range)[0];
        g.t1max = (*range)[1];
        g.t2min = (*range)[2];
        g.t2max = (*range)[3];
    }
    return g;
}

py::object maybe(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict grid_dict(const SupportGrid& grid) {
    const auto J = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd c1(J), c2(J), t1(J), t2(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        const auto& th = grid[static_cast<std::size_t>(j)];
        c1[j] = th.coord1();
        c2[j] = th.coord2();
        t1[j] = th.theta1();
        t2[j] = th.theta2();
    }
    py::dict d;
    d["coord1"] = c1;
    d["coord2"] = c2;
    d["theta1"] = t1;
    d["theta2"] = t2;
    d["shape"] = py::make_tuple(grid.n1(), grid.n2());
    return d;
}

py::dict fit(const std::vector<int>& x, const std::vector<int>& k, const std::string& scen, int kappa,
             std::pair<int, int> grid, const std::optional<std::vector<double>>& gridRange, int iters, double tol) {
    const auto obs = observations(x, k);
    const auto r = fit_pipeline(obs, scenario(scen, kappa), grid_spec(grid, gridRange), EmConfig{iters, tol});
    py::dict d;
    d["weights"] = r.em.weights.values();
    d["grid"] = grid_dict(r.grid);
    d["loglik_trace"] = r.em.logLikTrace;
    d["iterations"] = r.em.iterations;
    d["converged"] = r.em.converged;
    d["naive"] = maybe(r.report.naive);
    d["extreme_collapse"] = maybe(r.report.extremeCollapse);
    d["gmle"] = r.report.gmlePlugin;
    d["psi_star"] = r.report.psiStar;
    d["posterior_means"] = r.report.posteriorMeans;
    d["m_zero"] = r.report.mZero;
    d["agreement"] = r.report.agreement;
    d["loglik"] = r.report.finalLogLik;
    return d;
}

py::dict ci(const std::vector<int>& x, const std::vector<int>& k, const std::string& scen, int kappa,
            std::pair<int, int> grid, const std::optional<std::vector<double>>& gridRange, int iters, double alpha,
            const std::string& mode, double alphaExp, double objectiveTol) {
    const auto obs = observations(x, k);
    const auto fitted = fit_pipeline(obs, scenario(scen, kappa), grid_spec(grid, gridRange), EmConfig{iters});
    CiConfig cfg;
    cfg.alpha = alpha;
    cfg.mode = parse_constraint_mode(mode);
    cfg.alphaExp = alphaExp;
    cfg.objectiveTol = objectiveTol;
    const auto r = ci_bounds(fitted.table, fitted.grid, cfg, fitted.em.weights);
    py::dict d;
    d["lower"] = r.lower;
    d["upper"] = r.upper;
    d["threshold"] = r.threshold;
    d["df"] = r.df;
    d["deviance_at_gmle"] = r.devianceAtGmle;
    d["gmle"] = r.gmlePlugin;
    d["lower_weights"] = r.lowerWeights.values();
    d["upper_weights"] = r.upperWeights.values();
    return d;
}

py::dict simulate(const std::optional<std::string>& preset, const std::optional<std::string>& design, int reps,
                  std::uint64_t seed, std::pair<int, int> grid, int iters, int threads) {
    if (preset.has_value() == design.has_value()) throw DomainError("give exactly one of preset or design");
    const StrataDesign d = preset ? preset_design(*preset) : parse_design(*design);
    const auto s = run_replications(d, reps, EmConfig{iters}, grid_spec(grid, std::nullopt), seed, threads);
    py::dict summary;
    for (const auto& e : s.estimators) {
        py::dict row;
        row["mean"] = e.mean;
        row["sd"] = maybe(e.sd);
        row["count"] = e.count;
        summary[py::str(e.name)] = row;
    }
    py::list reps_;
    for (const auto& r : s.replicates) {
        py::dict row;
        row["naive"] = maybe(r.naive);
        row["extreme_collapse"] = maybe(r.extremeCollapse);
        row["gmle"] = r.gmlePlugin;
        row["psi_star"] = r.psiStar;
        row["agreement"] = r.agreement;
        row["m_zero"] = r.mZero;
        reps_.append(row);
    }
    py::dict out;
    out["summary"] = summary;
    out["replicates"] = reps_;
    out["true_p"] = s.trueP;
    out["mean_abs_psi_gmle"] = s.meanAbsPsiGmle;
    return out;
}

py::dict general(const std::vector<std::pair<double, std::vector<double>>>& strata, const std::string& scen,
                 int kappa, std::pair<int, int> grid, int iters, int maxThresholds, int threads) {
    std::vector<GeneralStratum> s;
    s.reserve(strata.size());
    for (const auto& [a, values] : strata) s.push_back({a, values});
    const auto plan = build_threshold_plan(s, maxThresholds);
    const auto r = general_estimate(s, scenario(scen, kappa), grid_spec(grid, std::nullopt), EmConfig{iters}, plan,
                                    threads);
    py::dict d;
    d["estimate"] = r.estimate;
    d["thresholds"] = r.thresholds;
    d["raw_survival"] = r.rawSurvival;
    d["survival"] = r.survival;
    d["monotone_violations"] = r.monotoneViolations;
    return d;
}

py::tuple split(const std::vector<Observation>& obs) {
    std::vector<int> x, k;
    x.reserve(obs.size());
    k.reserve(obs.size());
    for (const auto& y : obs) {
        x.push_back(y.x);
        k.push_back(y.k);
    }
    return py::make_tuple(x, k);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Nonparametric mixture estimation of a stratified proportion.";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ZeroLikelihoodRow>(m, "ZeroLikelihoodRow", base.ptr());
    py::register_exception<InfeasibleConstraint>(m, "InfeasibleConstraint", base.ptr());

    const auto dims = std::make_pair(40, 40);
    m.def("naive", [](const std::vector<int>& x, const std::vector<int>& k) {
        return naive_estimator(observations(x, k));
    }, py::arg("x"), py::arg("k"));
    m.def("extreme_collapse", [](const std::vector<int>& x, const std::vector<int>& k) {
        return extreme_collapse(observations(x, k));
    }, py::arg("x"), py::arg("k"));
    m.def("fit", &fit, py::arg("x"), py::arg("k"), py::arg("scenario") = "poisson", py::arg("kappa") = 1,
          py::arg("grid") = dims, py::arg("grid_range") = py::none(), py::arg("iters") = 1000, py::arg("tol") = 0.0);
    m.def("ci", &ci, py::arg("x"), py::arg("k"), py::arg("scenario") = "poisson", py::arg("kappa") = 1,
          py::arg("grid") = dims, py::arg("grid_range") = py::none(), py::arg("iters") = 1000,
          py::arg("alpha") = 0.05, py::arg("mode") = "chi2", py::arg("alpha_exp") = 0.5,
          py::arg("objective_tol") = 1e-5);
    m.def("simulate", &simulate, py::arg("preset") = py::none(), py::arg("design") = py::none(),
          py::arg("reps") = 50, py::arg("seed") = 1, py::arg("grid") = dims, py::arg("iters") = 1000,
          py::arg("threads") = 1);
    m.def("general", &general, py::arg("strata"), py::arg("scenario") = "poisson", py::arg("kappa") = 1,
          py::arg("grid") = dims, py::arg("iters") = 1000, py::arg("max_thresholds") = 100, py::arg("threads") = 1);
    m.def("draw", [](const std::string& preset, std::uint64_t seed) {
        return split(draw_dataset(preset_design(preset), seed));
    }, py::arg("preset"), py::arg("seed"));
    m.def("thin", [](const std::vector<int>& x, const std::vector<int>& k, double gamma, std::uint64_t seed) {
        return split(thin_dataset(observations(x, k), gamma, seed));
    }, py::arg("x"), py::arg("k"), py::arg("gamma"), py::arg("seed") = 1);
    m.def("preset_names", &preset_names);
}
