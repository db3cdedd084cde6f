#include "stratamix/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stratamix/errors.hpp"
#include "stratamix/estimators.hpp"
#include "stratamix/interval.hpp"
#include "stratamix/io.hpp"
#include "stratamix/simulation.hpp"
#include "stratamix/threshold.hpp"

namespace stratamix::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad flag combination or config value; exits with kUsageOrParse.
class UsageError : public Error {
public:
    using Error::Error;
};

// Effective configuration of one run: defaults, then the config file, then flags.
struct RunConfig {
    std::string command;
    std::string input;
    std::string units;
    std::string strata;
    std::string outDir = ".";
    std::string configPath;
    std::uint64_t seed = 1;
    std::string scenario;
    int kappa = 0;
    GridSpec grid;
    int iters = 1000;
    double tol = 0.0;
    CiConfig ci;
    int maxThresholds = 100;
    int threads = 0;
    std::string preset;
    std::string design;
    int reps = 50;
    bool dumpData = false;
    double gamma = 1.0;

    Scenario make_scenario() const {
        if (scenario == "poisson") return PoissonSampleSize{};
        if (scenario == "binomial") {
            if (kappa < 1) throw UsageError("--scenario binomial needs --kappa >= 1");
            return BinomialSampleSize{kappa};
        }
        if (scenario.empty()) throw UsageError("--scenario is required (binomial|poisson)");
        throw UsageError("unknown scenario '" + scenario + "' (expected binomial or poisson)");
    }

    EmConfig em() const {
        EmConfig c;
        c.maxIter = iters;
        c.tol = tol;
        return c;
    }
};

// Flag storage shared by all subcommands; only flags that were passed are applied.
struct Flags {
    std::string input, units, strata, out, config, scenario, grid, gridRange, preset, design, mode;
    std::uint64_t seed = 0;
    int kappa = 0, iters = 0, threads = 0, maxThresholds = 0, reps = 0;
    double tol = 0, alpha = 0, alphaExp = 0, objectiveTol = 0, gamma = 0;
    bool dumpData = false;
};

void parse_grid_dims(const std::string& s, GridSpec& g) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        std::size_t u1 = 0, u2 = 0;
        const int n1 = std::stoi(s.substr(0, x), &u1);
        const int n2 = std::stoi(s.substr(x + 1), &u2);
        if (u1 != x || u2 != s.size() - x - 1) throw std::invalid_argument(s);
        g.n1 = n1;
        g.n2 = n2;
    } catch (const std::logic_error&) {
        throw UsageError("--grid expects N1xN2, e.g. 40x40 (got '" + s + "')");
    }
}

void parse_grid_range(const std::string& s, GridSpec& g) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string cell;
    try {
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            v.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        }
    } catch (const std::logic_error&) {
        v.clear();
    }
    if (v.size() != 4) throw UsageError("--grid-range expects t1min,t1max,t2min,t2max (got '" + s + "')");
    g.t1min = v[0];
    g.t1max = v[1];
    g.t2min = v[2];
    g.t2max = v[3];
}

// Applies a JSON config file. Keys may be nested objects or dotted names.
void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'", 0);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("config file '" + path + "' is not valid JSON: " + e.what(), 0);
    }
    if (!j.is_object()) throw ParseError("config file must hold a JSON object", 0);
    const json flat = j.flatten();
    for (const auto& [pointer, value] : flat.items()) {
        std::string key = pointer.substr(1);
        for (auto& ch : key)
            if (ch == '/') ch = '.';
        try {
            if (key == "scenario") cfg.scenario = value.get<std::string>();
            else if (key == "kappa") cfg.kappa = value.get<int>();
            else if (key == "grid.n1") cfg.grid.n1 = value.get<int>();
            else if (key == "grid.n2") cfg.grid.n2 = value.get<int>();
            else if (key == "grid.t1min") cfg.grid.t1min = value.get<double>();
            else if (key == "grid.t1max") cfg.grid.t1max = value.get<double>();
            else if (key == "grid.t2min") cfg.grid.t2min = value.get<double>();
            else if (key == "grid.t2max") cfg.grid.t2max = value.get<double>();
            else if (key == "em.iters") cfg.iters = value.get<int>();
            else if (key == "em.tol") cfg.tol = value.get<double>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "threads") cfg.threads = value.get<int>();
            else if (key == "ci.alpha") cfg.ci.alpha = value.get<double>();
            else if (key == "ci.mode") cfg.ci.mode = parse_constraint_mode(value.get<std::string>());
            else if (key == "ci.alpha_exp") cfg.ci.alphaExp = value.get<double>();
            else if (key == "ci.objective_tol") cfg.ci.objectiveTol = value.get<double>();
            else if (key == "general.max_thresholds") cfg.maxThresholds = value.get<int>();
            else if (key == "simulate.reps") cfg.reps = value.get<int>();
            else if (key == "thin.gamma") cfg.gamma = value.get<double>();
            else throw ParseError("config file: unknown key '" + key + "'", 0);
        } catch (const json::exception&) {
            throw ParseError("config file: wrong type for key '" + key + "'", 0);
        }
    }
}

void apply_flags(const CLI::App& sub, const Flags& f, RunConfig& cfg) {
    auto given = [&](const char* name) {
        const CLI::Option* o = sub.get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };
    if (given("--input")) cfg.input = f.input;
    if (given("--units")) cfg.units = f.units;
    if (given("--strata")) cfg.strata = f.strata;
    if (given("--out")) cfg.outDir = f.out;
    if (given("--scenario")) cfg.scenario = f.scenario;
    if (given("--kappa")) cfg.kappa = f.kappa;
    if (given("--grid")) parse_grid_dims(f.grid, cfg.grid);
    if (given("--grid-range")) parse_grid_range(f.gridRange, cfg.grid);
    if (given("--iters")) cfg.iters = f.iters;
    if (given("--tol")) cfg.tol = f.tol;
    if (given("--seed")) cfg.seed = f.seed;
    if (given("--threads")) cfg.threads = f.threads;
    if (given("--alpha")) cfg.ci.alpha = f.alpha;
    if (given("--mode")) cfg.ci.mode = parse_constraint_mode(f.mode);
    if (given("--alpha-exp")) cfg.ci.alphaExp = f.alphaExp;
    if (given("--objective-tol")) cfg.ci.objectiveTol = f.objectiveTol;
    if (given("--max-thresholds")) cfg.maxThresholds = f.maxThresholds;
    if (given("--preset")) cfg.preset = f.preset;
    if (given("--design")) cfg.design = f.design;
    if (given("--reps")) cfg.reps = f.reps;
    if (given("--dump-data")) cfg.dumpData = f.dumpData;
    if (given("--gamma")) cfg.gamma = f.gamma;
}

json to_json(const RunConfig& c) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return json{
        {"command", c.command},
        {"input", c.input},
        {"units", c.units},
        {"strata", c.strata},
        {"out", c.outDir},
        {"config", c.configPath},
        {"seed", c.seed},
        {"scenario", c.scenario},
        {"kappa", c.kappa},
        {"grid", {{"n1", c.grid.n1}, {"n2", c.grid.n2}, {"t1min", opt(c.grid.t1min)},
                  {"t1max", opt(c.grid.t1max)}, {"t2min", opt(c.grid.t2min)}, {"t2max", opt(c.grid.t2max)}}},
        {"em", {{"iters", c.iters}, {"tol", c.tol}}},
        {"ci", {{"alpha", c.ci.alpha}, {"mode", to_string(c.ci.mode)}, {"alpha_exp", c.ci.alphaExp},
                {"objective_tol", c.ci.objectiveTol}}},
        {"general", {{"max_thresholds", c.maxThresholds}}},
        {"simulate", {{"preset", c.preset}, {"design", c.design}, {"reps", c.reps}, {"dump_data", c.dumpData}}},
        {"thin", {{"gamma", c.gamma}}},
        {"threads", c.threads},
    };
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
    const fs::path p = fs::path(cfg.outDir) / name;
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    return os;
}

std::ifstream open_in(const std::string& path, const char* flag) {
    if (path.empty()) throw UsageError(std::string(flag) + " is required");
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'", 0);
    return in;
}

std::vector<Observation> read_input(const RunConfig& cfg) {
    auto in = open_in(cfg.input, "--input");
    return read_observations(in);
}

LongData read_units(const RunConfig& cfg, const std::string& path) {
    auto units = open_in(path, "--input");
    if (cfg.strata.empty()) return read_long(units);
    auto side = open_in(cfg.strata, "--strata");
    return read_long(units, &side);
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
    const auto obs = read_input(cfg);
    const auto fit = fit_pipeline(obs, cfg.make_scenario(), cfg.grid, cfg.em());
    auto w = open_out(cfg, "weights.tsv");
    write_weights(w, fit.grid, fit.em.weights);
    auto t = open_out(cfg, "trace.tsv");
    write_trace(t, fit.em);
    auto e = open_out(cfg, "estimates.tsv");
    write_estimates(e, fit.report);
    auto p = open_out(cfg, "posteriors.tsv");
    write_posteriors(p, obs, fit.report);
    out << std::setprecision(12) << "gmle_plugin\t" << fit.report.gmlePlugin << '\n';
    return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    StrataDesign design;
    if (!cfg.preset.empty() && !cfg.design.empty()) throw UsageError("give either --preset or --design");
    if (!cfg.preset.empty()) {
        try {
            design = preset_design(cfg.preset);
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
    } else if (!cfg.design.empty()) {
        auto in = open_in(cfg.design, "--design");
        std::stringstream ss;
        ss << in.rdbuf();
        design = parse_design(ss.str());
    } else {
        throw UsageError("simulate needs --preset or --design");
    }
    const auto summary = run_replications(design, cfg.reps, cfg.em(), cfg.grid, cfg.seed, cfg.threads);
    auto s = open_out(cfg, "summary.tsv");
    write_summary(s, summary);

    auto r = open_out(cfg, "replicates.tsv");
    r << "replicate\tnaive\textreme_collapse\tgmle\tpsi_star\tm_zero\n" << std::setprecision(12);
    for (std::size_t i = 0; i < summary.replicates.size(); ++i) {
        const auto& rep = summary.replicates[i];
        r << i << '\t';
        if (rep.naive) r << *rep.naive;
        else r << "NA";
        r << '\t';
        if (rep.extremeCollapse) r << *rep.extremeCollapse;
        else r << "NA";
        r << '\t' << rep.gmlePlugin << '\t' << rep.psiStar << '\t' << rep.mZero << '\n';
    }
    if (cfg.dumpData) {
        for (int i = 0; i < cfg.reps; ++i) {
            auto d = open_out(cfg, "data_rep" + std::to_string(i) + ".csv");
            write_observations(d, draw_dataset(design, replicate_seed(cfg.seed, i)));
        }
    }
    out << std::setprecision(12);
    for (const auto& e : summary.estimators) out << e.name << '\t' << e.mean << '\n';
    return kOk;
}

int cmd_ci(const RunConfig& cfg, std::ostream& out) {
    const auto obs = read_input(cfg);
    const auto fit = fit_pipeline(obs, cfg.make_scenario(), cfg.grid, cfg.em());
    const auto r = ci_bounds(fit.table, fit.grid, cfg.ci, fit.em.weights);
    auto os = open_out(cfg, "ci.tsv");
    write_ci(os, r, cfg.ci);
    out << std::setprecision(12) << "lower\t" << r.lower << "\nupper\t" << r.upper << '\n';
    return kOk;
}

int cmd_general(const RunConfig& cfg, std::ostream& out) {
    const auto data = read_units(cfg, cfg.input);
    const auto plan = build_threshold_plan(data.strata, cfg.maxThresholds);
    const auto r = general_estimate(data.strata, cfg.make_scenario(), cfg.grid, cfg.em(), plan, cfg.threads);
    auto g = open_out(cfg, "general.tsv");
    write_general(g, r);
    auto s = open_out(cfg, "survival.tsv");
    write_survival(s, r);
    out << std::setprecision(12) << "estimate\t" << r.estimate << '\n';
    return kOk;
}

int cmd_thin(const RunConfig& cfg, std::ostream& out) {
    if (!cfg.input.empty() == !cfg.units.empty()) throw UsageError("thin needs exactly one of --input or --units");
    if (!cfg.input.empty()) {
        const auto obs = read_input(cfg);
        const auto thinned = thin_dataset(obs, cfg.gamma, cfg.seed);
        auto os = open_out(cfg, "thinned.csv");
        write_observations(os, thinned);
        long empty = 0;
        for (const auto& y : thinned) empty += y.k == 0;
        out << "empty_strata\t" << empty << '\n';
        return kOk;
    }
    const auto data = read_units(cfg, cfg.units);
    LongData thinned{data.ids, thin_strata(data.strata, cfg.gamma, cfg.seed)};
    auto u = open_out(cfg, "thinned_units.csv");
    write_long(u, thinned);
    auto s = open_out(cfg, "thinned_strata.csv");
    write_strata(s, thinned);
    long empty = 0;
    for (const auto& st : thinned.strata) empty += st.values.empty();
    out << "empty_strata\t" << empty << '\n';
    return kOk;
}

void add_shared(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config file (flags override it)");
    sub->add_option("--out", f.out, "Output directory (created if missing)");
    sub->add_option("--scenario", f.scenario, "Sample-size model: binomial|poisson");
    sub->add_option("--kappa", f.kappa, "Planned sample size for the binomial scenario");
    sub->add_option("--grid", f.grid, "Grid dimensions N1xN2 (default 40x40)");
    sub->add_option("--grid-range", f.gridRange, "t1min,t1max,t2min,t2max");
    sub->add_option("--iters", f.iters, "EM iterations (default 1000)");
    sub->add_option("--tol", f.tol, "Stop EM when the log-likelihood gain falls below this");
    sub->add_option("--seed", f.seed, "Random seed");
    sub->add_option("--threads", f.threads, "Worker threads (default: all cores)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Estimation of averages of strata means with empty strata"};
    app.require_subcommand(1);
    Flags f;

    auto* fit = app.add_subcommand("fit", "Fit the GMLE and write weights, trace, estimates, posteriors");
    add_shared(fit, f);
    fit->add_option("--input", f.input, "Observation CSV (x,k)");

    auto* sim = app.add_subcommand("simulate", "Replicated simulation of a preset or design file");
    add_shared(sim, f);
    sim->add_option("--preset", f.preset, "Built-in design (t1r1..t1r3, t2r1..t2r3, t3r1..t3r3, t4k1..t4k5)");
    sim->add_option("--design", f.design, "JSON design file");
    sim->add_option("--reps", f.reps, "Replications (default 50)");
    sim->add_flag("--dump-data", f.dumpData, "Write each replicate's dataset as data_repN.csv");

    auto* ci = app.add_subcommand("ci", "Likelihood-ratio confidence bounds for the mean success probability");
    add_shared(ci, f);
    ci->add_option("--input", f.input, "Observation CSV (x,k)");
    ci->add_option("--alpha", f.alpha, "Level (default 0.05)");
    ci->add_option("--mode", f.mode, "Threshold: chi2|logpower");
    ci->add_option("--alpha-exp", f.alphaExp, "Exponent for logpower mode");
    ci->add_option("--objective-tol", f.objectiveTol, "Bound accuracy (default 1e-5)");

    auto* gen = app.add_subcommand("general", "Weighted non-binary outcomes by threshold integration");
    add_shared(gen, f);
    gen->add_option("--input", f.input, "Unit CSV (stratum,a,value)");
    gen->add_option("--strata", f.strata, "Strata CSV (stratum,a) declaring empty strata");
    gen->add_option("--max-thresholds", f.maxThresholds, "Threshold cap (default 100)");

    auto* thin = app.add_subcommand("thin", "Retain each sampled unit with probability gamma");
    add_shared(thin, f);
    thin->add_option("--input", f.input, "Observation CSV (x,k)");
    thin->add_option("--units", f.units, "Unit CSV (stratum,a,value)");
    thin->add_option("--strata", f.strata, "Strata CSV for --units");
    thin->add_option("--gamma", f.gamma, "Retention probability in (0,1]");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageOrParse;
    }

    CLI::App* sub = app.get_subcommands().front();
    RunConfig cfg;
    cfg.command = sub->get_name();
    try {
        if (sub->count("--config") > 0) {
            cfg.configPath = f.config;
            apply_config_file(f.config, cfg);
        }
        apply_flags(*sub, f, cfg);
        if (cfg.iters < 1) throw UsageError("--iters must be >= 1");
        fs::create_directories(cfg.outDir);
        {
            auto rj = open_out(cfg, "run.json");
            rj << std::setw(2) << to_json(cfg) << '\n';
        }
        if (cfg.command == "fit") return cmd_fit(cfg, out);
        if (cfg.command == "simulate") return cmd_simulate(cfg, out);
        if (cfg.command == "ci") return cmd_ci(cfg, out);
        if (cfg.command == "general") return cmd_general(cfg, out);
        return cmd_thin(cfg, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageOrParse;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageOrParse;
    } catch (const ZeroLikelihoodRow& e) {
        err << "error: " << e.what() << '\n';
        return kZeroLikelihood;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageOrParse;
    } catch (const ThresholdFailure& e) {
        err << "error: " << e.what();
        try {
            std::rethrow_if_nested(e);
        } catch (const ZeroLikelihoodRow& inner) {
            err << ": " << inner.what() << '\n';
            return kZeroLikelihood;
        } catch (const std::exception& inner) {
            err << ": " << inner.what();
        }
        err << '\n';
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

}  // namespace stratamix::cli
