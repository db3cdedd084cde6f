#include "stratamix/simulation.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stratamix/errors.hpp"
#include "stratamix/estimators.hpp"
#include "stratamix/parallel.hpp"
#include "stratamix/rng.hpp"

namespace stratamix {

namespace {

double draw(const Law& law, StreamRng& rng) {
    if (law.kind == Law::Kind::PointMass) return law.lo;
    return std::uniform_real_distribution<double>(law.lo, law.hi)(rng);
}

int draw_binomial(int n, double p, StreamRng& rng) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<int>(n, p)(rng);
}

int draw_poisson(double lambda, StreamRng& rng) {
    if (lambda <= 0.0) return 0;
    return std::poisson_distribution<int>(lambda)(rng);
}

bool within(const Law& law, double lo, double hi) { return law.lo >= lo && law.hi <= hi; }

StrataDesign two_type(Scenario s, Law t1a, Law t2a, Law t1b, Law t2b) {
    return StrataDesign{s, {{500, t1a, t2a}, {500, t1b, t2b}}};
}

EstimatorSummary summarize(std::string name, const std::vector<double>& v) {
    EstimatorSummary s{std::move(name), 0.0, std::nullopt, static_cast<int>(v.size())};
    if (v.empty()) {
        s.mean = std::nan("");
        return s;
    }
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() >= 2) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

}  // namespace

Law Law::uniform(double lo, double hi) {
    if (!(lo < hi)) throw DomainError("uniform law needs lo < hi");
    return {Kind::Uniform, lo, hi};
}

Law Law::parse(const std::string& text) {
    try {
        const auto dots = text.find("..");
        std::size_t used = 0;
        if (dots == std::string::npos) {
            const double v = std::stod(text, &used);
            if (used != text.size()) throw DomainError("trailing characters");
            return point(v);
        }
        const std::string a = text.substr(0, dots), b = text.substr(dots + 2);
        const double lo = std::stod(a, &used);
        if (used != a.size()) throw DomainError("trailing characters");
        const double hi = std::stod(b, &used);
        if (used != b.size()) throw DomainError("trailing characters");
        return uniform(lo, hi);
    } catch (const std::logic_error&) {
        throw DomainError("cannot parse law '" + text + "' (expected v or lo..hi)");
    } catch (const DomainError&) {
        throw DomainError("cannot parse law '" + text + "' (expected v or lo..hi)");
    }
}

std::string Law::to_string() const {
    std::ostringstream os;
    os << std::setprecision(12) << lo;
    if (kind == Kind::Uniform) os << ".." << hi;
    return os.str();
}

int StrataDesign::strata() const noexcept {
    int n = 0;
    for (const auto& g : groups) n += g.count;
    return n;
}

double StrataDesign::true_p() const {
    validate();
    double s = 0.0;
    for (const auto& g : groups) s += g.count * g.theta2.mean();
    return s / strata();
}

void StrataDesign::validate() const {
    if (groups.empty()) throw DomainError("design has no groups");
    if (const auto* b = std::get_if<BinomialSampleSize>(&scenario); b && b->kappa < 1)
        throw DomainError("kappa must be positive");
    for (const auto& g : groups) {
        if (g.count < 1) throw DomainError("group count must be >= 1");
        for (const Law* law : {&g.theta1, &g.theta2})
            if (law->kind == Law::Kind::Uniform && !(law->lo < law->hi))
                throw DomainError("uniform law needs lo < hi");
        if (!within(g.theta2, 0.0, 1.0)) throw DomainError("theta2 law must lie in [0,1]");
        if (is_poisson(scenario) ? !(g.theta1.lo >= 0.0) : !within(g.theta1, 0.0, 1.0))
            throw DomainError("theta1 law out of range for the scenario");
    }
}

StrataDesign preset_design(const std::string& name) {
    const Scenario pois = PoissonSampleSize{};
    const auto P = Law::point;
    if (name == "t1r1") return two_type(pois, P(2), P(0.4), P(1), P(0.6));
    if (name == "t1r2") return two_type(pois, P(2), P(0.2), P(1), P(0.8));
    if (name == "t1r3") return two_type(pois, P(2), P(0.2), P(0.5), P(0.8));
    if (name.size() == 4 && name.starts_with("t2r") && name[3] >= '1' && name[3] <= '3') {
        const double pI = 0.4 - 0.1 * (name[3] - '1');
        return two_type(pois, Law::uniform(0.5, 1.0), P(pI), Law::uniform(0.5, 2.0), P(1.0 - pI));
    }
    if (name.size() == 4 && name.starts_with("t3r") && name[3] >= '1' && name[3] <= '3') {
        const double pI = 0.2 + 0.1 * (name[3] - '1');
        return two_type(BinomialSampleSize{4}, P(pI), P(pI), P(1.0 - pI), P(1.0 - pI));
    }
    if (name.size() == 4 && name.starts_with("t4k") && name[3] >= '1' && name[3] <= '5') {
        const Law low = Law::uniform(0.1, 0.6), high = Law::uniform(0.4, 0.9);
        return two_type(BinomialSampleSize{name[3] - '0'}, low, low, high, high);
    }
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw DomainError("unknown preset '" + name + "' (available: " + list + ")");
}

std::vector<std::string> preset_names() {
    return {"t1r1", "t1r2", "t1r3", "t2r1", "t2r2", "t2r3", "t3r1", "t3r2",
            "t3r3", "t4k1", "t4k2", "t4k3", "t4k4", "t4k5"};
}

StrataDesign parse_design(const std::string& jsonText) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(jsonText);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("design file is not valid JSON: ") + e.what(), 0);
    }
    auto law = [](const nlohmann::json& v) {
        if (v.is_number()) return Law::point(v.get<double>());
        if (v.is_string()) return Law::parse(v.get<std::string>());
        throw ParseError("law must be a number or \"lo..hi\" string", 0);
    };
    try {
        StrataDesign d;
        const auto scen = j.at("scenario").get<std::string>();
        if (scen == "poisson")
            d.scenario = PoissonSampleSize{};
        else if (scen == "binomial")
            d.scenario = BinomialSampleSize{j.at("kappa").get<int>()};
        else
            throw ParseError("scenario must be poisson or binomial", 0);
        for (const auto& g : j.at("groups"))
            d.groups.push_back({g.at("count").get<int>(), law(g.at("theta1")), law(g.at("theta2"))});
        d.validate();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad design file: ") + e.what(), 0);
    }
}

std::vector<Observation> draw_dataset(const StrataDesign& design, std::uint64_t seed) {
    design.validate();
    std::vector<Observation> out;
    out.reserve(static_cast<std::size_t>(design.strata()));
    const auto* binom = std::get_if<BinomialSampleSize>(&design.scenario);
    std::uint64_t i = 0;
    for (const auto& g : design.groups) {
        for (int c = 0; c < g.count; ++c, ++i) {
            StreamRng rng(derive_seed(seed, i));
            const double t1 = draw(g.theta1, rng);
            const double p = draw(g.theta2, rng);
            const int k = binom ? draw_binomial(binom->kappa, t1, rng) : draw_poisson(t1, rng);
            out.push_back({draw_binomial(k, p, rng), k});
        }
    }
    return out;
}

std::uint64_t replicate_seed(std::uint64_t master, int r) noexcept {
    return derive_seed(master, 0x5eedULL, static_cast<std::uint64_t>(r));
}

const EstimatorSummary& SimSummary::get(const std::string& name) const {
    for (const auto& e : estimators)
        if (e.name == name) return e;
    throw DomainError("no estimator named " + name);
}

SimSummary run_replications(const StrataDesign& design, int reps, const EmConfig& emCfg,
                            const GridSpec& gridSpec, std::uint64_t seed, int threads) {
    if (reps < 1) throw DomainError("reps must be >= 1");
    design.validate();
    SimSummary s;
    s.reps = reps;
    s.seed = seed;
    s.trueP = design.true_p();
    s.replicates.resize(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        try {
            const auto data = draw_dataset(design, replicate_seed(seed, static_cast<int>(r)));
            const auto fit = fit_pipeline(data, design.scenario, gridSpec, emCfg);
            const auto& rep = fit.report;
            s.replicates[r] = {rep.naive, rep.extremeCollapse, rep.gmlePlugin, rep.psiStar,
                               rep.agreement, rep.mZero};
        } catch (const std::exception& e) {
            throw Error("replicate " + std::to_string(r) + ": " + e.what());
        }
    });

    std::vector<double> naive, collapse, gmle, psi;
    double absDiff = 0.0;
    for (const auto& r : s.replicates) {
        if (r.naive) naive.push_back(*r.naive);
        if (r.extremeCollapse) collapse.push_back(*r.extremeCollapse);
        gmle.push_back(r.gmlePlugin);
        psi.push_back(r.psiStar);
        absDiff += std::abs(r.psiStar - r.gmlePlugin);
    }
    s.meanAbsPsiGmle = absDiff / reps;
    s.estimators = {summarize("naive", naive), summarize("extreme_collapse", collapse),
                    summarize("gmle", gmle), summarize("psi_star", psi)};
    return s;
}

void write_summary(std::ostream& os, const SimSummary& s) {
    os << "estimator\tmean\tsd\treps\ttrue_p\n" << std::setprecision(12);
    for (const auto& e : s.estimators) {
        os << e.name << '\t';
        if (e.count > 0)
            os << e.mean;
        else
            os << "NA";
        os << '\t';
        if (e.sd) os << *e.sd;
        os << '\t' << e.count << '\t' << s.trueP << '\n';
    }
}

std::vector<Observation> thin_dataset(std::span<const Observation> obs, double gamma, std::uint64_t seed) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0,1]");
    std::vector<Observation> out;
    out.reserve(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        validate(obs[i]);
        StreamRng rng(derive_seed(seed, i, 1));
        const int xs = draw_binomial(obs[i].x, gamma, rng);
        const int fs = draw_binomial(obs[i].k - obs[i].x, gamma, rng);
        out.push_back({xs, xs + fs});
    }
    return out;
}

std::vector<GeneralStratum> thin_strata(std::span<const GeneralStratum> strata, double gamma,
                                        std::uint64_t seed) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0,1]");
    std::vector<GeneralStratum> out;
    out.reserve(strata.size());
    for (std::size_t i = 0; i < strata.size(); ++i) {
        StreamRng rng(derive_seed(seed, i, 2));
        std::bernoulli_distribution keep(gamma);
        GeneralStratum s{strata[i].a, {}};
        for (double v : strata[i].values)
            if (keep(rng)) s.values.push_back(v);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace stratamix
