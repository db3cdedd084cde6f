#include "stratamix/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>

#include "stratamix/errors.hpp"
#include "stratamix/estimators.hpp"
#include "stratamix/parallel.hpp"

namespace stratamix {

namespace {

std::vector<double> all_z(std::span<const GeneralStratum> strata) {
    std::vector<double> z;
    for (const auto& s : strata) {
        if (!(s.a >= 0.0) || !std::isfinite(s.a)) throw DomainError("stratum weight a must be finite and >= 0");
        for (double v : s.values) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw DomainError("unit values must be finite and >= 0 (got " + std::to_string(v) + ")");
            z.push_back(s.a * v);
        }
    }
    return z;
}

}  // namespace

ThresholdPlan build_threshold_plan(std::span<const GeneralStratum> strata, int maxThresholds) {
    if (maxThresholds < 1) throw DomainError("maxThresholds must be >= 1");
    std::vector<double> z = all_z(strata);
    if (z.empty()) throw AllStrataEmpty("every stratum is empty");
    std::sort(z.begin(), z.end());
    const double top = z.back();

    std::vector<double> distinct;
    for (double v : z)
        if (v > 0.0 && v < top && (distinct.empty() || v > distinct.back())) distinct.push_back(v);

    ThresholdPlan plan;
    plan.upper = top;
    plan.thresholds.push_back(0.0);
    if (distinct.size() + 1 <= static_cast<std::size_t>(maxThresholds)) {
        plan.thresholds.insert(plan.thresholds.end(), distinct.begin(), distinct.end());
        return plan;
    }
    const auto n = static_cast<double>(z.size());
    for (int t = 1; t < maxThresholds; ++t) {
        const double level = static_cast<double>(t) / maxThresholds;
        const auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(level * n) - 1.0));
        const double v = z[std::min(idx, z.size() - 1)];
        if (v > 0.0 && v < top && v > plan.thresholds.back()) plan.thresholds.push_back(v);
    }
    return plan;
}

std::vector<Observation> binary_reduce(std::span<const GeneralStratum> strata, double c) {
    if (!(c >= 0.0)) throw DomainError("threshold must be >= 0");
    std::vector<Observation> out;
    out.reserve(strata.size());
    for (const auto& s : strata) {
        int x = 0;
        for (double v : s.values)
            if (s.a * v > c) ++x;
        out.push_back({x, static_cast<int>(s.values.size())});
    }
    return out;
}

GeneralResult general_estimate(std::span<const GeneralStratum> strata, const Scenario& scenario,
                               const GridSpec& gridSpec, const EmConfig& emCfg,
                               const ThresholdPlan& plan, int threads) {
    if (strata.empty()) throw EmptyData("no strata");
    const auto& c = plan.thresholds;
    if (c.empty() || c.front() != 0.0) throw DomainError("threshold plan must start at 0");
    for (std::size_t t = 1; t < c.size(); ++t)
        if (!(c[t] > c[t - 1])) throw DomainError("thresholds must be strictly increasing");
    if (plan.upper < c.back()) throw DomainError("plan upper limit is below the last threshold");
    all_z(strata);

    GeneralResult r;
    r.thresholds = c;
    r.rawSurvival.assign(c.size(), 0.0);
    parallel_for(c.size(), threads, [&](std::size_t t) {
        try {
            const auto obs = binary_reduce(strata, c[t]);
            r.rawSurvival[t] = fit_pipeline(obs, scenario, gridSpec, emCfg).report.gmlePlugin;
        } catch (...) {
            std::throw_with_nested(ThresholdFailure(c[t]));
        }
    });

    r.survival = r.rawSurvival;
    for (std::size_t t = 1; t < c.size(); ++t) {
        if (r.rawSurvival[t] > r.rawSurvival[t - 1]) ++r.monotoneViolations;
        r.survival[t] = std::min(r.survival[t], r.survival[t - 1]);
    }
    for (std::size_t t = 0; t < c.size(); ++t) {
        const double next = t + 1 < c.size() ? c[t + 1] : plan.upper;
        r.estimate += r.survival[t] * (next - c[t]);
    }
    return r;
}

void write_general(std::ostream& os, const GeneralResult& r) {
    os << "quantity\tvalue\n" << std::setprecision(12);
    os << "estimate\t" << r.estimate << '\n';
    os << "thresholds\t" << r.thresholds.size() << '\n';
    os << "monotone_violations\t" << r.monotoneViolations << '\n';
}

void write_survival(std::ostream& os, const GeneralResult& r) {
    os << "threshold\traw_survival\tsurvival\n" << std::setprecision(12);
    for (std::size_t t = 0; t < r.thresholds.size(); ++t)
        os << r.thresholds[t] << '\t' << r.rawSurvival[t] << '\t' << r.survival[t] << '\n';
}

}  // namespace stratamix
