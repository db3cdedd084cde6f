#ifndef STRATAMIX_THRESHOLD_HPP
#define STRATAMIX_THRESHOLD_HPP

// Weighted non-binary outcomes. With Z = a * X >= 0, the mean satisfies
// E Z = integral_0^inf P(Z > c) dc. Each survival probability P(Z > c) is
// estimated by the binary pipeline on the indicators I(Z > c), and the
// resulting step function is integrated over the threshold partition.

#include <iosfwd>
#include <span>
#include <vector>

#include "stratamix/em.hpp"
#include "stratamix/mixture.hpp"

namespace stratamix {

struct GeneralStratum {
    double a = 1.0;
    /// Observed unit values; empty means the stratum has no sample.
    std::vector<double> values;
};

struct ThresholdPlan {
    /// 0 = c_0 < c_1 < ... < c_T.
    std::vector<double> thresholds;
    /// Largest observed Z; closes the last integration cell.
    double upper = 0.0;
};

/// {0} and the distinct observed Z values below the maximum. When that
/// exceeds maxThresholds, 0 plus empirical (inverse-CDF) quantiles of Z at
/// levels t / maxThresholds, t = 1..maxThresholds-1.
ThresholdPlan build_threshold_plan(std::span<const GeneralStratum> strata, int maxThresholds);

/// Per stratum (#{j : a * values[j] > c}, |values|).
std::vector<Observation> binary_reduce(std::span<const GeneralStratum> strata, double c);

struct GeneralResult {
    double estimate = 0.0;
    std::vector<double> thresholds;
    std::vector<double> rawSurvival;  ///< gmle plug-in per threshold
    std::vector<double> survival;     ///< running minimum of rawSurvival
    int monotoneViolations = 0;       ///< thresholds where the raw sequence increased
};

/// sum_t phat(c_t) (c_{t+1} - c_t) with c_{T+1} = plan.upper, where phat is
/// the monotonized GMLE plug-in of each binary problem. `threads` > 1 fits
/// thresholds concurrently; the result does not depend on it.
GeneralResult general_estimate(std::span<const GeneralStratum> strata, const Scenario& scenario,
                               const GridSpec& gridSpec, const EmConfig& emCfg,
                               const ThresholdPlan& plan, int threads = 1);

/// general.tsv: `quantity<TAB>value` (estimate, threshold count, violations).
void write_general(std::ostream& os, const GeneralResult& r);
/// survival.tsv: `threshold<TAB>raw_survival<TAB>survival`.
void write_survival(std::ostream& os, const GeneralResult& r);

}  // namespace stratamix

#endif  // STRATAMIX_THRESHOLD_HPP
