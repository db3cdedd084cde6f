#ifndef STRATAMIX_INTERVAL_HPP
#define STRATAMIX_INTERVAL_HPP

// Likelihood-ratio confidence bounds for E_G theta2.
//
// The feasible set is {w on the simplex : deviance(w) <= c} where
//   deviance(w) = 2 sum_y n_y log(phat_y / q_y(w)),  q_y(w) = sum_j f(y|theta_j) w_j,
// summed over observed outcomes only. The bounds are the minimum and maximum
// of sum_j w_j theta2_j over that convex set, computed by a log-barrier
// interior-point method whose duality gap certifies the objective accuracy.

#include <iosfwd>
#include <optional>
#include <string>

#include "stratamix/mixture.hpp"

namespace stratamix {

enum class ConstraintMode { ChiSquare, LogPower };

std::string to_string(ConstraintMode m);
ConstraintMode parse_constraint_mode(const std::string& s);

struct CiConfig {
    double alpha = 0.05;
    double objectiveTol = 1e-5;
    ConstraintMode mode = ConstraintMode::ChiSquare;
    /// Exponent in the (log n)^{1 + alphaExp} threshold of LogPower mode.
    double alphaExp = 0.5;
};

struct CiResult {
    double lower = 0.0;
    double upper = 0.0;
    double threshold = 0.0;       ///< deviance bound c
    int df = 0;                   ///< chi-square degrees of freedom (ChiSquare mode)
    double devianceAtGmle = 0.0;  ///< deviance at the EM start point
    double gmlePlugin = 0.0;      ///< theta2 plug-in at the EM start point
    MixingWeights lowerWeights;
    MixingWeights upperWeights;
};

/// 2 sum_y n_y log(phat_y / q_y(w)). Throws NumericalUnderflow if some q_y = 0.
double deviance(const OutcomeTable& table, const SupportGrid& grid, const MixingWeights& w);

/// Chi-square quantile with max(M - 1, 1) degrees of freedom at 1 - alpha, or
/// (log n)^{1 + alphaExp}.
double deviance_threshold(const OutcomeTable& table, const CiConfig& cfg);

/// Lower and upper bounds for E_G theta2. When gmle is absent an EM fit
/// (uniform start, 1000 iterations) supplies the starting point. Throws
/// InfeasibleConstraint when the minimum deviance over the grid exceeds the
/// threshold.
CiResult ci_bounds(const OutcomeTable& table, const SupportGrid& grid, const CiConfig& cfg,
                   const std::optional<MixingWeights>& gmle = std::nullopt);

/// ci.tsv: `lower<TAB>upper<TAB>alpha<TAB>mode<TAB>deviance_at_gmle<TAB>gmle_plugin<TAB>threshold`.
void write_ci(std::ostream& os, const CiResult& r, const CiConfig& cfg);

}  // namespace stratamix

#endif  // STRATAMIX_INTERVAL_HPP
