#ifndef STRATAMIX_ESTIMATORS_HPP
#define STRATAMIX_ESTIMATORS_HPP

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "stratamix/em.hpp"
#include "stratamix/mixture.hpp"

namespace stratamix {

/// Function of a support point; theta2 is the default target.
using Functional = std::function<double(const ThetaPoint&)>;

/// (1/m) sum over strata with k > 0 of x/k. Throws AllStrataEmpty if m = 0.
double naive_estimator(std::span<const Observation> obs);

/// sum x / sum k. Throws AllStrataEmpty if sum k = 0.
double extreme_collapse(std::span<const Observation> obs);

/// E_w theta2 = sum_j w_j theta2_j.
double gmle_plugin(const SupportGrid& grid, const MixingWeights& w);
double gmle_plugin(const SupportGrid& grid, const MixingWeights& w, const Functional& eta);

/// Posterior mean of theta2 given y, with likelihoodRow[j] proportional to
/// f(y | theta_j). The observation only selects the row; it is not re-read.
double posterior_mean(const Observation& y, const SupportGrid& grid, const MixingWeights& w,
                      std::span<const double> likelihoodRow);
double posterior_mean(const Observation& y, const SupportGrid& grid, const MixingWeights& w,
                      std::span<const double> likelihoodRow, const Functional& eta);

/// Posterior mean of theta2 for an empty stratum, y = (0, 0).
double empty_stratum_posterior(const SupportGrid& grid, const MixingWeights& w);

/// (1/n)[sum_{k>0} x/k + sum_{k=0} E(theta2 | K = 0)].
double psi_star_estimator(std::span<const Observation> obs, const SupportGrid& grid,
                          const MixingWeights& w);

/// Row-wise posterior means of theta2 over the rows of L.
std::vector<double> row_posterior_means(const LikelihoodMatrix& L, const SupportGrid& grid,
                                        const MixingWeights& w);

/// |gmle_plugin - mean posterior mean| over all observations represented by L.
/// Vanishes (to rounding) when w is an EM fixed point.
double agreement_check(const SupportGrid& grid, const MixingWeights& w, const LikelihoodMatrix& L);

struct EstimateReport {
    std::optional<double> naive;
    std::optional<double> extremeCollapse;
    double gmlePlugin = 0.0;
    double psiStar = 0.0;
    std::vector<double> posteriorMeans;  ///< one per stratum, input order
    int mZero = 0;                       ///< strata with k = 0
    double agreement = 0.0;              ///< agreement_check at the fitted weights
    int iterations = 0;
    double finalLogLik = 0.0;
};

/// Everything produced by one fit of the estimation pipeline.
struct FitResult {
    SupportGrid grid;
    OutcomeTable table;
    LikelihoodMatrix likelihood;  ///< compressed, one row per distinct outcome
    EmResult em;
    EstimateReport report;
};

/// Grid construction, compressed likelihood, EM and every estimator.
FitResult fit_pipeline(std::span<const Observation> obs, const Scenario& scenario,
                       const GridSpec& gridSpec, const EmConfig& emCfg = {});

/// Same, on a caller-supplied grid.
FitResult fit_pipeline(std::span<const Observation> obs, const SupportGrid& grid,
                       const EmConfig& emCfg = {});

/// Builds the report from a fitted EM result.
EstimateReport make_report(std::span<const Observation> obs, const SupportGrid& grid,
                           const OutcomeTable& table, const LikelihoodMatrix& L, const EmResult& em);

/// estimates.tsv: `estimator<TAB>value`; an absent naive estimate prints as "NA".
void write_estimates(std::ostream& os, const EstimateReport& r);
/// posteriors.tsv: `stratum<TAB>x<TAB>k<TAB>posterior_mean`.
void write_posteriors(std::ostream& os, std::span<const Observation> obs, const EstimateReport& r);
/// weights.tsv: grid coordinates and weight, rows below minWeight omitted.
void write_weights(std::ostream& os, const SupportGrid& grid, const MixingWeights& w,
                   double minWeight = 1e-12);

}  // namespace stratamix

#endif  // STRATAMIX_ESTIMATORS_HPP
