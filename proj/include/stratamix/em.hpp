#ifndef STRATAMIX_EM_HPP
#define STRATAMIX_EM_HPP

#include <iosfwd>
#include <optional>
#include <vector>

#include "stratamix/mixture.hpp"

namespace stratamix {

struct EmConfig {
    int maxIter = 1000;
    /// Stop once the per-step log-likelihood gain drops below tol; 0 runs all iterations.
    double tol = 0.0;
    /// Starting weights; uniform over the grid when absent.
    std::optional<MixingWeights> init;
};

struct EmResult {
    MixingWeights weights;
    /// logLikTrace[t] is the log-likelihood of the t-th iterate; entry 0 is the start.
    std::vector<double> logLikTrace;
    int iterations = 0;
    bool converged = false;
};

/// One EM fixed-point update:
///   w'_j = (1/N) sum_i c_i L_ij w_j / sum_l L_il w_l
/// with c_i the row multiplicities and N = sum_i c_i. Weights below 1e-300
/// are set to zero before renormalizing.
MixingWeights em_step(const LikelihoodMatrix& L, const MixingWeights& w);

/// sum_i c_i log(sum_j L_ij w_j), row scaling reinstated.
double log_likelihood(const LikelihoodMatrix& L, const MixingWeights& w);

/// Runs em_step from cfg.init (uniform by default). The final weights are
/// a deterministic function of (L, cfg).
EmResult fit_gmle(const LikelihoodMatrix& L, const EmConfig& cfg = {});

/// Writes `iteration<TAB>loglik` rows with a header.
void write_trace(std::ostream& os, const EmResult& result);

}  // namespace stratamix

#endif  // STRATAMIX_EM_HPP
