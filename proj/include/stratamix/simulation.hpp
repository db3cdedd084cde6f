#ifndef STRATAMIX_SIMULATION_HPP
#define STRATAMIX_SIMULATION_HPP

// Replicated simulation designs with two (or more) strata types, the
// built-in presets for the published tables, and sample thinning.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stratamix/em.hpp"
#include "stratamix/mixture.hpp"
#include "stratamix/threshold.hpp"

namespace stratamix {

/// Point mass or uniform law for one latent coordinate.
struct Law {
    enum class Kind { PointMass, Uniform };
    Kind kind = Kind::PointMass;
    double lo = 0.0;
    double hi = 0.0;

    static Law point(double v) { return {Kind::PointMass, v, v}; }
    static Law uniform(double lo, double hi);
    /// "v" for a point mass, "lo..hi" for a uniform.
    static Law parse(const std::string& text);

    double mean() const noexcept { return kind == Kind::PointMass ? lo : 0.5 * (lo + hi); }
    std::string to_string() const;
};

struct StrataGroup {
    int count = 0;
    Law theta1;  ///< pi (Binomial) or lambda (Poisson)
    Law theta2;  ///< p
};

struct StrataDesign {
    Scenario scenario = PoissonSampleSize{};
    std::vector<StrataGroup> groups;

    int strata() const noexcept;
    /// Count-weighted mean of theta2 over groups.
    double true_p() const;
    /// Throws DomainError on empty groups, bad bounds or out-of-range laws.
    void validate() const;
};

/// Presets t1r1..t1r3, t2r1..t2r3, t3r1..t3r3, t4k1..t4k5.
StrataDesign preset_design(const std::string& name);
std::vector<std::string> preset_names();

/// JSON design: {"scenario": "poisson"|"binomial", "kappa": 4,
///  "groups": [{"count": 500, "theta1": "0.5..1", "theta2": "0.4"}, ...]}.
StrataDesign parse_design(const std::string& jsonText);

/// One dataset; stratum i draws from its own stream derived from seed.
std::vector<Observation> draw_dataset(const StrataDesign& design, std::uint64_t seed);

struct ReplicateEstimates {
    std::optional<double> naive;
    std::optional<double> extremeCollapse;
    double gmlePlugin = 0.0;
    double psiStar = 0.0;
    double agreement = 0.0;
    int mZero = 0;
};

struct EstimatorSummary {
    std::string name;
    double mean = 0.0;
    std::optional<double> sd;  ///< sample sd, absent below two values
    int count = 0;             ///< replicates where the estimator was defined
};

struct SimSummary {
    std::vector<EstimatorSummary> estimators;  ///< naive, extreme_collapse, gmle, psi_star
    int reps = 0;
    std::uint64_t seed = 0;
    double trueP = 0.0;
    double meanAbsPsiGmle = 0.0;  ///< mean |psi_star - gmle| over replicates
    std::vector<ReplicateEstimates> replicates;

    const EstimatorSummary& get(const std::string& name) const;
};

/// Seed of replicate r's dataset.
std::uint64_t replicate_seed(std::uint64_t master, int r) noexcept;

/// Fits every replicate with the full pipeline. Identical inputs give
/// identical summaries for any thread count.
SimSummary run_replications(const StrataDesign& design, int reps, const EmConfig& emCfg,
                            const GridSpec& gridSpec, std::uint64_t seed, int threads = 1);

/// summary.tsv: `estimator<TAB>mean<TAB>sd<TAB>reps<TAB>true_p`.
void write_summary(std::ostream& os, const SimSummary& s);

/// Keeps each sampled unit independently with probability gamma:
/// x' ~ Bin(x, gamma) and (k - x)' ~ Bin(k - x, gamma), which is the same law
/// as k' ~ Bin(k, gamma) followed by a hypergeometric x'.
std::vector<Observation> thin_dataset(std::span<const Observation> obs, double gamma, std::uint64_t seed);

/// Unit-level thinning of raw strata; weights and empty strata are kept.
std::vector<GeneralStratum> thin_strata(std::span<const GeneralStratum> strata, double gamma,
                                        std::uint64_t seed);

}  // namespace stratamix

#endif  // STRATAMIX_SIMULATION_HPP
