#ifndef STRATAMIX_MIXTURE_HPP
#define STRATAMIX_MIXTURE_HPP

// Core domain types for the stratum mixture model: observations, the two
// sample-size scenarios, grid support points, mixing weights and the
// likelihood matrix consumed by the EM solver and all estimators.

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace stratamix {

/// One stratum's realized sample: x successes out of k responses.
struct Observation {
    int x = 0;
    int k = 0;

    friend bool operator==(const Observation&, const Observation&) = default;
    friend auto operator<=>(const Observation& a, const Observation& b) {
        if (auto c = a.k <=> b.k; c != 0) return c;
        return a.x <=> b.x;
    }
};

/// Throws DomainError unless 0 <= x <= k.
void validate(const Observation& y);

/// K ~ Binomial(kappa, pi): stratified sampling with non-response.
struct BinomialSampleSize {
    int kappa = 1;
};

/// K ~ Poisson(lambda): post-stratification.
struct PoissonSampleSize {};

using Scenario = std::variant<BinomialSampleSize, PoissonSampleSize>;

bool is_poisson(const Scenario& s) noexcept;
std::string to_string(const Scenario& s);

/// Throws DomainError if y is impossible under the scenario (k > kappa).
void validate_for(const Observation& y, const Scenario& s);

/// Support point of the mixing distribution.
///
/// Binomial points are stored as (pi, p). Poisson points are stored in the
/// two-Poisson coordinates (xi1, xi2) = (p * lambda, (1 - p) * lambda); the
/// derived (lambda, p) are what theta1()/theta2() report.
class ThetaPoint {
public:
    static ThetaPoint binomial(double pi, double p);
    static ThetaPoint poisson(double xi1, double xi2);

    bool is_poisson() const noexcept { return poisson_; }

    /// Raw stored coordinates: (pi, p) or (xi1, xi2).
    double coord1() const noexcept { return c1_; }
    double coord2() const noexcept { return c2_; }

    /// Response probability pi, or Poisson rate lambda = xi1 + xi2.
    double theta1() const noexcept { return poisson_ ? c1_ + c2_ : c1_; }
    /// Success probability p (xi1 / (xi1 + xi2) for Poisson points).
    double theta2() const noexcept { return poisson_ ? c1_ / (c1_ + c2_) : c2_; }

    friend bool operator==(const ThetaPoint&, const ThetaPoint&) = default;

private:
    ThetaPoint(double c1, double c2, bool poisson) : c1_(c1), c2_(c2), poisson_(poisson) {}

    double c1_;
    double c2_;
    bool poisson_;
};

/// Grid dimensions and optional range overrides (coordinate units of the
/// scenario: (pi, p) for Binomial, (xi1, xi2) for Poisson).
struct GridSpec {
    int n1 = 40;
    int n2 = 40;
    std::optional<double> t1min, t1max, t2min, t2max;
};

/// Finite support for the mixing distribution.
class SupportGrid {
public:
    /// Points must be distinct and valid for the scenario.
    SupportGrid(Scenario scenario, std::vector<ThetaPoint> points, int n1 = 0, int n2 = 0);

    /// Product grid; index j = a * axis2.size() + b.
    static SupportGrid product(const Scenario& scenario, std::span<const double> axis1,
                               std::span<const double> axis2);

    const Scenario& scenario() const noexcept { return scenario_; }
    std::span<const ThetaPoint> points() const noexcept { return points_; }
    const ThetaPoint& operator[](std::size_t j) const { return points_[j]; }
    std::size_t size() const noexcept { return points_.size(); }
    int n1() const noexcept { return n1_; }
    int n2() const noexcept { return n2_; }

    /// Vector of theta2 (success probability) over the points.
    Eigen::VectorXd theta2() const;

private:
    Scenario scenario_;
    std::vector<ThetaPoint> points_;
    int n1_;
    int n2_;
};

/// Probability vector over grid points.
class MixingWeights {
public:
    /// Requires finite nonnegative entries summing to 1 within 1e-8;
    /// the stored vector is renormalized exactly.
    explicit MixingWeights(Eigen::VectorXd w);

    /// Any nonnegative vector with positive mass, scaled onto the simplex.
    static MixingWeights from_unnormalized(Eigen::VectorXd w);
    static MixingWeights uniform(std::size_t size);
    static MixingWeights point_mass(std::size_t size, std::size_t at);

    const Eigen::VectorXd& values() const noexcept { return w_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(w_.size()); }
    double operator[](std::size_t j) const { return w_[static_cast<Eigen::Index>(j)]; }

private:
    struct Normalized {};
    MixingWeights(Eigen::VectorXd w, Normalized) : w_(std::move(w)) {}

    Eigen::VectorXd w_;
};

/// Distinct outcomes with their multiplicities, sorted by (k, x).
struct OutcomeTable {
    std::vector<Observation> outcomes;
    std::vector<long> counts;
    long n = 0;

    static OutcomeTable tabulate(std::span<const Observation> obs);

    std::size_t size() const noexcept { return outcomes.size(); }
    /// Position of y in outcomes, or nullopt.
    std::optional<std::size_t> find(const Observation& y) const;
};

/// Component densities f(y_i | theta_j), stored row-rescaled.
///
/// Entry (i, j) of the true matrix is scaled()(i, j) * exp(row_scale()[i]);
/// each stored row has maximum 1. Row i stands for multiplicity()[i]
/// identical observations, so a matrix built from an OutcomeTable is an
/// exact compression of the per-stratum matrix.
class LikelihoodMatrix {
public:
    LikelihoodMatrix(Eigen::MatrixXd scaled, Eigen::VectorXd rowScale, Eigen::VectorXd multiplicity,
                     std::vector<Observation> rows);

    const Eigen::MatrixXd& scaled() const noexcept { return scaled_; }
    const Eigen::VectorXd& row_scale() const noexcept { return rowScale_; }
    const Eigen::VectorXd& multiplicity() const noexcept { return mult_; }
    std::span<const Observation> rows() const noexcept { return obs_; }

    Eigen::Index n_rows() const noexcept { return scaled_.rows(); }
    Eigen::Index n_cols() const noexcept { return scaled_.cols(); }
    /// Total number of observations represented (sum of multiplicities).
    double total() const noexcept { return total_; }

    /// Unscaled density f(y_i | theta_j).
    double density(Eigen::Index i, Eigen::Index j) const;

private:
    Eigen::MatrixXd scaled_;
    Eigen::VectorXd rowScale_;
    Eigen::VectorXd mult_;
    std::vector<Observation> obs_;
    double total_;
};

double log_binomial_pmf(int x, int n, double p);
/// C(n, x) p^x (1-p)^(n-x) with 0^0 = 1.
double binomial_pmf(int x, int n, double p);

double log_poisson_pmf(int k, double lambda);
/// e^{-lambda} lambda^k / k! with poisson_pmf(0, 0) = 1.
double poisson_pmf(int k, double lambda);

double log_component_density(const Observation& y, const ThetaPoint& theta, const Scenario& s);
/// f(y | theta): Binomial(k; kappa, pi) * Binomial(x; k, p), or the
/// product of independent Poissons Poisson(x; xi1) * Poisson(k - x; xi2).
double component_density(const Observation& y, const ThetaPoint& theta, const Scenario& s);

/// Per-stratum likelihood matrix (one row per observation, multiplicity 1).
LikelihoodMatrix build_likelihood_matrix(std::span<const Observation> obs, const SupportGrid& grid);

/// Compressed matrix: one row per distinct outcome, weighted by its count.
LikelihoodMatrix build_likelihood_matrix(const OutcomeTable& table, const SupportGrid& grid);

/// Equally spaced product grid. Binomial: (pi, p) box, default [0, 1]^2,
/// with points inset 2.5% of the width from each edge. Poisson: xi1 and xi2
/// each from 0.01 to max_i K_i (endpoints included).
SupportGrid default_grid(const Scenario& scenario, std::span<const Observation> obs,
                         const GridSpec& spec);

/// Equally spaced points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, int count);

}  // namespace stratamix

#endif  // STRATAMIX_MIXTURE_HPP
