#include "stratamix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "stratamix/errors.hpp"

namespace stratamix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Rows whose largest density is below this are treated as zero rows.
const double kLogDensityFloor = std::log(1e-300);

bool is_unit(double v) { return v >= 0.0 && v <= 1.0; }

// x * log(p) with the 0 * log(0) = 0 convention.
double xlogy(int x, double p) {
    if (x == 0) return 0.0;
    return p > 0.0 ? x * std::log(p) : kNegInf;
}

double log_choose(int n, int x) {
    return std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0);
}

}  // namespace

void validate(const Observation& y) {
    if (y.k < 0 || y.x < 0 || y.x > y.k)
        throw DomainError("invalid observation (x=" + std::to_string(y.x) +
                          ", k=" + std::to_string(y.k) + "): need 0 <= x <= k");
}

bool is_poisson(const Scenario& s) noexcept { return std::holds_alternative<PoissonSampleSize>(s); }

std::string to_string(const Scenario& s) {
    if (const auto* b = std::get_if<BinomialSampleSize>(&s))
        return "binomial(kappa=" + std::to_string(b->kappa) + ")";
    return "poisson";
}

void validate_for(const Observation& y, const Scenario& s) {
    validate(y);
    if (const auto* b = std::get_if<BinomialSampleSize>(&s); b && y.k > b->kappa)
        throw DomainError("observation k=" + std::to_string(y.k) + " exceeds kappa=" +
                          std::to_string(b->kappa));
}

ThetaPoint ThetaPoint::binomial(double pi, double p) {
    if (!is_unit(pi) || !is_unit(p)) throw DomainError("binomial support point needs pi, p in [0,1]");
    return ThetaPoint(pi, p, false);
}

ThetaPoint ThetaPoint::poisson(double xi1, double xi2) {
    if (!(xi1 >= 0.0) || !(xi2 >= 0.0) || !(xi1 + xi2 > 0.0) || !std::isfinite(xi1 + xi2))
        throw DomainError("poisson support point needs xi1, xi2 >= 0 with xi1 + xi2 > 0");
    return ThetaPoint(xi1, xi2, true);
}

SupportGrid::SupportGrid(Scenario scenario, std::vector<ThetaPoint> points, int n1, int n2)
    : scenario_(std::move(scenario)), points_(std::move(points)), n1_(n1), n2_(n2) {
    if (points_.empty()) throw DomainError("support grid is empty");
    if (const auto* b = std::get_if<BinomialSampleSize>(&scenario_); b && b->kappa < 1)
        throw DomainError("kappa must be positive");
    const bool poisson = is_poisson(scenario_);
    std::set<std::pair<double, double>> seen;
    for (const auto& pt : points_) {
        if (pt.is_poisson() != poisson) throw DomainError("support point does not match scenario");
        if (!seen.emplace(pt.coord1(), pt.coord2()).second)
            throw DomainError("support grid points must be distinct");
    }
    if (n1_ == 0 && n2_ == 0) {
        n1_ = static_cast<int>(points_.size());
        n2_ = 1;
    }
}

SupportGrid SupportGrid::product(const Scenario& scenario, std::span<const double> axis1,
                                 std::span<const double> axis2) {
    std::vector<ThetaPoint> pts;
    pts.reserve(axis1.size() * axis2.size());
    const bool poisson = is_poisson(scenario);
    for (double a : axis1)
        for (double b : axis2)
            pts.push_back(poisson ? ThetaPoint::poisson(a, b) : ThetaPoint::binomial(a, b));
    return SupportGrid(scenario, std::move(pts), static_cast<int>(axis1.size()),
                       static_cast<int>(axis2.size()));
}

Eigen::VectorXd SupportGrid::theta2() const {
    Eigen::VectorXd t(static_cast<Eigen::Index>(points_.size()));
    for (std::size_t j = 0; j < points_.size(); ++j) t[static_cast<Eigen::Index>(j)] = points_[j].theta2();
    return t;
}

MixingWeights::MixingWeights(Eigen::VectorXd w) {
    if (w.size() == 0) throw DomainError("mixing weights are empty");
    for (double v : w)
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("mixing weights must be finite and >= 0");
    const double s = w.sum();
    if (std::abs(s - 1.0) > 1e-8) throw DomainError("mixing weights must sum to 1");
    w_ = std::move(w) / s;
}

MixingWeights MixingWeights::from_unnormalized(Eigen::VectorXd w) {
    if (w.size() == 0) throw DomainError("mixing weights are empty");
    for (double v : w)
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("mixing weights must be finite and >= 0");
    const double s = w.sum();
    if (!(s > 0.0)) throw DomainError("mixing weights have no mass");
    return MixingWeights(w / s, Normalized{});
}

MixingWeights MixingWeights::uniform(std::size_t size) {
    if (size == 0) throw DomainError("mixing weights are empty");
    const auto n = static_cast<Eigen::Index>(size);
    return MixingWeights(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(size)), Normalized{});
}

MixingWeights MixingWeights::point_mass(std::size_t size, std::size_t at) {
    if (at >= size) throw DomainError("point mass index out of range");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
    w[static_cast<Eigen::Index>(at)] = 1.0;
    return MixingWeights(std::move(w), Normalized{});
}

OutcomeTable OutcomeTable::tabulate(std::span<const Observation> obs) {
    std::vector<Observation> sorted(obs.begin(), obs.end());
    for (const auto& y : sorted) validate(y);
    std::sort(sorted.begin(), sorted.end());
    OutcomeTable t;
    for (const auto& y : sorted) {
        if (t.outcomes.empty() || t.outcomes.back() != y) {
            t.outcomes.push_back(y);
            t.counts.push_back(0);
        }
        ++t.counts.back();
    }
    t.n = static_cast<long>(obs.size());
    return t;
}

std::optional<std::size_t> OutcomeTable::find(const Observation& y) const {
    auto it = std::lower_bound(outcomes.begin(), outcomes.end(), y);
    if (it == outcomes.end() || *it != y) return std::nullopt;
    return static_cast<std::size_t>(it - outcomes.begin());
}

LikelihoodMatrix::LikelihoodMatrix(Eigen::MatrixXd scaled, Eigen::VectorXd rowScale,
                                   Eigen::VectorXd multiplicity, std::vector<Observation> rows)
    : scaled_(std::move(scaled)),
      rowScale_(std::move(rowScale)),
      mult_(std::move(multiplicity)),
      obs_(std::move(rows)) {
    const auto n = scaled_.rows();
    if (rowScale_.size() != n || mult_.size() != n || static_cast<Eigen::Index>(obs_.size()) != n)
        throw DomainError("likelihood matrix parts have inconsistent row counts");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(mult_[i] > 0.0)) throw DomainError("row multiplicity must be positive");
        if (!std::isfinite(rowScale_[i])) throw ZeroLikelihoodRow(static_cast<std::size_t>(i));
        if (!(scaled_.row(i).maxCoeff() > 0.0)) throw ZeroLikelihoodRow(static_cast<std::size_t>(i));
    }
    if (!scaled_.allFinite() || (scaled_.array() < 0.0).any())
        throw DomainError("likelihood entries must be finite and >= 0");
    total_ = mult_.sum();
}

double LikelihoodMatrix::density(Eigen::Index i, Eigen::Index j) const {
    return scaled_(i, j) * std::exp(rowScale_[i]);
}

double log_binomial_pmf(int x, int n, double p) {
    if (n < 0 || x < 0 || x > n) throw DomainError("binomial_pmf needs 0 <= x <= n");
    if (!is_unit(p)) throw DomainError("binomial_pmf needs p in [0,1]");
    if (n == 0) return 0.0;
    if (p == 0.0) return x == 0 ? 0.0 : kNegInf;
    if (p == 1.0) return x == n ? 0.0 : kNegInf;
    return log_choose(n, x) + x * std::log(p) + (n - x) * std::log1p(-p);
}

double binomial_pmf(int x, int n, double p) { return std::exp(log_binomial_pmf(x, n, p)); }

double log_poisson_pmf(int k, double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("poisson_pmf needs lambda >= 0");
    if (k < 0) throw DomainError("poisson_pmf needs k >= 0");
    return xlogy(k, lambda) - lambda - std::lgamma(k + 1.0);
}

double poisson_pmf(int k, double lambda) { return std::exp(log_poisson_pmf(k, lambda)); }

double log_component_density(const Observation& y, const ThetaPoint& theta, const Scenario& s) {
    validate(y);
    if (const auto* b = std::get_if<BinomialSampleSize>(&s)) {
        if (y.k > b->kappa) return kNegInf;
        return log_binomial_pmf(y.k, b->kappa, theta.coord1()) +
               log_binomial_pmf(y.x, y.k, theta.coord2());
    }
    return log_poisson_pmf(y.x, theta.coord1()) + log_poisson_pmf(y.k - y.x, theta.coord2());
}

double component_density(const Observation& y, const ThetaPoint& theta, const Scenario& s) {
    return std::exp(log_component_density(y, theta, s));
}

namespace {

LikelihoodMatrix build_rows(std::span<const Observation> rows, Eigen::VectorXd multiplicity,
                            const SupportGrid& grid) {
    if (rows.empty()) throw EmptyData("no observations");
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto J = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd scaled(n, J);
    Eigen::VectorXd scale(n);
    Eigen::VectorXd logRow(J);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Observation& y = rows[static_cast<std::size_t>(i)];
        validate_for(y, grid.scenario());
        for (Eigen::Index j = 0; j < J; ++j)
            logRow[j] = log_component_density(y, grid[static_cast<std::size_t>(j)], grid.scenario());
        const double m = logRow.maxCoeff();
        if (!(m > kLogDensityFloor)) throw ZeroLikelihoodRow(static_cast<std::size_t>(i));
        scale[i] = m;
        scaled.row(i) = (logRow.array() - m).exp().matrix().transpose();
    }
    return LikelihoodMatrix(std::move(scaled), std::move(scale), std::move(multiplicity),
                            std::vector<Observation>(rows.begin(), rows.end()));
}

}  // namespace

LikelihoodMatrix build_likelihood_matrix(std::span<const Observation> obs, const SupportGrid& grid) {
    return build_rows(obs, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(obs.size())), grid);
}

LikelihoodMatrix build_likelihood_matrix(const OutcomeTable& table, const SupportGrid& grid) {
    Eigen::VectorXd mult(static_cast<Eigen::Index>(table.size()));
    for (std::size_t i = 0; i < table.size(); ++i)
        mult[static_cast<Eigen::Index>(i)] = static_cast<double>(table.counts[i]);
    return build_rows(table.outcomes, std::move(mult), grid);
}

std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 1) throw DomainError("linspace needs at least one point");
    std::vector<double> v(static_cast<std::size_t>(count));
    if (count == 1) {
        v[0] = lo;
        return v;
    }
    const double step = (hi - lo) / (count - 1);
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = lo + step * i;
    v.back() = hi;
    return v;
}

SupportGrid default_grid(const Scenario& scenario, std::span<const Observation> obs,
                         const GridSpec& spec) {
    if (spec.n1 < 2 || spec.n2 < 2) throw DomainError("grid dimensions must each be >= 2");
    if (is_poisson(scenario)) {
        constexpr double kDelta = 0.01;
        constexpr double kSpan = 1.0;
        const bool explicitRange = spec.t1min && spec.t1max && spec.t2min && spec.t2max;
        if (obs.empty() && !explicitRange) throw EmptyData("no observations to size the grid");
        int maxK = 0;
        for (const auto& y : obs) maxK = std::max(maxK, y.k);
        // All-empty data still needs a nondegenerate range.
        const double top = maxK > 0 ? kSpan * maxK : 1.0;
        const double lo1 = spec.t1min.value_or(kDelta), hi1 = spec.t1max.value_or(top);
        const double lo2 = spec.t2min.value_or(kDelta), hi2 = spec.t2max.value_or(top);
        if (!(lo1 >= 0.0 && lo2 >= 0.0 && hi1 > lo1 && hi2 > lo2))
            throw DomainError("poisson grid range must satisfy 0 <= min < max");
        const auto a1 = linspace(lo1, hi1, spec.n1);
        const auto a2 = linspace(lo2, hi2, spec.n2);
        return SupportGrid::product(scenario, a1, a2);
    }
    constexpr double kInset = 0.025;
    const double lo1 = spec.t1min.value_or(0.0), hi1 = spec.t1max.value_or(1.0);
    const double lo2 = spec.t2min.value_or(0.0), hi2 = spec.t2max.value_or(1.0);
    if (!(0.0 <= lo1 && lo1 < hi1 && hi1 <= 1.0 && 0.0 <= lo2 && lo2 < hi2 && hi2 <= 1.0))
        throw DomainError("binomial grid range must lie in [0,1] with min < max");
    const double w1 = hi1 - lo1, w2 = hi2 - lo2;
    const auto a1 = linspace(lo1 + kInset * w1, hi1 - kInset * w1, spec.n1);
    const auto a2 = linspace(lo2 + kInset * w2, hi2 - kInset * w2, spec.n2);
    return SupportGrid::product(scenario, a1, a2);
}

}  // namespace stratamix
