#include "stratamix/interval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include <boost/math/distributions/chi_squared.hpp>

#include "stratamix/em.hpp"
#include "stratamix/errors.hpp"

namespace stratamix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Deviance in terms of the scaled outcome likelihoods:
//   D(w) = constant - 2 sum_y n_y log((A w)_y).
class DevianceModel {
public:
    DevianceModel(const OutcomeTable& table, const SupportGrid& grid)
        : L_(build_likelihood_matrix(table, grid)) {
        const auto& n = L_.multiplicity();
        const double total = static_cast<double>(table.n);
        constant_ = 0.0;
        for (Eigen::Index y = 0; y < n.size(); ++y)
            constant_ += 2.0 * n[y] * (std::log(n[y] / total) - L_.row_scale()[y]);
    }

    const Eigen::MatrixXd& A() const { return L_.scaled(); }
    const Eigen::VectorXd& counts() const { return L_.multiplicity(); }
    Eigen::Index cols() const { return L_.n_cols(); }
    Eigen::Index rows() const { return L_.n_rows(); }

    /// Deviance at w; +inf when some outcome has zero probability. Fills q.
    double value(const Eigen::VectorXd& w, Eigen::VectorXd& q) const {
        q.noalias() = A() * w;
        double s = 0.0;
        for (Eigen::Index y = 0; y < q.size(); ++y) {
            if (!(q[y] > 0.0)) return kInf;
            s += counts()[y] * std::log(q[y]);
        }
        return constant_ - 2.0 * s;
    }

    double value(const Eigen::VectorXd& w) const {
        Eigen::VectorXd q;
        return value(w, q);
    }

private:
    LikelihoodMatrix L_;
    double constant_;
};

// Log-barrier method on the simplex {w > 0, sum w = 1}.
//
// Bound problem:   minimize  tau * a'w - sum log w_j - J log(c - D(w))
// Phase one:       minimize  tau * D(w) - sum log w_j
//
// The constraint barrier carries weight J so it is not swamped by the J
// weight barriers; the duality gap on the central path is then 2J / tau.
//
// The Hessian is diag(1/w^2) plus a rank-(M or M+1) term; Newton systems are
// solved in the scaled variables w .* z, where the scaled Hessian is
// I + U S U' with U = diag(w) [A' | grad D]; a thin SVD of U S^{1/2} keeps
// the solve accurate as the barrier terms grow.
class BarrierSolver {
public:
    BarrierSolver(const DevianceModel& model, const Eigen::VectorXd* linear, double c)
        : m_(model), a_(linear), c_(c), beta_(static_cast<double>(model.cols())) {}

    bool phase_one() const { return a_ == nullptr; }

    /// Runs damped Newton to the central point for tau. Returns the
    /// remaining Newton decrement squared.
    double center(Eigen::VectorXd& w, double tau) const {
        Eigen::VectorXd g, dir, q0, adir;
        double dec2 = kInf;
        for (int it = 0; it < 500; ++it) {
            dec2 = newton(w, tau, g, dir);
            if (!(dec2 > 1e-14)) break;
            const double slope = g.dot(dir);
            if (!(slope < 0.0)) break;
            double step = 1.0;
            for (Eigen::Index j = 0; j < w.size(); ++j)
                if (dir[j] < 0.0) step = std::min(step, -0.99 * w[j] / dir[j]);
            const double D0 = m_.value(w, q0);
            adir.noalias() = m_.A() * dir;
            bool moved = false;
            while (step > 1e-18) {
                const double d = change(w, dir, q0, adir, c_ - D0, step, tau);
                if (d <= 0.25 * step * slope) {
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
            w += step * dir;
        }
        return dec2;
    }

private:
    // phi(w + step * dir) - phi(w), evaluated without cancellation; +inf
    // when the trial point leaves the domain.
    double change(const Eigen::VectorXd& w, const Eigen::VectorXd& dir, const Eigen::VectorXd& q0,
                  const Eigen::VectorXd& adir, double r0, double step, double tau) const {
        double logW = 0.0;
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            const double t = step * dir[j] / w[j];
            if (!(t > -1.0)) return kInf;
            logW += std::log1p(t);
        }
        double dD = 0.0;
        for (Eigen::Index y = 0; y < q0.size(); ++y) {
            const double t = step * adir[y] / q0[y];
            if (!(t > -1.0)) return kInf;
            dD -= 2.0 * m_.counts()[y] * std::log1p(t);
        }
        if (phase_one()) return tau * dD - logW;
        const double t = -dD / r0;
        if (!(t > -1.0)) return kInf;
        return tau * step * a_->dot(dir) - logW - beta_ * std::log1p(t);
    }

    // Newton direction for phi at w, constrained to sum(dir) = 0.
    double newton(const Eigen::VectorXd& w, double tau, Eigen::VectorXd& g, Eigen::VectorXd& dir) const {
        const Eigen::Index J = w.size();
        const Eigen::Index M = m_.rows();
        const double D = m_.value(w, q_);
        const Eigen::VectorXd nq = m_.counts().array() / q_.array();
        const Eigen::VectorXd gradD = -2.0 * (m_.A().transpose() * nq);
        const Eigen::ArrayXd nq2 = m_.counts().array() / q_.array().square();

        const bool rankOne = !phase_one();
        const Eigen::Index k = M + (rankOne ? 1 : 0);
        Eigen::MatrixXd U(J, k);
        Eigen::VectorXd s(k);
        U.leftCols(M) = w.asDiagonal() * m_.A().transpose();
        if (phase_one()) {
            g = tau * gradD - w.cwiseInverse();
            s.head(M) = 2.0 * tau * nq2;
        } else {
            const double r = c_ - D;
            g = tau * (*a_) - w.cwiseInverse() + (beta_ / r) * gradD;
            s.head(M) = 2.0 * beta_ * nq2 / r;
            U.col(M) = w.cwiseProduct(gradD);
            s[M] = beta_ / (r * r);
        }

        // Solve (I + V V') z = W v for v in {g, 1}, V = U S^{1/2}, x = W z.
        // With V = Q Sigma P' (thin SVD), the inverse is
        // I - Q diag(sigma^2 / (1 + sigma^2)) Q'.
        Eigen::MatrixXd rhs(J, 2);
        rhs.col(0) = w.cwiseProduct(g);
        rhs.col(1) = w;
        const Eigen::MatrixXd V = U * s.cwiseSqrt().asDiagonal();
        const Eigen::BDCSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU);
        const Eigen::MatrixXd& Q = svd.matrixU();
        const Eigen::ArrayXd sig2 = svd.singularValues().array().square();
        const Eigen::VectorXd shrink = (sig2 / (1.0 + sig2)).matrix();
        const Eigen::MatrixXd z = rhs - Q * (shrink.asDiagonal() * (Q.transpose() * rhs));
        const Eigen::VectorXd x1 = w.cwiseProduct(z.col(0));
        const Eigen::VectorXd x2 = w.cwiseProduct(z.col(1));
        const double nu = -x1.sum() / x2.sum();
        dir = -(x1 + nu * x2);
        // Remove rounding drift off the affine constraint.
        dir.array() -= dir.sum() / static_cast<double>(J);
        return -g.dot(dir);
    }

    const DevianceModel& m_;
    const Eigen::VectorXd* a_;
    double c_;
    double beta_;
    mutable Eigen::VectorXd q_;
};

// Finds w > 0 on the simplex with D(w) < c, starting near `start`.
Eigen::VectorXd strictly_feasible(const DevianceModel& model, const Eigen::VectorXd& start, double c) {
    const auto J = start.size();
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(J, 1.0 / static_cast<double>(J));
    for (double eps : {1e-3, 1e-6, 1e-9}) {
        Eigen::VectorXd w = (1.0 - eps) * start + eps * uniform;
        if (model.value(w) < c) return w;
    }
    Eigen::VectorXd w = 0.5 * start + 0.5 * uniform;
    const BarrierSolver phase1(model, nullptr, c);
    const double scale = std::max(1.0, std::abs(c));
    for (double tau = 1.0; tau < 1e16; tau *= 10.0) {
        phase1.center(w, tau);
        const double D = model.value(w);
        if (D < c) return w;
        // On the central path min D >= D - J / tau.
        if (D - static_cast<double>(J) / tau > c)
            throw InfeasibleConstraint("minimum deviance over the grid exceeds the threshold " +
                                       std::to_string(c));
        if (static_cast<double>(J) / tau < 1e-10 * scale) break;
    }
    throw InfeasibleConstraint("no grid mixture has deviance strictly below the threshold " +
                               std::to_string(c));
}

// Minimizes a'w over the feasible set from a strictly feasible w.
Eigen::VectorXd minimize_linear(const DevianceModel& model, const Eigen::VectorXd& a, double c,
                                Eigen::VectorXd w, double objectiveTol) {
    const BarrierSolver solver(model, &a, c);
    const double m = 2.0 * static_cast<double>(w.size());
    double tau = 1.0;
    while (true) {
        solver.center(w, tau);
        if (m / tau <= 0.5 * objectiveTol) break;
        tau *= 10.0;
    }
    return w;
}

}  // namespace

std::string to_string(ConstraintMode m) { return m == ConstraintMode::ChiSquare ? "chi2" : "logpower"; }

ConstraintMode parse_constraint_mode(const std::string& s) {
    if (s == "chi2") return ConstraintMode::ChiSquare;
    if (s == "logpower") return ConstraintMode::LogPower;
    throw DomainError("unknown constraint mode '" + s + "' (expected chi2 or logpower)");
}

double deviance(const OutcomeTable& table, const SupportGrid& grid, const MixingWeights& w) {
    if (w.size() != grid.size()) throw DomainError("mixing weights do not match the grid size");
    if (table.n == 0) throw EmptyData("empty outcome table");
    const double total = static_cast<double>(table.n);
    double d = 0.0;
    for (std::size_t y = 0; y < table.size(); ++y) {
        double q = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j)
            if (w[j] > 0.0) q += component_density(table.outcomes[y], grid[j], grid.scenario()) * w[j];
        if (!(q > 0.0)) throw NumericalUnderflow("outcome has zero probability under the mixture");
        const double ny = static_cast<double>(table.counts[y]);
        d += 2.0 * ny * std::log(ny / total / q);
    }
    return d;
}

double deviance_threshold(const OutcomeTable& table, const CiConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    if (cfg.mode == ConstraintMode::LogPower) {
        if (!(cfg.alphaExp > 0.0)) throw DomainError("alpha-exp must be positive");
        return std::pow(std::log(static_cast<double>(table.n)), 1.0 + cfg.alphaExp);
    }
    const int df = std::max<int>(static_cast<int>(table.size()) - 1, 1);
    return boost::math::quantile(boost::math::chi_squared(df), 1.0 - cfg.alpha);
}

CiResult ci_bounds(const OutcomeTable& table, const SupportGrid& grid, const CiConfig& cfg,
                   const std::optional<MixingWeights>& gmle) {
    if (table.n == 0) throw EmptyData("empty outcome table");
    if (!(cfg.objectiveTol > 0.0)) throw DomainError("objective tolerance must be positive");
    for (const auto& y : table.outcomes) validate_for(y, grid.scenario());
    const double c = deviance_threshold(table, cfg);
    const int df = std::max<int>(static_cast<int>(table.size()) - 1, 1);

    const DevianceModel model(table, grid);
    MixingWeights start = gmle ? *gmle : [&] {
        const LikelihoodMatrix L = build_likelihood_matrix(table, grid);
        return fit_gmle(L).weights;
    }();
    if (start.size() != grid.size()) throw DomainError("start weights do not match the grid size");

    const Eigen::VectorXd theta2 = grid.theta2();
    const double startDev = model.value(start.values());
    const double plugin = start.values().dot(theta2);

    if (grid.size() == 1) {
        if (!(startDev <= c)) throw InfeasibleConstraint("single grid point violates the threshold");
        return CiResult{theta2[0], theta2[0], c, df, startDev, plugin, start, start};
    }

    const Eigen::VectorXd w0 = strictly_feasible(model, start.values(), c);
    const Eigen::VectorXd lowW = minimize_linear(model, theta2, c, w0, cfg.objectiveTol);
    const Eigen::VectorXd negTheta = -theta2;
    const Eigen::VectorXd highW = minimize_linear(model, negTheta, c, w0, cfg.objectiveTol);

    double lower = lowW.dot(theta2);
    double upper = highW.dot(theta2);
    MixingWeights lowMix = MixingWeights::from_unnormalized(lowW.cwiseMax(0.0));
    MixingWeights highMix = MixingWeights::from_unnormalized(highW.cwiseMax(0.0));
    // The start point is itself feasible; keep it if it is the better witness.
    if (startDev <= c) {
        if (plugin < lower) {
            lower = plugin;
            lowMix = start;
        }
        if (plugin > upper) {
            upper = plugin;
            highMix = start;
        }
    }
    return CiResult{lower, upper, c, df, startDev, plugin, std::move(lowMix), std::move(highMix)};
}

void write_ci(std::ostream& os, const CiResult& r, const CiConfig& cfg) {
    os << "lower\tupper\talpha\tmode\tdeviance_at_gmle\tgmle_plugin\tthreshold\n" << std::setprecision(12);
    os << r.lower << '\t' << r.upper << '\t' << cfg.alpha << '\t' << to_string(cfg.mode) << '\t'
       << r.devianceAtGmle << '\t' << r.gmlePlugin << '\t' << r.threshold << '\n';
}

}  // namespace stratamix
