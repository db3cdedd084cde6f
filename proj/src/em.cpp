#include "stratamix/em.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "stratamix/errors.hpp"

namespace stratamix {

namespace {

constexpr double kWeightFloor = 1e-300;

void check_shapes(const LikelihoodMatrix& L, const MixingWeights& w) {
    if (static_cast<Eigen::Index>(w.size()) != L.n_cols())
        throw DomainError("mixing weights do not match the likelihood matrix columns");
}

// Row mixture densities (scaled) for weights w; throws on a zero row.
void mixture_densities(const LikelihoodMatrix& L, const Eigen::VectorXd& w, Eigen::VectorXd& f) {
    f.noalias() = L.scaled() * w;
    for (Eigen::Index i = 0; i < f.size(); ++i)
        if (!(f[i] > 0.0))
            throw NumericalUnderflow("mixture density of row " + std::to_string(i) + " is zero");
}

double log_lik_from(const LikelihoodMatrix& L, const Eigen::VectorXd& f) {
    const auto& c = L.multiplicity();
    return (c.array() * (f.array().log() + L.row_scale().array())).sum();
}

// Update w in place given its row densities f.
void update(const LikelihoodMatrix& L, const Eigen::VectorXd& f, Eigen::VectorXd& w,
            Eigen::VectorXd& ratio, Eigen::VectorXd& back) {
    ratio = L.multiplicity().array() / (f.array() * L.total());
    back.noalias() = L.scaled().transpose() * ratio;
    w.array() *= back.array();
    for (auto& v : w)
        if (v < kWeightFloor) v = 0.0;
    w /= w.sum();
}

}  // namespace

MixingWeights em_step(const LikelihoodMatrix& L, const MixingWeights& w) {
    check_shapes(L, w);
    Eigen::VectorXd f, ratio, back;
    Eigen::VectorXd next = w.values();
    mixture_densities(L, next, f);
    update(L, f, next, ratio, back);
    return MixingWeights::from_unnormalized(std::move(next));
}

double log_likelihood(const LikelihoodMatrix& L, const MixingWeights& w) {
    check_shapes(L, w);
    Eigen::VectorXd f;
    mixture_densities(L, w.values(), f);
    return log_lik_from(L, f);
}

EmResult fit_gmle(const LikelihoodMatrix& L, const EmConfig& cfg) {
    if (cfg.maxIter < 1) throw DomainError("EM needs maxIter >= 1");
    if (!(cfg.tol >= 0.0)) throw DomainError("EM tolerance must be >= 0");
    const auto J = static_cast<std::size_t>(L.n_cols());
    MixingWeights start = cfg.init ? *cfg.init : MixingWeights::uniform(J);
    check_shapes(L, start);

    Eigen::VectorXd w = start.values();
    Eigen::VectorXd f, ratio, back;
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(cfg.maxIter) + 1);

    mixture_densities(L, w, f);
    double ll = log_lik_from(L, f);
    trace.push_back(ll);
    bool stopped = false;
    int it = 0;
    while (it < cfg.maxIter) {
        update(L, f, w, ratio, back);
        ++it;
        mixture_densities(L, w, f);
        const double next = log_lik_from(L, f);
        trace.push_back(next);
        if (cfg.tol > 0.0 && next - ll < cfg.tol) {
            stopped = true;
            break;
        }
        ll = next;
    }
    return EmResult{MixingWeights::from_unnormalized(std::move(w)), std::move(trace), it,
                    cfg.tol > 0.0 ? stopped : true};
}

void write_trace(std::ostream& os, const EmResult& result) {
    os << "iteration\tloglik\n" << std::setprecision(12);
    for (std::size_t t = 0; t < result.logLikTrace.size(); ++t)
        os << t << '\t' << result.logLikTrace[t] << '\n';
}

}  // namespace stratamix
