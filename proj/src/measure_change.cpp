#include "mbp/measure_change.hpp"

#include <cmath>
#include <stdexcept>

#include "mbp/chaos.hpp"

namespace mbp {

void TargetMeasure::validate(const ModelParams& source) const {
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("target lambda must lie in (0,1)");
    if (Q.size() != source.marks.size()) throw std::invalid_argument("target Q must have one entry per mark");
    double s = 0.0;
    for (double q : Q) {
        if (!(q > 0.0)) throw std::invalid_argument("target Q entries must be > 0");
        s += q;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("target Q must sum to 1");
}

ModelParams TargetMeasure::apply_to(const ModelParams& source) const {
    validate(source);
    ModelParams p = source;
    p.lambda = lambda;
    p.Q = Q;
    return p;
}

namespace {
// log of the per-step density factor for each digit
std::vector<double> log_factors(const ModelParams& params, const TargetMeasure& target) {
    target.validate(params);
    const ModelParams tp = target.apply_to(params);
    std::vector<double> f(static_cast<std::size_t>(params.num_marks() + 1));
    for (int d = 0; d <= params.num_marks(); ++d) f[d] = std::log(tp.step_prob(d)) - std::log(params.step_prob(d));
    return f;
}
}  // namespace

Kernel girsanov_drift(const ModelParams& params, const TargetMeasure& target) {
    const ModelParams tp = target.apply_to(params);
    const double c = (1.0 - tp.lambda) / (1.0 - params.lambda);
    Kernel g;
    for (int t = 1; t <= params.T; ++t)
        for (int k = 0; k < params.num_marks(); ++k) g[{Point{t, k}}] = tp.intensity(k) / params.intensity(k) - c;
    return g;
}

Kernel girsanov_drift_r(const OrthogonalBasis& basis, const ModelParams& params, const TargetMeasure& target) {
    return convert_coeffs_Z_to_R(basis, girsanov_drift(params, target));
}

PathFunctional girsanov_density(const SpacePtr& space, const TargetMeasure& target, int t) {
    if (t < 0 || t > space->horizon()) throw std::out_of_range("girsanov_density: t out of range");
    const auto lf = log_factors(space->params(), target);
    std::vector<double> out(space->size());
    for (std::size_t w = 0; w < out.size(); ++w) {
        double s = 0.0;
        for (int u = 1; u <= t; ++u) s += lf[space->digit(w, u)];
        out[w] = std::exp(s);
    }
    return {space, std::move(out)};
}

double girsanov_density(const ModelParams& params, const TargetMeasure& target, const Configuration& w, int t) {
    if (t < 0 || t > params.T) throw std::out_of_range("girsanov_density: t out of range");
    const auto lf = log_factors(params, target);
    double s = 0.0;
    for (int u = 1; u <= t; ++u) s += lf[w.digits[static_cast<std::size_t>(u - 1)]];
    return std::exp(s);
}

std::vector<double> girsanov_varphi(const ModelParams& params, const TargetMeasure& target) {
    target.validate(params);
    const double c = target.lambda * (1.0 - params.lambda) / (params.lambda * (1.0 - target.lambda));
    std::vector<double> phi(params.Q.size());
    for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = c * target.Q[k] / params.Q[k] - 1.0;
    return phi;
}

PathFunctional girsanov_density_compound(const SpacePtr& space, const TargetMeasure& target, int t) {
    if (t < 0 || t > space->horizon()) throw std::out_of_range("girsanov_density_compound: t out of range");
    const auto& prm = space->params();
    const auto phi = girsanov_varphi(prm, target);
    const double base = std::pow((1.0 - target.lambda) / (1.0 - prm.lambda), t);
    std::vector<double> out(space->size());
    for (std::size_t w = 0; w < out.size(); ++w) {
        double v = base;
        for (int u = 1; u <= t; ++u) {
            const int d = space->digit(w, u);
            if (d != 0) v *= 1.0 + phi[d - 1];
        }
        out[w] = v;
    }
    return {space, std::move(out)};
}

PathFunctional girsanov_density_doleans(const OrthogonalBasis& basis, const SpacePtr& space,
                                        const TargetMeasure& target) {
    return doleans_exponential(basis, space, girsanov_drift_r(basis, space->params(), target));
}

double reweighted_expectation(const PathFunctional& F, const TargetMeasure& target) {
    return expectation(F * girsanov_density(F.space_ptr(), target, F.space().horizon()));
}

}  // namespace mbp
