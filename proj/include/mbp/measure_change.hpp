#pragma once
/**
 * @file measure_change.hpp
 * @brief Girsanov densities between two marked binomial laws on the same marks.
 */

#include <vector>

#include "mbp/basis.hpp"
#include "mbp/config_space.hpp"
#include "mbp/kernel.hpp"

namespace mbp {

/// Target law (lambda~, Q~) on the marks of the source.
struct TargetMeasure {
    double lambda = 0.5;
    std::vector<double> Q;

    /// Throws std::invalid_argument; zero entries of Q are rejected.
    void validate(const ModelParams& source) const;
    /// Source parameters with lambda and Q replaced.
    ModelParams apply_to(const ModelParams& source) const;
};

/// g(t,k) = lambda~ Q~(k) / (lambda Q(k)) - (1-lambda~)/(1-lambda), for every t (a dZ kernel).
Kernel girsanov_drift(const ModelParams& params, const TargetMeasure& target);
/// Same drift expressed against dR: h = M^T g slot by slot.
Kernel girsanov_drift_r(const OrthogonalBasis& basis, const ModelParams& params, const TargetMeasure& target);

/// Product-form density dP~/dP on F_t, accumulated in log space.
PathFunctional girsanov_density(const SpacePtr& space, const TargetMeasure& target, int t);
double girsanov_density(const ModelParams& params, const TargetMeasure& target, const Configuration& w, int t);

/// phi(k) = lambda~(1-lambda) / (lambda(1-lambda~)) * Q~(k)/Q(k) - 1.
std::vector<double> girsanov_varphi(const ModelParams& params, const TargetMeasure& target);
/// ((1-lambda~)/(1-lambda))^t prod over jumps s <= t of (1 + phi(V_s)).
PathFunctional girsanov_density_compound(const SpacePtr& space, const TargetMeasure& target, int t);
/// Doleans exponential of the dR drift over the whole horizon.
PathFunctional girsanov_density_doleans(const OrthogonalBasis& basis, const SpacePtr& space,
                                        const TargetMeasure& target);

/// E[F L_T].
double reweighted_expectation(const PathFunctional& F, const TargetMeasure& target);

}  // namespace mbp
