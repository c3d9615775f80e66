#pragma once
// Enumeration identity suite shared by the `verify` command and the acceptance binary.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mbp/basis.hpp"
#include "mbp/config_space.hpp"
#include "mbp/kernel.hpp"
#include "mbp/malliavin.hpp"
#include "mbp/measure_change.hpp"

namespace mbp {

struct IdentityCheck {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool gating = true;  ///< diagnostics are reported but never fail a run

    bool within() const { return residual <= tolerance; }
    bool pass() const { return !gating || within(); }
};

struct VerifyReport {
    std::vector<IdentityCheck> checks;

    bool passed() const;
    /// Gating check with the largest residual/tolerance ratio, nullptr when empty.
    const IdentityCheck* worst() const;
    void append(const std::vector<IdentityCheck>& more);
};

// Seeded random inputs.
PathFunctional random_functional(const SpacePtr& space, std::mt19937_64& rng);
Kernel random_kernel(const Space& space, int n, std::mt19937_64& rng);
ProcessTable random_process(const SpacePtr& space, std::mt19937_64& rng, bool predictable);

double max_abs_diff(const PathFunctional& a, const PathFunctional& b);
double max_abs(const PathFunctional& a);

/// Isometry, Mecke, L1/L2 integration by parts, L = -delta D, product rules, truncation,
/// tensor recursion, expected-gradient and covariance identities, Poincare and basis invariants.
std::vector<IdentityCheck> enumeration_identities(const SpacePtr& space, const OrthogonalBasis& basis,
                                                  std::uint64_t seed, int samples = 5);
/// reconstruct(stroock(F)) = F, clark_reconstruct(F) = F, Z-form Clark and Clark from time t.
std::vector<IdentityCheck> round_trip_identities(const SpacePtr& space, const OrthogonalBasis& basis,
                                                 std::uint64_t seed, int count = 20);
/// Spectral semigroup: commutation, L L^{-1}, quadrature for L^{-1}, contractivity, Gamma~ identities.
std::vector<IdentityCheck> semigroup_identities(const SpacePtr& space, const OrthogonalBasis& basis,
                                                std::uint64_t seed, int samples = 5);
/// Product density factorization, compound form, Doleans form, martingale property, reweighting.
std::vector<IdentityCheck> girsanov_identities(const SpacePtr& space, const OrthogonalBasis& basis,
                                               const TargetMeasure& target);
/// Non-gating: how far the add-one cost D+ is from the annihilation gradient D.
std::vector<IdentityCheck> add_one_cost_diagnostics(const SpacePtr& space, const OrthogonalBasis& basis,
                                                    std::uint64_t seed, int samples = 5);

/// Deterministic target used by `verify`: lambda~ = (lambda + 0.5)/2, Q~(k) proportional to (k+1) Q(k).
TargetMeasure default_target(const ModelParams& params);

/// Every group above on one instance.
VerifyReport verify_suite(const ModelParams& params, std::uint64_t seed, int samples = 5);

}  // namespace mbp
