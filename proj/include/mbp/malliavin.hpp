#pragma once
/**
 * @file malliavin.hpp
 * @brief Difference operators, gradient/divergence pair, number operator, OU semigroup and Clark formula.
 *
 * The gradient D is the annihilation operator of the dR chaos. It agrees with the add-one cost D+
 * when |E| = 1; in general D_(t,i) = sum_k M(k,i) D+_(t,k).
 */

#include <cstdint>
#include <utility>
#include <vector>

#include "mbp/basis.hpp"
#include "mbp/chaos.hpp"
#include "mbp/config_space.hpp"

namespace mbp {

/// u(w, (t,k)) for every configuration and point of X_T.
class ProcessTable {
public:
    ProcessTable(SpacePtr space, bool predictable = false);

    template <class Fn>  // Fn(std::size_t rank, Point p) -> double
    static ProcessTable generate(SpacePtr space, Fn&& fn, bool predictable = false) {
        ProcessTable u(std::move(space), predictable);
        for (std::size_t w = 0; w < u.space().size(); ++w)
            for (int t = 1; t <= u.space().horizon(); ++t)
                for (int k = 0; k < u.space().num_marks(); ++k) u.at(w, {t, k}) = fn(w, Point{t, k});
        u.check();
        return u;
    }

    const Space& space() const { return *space_; }
    const SpacePtr& space_ptr() const { return space_; }
    bool predictable() const { return predictable_; }

    double& at(std::size_t rank, Point p) { return values_[index(rank, p)]; }
    double at(std::size_t rank, Point p) const { return values_[index(rank, p)]; }

    PathFunctional slice(Point p) const;
    void set_slice(Point p, const PathFunctional& F);
    /// Throws std::logic_error when flagged predictable but not F_{t-1}-measurable.
    void check() const;
    bool is_predictable_in_fact(double tol = 0.0) const;

private:
    std::size_t index(std::size_t rank, Point p) const {
        return rank * points_ + static_cast<std::size_t>((p.t - 1) * space_->num_marks() + p.k);
    }
    SpacePtr space_;
    bool predictable_;
    std::size_t points_;
    std::vector<double> values_;
};

// L1 operators ---------------------------------------------------------------

/// D+_(t,k)F(w) = F(w, digit t := k) - F(w, digit t := 0).
PathFunctional add_one_cost(const PathFunctional& F, Point p);
/// D-_(t,k)F(w) = F(w) - F(w, digit t := 0) when digit t is k, else 0.
PathFunctional remove_one_cost(const PathFunctional& F, Point p);
/// Dbar_t F = F - F(digit t := 0).
PathFunctional bar_grad(const PathFunctional& F, int t);
/// Dtilde_(t,k)F = F(digit t := k) - F.
PathFunctional tilde_grad(const PathFunctional& F, Point p);
/// Alternating sum over subsets J of the support of F(pi w + sum_{j in J} delta_j).
PathFunctional iterated_difference(const PathFunctional& F, const Support& s);

/// sum_{(t,k) in w} u - sum_{(t,k)} u lambda Q(k).
PathFunctional tilde_divergence(const ProcessTable& u);
/// Ltilde F = -tilde_divergence(D+ F).
PathFunctional number_operator_tilde(const PathFunctional& F);
/// 1/2 [Ltilde(FG) - F Ltilde G - G Ltilde F].
PathFunctional gamma_tilde(const PathFunctional& F, const PathFunctional& G);
/// Four-integral expansion in D+, D-, Dbar.
PathFunctional gamma_tilde_expansion(const PathFunctional& F, const PathFunctional& G);

/// (E[sum_{(t,k) in eta} u(eta,(t,k))], E[sum u(pi_t eta + delta_(t,k), (t,k)) lambda Q(k)]).
std::pair<double, double> mecke_check(const ProcessTable& u);

// L2 operators ---------------------------------------------------------------

/// Gradient through the chaos: D_(t,k) J_n(f) = n J_{n-1}(f(*, (t,k))).
PathFunctional gradient(const OrthogonalBasis& basis, const PathFunctional& F, Point p);
ProcessTable gradient(const OrthogonalBasis& basis, const PathFunctional& F);
/// D^(n) along an ordered support, built from add-one-cost alternating sums weighted by M.
PathFunctional iterated_gradient(const OrthogonalBasis& basis, const PathFunctional& F, const Support& s);

/// Exact kappa-weighted adjoint: E[F delta(u)] = E[sum kappa_k D_(t,k)F u(., (t,k))] for all F.
PathFunctional divergence(const OrthogonalBasis& basis, const ProcessTable& u);
/// sum u dR, valid for predictable u.
PathFunctional divergence_predictable(const OrthogonalBasis& basis, const ProcessTable& u);

/// L F = -sum_n n J_n(f_n).
PathFunctional number_operator(const OrthogonalBasis& basis, const PathFunctional& F);
/// Throws std::domain_error("center first") when |E[F]| exceeds tol.
PathFunctional l_inverse(const OrthogonalBasis& basis, const PathFunctional& F, double tol = 1e-10);

/// P_tau F: order n scaled by exp(-n tau).
PathFunctional ou_spectral(const OrthogonalBasis& basis, const PathFunctional& F, double tau);

struct MehlerEstimate {
    std::vector<double> mean;       ///< per configuration rank
    std::vector<double> std_error;  ///< sample sd / sqrt(n)
};
/// Keeps each digit with probability exp(-tau), else redraws it from the step law.
/// Configuration w uses stream (seed, w) so results do not depend on evaluation order.
MehlerEstimate ou_mehler_mc(const PathFunctional& F, double tau, std::size_t n_samples, std::uint64_t seed);

/// Nodes and weights of n-point Gauss-Laguerre quadrature (weight exp(-x)).
std::pair<std::vector<double>, std::vector<double>> gauss_laguerre(int n);
/// -int_0^inf P_tau F dtau by Gauss-Laguerre on exp(tau) P_tau F.
PathFunctional l_inverse_quadrature(const OrthogonalBasis& basis, const PathFunctional& F, int nodes = 64);

// Clark ----------------------------------------------------------------------

/// E[D_(t,k)F | F_{t-1}].
ProcessTable clark_integrand(const OrthogonalBasis& basis, const PathFunctional& F);
/// E[F] + sum E[D_(t,k)F | F_{t-1}] dR_(t,k).
PathFunctional clark_reconstruct(const OrthogonalBasis& basis, const PathFunctional& F);
/// E[F | F_t] + sum over s > t of the Clark terms.
PathFunctional clark_reconstruct_from(const OrthogonalBasis& basis, const PathFunctional& F, int t);
/// dZ form: E[D+_(t,k)F | F_{t-1}], equal to the R->Z conversion of the dR integrand.
ProcessTable clark_integrand_z(const PathFunctional& F);
PathFunctional clark_reconstruct_z(const PathFunctional& F);

}  // namespace mbp
