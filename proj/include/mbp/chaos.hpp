#pragma once
/**
 * @file chaos.hpp
 * @brief Multiple integrals J_n, chaotic decomposition and Doleans exponentials.
 *
 * Convention: J_n(f)(w) = n! * sum over time-ordered supports of f * prod dR.
 * Kernels are stored on ordered supports only.
 */

#include <string>
#include <vector>

#include "mbp/basis.hpp"
#include "mbp/config_space.hpp"
#include "mbp/kernel.hpp"

namespace mbp {

struct ChaosCoefficients {
    double f0 = 0.0;
    std::vector<Kernel> orders;  ///< orders[n-1] holds f_n

    int max_order() const { return static_cast<int>(orders.size()); }
    /// Empty kernel when n exceeds the stored orders.
    const Kernel& order(int n) const;
    Kernel& order(int n);
};

/// Order-n integral. Kernel entries must have n points; order > T gives zero with a warning.
PathFunctional multiple_integral(const OrthogonalBasis& basis, const SpacePtr& space, const Kernel& f, int n);
/// Same sum with dZ in place of dR (pseudo-chaotic form).
PathFunctional multiple_integral_z(const SpacePtr& space, const Kernel& g, int n);

/// f_0 = E[F], f_n = E[D^(n) F]/n! with D^(n) the iterated gradient.
ChaosCoefficients stroock_decompose(const OrthogonalBasis& basis, const PathFunctional& F);
ChaosCoefficients stroock_decompose(const PathFunctional& F);
/// F = f_0 + sum_n J_n(f_n).
PathFunctional reconstruct(const OrthogonalBasis& basis, const SpacePtr& space, const ChaosCoefficients& c);

/// Kernels of the pseudo-chaotic expansion F = g_0 + sum_n J_n(g_n; Z).
ChaosCoefficients pseudo_chaos_decompose(const PathFunctional& F);

/// mean * prod_t (1 + sum_k g(t,k) dZ_(t,k)) with g = R->Z conversion of h.
PathFunctional doleans_exponential(const OrthogonalBasis& basis, const SpacePtr& space, const Kernel& h,
                                   double mean = 1.0);
/// mean * sum_n J_n(h^{(x)n})/n!.
PathFunctional doleans_series(const OrthogonalBasis& basis, const SpacePtr& space, const Kernel& h,
                              double mean = 1.0);

/// Sum over ordered supports of f g prod kappa.
double kappa_inner(const OrthogonalBasis& basis, const Kernel& f, const Kernel& g);

// Kernel algebra.
/// Symmetric tensor product of an order-1 kernel g with f_n, on ordered supports.
Kernel symmetric_tensor(const Kernel& g, const Kernel& f);
/// f_n(*, p): entries whose last point is p, with p removed.
Kernel slice_last(const Kernel& f, Point p);
/// Entries whose times all lie in 1..t.
Kernel restrict_to(const Kernel& f, int t);
Kernel scale(const Kernel& f, double c);

/// CSV rows "order,support,value" (support as "(t;k) ...", k 1-based mark index).
std::string to_csv(const ChaosCoefficients& c);

namespace detail {
/// Support of size n <-> rank of the configuration with digit k+1 at each support time.
std::size_t support_rank(const Space& space, const Support& s);
Support support_of_rank(const Space& space, std::size_t rank);
int support_order(const Space& space, std::size_t rank);

/// Applies a (1+m)x(1+m) matrix along axis t: out[d'] = sum_d A(d', d) in[d].
void apply_axis(std::vector<double>& v, const Space& space, int t, const Eigen::MatrixXd& A);
void apply_all_axes(std::vector<double>& v, const Space& space, const Eigen::MatrixXd& A);

/// Row 0: expectation; row i+1: sum_k M(k,i) (v[k+1] - v[0]), the gradient along (t, k^i).
Eigen::MatrixXd gradient_axis_matrix(const OrthogonalBasis& basis, const ModelParams& params);
/// Row 0: expectation; row i+1: v[i+1] - v[0], the add-one cost along (t, k^i).
Eigen::MatrixXd difference_axis_matrix(const ModelParams& params);
/// Column 0: constant 1; column i+1: dR_i(d).
Eigen::MatrixXd synthesis_axis_matrix(const OrthogonalBasis& basis);

/// Dense table c[support rank] = E[D^(n)_support F] (c[0] = E[F]).
std::vector<double> expected_gradients(const OrthogonalBasis& basis, const PathFunctional& F);
/// Inverse: F = sum_support c * prod dR.
std::vector<double> synthesize(const OrthogonalBasis& basis, const Space& space, std::vector<double> c);
ChaosCoefficients coefficients_from_table(const Space& space, const std::vector<double>& c);
std::vector<double> table_from_coefficients(const Space& space, const ChaosCoefficients& c);
double factorial(int n);
}  // namespace detail

}  // namespace mbp
