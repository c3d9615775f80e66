#pragma once
/**
 * @file stein.hpp
 * @brief Chen-Stein solutions, (compound) Poisson approximation bounds, head runs and DNA word counts.
 */

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mbp/basis.hpp"
#include "mbp/config_space.hpp"

namespace mbp {

struct SteinConstants {
    double phi;    ///< min(1, sqrt(2/(e l0)))
    double grad;   ///< (1 - e^{-l0}) / l0
    double grad2;  ///< 2 (1 - e^{-l0}) / l0^2
};
SteinConstants stein_constants(double lambda0);

/// Default truncation 10 l0 + 50.
int default_k_max(double lambda0);

/// Poisson pmf at 0..K.
std::vector<double> poisson_pmf(double lambda0, int K);

struct SteinSolution {
    double lambda0 = 0.0;
    std::vector<bool> in_A;      ///< indicator on 0..K_max
    std::vector<double> phi;     ///< phi(0..K_max+1), phi(0) = 0
    std::vector<double> grad;    ///< grad(k) = phi(k+1) - phi(k), k = 0..K_max
    std::vector<double> grad2;   ///< grad(k+1) - grad(k) for k >= 1, grad2(0) = 0
    double max_residual = 0.0;   ///< max_k |l0 phi(k+1) - k phi(k) - (1_A(k) - P(A))|

    int k_max() const { return static_cast<int>(in_A.size()) - 1; }
    double sup_phi() const;
    double sup_grad() const;
    double sup_grad2() const;
};

/// Solves 1_A(k) - P(Poi(l0) in A) = l0 phi(k+1) - k phi(k) on 0..K_max (K_max < 0 picks the default).
SteinSolution solve_stein_poisson(double lambda0, const std::vector<int>& A, int k_max = -1);

/// max over 0 <= a,k <= n of |phi(k) - phi(a) - grad(a)(k-a)| - sup|grad2|/2 |(k-a)(k-a-1)|.
double taylor_excess(const SteinSolution& s, int n = 40);

/// Compound Poisson law PC(l0, g_V) with g_V on positive integers.
struct CompoundTarget {
    double lambda0 = 0.0;
    std::vector<double> g;    ///< g[k] = g_V({k}), g[0] = 0
    std::vector<double> pmf;  ///< PC pmf on 0..size-1
    double d_pc = 0.0;        ///< min(1, 1/(l0 g_V(1))) e^{l0}

    double mean_mark() const;
};
/// Panjer recursion up to the point where the remaining mass is below tail_tol (or max_len entries).
CompoundTarget make_compound_target(double lambda0, std::vector<double> g, double tail_tol = 1e-12,
                                    std::size_t max_len = 100000);
/// Geometric marks g(k) = (1-alpha) alpha^{k-1}, truncated where the mark tail drops below tail_tol.
CompoundTarget polya_aeppli(double lambda0, double alpha, double tail_tol = 1e-12);

struct CompoundSteinSolution {
    std::vector<double> psi;    ///< psi(0..L_max), psi(0) = 0, psi = 0 beyond L_max
    double max_residual = 0.0;  ///< over l = 1..L_max
    double residual_at_zero = 0.0;
    double sup_psi() const;
    double sup_grad() const;
};
/// Solves l0 sum_k k g(k) psi(l+k) - l psi(l) = 1_A(l) - P(PC in A) for l = 1..L_max by back substitution.
CompoundSteinSolution compound_stein_solve(const CompoundTarget& target, const std::vector<int>& A, int l_max = -1);

/// Total variation between two pmfs; each table's missing mass counts as one extra atom.
double exact_tv(const std::vector<double>& a, const std::vector<double>& b);

/// Law of a Z+-valued exact functional. Throws std::domain_error otherwise.
std::vector<double> pmf_of(const PathFunctional& F);

struct PoissonBound {
    double term1 = 0.0;  ///< (1-e^{-l0})/l0 E|l0 - <Dtilde F, -D L^{-1}(F - EF)>|
    double term2 = 0.0;  ///< (1-e^{-l0})/l0^2 E[int |Dtilde F (Dtilde F - 1)| |D L^{-1}(F - EF)| dnu]
    double bound() const { return term1 + term2; }
};
/// Requires |E| = 1, Z+-valued F and E[F] = l0 within 1e-9.
PoissonBound poisson_bound(const PathFunctional& F, double lambda0);

struct CompoundBound {
    double term1 = 0.0;      ///< sup over the A family of the first integral
    double term2 = 0.0;      ///< |int [-D+ L^{-1}(F - EF) - k] dnu|
    double d_pc = 0.0;
    std::size_t argmax = 0;  ///< index of the maximizing set
    double bound() const { return term1 + d_pc * term2; }
};
/// First-chaos functional sum_t V_t dN_t with i.i.d. steps: digit 0 w.p. 1-lambda, mark k w.p. lambda Q(k).
/// marks must be positive integers. Laws are computed by convolution.
CompoundBound compound_poisson_bound(int T, double lambda, const std::vector<int>& marks, const std::vector<double>& Q,
                                     const CompoundTarget& target, const std::vector<std::vector<int>>& A_family);
/// Same bound from an exact functional; throws std::invalid_argument("unsupported functional form")
/// unless F = sum_t mark(digit_t). Every term is computed by enumeration.
CompoundBound compound_poisson_bound(const PathFunctional& F, const CompoundTarget& target,
                                     const std::vector<std::vector<int>>& A_family);

/// Singletons {j} and sets {0..j} for j <= n, plus {k : P_F(k) > P_PC(k)} when pmf_F is supplied.
std::vector<std::vector<int>> standard_set_family(int n, const std::vector<double>* pmf_F = nullptr,
                                                  const std::vector<double>* pmf_PC = nullptr);

// Head runs -----------------------------------------------------------------

double head_run_lambda0(int n, int m, double p);
/// Number of clumps of >= m heads starting within the first n tosses, on n+m-1 tosses.
PathFunctional head_run_functional(int n, int m, double p);
/// l0 - 2 m q p^{2m} - (2m-1) q^2 p^{2m} - p^{2m}.
double head_run_variance_identity(int n, int m, double p);
/// l0 + 2(n-m-1) q p^{2m} + (n-m-1)(n-m-2) q^2 p^{2m} - l0^2, from counting disjoint clump pairs.
double head_run_variance_pairs(int n, int m, double p);
double head_run_bound(int n, int m, double p);

// DNA word counts -----------------------------------------------------------

double dna_lambda0(int n, int h, double alpha, double mu);
double dna_d_pc(int n, int h, double alpha, double mu);
/// 2 h mu + (n-h+1) d_PC mu^2.
double dna_bound(int n, int h, double alpha, double mu);
/// (n-h+1) d_PC mu^2, the compound-Poisson part alone.
double dna_compound_term(int n, int h, double alpha, double mu);
/// pmf of H on 0..k_cutoff by (n-h+1)-fold convolution of the per-step law.
std::vector<double> dna_functional(int n, int h, double alpha, double mu, int k_cutoff);

/// Truncated self-convolution of a step pmf.
std::vector<double> convolution_power(const std::vector<double>& step, int times, std::size_t cutoff);

}  // namespace mbp
