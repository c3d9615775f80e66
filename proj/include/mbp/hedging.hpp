#pragma once
/**
 * @file hedging.hpp
 * @brief Ternary market driven by marks {1,-1}: prices, minimal martingale measure,
 * Kunita-Watanabe decomposition and the quadratic-loss minimizing strategy.
 *
 * Digit 1 moves the risky asset by (1+b), digit 2 by (1+a), digit 0 leaves it unchanged.
 * X denotes the discounted price S~ = S/A with S_0 = 1 and A_t = a0 (1+r)^t.
 */

#include <string>
#include <vector>

#include "mbp/basis.hpp"
#include "mbp/config_space.hpp"

namespace mbp {

struct MarketParams {
    double a = -0.1;
    double b = 0.2;
    double r = 0.0;
    double lambda = 0.5;
    double p = 0.5;
    int T = 3;
    double x = 1.0;   ///< initial capital
    double a0 = 1.0;  ///< A_0

    /// Throws std::invalid_argument naming the violated constraint.
    void validate() const;
    double q() const { return 1.0 - p; }
    double rho() const { return lambda * q() / (1.0 - lambda * p); }
    /// lambda (b p + a q).
    double drift() const { return lambda * (b * p + a * q()); }
    /// Marks {1,-1}, Q = (p, q).
    ModelParams model() const;

    static MarketParams from_text(const std::string& text);
};

/// Tables indexed t = 0..T.
struct PriceTables {
    SpacePtr space;
    std::vector<double> A;
    std::vector<PathFunctional> S;
    std::vector<PathFunctional> X;
};
PriceTables price_paths(const MarketParams& m);
/// Same tables on an existing space built from m.model().
PriceTables price_paths(const MarketParams& m, SpacePtr space);

/// X_t - X_{t-1}.
PathFunctional discounted_increment(const PriceTables& prices, int t);
/// X_{t-1} (b dZ_(t,1) + a dZ_(t,-1) + drift - r) / (1+r); equals the increment pointwise.
PathFunctional increment_factorized(const MarketParams& m, const PriceTables& prices, int t);

struct MartingaleDiagnostics {
    double gap = 0.0;           ///< lambda(bp+aq) - r
    double k_step = 0.0;        ///< gap^2 / (lambda p(1-lambda p) b^2 + a^2 lambda q(1-lambda q))
    double k_step_exact = 0.0;  ///< gap^2 / var(eta dN), the covariance term included
    double variance = 0.0;      ///< var(eta dN)
    std::vector<double> K;      ///< t * k_step, t = 0..T
    std::vector<double> K_exact;
};
MartingaleDiagnostics martingale_diagnostics(const MarketParams& m);

/// One value per t = 1..T and per F_{t-1} atom (rank modulo 3^{t-1}).
struct PredictableTable {
    std::vector<std::vector<double>> values;
    double at(int t, std::size_t rank) const;
};

struct MinimalMartingaleMeasure {
    PredictableTable theta;   ///< E[dX_t|F_{t-1}] / E[dX_t^2|F_{t-1}]
    PredictableTable beta;    ///< E[dX_t|F_{t-1}] / var(dX_t|F_{t-1})
    PathFunctional density;   ///< prod (1 - theta dX)/(1 - theta E[dX|F_{t-1}])
    bool is_signed = false;   ///< some configuration has density <= 0
    double min_density = 0.0;
};
/// Emits a "signed measure" warning on std::cerr when the density is not positive.
MinimalMartingaleMeasure minimal_martingale_measure(const MarketParams& m, const PriceTables& prices);

/// Weights applied to E^[D_(t,k) F | F_{t-1}] in the Malliavin form of xi.
struct KwWeights {
    double w_up;
    double w_down;
    double v;  ///< (b - a rho)^2 kappa_1 + a^2 kappa_{-1}
};
KwWeights kw_weights(const MarketParams& m, const OrthogonalBasis& basis);

struct KunitaWatanabe {
    double F0 = 0.0;
    PredictableTable xi;             ///< E[dV^ dX|F_{t-1}] / E[dX^2|F_{t-1}]
    PredictableTable xi_malliavin;   ///< (1+r)/X_{t-1} sum_k w_k D_(t,k) V^_t
    std::vector<PathFunctional> V_hat;  ///< E^[F|F_t], t = 0..T
    std::vector<PathFunctional> L;      ///< t = 0..T, L_0 = 0
};
KunitaWatanabe kunita_watanabe(const MarketParams& m, const PriceTables& prices, const MinimalMartingaleMeasure& mmm,
                               const PathFunctional& F);

struct Strategy {
    PredictableTable phi;    ///< risky quotas, t = 1..T
    std::vector<std::vector<double>> alpha;  ///< alpha[0] = {alpha_0}; alpha[t] per F_{t-1} atom
};

/// max over t and configurations of |A_t(alpha_{t+1} - alpha_t) + S_t(phi_{t+1} - phi_t)|, with phi_0 = 0.
double self_financing_residual(const Strategy& s, const PriceTables& prices);
/// sum_t phi_t dX_t.
PathFunctional gains(const PredictableTable& phi, const PriceTables& prices);

struct HedgeResult {
    Strategy strategy;
    double residual_risk = 0.0;    ///< E[(F - x - G_T)^2]
    double residual_printed = 0.0; ///< same with E^[F|F_t] in the recursion (not predictable)
};
/// phi*_t = xi_t + theta_t (E^[F|F_{t-1}] - x - G_{t-1}(phi*)); alpha by self-financing from alpha_0 = E^[F]/S_0.
HedgeResult optimal_strategy(const MarketParams& m, const PriceTables& prices, const PathFunctional& F, double x);

struct OracleResult {
    PredictableTable phi;
    double residual_risk = 0.0;
    bool rank_deficient = false;
};
/// Minimizes E[(F - x - sum phi_t dX_t)^2] over all predictable phi through the normal equations.
OracleResult ls_oracle(const MarketParams& m, const PriceTables& prices, const PathFunctional& F, double x);

/// (S_T - K)^+.
PathFunctional european_call(const PriceTables& prices, double K);

/// max over t, s in grid of |E[s^{S_t/S_{t-1}}] - (pbar s^{1+b} + qbar s^{1+a} + (1-pbar-qbar) s)|.
double trinomial_pgf_residual(const MarketParams& m, const PriceTables& prices, const std::vector<double>& grid);

}  // namespace mbp
