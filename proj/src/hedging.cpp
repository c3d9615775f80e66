#include "mbp/hedging.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "mbp/malliavin.hpp"
#include "mbp/util.hpp"

namespace mbp {

void MarketParams::validate() const {
    if (!(-1.0 < a && a < r && r < b)) throw std::invalid_argument("market: need -1 < a < r < b");
    if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("market: lambda must lie in (0,1)");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("market: p must lie in (0,1)");
    if (T < 1) throw std::invalid_argument("market: T must be >= 1");
    if (!(x >= 0.0)) throw std::invalid_argument("market: initial capital x must be >= 0");
    if (!(a0 > 0.0)) throw std::invalid_argument("market: a0 must be > 0");
}

ModelParams MarketParams::model() const {
    validate();
    ModelParams mp;
    mp.T = T;
    mp.marks = {1.0, -1.0};
    mp.lambda = lambda;
    mp.Q = {p, q()};
    return mp;
}

MarketParams MarketParams::from_text(const std::string& text) {
    MarketParams m;
    for (const auto& [key, value] : parse_key_values(text)) {
        if (key == "a") m.a = std::stod(value);
        else if (key == "b") m.b = std::stod(value);
        else if (key == "r") m.r = std::stod(value);
        else if (key == "lambda") m.lambda = std::stod(value);
        else if (key == "p") m.p = std::stod(value);
        else if (key == "T") m.T = std::stoi(value);
        else if (key == "x") m.x = std::stod(value);
        else if (key == "a0") m.a0 = std::stod(value);
        else throw std::invalid_argument("market config: unknown key '" + key + "'");
    }
    m.validate();
    return m;
}

PriceTables price_paths(const MarketParams& m) { return price_paths(m, make_space(m.model())); }

PriceTables price_paths(const MarketParams& m, SpacePtr space) {
    m.validate();
    if (space->horizon() != m.T || space->num_marks() != 2) throw std::invalid_argument("price_paths: space mismatch");
    PriceTables pt;
    pt.space = space;
    const std::size_t n = space->size();
    std::vector<double> S(n, 1.0);
    for (int t = 0; t <= m.T; ++t) {
        const double A = m.a0 * std::pow(1.0 + m.r, t);
        if (t > 0)
            for (std::size_t w = 0; w < n; ++w) {
                const int d = space->digit(w, t);
                S[w] *= d == 1 ? 1.0 + m.b : (d == 2 ? 1.0 + m.a : 1.0);
            }
        std::vector<double> X(n);
        for (std::size_t w = 0; w < n; ++w) X[w] = S[w] / A;
        pt.A.push_back(A);
        pt.S.emplace_back(space, S);
        pt.X.emplace_back(space, std::move(X));
    }
    return pt;
}

PathFunctional discounted_increment(const PriceTables& prices, int t) {
    if (t < 1 || t >= static_cast<int>(prices.X.size())) throw std::out_of_range("discounted_increment: t");
    return prices.X[t] - prices.X[t - 1];
}

PathFunctional increment_factorized(const MarketParams& m, const PriceTables& prices, int t) {
    if (t < 1 || t > m.T) throw std::out_of_range("increment_factorized: t");
    const Space& s = *prices.space;
    const auto& prev = prices.X[t - 1].table();
    std::vector<double> out(s.size());
    for (std::size_t w = 0; w < s.size(); ++w) {
        const int d = s.digit(w, t);
        const double dz_up = (d == 1 ? 1.0 : 0.0) - m.lambda * m.p;
        const double dz_down = (d == 2 ? 1.0 : 0.0) - m.lambda * m.q();
        out[w] = prev[w] * (m.b * dz_up + m.a * dz_down + m.drift() - m.r) / (1.0 + m.r);
    }
    return {prices.space, std::move(out)};
}

MartingaleDiagnostics martingale_diagnostics(const MarketParams& m) {
    m.validate();
    MartingaleDiagnostics d;
    const double lp = m.lambda * m.p, lq = m.lambda * m.q();
    d.gap = m.drift() - m.r;
    d.variance = m.lambda * (m.b * m.b * m.p + m.a * m.a * m.q()) - m.drift() * m.drift();
    d.k_step = d.gap * d.gap / (lp * (1.0 - lp) * m.b * m.b + m.a * m.a * lq * (1.0 - lq));
    d.k_step_exact = d.gap * d.gap / d.variance;
    for (int t = 0; t <= m.T; ++t) {
        d.K.push_back(t * d.k_step);
        d.K_exact.push_back(t * d.k_step_exact);
    }
    return d;
}

double PredictableTable::at(int t, std::size_t rank) const {
    const auto& row = values.at(static_cast<std::size_t>(t - 1));
    return row[rank % row.size()];
}

namespace {

std::size_t pow3(int e) {
    std::size_t v = 1;
    for (int i = 0; i < e; ++i) v *= 3;
    return v;
}

// Reads an F_{t-1}-measurable table at the representative of each atom.
std::vector<double> atoms_of(const std::vector<double>& table, int t) {
    return {table.begin(), table.begin() + static_cast<std::ptrdiff_t>(pow3(t - 1))};
}


}  // namespace

MinimalMartingaleMeasure minimal_martingale_measure(const MarketParams& m, const PriceTables& prices) {
    const Space& s = *prices.space;
    const std::size_t n = s.size();
    std::vector<double> density(n, 1.0);
    MinimalMartingaleMeasure mmm{{}, {}, PathFunctional::constant(prices.space, 1.0), false, 0.0};
    for (int t = 1; t <= m.T; ++t) {
        const auto dX = discounted_increment(prices, t);
        const auto E1 = conditional_expectation(dX, t - 1).table();
        const auto E2 = conditional_expectation(dX * dX, t - 1).table();
        std::vector<double> theta(n), beta(n);
        for (std::size_t w = 0; w < n; ++w) {
            theta[w] = E1[w] / E2[w];
            beta[w] = E1[w] / (E2[w] - E1[w] * E1[w]);
            density[w] *= (1.0 - theta[w] * dX.at(w)) / (1.0 - theta[w] * E1[w]);
        }
        mmm.theta.values.push_back(atoms_of(theta, t));
        mmm.beta.values.push_back(atoms_of(beta, t));
    }
    mmm.min_density = *std::min_element(density.begin(), density.end());
    mmm.is_signed = !(mmm.min_density > 0.0);
    if (mmm.is_signed)
        std::cerr << "warning: signed measure (minimal martingale density reaches " << format_double(mmm.min_density)
                  << ")\n";
    mmm.density = PathFunctional(prices.space, std::move(density));
    return mmm;
}

KwWeights kw_weights(const MarketParams& m, const OrthogonalBasis& basis) {
    const double c = m.b - m.a * m.rho();
    const double v = c * c * basis.kappa(0) + m.a * m.a * basis.kappa(1);
    return {c * basis.kappa(0) / v, m.a * basis.kappa(1) / v, v};
}

PathFunctional gains(const PredictableTable& phi, const PriceTables& prices) {
    const std::size_t n = prices.space->size();
    std::vector<double> g(n, 0.0);
    for (int t = 1; t <= static_cast<int>(phi.values.size()); ++t) {
        const auto dX = discounted_increment(prices, t);
        for (std::size_t w = 0; w < n; ++w) g[w] += phi.at(t, w) * dX.at(w);
    }
    return {prices.space, std::move(g)};
}

KunitaWatanabe kunita_watanabe(const MarketParams& m, const PriceTables& prices, const MinimalMartingaleMeasure& mmm,
                               const PathFunctional& F) {
    const Space& s = *prices.space;
    const std::size_t n = s.size();
    const auto basis = build_basis(s.params());
    const auto wts = kw_weights(m, basis);
    std::vector<double> weights(n);
    for (std::size_t w = 0; w < n; ++w) weights[w] = s.probability(w) * mmm.density.at(w);

    KunitaWatanabe kw;
    for (int t = 0; t <= m.T; ++t)
        kw.V_hat.emplace_back(prices.space, conditional_expectation(s, F.table(), weights, t));

    for (int t = 1; t <= m.T; ++t) {
        const auto dX = discounted_increment(prices, t);
        const auto dV = kw.V_hat[t] - kw.V_hat[t - 1];
        const auto num = conditional_expectation(dV * dX, t - 1).table();
        const auto den = conditional_expectation(dX * dX, t - 1).table();
        std::vector<double> xi(n);
        for (std::size_t w = 0; w < n; ++w) xi[w] = num[w] / den[w];
        kw.xi.values.push_back(atoms_of(xi, t));

        const auto Dup = gradient(basis, kw.V_hat[t], {t, 0}).table();
        const auto Ddown = gradient(basis, kw.V_hat[t], {t, 1}).table();
        const auto& Xprev = prices.X[t - 1].table();
        std::vector<double> xm(n);
        for (std::size_t w = 0; w < n; ++w)
            xm[w] = (1.0 + m.r) / Xprev[w] * (wts.w_up * Dup[w] + wts.w_down * Ddown[w]);
        kw.xi_malliavin.values.push_back(atoms_of(xm, t));
    }

    const auto H = F - gains(kw.xi, prices);
    kw.F0 = expectation(H);
    for (int t = 0; t <= m.T; ++t) kw.L.push_back(conditional_expectation(H, t) + (-kw.F0));
    return kw;
}

double self_financing_residual(const Strategy& st, const PriceTables& prices) {
    const Space& s = *prices.space;
    const int T = static_cast<int>(st.phi.values.size());
    auto alpha_at = [&](int t, std::size_t w) {
        const auto& row = st.alpha.at(static_cast<std::size_t>(t));
        return row[w % row.size()];
    };
    auto phi_at = [&](int t, std::size_t w) { return t == 0 ? 0.0 : st.phi.at(t, w); };
    double worst = 0.0;
    for (int t = 0; t < T; ++t)
        for (std::size_t w = 0; w < s.size(); ++w) {
            const double r = prices.A[t] * (alpha_at(t + 1, w) - alpha_at(t, w)) +
                             prices.S[t].at(w) * (phi_at(t + 1, w) - phi_at(t, w));
            worst = std::max(worst, std::abs(r));
        }
    return worst;
}

HedgeResult optimal_strategy(const MarketParams& m, const PriceTables& prices, const PathFunctional& F, double x) {
    const Space& s = *prices.space;
    const std::size_t n = s.size();
    const auto mmm = minimal_martingale_measure(m, prices);
    const auto kw = kunita_watanabe(m, prices, mmm, F);

    HedgeResult res;
    std::vector<double> G(n, 0.0), G_printed(n, 0.0);
    for (int t = 1; t <= m.T; ++t) {
        const auto dX = discounted_increment(prices, t);
        std::vector<double> phi(n);
        for (std::size_t w = 0; w < n; ++w) {
            const double xi = kw.xi.at(t, w);
            const double th = mmm.theta.at(t, w);
            phi[w] = xi + th * (kw.V_hat[t - 1].at(w) - x - G[w]);
            const double phi_printed = xi + th * (kw.V_hat[t].at(w) - x - G_printed[w]);
            G[w] += phi[w] * dX.at(w);
            G_printed[w] += phi_printed * dX.at(w);
        }
        res.strategy.phi.values.push_back(atoms_of(phi, t));
    }
    for (std::size_t w = 0; w < n; ++w) {
        const double p = s.probability(w);
        res.residual_risk += p * std::pow(F.at(w) - x - G[w], 2);
        res.residual_printed += p * std::pow(F.at(w) - x - G_printed[w], 2);
    }

    // alpha_0 = E^[F]/S_0, phi_0 = 0, alpha_t = alpha_{t-1} - (phi_t - phi_{t-1}) X_{t-1}
    res.strategy.alpha.push_back({kw.V_hat[0].at(0) / prices.S[0].at(0)});
    for (int t = 1; t <= m.T; ++t) {
        std::vector<double> row(pow3(t - 1));
        const auto& prev = res.strategy.alpha.back();
        for (std::size_t a = 0; a < row.size(); ++a) {
            const double phi_prev = t == 1 ? 0.0 : res.strategy.phi.at(t - 1, a);
            row[a] = prev[a % prev.size()] - (res.strategy.phi.at(t, a) - phi_prev) * prices.X[t - 1].at(a);
        }
        res.strategy.alpha.push_back(std::move(row));
    }
    return res;
}

OracleResult ls_oracle(const MarketParams& m, const PriceTables& prices, const PathFunctional& F, double x) {
    if (m.T > 8) throw std::length_error("ls_oracle: T must be <= 8");
    const Space& s = *prices.space;
    const std::size_t n = s.size();
    std::vector<std::size_t> offset(static_cast<std::size_t>(m.T + 1), 0);
    for (int t = 1; t <= m.T; ++t) offset[t] = offset[t - 1] + pow3(t - 1);
    const auto nv = static_cast<Eigen::Index>(offset[m.T]);

    std::vector<std::vector<double>> dX;
    for (int t = 1; t <= m.T; ++t) dX.push_back(discounted_increment(prices, t).table());

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nv, nv);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(m.T));
    for (std::size_t w = 0; w < n; ++w) {
        const double p = s.probability(w);
        for (int t = 1; t <= m.T; ++t) idx[t - 1] = static_cast<Eigen::Index>(offset[t - 1] + s.atom(w, t - 1));
        for (int t = 0; t < m.T; ++t) {
            rhs(idx[t]) += p * dX[t][w] * (F.at(w) - x);
            for (int u = 0; u < m.T; ++u) G(idx[t], idx[u]) += p * dX[t][w] * dX[u][w];
        }
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
    const Eigen::VectorXd sol = cod.solve(rhs);

    OracleResult out;
    out.rank_deficient = cod.rank() < nv;
    if (out.rank_deficient) std::cerr << "warning: ls_oracle normal matrix is singular, using minimum-norm solution\n";
    for (int t = 1; t <= m.T; ++t)
        out.phi.values.emplace_back(sol.data() + offset[t - 1], sol.data() + offset[t]);
    const auto g = gains(out.phi, prices);
    for (std::size_t w = 0; w < n; ++w) out.residual_risk += s.probability(w) * std::pow(F.at(w) - x - g.at(w), 2);
    return out;
}

PathFunctional european_call(const PriceTables& prices, double K) {
    const auto& ST = prices.S.back().table();
    std::vector<double> out(ST.size());
    for (std::size_t w = 0; w < out.size(); ++w) out[w] = std::max(ST[w] - K, 0.0);
    return {prices.space, std::move(out)};
}

double trinomial_pgf_residual(const MarketParams& m, const PriceTables& prices, const std::vector<double>& grid) {
    const Space& s = *prices.space;
    const double pb = m.lambda * m.p, qb = m.lambda * m.q();
    double worst = 0.0;
    for (int t = 1; t <= m.T; ++t)
        for (double z : grid) {
            double lhs = 0.0;
            for (std::size_t w = 0; w < s.size(); ++w)
                lhs += s.probability(w) * std::pow(z, prices.S[t].at(w) / prices.S[t - 1].at(w));
            const double rhs = pb * std::pow(z, 1.0 + m.b) + qb * std::pow(z, 1.0 + m.a) + (1.0 - pb - qb) * z;
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    return worst;
}

}  // namespace mbp
