#include "mbp/stein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mbp/malliavin.hpp"

namespace mbp {

namespace {

void require_positive(double lambda0, const char* who) {
    if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
        throw std::domain_error(std::string(who) + ": lambda0 must be > 0");
}

double sup_abs(const std::vector<double>& v, std::size_t from = 0) {
    double s = 0.0;
    for (std::size_t i = from; i < v.size(); ++i) s = std::max(s, std::abs(v[i]));
    return s;
}

std::vector<bool> indicator(const std::vector<int>& A, int size) {
    std::vector<bool> in(static_cast<std::size_t>(size), false);
    for (int a : A) {
        if (a < 0) throw std::invalid_argument("set A must lie in Z+");
        if (a < size) in[a] = true;
    }
    return in;
}

int max_element_or(const std::vector<int>& A, int fallback) {
    int mx = fallback;
    for (int a : A) mx = std::max(mx, a);
    return mx;
}

}  // namespace

SteinConstants stein_constants(double lambda0) {
    require_positive(lambda0, "stein_constants");
    const double e = 1.0 - std::exp(-lambda0);
    return {std::min(1.0, std::sqrt(2.0 / (std::exp(1.0) * lambda0))), e / lambda0, 2.0 * e / (lambda0 * lambda0)};
}

int default_k_max(double lambda0) { return static_cast<int>(std::ceil(10.0 * lambda0 + 50.0)); }

std::vector<double> poisson_pmf(double lambda0, int K) {
    require_positive(lambda0, "poisson_pmf");
    std::vector<double> p(static_cast<std::size_t>(K + 1));
    // log-space start keeps large lambda0 from underflowing p[0] before the mode
    for (int k = 0; k <= K; ++k) p[k] = std::exp(k * std::log(lambda0) - lambda0 - std::lgamma(k + 1.0));
    return p;
}

double SteinSolution::sup_phi() const { return sup_abs(phi); }
double SteinSolution::sup_grad() const { return sup_abs(grad); }
double SteinSolution::sup_grad2() const { return sup_abs(grad2, 1); }

SteinSolution solve_stein_poisson(double lambda0, const std::vector<int>& A, int k_max) {
    require_positive(lambda0, "solve_stein_poisson");
    if (k_max < 0) k_max = default_k_max(lambda0);
    k_max = std::max(k_max, max_element_or(A, 0) + 1);

    SteinSolution s;
    s.lambda0 = lambda0;
    s.in_A = indicator(A, k_max + 1);

    // pmf well past K_max; the tail sums enter only through ratios R_k = P(X > k) / p_k,
    // which obey R_k = l0/(k+1) (1 + R_{k+1}) and never underflow
    const int K_ext = k_max + default_k_max(lambda0) + 100;
    const auto p = poisson_pmf(lambda0, K_ext);
    std::vector<double> R(static_cast<std::size_t>(K_ext + 1), 0.0);
    std::vector<double> R_A(static_cast<std::size_t>(K_ext + 1), 0.0);
    for (int k = K_ext - 1; k >= 0; --k) {
        const double in_next = k + 1 <= k_max && s.in_A[k + 1] ? 1.0 : 0.0;
        R[k] = lambda0 / (k + 1.0) * (1.0 + R[k + 1]);
        R_A[k] = lambda0 / (k + 1.0) * (in_next + R_A[k + 1]);
    }
    double PA = 0.0;
    for (int k = 0; k <= k_max; ++k) PA += s.in_A[k] ? p[k] : 0.0;

    s.phi.assign(static_cast<std::size_t>(k_max + 2), 0.0);
    double head = 0.0, head_A = 0.0;  // P(U_k), P(A and U_k)
    for (int k = 0; k <= k_max; ++k) {
        head += p[k];
        head_A += s.in_A[k] ? p[k] : 0.0;
        // phi(k+1) = [P(A U_k) P(U_k^c) - P(A U_k^c) P(U_k)] / (l0 p_k)
        s.phi[k + 1] = (head_A * R[k] - R_A[k] * head) / lambda0;
    }

    for (int k = 0; k <= k_max; ++k) {
        const double rhs = (s.in_A[k] ? 1.0 : 0.0) - PA;
        s.max_residual = std::max(s.max_residual, std::abs(lambda0 * s.phi[k + 1] - k * s.phi[k] - rhs));
    }
    s.grad.resize(static_cast<std::size_t>(k_max + 1));
    for (int k = 0; k <= k_max; ++k) s.grad[k] = s.phi[k + 1] - s.phi[k];
    s.grad2.assign(static_cast<std::size_t>(k_max), 0.0);
    for (int k = 1; k < k_max; ++k) s.grad2[k] = s.grad[k + 1] - s.grad[k];
    return s;
}

double taylor_excess(const SteinSolution& s, int n) {
    n = std::min(n, s.k_max() - 1);
    const double c = s.sup_grad2() / 2.0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int a = 0; a <= n; ++a)
        for (int k = 0; k <= n; ++k) {
            const double lhs = std::abs(s.phi[k] - s.phi[a] - s.grad[a] * (k - a));
            worst = std::max(worst, lhs - c * std::abs(static_cast<double>(k - a) * (k - a - 1)));
        }
    return worst;
}

// ---------------------------------------------------------------------------

double CompoundTarget::mean_mark() const {
    double m = 0.0;
    for (std::size_t k = 1; k < g.size(); ++k) m += static_cast<double>(k) * g[k];
    return m;
}

CompoundTarget make_compound_target(double lambda0, std::vector<double> g, double tail_tol, std::size_t max_len) {
    require_positive(lambda0, "make_compound_target");
    if (lambda0 > 700.0) throw std::domain_error("make_compound_target: lambda0 too large for exp(-lambda0)");
    if (g.size() < 2) throw std::invalid_argument("make_compound_target: empty mark law");
    if (g[0] != 0.0) throw std::invalid_argument("make_compound_target: marks must be positive integers");
    double total = 0.0;
    for (double x : g) {
        if (x < 0.0) throw std::invalid_argument("make_compound_target: negative mark probability");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("make_compound_target: mark law must sum to 1");

    CompoundTarget c;
    c.lambda0 = lambda0;
    c.g = std::move(g);
    c.d_pc = std::min(1.0, 1.0 / (lambda0 * c.g[1])) * std::exp(lambda0);
    // Panjer: P(n) = (l0/n) sum_k k g(k) P(n-k)
    c.pmf.push_back(std::exp(-lambda0));
    double mass = c.pmf[0];
    const std::size_t K = c.g.size() - 1;
    const double mean = lambda0 * c.mean_mark();
    while (c.pmf.size() < max_len && (1.0 - mass > tail_tol || static_cast<double>(c.pmf.size()) < mean)) {
        const std::size_t n = c.pmf.size();
        double s = 0.0;
        for (std::size_t k = 1; k <= std::min(n, K); ++k) s += static_cast<double>(k) * c.g[k] * c.pmf[n - k];
        c.pmf.push_back(lambda0 / static_cast<double>(n) * s);
        mass += c.pmf.back();
    }
    return c;
}

CompoundTarget polya_aeppli(double lambda0, double alpha, double tail_tol) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::domain_error("polya_aeppli: alpha must lie in [0,1)");
    std::vector<double> g{0.0};
    double tail = 1.0;
    for (int k = 1; tail > 0.1 * tail_tol; ++k) {
        g.push_back((1.0 - alpha) * std::pow(alpha, k - 1));
        tail -= g.back();
    }
    // the dropped mark tail is below tolerance; renormalize the finite table
    const double s = std::accumulate(g.begin(), g.end(), 0.0);
    for (double& x : g) x /= s;
    return make_compound_target(lambda0, std::move(g), tail_tol);
}

double CompoundSteinSolution::sup_psi() const { return sup_abs(psi, 1); }

double CompoundSteinSolution::sup_grad() const {
    double s = 0.0;
    for (std::size_t l = 1; l + 1 < psi.size(); ++l) s = std::max(s, std::abs(psi[l + 1] - psi[l]));
    return s;
}

CompoundSteinSolution compound_stein_solve(const CompoundTarget& target, const std::vector<int>& A, int l_max) {
    if (l_max < 0) l_max = default_k_max(target.lambda0 * target.mean_mark());
    l_max = std::max(l_max, max_element_or(A, 0) + 1);
    const auto in = indicator(A, l_max + 1);
    double PA = 0.0;
    for (int l = 0; l <= l_max; ++l)
        if (in[l] && static_cast<std::size_t>(l) < target.pmf.size()) PA += target.pmf[l];

    const int K = static_cast<int>(target.g.size()) - 1;
    auto shift_sum = [&](const std::vector<double>& psi, int l) {
        double s = 0.0;
        for (int k = 1; k <= K && l + k <= l_max; ++k) s += k * target.g[k] * psi[l + k];
        return target.lambda0 * s;
    };

    CompoundSteinSolution sol;
    sol.psi.assign(static_cast<std::size_t>(l_max + 1), 0.0);
    for (int l = l_max; l >= 1; --l) {
        const double rhs = (in[l] ? 1.0 : 0.0) - PA;
        sol.psi[l] = (shift_sum(sol.psi, l) - rhs) / l;
        if (!std::isfinite(sol.psi[l])) throw std::runtime_error("compound_stein_solve: singular truncated system");
    }
    for (int l = 1; l <= l_max; ++l) {
        const double rhs = (in[l] ? 1.0 : 0.0) - PA;
        sol.max_residual = std::max(sol.max_residual, std::abs(shift_sum(sol.psi, l) - l * sol.psi[l] - rhs));
    }
    sol.residual_at_zero = std::abs(shift_sum(sol.psi, 0) - ((in[0] ? 1.0 : 0.0) - PA));
    return sol;
}

double exact_tv(const std::vector<double>& a, const std::vector<double>& b) {
    double sa = 0.0, sb = 0.0, diff = 0.0;
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < a.size() ? a[i] : 0.0;
        const double y = i < b.size() ? b[i] : 0.0;
        if (x < 0.0 || y < 0.0) throw std::invalid_argument("exact_tv: negative pmf entry");
        sa += x;
        sb += y;
        diff += std::abs(x - y);
    }
    return 0.5 * (diff + std::abs((1.0 - sa) - (1.0 - sb)));
}

std::vector<double> pmf_of(const PathFunctional& F) {
    const auto& v = F.table();
    std::vector<double> pmf;
    for (std::size_t w = 0; w < v.size(); ++w) {
        const double r = std::round(v[w]);
        if (r < 0.0 || std::abs(v[w] - r) > 1e-9) throw std::domain_error("functional must be Z+-valued");
        const auto k = static_cast<std::size_t>(r);
        if (k >= pmf.size()) pmf.resize(k + 1, 0.0);
        pmf[k] += F.space().probability(w);
    }
    return pmf;
}

PoissonBound poisson_bound(const PathFunctional& F, double lambda0) {
    require_positive(lambda0, "poisson_bound");
    const Space& s = F.space();
    if (s.num_marks() != 1) throw std::invalid_argument("poisson_bound: mark space must have exactly one mark");
    pmf_of(F);  // Z+-valued guard
    const double mean = expectation(F);
    if (std::abs(mean - lambda0) > 1e-9) throw std::invalid_argument("poisson_bound: E[F] must equal lambda0");

    const auto basis = build_basis(s.params());
    const auto Linv = l_inverse(basis, F + (-mean), 1e-9);
    const ProcessTable DL = gradient(basis, Linv);
    const double lam = s.params().lambda;
    const double c = (1.0 - std::exp(-lambda0)) / lambda0;

    std::vector<double> pairing(s.size(), 0.0), remainder(s.size(), 0.0);
    for (int t = 1; t <= s.horizon(); ++t) {
        const auto Dt = tilde_grad(F, {t, 0}).table();
        for (std::size_t w = 0; w < s.size(); ++w) {
            const double dl = DL.at(w, {t, 0});
            pairing[w] += Dt[w] * (-dl) * lam;
            remainder[w] += std::abs(Dt[w] * (Dt[w] - 1.0)) * std::abs(dl) * lam;
        }
    }
    PoissonBound b;
    for (std::size_t w = 0; w < s.size(); ++w) {
        b.term1 += s.probability(w) * std::abs(lambda0 - pairing[w]);
        b.term2 += s.probability(w) * remainder[w];
    }
    b.term1 *= c;
    b.term2 *= c / lambda0;
    return b;
}

std::vector<double> convolution_power(const std::vector<double>& step, int times, std::size_t cutoff) {
    std::vector<double> out{1.0};
    for (int i = 0; i < times; ++i) {
        std::vector<double> next(std::min(out.size() + step.size() - 1, cutoff + 1), 0.0);
        for (std::size_t a = 0; a < out.size(); ++a)
            for (std::size_t b = 0; b < step.size() && a + b < next.size(); ++b) next[a + b] += out[a] * step[b];
        out = std::move(next);
    }
    return out;
}

namespace {
double psi_at(const CompoundSteinSolution& s, std::size_t l) { return l < s.psi.size() ? s.psi[l] : 0.0; }

CompoundSteinSolution solve_for(const CompoundTarget& target, const std::vector<int>& A, int l_max) {
    return compound_stein_solve(target, A, l_max);
}
}  // namespace

CompoundBound compound_poisson_bound(int T, double lambda, const std::vector<int>& marks, const std::vector<double>& Q,
                                     const CompoundTarget& target, const std::vector<std::vector<int>>& A_family) {
    if (T < 1) throw std::invalid_argument("compound_poisson_bound: T must be >= 1");
    if (marks.size() != Q.size() || marks.empty()) throw std::invalid_argument("compound_poisson_bound: marks/Q size");
    int kmax = 0;
    double mean_mark = 0.0;
    for (std::size_t i = 0; i < marks.size(); ++i) {
        if (marks[i] < 1) throw std::invalid_argument("compound_poisson_bound: marks must be positive integers");
        kmax = std::max(kmax, marks[i]);
        mean_mark += marks[i] * Q[i];
    }
    if (std::abs(T * lambda * mean_mark - target.lambda0 * target.mean_mark()) > 1e-9)
        throw std::invalid_argument("compound_poisson_bound: E[F] must equal lambda0 E[V]");

    std::vector<double> step(static_cast<std::size_t>(kmax + 1), 0.0);
    step[0] = 1.0 - lambda;
    for (std::size_t i = 0; i < marks.size(); ++i) step[marks[i]] += lambda * Q[i];
    const std::size_t top = static_cast<std::size_t>(T * kmax);
    const auto PT = convolution_power(step, T, top);
    const auto PT1 = convolution_power(step, T - 1, top);
    const int l_max = std::max(default_k_max(target.lambda0 * target.mean_mark()), static_cast<int>(top) + kmax + 1);

    CompoundBound b;
    b.d_pc = target.d_pc;
    b.term2 = 0.0;  // -D+ L^{-1}(F - EF) = k on the first chaos
    b.term1 = -1.0;
    for (std::size_t a = 0; a < A_family.size(); ++a) {
        const auto sol = solve_for(target, A_family[a], l_max);
        double s = 0.0;
        for (std::size_t i = 0; i < marks.size(); ++i) {
            const int k = marks[i];
            double inner = 0.0;
            for (std::size_t j = 0; j < PT.size(); ++j) {
                const double p1 = j < PT1.size() ? PT1[j] : 0.0;
                inner += psi_at(sol, j + static_cast<std::size_t>(k)) * (p1 - PT[j]);
            }
            s += Q[i] * k * inner;
        }
        const double term = std::abs(T * lambda * s);
        if (term > b.term1) {
            b.term1 = term;
            b.argmax = a;
        }
    }
    if (b.term1 < 0.0) b.term1 = 0.0;
    return b;
}

CompoundBound compound_poisson_bound(const PathFunctional& F, const CompoundTarget& target,
                                     const std::vector<std::vector<int>>& A_family) {
    const Space& s = F.space();
    const auto& prm = s.params();
    for (double k : prm.marks)
        if (k < 1.0 || k != std::round(k)) throw std::invalid_argument("unsupported functional form");
    const auto& v = F.table();
    for (std::size_t w = 0; w < s.size(); ++w) {
        double expect = 0.0;
        for (int t = 1; t <= s.horizon(); ++t) {
            const int d = s.digit(w, t);
            if (d != 0) expect += prm.marks[d - 1];
        }
        if (std::abs(v[w] - expect) > 1e-12 * std::max(1.0, std::abs(expect)))
            throw std::invalid_argument("unsupported functional form");
    }
    const double mean = expectation(F);
    if (std::abs(mean - target.lambda0 * target.mean_mark()) > 1e-9)
        throw std::invalid_argument("compound_poisson_bound: E[F] must equal lambda0 E[V]");

    const auto basis = build_basis(prm);
    const auto Linv = l_inverse(basis, F + (-mean), 1e-9);
    CompoundBound b;
    b.d_pc = target.d_pc;
    for (int t = 1; t <= s.horizon(); ++t)
        for (int k = 0; k < s.num_marks(); ++k)
            b.term2 += prm.intensity(k) * expectation(add_one_cost(Linv, {t, k}) * -1.0 + (-prm.marks[k]));
    b.term2 = std::abs(b.term2);

    int top = 0;
    for (double x : v) top = std::max(top, static_cast<int>(std::lround(x)));
    int kmax = 0;
    for (double k : prm.marks) kmax = std::max(kmax, static_cast<int>(k));
    const int l_max = std::max(default_k_max(target.lambda0 * target.mean_mark()), top + kmax + 1);

    b.term1 = -1.0;
    for (std::size_t a = 0; a < A_family.size(); ++a) {
        const auto sol = solve_for(target, A_family[a], l_max);
        double acc = 0.0;
        for (std::size_t w = 0; w < s.size(); ++w) {
            const double pw = s.probability(w);
            for (int t = 1; t <= s.horizon(); ++t)
                for (int k = 0; k < s.num_marks(); ++k) {
                    const auto kv = static_cast<std::size_t>(prm.marks[k]);
                    const auto aug = static_cast<std::size_t>(std::lround(v[s.with_digit(w, t, k + 1)]));
                    const auto cur = static_cast<std::size_t>(std::lround(v[w]));
                    acc += pw * prm.intensity(k) * (psi_at(sol, aug) - psi_at(sol, cur + kv)) * static_cast<double>(kv);
                }
        }
        const double term = std::abs(acc);
        if (term > b.term1) {
            b.term1 = term;
            b.argmax = a;
        }
    }
    if (b.term1 < 0.0) b.term1 = 0.0;
    return b;
}

std::vector<std::vector<int>> standard_set_family(int n, const std::vector<double>* pmf_F,
                                                  const std::vector<double>* pmf_PC) {
    std::vector<std::vector<int>> fam;
    for (int j = 0; j <= n; ++j) fam.push_back({j});
    for (int j = 0; j <= n; ++j) {
        std::vector<int> pre(static_cast<std::size_t>(j + 1));
        std::iota(pre.begin(), pre.end(), 0);
        fam.push_back(std::move(pre));
    }
    if (pmf_F && pmf_PC) {
        std::vector<int> star;
        const std::size_t len = std::max(pmf_F->size(), pmf_PC->size());
        for (std::size_t k = 0; k < len; ++k) {
            const double a = k < pmf_F->size() ? (*pmf_F)[k] : 0.0;
            const double b = k < pmf_PC->size() ? (*pmf_PC)[k] : 0.0;
            if (a > b) star.push_back(static_cast<int>(k));
        }
        fam.push_back(std::move(star));
    }
    return fam;
}

// ---------------------------------------------------------------------------

namespace {
void check_head_run(int n, int m, double p) {
    if (n < 1 || m < 1) throw std::invalid_argument("head run: n and m must be >= 1");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("head run: p must lie in (0,1)");
}
}  // namespace

double head_run_lambda0(int n, int m, double p) {
    check_head_run(n, m, p);
    return std::pow(p, m) * ((n - 1) * (1.0 - p) + 1.0);
}

PathFunctional head_run_functional(int n, int m, double p) {
    check_head_run(n, m, p);
    ModelParams prm;
    prm.T = n + m - 1;
    prm.marks = {1.0};
    prm.lambda = p;
    prm.Q = {1.0};
    auto space = make_space(prm);
    return PathFunctional::tabulate(space, [n, m](const Configuration& w) {
        auto N = [&](int i) { return w.digits[static_cast<std::size_t>(i - 1)] != 0; };
        int U = 1;
        for (int i = 1; i <= m; ++i) U &= N(i) ? 1 : 0;
        for (int i = 1; i <= n - 1; ++i) {
            bool clump = !N(i);
            for (int l = 1; l <= m && clump; ++l) clump = N(i + l);
            U += clump ? 1 : 0;
        }
        return static_cast<double>(U);
    });
}

double head_run_variance_identity(int n, int m, double p) {
    const double l0 = head_run_lambda0(n, m, p);
    const double q = 1.0 - p;
    const double p2m = std::pow(p, 2 * m);
    return l0 - 2.0 * m * q * p2m - (2.0 * m - 1.0) * q * q * p2m - p2m;
}

double head_run_variance_pairs(int n, int m, double p) {
    const double l0 = head_run_lambda0(n, m, p);
    const double q = 1.0 - p;
    const double p2m = std::pow(p, 2 * m);
    const double a = std::max(0, n - m - 1);
    const double b = std::max(0, n - m - 2);
    return l0 + 2.0 * a * q * p2m + a * b * q * q * p2m - l0 * l0;
}

double head_run_bound(int n, int m, double p) {
    const double l0 = head_run_lambda0(n, m, p);
    const double q = 1.0 - p;
    const double p2m = std::pow(p, 2 * m);
    return p2m * (2.0 * (m - 1) * q * q + 2.0 * m * q + 1.0) +
           (n - m + 1) * q * p2m * p * stein_constants(l0).grad;
}

namespace {
void check_dna(int n, int h, double alpha, double mu) {
    if (h < 1 || h >= n) throw std::invalid_argument("dna: need 1 <= h < n");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("dna: alpha must lie in [0,1)");
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("dna: mu must lie in (0,1)");
}
}  // namespace

double dna_lambda0(int n, int h, double alpha, double mu) {
    check_dna(n, h, alpha, mu);
    return (n - h + 1) * (1.0 - alpha) * mu;
}

double dna_d_pc(int n, int h, double alpha, double mu) {
    const double l0 = dna_lambda0(n, h, alpha, mu);
    return std::min(1.0, 1.0 / (l0 * (1.0 - alpha))) * std::exp(l0);
}

double dna_compound_term(int n, int h, double alpha, double mu) {
    return (n - h + 1) * dna_d_pc(n, h, alpha, mu) * mu * mu;
}

double dna_bound(int n, int h, double alpha, double mu) { return 2.0 * h * mu + dna_compound_term(n, h, alpha, mu); }

std::vector<double> dna_functional(int n, int h, double alpha, double mu, int k_cutoff) {
    check_dna(n, h, alpha, mu);
    if (k_cutoff < 1) throw std::invalid_argument("dna: k_cutoff must be >= 1");
    const double lam = (1.0 - alpha) * mu;
    std::vector<double> step(static_cast<std::size_t>(k_cutoff + 1), 0.0);
    step[0] = 1.0 - lam;
    for (int k = 1; k <= k_cutoff; ++k) step[k] = lam * (1.0 - alpha) * std::pow(alpha, k - 1);
    return convolution_power(step, n - h + 1, static_cast<std::size_t>(k_cutoff));
}

}  // namespace mbp
