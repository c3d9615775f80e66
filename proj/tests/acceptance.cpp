// Acceptance gate: one PASS/FAIL line per criterion. `acceptance N` runs criterion N only.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "mbp/basis.hpp"
#include "mbp/chaos.hpp"
#include "mbp/config_space.hpp"
#include "mbp/hedging.hpp"
#include "mbp/identities.hpp"
#include "mbp/malliavin.hpp"
#include "mbp/measure_change.hpp"
#include "mbp/stein.hpp"
#include "mbp/util.hpp"

#ifndef MBP_CLI_PATH
#error "MBP_CLI_PATH must name the CLI executable"
#endif

using namespace mbp;

namespace {

std::string fmt(double x) { return format_double(x); }

ModelParams cti() {
    ModelParams p;
    p.T = 3;
    p.marks = {1.0, -1.0};
    p.lambda = 0.5;
    p.Q = {0.5, 0.5};
    p.seed = 2024;
    return p;
}

ModelParams three_marks() {
    ModelParams p;
    p.T = 5;
    p.marks = {1.0, 2.0, 3.0};
    p.lambda = 0.3;
    p.Q = {0.5, 0.3, 0.2};
    p.seed = 2025;
    return p;
}

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;
    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
    }
};

double worst_of(const std::vector<IdentityCheck>& checks, std::string* name) {
    double w = 0.0;
    for (const auto& c : checks)
        if (c.gating && c.residual >= w) {
            w = c.residual;
            if (name) *name = c.name;
        }
    return w;
}

// ---------------------------------------------------------------------------

Outcome ac1() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& p : {cti(), three_marks()}) {
        const auto space = make_space(p);
        const auto basis = build_basis(p);
        const auto checks = enumeration_identities(space, basis, p.seed, 5);
        for (const auto& c : checks)
            if (c.gating) o.require(c.residual <= 1e-10, "T=" + std::to_string(p.T) + " " + c.name + " residual " + fmt(c.residual));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < 60.0, "runtime " + fmt(secs) + " s");
    return o;
}

Outcome ac2() {
    Outcome o;
    for (const auto& p : {cti(), three_marks()}) {
        const auto checks = round_trip_identities(make_space(p), build_basis(p), p.seed, 20);
        for (const auto& c : checks)
            o.require(c.residual <= 1e-9, "T=" + std::to_string(p.T) + " " + c.name + " residual " + fmt(c.residual));
    }
    return o;
}

Outcome ac3() {
    Outcome o;
    const auto p = cti();
    const auto space = make_space(p);
    const auto basis = build_basis(p);
    auto rng = make_stream(p.seed, 99);
    auto product = [&](const Support& s) {
        return PathFunctional::tabulate(space, [&](const Configuration& w) {
            double v = 1.0;
            for (const Point& q : s) v *= delta_r(basis, p, w, q);
            return v;
        });
    };
    const std::vector<std::pair<std::string, PathFunctional>> fs{
        {"N_3", jump_count(space, 3)},
        {"dR(1,1) dR(2,2)", product({{1, 0}, {2, 1}})},
        {"dR(1,2) dR(2,1) dR(3,1)", product({{1, 1}, {2, 0}, {3, 0}})},
        {"random", random_functional(space, rng)}};
    std::size_t total = 0, failures = 0;
    std::uint64_t stream = 0;
    for (const auto& [name, F] : fs)
        for (double tau : {0.1, 1.0}) {
            const auto spec = ou_spectral(basis, F, tau);
            const auto mc = ou_mehler_mc(F, tau, 100000, p.seed + 1000 * ++stream);
            std::size_t local = 0;
            for (std::size_t w = 0; w < space->size(); ++w) {
                ++total;
                const double err = std::abs(mc.mean[w] - spec.at(w));
                const bool ok = mc.std_error[w] > 0.0 ? err <= 4.0 * mc.std_error[w] : err <= 1e-12;
                if (!ok) ++local;
            }
            failures += local;
            o.notes.push_back("  info " + name + " tau=" + fmt(tau) + " outside 4 SE: " + std::to_string(local) + "/27");
        }
    const double rate = static_cast<double>(failures) / static_cast<double>(total);
    o.require(rate <= 0.01, "failure rate " + fmt(rate) + " over " + std::to_string(total) + " comparisons");
    return o;
}

Outcome ac4() {
    Outcome o;
    for (const auto& p : {cti(), three_marks()}) {
        const auto space = make_space(p);
        const auto basis = build_basis(p);
        std::vector<TargetMeasure> targets{default_target(p)};
        TargetMeasure skew;
        skew.lambda = 0.2;
        for (std::size_t k = 0; k < p.Q.size(); ++k) skew.Q.push_back(k == 0 ? 0.6 : 0.4 / (p.Q.size() - 1.0));
        targets.push_back(skew);
        for (const auto& tgt : targets) {
            const Space tilted(tgt.apply_to(p));
            const auto L = girsanov_density(space, tgt, p.T);
            double rel = 0.0;
            for (std::size_t w = 0; w < space->size(); ++w)
                rel = std::max(rel, std::abs(L.at(w) * space->probability(w) - tilted.probability(w)) / tilted.probability(w));
            const double dol = max_abs_diff(girsanov_density_doleans(basis, space, tgt), L);
            const double cmp = max_abs_diff(girsanov_density_compound(space, tgt, p.T), L);
            const std::string tag = "T=" + std::to_string(p.T) + " lambda~=" + fmt(tgt.lambda);
            o.require(rel <= 1e-14, tag + " factorization relative " + fmt(rel));
            o.require(dol <= 1e-12, tag + " Doleans route " + fmt(dol));
            o.require(cmp <= 1e-12, tag + " compound form " + fmt(cmp));
        }
    }
    return o;
}

Outcome ac5() {
    Outcome o;
    struct Case {
        int n, m;
        double p;
    };
    bool first = true;
    for (const Case c : {Case{10, 2, 0.5}, Case{8, 2, 0.3}, Case{10, 3, 0.5}}) {
        const auto U = head_run_functional(c.n, c.m, c.p);
        const double l0 = head_run_lambda0(c.n, c.m, c.p);
        const double mean = expectation(U);
        const double var = expectation(U * U) - mean * mean;
        const auto pmf = pmf_of(U);
        const double tv = exact_tv(pmf, poisson_pmf(l0, static_cast<int>(pmf.size()) + 60));
        const double bound = head_run_bound(c.n, c.m, c.p);
        const std::string tag = "(n,m,p)=(" + std::to_string(c.n) + "," + std::to_string(c.m) + "," + fmt(c.p) + ")";
        o.notes.push_back("  info " + tag + " states " + std::to_string(U.space().size()) + " lambda0 " + fmt(l0) +
                          " Var enumerated " + fmt(var) + " printed identity " +
                          fmt(head_run_variance_identity(c.n, c.m, c.p)) + " TV " + fmt(tv) + " bound " + fmt(bound) +
                          " general bound by enumeration " + fmt(poisson_bound(U, l0).bound()));
        if (first) {
            o.require(U.space().size() == 2048, tag + " exhaustive over 2^11 sequences");
            o.require(std::abs(mean - 1.375) <= 1e-12, tag + " E[U] = 1.375, got " + fmt(mean));
            o.require(std::abs(var - 1.140625) <= 1e-10, tag + " Var[U] = 1.140625, got " + fmt(var));
            o.require(std::abs(head_run_variance_identity(c.n, c.m, c.p) - var) <= 1e-10,
                      tag + " variance identity matches enumeration");
            o.require(std::abs(bound - 0.295164) <= 1e-6, tag + " bound " + fmt(bound));
            first = false;
        }
        o.require(tv <= bound, tag + " TV " + fmt(tv) + " <= bound " + fmt(bound));
    }
    return o;
}

Outcome ac6() {
    Outcome o;
    const int n = 50, h = 5;
    const double alpha = 0.2, mu = 0.02;
    const auto H = dna_functional(n, h, alpha, mu, 40);
    const double l0 = dna_lambda0(n, h, alpha, mu);
    const auto pa = polya_aeppli(l0, alpha);
    const double tv = exact_tv(H, pa.pmf);
    const double rhs = (n - h + 1) * pa.d_pc * mu * mu;
    o.require(std::abs(pa.d_pc - dna_d_pc(n, h, alpha, mu)) <= 1e-12, "d_pc " + fmt(pa.d_pc));
    o.require(tv <= rhs, "TV " + fmt(tv) + " <= (n-h+1) d_pc mu^2 = " + fmt(rhs));
    auto rng = make_stream(606, 0);
    double worst_res = 0.0, worst_sup = 0.0;
    for (int i = 0; i < 200; ++i) {
        std::vector<int> A;
        for (int k = 0; k <= 40; ++k)
            if (rng() & 1U) A.push_back(k);
        const auto s = compound_stein_solve(pa, A);
        worst_res = std::max(worst_res, s.max_residual);
        worst_sup = std::max(worst_sup, s.sup_psi());
    }
    o.require(worst_res <= 1e-10, "compound solver residual " + fmt(worst_res));
    o.require(worst_sup <= pa.d_pc, "sup |psi_A| " + fmt(worst_sup) + " <= d_pc " + fmt(pa.d_pc));
    return o;
}

Outcome ac7() {
    Outcome o;
    auto rng = make_stream(707, 0);
    for (double l0 : {0.5, 1.0, 1.375, 3.0}) {
        const auto c = stein_constants(l0);
        double phi = 0.0, grad = 0.0, grad2 = 0.0, res = 0.0;
        for (int i = 0; i < 200; ++i) {
            std::vector<int> A;
            for (int k = 0; k <= default_k_max(l0); ++k)
                if (rng() & 1U) A.push_back(k);
            const auto s = solve_stein_poisson(l0, A);
            phi = std::max(phi, s.sup_phi());
            grad = std::max(grad, s.sup_grad());
            grad2 = std::max(grad2, s.sup_grad2());
            res = std::max(res, s.max_residual);
        }
        const std::string tag = "lambda0=" + fmt(l0);
        o.require(res <= 1e-10, tag + " recursion residual " + fmt(res));
        o.require(phi <= c.phi, tag + " sup|phi| " + fmt(phi) + " <= " + fmt(c.phi));
        o.require(grad <= c.grad, tag + " sup|grad phi| " + fmt(grad) + " <= " + fmt(c.grad));
        o.require(grad2 <= c.grad2, tag + " sup|grad^2 phi| " + fmt(grad2) + " <= " + fmt(c.grad2));
    }
    return o;
}

MarketParams market(int T, bool martingale) {
    MarketParams m;
    m.a = -0.1;
    m.b = 0.2;
    m.lambda = 0.5;
    m.p = 0.5;
    m.r = martingale ? 0.025 : 0.0;
    m.T = T;
    return m;
}

Outcome ac8() {
    Outcome o;
    double gap = 0.0, kw_id = 0.0, orth = 0.0, pgf = 0.0;
    for (int T : {2, 3, 4})
        for (bool mart : {true, false}) {
            const auto m = market(T, mart);
            const auto pt = price_paths(m);
            const auto mmm = minimal_martingale_measure(m, pt);
            auto rng = make_stream(808, static_cast<std::uint64_t>(10 * T + mart));
            std::vector<PathFunctional> claims;
            for (int i = 0; i < 5; ++i) claims.push_back(random_functional(pt.space, rng) + 1.0);
            claims.push_back(european_call(pt, 1.05));
            for (const auto& F : claims) {
                const auto res = optimal_strategy(m, pt, F, m.x);
                const auto orc = ls_oracle(m, pt, F, m.x);
                gap = std::max(gap, std::abs(res.residual_risk - orc.residual_risk));
                const auto kw = kunita_watanabe(m, pt, mmm, F);
                kw_id = std::max(kw_id, max_abs_diff(gains(kw.xi, pt) + kw.L[T] + kw.F0, F));
                for (int t = 1; t <= T; ++t) {
                    const auto dL = kw.L[t] - kw.L[t - 1];
                    orth = std::max(orth, max_abs(conditional_expectation(dL * discounted_increment(pt, t), t - 1)));
                    orth = std::max(orth, max_abs(conditional_expectation(dL, t - 1)));
                }
            }
            pgf = std::max(pgf, trinomial_pgf_residual(m, pt, {0.25, 0.5, 0.9, 1.1, 1.5, 2.0}));
            if (mart) {
                const auto rep = optimal_strategy(m, pt, pt.X[T], 1.0);
                double dev = 0.0;
                for (const auto& row : rep.strategy.phi.values)
                    for (double v : row) dev = std::max(dev, std::abs(v - 1.0));
                o.require(dev <= 1e-10 && rep.residual_risk <= 1e-10,
                          "T=" + std::to_string(T) + " attainable claim: max|phi-1| " + fmt(dev) + " residual " +
                              fmt(rep.residual_risk));
            }
        }
    o.require(gap <= 1e-8, "optimal vs oracle residual gap " + fmt(gap));
    o.require(kw_id <= 1e-10, "Kunita-Watanabe identity " + fmt(kw_id));
    o.require(orth <= 1e-10, "orthogonality " + fmt(orth));
    o.require(pgf <= 1e-12, "trinomial PGF " + fmt(pgf));
    return o;
}

std::string run_capture(const std::string& cmd, int* status) {
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        *status = -1;
        return out;
    }
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    *status = pclose(pipe);
    return out;
}

Outcome ac9() {
    Outcome o;
    const std::string cli = MBP_CLI_PATH;
    const std::vector<std::string> cmds{
        cli + " --no-timestamp verify --T 3 --marks 1,-1 --lambda 0.5 --Q 0.5,0.5 --seed 42",
        cli + " --no-timestamp stein headrun --n 10 --m 2 --p 0.5 --seed 42"};
    for (const auto& cmd : cmds) {
        int s1 = 0, s2 = 0;
        const auto a = run_capture(cmd, &s1);
        const auto b = run_capture(cmd, &s2);
        o.require(s1 == 0 && s2 == 0 && !a.empty(), "exit status 0: " + cmd);
        o.require(a == b, "byte-identical (" + std::to_string(a.size()) + " bytes): " + cmd);
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"enumeration identity suite", ac1}, {"Stroock/Clark round trips", ac2},
        {"Mehler vs spectral semigroup", ac3}, {"Girsanov density routes", ac4},
        {"head run", ac5},                   {"DNA compound Poisson", ac6},
        {"Stein constants", ac7},            {"quadratic hedging", ac8},
        {"CLI determinism", ac9}};
    int only = 0;
    if (argc > 1) only = std::stoi(argv[1]);
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (only && id != only) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        for (const auto& n : o.notes) std::cout << n << "\n";
        std::cout << "AC" << id << " " << (o.pass ? "PASS" : "FAIL") << ": " << criteria[i].first << "\n";
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
