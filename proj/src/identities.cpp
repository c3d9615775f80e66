#include "mbp/identities.hpp"

#include <algorithm>
#include <cmath>

#include "mbp/chaos.hpp"

namespace mbp {

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.pass(); });
}

const IdentityCheck* VerifyReport::worst() const {
    const IdentityCheck* w = nullptr;
    double ratio = -1.0;
    for (const auto& c : checks) {
        if (!c.gating) continue;
        const double r = c.residual / c.tolerance;
        if (r > ratio) {
            ratio = r;
            w = &c;
        }
    }
    return w;
}

void VerifyReport::append(const std::vector<IdentityCheck>& more) { checks.insert(checks.end(), more.begin(), more.end()); }

namespace {

double uniform_pm1(std::mt19937_64& rng) { return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0; }

double fact(int n) { return detail::factorial(n); }

struct Tracker {
    std::vector<IdentityCheck> out;
    void add(const std::string& name, double residual, double tol, bool gating = true) {
        for (auto& c : out)
            if (c.name == name) {
                c.residual = std::max(c.residual, residual);
                return;
            }
        out.push_back({name, residual, tol, gating});
    }
};

// prod over the support of dR/kappa
PathFunctional normalized_product(const SpacePtr& space, const OrthogonalBasis& basis, const Support& s) {
    std::vector<double> v(space->size(), 1.0);
    for (std::size_t w = 0; w < v.size(); ++w)
        for (const Point& p : s) v[w] *= basis.dr(p.k, space->digit(w, p.t)) / basis.kappa(p.k);
    return {space, std::move(v)};
}

PathFunctional dr_at(const SpacePtr& space, const OrthogonalBasis& basis, Point p) {
    std::vector<double> v(space->size());
    for (std::size_t w = 0; w < v.size(); ++w) v[w] = basis.dr(p.k, space->digit(w, p.t));
    return {space, std::move(v)};
}

Support random_support(const Space& space, int n, std::mt19937_64& rng) {
    std::vector<int> times(static_cast<std::size_t>(space.horizon()));
    for (int t = 1; t <= space.horizon(); ++t) times[t - 1] = t;
    std::shuffle(times.begin(), times.end(), rng);
    times.resize(static_cast<std::size_t>(n));
    std::sort(times.begin(), times.end());
    Support s;
    for (int t : times) s.push_back({t, static_cast<int>(rng() % static_cast<std::uint64_t>(space.num_marks()))});
    return s;
}

double expect_sum(const ProcessTable& u, const ProcessTable& v, const Space& s,
                  const std::vector<double>& weight_per_mark) {
    double acc = 0.0;
    for (std::size_t w = 0; w < s.size(); ++w)
        for (int t = 1; t <= s.horizon(); ++t)
            for (int k = 0; k < s.num_marks(); ++k)
                acc += s.probability(w) * weight_per_mark[k] * u.at(w, {t, k}) * v.at(w, {t, k});
    return acc;
}

std::vector<double> kappas(const OrthogonalBasis& b) {
    return {b.kappa.data(), b.kappa.data() + b.kappa.size()};
}

}  // namespace

PathFunctional random_functional(const SpacePtr& space, std::mt19937_64& rng) {
    std::vector<double> v(space->size());
    for (double& x : v) x = uniform_pm1(rng);
    return {space, std::move(v)};
}

Kernel random_kernel(const Space& space, int n, std::mt19937_64& rng) {
    Kernel f;
    for (std::size_t r = 0; r < space.size(); ++r)
        if (detail::support_order(space, r) == n) f[detail::support_of_rank(space, r)] = uniform_pm1(rng);
    return f;
}

ProcessTable random_process(const SpacePtr& space, std::mt19937_64& rng, bool predictable) {
    ProcessTable u(space, predictable);
    for (std::size_t w = 0; w < space->size(); ++w)
        for (int t = 1; t <= space->horizon(); ++t)
            for (int k = 0; k < space->num_marks(); ++k) {
                const std::size_t rep = space->atom(w, t - 1);
                u.at(w, {t, k}) = predictable && rep != w ? u.at(rep, {t, k}) : uniform_pm1(rng);
            }
    u.check();
    return u;
}

double max_abs_diff(const PathFunctional& a, const PathFunctional& b) {
    const auto& x = a.table();
    const auto& y = b.table();
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

double max_abs(const PathFunctional& a) {
    double m = 0.0;
    for (double x : a.table()) m = std::max(m, std::abs(x));
    return m;
}

std::vector<IdentityCheck> enumeration_identities(const SpacePtr& space, const OrthogonalBasis& basis,
                                                  std::uint64_t seed, int samples) {
    const Space& s = *space;
    const auto& prm = s.params();
    const int T = s.horizon();
    const int m = s.num_marks();
    const int nmax = std::min(3, T);
    auto rng = make_stream(seed, 1);
    Tracker tr;
    std::vector<double> nu(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) nu[k] = prm.intensity(k);
    const auto kap = kappas(basis);

    // basis and measure invariants
    {
        double total = 0.0;
        for (double p : s.probabilities()) total += p;
        tr.add("probabilities sum to one", std::abs(total - 1.0), 1e-12);
        tr.add("M M^-1 = I", (basis.M * basis.M_inv - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-12);
        double orth = 0.0, kap_err = 0.0, dz_err = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double e = 0.0;
                for (int d = 0; d <= m; ++d) e += prm.step_prob(d) * basis.dr(i, d) * basis.dr(j, d);
                if (i == j) kap_err = std::max(kap_err, std::abs(e - basis.kappa(i)));
                else orth = std::max(orth, std::abs(e));
            }
        for (int d = 0; d <= m; ++d)
            dz_err = std::max(dz_err, (basis.dz.col(d) - basis.M * basis.dr.col(d)).cwiseAbs().maxCoeff());
        tr.add("dR orthogonality", orth, 1e-12);
        tr.add("kappa = E[dR^2]", kap_err, 1e-12);
        tr.add("dZ = M dR", dz_err, 1e-12);
        for (int t = 1; t <= T; ++t) {
            const auto Yinc = compensated_sum(space, t) - (t > 1 ? compensated_sum(space, t - 1)
                                                                 : PathFunctional::constant(space, 0.0));
            tr.add("Ybar martingale", max_abs(conditional_expectation(Yinc, t - 1)), 1e-12);
        }
    }

    for (int smp = 0; smp < samples; ++smp) {
        const auto F = random_functional(space, rng);
        const auto G = random_functional(space, rng);

        for (int t = 0; t <= T; ++t)
            tr.add("tower property", std::abs(expectation(conditional_expectation(F, t)) - expectation(F)), 1e-12);

        // isometry
        for (int n = 1; n <= nmax; ++n)
            for (int k = 1; k <= nmax; ++k) {
                const auto f = random_kernel(s, n, rng);
                const auto g = random_kernel(s, k, rng);
                const double lhs =
                    expectation(multiple_integral(basis, space, f, n) * multiple_integral(basis, space, g, k));
                const double rhs = n == k ? fact(n) * fact(n) * kappa_inner(basis, f, g) : 0.0;
                tr.add("isometry", std::abs(lhs - rhs), 1e-10);
            }

        // Mecke
        {
            const auto u = random_process(space, rng, false);
            const auto [l, r] = mecke_check(u);
            tr.add("Mecke formula", std::abs(l - r), 1e-12);
        }

        // L1 integration by parts for predictable u
        {
            const auto u = random_process(space, rng, true);
            ProcessTable Dp(space), Db(space);
            for (int t = 1; t <= T; ++t) {
                const auto bar = bar_grad(F, t);
                for (int k = 0; k < m; ++k) {
                    Dp.set_slice({t, k}, add_one_cost(F, {t, k}));
                    Db.set_slice({t, k}, bar);
                }
            }
            const double lhs = expect_sum(Dp, u, s, nu);
            const double rhs = expectation(F * tilde_divergence(u)) + expect_sum(Db, u, s, nu);
            tr.add("L1 integration by parts", std::abs(lhs - rhs), 1e-10);
            tr.add("E[tilde divergence] = 0 (predictable)", std::abs(expectation(tilde_divergence(u))), 1e-12);
        }

        // L2 integration by parts, general u
        {
            const auto u = random_process(space, rng, false);
            const auto DF = gradient(basis, F);
            const double lhs = expectation(F * divergence(basis, u));
            const double rhs = expect_sum(DF, u, s, kap);
            tr.add("L2 integration by parts", std::abs(lhs - rhs), 1e-10);
            const auto up = random_process(space, rng, true);
            tr.add("divergence = sum u dR (predictable)",
                   max_abs_diff(divergence(basis, up), divergence_predictable(basis, up)), 1e-10);
        }

        // L = -delta D
        tr.add("L = -delta D",
               max_abs_diff(number_operator(basis, F), divergence(basis, gradient(basis, F)) * -1.0), 1e-10);

        // product rules
        for (int t = 1; t <= T; ++t) {
            const auto Fpi = F - bar_grad(F, t);
            const auto Gpi = G - bar_grad(G, t);
            for (int k = 0; k < m; ++k) {
                const auto pF = add_one_cost(F, {t, k});
                const auto pG = add_one_cost(G, {t, k});
                tr.add("product rule D+", max_abs_diff(add_one_cost(F * G, {t, k}), Fpi * pG + Gpi * pF + pF * pG),
                       1e-12);
                const auto mF = remove_one_cost(F, {t, k});
                const auto mG = remove_one_cost(G, {t, k});
                tr.add("product rule D-", max_abs_diff(remove_one_cost(F * G, {t, k}), F * mG + G * mF - mF * mG),
                       1e-12);
            }
        }

        // conditional truncation and tensor recursion
        for (int n = 1; n <= nmax; ++n) {
            const auto f = random_kernel(s, n, rng);
            const auto J = multiple_integral(basis, space, f, n);
            for (int t = 0; t <= T; ++t)
                tr.add("conditional truncation",
                       max_abs_diff(conditional_expectation(J, t), multiple_integral(basis, space, restrict_to(f, t), n)),
                       1e-12);
        }
        for (int n = 1; n <= std::min(2, T - 1); ++n) {
            const auto g = random_kernel(s, 1, rng);
            const auto f = random_kernel(s, n, rng);
            const auto lhs = multiple_integral(basis, space, symmetric_tensor(g, f), n + 1);
            auto rhs = PathFunctional::constant(space, 0.0);
            for (int t = 1; t <= T; ++t)
                for (int k = 0; k < m; ++k) {
                    const Point p{t, k};
                    const double gv = g.count({p}) ? g.at({p}) : 0.0;
                    const auto first =
                        multiple_integral(basis, space, restrict_to(symmetric_tensor(g, slice_last(f, p)), t - 1), n) *
                        static_cast<double>(n);
                    const auto second = multiple_integral(basis, space, restrict_to(f, t - 1), n) * gv;
                    rhs = rhs + (first + second) * dr_at(space, basis, p);
                }
            tr.add("tensor recursion", max_abs_diff(lhs, rhs), 1e-12);
        }

        // expected iterated gradient against normalized dR products
        for (int n = 1; n <= nmax; ++n)
            for (int rep = 0; rep < 3; ++rep) {
                const auto supp = random_support(s, n, rng);
                const double lhs = expectation(iterated_gradient(basis, F, supp));
                const double rhs = expectation(F * normalized_product(space, basis, supp));
                tr.add("E[D^(n)F] = E[F prod dR/kappa]", std::abs(lhs - rhs), 1e-10);
            }

        // covariance through expected iterated gradients
        {
            const auto cF = detail::expected_gradients(basis, F);
            const auto cG = detail::expected_gradients(basis, G);
            double rhs = 0.0;
            for (std::size_t r = 1; r < cF.size(); ++r) {
                double w = cF[r] * cG[r];
                for (const Point& p : detail::support_of_rank(s, r)) w *= basis.kappa(p.k);
                rhs += w;
            }
            const double lhs = expectation(F * G) - expectation(F) * expectation(G);
            tr.add("covariance via iterated gradients", std::abs(lhs - rhs), 1e-10);
        }

        // Poincare
        {
            const auto DF = gradient(basis, F);
            const double energy = expect_sum(DF, DF, s, kap);
            const double var = expectation(F * F) - std::pow(expectation(F), 2);
            tr.add("Poincare inequality", std::max(0.0, var - energy), 1e-12);
        }
    }
    return tr.out;
}

std::vector<IdentityCheck> round_trip_identities(const SpacePtr& space, const OrthogonalBasis& basis,
                                                 std::uint64_t seed, int count) {
    const Space& s = *space;
    auto rng = make_stream(seed, 2);
    Tracker tr;
    for (int i = 0; i < count; ++i) {
        const auto F = random_functional(space, rng);
        const auto c = stroock_decompose(basis, F);
        tr.add("stroock round trip", max_abs_diff(reconstruct(basis, space, c), F), 1e-9);
        tr.add("clark round trip", max_abs_diff(clark_reconstruct(basis, F), F), 1e-9);
        tr.add("clark round trip (dZ form)", max_abs_diff(clark_reconstruct_z(F), F), 1e-9);
        for (int t = 0; t <= s.horizon(); ++t)
            tr.add("clark from time t", max_abs_diff(clark_reconstruct_from(basis, F, t), F), 1e-9);

        const auto g = pseudo_chaos_decompose(F);
        auto Fz = PathFunctional::constant(space, g.f0);
        for (int n = 1; n <= g.max_order(); ++n) Fz = Fz + multiple_integral_z(space, g.order(n), n);
        tr.add("pseudo-chaos round trip", max_abs_diff(Fz, F), 1e-9);

        // dZ integrand = M^-T applied to the dR integrand
        const auto uR = clark_integrand(basis, F);
        const auto uZ = clark_integrand_z(F);
        double err = 0.0;
        for (std::size_t w = 0; w < s.size(); ++w)
            for (int t = 1; t <= s.horizon(); ++t)
                for (int p = 0; p < s.num_marks(); ++p) {
                    double v = 0.0;
                    for (int k = 0; k < s.num_marks(); ++k) v += basis.M_inv(k, p) * uR.at(w, {t, k});
                    err = std::max(err, std::abs(v - uZ.at(w, {t, p})));
                }
        tr.add("clark integrand R->Z", err, 1e-10);

        const auto c2 = stroock_decompose(basis, reconstruct(basis, space, c));
        const auto t1 = detail::table_from_coefficients(s, c);
        const auto t2 = detail::table_from_coefficients(s, c2);
        double cerr = 0.0;
        for (std::size_t r = 0; r < t1.size(); ++r) cerr = std::max(cerr, std::abs(t1[r] - t2[r]));
        tr.add("chaos uniqueness", cerr, 1e-9);
    }
    return tr.out;
}

std::vector<IdentityCheck> semigroup_identities(const SpacePtr& space, const OrthogonalBasis& basis,
                                                std::uint64_t seed, int samples) {
    const Space& s = *space;
    auto rng = make_stream(seed, 3);
    Tracker tr;
    const double taus[] = {0.1, 0.5, 1.0, 2.0};
    for (int i = 0; i < samples; ++i) {
        const auto F = random_functional(space, rng);
        const auto G = random_functional(space, rng);
        const auto Fc = F + (-expectation(F));
        tr.add("L L^-1 = id (centered)", max_abs_diff(number_operator(basis, l_inverse(basis, Fc)), Fc), 1e-10);
        tr.add("L^-1 by Gauss-Laguerre", max_abs_diff(l_inverse_quadrature(basis, Fc), l_inverse(basis, Fc)), 1e-8);
        tr.add("P_0 = id", max_abs_diff(ou_spectral(basis, F, 0.0), F), 1e-10);
        for (double tau : taus) {
            const auto PF = ou_spectral(basis, F, tau);
            const auto DF = gradient(basis, F);
            for (int t = 1; t <= s.horizon(); ++t)
                for (int k = 0; k < s.num_marks(); ++k)
                    tr.add("commutation D P_tau = e^-tau P_tau D",
                           max_abs_diff(gradient(basis, PF, {t, k}),
                                        ou_spectral(basis, DF.slice({t, k}), tau) * std::exp(-tau)),
                           1e-10);
            double e1 = 0.0, e1F = 0.0, e2 = 0.0, e2F = 0.0;
            for (std::size_t w = 0; w < s.size(); ++w) {
                const double p = s.probability(w);
                e1 += p * std::abs(PF.at(w));
                e1F += p * std::abs(F.at(w));
                e2 += p * PF.at(w) * PF.at(w);
                e2F += p * F.at(w) * F.at(w);
            }
            tr.add("contractivity p=1", std::max(0.0, e1 - e1F), 1e-12);
            tr.add("contractivity p=2", std::max(0.0, e2 - e2F), 1e-12);
            const auto f1 = random_kernel(s, 1, rng);
            const auto J1 = multiple_integral(basis, space, f1, 1);
            tr.add("P_tau J_1 = e^-tau J_1", max_abs_diff(ou_spectral(basis, J1, tau), J1 * std::exp(-tau)), 1e-12);
        }
        const auto gFG = gamma_tilde(F, G);
        tr.add("Gamma~ symmetric", max_abs_diff(gFG, gamma_tilde(G, F)), 1e-12);
        tr.add("Gamma~(F, const) = 0", max_abs(gamma_tilde(F, PathFunctional::constant(space, 1.7))), 1e-12);
        tr.add("Gamma~ four-integral expansion", max_abs_diff(gFG, gamma_tilde_expansion(F, G)), 1e-10);
        const double lhs = -expectation(gFG);
        const double rhs =
            0.5 * (expectation(F * number_operator_tilde(G)) + expectation(G * number_operator_tilde(F)));
        tr.add("-E[Gamma~] = (E[F L~G] + E[G L~F])/2", std::abs(lhs - rhs), 1e-10);
    }
    return tr.out;
}

std::vector<IdentityCheck> girsanov_identities(const SpacePtr& space, const OrthogonalBasis& basis,
                                               const TargetMeasure& target) {
    const Space& s = *space;
    const int T = s.horizon();
    Tracker tr;
    const Space tgt(target.apply_to(s.params()));
    const auto L = girsanov_density(space, target, T);
    double rel = 0.0;
    for (std::size_t w = 0; w < s.size(); ++w)
        rel = std::max(rel, std::abs(L.at(w) * s.probability(w) - tgt.probability(w)) / tgt.probability(w));
    tr.add("density factorization (relative)", rel, 1e-14);
    tr.add("E[L_T] = 1", std::abs(expectation(L) - 1.0), 1e-12);
    for (int t = 0; t <= T; ++t)
        tr.add("density martingale",
               max_abs_diff(conditional_expectation(L, t), girsanov_density(space, target, t)), 1e-12);
    tr.add("compound-form density", max_abs_diff(girsanov_density_compound(space, target, T), L), 1e-12);
    tr.add("Doleans-form density", max_abs_diff(girsanov_density_doleans(basis, space, target), L), 1e-12);
    const auto h = girsanov_drift_r(basis, s.params(), target);
    tr.add("Doleans series = product", max_abs_diff(doleans_series(basis, space, h), doleans_exponential(basis, space, h)),
           1e-12);
    const auto N = jump_count(space, T);
    double direct = 0.0;
    for (std::size_t w = 0; w < s.size(); ++w) direct += tgt.probability(w) * N.at(w);
    tr.add("reweighted expectation", std::abs(reweighted_expectation(N, target) - direct), 1e-12);
    return tr.out;
}

std::vector<IdentityCheck> add_one_cost_diagnostics(const SpacePtr& space, const OrthogonalBasis& basis,
                                                    std::uint64_t seed, int samples) {
    const Space& s = *space;
    const int m = s.num_marks();
    auto rng = make_stream(seed, 4);
    Tracker tr;
    for (int i = 0; i < samples; ++i) {
        const auto F = random_functional(space, rng);
        const auto DF = gradient(basis, F);
        for (int t = 1; t <= s.horizon(); ++t)
            for (int k = 0; k < m; ++k) {
                const auto Dp = add_one_cost(F, {t, k});
                tr.add("diagnostic: |D - D+| (literal add-one cost)", max_abs_diff(DF.slice({t, k}), Dp), 1e-10, false);
                auto combo = PathFunctional::constant(space, 0.0);
                for (int j = 0; j < m; ++j) combo = combo + add_one_cost(F, {t, j}) * basis.M(j, k);
                tr.add("gradient = M^T add-one cost", max_abs_diff(DF.slice({t, k}), combo), 1e-10);
            }
        for (int n = 1; n <= std::min(3, s.horizon()); ++n) {
            const auto supp = random_support(s, n, rng);
            const double lhs = expectation(iterated_difference(F, supp));
            const double rhs = expectation(F * normalized_product(space, basis, supp));
            tr.add("diagnostic: E[D+^(n)F] - E[F prod dR/kappa]", std::abs(lhs - rhs), 1e-10, false);
        }
        double energy = 0.0;
        for (int t = 1; t <= s.horizon(); ++t)
            for (int k = 0; k < m; ++k) {
                const auto Dp = add_one_cost(F, {t, k});
                energy += basis.kappa(k) * expectation(Dp * Dp);
            }
        const double var = expectation(F * F) - std::pow(expectation(F), 2);
        tr.add("diagnostic: Poincare with D+", std::max(0.0, var - energy), 1e-12, false);
    }
    return tr.out;
}

TargetMeasure default_target(const ModelParams& params) {
    TargetMeasure t;
    t.lambda = 0.5 * (params.lambda + 0.5);
    double total = 0.0;
    for (std::size_t k = 0; k < params.Q.size(); ++k) total += (static_cast<double>(k) + 1.0) * params.Q[k];
    for (std::size_t k = 0; k < params.Q.size(); ++k) t.Q.push_back((static_cast<double>(k) + 1.0) * params.Q[k] / total);
    return t;
}

VerifyReport verify_suite(const ModelParams& params, std::uint64_t seed, int samples) {
    const auto space = make_space(params);
    const auto basis = build_basis(params);
    VerifyReport rep;
    rep.append(enumeration_identities(space, basis, seed, samples));
    rep.append(round_trip_identities(space, basis, seed, samples));
    rep.append(semigroup_identities(space, basis, seed, samples));
    rep.append(girsanov_identities(space, basis, default_target(params)));
    rep.append(add_one_cost_diagnostics(space, basis, seed, samples));
    return rep;
}

}  // namespace mbp
