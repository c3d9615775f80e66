#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "mbp/chaos.hpp"
#include "mbp/identities.hpp"
#include "mbp/malliavin.hpp"
#include "mbp/stein.hpp"

using namespace mbp;
using Catch::Matchers::WithinAbs;

namespace {

struct Cti {
    SpacePtr space = make_space(testing::cti());
    OrthogonalBasis basis = build_basis(testing::cti());
};

void require_constant(const PathFunctional& F, double c, double tol) {
    for (double x : F.table()) REQUIRE_THAT(x, WithinAbs(c, tol));
}

}  // namespace

TEST_CASE("add-one cost", "[malliavin]") {
    Cti c;
    const auto N = jump_count(c.space, 3);
    for (int t = 1; t <= 3; ++t)
        for (int k = 0; k < 2; ++k) {
            require_constant(add_one_cost(PathFunctional::constant(c.space, 4.0), {t, k}), 0.0, 0.0);
            require_constant(add_one_cost(N, {t, k}), 1.0, 1e-15);
        }
    // a first-order integral in dZ form has add-one cost g(t,k)
    const Kernel g{{{{1, 0}}, 0.4}, {{{1, 1}}, -0.9}, {{{3, 1}}, 1.7}};
    const auto Jz = multiple_integral_z(c.space, g, 1);
    for (const auto& [s, v] : g) require_constant(add_one_cost(Jz, s[0]), v, 1e-14);
    require_constant(add_one_cost(Jz, {2, 0}), 0.0, 1e-14);
}

TEST_CASE("gradient annihilates the first chaos to its kernel", "[malliavin]") {
    Cti c;
    const Kernel h{{{{1, 0}}, 0.4}, {{{2, 1}}, -0.9}, {{{3, 0}}, 1.7}};
    const auto J = multiple_integral(c.basis, c.space, h, 1);
    for (int t = 1; t <= 3; ++t)
        for (int k = 0; k < 2; ++k) {
            const auto it = h.find({{t, k}});
            require_constant(gradient(c.basis, J, {t, k}), it == h.end() ? 0.0 : it->second, 1e-14);
        }
}

TEST_CASE("gradient equals add-one cost for a single mark", "[malliavin]") {
    ModelParams p;
    p.T = 4;
    p.marks = {1.0};
    p.Q = {1.0};
    p.lambda = 0.35;
    const auto space = make_space(p);
    const auto basis = build_basis(p);
    auto rng = make_stream(41, 0);
    const auto F = random_functional(space, rng);
    for (int t = 1; t <= 4; ++t) CHECK(max_abs_diff(gradient(basis, F, {t, 0}), add_one_cost(F, {t, 0})) < 1e-12);
}

TEST_CASE("remove-one cost", "[malliavin]") {
    Cti c;
    const auto N = jump_count(c.space, 3);
    for (int t = 1; t <= 3; ++t)
        for (int k = 0; k < 2; ++k) {
            require_constant(remove_one_cost(PathFunctional::constant(c.space, 2.0), {t, k}), 0.0, 0.0);
            const auto Dm = remove_one_cost(N, {t, k});
            for (std::size_t w = 0; w < c.space->size(); ++w)
                REQUIRE(Dm.at(w) == (c.space->digit(w, t) == k + 1 ? 1.0 : 0.0));
        }
}

TEST_CASE("tilde and bar gradients", "[malliavin]") {
    Cti c;
    auto rng = make_stream(43, 0);
    const auto F = random_functional(c.space, rng);
    require_constant(tilde_grad(PathFunctional::constant(c.space, 1.0), {1, 0}), 0.0, 0.0);
    require_constant(bar_grad(PathFunctional::constant(c.space, 1.0), 2), 0.0, 0.0);
    for (int t = 1; t <= 3; ++t)
        for (int k = 0; k < 2; ++k) {
            const auto Dt = tilde_grad(F, {t, k});
            for (std::size_t w = 0; w < c.space->size(); ++w)
                if (c.space->digit(w, t) == k + 1) REQUIRE(Dt.at(w) == 0.0);
        }
}

TEST_CASE("iterated differences", "[malliavin]") {
    Cti c;
    auto rng = make_stream(47, 0);
    const auto F = random_functional(c.space, rng);
    CHECK(max_abs_diff(iterated_difference(F, {{2, 1}}), add_one_cost(F, {2, 1})) == 0.0);
    const Support s{{1, 0}, {2, 0}};
    require_constant(iterated_difference(testing::dr_product(c.space, c.basis, s), s), 1.0, 1e-14);
}

TEST_CASE("divergence", "[malliavin]") {
    Cti c;
    ProcessTable zero(c.space, true);
    require_constant(divergence(c.basis, zero), 0.0, 0.0);
    for (int t = 1; t <= 3; ++t)
        for (int k = 0; k < 2; ++k) {
            const auto u = ProcessTable::generate(
                c.space, [&](std::size_t, Point p) { return p.t == t && p.k == k ? 1.0 : 0.0; }, true);
            CHECK(max_abs_diff(divergence(c.basis, u), testing::dr_product(c.space, c.basis, {{t, k}})) < 1e-14);
        }
    auto rng = make_stream(53, 0);
    const auto v = random_process(c.space, rng, false);
    CHECK_THROWS_AS(divergence_predictable(c.basis, v), std::invalid_argument);
}

TEST_CASE("tilde divergence", "[malliavin]") {
    Cti c;
    const auto one = ProcessTable::generate(c.space, [](std::size_t, Point) { return 1.0; }, true);
    CHECK(max_abs_diff(tilde_divergence(one), jump_count(c.space, 3) + (-1.5)) < 1e-14);
    require_constant(tilde_divergence(ProcessTable(c.space, true)), 0.0, 0.0);
    auto rng = make_stream(59, 0);
    CHECK_THAT(expectation(tilde_divergence(random_process(c.space, rng, true))), WithinAbs(0.0, 1e-12));
}

TEST_CASE("number operator and its inverse", "[malliavin]") {
    Cti c;
    require_constant(number_operator(c.basis, PathFunctional::constant(c.space, 3.0)), 0.0, 1e-13);
    require_constant(l_inverse(c.basis, PathFunctional::constant(c.space, 0.0)), 0.0, 0.0);
    auto rng = make_stream(61, 0);
    const auto f2 = random_kernel(*c.space, 2, rng);
    const auto J2 = multiple_integral(c.basis, c.space, f2, 2);
    CHECK(max_abs_diff(number_operator(c.basis, J2), J2 * -2.0) < 1e-12);
    CHECK_THROWS_AS(l_inverse(c.basis, jump_count(c.space, 3)), std::domain_error);
}

TEST_CASE("L1 and L2 number operators agree with a single mark", "[malliavin]") {
    const auto U = head_run_functional(10, 2, 0.5);
    const auto basis = build_basis(U.space().params());
    CHECK(max_abs_diff(number_operator_tilde(U), number_operator(basis, U)) < 1e-10);
}

TEST_CASE("carre du champ", "[malliavin]") {
    Cti c;
    auto rng = make_stream(67, 0);
    const auto F = random_functional(c.space, rng);
    const auto G = random_functional(c.space, rng);
    require_constant(gamma_tilde(F, PathFunctional::constant(c.space, -2.0)), 0.0, 1e-14);
    CHECK(max_abs_diff(gamma_tilde(F, G), gamma_tilde(G, F)) < 1e-14);
    const double lhs = -expectation(gamma_tilde(F, G));
    const double rhs = 0.5 * (expectation(F * number_operator_tilde(G)) + expectation(G * number_operator_tilde(F)));
    CHECK_THAT(lhs, WithinAbs(rhs, 1e-10));
}

TEST_CASE("Ornstein-Uhlenbeck semigroup", "[malliavin]") {
    Cti c;
    const auto N = jump_count(c.space, 3);
    CHECK(max_abs_diff(ou_spectral(c.basis, N, 0.0), N) < 1e-13);
    const auto m0 = ou_mehler_mc(N, 0.0, 100, 5);
    for (std::size_t w = 0; w < c.space->size(); ++w) CHECK(m0.mean[w] == N.at(w));

    const auto spec = ou_spectral(c.basis, N, 1.0);
    const auto mc = ou_mehler_mc(N, 1.0, 100000, 5);
    for (std::size_t w = 0; w < c.space->size(); ++w)
        CHECK(std::abs(mc.mean[w] - spec.at(w)) <= 4.0 * mc.std_error[w]);

    auto rng = make_stream(71, 0);
    const auto f1 = random_kernel(*c.space, 1, rng);
    const auto J1 = multiple_integral(c.basis, c.space, f1, 1);
    CHECK(max_abs_diff(ou_spectral(c.basis, J1, 0.7), J1 * std::exp(-0.7)) < 1e-13);
    CHECK_THROWS_AS(ou_spectral(c.basis, N, -1.0), std::domain_error);
}

TEST_CASE("Gauss-Laguerre rule", "[malliavin]") {
    const auto [x, w] = gauss_laguerre(64);
    double sum = 0.0, first = 0.0, second = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += w[i];
        first += w[i] * x[i];
        second += w[i] * x[i] * x[i];
    }
    CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
    CHECK_THAT(first, WithinAbs(1.0, 1e-11));
    CHECK_THAT(second, WithinAbs(2.0, 1e-10));

    Cti c;
    const auto Nc = jump_count(c.space, 3) + (-1.5);
    CHECK(max_abs_diff(l_inverse_quadrature(c.basis, Nc), l_inverse(c.basis, Nc)) < 1e-8);
}

TEST_CASE("Clark formula", "[malliavin]") {
    Cti c;
    const auto u = clark_integrand(c.basis, testing::dr_product(c.space, c.basis, {{1, 0}}));
    for (std::size_t w = 0; w < c.space->size(); ++w)
        for (int t = 1; t <= 3; ++t)
            for (int k = 0; k < 2; ++k) REQUIRE_THAT(u.at(w, {t, k}), WithinAbs(t == 1 && k == 0 ? 1.0 : 0.0, 1e-14));
    const auto z = clark_integrand(c.basis, PathFunctional::constant(c.space, 5.0));
    for (std::size_t w = 0; w < c.space->size(); ++w) REQUIRE_THAT(z.at(w, {2, 1}), WithinAbs(0.0, 1e-14));

    const auto ind = PathFunctional::tabulate(c.space, [](const Configuration& w) {
        return w.digits == std::vector<int>{1, 1, 1} ? 1.0 : 0.0;
    });
    CHECK(max_abs_diff(clark_reconstruct(c.basis, ind), ind) < 1e-12);
    for (int t = 0; t <= 3; ++t) CHECK(max_abs_diff(clark_reconstruct_from(c.basis, ind, t), ind) < 1e-12);
    CHECK(max_abs_diff(clark_reconstruct_z(ind), ind) < 1e-12);
}

TEST_CASE("Mecke formula", "[malliavin]") {
    Cti c;
    const auto one = ProcessTable::generate(c.space, [](std::size_t, Point) { return 1.0; });
    const auto [l1, r1] = mecke_check(one);
    CHECK_THAT(l1, WithinAbs(1.5, 1e-14));
    CHECK_THAT(r1, WithinAbs(1.5, 1e-14));
    const auto [l0, r0] = mecke_check(ProcessTable(c.space));
    CHECK(l0 == 0.0);
    CHECK(r0 == 0.0);
    auto rng = make_stream(73, 0);
    const auto [l, r] = mecke_check(random_process(c.space, rng, false));
    CHECK_THAT(l, WithinAbs(r, 1e-12));
}

TEST_CASE("Poincare inequality on 100 functionals", "[malliavin]") {
    const auto params = testing::three_marks();
    const auto space = make_space(params);
    const auto basis = build_basis(params);
    auto rng = make_stream(79, 0);
    for (int i = 0; i < 100; ++i) {
        const auto F = random_functional(space, rng);
        const auto D = gradient(basis, F);
        double energy = 0.0;
        for (int t = 1; t <= params.T; ++t)
            for (int k = 0; k < 3; ++k) {
                const auto s = D.slice({t, k});
                energy += basis.kappa(k) * expectation(s * s);
            }
        const double var = expectation(F * F) - std::pow(expectation(F), 2);
        REQUIRE(var <= energy + 1e-12);
    }
}
