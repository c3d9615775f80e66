#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mbp/config_space.hpp"
#include "mbp/stein.hpp"

using namespace mbp;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SpacePtr single_mark(int T, double lambda) {
    ModelParams p;
    p.T = T;
    p.marks = {1.0};
    p.Q = {1.0};
    p.lambda = lambda;
    return make_space(p);
}

std::vector<int> random_set(std::mt19937_64& rng, int limit) {
    std::vector<int> A;
    for (int k = 0; k <= limit; ++k)
        if (rng() & 1U) A.push_back(k);
    return A;
}

std::vector<double> binomial_pmf(int n, double p) {
    std::vector<double> out(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k)
        out[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) * std::pow(p, k) *
                 std::pow(1 - p, n - k);
    return out;
}

}  // namespace

TEST_CASE("Stein constants", "[stein]") {
    const auto c1 = stein_constants(1.0);
    CHECK_THAT(c1.phi, WithinAbs(0.8577638849607068, 1e-15));
    CHECK_THAT(c1.grad, WithinAbs(0.6321205588285577, 1e-15));
    CHECK_THAT(c1.grad2, WithinAbs(1.2642411176571153, 1e-15));
    CHECK_THAT(stein_constants(1.375).grad, WithinAbs(0.5433893848692753, 1e-15));
    CHECK_THAT(stein_constants(50.0).phi, WithinAbs(std::sqrt(2.0 / (std::exp(1.0) * 50.0)), 1e-15));
    CHECK(stein_constants(0.1).phi == 1.0);
    CHECK_THROWS_AS(stein_constants(0.0), std::domain_error);
}

TEST_CASE("Poisson Stein solutions", "[stein]") {
    for (const auto& A : {std::vector<int>{}, std::vector<int>{-1}}) {
        if (!A.empty()) {
            CHECK_THROWS_AS(solve_stein_poisson(1.0, A), std::invalid_argument);
            continue;
        }
        for (double x : solve_stein_poisson(1.0, A).phi) CHECK(x == 0.0);
    }
    // A covering the whole truncated range behaves like Z+
    std::vector<int> all(200);
    for (int k = 0; k < 200; ++k) all[k] = k;
    const auto full = solve_stein_poisson(1.0, all, 100);
    for (int k = 0; k <= 150; ++k) CHECK_THAT(full.phi[k], WithinAbs(0.0, 1e-12));

    const auto s = solve_stein_poisson(1.0, {0}, 50);
    CHECK(s.max_residual <= 1e-12);
    CHECK(s.sup_grad() <= 1.0 - std::exp(-1.0) + 1e-12);
    CHECK(s.phi[0] == 0.0);
}

TEST_CASE("Stein estimates over random sets", "[stein]") {
    auto rng = make_stream(101, 0);
    for (double l0 : {0.5, 1.0, 1.375}) {
        const auto c = stein_constants(l0);
        for (int i = 0; i < 50; ++i) {
            const auto s = solve_stein_poisson(l0, random_set(rng, 30));
            REQUIRE(s.max_residual <= 1e-10);
            REQUIRE(s.sup_phi() <= c.phi + 1e-12);
            REQUIRE(s.sup_grad() <= c.grad + 1e-12);
            REQUIRE(s.sup_grad2() <= c.grad2 + 1e-12);
        }
    }
}

TEST_CASE("exact total variation", "[stein]") {
    const std::vector<double> a{0.2, 0.3, 0.5};
    CHECK(exact_tv(a, a) == 0.0);
    CHECK(exact_tv({1.0}, {0.0, 1.0}) == 1.0);
    CHECK_THAT(exact_tv({0.5, 0.5}, poisson_pmf(0.5, 40)), WithinAbs(0.19673467014368329, 1e-15));
    CHECK_THROWS_AS(exact_tv({-0.1, 1.1}, {1.0}), std::invalid_argument);
}

TEST_CASE("compound target via Panjer", "[stein]") {
    const auto pa = polya_aeppli(0.736, 0.2);
    CHECK_THAT(pa.d_pc, WithinAbs(2.0875685175861962, 1e-12));
    double total = 0.0;
    for (double x : pa.pmf) total += x;
    CHECK_THAT(total, WithinAbs(1.0, 1e-12));
    CHECK_THAT(pa.pmf[0], WithinAbs(std::exp(-0.736), 1e-15));
    const auto degenerate = polya_aeppli(1.3, 0.0);
    const auto pois = poisson_pmf(1.3, static_cast<int>(degenerate.pmf.size()) - 1);
    for (std::size_t k = 0; k < pois.size(); ++k) CHECK_THAT(degenerate.pmf[k], WithinAbs(pois[k], 1e-15));
}

TEST_CASE("compound Stein solver", "[stein]") {
    const auto pa = polya_aeppli(0.8, 0.3);
    for (double x : compound_stein_solve(pa, {}).psi) CHECK(x == 0.0);

    const auto delta = make_compound_target(1.3, {0.0, 1.0});
    const auto A = std::vector<int>{0, 2, 3, 7};
    const auto cs = compound_stein_solve(delta, A);
    const auto ps = solve_stein_poisson(1.3, A);
    for (int k = 0; k <= 15; ++k) CHECK_THAT(cs.psi[k], WithinAbs(ps.phi[k], 1e-10));

    auto rng = make_stream(103, 0);
    for (int i = 0; i < 50; ++i) {
        const auto s = compound_stein_solve(pa, random_set(rng, 25));
        REQUIRE(s.max_residual <= 1e-10);
        REQUIRE(s.sup_psi() <= pa.d_pc);
    }
}

TEST_CASE("Poisson bound dominates exact distance", "[stein]") {
    const auto space = single_mark(5, 0.2);
    const auto N = jump_count(space, 5);
    const auto b = poisson_bound(N, 1.0);
    const double tv = exact_tv(pmf_of(N), poisson_pmf(1.0, 60));
    CHECK_THAT(tv, WithinAbs(exact_tv(binomial_pmf(5, 0.2), poisson_pmf(1.0, 60)), 1e-14));
    CHECK(b.bound() >= tv);

    const auto one = single_mark(1, 0.3);
    const auto bern = jump_count(one, 1);
    // a single step attains the bound, so equality holds up to rounding
    const double tv1 = exact_tv({0.7, 0.3}, poisson_pmf(0.3, 40));
    CHECK(poisson_bound(bern, 0.3).bound() >= tv1 - 1e-15);
    CHECK_THAT(poisson_bound(bern, 0.3).bound(), WithinAbs(tv1, 1e-14));

    CHECK_THROWS(poisson_bound(N * 0.5, 0.5));
    CHECK_THROWS_AS(poisson_bound(N, 2.0), std::invalid_argument);
}

TEST_CASE("compound bound routes agree on sums of marks", "[stein]") {
    ModelParams p;
    p.T = 6;
    p.marks = {1.0, 2.0};
    p.Q = {0.7, 0.3};
    p.lambda = 0.15;
    const auto space = make_space(p);
    const auto target = make_compound_target(6 * 0.15, {0.0, 0.7, 0.3});
    const auto fam = standard_set_family(12);
    const auto conv = compound_poisson_bound(6, 0.15, {1, 2}, p.Q, target, fam);
    const auto enumerated = compound_poisson_bound(compound_sum(space, 6), target, fam);
    CHECK_THAT(conv.term1, WithinAbs(enumerated.term1, 1e-12));
    CHECK_THAT(enumerated.term2, WithinAbs(0.0, 1e-12));
    CHECK(conv.term2 == 0.0);
    CHECK(conv.argmax == enumerated.argmax);
    CHECK_THROWS_WITH(compound_poisson_bound(compound_sum(space, 6) * compound_sum(space, 6), target, fam),
                      Catch::Matchers::ContainsSubstring("unsupported functional form"));
}

TEST_CASE("compound bound dominates on a longer horizon", "[stein]") {
    const int T = 30;
    const double lambda = 0.05;
    const auto target = make_compound_target(T * lambda, {0.0, 0.6, 0.4});
    const std::vector<double> step{1 - lambda, lambda * 0.6, lambda * 0.4};
    const auto law = convolution_power(step, T, 2 * T);
    const auto fam = standard_set_family(2 * T, &law, &target.pmf);
    const auto b = compound_poisson_bound(T, lambda, {1, 2}, {0.6, 0.4}, target, fam);
    // for sums of i.i.d. marks the set {law > pmf} attains the distance, so the bound is tight
    // up to the truncation of psi
    const double tv = exact_tv(law, target.pmf);
    CHECK(tv <= b.bound() + 1e-10);
    CHECK_THAT(b.bound(), WithinAbs(tv, 1e-10));
    CHECK(b.argmax == fam.size() - 1);
}

TEST_CASE("head run functional", "[stein]") {
    const auto one = head_run_functional(1, 3, 0.4);
    const auto pmf = pmf_of(one);
    CHECK_THAT(pmf[1], WithinAbs(0.064, 1e-15));
    CHECK(one.space().horizon() == 3);

    const auto U = head_run_functional(10, 2, 0.5);
    CHECK(U.space().size() == 2048);
    CHECK_THAT(expectation(U), WithinAbs(1.375, 1e-14));
    CHECK_THAT(head_run_lambda0(10, 2, 0.5), WithinAbs(1.375, 1e-15));
    const double var = expectation(U * U) - 1.375 * 1.375;
    CHECK_THAT(var, WithinAbs(0.578125, 1e-12));
    CHECK_THAT(head_run_variance_pairs(10, 2, 0.5), WithinAbs(0.578125, 1e-12));
    CHECK_THAT(head_run_variance_identity(10, 2, 0.5), WithinAbs(1.140625, 1e-15));
    CHECK_THAT(exact_tv(pmf, poisson_pmf(0.064, 40)), WithinAbs(exact_tv({0.936, 0.064}, poisson_pmf(0.064, 40)), 1e-15));
}

TEST_CASE("head run bound", "[stein]") {
    CHECK_THAT(head_run_bound(10, 2, 0.5), WithinAbs(0.21875 + 9 * 0.5 * 0.03125 * 0.5433893848692753, 1e-12));
    CHECK_THAT(head_run_bound(10, 2, 0.5), WithinAbs(0.295164, 1e-6));
    const auto U = head_run_functional(10, 2, 0.5);
    CHECK_THAT(exact_tv(pmf_of(U), poisson_pmf(1.375, 60)), WithinAbs(0.24243468785929922, 1e-12));
    CHECK_THAT(exact_tv(pmf_of(head_run_functional(8, 2, 0.3)), poisson_pmf(0.531, 60)),
               WithinAbs(0.086648185117151375, 1e-12));
    CHECK_THAT(exact_tv(pmf_of(head_run_functional(10, 3, 0.5)), poisson_pmf(0.6875, 60)),
               WithinAbs(0.13599274326997804, 1e-12));
    // leading order p^{2m} as p shrinks
    const double p = 1e-3;
    CHECK_THAT(head_run_bound(10, 2, p) / std::pow(p, 4), WithinRel(head_run_bound(10, 2, p / 2) / std::pow(p / 2, 4), 1e-2));
}

TEST_CASE("DNA word counts", "[stein]") {
    CHECK_THAT(dna_lambda0(1000, 5, 0.2, 0.001), WithinAbs(0.7968, 1e-12));
    CHECK_THAT(dna_d_pc(1000, 5, 0.2, 0.001), WithinAbs(std::exp(0.7968), 1e-12));
    CHECK_THAT(dna_bound(1000, 5, 0.2, 0.001), WithinAbs(0.012210, 1e-6));

    const auto H = dna_functional(50, 5, 0.2, 0.02, 40);
    const auto pa = polya_aeppli(dna_lambda0(50, 5, 0.2, 0.02), 0.2);
    CHECK_THAT(exact_tv(H, pa.pmf), WithinAbs(0.0038225614750536452, 1e-12));
    CHECK(exact_tv(H, pa.pmf) <= dna_compound_term(50, 5, 0.2, 0.02));
    CHECK_THAT(dna_compound_term(50, 5, 0.2, 0.02), WithinAbs(0.038411260723586013, 1e-12));

    const auto H0 = dna_functional(30, 4, 0.0, 0.05, 30);
    const auto bin = binomial_pmf(27, 0.05);
    for (std::size_t k = 0; k < bin.size(); ++k) CHECK_THAT(H0[k], WithinAbs(bin[k], 1e-14));
}
