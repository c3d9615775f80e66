#include "mbp/malliavin.hpp"

#include <cmath>
#include <stdexcept>

namespace mbp {

ProcessTable::ProcessTable(SpacePtr space, bool predictable)
    : space_(std::move(space)),
      predictable_(predictable),
      points_(static_cast<std::size_t>(space_->horizon() * space_->num_marks())),
      values_(space_->size() * points_, 0.0) {}

PathFunctional ProcessTable::slice(Point p) const {
    std::vector<double> v(space_->size());
    for (std::size_t w = 0; w < v.size(); ++w) v[w] = at(w, p);
    return {space_, std::move(v)};
}

void ProcessTable::set_slice(Point p, const PathFunctional& F) {
    const auto& v = F.table();
    for (std::size_t w = 0; w < v.size(); ++w) at(w, p) = v[w];
}

bool ProcessTable::is_predictable_in_fact(double tol) const {
    for (int t = 1; t <= space_->horizon(); ++t)
        for (int k = 0; k < space_->num_marks(); ++k)
            for (std::size_t w = 0; w < space_->size(); ++w) {
                // compare with the representative having digits t..T zeroed
                const std::size_t w0 = space_->atom(w, t - 1);
                if (std::abs(at(w, {t, k}) - at(w0, {t, k})) > tol) return false;
            }
    return true;
}

void ProcessTable::check() const {
    if (predictable_ && !is_predictable_in_fact())
        throw std::logic_error("ProcessTable flagged predictable is not F_{t-1}-measurable");
}

namespace {

void require_point(const Space& s, Point p) {
    if (p.t < 1 || p.t > s.horizon() || p.k < 0 || p.k >= s.num_marks())
        throw std::out_of_range("point outside X_T");
}

template <class Fn>
PathFunctional map_ranks(const PathFunctional& F, Fn&& fn) {
    const auto& v = F.table();
    std::vector<double> out(v.size());
    for (std::size_t w = 0; w < v.size(); ++w) out[w] = fn(w, v);
    return {F.space_ptr(), std::move(out)};
}

}  // namespace

PathFunctional add_one_cost(const PathFunctional& F, Point p) {
    const Space& s = F.space();
    require_point(s, p);
    return map_ranks(F, [&](std::size_t w, const std::vector<double>& v) {
        return v[s.with_digit(w, p.t, p.k + 1)] - v[s.with_digit(w, p.t, 0)];
    });
}

PathFunctional remove_one_cost(const PathFunctional& F, Point p) {
    const Space& s = F.space();
    require_point(s, p);
    return map_ranks(F, [&](std::size_t w, const std::vector<double>& v) {
        return s.digit(w, p.t) == p.k + 1 ? v[w] - v[s.with_digit(w, p.t, 0)] : 0.0;
    });
}

PathFunctional bar_grad(const PathFunctional& F, int t) {
    const Space& s = F.space();
    require_point(s, {t, 0});
    return map_ranks(F, [&](std::size_t w, const std::vector<double>& v) { return v[w] - v[s.with_digit(w, t, 0)]; });
}

PathFunctional tilde_grad(const PathFunctional& F, Point p) {
    const Space& s = F.space();
    require_point(s, p);
    return map_ranks(F, [&](std::size_t w, const std::vector<double>& v) {
        return v[s.with_digit(w, p.t, p.k + 1)] - v[w];
    });
}

PathFunctional iterated_difference(const PathFunctional& F, const Support& supp) {
    const Space& s = F.space();
    require_ordered(supp);
    for (const Point& p : supp) require_point(s, p);
    const std::size_t n = supp.size();
    return map_ranks(F, [&](std::size_t w, const std::vector<double>& v) {
        std::size_t base = w;
        for (const Point& p : supp) base = s.with_digit(base, p.t, 0);
        double acc = 0.0;
        for (std::size_t J = 0; J < (std::size_t{1} << n); ++J) {
            std::size_t r = base;
            int bits = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (J >> j & 1U) {
                    r = s.with_digit(r, supp[j].t, supp[j].k + 1);
                    ++bits;
                }
            acc += ((static_cast<int>(n) - bits) % 2 ? -1.0 : 1.0) * v[r];
        }
        return acc;
    });
}

PathFunctional tilde_divergence(const ProcessTable& u) {
    const Space& s = u.space();
    const auto& prm = s.params();
    std::vector<double> out(s.size(), 0.0);
    for (std::size_t w = 0; w < s.size(); ++w)
        for (int t = 1; t <= s.horizon(); ++t) {
            const int d = s.digit(w, t);
            for (int k = 0; k < s.num_marks(); ++k) {
                const double val = u.at(w, {t, k});
                out[w] += (d == k + 1 ? val : 0.0) - val * prm.intensity(k);
            }
        }
    return {u.space_ptr(), std::move(out)};
}

PathFunctional number_operator_tilde(const PathFunctional& F) {
    const auto& sp = F.space_ptr();
    ProcessTable u(sp);
    for (int t = 1; t <= sp->horizon(); ++t)
        for (int k = 0; k < sp->num_marks(); ++k) u.set_slice({t, k}, add_one_cost(F, {t, k}));
    return tilde_divergence(u) * -1.0;
}

PathFunctional gamma_tilde(const PathFunctional& F, const PathFunctional& G) {
    const auto LFG = number_operator_tilde(F * G);
    const auto LF = number_operator_tilde(F);
    const auto LG = number_operator_tilde(G);
    return (LFG - F * LG - G * LF) * 0.5;
}

PathFunctional gamma_tilde_expansion(const PathFunctional& F, const PathFunctional& G) {
    const Space& s = F.space();
    const auto& prm = s.params();
    auto acc = PathFunctional::constant(F.space_ptr(), 0.0);
    for (int t = 1; t <= s.horizon(); ++t) {
        const auto bF = bar_grad(F, t);
        const auto bG = bar_grad(G, t);
        for (int k = 0; k < s.num_marks(); ++k) {
            const double nu = prm.intensity(k);
            const auto pF = add_one_cost(F, {t, k});
            const auto pG = add_one_cost(G, {t, k});
            const auto mF = remove_one_cost(F, {t, k});
            const auto mG = remove_one_cost(G, {t, k});
            acc = acc + (pF * pG) * nu + mF * mG - (pF * bG) * nu - (pG * bF) * nu;
        }
    }
    return acc * 0.5;
}

std::pair<double, double> mecke_check(const ProcessTable& u) {
    const Space& s = u.space();
    const auto& prm = s.params();
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t w = 0; w < s.size(); ++w) {
        const double pw = s.probability(w);
        for (int t = 1; t <= s.horizon(); ++t) {
            const int d = s.digit(w, t);
            if (d != 0) lhs += pw * u.at(w, {t, d - 1});
            for (int k = 0; k < s.num_marks(); ++k)
                rhs += pw * prm.intensity(k) * u.at(s.with_digit(w, t, k + 1), {t, k});
        }
    }
    return {lhs, rhs};
}

// ---------------------------------------------------------------------------

namespace {
// Coefficient table of D_(t,k)F: c'[S] = c[S u {(t,k)}] for S avoiding time t.
std::vector<double> gradient_coefficients(const Space& s, const std::vector<double>& c, Point p) {
    std::vector<double> out(c.size(), 0.0);
    for (std::size_t r = 0; r < c.size(); ++r)
        if (s.digit(r, p.t) == 0) out[r] = c[s.with_digit(r, p.t, p.k + 1)];
    return out;
}
}  // namespace

PathFunctional gradient(const OrthogonalBasis& basis, const PathFunctional& F, Point p) {
    const Space& s = F.space();
    require_point(s, p);
    const auto c = detail::expected_gradients(basis, F);
    return {F.space_ptr(), detail::synthesize(basis, s, gradient_coefficients(s, c, p))};
}

ProcessTable gradient(const OrthogonalBasis& basis, const PathFunctional& F) {
    const Space& s = F.space();
    const auto c = detail::expected_gradients(basis, F);
    ProcessTable u(F.space_ptr());
    for (int t = 1; t <= s.horizon(); ++t)
        for (int k = 0; k < s.num_marks(); ++k)
            u.set_slice({t, k}, PathFunctional(F.space_ptr(),
                                               detail::synthesize(basis, s, gradient_coefficients(s, c, {t, k}))));
    return u;
}

PathFunctional iterated_gradient(const OrthogonalBasis& basis, const PathFunctional& F, const Support& supp) {
    require_ordered(supp);
    const int m = basis.num_marks();
    // D_(t,i) = sum_{k >= i} M(k,i) D+_(t,k), composed slot by slot
    auto acc = PathFunctional::constant(F.space_ptr(), 0.0);
    std::vector<int> ks(supp.size());
    for (std::size_t j = 0; j < supp.size(); ++j) ks[j] = supp[j].k;
    while (true) {
        double w = 1.0;
        Support moved = supp;
        for (std::size_t j = 0; j < supp.size(); ++j) {
            w *= basis.M(ks[j], supp[j].k);
            moved[j].k = ks[j];
        }
        if (w != 0.0) acc = acc + iterated_difference(F, moved) * w;
        std::size_t j = 0;
        while (j < supp.size() && ++ks[j] == m) {
            ks[j] = supp[j].k;
            ++j;
        }
        if (j == supp.size()) break;
    }
    return acc;
}

PathFunctional divergence(const OrthogonalBasis& basis, const ProcessTable& u) {
    const Space& s = u.space();
    const auto& prm = s.params();
    const int m = s.num_marks();
    std::vector<double> out(s.size(), 0.0);
    for (int t = 1; t <= s.horizon(); ++t)
        for (int k = 0; k < m; ++k) {
            // utilde_k = sum_i kappa_i M(k,i) u_i, averaged over digit t
            std::vector<double> ut(s.size(), 0.0);
            for (std::size_t w = 0; w < s.size(); ++w)
                for (int i = 0; i <= k; ++i) ut[w] += basis.kappa(i) * basis.M(k, i) * u.at(w, {t, i});
            Eigen::MatrixXd avg(m + 1, m + 1);
            for (int d = 0; d <= m; ++d)
                for (int e = 0; e <= m; ++e) avg(d, e) = prm.step_prob(e);
            detail::apply_axis(ut, s, t, avg);
            const double pk = prm.step_prob(k + 1);
            const double p0 = prm.step_prob(0);
            for (std::size_t w = 0; w < s.size(); ++w) {
                const int d = s.digit(w, t);
                const double weight = d == k + 1 ? 1.0 / pk : (d == 0 ? -1.0 / p0 : 0.0);
                out[w] += weight * ut[w];
            }
        }
    return {u.space_ptr(), std::move(out)};
}

PathFunctional divergence_predictable(const OrthogonalBasis& basis, const ProcessTable& u) {
    const Space& s = u.space();
    if (!u.is_predictable_in_fact(1e-12)) throw std::invalid_argument("divergence_predictable: u is not predictable");
    std::vector<double> out(s.size(), 0.0);
    for (std::size_t w = 0; w < s.size(); ++w)
        for (int t = 1; t <= s.horizon(); ++t)
            for (int k = 0; k < s.num_marks(); ++k) out[w] += u.at(w, {t, k}) * basis.dr(k, s.digit(w, t));
    return {u.space_ptr(), std::move(out)};
}

namespace {
template <class Scale>
PathFunctional scale_orders(const OrthogonalBasis& basis, const PathFunctional& F, Scale&& factor) {
    const Space& s = F.space();
    auto c = detail::expected_gradients(basis, F);
    for (std::size_t r = 0; r < c.size(); ++r) c[r] *= factor(detail::support_order(s, r));
    return {F.space_ptr(), detail::synthesize(basis, s, std::move(c))};
}
}  // namespace

PathFunctional number_operator(const OrthogonalBasis& basis, const PathFunctional& F) {
    return scale_orders(basis, F, [](int n) { return -static_cast<double>(n); });
}

PathFunctional l_inverse(const OrthogonalBasis& basis, const PathFunctional& F, double tol) {
    const double mean = expectation(F);
    double scale = 0.0;
    for (double x : F.table()) scale = std::max(scale, std::abs(x));
    if (std::abs(mean) > tol * std::max(1.0, scale))
        throw std::domain_error("l_inverse: center first (E[F] = " + std::to_string(mean) + ")");
    return scale_orders(basis, F, [](int n) { return n == 0 ? 0.0 : -1.0 / n; });
}

PathFunctional ou_spectral(const OrthogonalBasis& basis, const PathFunctional& F, double tau) {
    if (tau < 0.0) throw std::domain_error("ou_spectral: tau must be >= 0");
    return scale_orders(basis, F, [tau](int n) { return std::exp(-n * tau); });
}

MehlerEstimate ou_mehler_mc(const PathFunctional& F, double tau, std::size_t n_samples, std::uint64_t seed) {
    if (tau < 0.0) throw std::domain_error("ou_mehler_mc: tau must be >= 0");
    if (n_samples < 2) throw std::invalid_argument("ou_mehler_mc: need at least two samples");
    const Space& s = F.space();
    const auto& prm = s.params();
    const auto& v = F.table();
    const double keep = std::exp(-tau);
    MehlerEstimate est{std::vector<double>(s.size()), std::vector<double>(s.size())};
    for (std::size_t w = 0; w < s.size(); ++w) {
        auto rng = make_stream(seed, w);
        double mean = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < n_samples; ++i) {
            std::size_t r = w;
            for (int t = 1; t <= s.horizon(); ++t) {
                const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                if (u >= keep) r = s.with_digit(r, t, sample_digit(prm, rng));
            }
            // Welford update
            const double x = v[r];
            const double delta = x - mean;
            mean += delta / static_cast<double>(i + 1);
            m2 += delta * (x - mean);
        }
        est.mean[w] = mean;
        est.std_error[w] = std::sqrt(m2 / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples));
    }
    return est;
}

std::pair<std::vector<double>, std::vector<double>> gauss_laguerre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_laguerre: need n >= 1");
    // Golub-Welsch on the Jacobi matrix of Laguerre polynomials
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        J(i, i) = 2.0 * i + 1.0;
        if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = i + 1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    // eigenvector weights lose all relative accuracy in the far tail, so nodes are
    // Newton-polished and weights recomputed from x / ((n+1) L_{n+1}(x))^2
    auto laguerre = [](double z, int order) {
        double prev = 1.0, cur = 1.0 - z;
        if (order == 0) return std::pair{prev, 0.0};
        for (int k = 1; k < order; ++k) {
            const double next = ((2.0 * k + 1.0 - z) * cur - k * prev) / (k + 1.0);
            prev = cur;
            cur = next;
        }
        return std::pair{cur, prev};
    };
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double z = es.eigenvalues()(i);
        for (int it = 0; it < 3; ++it) {
            const auto [ln, lm] = laguerre(z, n);
            const double deriv = n * (ln - lm) / z;
            z -= ln / deriv;
        }
        x[i] = z;
        const double l_next = laguerre(z, n + 1).first;
        w[i] = z / ((n + 1.0) * (n + 1.0) * l_next * l_next);
    }
    return {x, w};
}

PathFunctional l_inverse_quadrature(const OrthogonalBasis& basis, const PathFunctional& F, int nodes) {
    const auto [x, w] = gauss_laguerre(nodes);
    auto acc = PathFunctional::constant(F.space_ptr(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) acc = acc + ou_spectral(basis, F, x[i]) * (w[i] * std::exp(x[i]));
    return acc * -1.0;
}

// ---------------------------------------------------------------------------

ProcessTable clark_integrand(const OrthogonalBasis& basis, const PathFunctional& F) {
    const Space& s = F.space();
    const ProcessTable D = gradient(basis, F);
    ProcessTable u(F.space_ptr(), true);
    for (int t = 1; t <= s.horizon(); ++t)
        for (int k = 0; k < s.num_marks(); ++k) u.set_slice({t, k}, conditional_expectation(D.slice({t, k}), t - 1));
    return u;
}

PathFunctional clark_reconstruct_from(const OrthogonalBasis& basis, const PathFunctional& F, int t0) {
    const Space& s = F.space();
    const ProcessTable u = clark_integrand(basis, F);
    auto out = conditional_expectation(F, t0).table();
    for (std::size_t w = 0; w < s.size(); ++w)
        for (int t = t0 + 1; t <= s.horizon(); ++t)
            for (int k = 0; k < s.num_marks(); ++k) out[w] += u.at(w, {t, k}) * basis.dr(k, s.digit(w, t));
    return {F.space_ptr(), std::move(out)};
}

PathFunctional clark_reconstruct(const OrthogonalBasis& basis, const PathFunctional& F) {
    return clark_reconstruct_from(basis, F, 0);
}

ProcessTable clark_integrand_z(const PathFunctional& F) {
    const Space& s = F.space();
    ProcessTable u(F.space_ptr(), true);
    for (int t = 1; t <= s.horizon(); ++t)
        for (int k = 0; k < s.num_marks(); ++k)
            u.set_slice({t, k}, conditional_expectation(add_one_cost(F, {t, k}), t - 1));
    return u;
}

PathFunctional clark_reconstruct_z(const PathFunctional& F) {
    const Space& s = F.space();
    const auto& prm = s.params();
    const ProcessTable u = clark_integrand_z(F);
    std::vector<double> out(s.size(), expectation(F));
    for (std::size_t w = 0; w < s.size(); ++w)
        for (int t = 1; t <= s.horizon(); ++t)
            for (int k = 0; k < s.num_marks(); ++k)
                out[w] += u.at(w, {t, k}) * ((s.digit(w, t) == k + 1 ? 1.0 : 0.0) - prm.intensity(k));
    return {F.space_ptr(), std::move(out)};
}

}  // namespace mbp
