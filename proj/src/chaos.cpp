#include "mbp/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "mbp/util.hpp"

namespace mbp {

const Kernel& ChaosCoefficients::order(int n) const {
    static const Kernel empty;
    if (n < 1 || n > max_order()) return empty;
    return orders[static_cast<std::size_t>(n - 1)];
}

Kernel& ChaosCoefficients::order(int n) {
    if (n < 1) throw std::out_of_range("ChaosCoefficients: order must be >= 1");
    if (n > max_order()) orders.resize(static_cast<std::size_t>(n));
    return orders[static_cast<std::size_t>(n - 1)];
}

namespace detail {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

std::size_t support_rank(const Space& space, const Support& s) {
    require_ordered(s);
    std::size_t r = 0;
    for (const Point& p : s) {
        if (p.t < 1 || p.t > space.horizon() || p.k < 0 || p.k >= space.num_marks())
            throw std::out_of_range("support point outside X_T");
        r += static_cast<std::size_t>(p.k + 1) * space.stride(p.t);
    }
    return r;
}

Support support_of_rank(const Space& space, std::size_t rank) {
    Support s;
    for (int t = 1; t <= space.horizon(); ++t)
        if (const int d = space.digit(rank, t); d != 0) s.push_back({t, d - 1});
    return s;
}

int support_order(const Space& space, std::size_t rank) {
    int n = 0;
    for (int t = 1; t <= space.horizon(); ++t) n += space.digit(rank, t) != 0;
    return n;
}

void apply_axis(std::vector<double>& v, const Space& space, int t, const Eigen::MatrixXd& A) {
    const std::size_t r = static_cast<std::size_t>(space.radix());
    const std::size_t st = space.stride(t);
    const std::size_t block = st * r;
    Eigen::VectorXd in(static_cast<Eigen::Index>(r));
    for (std::size_t base = 0; base < v.size(); base += block)
        for (std::size_t off = 0; off < st; ++off) {
            const std::size_t w0 = base + off;
            for (std::size_t d = 0; d < r; ++d) in(static_cast<Eigen::Index>(d)) = v[w0 + d * st];
            const Eigen::VectorXd out = A * in;
            for (std::size_t d = 0; d < r; ++d) v[w0 + d * st] = out(static_cast<Eigen::Index>(d));
        }
}

void apply_all_axes(std::vector<double>& v, const Space& space, const Eigen::MatrixXd& A) {
    for (int t = 1; t <= space.horizon(); ++t) apply_axis(v, space, t, A);
}

namespace {
Eigen::RowVectorXd step_law(const ModelParams& params) {
    const int m = params.num_marks();
    Eigen::RowVectorXd p(m + 1);
    for (int d = 0; d <= m; ++d) p(d) = params.step_prob(d);
    return p;
}
}  // namespace

Eigen::MatrixXd difference_axis_matrix(const ModelParams& params) {
    const int m = params.num_marks();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m + 1);
    A.row(0) = step_law(params);
    for (int i = 0; i < m; ++i) {
        A(i + 1, i + 1) = 1.0;
        A(i + 1, 0) = -1.0;
    }
    return A;
}

Eigen::MatrixXd gradient_axis_matrix(const OrthogonalBasis& basis, const ModelParams& params) {
    const int m = params.num_marks();
    const Eigen::MatrixXd Dp = difference_axis_matrix(params);
    Eigen::MatrixXd A(m + 1, m + 1);
    A.row(0) = Dp.row(0);
    // D_(t,i) = sum_k M(k,i) D+_(t,k)
    A.bottomRows(m) = basis.M.transpose() * Dp.bottomRows(m);
    return A;
}

Eigen::MatrixXd synthesis_axis_matrix(const OrthogonalBasis& basis) {
    const int m = basis.num_marks();
    Eigen::MatrixXd B(m + 1, m + 1);
    B.col(0).setOnes();
    B.rightCols(m) = basis.dr.transpose();
    return B;
}

std::vector<double> expected_gradients(const OrthogonalBasis& basis, const PathFunctional& F) {
    std::vector<double> c = F.table();
    apply_all_axes(c, F.space(), gradient_axis_matrix(basis, F.space().params()));
    return c;
}

std::vector<double> synthesize(const OrthogonalBasis& basis, const Space& space, std::vector<double> c) {
    apply_all_axes(c, space, synthesis_axis_matrix(basis));
    return c;
}

ChaosCoefficients coefficients_from_table(const Space& space, const std::vector<double>& c) {
    ChaosCoefficients out;
    out.f0 = c[0];
    out.orders.resize(static_cast<std::size_t>(space.horizon()));
    for (std::size_t r = 1; r < c.size(); ++r) {
        if (c[r] == 0.0) continue;
        const int n = support_order(space, r);
        out.orders[static_cast<std::size_t>(n - 1)][support_of_rank(space, r)] = c[r] / factorial(n);
    }
    return out;
}

std::vector<double> table_from_coefficients(const Space& space, const ChaosCoefficients& coeffs) {
    std::vector<double> c(space.size(), 0.0);
    c[0] = coeffs.f0;
    for (int n = 1; n <= coeffs.max_order(); ++n) {
        if (n > space.horizon()) {
            if (!coeffs.order(n).empty()) std::cerr << "warning: chaos order " << n << " exceeds horizon; ignored\n";
            continue;
        }
        for (const auto& [s, v] : coeffs.order(n)) {
            if (static_cast<int>(s.size()) != n) throw std::invalid_argument("kernel support size differs from order");
            c[support_rank(space, s)] += factorial(n) * v;
        }
    }
    return c;
}

}  // namespace detail

PathFunctional multiple_integral(const OrthogonalBasis& basis, const SpacePtr& space, const Kernel& f, int n) {
    if (n < 0) throw std::invalid_argument("multiple_integral: negative order");
    std::vector<double> out(space->size(), 0.0);
    if (n > space->horizon()) {
        std::cerr << "warning: multiple_integral order " << n << " exceeds horizon " << space->horizon()
                  << "; returning zero\n";
        return {space, std::move(out)};
    }
    if (n == 0) {
        const auto it = f.find(Support{});
        const double c = it == f.end() ? 0.0 : it->second;
        return PathFunctional::constant(space, c);
    }
    const double nf = detail::factorial(n);
    for (const auto& [s, v] : f) {
        if (static_cast<int>(s.size()) != n) throw std::invalid_argument("multiple_integral: support size differs from order");
        require_ordered(s);
        for (std::size_t w = 0; w < out.size(); ++w) {
            double prod = nf * v;
            for (const Point& p : s) prod *= basis.dr(p.k, space->digit(w, p.t));
            out[w] += prod;
        }
    }
    return {space, std::move(out)};
}

PathFunctional multiple_integral_z(const SpacePtr& space, const Kernel& g, int n) {
    const auto& params = space->params();
    std::vector<double> out(space->size(), 0.0);
    if (n > space->horizon()) return {space, std::move(out)};
    const double nf = detail::factorial(n);
    for (const auto& [s, v] : g) {
        if (static_cast<int>(s.size()) != n) throw std::invalid_argument("multiple_integral_z: support size differs from order");
        require_ordered(s);
        for (std::size_t w = 0; w < out.size(); ++w) {
            double prod = nf * v;
            for (const Point& p : s)
                prod *= (space->digit(w, p.t) == p.k + 1 ? 1.0 : 0.0) - params.intensity(p.k);
            out[w] += prod;
        }
    }
    return {space, std::move(out)};
}

ChaosCoefficients stroock_decompose(const OrthogonalBasis& basis, const PathFunctional& F) {
    return detail::coefficients_from_table(F.space(), detail::expected_gradients(basis, F));
}

ChaosCoefficients stroock_decompose(const PathFunctional& F) {
    return stroock_decompose(build_basis(F.space().params()), F);
}

PathFunctional reconstruct(const OrthogonalBasis& basis, const SpacePtr& space, const ChaosCoefficients& c) {
    return {space, detail::synthesize(basis, *space, detail::table_from_coefficients(*space, c))};
}

ChaosCoefficients pseudo_chaos_decompose(const PathFunctional& F) {
    std::vector<double> c = F.table();
    detail::apply_all_axes(c, F.space(), detail::difference_axis_matrix(F.space().params()));
    return detail::coefficients_from_table(F.space(), c);
}

PathFunctional doleans_exponential(const OrthogonalBasis& basis, const SpacePtr& space, const Kernel& h,
                                   double mean) {
    const Kernel g = convert_coeffs_R_to_Z(basis, h);
    const int T = space->horizon();
    const int m = space->num_marks();
    // per-step factor as a function of the digit
    std::vector<std::vector<double>> factor(static_cast<std::size_t>(T), std::vector<double>(m + 1, 1.0));
    for (const auto& [s, v] : g) {
        if (s.size() != 1) throw std::invalid_argument("doleans_exponential: h must be an order-1 kernel");
        const Point p = s[0];
        for (int d = 0; d <= m; ++d) factor[p.t - 1][d] += v * basis.dz(p.k, d);
    }
    std::vector<double> out(space->size(), mean);
    for (std::size_t w = 0; w < out.size(); ++w)
        for (int t = 1; t <= T; ++t) out[w] *= factor[t - 1][space->digit(w, t)];
    return {space, std::move(out)};
}

PathFunctional doleans_series(const OrthogonalBasis& basis, const SpacePtr& space, const Kernel& h, double mean) {
    ChaosCoefficients c;
    c.f0 = mean;
    Kernel power{{Support{}, 1.0}};
    for (int n = 1; n <= space->horizon(); ++n) {
        Kernel next;
        for (const auto& [s, v] : power)
            for (const auto& [p1, hv] : h) {
                if (p1.size() != 1) throw std::invalid_argument("doleans_series: h must be an order-1 kernel");
                if (!s.empty() && p1[0].t <= s.back().t) continue;
                Support s2 = s;
                s2.push_back(p1[0]);
                next[s2] += v * hv;
            }
        power = std::move(next);
        // J_n(h^{(x)n})/n! = sum over ordered supports of prod h dR
        c.order(n) = scale(power, mean / detail::factorial(n));
    }
    return reconstruct(basis, space, c);
}

double kappa_inner(const OrthogonalBasis& basis, const Kernel& f, const Kernel& g) {
    double s = 0.0;
    for (const auto& [supp, v] : f) {
        const auto it = g.find(supp);
        if (it == g.end()) continue;
        double w = v * it->second;
        for (const Point& p : supp) w *= basis.kappa(p.k);
        s += w;
    }
    return s;
}

Kernel symmetric_tensor(const Kernel& g, const Kernel& f) {
    Kernel out;
    std::size_t n = 0;
    for (const auto& [s, v] : f) n = s.size();
    for (const auto& [gs, gv] : g) {
        if (gs.size() != 1) throw std::invalid_argument("symmetric_tensor: g must be an order-1 kernel");
        const Point q = gs[0];
        for (const auto& [s, v] : f) {
            bool clash = false;
            for (const Point& p : s) clash |= p.t == q.t;
            if (clash) continue;  // diagonals carry no mass
            Support s2 = s;
            s2.insert(std::upper_bound(s2.begin(), s2.end(), q), q);
            out[s2] += gv * v / static_cast<double>(n + 1);
        }
    }
    return out;
}

Kernel slice_last(const Kernel& f, Point p) {
    Kernel out;
    for (const auto& [s, v] : f)
        if (!s.empty() && s.back() == p) out[Support(s.begin(), s.end() - 1)] = v;
    return out;
}

Kernel restrict_to(const Kernel& f, int t) {
    Kernel out;
    for (const auto& [s, v] : f)
        if (s.empty() || s.back().t <= t) out[s] = v;
    return out;
}

Kernel scale(const Kernel& f, double c) {
    Kernel out;
    for (const auto& [s, v] : f) out[s] = v * c;
    return out;
}

std::string to_csv(const ChaosCoefficients& c) {
    std::ostringstream os;
    os << "order,support,value\n";
    os << "0,," << format_double(c.f0) << '\n';
    for (int n = 1; n <= c.max_order(); ++n)
        for (const auto& [s, v] : c.order(n)) {
            os << n << ',' << to_string(s) << ',' << format_double(v) << '\n';
        }
    return os.str();
}

}  // namespace mbp
