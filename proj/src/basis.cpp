#include "mbp/basis.hpp"

#include <sstream>
#include <stdexcept>

#include "mbp/util.hpp"

namespace mbp {

OrthogonalBasis build_basis(const ModelParams& params) {
    params.validate();
    const int m = params.num_marks();
    Eigen::VectorXd p(m);
    for (int i = 0; i < m; ++i) p(i) = params.intensity(i);

    // Cov(dZ_k, dZ_l) = p_k(1-p_k) on the diagonal, -p_k p_l off it.
    Eigen::MatrixXd C = -p * p.transpose();
    C.diagonal() += p;

    OrthogonalBasis b;
    b.M = Eigen::MatrixXd::Identity(m, m);
    b.M_inv = Eigen::MatrixXd::Identity(m, m);
    b.kappa.resize(m);
    for (int n = 0; n < m; ++n) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Unit(m, n);
        for (int j = 0; j < n; ++j) {
            // gamma_nj = E[dZ_n dR_j] / kappa_j with dR_j = M_inv.row(j) dZ
            const double gamma = (b.M_inv.row(j) * C.col(n))(0) / b.kappa(j);
            b.M(n, j) = gamma;
            row -= gamma * b.M_inv.row(j);
        }
        b.M_inv.row(n) = row;
        b.kappa(n) = (row * C * row.transpose())(0);
        if (!(b.kappa(n) >= 1e-14))
            throw std::domain_error("degenerate mark: kappa_" + std::to_string(n + 1) + " = " +
                                    format_double(b.kappa(n)));
    }

    b.dz.resize(m, m + 1);
    for (int i = 0; i < m; ++i)
        for (int d = 0; d <= m; ++d) b.dz(i, d) = (d == i + 1 ? 1.0 : 0.0) - p(i);
    b.dr = b.M_inv * b.dz;
    return b;
}

double delta_z(const ModelParams& params, const Configuration& w, Point p) {
    if (p.t < 1 || p.t > params.T || p.k < 0 || p.k >= params.num_marks())
        throw std::out_of_range("delta_z: point outside X_T");
    const int d = w.digits[static_cast<std::size_t>(p.t - 1)];
    return (d == p.k + 1 ? 1.0 : 0.0) - params.intensity(p.k);
}

double delta_r(const OrthogonalBasis& basis, const ModelParams& params, const Configuration& w, Point p) {
    if (p.t < 1 || p.t > params.T || p.k < 0 || p.k >= params.num_marks())
        throw std::out_of_range("delta_r: point outside X_T");
    return basis.dr(p.k, w.digits[static_cast<std::size_t>(p.t - 1)]);
}

namespace {
// Expands each slot i of a support into slots p with weight A(i, p).
Kernel slotwise(const Kernel& f, const Eigen::MatrixXd& A) {
    Kernel out;
    const int m = static_cast<int>(A.rows());
    for (const auto& [supp, value] : f) {
        require_ordered(supp);
        std::vector<std::pair<Support, double>> partial{{Support{}, value}};
        for (const Point& pt : supp) {
            std::vector<std::pair<Support, double>> next;
            for (const auto& [s, v] : partial)
                for (int q = 0; q < m; ++q) {
                    const double a = A(pt.k, q);
                    if (a == 0.0) continue;
                    Support s2 = s;
                    s2.push_back({pt.t, q});
                    next.emplace_back(std::move(s2), v * a);
                }
            partial = std::move(next);
        }
        for (auto& [s, v] : partial) out[s] += v;
    }
    return out;
}
}  // namespace

// dR_i = sum_p M_inv(i,p) dZ_p, so the dZ_p coefficient collects M_inv(i,p) f_i.
Kernel convert_coeffs_R_to_Z(const OrthogonalBasis& basis, const Kernel& f) { return slotwise(f, basis.M_inv); }

Kernel convert_coeffs_Z_to_R(const OrthogonalBasis& basis, const Kernel& g) { return slotwise(g, basis.M); }

std::string to_csv(const OrthogonalBasis& basis) {
    std::ostringstream os;
    os << "name,i,j,value\n";
    const int m = basis.num_marks();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) os << "M," << i + 1 << ',' << j + 1 << ',' << format_double(basis.M(i, j)) << '\n';
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            os << "M_inv," << i + 1 << ',' << j + 1 << ',' << format_double(basis.M_inv(i, j)) << '\n';
    for (int i = 0; i < m; ++i) os << "kappa," << i + 1 << ",," << format_double(basis.kappa(i)) << '\n';
    return os.str();
}

}  // namespace mbp
