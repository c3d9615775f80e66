#pragma once
/**
 * @file basis.hpp
 * @brief Centered increments dZ, their Gram-Schmidt family dR and the matrix M with dZ = M dR.
 */

#include <Eigen/Dense>
#include <string>

#include "mbp/config_space.hpp"
#include "mbp/kernel.hpp"

namespace mbp {

struct OrthogonalBasis {
    Eigen::MatrixXd M;      ///< lower unit-triangular, M(n,j) = gamma_nj
    Eigen::MatrixXd M_inv;  ///< dR = M_inv dZ
    Eigen::VectorXd kappa;  ///< E[dR_k^2]
    /// dz(i, d), dr(i, d): value of dZ_(t,k^i), dR_(t,k^i) when digit_t = d.
    Eigen::MatrixXd dz;
    Eigen::MatrixXd dr;

    int num_marks() const { return static_cast<int>(kappa.size()); }
};

/// Closed-form moments; throws std::domain_error("degenerate mark ...") when a kappa < 1e-14.
OrthogonalBasis build_basis(const ModelParams& params);

double delta_z(const ModelParams& params, const Configuration& w, Point p);
double delta_r(const OrthogonalBasis& basis, const ModelParams& params, const Configuration& w, Point p);

/// g with J_n(f; R) = J_n(g; Z): each slot mapped by the transpose of M_inv.
Kernel convert_coeffs_R_to_Z(const OrthogonalBasis& basis, const Kernel& f);
/// Inverse map (transpose of M per slot).
Kernel convert_coeffs_Z_to_R(const OrthogonalBasis& basis, const Kernel& g);

/// Rows "matrix,i,j,value" for M and M_inv, then "kappa,i,,value".
std::string to_csv(const OrthogonalBasis& basis);

}  // namespace mbp
