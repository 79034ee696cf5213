#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sntk/errors.hpp"
#include "sntk/sheaf.hpp"

namespace sntk {

// Singular values / eigenvalues below rank_tolerance * sigma_max count as zero.
inline constexpr double kRankTolerance = 1e-9;
// Floor for block-degree eigenvalues when forming D^{-1/2}.
inline constexpr double kDegreeEigenFloor = 1e-12;

/// Coboundary delta: (N_E*k x N_V*k) block matrix. Row block e of an edge
/// u -> v holds +F_{v<|e} in column block v and -F_{u<|e} in column block u.
struct Coboundary {
    Eigen::MatrixXd matrix;
    int num_nodes = 0;
    int num_edges = 0;
    int stalk_dim = 1;
};

/// Sheaf Laplacian L_F = delta^T delta together with its block diagonal D.
struct SheafLaplacian {
    Eigen::MatrixXd matrix;
    Eigen::MatrixXd block_degree; // block-diagonal part of `matrix`
    int num_nodes = 0;
    int stalk_dim = 1;
    bool normalized = false;
};

inline Coboundary coboundary(const CellularSheaf& sheaf) {
    const int k = sheaf.stalk_dim;
    const int ne = sheaf.graph.num_edges();
    const int nv = sheaf.graph.num_nodes;
    Coboundary cob;
    cob.num_nodes = nv;
    cob.num_edges = ne;
    cob.stalk_dim = k;
    cob.matrix = Eigen::MatrixXd::Zero(ne * k, nv * k);
    for (int e = 0; e < ne; ++e) {
        auto [u, v] = sheaf.graph.edges[e];
        const EdgeMaps& m = sheaf.restriction_maps[e];
        cob.matrix.block(e * k, v * k, k, k) = m.head_map;
        cob.matrix.block(e * k, u * k, k, k) = -m.tail_map;
    }
    return cob;
}

inline SheafLaplacian sheaf_laplacian(const Coboundary& cob) {
    SheafLaplacian lap;
    lap.num_nodes = cob.num_nodes;
    lap.stalk_dim = cob.stalk_dim;
    Eigen::MatrixXd l = cob.matrix.transpose() * cob.matrix;
    lap.matrix = 0.5 * (l + l.transpose());
    const int k = cob.stalk_dim;
    lap.block_degree = Eigen::MatrixXd::Zero(lap.matrix.rows(), lap.matrix.cols());
    for (int v = 0; v < cob.num_nodes; ++v)
        lap.block_degree.block(v * k, v * k, k, k) = lap.matrix.block(v * k, v * k, k, k);
    return lap;
}

inline SheafLaplacian sheaf_laplacian(const CellularSheaf& sheaf) {
    return sheaf_laplacian(coboundary(sheaf));
}

namespace detail {

/// Inverse square root of one symmetric PSD block. Eigenvalues at or below
/// the floor map to zero (pseudo-inverse) unless strict mode asks to throw.
inline Eigen::MatrixXd block_inverse_sqrt(const Eigen::MatrixXd& block, bool pseudo_inverse,
                                          int node_index) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
    Eigen::VectorXd vals = es.eigenvalues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(vals.size());
    for (int i = 0; i < vals.size(); ++i) {
        if (vals(i) > kDegreeEigenFloor) {
            inv(i) = 1.0 / std::sqrt(vals(i));
        } else if (!pseudo_inverse) {
            throw SingularDegreeBlock("degree block of node " + std::to_string(node_index) +
                                      " is not positive definite");
        }
    }
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace detail

/// Normalized Laplacian D^{-1/2} L D^{-1/2}; eigenvalues land in [0, 2].
/// Singular degree blocks (isolated nodes, degenerate maps) use the
/// pseudo-inverse square root by default and throw in strict mode.
inline SheafLaplacian normalized_laplacian(const SheafLaplacian& lap,
                                           bool pseudo_inverse = true) {
    const int k = lap.stalk_dim;
    Eigen::MatrixXd dinv = Eigen::MatrixXd::Zero(lap.matrix.rows(), lap.matrix.cols());
    for (int v = 0; v < lap.num_nodes; ++v)
        dinv.block(v * k, v * k, k, k) =
            detail::block_inverse_sqrt(lap.block_degree.block(v * k, v * k, k, k),
                                       pseudo_inverse, v);
    SheafLaplacian out;
    out.num_nodes = lap.num_nodes;
    out.stalk_dim = k;
    out.normalized = true;
    Eigen::MatrixXd l = dinv * lap.matrix * dinv;
    out.matrix = 0.5 * (l + l.transpose());
    out.block_degree = Eigen::MatrixXd::Zero(out.matrix.rows(), out.matrix.cols());
    for (int v = 0; v < lap.num_nodes; ++v)
        out.block_degree.block(v * k, v * k, k, k) = out.matrix.block(v * k, v * k, k, k);
    return out;
}

/// Orthogonal projector onto the zero eigenspace of the Laplacian (the
/// global sections H^0 for the unnormalized form). Idempotent and symmetric.
inline Eigen::MatrixXd harmonic_projection(const SheafLaplacian& lap) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap.matrix);
    const Eigen::VectorXd& vals = es.eigenvalues();
    const double lambda_max = vals.size() ? std::abs(vals(vals.size() - 1)) : 0.0;
    const double tol = kRankTolerance * std::max(lambda_max, 1.0e-300);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(lap.matrix.rows(), lap.matrix.cols());
    if (lambda_max <= kDegreeEigenFloor)
        return Eigen::MatrixXd::Identity(lap.matrix.rows(), lap.matrix.cols());
    for (int i = 0; i < vals.size(); ++i)
        if (std::abs(vals(i)) <= tol) p += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
    return p;
}

/// Dimension of the nullspace by SVD with the shared rank tolerance.
inline int nullspace_dimension(const Eigen::MatrixXd& m) {
    if (m.rows() == 0 || m.cols() == 0) return static_cast<int>(m.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = kRankTolerance * sv(0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    return static_cast<int>(m.cols()) - rank;
}

/// Orthonormal basis of the nullspace (columns); empty matrix when trivial.
inline Eigen::MatrixXd nullspace_basis(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return Eigen::MatrixXd::Identity(m.cols(), m.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = sv.size() ? kRankTolerance * sv(0) : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    const int dim = static_cast<int>(m.cols()) - rank;
    return svd.matrixV().rightCols(dim);
}

} // namespace sntk
