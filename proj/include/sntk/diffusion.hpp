#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "sntk/errors.hpp"
#include "sntk/laplacian.hpp"

namespace sntk {

enum class DiffusionKind { alpha_scaled, normalized };

/// One-step diffusion operator: I - alpha*L_F or I - normalized(L_F),
/// optionally with a fixed (k x k) channel map B folded in as D * (I (x) B).
struct DiffusionOperator {
    Eigen::MatrixXd matrix;
    DiffusionKind kind = DiffusionKind::normalized;
    double alpha = 0.0;     // meaningful for alpha_scaled only
    int num_nodes = 0;
    int stalk_dim = 1;
    bool has_absorbed_b = false;
};

inline double laplacian_spectral_max(const SheafLaplacian& lap) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap.matrix,
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
}

inline DiffusionOperator diffusion_operator(const SheafLaplacian& lap, DiffusionKind kind,
                                            std::optional<double> alpha = std::nullopt,
                                            const std::optional<Eigen::MatrixXd>& b = std::nullopt,
                                            bool pseudo_inverse = true) {
    DiffusionOperator op;
    op.kind = kind;
    op.num_nodes = lap.num_nodes;
    op.stalk_dim = lap.stalk_dim;
    const int n = static_cast<int>(lap.matrix.rows());
    if (kind == DiffusionKind::normalized) {
        const SheafLaplacian norm = lap.normalized ? lap : normalized_laplacian(lap, pseudo_inverse);
        op.matrix = Eigen::MatrixXd::Identity(n, n) - norm.matrix;
    } else {
        const double lambda_max = laplacian_spectral_max(lap);
        // alpha = 0 degenerates to the identity; the stability window above
        // zero is (0, 2/lambda_max].
        const double a = alpha.value_or(lambda_max > 0.0 ? 1.0 / lambda_max : 0.0);
        if (a < 0.0 || (lambda_max > 0.0 && a > 2.0 / lambda_max + 1e-12))
            throw AlphaOutOfRange("alpha = " + std::to_string(a) + " outside [0, 2/lambda_max = " +
                                  std::to_string(lambda_max > 0 ? 2.0 / lambda_max : 0.0) + "]");
        op.alpha = a;
        op.matrix = Eigen::MatrixXd::Identity(n, n) - a * lap.matrix;
    }
    if (b.has_value()) {
        if (b->rows() != lap.stalk_dim || b->cols() != lap.stalk_dim)
            throw ShapeMismatch("channel map B must be (k x k)");
        Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(n, n);
        for (int v = 0; v < lap.num_nodes; ++v)
            kron.block(v * lap.stalk_dim, v * lap.stalk_dim, lap.stalk_dim, lap.stalk_dim) = *b;
        op.matrix = op.matrix * kron;
        op.has_absorbed_b = true;
    }
    return op;
}

/// l-step diffusion D^l; D^0 = I.
inline Eigen::MatrixXd diffusion_power(const DiffusionOperator& op, int l) {
    if (l < 0) throw Error("diffusion power wants l >= 0");
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(op.matrix.rows(), op.matrix.cols());
    for (int i = 0; i < l; ++i) out = out * op.matrix;
    return out;
}

} // namespace sntk
