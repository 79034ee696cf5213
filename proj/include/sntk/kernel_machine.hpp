#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sntk/diffusion.hpp"
#include "sntk/errors.hpp"
#include "sntk/ntk.hpp"
#include "sntk/sheaf.hpp"

namespace sntk {

enum class KernelKind { full, linear, simple_gcn };
enum class ReduceKind { graph_sum, node_trace };

/// How each pairwise kernel evaluation is configured.
struct KernelConfig {
    int num_layers = 2;
    Activation activation = Activation::relu;
    KernelKind kind = KernelKind::full;
    DiffusionKind diffusion = DiffusionKind::normalized;
    std::optional<double> alpha; // alpha_scaled only; default 1/lambda_max per item
};

struct GramMatrix {
    Eigen::MatrixXd entries;
    std::vector<std::string> ids;
};

struct GraphTaskItem {
    CellularSheaf sheaf;
    Eigen::MatrixXd features;
    double label = 0.0;
    std::string id;
};

inline Eigen::MatrixXd pair_kernel(const DiffusionOperator& da, const DiffusionOperator& db,
                                   const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb,
                                   const KernelConfig& config) {
    switch (config.kind) {
        case KernelKind::full:
            return ntk_full(da, db, xa, xb, config.num_layers, config.activation).theta;
        case KernelKind::linear:
            return ntk_linear(da, db, xa, xb, config.num_layers).theta;
        case KernelKind::simple_gcn:
            return ntk_simple_gcn(da, db, xa, xb, config.num_layers);
    }
    throw Error("unknown kernel kind");
}

inline DiffusionOperator item_diffusion(const CellularSheaf& sheaf, const KernelConfig& config) {
    auto lap = sheaf_laplacian(sheaf);
    return diffusion_operator(lap, config.diffusion, config.alpha);
}

namespace detail {

inline void check_items(const std::vector<GraphTaskItem>& items) {
    if (items.empty()) throw IncompatibleItems("dataset is empty");
    const int k = items.front().sheaf.stalk_dim;
    const int n = items.front().sheaf.graph.num_nodes;
    const auto d = items.front().features.cols();
    for (const auto& item : items) {
        if (item.sheaf.stalk_dim != k || item.sheaf.graph.num_nodes != n)
            throw IncompatibleItems("items must share node count and stalk dimension");
        if (item.features.cols() != d)
            throw IncompatibleItems("items must share the feature channel count");
        check_signal(item.sheaf, item.features, "item features");
    }
}

} // namespace detail

/// Gram matrix over graph items: entry (i, j) is the sum-readout kernel
/// between item i and item j, symmetrized against round-off.
inline GramMatrix assemble_gram(const std::vector<GraphTaskItem>& items,
                                const KernelConfig& config) {
    detail::check_items(items);
    const int n = static_cast<int>(items.size());
    std::vector<DiffusionOperator> ops;
    ops.reserve(items.size());
    for (const auto& item : items) ops.push_back(item_diffusion(item.sheaf, config));

    GramMatrix gram;
    gram.entries.resize(n, n);
    for (int i = 0; i < n; ++i) {
        gram.ids.push_back(items[i].id.empty() ? std::to_string(i) : items[i].id);
        for (int j = i; j < n; ++j) {
            const Eigen::MatrixXd theta =
                pair_kernel(ops[i], ops[j], items[i].features, items[j].features, config);
            const double value = reduce_graph_sum(theta);
            gram.entries(i, j) = value;
            gram.entries(j, i) = value;
        }
    }
    gram.entries = 0.5 * (gram.entries + gram.entries.transpose()).eval();
    return gram;
}

/// Cross-kernel block between two item lists (rows x cols).
inline Eigen::MatrixXd assemble_cross_gram(const std::vector<GraphTaskItem>& rows,
                                           const std::vector<GraphTaskItem>& cols,
                                           const KernelConfig& config) {
    detail::check_items(rows);
    detail::check_items(cols);
    Eigen::MatrixXd out(rows.size(), cols.size());
    std::vector<DiffusionOperator> row_ops, col_ops;
    for (const auto& item : rows) row_ops.push_back(item_diffusion(item.sheaf, config));
    for (const auto& item : cols) col_ops.push_back(item_diffusion(item.sheaf, config));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(i, j) = reduce_graph_sum(pair_kernel(row_ops[i], col_ops[j], rows[i].features,
                                                     cols[j].features, config));
    return out;
}

/// Node-task Gram over the given node indices of a single sheaf: one kernel
/// evaluation, reduced per node pair (entry for k = 1, block trace for k > 1).
inline GramMatrix assemble_node_gram(const CellularSheaf& sheaf, const Eigen::MatrixXd& features,
                                     const std::vector<int>& row_nodes,
                                     const std::vector<int>& col_nodes,
                                     const KernelConfig& config) {
    check_signal(sheaf, features);
    const DiffusionOperator op = item_diffusion(sheaf, config);
    const Eigen::MatrixXd theta = pair_kernel(op, op, features, features, config);
    GramMatrix gram;
    gram.entries.resize(row_nodes.size(), col_nodes.size());
    for (std::size_t i = 0; i < row_nodes.size(); ++i) {
        gram.ids.push_back(std::to_string(row_nodes[i]));
        for (std::size_t j = 0; j < col_nodes.size(); ++j)
            gram.entries(i, j) =
                reduce_node_pair(theta, sheaf.stalk_dim, row_nodes[i], col_nodes[j]);
    }
    if (row_nodes == col_nodes)
        gram.entries = 0.5 * (gram.entries + gram.entries.transpose()).eval();
    return gram;
}

struct RidgeModel {
    Eigen::VectorXd dual_coefficients;
    double lambda = 0.0;
};

/// Kernel ridge regression: solve (K + lambda I) alpha = y. Positive-definite
/// factorization first; an eigenvalue-floored pseudo-solve takes over when the
/// Gram is indefinite beyond round-off. lambda = 0 demands a nonsingular K.
inline RidgeModel fit(const GramMatrix& gram, const Eigen::VectorXd& y, double lambda) {
    if (lambda < 0.0) throw Error("regularization must be nonnegative");
    const Eigen::Index n = gram.entries.rows();
    if (gram.entries.cols() != n) throw ShapeMismatch("Gram matrix must be square");
    if (y.size() != n) throw ShapeMismatch("label count must match the Gram size");

    const Eigen::MatrixXd system =
        gram.entries + lambda * Eigen::MatrixXd::Identity(n, n);

    RidgeModel model;
    model.lambda = lambda;
    if (lambda > 0.0) {
        Eigen::LLT<Eigen::MatrixXd> llt(system);
        if (llt.info() == Eigen::Success) {
            model.dual_coefficients = llt.solve(y);
            const double residual = (system * model.dual_coefficients - y).norm();
            if (residual <= 1e-8 * std::max(y.norm(), 1e-30)) return model;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram.entries);
    const Eigen::VectorXd vals = es.eigenvalues();
    const double lambda_max = vals.cwiseAbs().maxCoeff();
    if (lambda == 0.0) {
        const double tol = kRankTolerance * std::max(lambda_max, 1e-30);
        if (vals.minCoeff() <= tol)
            throw SingularSystem("Gram matrix is rank-deficient and lambda = 0");
    }
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double floored = std::max(vals(i), 0.0) + lambda; // floor round-off negatives
        if (floored > kRankTolerance * std::max(lambda_max + lambda, 1e-30))
            inv(i) = 1.0 / floored;
    }
    model.dual_coefficients =
        es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * y;
    return model;
}

/// Scores for new items: cross_gram (m x n_train) times the dual coefficients.
inline Eigen::VectorXd predict(const RidgeModel& model, const Eigen::MatrixXd& cross_gram) {
    if (cross_gram.cols() != model.dual_coefficients.size())
        throw ShapeMismatch("cross kernel column count must match the training size");
    return cross_gram * model.dual_coefficients;
}

/// Two-class decision: sign with ties going to +1.
inline double classify(double score) { return score >= 0.0 ? 1.0 : -1.0; }

struct LooResult {
    Eigen::VectorXd scores; // leave-one-out predictions
    double accuracy = 0.0;
};

/// Closed-form leave-one-out for ridge: loo_i = (yhat_i - S_ii y_i) / (1 - S_ii)
/// with the smoother S = K (K + lambda I)^{-1}. Needs lambda > 0.
inline LooResult leave_one_out(const GramMatrix& gram, const Eigen::VectorXd& y, double lambda) {
    if (lambda <= 0.0) throw Error("leave-one-out needs lambda > 0");
    const Eigen::Index n = gram.entries.rows();
    if (y.size() != n) throw ShapeMismatch("label count must match the Gram size");
    const Eigen::MatrixXd system =
        gram.entries + lambda * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd smoother = gram.entries * system.ldlt().solve(
                                         Eigen::MatrixXd::Identity(n, n));
    const Eigen::VectorXd yhat = smoother * y;
    LooResult result;
    result.scores.resize(n);
    int correct = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double denom = 1.0 - smoother(i, i);
        if (std::abs(denom) < 1e-12) throw SingularSystem("leave-one-out smoother is singular");
        result.scores(i) = (yhat(i) - smoother(i, i) * y(i)) / denom;
        if (classify(result.scores(i)) == y(i)) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return result;
}

} // namespace sntk
