#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sntk/activation.hpp"
#include "sntk/diffusion.hpp"
#include "sntk/errors.hpp"

namespace sntk {

enum class Readout { sum_aggregation, per_node };

/// Finite-width sheaf convolutional network
///   X_l = sigma(s_l * D X_{l-1} W_l),   l = 1..num_layers,
/// with widths[0] input channels and widths[l] the width of layer l. When
/// `final_activation` is false the last layer stays linear, which is the
/// architecture whose tangent kernel has one unmasked top term. With
/// `ntk_scaling` the hidden products carry s_l = 1/sqrt(widths[l-1]) for
/// l >= 2; the first layer is unscaled so the layer-one covariance is
/// exactly D X X'^T D'^T at any width.
struct ScnConfig {
    int num_layers = 1;
    std::vector<int> widths; // size num_layers + 1, widths[0] = input channels
    Activation activation = Activation::relu;
    Readout readout = Readout::sum_aggregation;
    bool ntk_scaling = true;
    bool final_activation = true;
};

struct ScnParams {
    std::vector<Eigen::MatrixXd> weights; // W_l: widths[l-1] x widths[l]
};

inline void check_config(const ScnConfig& config) {
    if (config.num_layers < 1) throw Error("network needs at least one layer");
    if (static_cast<int>(config.widths.size()) != config.num_layers + 1)
        throw ShapeMismatch("widths must list input channels plus one width per layer");
    for (int w : config.widths)
        if (w <= 0) throw ShapeMismatch("widths must be positive");
}

/// Standard normal initialization, deterministic per seed.
inline ScnParams init_params(const ScnConfig& config, std::uint64_t seed) {
    check_config(config);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ScnParams params;
    params.weights.reserve(config.num_layers);
    for (int l = 1; l <= config.num_layers; ++l) {
        Eigen::MatrixXd w(config.widths[l - 1], config.widths[l]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = normal(rng);
        params.weights.push_back(std::move(w));
    }
    return params;
}

inline double layer_scale(const ScnConfig& config, int l) {
    if (!config.ntk_scaling || l == 1) return 1.0;
    return 1.0 / std::sqrt(static_cast<double>(config.widths[l - 1]));
}

inline Activation layer_activation(const ScnConfig& config, int l) {
    if (l == config.num_layers && !config.final_activation) return Activation::identity;
    return config.activation;
}

struct ForwardTrace {
    std::vector<Eigen::MatrixXd> preactivation;  // Z_1..Z_L at slots 1..L
    std::vector<Eigen::MatrixXd> postactivation; // X_0..X_L
    const Eigen::MatrixXd& output() const { return postactivation.back(); }
};

inline ForwardTrace forward(const ScnParams& params, const DiffusionOperator& op,
                            const Eigen::MatrixXd& x, const ScnConfig& config) {
    check_config(config);
    if (static_cast<int>(params.weights.size()) != config.num_layers)
        throw ShapeMismatch("parameter count does not match the layer count");
    if (x.rows() != op.matrix.cols())
        throw ShapeMismatch("signal rows must match the diffusion operator");
    if (x.cols() != config.widths[0])
        throw ShapeMismatch("signal channels " + std::to_string(x.cols()) +
                            " != configured input width " + std::to_string(config.widths[0]));
    ForwardTrace trace;
    trace.preactivation.resize(config.num_layers + 1);
    trace.postactivation.resize(config.num_layers + 1);
    trace.postactivation[0] = x;
    for (int l = 1; l <= config.num_layers; ++l) {
        const Eigen::MatrixXd& w = params.weights[l - 1];
        if (w.rows() != config.widths[l - 1] || w.cols() != config.widths[l])
            throw ShapeMismatch("weight " + std::to_string(l) + " has the wrong shape");
        trace.preactivation[l] =
            layer_scale(config, l) * (op.matrix * trace.postactivation[l - 1]) * w;
        trace.postactivation[l] =
            apply_activation(layer_activation(config, l), trace.preactivation[l]);
    }
    return trace;
}

/// Sum aggregation collapses the final signal to one number; per_node keeps
/// the node-block values (row-major flatten).
inline Eigen::VectorXd readout(const Eigen::MatrixXd& x_final, Readout kind) {
    if (kind == Readout::sum_aggregation) {
        Eigen::VectorXd out(1);
        out(0) = x_final.sum();
        return out;
    }
    Eigen::VectorXd out(x_final.size());
    Eigen::Index idx = 0;
    for (Eigen::Index r = 0; r < x_final.rows(); ++r)
        for (Eigen::Index c = 0; c < x_final.cols(); ++c) out(idx++) = x_final(r, c);
    return out;
}

inline int parameter_count(const ScnConfig& config) {
    int total = 0;
    for (int l = 1; l <= config.num_layers; ++l) total += config.widths[l - 1] * config.widths[l];
    return total;
}

/// Jacobian of the network output w.r.t. all weights: one row per output
/// coordinate (node-major, then channel), columns are [W_1 W_2 ...] row-major.
/// Intended for small networks; the finite-difference tests drive this.
inline Eigen::MatrixXd param_gradient(const ScnParams& params, const DiffusionOperator& op,
                                      const Eigen::MatrixXd& x, const ScnConfig& config) {
    const ForwardTrace trace = forward(params, op, x, config);
    const int L = config.num_layers;
    const Eigen::Index n = op.matrix.rows();
    const int d_out = config.widths[L];
    const Eigen::Index num_outputs = n * d_out;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(num_outputs, parameter_count(config));

    // diffused layer inputs P_l = D X_{l-1}
    std::vector<Eigen::MatrixXd> diffused(L + 1);
    for (int l = 1; l <= L; ++l) diffused[l] = op.matrix * trace.postactivation[l - 1];

    for (Eigen::Index i = 0; i < n; ++i) {
        for (int q = 0; q < d_out; ++q) {
            // sensitivity of output (i, q) w.r.t. each pre-activation Z_l
            Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, d_out);
            g(i, q) = activation_derivative(layer_activation(config, L),
                                            trace.preactivation[L](i, q));
            Eigen::Index col_end = jac.cols();
            for (int l = L; l >= 1; --l) {
                const Eigen::Index w_size = params.weights[l - 1].size();
                const Eigen::MatrixXd grad_w =
                    layer_scale(config, l) * (diffused[l].transpose() * g);
                Eigen::Index col = col_end - w_size;
                for (Eigen::Index r = 0; r < grad_w.rows(); ++r)
                    for (Eigen::Index c = 0; c < grad_w.cols(); ++c)
                        jac(i * d_out + q, col++) = grad_w(r, c);
                col_end -= w_size;
                if (l > 1) {
                    g = (layer_scale(config, l) *
                         (op.matrix.transpose() * g * params.weights[l - 1].transpose()))
                            .cwiseProduct(
                                activation_derivative(layer_activation(config, l - 1),
                                                      trace.preactivation[l - 1]))
                            .eval();
                }
            }
        }
    }
    return jac;
}

/// Monte Carlo estimate of the tangent kernel: the average over fresh
/// standard-normal initializations (seed + sample index) of the gradient
/// inner products <df(W,F)/dW, df(W,F')/dW>, taken per pair of node
/// coordinates and averaged over matching output channels. The contraction
/// uses Tr(S^T (P P'^T) S') per layer instead of materialized per-coordinate
/// gradients, so wide networks stay cheap on small graphs.
inline Eigen::MatrixXd empirical_ntk(const ScnConfig& config, const DiffusionOperator& op,
                                     const DiffusionOperator& opp, const Eigen::MatrixXd& x,
                                     const Eigen::MatrixXd& xp, int num_samples,
                                     std::uint64_t seed) {
    check_config(config);
    if (num_samples < 1) throw Error("need at least one Monte Carlo sample");
    if (op.matrix.rows() != opp.matrix.rows())
        throw ShapeMismatch("both evaluations need the same signal dimension");
    const Eigen::Index n = op.matrix.rows();
    const int L = config.num_layers;
    const int d_out = config.widths[L];

    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < num_samples; ++s) {
        const ScnParams params = init_params(config, seed + static_cast<std::uint64_t>(s));
        const ForwardTrace ta = forward(params, op, x, config);
        const ForwardTrace tb = forward(params, opp, xp, config);

        // scale^2 * (D X_{l-1})(D' X'_{l-1})^T per layer, shared across channels
        std::vector<Eigen::MatrixXd> cross_by_layer(L + 1);
        for (int l = 1; l <= L; ++l) {
            const double scale = layer_scale(config, l);
            const Eigen::MatrixXd pa = op.matrix * ta.postactivation[l - 1];
            const Eigen::MatrixXd pb = opp.matrix * tb.postactivation[l - 1];
            cross_by_layer[l] = (scale * scale) * (pa * pb.transpose());
        }

        Eigen::MatrixXd sample = Eigen::MatrixXd::Zero(n, n);
        for (int q = 0; q < d_out; ++q) {
            // S[i]: sensitivity of output (i, q) w.r.t. the current layer's
            // pre-activations, one (n x d_l) matrix per node coordinate i.
            std::vector<Eigen::MatrixXd> sa(n), sb(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                sa[i] = Eigen::MatrixXd::Zero(n, d_out);
                sb[i] = Eigen::MatrixXd::Zero(n, d_out);
                sa[i](i, q) = activation_derivative(layer_activation(config, L),
                                                    ta.preactivation[L](i, q));
                sb[i](i, q) = activation_derivative(layer_activation(config, L),
                                                    tb.preactivation[L](i, q));
            }
            for (int l = L; l >= 1; --l) {
                const double scale = layer_scale(config, l);
                const Eigen::MatrixXd& cross = cross_by_layer[l];
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index j = 0; j < n; ++j)
                        sample(i, j) += (cross.cwiseProduct(sa[i] * sb[j].transpose())).sum();
                if (l > 1) {
                    const Eigen::MatrixXd wt = params.weights[l - 1].transpose();
                    const Eigen::MatrixXd da = activation_derivative(
                        layer_activation(config, l - 1), ta.preactivation[l - 1]);
                    const Eigen::MatrixXd db = activation_derivative(
                        layer_activation(config, l - 1), tb.preactivation[l - 1]);
                    for (Eigen::Index i = 0; i < n; ++i) {
                        sa[i] = (scale * (op.matrix.transpose() * sa[i] * wt))
                                    .cwiseProduct(da)
                                    .eval();
                        sb[i] = (scale * (opp.matrix.transpose() * sb[i] * wt))
                                    .cwiseProduct(db)
                                    .eval();
                    }
                }
            }
        }
        theta += sample / static_cast<double>(d_out);
    }
    return theta / static_cast<double>(num_samples);
}

} // namespace sntk
