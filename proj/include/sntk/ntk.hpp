#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sntk/activation.hpp"
#include "sntk/diffusion.hpp"
#include "sntk/errors.hpp"
#include "sntk/graph.hpp"

namespace sntk {

// Self-covariances below this product are treated as degenerate points of the
// Gaussian expectations.
inline constexpr double kDegenerateVariance = 1e-18;
// Diagonal entries of a self-covariance below this signal corrupted input.
inline constexpr double kVarianceTolerance = -1e-9;

/// Gaussian expectations of activation products for one covariance entry.
/// For (u, v) ~ N(0, [[s_aa, s_ab], [s_ab, s_bb]]) returns
///   H    = E[sigma(u) sigma(v)]
///   Hdot = E[sigma'(u) sigma'(v)]
/// ReLU uses the arc-cosine closed forms; identity passes the covariance
/// through. At a degenerate point (vanishing variance product) the ReLU pair
/// is (0, 1/4), the independent-limit value.
inline std::pair<double, double> activation_expectation(double sigma_aa, double sigma_ab,
                                                        double sigma_bb, Activation act) {
    if (act == Activation::identity) return {sigma_ab, 1.0};
    if (sigma_aa < kVarianceTolerance || sigma_bb < kVarianceTolerance)
        throw NonPositiveVariance("self-covariance diagonal is negative: " +
                                  std::to_string(std::min(sigma_aa, sigma_bb)));
    const double saa = std::max(sigma_aa, 0.0);
    const double sbb = std::max(sigma_bb, 0.0);
    const double scale2 = saa * sbb;
    if (scale2 <= kDegenerateVariance) return {0.0, 0.25};
    const double scale = std::sqrt(scale2);
    double c = sigma_ab / scale;
    c = std::min(1.0, std::max(-1.0, c)); // float drift past Cauchy-Schwarz
    const double theta = std::acos(c);
    const double pi = M_PI;
    const double h = scale / (2.0 * pi) * (std::sin(theta) + (pi - theta) * c);
    const double hdot = (pi - theta) / (2.0 * pi);
    return {h, hdot};
}

/// Layer covariances Sigma_0..Sigma_{L+1} between two sheaf signals:
/// Sigma_0 = X X'^T, Sigma_l = D H_{l-1} D'^T.
struct CovarianceSequence {
    std::vector<Eigen::MatrixXd> sigma; // index l = 0..L+1
};

/// Activation expectation matrices per layer: H_l = E[sigma sigma'^T],
/// Hdot_l = E[sigma' sigma'^T], for l = 1..L (slot 0 unused).
struct ActivationKernels {
    std::vector<Eigen::MatrixXd> h;
    std::vector<Eigen::MatrixXd> hdot;
    Activation activation = Activation::identity;
};

struct SigmaRecursion {
    CovarianceSequence covariance;
    ActivationKernels kernels;
};

namespace detail {

inline void check_pair_shapes(const DiffusionOperator& d, const DiffusionOperator& dp,
                              const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp) {
    if (d.matrix.rows() != dp.matrix.rows())
        throw ShapeMismatch("kernel needs equal signal dimensions on both sides (|V|k = |V'|k)");
    if (x.rows() != d.matrix.cols() || xp.rows() != dp.matrix.cols())
        throw ShapeMismatch("signal rows must match the diffusion operator");
    if (x.cols() != xp.cols())
        throw ShapeMismatch("signals must share the channel count");
}

/// Entrywise Gaussian expectations over a stacked covariance; fills H and
/// Hdot of the same shape.
inline void gaussian_expectations(const Eigen::MatrixXd& cov, Activation act,
                                  Eigen::MatrixXd& h_out, Eigen::MatrixXd& hdot_out) {
    const auto n = cov.rows();
    h_out.resize(n, n);
    hdot_out.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        if (cov(a, a) < kVarianceTolerance)
            throw NonPositiveVariance("covariance diagonal entry " + std::to_string(a) +
                                      " is negative: " + std::to_string(cov(a, a)));
    }
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            auto [h, hdot] = activation_expectation(cov(a, a), cov(a, b), cov(b, b), act);
            h_out(a, b) = h;
            h_out(b, a) = h;
            hdot_out(a, b) = hdot;
            hdot_out(b, a) = hdot;
        }
    }
}

} // namespace detail

/// Runs the covariance recursion for the pair (D, X), (D', X') up to layer
/// L+1. Internally tracks the stacked two-sheaf covariance so the ReLU
/// expectations see the exact per-side variances.
inline SigmaRecursion sigma_recursion(const DiffusionOperator& d, const DiffusionOperator& dp,
                                      const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                                      int num_layers, Activation act) {
    if (num_layers < 0) throw Error("layer count must be nonnegative");
    detail::check_pair_shapes(d, dp, x, xp);
    const Eigen::Index n = d.matrix.rows();

    Eigen::MatrixXd stacked_x(2 * n, x.cols());
    stacked_x.topRows(n) = x;
    stacked_x.bottomRows(n) = xp;
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    z.topLeftCorner(n, n) = d.matrix;
    z.bottomRightCorner(n, n) = dp.matrix;

    SigmaRecursion rec;
    rec.kernels.activation = act;
    rec.covariance.sigma.resize(num_layers + 2);
    rec.kernels.h.resize(num_layers + 1);
    rec.kernels.hdot.resize(num_layers + 1);

    Eigen::MatrixXd stacked = stacked_x * stacked_x.transpose();
    stacked = 0.5 * (stacked + stacked.transpose()).eval();
    rec.covariance.sigma[0] = stacked.block(0, n, n, n);

    for (int l = 1; l <= num_layers + 1; ++l) {
        Eigen::MatrixXd h_prev;
        if (l == 1) {
            h_prev = stacked; // the input layer is linear: H_0 = Sigma_0
        } else {
            Eigen::MatrixXd hdot;
            detail::gaussian_expectations(stacked, act, h_prev, hdot);
            rec.kernels.h[l - 1] = h_prev.block(0, n, n, n);
            rec.kernels.hdot[l - 1] = hdot.block(0, n, n, n);
        }
        stacked = (z * h_prev * z.transpose()).eval();
        stacked = 0.5 * (stacked + stacked.transpose()).eval();
        rec.covariance.sigma[l] = stacked.block(0, n, n, n);
    }
    return rec;
}

/// Kernel matrix Theta with the per-layer factors kept for diagnostics:
/// Theta = sum_l delta[l] (.) pi[l], l = 1..L+1 (slot 0 unused).
struct NtkResult {
    Eigen::MatrixXd theta;
    std::vector<Eigen::MatrixXd> delta;
    std::vector<Eigen::MatrixXd> pi;
};

namespace detail {

/// Assembles Theta = sum_{l=1}^{L+1} (Sigma_l (.) (DD'^T)^{(.)(L+1-l)}) (.) Pi_l
/// with Pi_l = Hdot_l (.) ... (.) Hdot_L (empty product = ones).
inline NtkResult assemble_factored(const std::vector<Eigen::MatrixXd>& sigma,
                                   const std::vector<Eigen::MatrixXd>& hdot,
                                   const Eigen::MatrixXd& ddp, int num_layers) {
    const Eigen::Index n = ddp.rows();
    NtkResult res;
    res.delta.resize(num_layers + 2);
    res.pi.resize(num_layers + 2);
    res.theta = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd hadamard_pow = Eigen::MatrixXd::Ones(n, n); // exponent L+1-l, from 0
    Eigen::MatrixXd pi = Eigen::MatrixXd::Ones(n, n);
    for (int l = num_layers + 1; l >= 1; --l) {
        if (l <= num_layers && !hdot.empty()) pi = pi.cwiseProduct(hdot[l]).eval();
        res.delta[l] = sigma[l].cwiseProduct(hadamard_pow);
        res.pi[l] = pi;
        res.theta += res.delta[l].cwiseProduct(res.pi[l]);
        hadamard_pow = hadamard_pow.cwiseProduct(ddp).eval();
    }
    return res;
}

} // namespace detail

/// Sheaf neural tangent kernel in the diffusion-factored form: the backward
/// pass enters as Hadamard powers of DD'^T and activation-path masks Pi_l.
inline NtkResult ntk_full(const DiffusionOperator& d, const DiffusionOperator& dp,
                          const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp, int num_layers,
                          Activation act) {
    SigmaRecursion rec = sigma_recursion(d, dp, x, xp, num_layers, act);
    const Eigen::MatrixXd ddp = d.matrix * dp.matrix.transpose();
    return detail::assemble_factored(rec.covariance.sigma, rec.kernels.hdot, ddp, num_layers);
}

/// Identity-activation kernel: no activation expectations, every mask is one.
inline NtkResult ntk_linear(const DiffusionOperator& d, const DiffusionOperator& dp,
                            const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                            int num_layers) {
    detail::check_pair_shapes(d, dp, x, xp);
    const Eigen::Index n = d.matrix.rows();
    std::vector<Eigen::MatrixXd> sigma(num_layers + 2);
    sigma[0] = x * xp.transpose();
    for (int l = 1; l <= num_layers + 1; ++l)
        sigma[l] = d.matrix * sigma[l - 1] * dp.matrix.transpose();
    const Eigen::MatrixXd ddp = d.matrix * dp.matrix.transpose();
    return detail::assemble_factored(sigma, {}, ddp, num_layers);
}

/// Kernel of the simple (collapsed) convolutional architecture
/// rho(D^L X W): a single diffusion term masked by one power of DD'^T.
inline Eigen::MatrixXd ntk_simple_gcn(const DiffusionOperator& d, const DiffusionOperator& dp,
                                      const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                                      int num_layers) {
    detail::check_pair_shapes(d, dp, x, xp);
    Eigen::MatrixXd m = x * xp.transpose();
    for (int l = 0; l < num_layers; ++l) m = (d.matrix * m * dp.matrix.transpose()).eval();
    return m.cwiseProduct(d.matrix * dp.matrix.transpose());
}

/// Kernel from the exact backpropagation covariance: backward mixing is the
/// nested conjugation Theta_l = Sigma_l + D (Theta_{l-1} (.) Hdot_{l-1}) D'^T
/// rather than elementwise powers of DD'^T. This is the infinite-width limit
/// of the actual gradient inner products; `ntk_full` is its diffusion-
/// factored elementwise approximation. Kept as a diagnostic reference.
inline Eigen::MatrixXd ntk_exact(const DiffusionOperator& d, const DiffusionOperator& dp,
                                 const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                                 int num_layers, Activation act) {
    SigmaRecursion rec = sigma_recursion(d, dp, x, xp, num_layers, act);
    Eigen::MatrixXd theta = rec.covariance.sigma[1];
    for (int l = 2; l <= num_layers + 1; ++l) {
        const Eigen::MatrixXd masked =
            act == Activation::identity ? theta
                                        : theta.cwiseProduct(rec.kernels.hdot[l - 1]).eval();
        theta = rec.covariance.sigma[l] + d.matrix * masked * dp.matrix.transpose();
    }
    return theta;
}

/// Self-contained k = 1 reference: the same factored kernel computed straight
/// from graph adjacency with none of the sheaf machinery. Cross-check oracle
/// for the constant-sheaf reduction.
inline Eigen::MatrixXd gntk_reference(const Graph& g, const Graph& gp, const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& xp, int num_layers, Activation act) {
    if (g.num_nodes != gp.num_nodes)
        throw ShapeMismatch("reference kernel needs matching node counts");
    if (x.rows() != g.num_nodes || xp.rows() != gp.num_nodes || x.cols() != xp.cols())
        throw ShapeMismatch("feature matrices must be (N_V x d) with shared d");
    const int n = g.num_nodes;

    // Normalized adjacency; isolated nodes keep an identity diagonal (the
    // pseudo-inverse normalization of I - L~ does the same on the sheaf side).
    auto diffusion = [n](const Graph& graph) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        std::vector<int> deg(n, 0);
        for (auto [u, v] : graph.edges) {
            ++deg[u];
            ++deg[v];
        }
        for (auto [u, v] : graph.edges) {
            const double w = 1.0 / std::sqrt(static_cast<double>(deg[u]) * deg[v]);
            m(u, v) = w;
            m(v, u) = w;
        }
        for (int v = 0; v < n; ++v)
            if (deg[v] == 0) m(v, v) = 1.0;
        return m;
    };
    const Eigen::MatrixXd s = diffusion(g);
    const Eigen::MatrixXd sp = diffusion(gp);

    auto relu_pair = [](double vaa, double vab, double vbb) -> std::pair<double, double> {
        const double p2 = vaa * vbb;
        if (p2 <= 1e-18) return {0.0, 0.25};
        const double r = std::sqrt(p2);
        const double c = std::clamp(vab / r, -1.0, 1.0);
        const double t = std::acos(c);
        return {r * (std::sin(t) + (M_PI - t) * c) / (2.0 * M_PI), (M_PI - t) / (2.0 * M_PI)};
    };

    std::vector<Eigen::MatrixXd> sig_cross(num_layers + 2), sig_a(num_layers + 2),
        sig_b(num_layers + 2), hdot(num_layers + 1);
    sig_cross[0] = x * xp.transpose();
    sig_a[0] = x * x.transpose();
    sig_b[0] = xp * xp.transpose();
    for (int l = 1; l <= num_layers + 1; ++l) {
        Eigen::MatrixXd hc = sig_cross[l - 1], ha = sig_a[l - 1], hb = sig_b[l - 1];
        if (l >= 2 && act == Activation::relu) {
            hc.resize(n, n);
            ha.resize(n, n);
            hb.resize(n, n);
            hdot[l - 1].resize(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double vaa = sig_a[l - 1](i, i);
                    const double vbb = sig_b[l - 1](j, j);
                    auto [hij, dij] = relu_pair(vaa, sig_cross[l - 1](i, j), vbb);
                    hc(i, j) = hij;
                    hdot[l - 1](i, j) = dij;
                    ha(i, j) = relu_pair(sig_a[l - 1](i, i), sig_a[l - 1](i, j),
                                         sig_a[l - 1](j, j))
                                   .first;
                    hb(i, j) = relu_pair(sig_b[l - 1](i, i), sig_b[l - 1](i, j),
                                         sig_b[l - 1](j, j))
                                   .first;
                }
        } else if (l >= 2) {
            hdot[l - 1] = Eigen::MatrixXd::Ones(n, n);
        }
        sig_cross[l] = s * hc * sp.transpose();
        sig_a[l] = s * ha * s.transpose();
        sig_b[l] = sp * hb * sp.transpose();
    }

    const Eigen::MatrixXd ssp = s * sp.transpose();
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
    for (int l = 1; l <= num_layers + 1; ++l) {
        Eigen::MatrixXd term =
            sig_cross[l].cwiseProduct(ssp.array().pow(static_cast<double>(num_layers + 1 - l)).matrix());
        for (int i = l; i <= num_layers; ++i) term = term.cwiseProduct(hdot[i]).eval();
        theta += term;
    }
    return theta;
}

/// Sum-readout kernel between two items: 1^T Theta 1.
inline double reduce_graph_sum(const Eigen::MatrixXd& theta) { return theta.sum(); }

/// Scalar node-level kernel between nodes v and v': the (k x k) block entry
/// for k = 1, its trace for k > 1.
inline double reduce_node_pair(const Eigen::MatrixXd& theta, int stalk_dim, int v, int vp) {
    if (stalk_dim <= 0) throw Error("stalk dimension must be positive");
    if ((v + 1) * stalk_dim > theta.rows() || (vp + 1) * stalk_dim > theta.cols() || v < 0 ||
        vp < 0)
        throw ShapeMismatch("node index outside the kernel matrix");
    return theta.block(v * stalk_dim, vp * stalk_dim, stalk_dim, stalk_dim).trace();
}

} // namespace sntk
