#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sntk/diffusion.hpp"
#include "sntk/errors.hpp"
#include "sntk/graph.hpp"
#include "sntk/laplacian.hpp"
#include "sntk/ntk.hpp"

namespace sntk {

// Brute-force subset enumeration stays feasible up to this many nodes.
inline constexpr int kCheegerBruteForceLimit = 24;

struct CheegerReport {
    std::optional<double> exact;
    std::vector<int> witness; // subset achieving the exact constant
    double lower_bound = 0.0; // lambda_2 / 2
    double upper_bound = 0.0; // sqrt(2 lambda_2)
    double lambda2 = 0.0;     // second-smallest normalized Laplacian eigenvalue
};

/// Exact Cheeger constant h(G) = min_S |boundary(S)| / min(|S|, |S^c|) by
/// enumerating the subsets that contain node 0 (complement symmetry halves
/// the work). Guarded for desk-scale graphs.
inline CheegerReport cheeger_exact(const Graph& graph) {
    if (!graph.is_connected()) throw DisconnectedGraph("Cheeger constant needs a connected graph");
    if (graph.num_nodes > kCheegerBruteForceLimit)
        throw TooLarge("brute-force Cheeger is limited to " +
                       std::to_string(kCheegerBruteForceLimit) + " nodes");
    const int n = graph.num_nodes;
    CheegerReport report;
    if (n < 2) throw InvalidGraph("Cheeger constant needs at least two nodes");
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;
    const std::uint32_t limit = 1u << (n - 1); // choices over nodes 1..n-1
    for (std::uint32_t bits = 0; bits + 1 < limit; ++bits) {
        const std::uint32_t mask = (bits << 1) | 1u; // node 0 always inside
        const int size = __builtin_popcount(mask);
        int cut = 0;
        for (auto [u, v] : graph.edges)
            cut += ((mask >> u) ^ (mask >> v)) & 1u;
        const double ratio = static_cast<double>(cut) / std::min(size, n - size);
        if (ratio < best) {
            best = ratio;
            best_mask = mask;
        }
    }
    report.exact = best;
    for (int v = 0; v < n; ++v)
        if ((best_mask >> v) & 1u) report.witness.push_back(v);
    return report;
}

/// Second-smallest eigenvalue of the normalized graph Laplacian.
inline double normalized_lambda2(const Graph& graph) {
    if (!graph.is_connected()) throw DisconnectedGraph("spectral bounds need a connected graph");
    const int n = graph.num_nodes;
    auto deg = graph.degrees();
    Eigen::MatrixXd l = Eigen::MatrixXd::Identity(n, n);
    for (auto [u, v] : graph.edges) {
        const double w = 1.0 / std::sqrt(static_cast<double>(deg[u]) * deg[v]);
        l(u, v) = -w;
        l(v, u) = -w;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(1);
}

/// Classical spectral sandwich (lambda_2/2, sqrt(2 lambda_2)).
inline std::pair<double, double> cheeger_bounds(const Graph& graph) {
    const double l2 = normalized_lambda2(graph);
    return {l2 / 2.0, std::sqrt(2.0 * l2)};
}

inline CheegerReport cheeger_report(const Graph& graph) {
    CheegerReport report;
    if (graph.num_nodes <= kCheegerBruteForceLimit) report = cheeger_exact(graph);
    report.lambda2 = normalized_lambda2(graph);
    report.lower_bound = report.lambda2 / 2.0;
    report.upper_bound = std::sqrt(2.0 * report.lambda2);
    return report;
}

/// Degree-proportional stationary distribution pi_v = deg(v) / 2|E|.
inline Eigen::VectorXd stationary_distribution(const Graph& graph) {
    if (graph.num_edges() == 0) throw InvalidGraph("stationary distribution needs edges");
    auto deg = graph.degrees();
    Eigen::VectorXd pi(graph.num_nodes);
    for (int v = 0; v < graph.num_nodes; ++v)
        pi(v) = static_cast<double>(deg[v]) / (2.0 * graph.num_edges());
    return pi;
}

struct MixingBound {
    double value = 0.0;          // log(1 / min_v pi_v) / h^2
    double cheeger_used = 0.0;   // exact under the guard, else the spectral lower bound
    bool spectral_fallback = false;
};

/// Order-of-magnitude mixing diagnostic; no hidden constants.
inline MixingBound mixing_bound(const Graph& graph) {
    if (!graph.is_connected()) throw DisconnectedGraph("mixing bound needs a connected graph");
    MixingBound out;
    if (graph.num_nodes <= kCheegerBruteForceLimit) {
        out.cheeger_used = *cheeger_exact(graph).exact;
    } else {
        out.cheeger_used = cheeger_bounds(graph).first;
        out.spectral_fallback = true;
    }
    const Eigen::VectorXd pi = stationary_distribution(graph);
    out.value = std::log(1.0 / pi.minCoeff()) / (out.cheeger_used * out.cheeger_used);
    return out;
}

struct OversmoothingCurve {
    std::vector<double> operator_distance; // ||D^l - P||_F for l = 0..L_max
    std::vector<double> signal_distance;   // ||D^l X - P X||_F, empty without X
    double decay_rate = 0.0;               // max |eigenvalue| strictly inside the unit circle
    bool convergent = true;                // false iff an eigenvalue sits at -1 (oscillation)
};

/// Distance of repeated diffusion to the harmonic projection. The projector
/// must come from the same Laplacian the operator was built on.
inline OversmoothingCurve oversmoothing_curve(const DiffusionOperator& op,
                                              const SheafLaplacian& lap,
                                              const std::optional<Eigen::MatrixXd>& x,
                                              int l_max) {
    if (l_max < 1) throw Error("need at least one diffusion step");
    const Eigen::MatrixXd p = harmonic_projection(lap);
    OversmoothingCurve curve;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double v = es.eigenvalues()(i);
        if (std::abs(v) < 1.0 - 1e-9)
            curve.decay_rate = std::max(curve.decay_rate, std::abs(v));
        else if (v < 0.0)
            curve.convergent = false; // an eigenvalue at -1 never dies out
    }

    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(op.matrix.rows(), op.matrix.cols());
    for (int l = 0; l <= l_max; ++l) {
        curve.operator_distance.push_back((power - p).norm());
        if (x) curve.signal_distance.push_back((power * (*x) - p * (*x)).norm());
        if (l < l_max) power = (power * op.matrix).eval();
    }
    return curve;
}

/// Least-squares slope of log(distance) over steps [from, to]; the spectral
/// law says this approaches log(decay_rate).
inline double fitted_log_slope(const std::vector<double>& values, int from, int to) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (int l = from; l <= to && l < static_cast<int>(values.size()); ++l) {
        if (values[l] <= 1e-300) break;
        const double y = std::log(values[l]);
        sx += l;
        sy += y;
        sxx += static_cast<double>(l) * l;
        sxy += l * y;
        ++count;
    }
    if (count < 2) throw Error("not enough points to fit a slope");
    return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

/// Random-walk kernel (alpha I - L~)^l on the normalized Laplacian.
inline Eigen::MatrixXd random_walk_kernel(const SheafLaplacian& lap, double alpha, int l) {
    if (l < 0) throw Error("walk length must be nonnegative");
    const Eigen::MatrixXd ltilde =
        lap.normalized ? lap.matrix : normalized_laplacian(lap).matrix;
    const Eigen::MatrixXd base =
        alpha * Eigen::MatrixXd::Identity(ltilde.rows(), ltilde.cols()) - ltilde;
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(ltilde.rows(), ltilde.cols());
    for (int i = 0; i < l; ++i) out = (out * base).eval();
    return out;
}

struct MaskStats {
    int layer = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    double masked_fraction = 0.0; // entries below the threshold
};

/// Per-layer statistics of the activation-path masks Pi_l = Hdot_l (.) ... (.)
/// Hdot_L. Entries near zero mark node pairs whose diffusion similarity the
/// ReLU paths effectively mask out of the kernel.
inline std::vector<MaskStats> path_mask_stats(const ActivationKernels& kernels,
                                              double threshold = 0.05) {
    const int num_layers = static_cast<int>(kernels.hdot.size()) - 1;
    std::vector<MaskStats> stats;
    if (num_layers < 0) return stats;
    Eigen::MatrixXd pi;
    for (int l = num_layers + 1; l >= 1; --l) {
        if (l == num_layers + 1) {
            const Eigen::Index n = num_layers >= 1 ? kernels.hdot[1].rows() : 0;
            if (n == 0) break;
            pi = Eigen::MatrixXd::Ones(n, n);
        } else {
            pi = pi.cwiseProduct(kernels.hdot[l]).eval();
        }
        MaskStats s;
        s.layer = l;
        s.mean = pi.mean();
        s.min = pi.minCoeff();
        s.max = pi.maxCoeff();
        s.masked_fraction =
            (pi.array() < threshold).cast<double>().sum() / static_cast<double>(pi.size());
        stats.push_back(s);
    }
    std::reverse(stats.begin(), stats.end());
    return stats;
}

} // namespace sntk
