#pragma once

#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sntk/sheaf.hpp"

namespace sntk::test {

inline double relative_frobenius(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
    const double denom = want.norm();
    if (denom == 0.0) return got.norm();
    return (got - want).norm() / denom;
}

/// Connected random graph: uniform random spanning tree plus extra edges.
inline Graph random_connected_graph(int n, int extra_edges, std::mt19937_64& rng) {
    std::vector<std::pair<int, int>> edges;
    std::set<std::pair<int, int>> used;
    for (int v = 1; v < n; ++v) {
        std::uniform_int_distribution<int> pick(0, v - 1);
        int u = pick(rng);
        edges.emplace_back(u, v);
        used.insert({u, v});
    }
    std::uniform_int_distribution<int> node(0, n - 1);
    int attempts = 0;
    while (extra_edges > 0 && attempts < 200) {
        int u = node(rng), v = node(rng);
        if (u == v) {
            ++attempts;
            continue;
        }
        if (u > v) std::swap(u, v);
        if (used.count({u, v})) {
            ++attempts;
            continue;
        }
        used.insert({u, v});
        edges.emplace_back(u, v);
        --extra_edges;
    }
    return Graph(n, std::move(edges));
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
    return m;
}

/// Random sheaf with Gaussian restriction maps on a connected random graph.
inline CellularSheaf random_sheaf(int n, int k, int extra_edges, std::mt19937_64& rng) {
    Graph g = random_connected_graph(n, extra_edges, rng);
    std::vector<EdgeMaps> maps;
    maps.reserve(g.num_edges());
    for (int e = 0; e < g.num_edges(); ++e)
        maps.push_back(EdgeMaps{random_matrix(k, k, rng), random_matrix(k, k, rng)});
    return CellularSheaf(g, k, std::move(maps));
}

/// Two-block stochastic block model, resampled (seed + attempt) until connected.
inline Graph sbm_graph(int block_size, double p_in, double p_out, std::uint64_t seed) {
    const int n = 2 * block_size;
    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
        std::mt19937_64 rng(seed + attempt);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<std::pair<int, int>> edges;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v) {
                const bool same = (u < block_size) == (v < block_size);
                if (unif(rng) < (same ? p_in : p_out)) edges.emplace_back(u, v);
            }
        Graph g(n, std::move(edges));
        if (g.is_connected()) return g;
    }
    throw std::runtime_error("could not sample a connected SBM");
}

} // namespace sntk::test
