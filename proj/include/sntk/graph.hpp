#pragma once

#include <algorithm>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sntk/errors.hpp"

namespace sntk {

/// Undirected simple graph. Each edge stores its canonical orientation
/// (min index -> max index); the Laplacian is orientation-invariant.
struct Graph {
    int num_nodes = 0;
    std::vector<std::pair<int, int>> edges; // canonicalized u < v

    Graph() = default;

    Graph(int n, std::vector<std::pair<int, int>> edge_list) : num_nodes(n) {
        if (n <= 0) throw InvalidGraph("graph needs a positive node count");
        edges.reserve(edge_list.size());
        for (auto [u, v] : edge_list) {
            if (u < 0 || v < 0 || u >= n || v >= n)
                throw InvalidGraph("edge endpoint out of range: (" + std::to_string(u) + "," +
                                   std::to_string(v) + ")");
            if (u == v) throw InvalidGraph("self-loop at node " + std::to_string(u));
            if (u > v) std::swap(u, v);
            edges.emplace_back(u, v);
        }
        std::sort(edges.begin(), edges.end());
        if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
            throw InvalidGraph("duplicate edge");
    }

    int num_edges() const { return static_cast<int>(edges.size()); }

    std::vector<int> degrees() const {
        std::vector<int> deg(num_nodes, 0);
        for (auto [u, v] : edges) {
            ++deg[u];
            ++deg[v];
        }
        return deg;
    }

    Eigen::MatrixXd adjacency() const {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(num_nodes, num_nodes);
        for (auto [u, v] : edges) {
            a(u, v) = 1.0;
            a(v, u) = 1.0;
        }
        return a;
    }

    /// Combinatorial Laplacian D - A.
    Eigen::MatrixXd laplacian() const {
        Eigen::MatrixXd l = -adjacency();
        auto deg = degrees();
        for (int v = 0; v < num_nodes; ++v) l(v, v) = static_cast<double>(deg[v]);
        return l;
    }

    std::vector<std::vector<int>> adjacency_list() const {
        std::vector<std::vector<int>> adj(num_nodes);
        for (auto [u, v] : edges) {
            adj[u].push_back(v);
            adj[v].push_back(u);
        }
        return adj;
    }

    bool is_connected() const {
        if (num_nodes == 0) return false;
        auto adj = adjacency_list();
        std::vector<char> seen(num_nodes, 0);
        std::queue<int> q;
        q.push(0);
        seen[0] = 1;
        int count = 1;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (int w : adj[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    ++count;
                    q.push(w);
                }
        }
        return count == num_nodes;
    }

    /// Two-colorability check; bipartite graphs are the oscillatory case for
    /// normalized diffusion.
    bool is_bipartite() const {
        auto adj = adjacency_list();
        std::vector<int> color(num_nodes, -1);
        for (int start = 0; start < num_nodes; ++start) {
            if (color[start] != -1) continue;
            color[start] = 0;
            std::queue<int> q;
            q.push(start);
            while (!q.empty()) {
                int v = q.front();
                q.pop();
                for (int w : adj[v]) {
                    if (color[w] == -1) {
                        color[w] = 1 - color[v];
                        q.push(w);
                    } else if (color[w] == color[v]) {
                        return false;
                    }
                }
            }
        }
        return true;
    }
};

inline Graph path_graph(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Graph(n, std::move(e));
}

inline Graph cycle_graph(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return Graph(n, std::move(e));
}

inline Graph complete_graph(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph(n, std::move(e));
}

inline Graph star_graph(int leaves) {
    std::vector<std::pair<int, int>> e;
    for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
    return Graph(leaves + 1, std::move(e));
}

inline Graph complete_bipartite_graph(int a, int b) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < b; ++j) e.emplace_back(i, a + j);
    return Graph(a + b, std::move(e));
}

} // namespace sntk
