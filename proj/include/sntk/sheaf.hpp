#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sntk/errors.hpp"
#include "sntk/graph.hpp"

namespace sntk {

/// Restriction maps for one edge, indexed by the canonical orientation
/// u -> v (u < v): tail_map is F_{u <| e}, head_map is F_{v <| e}.
struct EdgeMaps {
    Eigen::MatrixXd tail_map;
    Eigen::MatrixXd head_map;
};

/// Cellular sheaf on an undirected graph with uniform k-dimensional stalks:
/// one (k x k) restriction map per incident (vertex, edge) pair.
struct CellularSheaf {
    Graph graph;
    int stalk_dim = 1;
    std::vector<EdgeMaps> restriction_maps; // aligned with graph.edges

    CellularSheaf() = default;

    CellularSheaf(Graph g, int k, std::vector<EdgeMaps> maps)
        : graph(std::move(g)), stalk_dim(k), restriction_maps(std::move(maps)) {
        if (k <= 0) throw InvalidGraph("stalk dimension must be positive");
        if (static_cast<int>(restriction_maps.size()) != graph.num_edges())
            throw ShapeMismatch("need exactly one pair of restriction maps per edge");
        for (const auto& m : restriction_maps) {
            if (m.tail_map.rows() != k || m.tail_map.cols() != k || m.head_map.rows() != k ||
                m.head_map.cols() != k)
                throw ShapeMismatch("restriction maps must be (k x k)");
        }
    }

    int signal_rows() const { return graph.num_nodes * stalk_dim; }
};

/// The constant sheaf: every restriction map is the (k x k) identity. With
/// k = 1 its Laplacian is the combinatorial graph Laplacian.
inline CellularSheaf constant_sheaf(const Graph& graph, int k) {
    std::vector<EdgeMaps> maps(graph.num_edges(),
                               EdgeMaps{Eigen::MatrixXd::Identity(k, k),
                                        Eigen::MatrixXd::Identity(k, k)});
    return CellularSheaf(graph, k, std::move(maps));
}

/// Signed sheaf: +1 edges carry identity maps on both ends, -1 edges negate
/// the head map. Models signed graphs inside the sheaf formalism.
inline CellularSheaf signed_sheaf(const Graph& graph, int k, const std::vector<int>& signs) {
    if (static_cast<int>(signs.size()) != graph.num_edges())
        throw ShapeMismatch("need one sign per edge: got " + std::to_string(signs.size()) +
                            " for " + std::to_string(graph.num_edges()) + " edges");
    std::vector<EdgeMaps> maps;
    maps.reserve(signs.size());
    for (int s : signs) {
        if (s != 1 && s != -1) throw InvalidGraph("edge signs must be +1 or -1");
        maps.push_back(EdgeMaps{Eigen::MatrixXd::Identity(k, k),
                                static_cast<double>(s) * Eigen::MatrixXd::Identity(k, k)});
    }
    return CellularSheaf(graph, k, std::move(maps));
}

/// Signals live in block form: (N_V * k) rows (k-row block per node), d
/// channel columns. Plain matrices are used; ops validate the row count.
inline void check_signal(const CellularSheaf& sheaf, const Eigen::MatrixXd& x,
                         const char* what = "signal") {
    if (x.rows() != sheaf.signal_rows())
        throw ShapeMismatch(std::string(what) + " must have N_V*k = " +
                            std::to_string(sheaf.signal_rows()) + " rows, got " +
                            std::to_string(x.rows()));
}

} // namespace sntk
