#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <Eigen/Dense>

#include "sntk/errors.hpp"
#include "sntk/sheaf.hpp"

namespace sntk::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Writes via a temp file in the same directory plus an atomic rename so a
/// failing command never leaves a partial output behind.
inline void atomic_write(const fs::path& path, const std::string& contents) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw ParseError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Eigen::MatrixXd parse_dense(const json& rows, const std::string& what) {
    if (!rows.is_array() || rows.empty() || !rows.front().is_array())
        throw ParseError(what + " must be a nonempty array of rows");
    const std::size_t cols = rows.front().size();
    Eigen::MatrixXd m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw ParseError(what + " has ragged rows");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c].get<double>();
    }
    return m;
}

inline json dump_dense(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Sheaf file: {"num_nodes", "stalk_dim", "edges": [{"u", "v", "map_u",
/// "map_v"}]}. Omitted maps default to the identity. map_u / map_v are the
/// restriction maps at the endpoints as written in the file.
inline CellularSheaf read_sheaf_json(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError("sheaf file " + path.string() + ": " + e.what());
    }
    try {
        const int n = doc.at("num_nodes").get<int>();
        const int k = doc.value("stalk_dim", 1);
        std::vector<std::pair<int, int>> edges;
        std::vector<EdgeMaps> maps;
        for (const auto& edge : doc.value("edges", json::array())) {
            int u = edge.at("u").get<int>();
            int v = edge.at("v").get<int>();
            Eigen::MatrixXd map_u = edge.contains("map_u")
                                        ? parse_dense(edge["map_u"], "map_u")
                                        : Eigen::MatrixXd::Identity(k, k);
            Eigen::MatrixXd map_v = edge.contains("map_v")
                                        ? parse_dense(edge["map_v"], "map_v")
                                        : Eigen::MatrixXd::Identity(k, k);
            if (u > v) {
                std::swap(u, v);
                std::swap(map_u, map_v);
            }
            edges.emplace_back(u, v);
            maps.push_back(EdgeMaps{std::move(map_u), std::move(map_v)});
        }
        // Graph() sorts canonical edges; sort the maps the same way.
        std::vector<std::size_t> order(edges.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return edges[a] < edges[b]; });
        std::vector<std::pair<int, int>> sorted_edges;
        std::vector<EdgeMaps> sorted_maps;
        for (std::size_t i : order) {
            sorted_edges.push_back(edges[i]);
            sorted_maps.push_back(std::move(maps[i]));
        }
        return CellularSheaf(Graph(n, std::move(sorted_edges)), k, std::move(sorted_maps));
    } catch (const json::exception& e) {
        throw ParseError("sheaf file " + path.string() + ": " + e.what());
    }
}

inline void write_sheaf_json(const fs::path& path, const CellularSheaf& sheaf) {
    json doc;
    doc["num_nodes"] = sheaf.graph.num_nodes;
    doc["stalk_dim"] = sheaf.stalk_dim;
    json edges = json::array();
    for (int e = 0; e < sheaf.graph.num_edges(); ++e) {
        json entry;
        entry["u"] = sheaf.graph.edges[e].first;
        entry["v"] = sheaf.graph.edges[e].second;
        entry["map_u"] = dump_dense(sheaf.restriction_maps[e].tail_map);
        entry["map_v"] = dump_dense(sheaf.restriction_maps[e].head_map);
        edges.push_back(std::move(entry));
    }
    doc["edges"] = std::move(edges);
    atomic_write(path, doc.dump(2) + "\n");
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Dense matrix as CSV, one row per line, full decimal precision.
inline std::string matrix_to_csv(const Eigen::MatrixXd& m) {
    std::string out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            out += format_double(m(r, c));
        }
        out += '\n';
    }
    return out;
}

inline void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
    atomic_write(path, matrix_to_csv(m));
}

inline Eigen::MatrixXd read_matrix_csv(const fs::path& path, bool has_header = false) {
    std::istringstream in(read_file(path));
    std::string line;
    std::vector<std::vector<double>> rows;
    bool skip = has_header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (skip) {
            skip = false;
            continue;
        }
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(path.string() + ": bad number '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path.string() + ": ragged CSV rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path.string() + ": empty CSV");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows.front().size(); ++c) m(r, c) = rows[r][c];
    return m;
}

inline Eigen::VectorXd read_labels_csv(const fs::path& path, bool has_header = false) {
    const Eigen::MatrixXd m = read_matrix_csv(path, has_header);
    if (m.cols() != 1) throw ParseError(path.string() + ": labels must be one column");
    return m.col(0);
}

// Binary kernel format: "SNTK", version u16, rows u32, cols u32, then
// row-major little-endian f64.
inline constexpr std::uint16_t kBinaryVersion = 1;

inline void write_matrix_bin(const fs::path& path, const Eigen::MatrixXd& m) {
    std::string out;
    out.reserve(12 + sizeof(double) * m.size());
    out += "SNTK";
    auto put = [&out](const void* p, std::size_t n) {
        out.append(static_cast<const char*>(p), n);
    };
    const std::uint16_t version = kBinaryVersion;
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    put(&version, 2);
    put(&rows, 4);
    put(&cols, 4);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            put(&v, 8);
        }
    atomic_write(path, out);
}

inline Eigen::MatrixXd read_matrix_bin(const fs::path& path) {
    const std::string data = read_file(path);
    if (data.size() < 14 || data.compare(0, 4, "SNTK") != 0)
        throw ParseError(path.string() + ": not a kernel binary file");
    std::uint16_t version;
    std::uint32_t rows, cols;
    std::memcpy(&version, data.data() + 4, 2);
    std::memcpy(&rows, data.data() + 6, 4);
    std::memcpy(&cols, data.data() + 10, 4);
    if (version != kBinaryVersion)
        throw ParseError(path.string() + ": unsupported version " + std::to_string(version));
    if (data.size() != 14 + 8ull * rows * cols)
        throw ParseError(path.string() + ": truncated kernel binary");
    Eigen::MatrixXd m(rows, cols);
    std::size_t offset = 14;
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c) {
            double v;
            std::memcpy(&v, data.data() + offset, 8);
            m(r, c) = v;
            offset += 8;
        }
    return m;
}

/// Matrix as JSON: {"rows", "cols", "data"}.
inline void write_matrix_json(const fs::path& path, const Eigen::MatrixXd& m) {
    json doc;
    doc["rows"] = m.rows();
    doc["cols"] = m.cols();
    doc["data"] = dump_dense(m);
    atomic_write(path, doc.dump(2) + "\n");
}

struct GraphManifestEntry {
    fs::path sheaf_file;
    fs::path feature_file;
    double label = 0.0;
};

struct NodeManifest {
    fs::path sheaf_file;
    fs::path feature_file;
    fs::path labels_file;
    std::vector<int> train_nodes;
    std::vector<int> test_nodes;
};

struct Manifest {
    bool is_node_task = false;
    std::vector<GraphManifestEntry> graph_items; // graph task
    NodeManifest node_task;                      // node task
};

/// Dataset manifest: an array of {sheaf_file, feature_file, label} for graph
/// tasks, or one object {sheaf_file, feature_file, labels_file, train_nodes,
/// test_nodes} for node tasks. Paths resolve relative to the manifest.
inline Manifest read_manifest(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    auto resolve = [&base](const std::string& p) {
        const fs::path candidate(p);
        return candidate.is_absolute() ? candidate : base / candidate;
    };
    Manifest manifest;
    try {
        if (doc.is_array()) {
            for (const auto& item : doc) {
                GraphManifestEntry entry;
                entry.sheaf_file = resolve(item.at("sheaf_file").get<std::string>());
                entry.feature_file = resolve(item.at("feature_file").get<std::string>());
                entry.label = item.at("label").get<double>();
                manifest.graph_items.push_back(std::move(entry));
            }
        } else {
            manifest.is_node_task = true;
            manifest.node_task.sheaf_file = resolve(doc.at("sheaf_file").get<std::string>());
            manifest.node_task.feature_file = resolve(doc.at("feature_file").get<std::string>());
            manifest.node_task.labels_file = resolve(doc.at("labels_file").get<std::string>());
            manifest.node_task.train_nodes = doc.at("train_nodes").get<std::vector<int>>();
            manifest.node_task.test_nodes = doc.value("test_nodes", std::vector<int>{});
        }
    } catch (const json::exception& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    return manifest;
}

} // namespace sntk::io
