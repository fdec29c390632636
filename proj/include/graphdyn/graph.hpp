#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "graphdyn/util.hpp"

namespace graphdyn {

struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed sensor/region network. Stores the edge list plus a per-vertex
/// out-adjacency index so neighbor iteration is O(out-degree). Dense
/// adjacency matrices appear only in test oracles.
class DirectedGraph {
public:
    DirectedGraph() = default;

    DirectedGraph(std::size_t vertex_count, std::vector<Edge> edges)
        : n_(vertex_count), edges_(std::move(edges)) {
        if (n_ == 0) throw std::invalid_argument("graph: vertex count must be positive");
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(edges_.size());
        for (const Edge& e : edges_) {
            if (e.src >= n_ || e.dst >= n_)
                throw std::invalid_argument("graph: edge index out of range");
            if (e.src == e.dst)
                throw std::invalid_argument("graph: self-loops are not allowed");
            if (!seen.insert(e.src * n_ + e.dst).second)
                throw std::invalid_argument("graph: duplicate edge");
        }
        build_out_index();
    }

    std::size_t vertex_count() const { return n_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(std::size_t k) const { return edges_[k]; }

    /// Edge ids leaving `v`, in input edge order.
    std::span<const std::size_t> out_edges(std::size_t v) const {
        return {out_flat_.data() + out_start_[v], out_start_[v + 1] - out_start_[v]};
    }

    /// Traffic-mode invariant: at most one of (i,j) and (j,i) present.
    bool one_directional() const {
        std::unordered_set<std::uint64_t> fwd;
        fwd.reserve(edges_.size());
        for (const Edge& e : edges_) fwd.insert(e.src * n_ + e.dst);
        for (const Edge& e : edges_)
            if (fwd.count(e.dst * n_ + e.src)) return false;
        return true;
    }

    /// Stable hash of (n, edge list); checkpoints use it to detect the
    /// wrong graph being paired with saved parameters.
    std::uint64_t topology_hash() const {
        std::uint64_t h = fnv1a_u64(n_);
        for (const Edge& e : edges_) {
            h = fnv1a_u64(e.src, h);
            h = fnv1a_u64(e.dst, h);
        }
        return h;
    }

private:
    void build_out_index() {
        out_start_.assign(n_ + 1, 0);
        for (const Edge& e : edges_) ++out_start_[e.src + 1];
        for (std::size_t v = 0; v < n_; ++v) out_start_[v + 1] += out_start_[v];
        out_flat_.resize(edges_.size());
        std::vector<std::size_t> cursor(out_start_.begin(), out_start_.end() - 1);
        for (std::size_t k = 0; k < edges_.size(); ++k)
            out_flat_[cursor[edges_[k].src]++] = k;
    }

    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::size_t> out_flat_;
    std::vector<std::size_t> out_start_;
};

/// One real weight per edge, in edge-list order.
using EdgeWeights = std::vector<double>;

/// Edge-transposed graph: (i,j) becomes (j,i), order preserved. Applying it
/// twice returns the original graph.
inline DirectedGraph reaction_graph(const DirectedGraph& g) {
    std::vector<Edge> rev;
    rev.reserve(g.edge_count());
    for (const Edge& e : g.edges()) rev.push_back({e.dst, e.src});
    return DirectedGraph(g.vertex_count(), std::move(rev));
}

/// Weighted graph-Laplacian action: out_i = sum over edges (i,j) of
/// w_e * (x_j - x_i). Vertices without outgoing edges map to zero.
inline std::vector<double> apply_weighted_laplacian(const DirectedGraph& g,
                                                    std::span<const double> w,
                                                    std::span<const double> x) {
    if (w.size() != g.edge_count())
        throw std::invalid_argument("apply_weighted_laplacian: weight count != edge count");
    if (x.size() != g.vertex_count())
        throw std::invalid_argument("apply_weighted_laplacian: state length != vertex count");
    std::vector<double> out(g.vertex_count(), 0.0);
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        const Edge& e = g.edge(k);
        out[e.src] += w[k] * (x[e.dst] - x[e.src]);
    }
    return out;
}

/// Masked variant: edges whose endpoint value is missing contribute zero.
inline std::vector<double> apply_weighted_laplacian(const DirectedGraph& g,
                                                    std::span<const double> w,
                                                    std::span<const double> x,
                                                    std::span<const std::uint8_t> x_mask) {
    if (w.size() != g.edge_count())
        throw std::invalid_argument("apply_weighted_laplacian: weight count != edge count");
    if (x.size() != g.vertex_count() || x_mask.size() != g.vertex_count())
        throw std::invalid_argument("apply_weighted_laplacian: state length != vertex count");
    std::vector<double> out(g.vertex_count(), 0.0);
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
        const Edge& e = g.edge(k);
        if (!x_mask[e.src] || !x_mask[e.dst]) continue;
        out[e.src] += w[k] * (x[e.dst] - x[e.src]);
    }
    return out;
}

/// Adjacency-masked gather: entry i lists {x_j : (i,j) in E} in edge order.
inline std::vector<std::vector<double>> neighbor_select(std::span<const double> x,
                                                        const DirectedGraph& g) {
    if (x.size() != g.vertex_count())
        throw std::invalid_argument("neighbor_select: state length != vertex count");
    std::vector<std::vector<double>> out(g.vertex_count());
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        auto ids = g.out_edges(v);
        out[v].reserve(ids.size());
        for (std::size_t k : ids) out[v].push_back(x[g.edge(k).dst]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Edge-list CSV: header `src,dst`, zero-based integer vertex ids.
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t parse_index(const std::string& tok, const std::string& what) {
    std::size_t value = 0;
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw std::runtime_error("edge csv: malformed " + what + " '" + tok + "'");
    return value;
}

}  // namespace detail

/// Load an edge list. Without an explicit `vertex_count` the graph size is
/// inferred as max id + 1, which cannot represent trailing isolated
/// vertices; callers that know the width (for example from a series file)
/// should pass it.
inline DirectedGraph load_edges(const std::string& path, std::size_t vertex_count = 0) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge file: " + path);
    std::string line;
    if (!std::getline(in, line) || detail::strip(line) != "src,dst")
        throw std::runtime_error("edge csv: expected header 'src,dst' in " + path);
    std::vector<Edge> edges;
    std::size_t max_id = 0;
    while (std::getline(in, line)) {
        line = detail::strip(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("edge csv: malformed row '" + line + "'");
        Edge e;
        e.src = detail::parse_index(detail::strip(line.substr(0, comma)), "src");
        e.dst = detail::parse_index(detail::strip(line.substr(comma + 1)), "dst");
        max_id = std::max({max_id, e.src, e.dst});
        edges.push_back(e);
    }
    if (vertex_count == 0) vertex_count = max_id + 1;
    return DirectedGraph(vertex_count, std::move(edges));
}

inline void save_edges(const DirectedGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write edge file: " + path);
    out << "src,dst\n";
    for (const Edge& e : g.edges()) out << e.src << ',' << e.dst << '\n';
}

}  // namespace graphdyn
