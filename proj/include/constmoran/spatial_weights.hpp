#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "constmoran/error.hpp"
#include "constmoran/numeric.hpp"

namespace constmoran {

using site_index = std::uint32_t;
using Edge = std::pair<site_index, site_index>;

// Undirected, self-loop-free, deduplicated edge set over sites [0, n_sites).
// Edges are stored canonically with first < second.
class AdjacencyList {
public:
    AdjacencyList(std::size_t n_sites, std::vector<Edge> edges) : n_sites_(n_sites) {
        for (auto& [a, b] : edges) {
            if (a == b) throw error("self-loop edge at site " + std::to_string(a));
            if (a >= n_sites_ || b >= n_sites_)
                throw error("edge endpoint out of range: (" + std::to_string(a) + ", " +
                            std::to_string(b) + ") with " + std::to_string(n_sites_) + " sites");
            if (a > b) std::swap(a, b);
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        edges_ = std::move(edges);
    }

    std::size_t n_sites() const noexcept { return n_sites_; }
    std::size_t n_edges() const noexcept { return edges_.size(); }
    std::span<const Edge> edges() const noexcept { return edges_; }

    bool has_edge(site_index a, site_index b) const noexcept {
        if (a == b) return false;
        if (a > b) std::swap(a, b);
        return std::binary_search(edges_.begin(), edges_.end(), Edge{a, b});
    }

    std::vector<std::size_t> degrees() const {
        std::vector<std::size_t> deg(n_sites_, 0);
        for (const auto& [a, b] : edges_) {
            ++deg[a];
            ++deg[b];
        }
        return deg;
    }

private:
    std::size_t n_sites_;
    std::vector<Edge> edges_;
};

// Queen contiguity on a rows x cols grid: cells are neighbors iff their row
// and column indices each differ by at most 1 and the cells are distinct.
inline AdjacencyList build_grid_queen(std::size_t rows, std::size_t cols) {
    if (rows < 1 || cols < 1) throw error("grid dimensions must be at least 1x1");
    if (rows * cols < 2) throw error("degenerate 1x1 grid has no possible neighbors");
    std::vector<Edge> edges;
    edges.reserve(4 * rows * cols);
    auto cell = [cols](std::size_t r, std::size_t c) {
        return static_cast<site_index>(r * cols + c);
    };
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            // emit each pair once: east, south-west, south, south-east
            if (c + 1 < cols) edges.emplace_back(cell(r, c), cell(r, c + 1));
            if (r + 1 < rows) {
                if (c > 0) edges.emplace_back(cell(r, c), cell(r + 1, c - 1));
                edges.emplace_back(cell(r, c), cell(r + 1, c));
                if (c + 1 < cols) edges.emplace_back(cell(r, c), cell(r + 1, c + 1));
            }
        }
    }
    return AdjacencyList(rows * cols, std::move(edges));
}

struct Neighbor {
    site_index site;
    double weight;
};

// Row-normalized sparse weights: w_ij = 1/deg(i) for each raw neighbor j.
// Row normalization makes w asymmetric, so both out-rows (w_ij over j) and
// in-columns (w_ij over i) are indexed; the resampler needs both lags.
// Immutable once built; safe to share across workers.
class SpatialWeights {
public:
    std::size_t n_sites() const noexcept { return n_sites_; }

    std::span<const Neighbor> out(std::size_t i) const noexcept {
        return {out_entries_.data() + out_offsets_[i], out_offsets_[i + 1] - out_offsets_[i]};
    }

    std::span<const Neighbor> in(std::size_t j) const noexcept {
        return {in_entries_.data() + in_offsets_[j], in_offsets_[j + 1] - in_offsets_[j]};
    }

    // 1 for connected sites, 0 for isolated ones.
    double row_sum(std::size_t i) const noexcept { return row_sums_[i]; }
    double col_sum(std::size_t j) const noexcept { return col_sums_[j]; }

    // |W| = sum of all weights; equals the number of non-isolated sites.
    double total_weight() const noexcept { return total_weight_; }

    bool has_isolated() const noexcept { return has_isolated_; }

    // w_ij, 0 when j is not a neighbor of i. O(degree).
    double weight(std::size_t i, std::size_t j) const noexcept {
        for (const auto& nb : out(i)) {
            if (nb.site == j) return nb.weight;
        }
        return 0.0;
    }

    const AdjacencyList& adjacency() const noexcept { return adjacency_; }

    friend SpatialWeights row_normalize(const AdjacencyList& adj, bool allow_isolated);

private:
    explicit SpatialWeights(AdjacencyList adj) : adjacency_(std::move(adj)) {}

    AdjacencyList adjacency_{0, {}};
    std::size_t n_sites_ = 0;
    std::vector<std::size_t> out_offsets_, in_offsets_;
    std::vector<Neighbor> out_entries_, in_entries_;
    std::vector<double> row_sums_, col_sums_;
    double total_weight_ = 0.0;
    bool has_isolated_ = false;
};

// Isolated sites are rejected by default: a silent all-zero row distorts |W|
// and I. With allow_isolated the row stays all-zero and the site contributes
// nothing to the Moran numerator.
inline SpatialWeights row_normalize(const AdjacencyList& adj, bool allow_isolated = false) {
    if (adj.n_edges() == 0) throw error("cannot normalize an empty adjacency");
    const std::size_t n = adj.n_sites();
    const auto degrees = adj.degrees();

    if (!allow_isolated) {
        for (std::size_t i = 0; i < n; ++i) {
            if (degrees[i] == 0)
                throw error("site " + std::to_string(i) +
                            " has no neighbors (pass allow_isolated to keep an all-zero row)");
        }
    }

    SpatialWeights w(adj);
    w.n_sites_ = n;
    w.row_sums_.assign(n, 0.0);
    w.col_sums_.assign(n, 0.0);

    std::vector<std::vector<Neighbor>> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i].reserve(degrees[i]);
    for (const auto& [a, b] : adj.edges()) {
        rows[a].push_back({b, 1.0 / static_cast<double>(degrees[a])});
        rows[b].push_back({a, 1.0 / static_cast<double>(degrees[b])});
    }

    w.out_offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::sort(rows[i].begin(), rows[i].end(),
                  [](const Neighbor& x, const Neighbor& y) { return x.site < y.site; });
        w.out_offsets_[i + 1] = w.out_offsets_[i] + rows[i].size();
    }
    w.out_entries_.reserve(w.out_offsets_[n]);

    KahanSum total;
    std::vector<KahanSum> col_acc(n);
    for (std::size_t i = 0; i < n; ++i) {
        double row_total = 0.0;
        for (const auto& nb : rows[i]) {
            w.out_entries_.push_back(nb);
            col_acc[nb.site].add(nb.weight);
            total.add(nb.weight);
            row_total += nb.weight;
        }
        w.row_sums_[i] = rows[i].empty() ? 0.0 : 1.0;
        if (rows[i].empty()) w.has_isolated_ = true;
        (void)row_total;
    }
    for (std::size_t j = 0; j < n; ++j) w.col_sums_[j] = col_acc[j].value();
    w.total_weight_ = total.value();

    // transpose index: in-column lists, sorted by source site
    std::vector<std::size_t> in_count(n, 0);
    for (const auto& nb : w.out_entries_) ++in_count[nb.site];
    w.in_offsets_.assign(n + 1, 0);
    for (std::size_t j = 0; j < n; ++j) w.in_offsets_[j + 1] = w.in_offsets_[j] + in_count[j];
    w.in_entries_.resize(w.out_entries_.size());
    std::vector<std::size_t> cursor(w.in_offsets_.begin(), w.in_offsets_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& nb : w.out(i)) {
            w.in_entries_[cursor[nb.site]++] = {static_cast<site_index>(i), nb.weight};
        }
    }
    return w;
}

} // namespace constmoran
