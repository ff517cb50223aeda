#include "latticeforge/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace latticeforge {

void UnitCell::check() const {
    for (const auto& v : vertices) {
        if (!v.allFinite()) throw LatticeError("non-finite vertex coordinate");
    }
    if (!edges.empty() && vertices.size() < 2) {
        throw LatticeError("cell with edges needs at least 2 vertices");
    }
    std::set<Edge> seen;
    for (const auto& [i, j] : edges) {
        if (i >= vertices.size() || j >= vertices.size()) {
            throw LatticeError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                               ") references a missing vertex");
        }
        if (i == j) throw LatticeError("self-loop at vertex " + std::to_string(i));
        if (i > j) throw LatticeError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                                      ") is not normalized");
        if (!seen.insert({i, j}).second) {
            throw LatticeError("duplicate edge (" + std::to_string(i) + ", " + std::to_string(j) +
                               ")");
        }
    }
}

Frame bounding_frame(const UnitCell& cell) {
    if (cell.vertices.empty()) throw LatticeError("empty cell");
    Vec3 lo = cell.vertices.front();
    Vec3 hi = lo;
    for (const auto& v : cell.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    Frame f;
    f.center = 0.5 * (lo + hi);
    f.side = std::max((hi - lo).maxCoeff(), 1e-9);
    return f;
}

UnitCell canonical_clean(const UnitCell& cell) {
    UnitCell out;
    out.name = cell.name;
    out.vertices = cell.vertices;
    std::set<Edge> seen;
    for (auto [i, j] : cell.edges) {
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        if (seen.insert({i, j}).second) out.edges.emplace_back(i, j);
    }
    return out;
}

UnitCell sorted_clean(const UnitCell& cell) {
    UnitCell out = canonical_clean(cell);
    std::sort(out.edges.begin(), out.edges.end());
    return out;
}

DisjointSets::DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t DisjointSets::find(std::size_t x) {
    while (parent_[x] != x) {
        parent_[x] = parent_[parent_[x]];
        x = parent_[x];
    }
    return x;
}

bool DisjointSets::unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
}

Components connected_components(const UnitCell& cell) {
    const std::size_t n = cell.vertices.size();
    DisjointSets sets(n);
    for (const auto& [i, j] : cell.edges) {
        if (i < n && j < n) sets.unite(i, j);
    }
    Components c;
    c.label.assign(n, 0);
    std::vector<std::size_t> root_label(n, n);
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t r = sets.find(v);
        if (root_label[r] == n) root_label[r] = c.count++;
        c.label[v] = root_label[r];
    }
    return c;
}

std::vector<std::size_t> vertex_degrees(const UnitCell& cell) {
    std::vector<std::size_t> deg(cell.vertices.size(), 0);
    for (const auto& [i, j] : cell.edges) {
        ++deg[i];
        ++deg[j];
    }
    return deg;
}

}  // namespace latticeforge
