#include "latticeforge/corrupt.hpp"

#include "latticeforge/catalog.hpp"
#include "latticeforge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace latticeforge {

void CorruptionConfig::check() const {
    if (!(sigma >= 0.0)) throw LatticeError("sigma must be non-negative");
    for (double p : {p_node_remove, p_node_add, p_edge_remove, p_edge_add}) {
        if (!(p >= 0.0 && p <= 1.0)) throw LatticeError("probabilities must lie in [0, 1]");
    }
}

CorruptionConfig CorruptionConfig::noise_only(double sigma, std::uint64_t seed) {
    CorruptionConfig c;
    c.sigma = sigma;
    c.p_node_remove = c.p_node_add = c.p_edge_remove = c.p_edge_add = 0.0;
    c.seed = seed;
    return c;
}

UnitCell corrupt(const UnitCell& input, const CorruptionConfig& cfg) {
    cfg.check();
    if (input.vertices.empty()) throw LatticeError("empty cell");
    const UnitCell cell = canonical_clean(input);
    const Frame frame = bounding_frame(cell);
    Rng rng(cfg.seed);
    const std::size_t n = cell.vertices.size();

    // (1) vertex deletion
    std::vector<bool> keep(n, true);
    for (std::size_t i = 0; i < n; ++i) keep[i] = !rng.bernoulli(cfg.p_node_remove);
    std::size_t survivors = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
    for (std::size_t i = 0; i < n && survivors < std::min<std::size_t>(2, n); ++i) {
        if (!keep[i]) {
            keep[i] = true;
            ++survivors;
        }
    }
    UnitCell out;
    out.name = cell.name;
    std::vector<std::size_t> index(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        index[i] = out.vertices.size();
        out.vertices.push_back(cell.vertices[i]);
    }
    for (const auto& [a, b] : cell.edges) {
        if (keep[a] && keep[b]) out.edges.emplace_back(index[a], index[b]);
    }

    // (2) vertex insertion
    const auto add_nodes = static_cast<std::size_t>(std::ceil(cfg.p_node_add * static_cast<double>(n)));
    for (std::size_t k = 0; k < add_nodes; ++k) {
        Vec3 p;
        for (int axis = 0; axis < 3; ++axis) p[axis] = rng.uniform(frame.face_min(axis), frame.face_max(axis));
        out.vertices.push_back(p);
    }

    // (3) edge deletion
    std::vector<Edge> kept;
    for (const auto& e : out.edges) {
        if (!rng.bernoulli(cfg.p_edge_remove)) kept.push_back(e);
    }
    out.edges = std::move(kept);

    // (4) edge insertion
    const std::size_t m = out.vertices.size();
    const std::size_t max_edges = m * (m - 1) / 2;
    const auto add_edges =
        static_cast<std::size_t>(std::ceil(cfg.p_edge_add * static_cast<double>(cell.edges.size())));
    std::set<Edge> present(out.edges.begin(), out.edges.end());
    for (std::size_t k = 0; k < add_edges && present.size() < max_edges; ++k) {
        while (true) {
            std::size_t a = rng.below(m);
            std::size_t b = rng.below(m);
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            if (present.insert({a, b}).second) {
                out.edges.emplace_back(a, b);
                break;
            }
        }
    }

    // (5) coordinate noise
    const double stdev = cfg.sigma * frame.side;
    if (stdev > 0.0) {
        for (auto& v : out.vertices) {
            for (int axis = 0; axis < 3; ++axis) v[axis] += stdev * rng.normal();
        }
    }
    return out;
}

std::vector<CorruptedPair> make_pairs(const std::vector<std::string>& entries,
                                      const CorruptionConfig& cfg, std::size_t n_per_entry,
                                      std::uint64_t seed) {
    if (n_per_entry < 1) throw LatticeError("n_per_entry must be at least 1");
    for (const auto& name : entries) {
        if (!catalog::contains(name)) throw LatticeError("unknown catalog entry '" + name + "'");
    }
    std::vector<CorruptedPair> out;
    out.reserve(entries.size() * n_per_entry);
    std::uint64_t k = 0;
    for (const auto& name : entries) {
        const UnitCell clean = catalog::make(name);
        for (std::size_t i = 0; i < n_per_entry; ++i, ++k) {
            CorruptionConfig c = cfg;
            c.seed = derive_seed(seed, k);
            out.push_back({name, c.seed, corrupt(clean, c), clean});
        }
    }
    return out;
}

}  // namespace latticeforge
