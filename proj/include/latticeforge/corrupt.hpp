#pragma once

#include "latticeforge/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace latticeforge {

struct CorruptionConfig {
    double sigma = 0.01;  // coordinate noise stdev, fraction of frame side
    double p_node_remove = 0.05;
    double p_node_add = 0.05;
    double p_edge_remove = 0.1;
    double p_edge_add = 0.1;
    std::uint64_t seed = 0;

    void check() const;

    /// Gaussian coordinate noise only.
    static CorruptionConfig noise_only(double sigma, std::uint64_t seed);
};

/// Applies, in order: vertex deletion, vertex insertion (ceil(p*n) uniform in
/// the bounding frame), edge deletion, edge insertion (ceil(p*|E|) random new
/// edges), then coordinate noise. At least two vertices always survive.
UnitCell corrupt(const UnitCell& cell, const CorruptionConfig& cfg);

struct CorruptedPair {
    std::string clean_name;
    std::uint64_t seed = 0;
    UnitCell corrupted;
    UnitCell clean;
};

/// n_per_entry pairs per catalog entry; pair k (counting across entries in
/// the given order) uses derive_seed(seed, k).
std::vector<CorruptedPair> make_pairs(const std::vector<std::string>& entries,
                                      const CorruptionConfig& cfg, std::size_t n_per_entry,
                                      std::uint64_t seed);

}  // namespace latticeforge
