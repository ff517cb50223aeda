#pragma once

#include "latticeforge/core.hpp"
#include "latticeforge/symmetry.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace latticeforge {

/// Which cube the validity metrics measure against.
enum class FramePolicy {
    unit,  // explicit [0,1]^3, the generator's coordinate space
    fit,   // per-cell bounding_frame
};

FramePolicy parse_frame_policy(std::string_view name);
Frame resolve_frame(const UnitCell& cell, FramePolicy policy);

struct ValidityReport {
    double threshold = 0.0;
    bool intra_valid = false;
    bool inter_valid = false;
    /// Largest, over (vertex, op), of the distance from the vertex to the
    /// symmetric position implied by its nearest counterpart, as a fraction
    /// of the frame side.
    double worst_pair_deviation = 0.0;
    std::size_t component_count = 0;
    /// Largest distance any coordinate lies outside the frame, fraction of side.
    double worst_boundary_excess = 0.0;
};

/// Connected, and every vertex has a counterpart under every non-identity
/// op: some w with |op(v) - w| / 2 <= threshold * side. A vertex may be its
/// own counterpart.
ValidityReport intra_cell_valid(const UnitCell& cell, double threshold, const SymmetryGroup& group,
                                const Frame& frame);

/// Every coordinate within [face_min - threshold*side, face_max + threshold*side].
ValidityReport inter_cell_valid(const UnitCell& cell, double threshold, const Frame& frame);

/// Both metrics in one report.
ValidityReport validate(const UnitCell& cell, double threshold, const SymmetryGroup& group,
                        const Frame& frame);

struct SweepRow {
    double threshold = 0.0;
    double intra_pct = 0.0;
    double inter_pct = 0.0;
    std::size_t n = 0;
};

struct ThresholdSweep {
    std::vector<SweepRow> rows;
};

ThresholdSweep sweep(const std::vector<UnitCell>& population, const std::vector<double>& thresholds,
                     const SymmetryGroup& group, FramePolicy policy);

}  // namespace latticeforge
