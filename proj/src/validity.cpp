#include "latticeforge/validity.hpp"

#include "latticeforge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace latticeforge {

FramePolicy parse_frame_policy(std::string_view name) {
    if (name == "unit") return FramePolicy::unit;
    if (name == "fit") return FramePolicy::fit;
    throw LatticeError("unknown frame policy '" + std::string(name) + "'");
}

Frame resolve_frame(const UnitCell& cell, FramePolicy policy) {
    return policy == FramePolicy::unit ? Frame::unit() : bounding_frame(cell);
}

namespace {

double worst_pair_deviation(const UnitCell& cell, const SymmetryGroup& group, const Frame& frame) {
    double worst = 0.0;
    for (const auto& v : cell.vertices) {
        for (const auto& op : group.ops()) {
            if (op.is_identity()) continue;
            const Vec3 image = apply_symmetry(op, v, frame);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& w : cell.vertices) best = std::min(best, (image - w).squaredNorm());
            worst = std::max(worst, 0.5 * std::sqrt(best));
        }
    }
    return worst / frame.side;
}

double worst_boundary_excess(const UnitCell& cell, const Frame& frame) {
    double worst = 0.0;
    for (const auto& v : cell.vertices) {
        for (int axis = 0; axis < 3; ++axis) {
            worst = std::max(worst, frame.face_min(axis) - v[axis]);
            worst = std::max(worst, v[axis] - frame.face_max(axis));
        }
    }
    return worst / frame.side;
}

}  // namespace

ValidityReport intra_cell_valid(const UnitCell& cell, double threshold, const SymmetryGroup& group,
                                const Frame& frame) {
    if (cell.vertices.empty()) throw LatticeError("empty cell");
    if (threshold < 0.0) throw LatticeError("threshold must be non-negative");
    if (!(frame.side > 0.0)) throw LatticeError("frame side must be positive");
    ValidityReport r;
    r.threshold = threshold;
    r.component_count = connected_components(cell).count;
    r.worst_pair_deviation = worst_pair_deviation(cell, group, frame);
    r.intra_valid = r.component_count == 1 && r.worst_pair_deviation <= threshold;
    return r;
}

ValidityReport inter_cell_valid(const UnitCell& cell, double threshold, const Frame& frame) {
    if (threshold < 0.0) throw LatticeError("threshold must be non-negative");
    ValidityReport r;
    r.threshold = threshold;
    r.worst_boundary_excess = worst_boundary_excess(cell, frame);
    r.inter_valid = r.worst_boundary_excess <= threshold;
    return r;
}

ValidityReport validate(const UnitCell& cell, double threshold, const SymmetryGroup& group,
                        const Frame& frame) {
    ValidityReport r = intra_cell_valid(cell, threshold, group, frame);
    const ValidityReport inter = inter_cell_valid(cell, threshold, frame);
    r.inter_valid = inter.inter_valid;
    r.worst_boundary_excess = inter.worst_boundary_excess;
    return r;
}

ThresholdSweep sweep(const std::vector<UnitCell>& population, const std::vector<double>& thresholds,
                     const SymmetryGroup& group, FramePolicy policy) {
    if (population.empty()) throw LatticeError("empty population");
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > thresholds[i - 1])) {
            throw LatticeError("thresholds must be strictly increasing");
        }
    }
    // Diagnostics are threshold-free, so one pass per cell serves every row.
    struct Measure {
        std::size_t components = 0;
        double pair = 0.0;
        double excess = 0.0;
    };
    std::vector<Measure> measures(population.size());
    parallel_for(population.size(), [&](std::size_t i) {
        const auto& cell = population[i];
        if (cell.vertices.empty()) throw LatticeError("empty cell in population");
        const Frame frame = resolve_frame(cell, policy);
        measures[i] = {connected_components(cell).count, worst_pair_deviation(cell, group, frame),
                       worst_boundary_excess(cell, frame)};
    });

    ThresholdSweep out;
    const double n = static_cast<double>(population.size());
    for (double t : thresholds) {
        std::size_t intra = 0;
        std::size_t inter = 0;
        for (const auto& m : measures) {
            if (m.components == 1 && m.pair <= t) ++intra;
            if (m.excess <= t) ++inter;
        }
        out.rows.push_back({t, 100.0 * static_cast<double>(intra) / n,
                            100.0 * static_cast<double>(inter) / n, population.size()});
    }
    return out;
}

}  // namespace latticeforge
