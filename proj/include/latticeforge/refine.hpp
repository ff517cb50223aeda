#pragma once

#include "latticeforge/core.hpp"
#include "latticeforge/symmetry.hpp"
#include "latticeforge/validity.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace latticeforge {

struct RefineConfig {
    SymmetryGroup group = SymmetryGroup::mirrors();
    // Tolerances are fractions of the frame side.
    double merge_tol = 0.01;
    double snap_tol = 0.05;
    double pair_tol = 0.02;
    double target_threshold = 0.005;
    int max_cycles = 5;
    FramePolicy frame_policy = FramePolicy::unit;

    void check() const;
};

/// Counts of what one stage (or one full cycle) changed.
struct StageStats {
    std::size_t nodes_moved = 0;
    std::size_t nodes_added = 0;
    std::size_t nodes_removed = 0;
    std::size_t edges_added = 0;
    std::size_t edges_removed = 0;

    std::size_t total() const {
        return nodes_moved + nodes_added + nodes_removed + edges_added + edges_removed;
    }
    StageStats& operator+=(const StageStats& o);
};

struct CycleRecord {
    StageStats nodes;
    StageStats edges;
    ValidityReport report;
};

struct RefineTrace {
    std::vector<CycleRecord> cycles;
    bool converged = false;
};

struct RefineResult {
    UnitCell cell;
    RefineTrace trace;
};

/// Node stage: merge near-coincident vertices, symmetrize each orbit under
/// the group (adding images that have no vertex), clamp orbits into the frame.
UnitCell refine_nodes(const UnitCell& cell, const RefineConfig& cfg, const Frame& frame,
                      StageStats* stats = nullptr);

/// Edge stage: close the edge set under the group, repair periodic boundary
/// partners, then drop self-loops, duplicates and isolated vertices.
UnitCell refine_edges(const UnitCell& cell, const RefineConfig& cfg, const Frame& frame,
                      StageStats* stats = nullptr);

/// Alternates node and edge stages. Stops once a cycle leaves the cell valid
/// at cfg.target_threshold and changes nothing, or after cfg.max_cycles.
RefineResult refine(const UnitCell& cell, const RefineConfig& cfg = {});

/// Line-oriented text template for prompting a language-model refiner.
std::string serialize_text(const UnitCell& cell);
std::string serialize_text(const UnitCell& cell, const Frame& frame);

struct ParsedText {
    UnitCell cell;
    Frame frame;
};

/// Throws TextParseError with the offending 1-based line number.
ParsedText parse_text(std::string_view text);

class TextParseError : public LatticeError {
  public:
    TextParseError(std::size_t line, const std::string& reason);
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

}  // namespace latticeforge
