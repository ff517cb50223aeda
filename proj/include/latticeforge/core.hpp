#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace latticeforge {

using Vec3 = Eigen::Vector3d;

/// Undirected strut between two vertex indices, stored with first < second.
using Edge = std::pair<std::size_t, std::size_t>;

/// Raised for malformed cells or arguments outside an operation's domain.
class LatticeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// One periodic unit cell: vertex coordinates in absolute cell units plus an
/// undirected edge list.
struct UnitCell {
    std::vector<Vec3> vertices;
    std::vector<Edge> edges;
    std::string name;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_edges() const { return edges.size(); }

    /// Throws LatticeError if an edge is out of range, a self-loop, or a
    /// duplicate, or if a coordinate is non-finite.
    void check() const;
};

/// Axis-aligned cubic reference frame.
struct Frame {
    Vec3 center{0.5, 0.5, 0.5};
    double side = 1.0;

    double face_min(int axis) const { return center[axis] - 0.5 * side; }
    double face_max(int axis) const { return center[axis] + 0.5 * side; }

    static Frame unit() { return Frame{}; }
};

/// Tight axis-aligned cube around the vertices; side is the largest extent.
Frame bounding_frame(const UnitCell& cell);

/// Normalizes pairs to i < j, drops self-loops and repeated edges. Keeps
/// vertex order and the first occurrence order of edges.
UnitCell canonical_clean(const UnitCell& cell);

/// Same as canonical_clean, then sorts edges lexicographically.
UnitCell sorted_clean(const UnitCell& cell);

struct Components {
    std::vector<std::size_t> label;  // per vertex, 0..count-1 in first-seen order
    std::size_t count = 0;
};

Components connected_components(const UnitCell& cell);

/// Per-vertex degree counted over the edge list.
std::vector<std::size_t> vertex_degrees(const UnitCell& cell);

/// Small disjoint-set forest used by several modules.
class DisjointSets {
  public:
    explicit DisjointSets(std::size_t n);
    std::size_t find(std::size_t x);
    bool unite(std::size_t a, std::size_t b);

  private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> rank_;
};

}  // namespace latticeforge
