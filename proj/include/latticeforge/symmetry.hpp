#pragma once

#include "latticeforge/core.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace latticeforge {

/// Element of the cube's full point group (48 signed axis permutations),
/// acting on coordinates relative to a frame center:
///   image[i] = sign[i] * q[perm[i]]
/// All arithmetic is sign flips and swaps, so images are exact.
struct CubeOp {
    std::array<int, 3> perm{0, 1, 2};
    std::array<int, 3> sign{1, 1, 1};

    static CubeOp identity() { return {}; }
    static CubeOp inversion() { return {{0, 1, 2}, {-1, -1, -1}}; }
    static CubeOp mirror(int axis);
    /// Quarter turn (counter-clockwise, right-handed) about a coordinate axis.
    static CubeOp quarter_turn(int axis);

    int determinant() const;
    bool is_rotation() const { return determinant() == 1; }
    bool is_identity() const { return *this == identity(); }

    CubeOp inverse() const;
    /// (this ∘ other)(q) = this(other(q)).
    CubeOp compose(const CubeOp& other) const;

    Vec3 apply_relative(const Vec3& q) const;

    friend bool operator==(const CubeOp&, const CubeOp&) = default;
};

/// Every element of the cubic group in a fixed order, identity first.
const std::vector<CubeOp>& all_cube_ops();
/// The 24 proper rotations, identity first.
const std::vector<CubeOp>& cube_rotations();

enum class SymmetryPreset { inversion, mirrors, cubic };

SymmetryPreset parse_symmetry_preset(std::string_view name);
std::string_view to_string(SymmetryPreset preset);

/// Finite group of frame isometries. Ops are listed identity first in a fixed
/// order; the order is part of the refinement determinism contract.
class SymmetryGroup {
  public:
    explicit SymmetryGroup(SymmetryPreset preset);

    static SymmetryGroup inversion() { return SymmetryGroup(SymmetryPreset::inversion); }
    static SymmetryGroup mirrors() { return SymmetryGroup(SymmetryPreset::mirrors); }
    static SymmetryGroup cubic() { return SymmetryGroup(SymmetryPreset::cubic); }

    SymmetryPreset preset() const { return preset_; }
    const std::vector<CubeOp>& ops() const { return ops_; }
    std::size_t order() const { return ops_.size(); }
    bool contains(const CubeOp& op) const;

  private:
    SymmetryPreset preset_;
    std::vector<CubeOp> ops_;
};

/// Image of p under op, with the op fixing frame.center.
Vec3 apply_symmetry(const CubeOp& op, const Vec3& p, const Frame& frame);

struct CellTransform {
    CubeOp rotation;
    double scale = 1.0;
};

struct TransformedCell {
    UnitCell cell;
    double radius = 0.0;
};

/// Rotates about the bounding-frame center, then scales about it. The strut
/// radius is scaled with the geometry so relative density is unchanged.
TransformedCell transform_cell(const UnitCell& cell, const CellTransform& t, double radius);

/// Engineering property vector (E_x, E_y, E_z, G_yz, G_xz, G_xy, nu_yz, nu_xz, nu_xy).
using PropertyVector = std::array<double, 9>;

/// Properties of the rotated cell given those of the original. Poisson ratios
/// whose axis order flips are converted through reciprocity
/// (nu_ab / E_a = nu_ba / E_b).
PropertyVector permute_properties(const PropertyVector& p, const CubeOp& rotation);

}  // namespace latticeforge
