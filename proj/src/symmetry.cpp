#include "latticeforge/symmetry.hpp"

#include <algorithm>

namespace latticeforge {

CubeOp CubeOp::mirror(int axis) {
    CubeOp op;
    op.sign[axis] = -1;
    return op;
}

CubeOp CubeOp::quarter_turn(int axis) {
    // (x, y) -> (-y, x) in the plane orthogonal to `axis`.
    const int a = (axis + 1) % 3;
    const int b = (axis + 2) % 3;
    CubeOp op;
    op.perm[a] = b;
    op.sign[a] = -1;
    op.perm[b] = a;
    op.sign[b] = 1;
    return op;
}

int CubeOp::determinant() const {
    int inversions = 0;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            if (perm[i] > perm[j]) ++inversions;
        }
    }
    const int parity = (inversions % 2 == 0) ? 1 : -1;
    return parity * sign[0] * sign[1] * sign[2];
}

CubeOp CubeOp::inverse() const {
    // image[i] = s_i q[p_i]  =>  q[p_i] = s_i image[i]
    CubeOp inv;
    for (int i = 0; i < 3; ++i) {
        inv.perm[perm[i]] = i;
        inv.sign[perm[i]] = sign[i];
    }
    return inv;
}

CubeOp CubeOp::compose(const CubeOp& other) const {
    // this(other(q))[i] = s_i * other(q)[p_i] = s_i * s'_{p_i} * q[p'_{p_i}]
    CubeOp out;
    for (int i = 0; i < 3; ++i) {
        out.perm[i] = other.perm[perm[i]];
        out.sign[i] = sign[i] * other.sign[perm[i]];
    }
    return out;
}

Vec3 CubeOp::apply_relative(const Vec3& q) const {
    return {sign[0] * q[perm[0]], sign[1] * q[perm[1]], sign[2] * q[perm[2]]};
}

namespace {

std::vector<CubeOp> enumerate_ops(bool rotations_only) {
    std::array<int, 3> perm{0, 1, 2};
    std::vector<CubeOp> ops;
    do {
        for (int mask = 0; mask < 8; ++mask) {
            CubeOp op;
            op.perm = perm;
            for (int i = 0; i < 3; ++i) op.sign[i] = (mask >> i & 1) ? -1 : 1;
            if (!rotations_only || op.is_rotation()) ops.push_back(op);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return ops;
}

}  // namespace

const std::vector<CubeOp>& all_cube_ops() {
    static const std::vector<CubeOp> ops = enumerate_ops(false);
    return ops;
}

const std::vector<CubeOp>& cube_rotations() {
    static const std::vector<CubeOp> ops = enumerate_ops(true);
    return ops;
}

SymmetryPreset parse_symmetry_preset(std::string_view name) {
    if (name == "inversion") return SymmetryPreset::inversion;
    if (name == "mirrors") return SymmetryPreset::mirrors;
    if (name == "cubic") return SymmetryPreset::cubic;
    throw LatticeError("unknown symmetry preset '" + std::string(name) + "'");
}

std::string_view to_string(SymmetryPreset preset) {
    switch (preset) {
        case SymmetryPreset::inversion: return "inversion";
        case SymmetryPreset::mirrors: return "mirrors";
        case SymmetryPreset::cubic: return "cubic";
    }
    return "?";
}

SymmetryGroup::SymmetryGroup(SymmetryPreset preset) : preset_(preset) {
    switch (preset) {
        case SymmetryPreset::inversion:
            ops_ = {CubeOp::identity(), CubeOp::inversion()};
            break;
        case SymmetryPreset::mirrors:
            // All sign patterns on the identity permutation: the three
            // mid-plane mirrors, the three half-turns and the inversion.
            for (int mask = 0; mask < 8; ++mask) {
                CubeOp op;
                for (int i = 0; i < 3; ++i) op.sign[i] = (mask >> i & 1) ? -1 : 1;
                ops_.push_back(op);
            }
            break;
        case SymmetryPreset::cubic:
            ops_ = all_cube_ops();
            break;
    }
}

bool SymmetryGroup::contains(const CubeOp& op) const {
    return std::find(ops_.begin(), ops_.end(), op) != ops_.end();
}

Vec3 apply_symmetry(const CubeOp& op, const Vec3& p, const Frame& frame) {
    return frame.center + op.apply_relative(p - frame.center);
}

TransformedCell transform_cell(const UnitCell& cell, const CellTransform& t, double radius) {
    if (!(t.scale > 0.0)) throw LatticeError("transform scale must be positive");
    if (!(radius > 0.0)) throw LatticeError("strut radius must be positive");
    TransformedCell out;
    out.cell = cell;
    out.radius = radius * t.scale;
    if (cell.vertices.empty()) return out;
    const Frame frame = bounding_frame(cell);
    for (auto& v : out.cell.vertices) {
        v = frame.center + t.scale * t.rotation.apply_relative(v - frame.center);
    }
    return out;
}

PropertyVector permute_properties(const PropertyVector& p, const CubeOp& rotation) {
    if (!rotation.is_rotation()) {
        throw LatticeError("property permutation requires one of the 24 cube rotations");
    }
    const auto& perm = rotation.perm;
    PropertyVector out{};
    // Young's moduli: new axis i is old axis perm[i].
    for (int i = 0; i < 3; ++i) out[i] = p[perm[i]];
    // Shear moduli are indexed by the axis normal to their plane.
    for (int i = 0; i < 3; ++i) out[3 + i] = p[3 + perm[i]];

    // nu_ab for a < b, as stored: (y,z) at 6, (x,z) at 7, (x,y) at 8.
    auto nu = [&](int a, int b) {
        auto slot = [](int lo, int hi) {
            if (lo == 1 && hi == 2) return 6;
            if (lo == 0 && hi == 2) return 7;
            return 8;
        };
        if (a < b) return p[slot(a, b)];
        return p[slot(b, a)] * p[a] / p[b];
    };
    out[6] = nu(perm[1], perm[2]);
    out[7] = nu(perm[0], perm[2]);
    out[8] = nu(perm[0], perm[1]);
    return out;
}

}  // namespace latticeforge
