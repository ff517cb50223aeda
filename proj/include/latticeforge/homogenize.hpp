#pragma once

#include "latticeforge/core.hpp"
#include "latticeforge/symmetry.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace latticeforge {

struct MaterialSpec {
    double youngs = 1.0;
    double poisson = 0.3;

    double shear() const { return youngs / (2.0 * (1.0 + poisson)); }
    void check() const;
};

/// Solid circular strut cross-section.
struct StrutSection {
    double radius = 0.03;

    double area() const;
    double second_moment() const;  // I = pi r^4 / 4
    double polar_moment() const;   // J = pi r^4 / 2
};

/// 6x6 Voigt stiffness, order (xx, yy, zz, yz, xz, xy), engineering shear.
using StiffnessMatrix = Eigen::Matrix<double, 6, 6>;
using ElementMatrix = Eigen::Matrix<double, 12, 12>;

struct ElasticProperties {
    double E_x = 0, E_y = 0, E_z = 0;
    double G_yz = 0, G_xz = 0, G_xy = 0;
    double nu_yz = 0, nu_xz = 0, nu_xy = 0;
    double relative_density = 0;

    PropertyVector vector() const {
        return {E_x, E_y, E_z, G_yz, G_xz, G_xy, nu_yz, nu_xz, nu_xy};
    }
};

class HomogenizeError : public LatticeError {
  public:
    using LatticeError::LatticeError;
};

/// 2^-m where m counts the axes on which both endpoints sit on the same face.
double sharing_weight(const Vec3& a, const Vec3& b, const Frame& frame, double tol);

/// Euler-Bernoulli frame element in global coordinates (dofs per node:
/// ux, uy, uz, rx, ry, rz).
ElementMatrix element_stiffness(const Vec3& a, const Vec3& b, const StrutSection& section,
                                const MaterialSpec& material);

/// The local-to-global rotation used by element_stiffness; rows are the local
/// x, y, z axes in global coordinates.
Eigen::Matrix3d element_axes(const Vec3& a, const Vec3& b);

struct PeriodicPair {
    std::size_t master;  // on the min face
    std::size_t slave;   // on the max face
    int axis;
};

/// Per axis, a bijection between max-face and min-face vertices matched on
/// their in-face coordinates. Throws HomogenizeError on any unmatched vertex.
std::vector<PeriodicPair> periodic_pairs(const UnitCell& cell, const Frame& frame, double tol);

struct HomogenizeOptions {
    double tol = 1e-6;  // boundary detection, fraction of frame side
};

StiffnessMatrix homogenize(const UnitCell& cell, const StrutSection& section,
                           const MaterialSpec& material, const HomogenizeOptions& opts = {});

/// Stiffness from the quadratic strain energy: C_kl = [2U(e_k+e_l) - 2U(e_k)
/// - 2U(e_l)] / (2V), each energy from its own constrained solve.
StiffnessMatrix homogenize_by_energy(const UnitCell& cell, const StrutSection& section,
                                     const MaterialSpec& material, const HomogenizeOptions& opts = {});

ElasticProperties extract_engineering(const StiffnessMatrix& C);

double relative_density(const UnitCell& cell, const StrutSection& section, const Frame& frame,
                        double tol = 1e-6);

/// homogenize + extract_engineering + relative_density over the bounding frame.
ElasticProperties compute_properties(const UnitCell& cell, const StrutSection& section,
                                     const MaterialSpec& material = {});

/// Stiffness of an isotropic solid, used as a reference in tests and docs.
StiffnessMatrix isotropic_stiffness(const MaterialSpec& material);

}  // namespace latticeforge
