#include "latticeforge/homogenize.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace latticeforge {

void MaterialSpec::check() const {
    if (!(youngs > 0.0)) throw HomogenizeError("solid Young's modulus must be positive");
    if (!(poisson > -1.0 && poisson < 0.5)) throw HomogenizeError("solid Poisson ratio must lie in (-1, 0.5)");
}

double StrutSection::area() const { return std::numbers::pi * radius * radius; }
double StrutSection::second_moment() const { return std::numbers::pi * std::pow(radius, 4) / 4.0; }
double StrutSection::polar_moment() const { return std::numbers::pi * std::pow(radius, 4) / 2.0; }

double sharing_weight(const Vec3& a, const Vec3& b, const Frame& frame, double tol) {
    const double eps = tol * frame.side;
    int shared = 0;
    for (int axis = 0; axis < 3; ++axis) {
        for (double face : {frame.face_min(axis), frame.face_max(axis)}) {
            if (std::abs(a[axis] - face) <= eps && std::abs(b[axis] - face) <= eps) ++shared;
        }
    }
    return std::ldexp(1.0, -shared);
}

Eigen::Matrix3d element_axes(const Vec3& a, const Vec3& b) {
    const Vec3 ex = (b - a).normalized();
    Vec3 ref(0.0, 0.0, 1.0);
    if (std::abs(ex.dot(ref)) > 0.999) ref = Vec3(0.0, 1.0, 0.0);
    const Vec3 ez = ex.cross(ref).normalized();
    const Vec3 ey = ez.cross(ex);
    Eigen::Matrix3d R;
    R.row(0) = ex.transpose();
    R.row(1) = ey.transpose();
    R.row(2) = ez.transpose();
    return R;
}

ElementMatrix element_stiffness(const Vec3& a, const Vec3& b, const StrutSection& section,
                                const MaterialSpec& material) {
    const double L = (b - a).norm();
    if (!(L > 1e-12)) throw HomogenizeError("zero-length strut");
    const double E = material.youngs;
    const double G = material.shear();
    const double A = section.area();
    const double I = section.second_moment();
    const double J = section.polar_moment();

    ElementMatrix k = ElementMatrix::Zero();
    const double ea = E * A / L;
    const double gj = G * J / L;
    const double b12 = 12.0 * E * I / (L * L * L);
    const double b6 = 6.0 * E * I / (L * L);
    const double b4 = 4.0 * E * I / L;
    const double b2 = 2.0 * E * I / L;

    // axial
    k(0, 0) = k(6, 6) = ea;
    k(0, 6) = k(6, 0) = -ea;
    // torsion
    k(3, 3) = k(9, 9) = gj;
    k(3, 9) = k(9, 3) = -gj;
    // bending in the local x-y plane: uy, rz
    k(1, 1) = k(7, 7) = b12;
    k(1, 7) = k(7, 1) = -b12;
    k(1, 5) = k(5, 1) = k(1, 11) = k(11, 1) = b6;
    k(7, 5) = k(5, 7) = k(7, 11) = k(11, 7) = -b6;
    k(5, 5) = k(11, 11) = b4;
    k(5, 11) = k(11, 5) = b2;
    // bending in the local x-z plane: uz, ry
    k(2, 2) = k(8, 8) = b12;
    k(2, 8) = k(8, 2) = -b12;
    k(2, 4) = k(4, 2) = k(2, 10) = k(10, 2) = -b6;
    k(8, 4) = k(4, 8) = k(8, 10) = k(10, 8) = b6;
    k(4, 4) = k(10, 10) = b4;
    k(4, 10) = k(10, 4) = b2;

    const Eigen::Matrix3d R = element_axes(a, b);
    ElementMatrix T = ElementMatrix::Zero();
    for (int blk = 0; blk < 4; ++blk) T.block<3, 3>(3 * blk, 3 * blk) = R;
    ElementMatrix kg = T.transpose() * k * T;
    return 0.5 * (kg + kg.transpose());
}

std::vector<PeriodicPair> periodic_pairs(const UnitCell& cell, const Frame& frame, double tol) {
    const double eps = tol * frame.side;
    std::vector<PeriodicPair> pairs;
    for (int axis = 0; axis < 3; ++axis) {
        const int a1 = (axis + 1) % 3;
        const int a2 = (axis + 2) % 3;
        std::vector<std::size_t> lo;
        std::vector<std::size_t> hi;
        for (std::size_t i = 0; i < cell.vertices.size(); ++i) {
            const double x = cell.vertices[i][axis];
            if (std::abs(x - frame.face_min(axis)) <= eps) lo.push_back(i);
            else if (std::abs(x - frame.face_max(axis)) <= eps) hi.push_back(i);
        }
        std::vector<bool> used(lo.size(), false);
        for (std::size_t s : hi) {
            std::size_t found = lo.size();
            for (std::size_t k = 0; k < lo.size(); ++k) {
                const auto& p = cell.vertices[lo[k]];
                const auto& q = cell.vertices[s];
                if (!used[k] && std::abs(p[a1] - q[a1]) <= eps && std::abs(p[a2] - q[a2]) <= eps) {
                    found = k;
                    break;
                }
            }
            if (found == lo.size()) {
                throw HomogenizeError("vertex " + std::to_string(s) + " on the max face of axis " +
                                      std::to_string(axis) + " has no periodic partner");
            }
            used[found] = true;
            pairs.push_back({lo[found], s, axis});
        }
        for (std::size_t k = 0; k < lo.size(); ++k) {
            if (!used[k]) {
                throw HomogenizeError("vertex " + std::to_string(lo[k]) + " on the min face of axis " +
                                      std::to_string(axis) + " has no periodic partner");
            }
        }
    }
    return pairs;
}

namespace {

Eigen::Matrix3d unit_strain(int k) {
    Eigen::Matrix3d e = Eigen::Matrix3d::Zero();
    if (k < 3) {
        e(k, k) = 1.0;
    } else {
        // Voigt 3,4,5 = yz, xz, xy with engineering shear 1.
        const int i = k == 5 ? 0 : (k == 4 ? 0 : 1);
        const int j = k == 3 ? 2 : (k == 4 ? 2 : 1);
        e(i, j) = e(j, i) = 0.5;
    }
    return e;
}

/// Assembled periodic problem: K is free-free over all 6n dofs, T maps the
/// reduced fluctuation unknowns onto all dofs.
struct PeriodicSystem {
    Eigen::MatrixXd K;
    Eigen::MatrixXd T;
    Eigen::LLT<Eigen::MatrixXd> factor;
    std::vector<Vec3> positions;
    double volume = 1.0;
};

PeriodicSystem assemble(const UnitCell& cell, const StrutSection& section, const MaterialSpec& material,
                        const HomogenizeOptions& opts) {
    material.check();
    if (!(section.radius > 0.0)) throw HomogenizeError("strut radius must be positive");
    const UnitCell clean = canonical_clean(cell);
    if (clean.vertices.empty() || clean.edges.empty()) throw HomogenizeError("cell has no struts");
    if (connected_components(clean).count != 1) throw HomogenizeError("cell is not connected");
    const Frame frame = bounding_frame(clean);
    const std::size_t n = clean.vertices.size();

    PeriodicSystem sys;
    sys.positions = clean.vertices;
    sys.volume = frame.side * frame.side * frame.side;
    sys.K = Eigen::MatrixXd::Zero(6 * n, 6 * n);
    for (const auto& [a, b] : clean.edges) {
        const Vec3& pa = clean.vertices[a];
        const Vec3& pb = clean.vertices[b];
        if ((pb - pa).norm() <= 1e-9 * frame.side) throw HomogenizeError("zero-length strut");
        const double w = sharing_weight(pa, pb, frame, opts.tol);
        const ElementMatrix ke = w * element_stiffness(pa, pb, section, material);
        const std::size_t idx[2] = {a, b};
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                sys.K.block<6, 6>(6 * idx[r], 6 * idx[c]) += ke.block<6, 6>(6 * r, 6 * c);
            }
        }
    }

    // Periodic fluctuations: every slave shares its master's fluctuation.
    DisjointSets sets(n);
    for (const auto& p : periodic_pairs(clean, frame, opts.tol)) sets.unite(p.master, p.slave);
    std::vector<std::size_t> rep_index(n, n);
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = sets.find(i);
        if (rep_index[r] == n) {
            rep_index[r] = reps.size();
            reps.push_back(r);
        }
    }
    // The lowest-index vertex's translational fluctuation is pinned.
    const std::size_t pinned_rep = rep_index[sets.find(0)];
    std::vector<long> column(6 * reps.size(), -1);
    long next = 0;
    for (std::size_t r = 0; r < reps.size(); ++r) {
        for (int d = 0; d < 6; ++d) {
            if (r == pinned_rep && d < 3) continue;
            column[6 * r + d] = next++;
        }
    }
    sys.T = Eigen::MatrixXd::Zero(6 * n, next);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = rep_index[sets.find(i)];
        for (int d = 0; d < 6; ++d) {
            if (column[6 * r + d] >= 0) sys.T(6 * i + d, column[6 * r + d]) = 1.0;
        }
    }

    const Eigen::MatrixXd Kr = sys.T.transpose() * sys.K * sys.T;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Kr, Eigen::EigenvaluesOnly);
    const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    long zero_modes = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        if (eig.eigenvalues()(i) <= 1e-12 * top) ++zero_modes;
    }
    if (zero_modes > 0) {
        throw HomogenizeError("kinematic mechanism detected: " + std::to_string(zero_modes) +
                              " zero-energy mode(s)");
    }
    sys.factor.compute(Kr);
    if (sys.factor.info() != Eigen::Success) throw HomogenizeError("kinematic mechanism detected");
    return sys;
}

/// Full displacement (affine + fluctuation) for a macroscopic strain.
Eigen::VectorXd solve_displacement(const PeriodicSystem& sys, const Eigen::Matrix3d& strain) {
    const std::size_t n = sys.positions.size();
    Eigen::VectorXd affine = Eigen::VectorXd::Zero(6 * n);
    for (std::size_t i = 0; i < n; ++i) affine.segment<3>(6 * i) = strain * sys.positions[i];
    const Eigen::VectorXd rhs = -(sys.T.transpose() * (sys.K * affine));
    const Eigen::VectorXd fluct = sys.factor.solve(rhs);
    return affine + sys.T * fluct;
}

double strain_energy(const PeriodicSystem& sys, const Eigen::Matrix3d& strain) {
    const Eigen::VectorXd u = solve_displacement(sys, strain);
    return 0.5 * u.dot(sys.K * u);
}

}  // namespace

StiffnessMatrix homogenize(const UnitCell& cell, const StrutSection& section,
                           const MaterialSpec& material, const HomogenizeOptions& opts) {
    const PeriodicSystem sys = assemble(cell, section, material, opts);
    std::vector<Eigen::VectorXd> disp(6);
    for (int k = 0; k < 6; ++k) disp[k] = solve_displacement(sys, unit_strain(k));
    StiffnessMatrix C;
    for (int k = 0; k < 6; ++k) {
        const Eigen::VectorXd Ku = sys.K * disp[k];
        for (int l = 0; l < 6; ++l) C(k, l) = disp[l].dot(Ku) / sys.volume;
    }
    return 0.5 * (C + C.transpose());
}

StiffnessMatrix homogenize_by_energy(const UnitCell& cell, const StrutSection& section,
                                     const MaterialSpec& material, const HomogenizeOptions& opts) {
    const PeriodicSystem sys = assemble(cell, section, material, opts);
    std::array<double, 6> single{};
    for (int k = 0; k < 6; ++k) single[k] = strain_energy(sys, unit_strain(k));
    StiffnessMatrix C;
    for (int k = 0; k < 6; ++k) {
        for (int l = k; l < 6; ++l) {
            if (k == l) {
                C(k, k) = 2.0 * single[k] / sys.volume;
                continue;
            }
            const double both = strain_energy(sys, unit_strain(k) + unit_strain(l));
            C(k, l) = C(l, k) = (2.0 * both - 2.0 * single[k] - 2.0 * single[l]) / (2.0 * sys.volume);
        }
    }
    return C;
}

ElasticProperties extract_engineering(const StiffnessMatrix& C) {
    Eigen::FullPivLU<StiffnessMatrix> lu(C);
    if (!lu.isInvertible()) throw HomogenizeError("stiffness matrix is singular");
    const StiffnessMatrix S = lu.inverse();
    ElasticProperties p;
    p.E_x = 1.0 / S(0, 0);
    p.E_y = 1.0 / S(1, 1);
    p.E_z = 1.0 / S(2, 2);
    p.G_yz = 1.0 / S(3, 3);
    p.G_xz = 1.0 / S(4, 4);
    p.G_xy = 1.0 / S(5, 5);
    p.nu_xy = -S(1, 0) / S(0, 0);
    p.nu_yz = -S(2, 1) / S(1, 1);
    p.nu_xz = -S(2, 0) / S(0, 0);
    return p;
}

double relative_density(const UnitCell& cell, const StrutSection& section, const Frame& frame,
                        double tol) {
    double volume = 0.0;
    for (const auto& [a, b] : cell.edges) {
        const Vec3& pa = cell.vertices[a];
        const Vec3& pb = cell.vertices[b];
        volume += sharing_weight(pa, pb, frame, tol) * section.area() * (pb - pa).norm();
    }
    return volume / (frame.side * frame.side * frame.side);
}

ElasticProperties compute_properties(const UnitCell& cell, const StrutSection& section,
                                     const MaterialSpec& material) {
    ElasticProperties p = extract_engineering(homogenize(cell, section, material));
    p.relative_density = relative_density(cell, section, bounding_frame(cell));
    return p;
}

StiffnessMatrix isotropic_stiffness(const MaterialSpec& m) {
    const double E = m.youngs;
    const double nu = m.poisson;
    const double lambda = E * nu / ((1 + nu) * (1 - 2 * nu));
    const double mu = E / (2 * (1 + nu));
    StiffnessMatrix C = StiffnessMatrix::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) C(i, j) = lambda;
        C(i, i) = lambda + 2 * mu;
        C(3 + i, 3 + i) = mu;
    }
    return C;
}

}  // namespace latticeforge
