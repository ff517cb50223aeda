#include "latticeforge/catalog.hpp"
#include "latticeforge/homogenize.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace latticeforge;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("sharing_weight") {
    const Frame unit = Frame::unit();
    CHECK(sharing_weight(Vec3(0.5, 0.5, 0), Vec3(0.5, 0, 0.5), unit, 1e-6) == 1.0);
    CHECK(sharing_weight(Vec3(0.5, 0.5, 1), Vec3(0.5, 1, 0.5), unit, 1e-6) == 1.0);
    CHECK(sharing_weight(Vec3(0, 0, 0), Vec3(0.5, 0.5, 0), unit, 1e-6) == 0.5);
    CHECK(sharing_weight(Vec3(0, 0, 0), Vec3(1, 0, 0), unit, 1e-6) == 0.25);
}

TEST_CASE("element_stiffness") {
    const StrutSection s{0.05};
    const MaterialSpec m{2.0, 0.3};
    const Vec3 a(0.1, 0.2, 0.3), b(0.7, 0.2, 0.3);
    const ElementMatrix k = element_stiffness(a, b, s, m);
    CHECK(k(0, 0) == doctest::Approx(m.youngs * s.area() / 0.6).epsilon(1e-12));

    const Vec3 c(0.1, 0.2, 0.3), d(0.5, 0.9, 0.1);
    const ElementMatrix kg = element_stiffness(c, d, s, m);
    CHECK((kg - kg.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * kg.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<ElementMatrix> es(kg);
    const auto ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    int zeros = 0;
    for (int i = 0; i < 12; ++i) {
        CHECK(ev[i] >= -1e-10 * scale);
        zeros += std::abs(ev[i]) <= 1e-10 * scale;
    }
    CHECK(zeros == 6);

    // quarter turn about z: global matrix transforms as T^T k T
    Eigen::Matrix3d Rz;
    Rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    const ElementMatrix k1 = element_stiffness(Vec3::Zero(), d - c, s, m);
    const ElementMatrix k2 = element_stiffness(Vec3::Zero(), Rz * (d - c), s, m);
    ElementMatrix T = ElementMatrix::Zero();
    for (int blk = 0; blk < 4; ++blk) T.block<3, 3>(3 * blk, 3 * blk) = Rz;
    CHECK((T.transpose() * k2 * T - k1).cwiseAbs().maxCoeff() <= 1e-10 * k1.cwiseAbs().maxCoeff());
    CHECK_THROWS_AS(element_stiffness(a, a, s, m), HomogenizeError);
}

TEST_CASE("periodic_pairs") {
    auto per_axis = [](const UnitCell& c) {
        std::array<int, 3> n{};
        for (const auto& p : periodic_pairs(c, bounding_frame(c), 1e-6)) ++n[p.axis];
        return n;
    };
    CHECK(per_axis(catalog::make("simple_cubic")) == std::array<int, 3>{4, 4, 4});
    CHECK(per_axis(catalog::make("bcc")) == std::array<int, 3>{4, 4, 4});
    UnitCell c = catalog::make("bcc");
    c.vertices.emplace_back(0.0, 0.5, 0.5);
    c.edges.push_back({8, 9});
    CHECK_THROWS_AS(periodic_pairs(c, Frame::unit(), 1e-6), HomogenizeError);
}

TEST_CASE("simple cubic analytic stiffness and density") {
    const UnitCell sc = catalog::make("simple_cubic");
    for (double r : {0.05, 0.01}) {
        CAPTURE(r);
        const double ex = std::numbers::pi * r * r;
        const StiffnessMatrix C = homogenize(sc, StrutSection{r}, MaterialSpec{});
        CHECK(rel(C(0, 0), ex) <= (r == 0.05 ? 0.01 : 0.001));
        const ElasticProperties p = compute_properties(sc, StrutSection{r});
        CHECK(rel(p.E_x, ex) <= (r == 0.05 ? 0.01 : 0.001));
        CHECK(rel(p.relative_density, 3.0 * ex) <= 1e-3);
    }
    const double rho1 = relative_density(sc, StrutSection{0.02}, Frame::unit());
    const double rho2 = relative_density(sc, StrutSection{0.04}, Frame::unit());
    CHECK(rho2 == doctest::Approx(4.0 * rho1).epsilon(1e-12));
}

TEST_CASE("octet cubic symmetry and stretch-dominated modulus") {
    const UnitCell oct = catalog::make("octet");
    const StiffnessMatrix C = homogenize(oct, StrutSection{0.02}, MaterialSpec{});
    CHECK(rel(C(1, 1), C(0, 0)) <= 1e-8);
    CHECK(rel(C(2, 2), C(0, 0)) <= 1e-8);
    CHECK(rel(C(4, 4), C(3, 3)) <= 1e-8);
    CHECK(rel(C(5, 5), C(3, 3)) <= 1e-8);
    for (double r : {0.01, 0.02, 0.03}) {
        const ElasticProperties p = compute_properties(oct, StrutSection{r});
        const double ratio = p.E_x / p.relative_density;
        CAPTURE(r);
        CHECK(ratio >= 0.10);
        CHECK(ratio <= 0.13);
    }
}

TEST_CASE("energy route equals bilinear route") {
    for (const auto& name : catalog::list()) {
        CAPTURE(name);
        const UnitCell c = catalog::make(name);
        const StiffnessMatrix a = homogenize(c, StrutSection{0.03}, MaterialSpec{});
        const StiffnessMatrix b = homogenize_by_energy(c, StrutSection{0.03}, MaterialSpec{});
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10 * a.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("stiffness is symmetric PSD for every catalog cell") {
    for (const auto& name : catalog::list()) {
        CAPTURE(name);
        const StiffnessMatrix C = homogenize(catalog::make(name), StrutSection{0.02}, MaterialSpec{});
        CHECK((C - C.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * C.cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<StiffnessMatrix> es(C);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12 * C.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("extract_engineering") {
    const ElasticProperties p = extract_engineering(isotropic_stiffness(MaterialSpec{1.0, 0.3}));
    CHECK(p.E_x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.E_z == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.nu_xy == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(p.nu_yz == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(p.G_xy == doctest::Approx(1.0 / 2.6).epsilon(1e-12));

    StiffnessMatrix cubic = StiffnessMatrix::Zero();
    cubic.topLeftCorner<3, 3>().setConstant(0.4);
    cubic.topLeftCorner<3, 3>().diagonal().setConstant(1.3);
    cubic.bottomRightCorner<3, 3>().diagonal().setConstant(0.5);
    const ElasticProperties q = extract_engineering(cubic);
    CHECK(q.E_y == doctest::Approx(q.E_x).epsilon(1e-12));
    CHECK(q.E_z == doctest::Approx(q.E_x).epsilon(1e-12));
    CHECK(q.nu_xz == doctest::Approx(q.nu_xy).epsilon(1e-12));
    CHECK(q.nu_yz == doctest::Approx(q.nu_xy).epsilon(1e-12));
}

TEST_CASE("non-periodic cell is rejected") {
    UnitCell c = catalog::make("simple_cubic");
    c.vertices.emplace_back(0.0, 0.5, 0.5);
    c.edges.push_back({0, c.vertices.size() - 1});
    CHECK_THROWS_AS(homogenize(c, StrutSection{0.02}, MaterialSpec{}), HomogenizeError);
}
