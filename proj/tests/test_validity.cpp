#include "latticeforge/catalog.hpp"
#include "latticeforge/corrupt.hpp"
#include "latticeforge/rng.hpp"
#include "latticeforge/validity.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace latticeforge;

TEST_CASE("intra_cell_valid") {
    const UnitCell oct = catalog::make("octet");
    const Frame unit = Frame::unit();
    CHECK(intra_cell_valid(oct, 0.005, SymmetryGroup::inversion(), unit).intra_valid);

    SUBCASE("displaced vertex") {
        UnitCell c = oct;
        const std::size_t k = lf_test::nearest(c, Vec3(0.5, 0.5, 0.0));
        c.vertices[k].x() += 0.03;
        const auto r = intra_cell_valid(c, 0.01, SymmetryGroup::inversion(), unit);
        CHECK_FALSE(r.intra_valid);
        CHECK(r.worst_pair_deviation == doctest::Approx(0.015));  // half the 0.03 pair gap
        CHECK(intra_cell_valid(c, 0.016, SymmetryGroup::inversion(), unit).intra_valid);
    }
    SUBCASE("two disjoint tetrahedra") {
        UnitCell c;
        const std::vector<Vec3> tet{Vec3(0, 0, 0), Vec3(1, 1, 0), Vec3(1, 0, 1), Vec3(0, 1, 1)};
        for (const auto& v : tet) c.vertices.push_back(0.4 * v);
        for (const auto& v : tet) c.vertices.push_back(Vec3::Constant(1.0) - 0.4 * v);
        for (std::size_t base : {0u, 4u}) {
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t j = i + 1; j < 4; ++j) c.edges.push_back({base + i, base + j});
            }
        }
        const auto r = intra_cell_valid(c, 0.04, SymmetryGroup::inversion(), unit);
        CHECK(r.component_count == 2);
        CHECK_FALSE(r.intra_valid);
    }
}

TEST_CASE("inter_cell_valid") {
    const Frame unit = Frame::unit();
    const UnitCell sc = catalog::make("simple_cubic");
    CHECK(inter_cell_valid(sc, 0.0, unit).inter_valid);
    UnitCell c = sc;
    c.vertices[lf_test::nearest(c, Vec3(1, 1, 1))].x() = 1.05;
    auto r = inter_cell_valid(c, 0.04, unit);
    CHECK_FALSE(r.inter_valid);
    CHECK(r.worst_boundary_excess == doctest::Approx(0.05));
    c.vertices[lf_test::nearest(c, Vec3(1.05, 1, 1))].x() = 1.03;
    CHECK(inter_cell_valid(c, 0.04, unit).inter_valid);
}

TEST_CASE("frame policy") {
    CHECK(parse_frame_policy("unit") == FramePolicy::unit);
    CHECK(parse_frame_policy("fit") == FramePolicy::fit);
    CHECK_THROWS(parse_frame_policy("box"));
    UnitCell c = catalog::make("bcc");
    for (auto& v : c.vertices) v = 0.5 * v;
    const Frame fit = resolve_frame(c, FramePolicy::fit);
    CHECK(fit.side == doctest::Approx(0.5));
    CHECK(resolve_frame(c, FramePolicy::unit).side == 1.0);
}

TEST_CASE("sweep") {
    const std::vector<double> thresholds{0.005, 0.01, 0.02, 0.04};
    SUBCASE("perfect population") {
        std::vector<UnitCell> pop;
        for (int i = 0; i < 10; ++i) pop.push_back(catalog::make(catalog::list()[i % 6]));
        const auto s = sweep(pop, thresholds, SymmetryGroup::mirrors(), FramePolicy::unit);
        REQUIRE(s.rows.size() == 4);
        for (const auto& row : s.rows) {
            CHECK(row.intra_pct == 100.0);
            CHECK(row.inter_pct == 100.0);
            CHECK(row.n == 10);
        }
    }
    SUBCASE("noisy octets rise with threshold") {
        std::vector<UnitCell> pop;
        for (std::uint64_t k = 0; k < 100; ++k) {
            pop.push_back(corrupt(catalog::make("octet"), CorruptionConfig::noise_only(0.01, derive_seed(3, k))));
        }
        const auto s = sweep(pop, thresholds, SymmetryGroup::mirrors(), FramePolicy::unit);
        for (std::size_t i = 1; i < s.rows.size(); ++i) {
            CHECK(s.rows[i].intra_pct >= s.rows[i - 1].intra_pct);
            CHECK(s.rows[i].inter_pct >= s.rows[i - 1].inter_pct);
        }
        CHECK(s.rows.front().intra_pct < s.rows.back().intra_pct);
    }
}
