#include "latticeforge/catalog.hpp"
#include "latticeforge/corrupt.hpp"
#include "latticeforge/refine.hpp"
#include "latticeforge/rng.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace latticeforge;

namespace {

bool identical(const UnitCell& a, const UnitCell& b) {
    return a.vertices == b.vertices && a.edges == b.edges;
}

double max_coord_diff(const UnitCell& a, const UnitCell& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.vertices.size(); ++i) {
        m = std::max(m, (a.vertices[i] - b.vertices[i]).cwiseAbs().maxCoeff());
    }
    return m;
}

}  // namespace

TEST_CASE("refine_nodes") {
    const RefineConfig cfg;
    const Frame unit = Frame::unit();
    const UnitCell oct = catalog::make("octet");

    SUBCASE("perfect octet is a fixed point") {
        StageStats stats;
        CHECK(identical(refine_nodes(oct, cfg, unit, &stats), oct));
        CHECK(stats.total() == 0);
    }
    SUBCASE("noisy octet becomes exactly symmetric") {
        const UnitCell noisy = corrupt(oct, CorruptionConfig::noise_only(0.01, 17));
        const UnitCell out = refine_nodes(noisy, cfg, unit);
        const auto r = intra_cell_valid(out, 1e-12, cfg.group, unit);
        CHECK(r.worst_pair_deviation <= 1e-12);
    }
    SUBCASE("deleted face center is restored at its mirror position") {
        UnitCell c = oct;
        const std::size_t k = lf_test::nearest(c, Vec3(0.5, 0.5, 1.0));
        c.vertices.erase(c.vertices.begin() + static_cast<long>(k));
        std::vector<Edge> kept;
        for (auto [a, b] : c.edges) {
            if (a == k || b == k) continue;
            kept.push_back({a > k ? a - 1 : a, b > k ? b - 1 : b});
        }
        c.edges = kept;
        StageStats stats;
        const UnitCell out = refine_nodes(c, cfg, unit, &stats);
        CHECK(stats.nodes_added == 1);
        CHECK(lf_test::same_point_set(out.vertices, oct.vertices, 1e-12));
    }
}

TEST_CASE("refine_edges") {
    const RefineConfig cfg;
    const Frame unit = Frame::unit();

    SUBCASE("perfect simple cubic unchanged") {
        const UnitCell sc = catalog::make("simple_cubic");
        StageStats stats;
        CHECK(identical(refine_edges(sc, cfg, unit, &stats), sc));
        CHECK(stats.total() == 0);
    }
    SUBCASE("missing octet edge restored by closure") {
        const UnitCell oct = catalog::make("octet");
        UnitCell c = oct;
        const Edge removed = c.edges[3];
        c.edges.erase(c.edges.begin() + 3);
        StageStats stats;
        const UnitCell out = refine_edges(c, cfg, unit, &stats);
        CHECK(stats.edges_added == 1);
        CHECK(lf_test::has_edge(out, removed.first, removed.second));
        CHECK(sorted_clean(out).edges == sorted_clean(oct).edges);
    }
    SUBCASE("min-face vertex gets its max-face partner") {
        UnitCell c = catalog::make("simple_cubic");
        c.vertices.emplace_back(0.0, 0.5, 0.5);
        c.edges.push_back({lf_test::nearest(c, Vec3(0, 0, 0)), c.vertices.size() - 1});
        StageStats stats;
        const UnitCell out = refine_edges(c, cfg, unit, &stats);
        CHECK(out.num_vertices() == c.num_vertices() + 1);
        CHECK((out.vertices[lf_test::nearest(out, Vec3(1, 0.5, 0.5))] - Vec3(1, 0.5, 0.5)).norm() < 1e-12);
    }
    SUBCASE("isolated vertices dropped") {
        UnitCell c = catalog::make("simple_cubic");
        c.vertices.emplace_back(0.5, 0.5, 0.5);
        const UnitCell out = refine_edges(c, cfg, unit);
        CHECK(out.num_vertices() == 8);
    }
}

TEST_CASE("refine loop") {
    SUBCASE("catalog cells converge in cycle 1 untouched") {
        for (const auto& name : catalog::list()) {
            CAPTURE(name);
            const UnitCell c = catalog::make(name);
            const RefineResult r = refine(c);
            CHECK(identical(r.cell, c));
            CHECK(r.trace.converged);
            REQUIRE(r.trace.cycles.size() == 1);
            CHECK(r.trace.cycles[0].nodes.total() == 0);
            CHECK(r.trace.cycles[0].edges.total() == 0);
        }
    }
    SUBCASE("idempotent on corrupted octets") {
        for (std::uint64_t k = 0; k < 20; ++k) {
            CorruptionConfig cc;
            cc.seed = derive_seed(11, k);
            const RefineResult once = refine(corrupt(catalog::make("octet"), cc));
            const RefineResult twice = refine(once.cell);
            REQUIRE(once.cell.num_vertices() == twice.cell.num_vertices());
            CHECK(max_coord_diff(once.cell, twice.cell) <= 1e-12);
            CHECK(sorted_clean(once.cell).edges == sorted_clean(twice.cell).edges);
        }
    }
    SUBCASE("refinement raises low-threshold validity of noisy octets") {
        std::vector<UnitCell> raw, refined;
        for (std::uint64_t k = 0; k < 100; ++k) {
            raw.push_back(corrupt(catalog::make("octet"), CorruptionConfig::noise_only(0.01, derive_seed(5, k))));
            refined.push_back(refine(raw.back()).cell);
        }
        const std::vector<double> th{0.005};
        const double before = sweep(raw, th, SymmetryGroup::mirrors(), FramePolicy::unit).rows[0].intra_pct;
        const double after = sweep(refined, th, SymmetryGroup::mirrors(), FramePolicy::unit).rows[0].intra_pct;
        CHECK(after > before);
    }
    SUBCASE("deterministic") {
        const UnitCell in = corrupt(catalog::make("kelvin"), CorruptionConfig{0.01, 0.05, 0.05, 0.1, 0.1, 9});
        CHECK(identical(refine(in).cell, refine(in).cell));
    }
    SUBCASE("config validation") {
        RefineConfig bad;
        bad.max_cycles = 0;
        CHECK_THROWS_AS(refine(catalog::make("bcc"), bad), LatticeError);
    }
}

TEST_CASE("text serialization") {
    const UnitCell sc = catalog::make("simple_cubic");
    const std::string text = serialize_text(sc);
    auto count = [&](const std::string& prefix) {
        std::size_t n = 0, pos = 0;
        while ((pos = text.find("\n" + prefix, pos)) != std::string::npos) {
            ++n;
            ++pos;
        }
        return n + (text.rfind(prefix, 0) == 0 ? 1 : 0);
    };
    CHECK(count("NODE") == 8);
    CHECK(count("EDGE") == 12);

    const UnitCell noisy = corrupt(catalog::make("octet"), CorruptionConfig::noise_only(0.01, 3));
    const ParsedText back = parse_text(serialize_text(noisy));
    REQUIRE(back.cell.num_vertices() == noisy.num_vertices());
    for (std::size_t i = 0; i < noisy.num_vertices(); ++i) {
        CHECK((back.cell.vertices[i] - noisy.vertices[i]).cwiseAbs().maxCoeff() <= 1e-6);
    }
    CHECK(back.cell.edges == noisy.edges);

    std::string broken = text;
    const auto pos = broken.rfind("EDGE");
    broken.replace(pos, broken.find('\n', pos) - pos, "EDGE 0 99");
    const auto line = static_cast<std::size_t>(std::count(broken.begin(), broken.begin() + static_cast<long>(pos), '\n') + 1);
    try {
        parse_text(broken);
        FAIL("expected a parse error");
    } catch (const TextParseError& e) {
        CHECK(e.line() == line);
    }
}
