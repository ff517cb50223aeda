#include "latticeforge/catalog.hpp"
#include "latticeforge/corrupt.hpp"
#include "latticeforge/rng.hpp"
#include "latticeforge/validity.hpp"

#include <doctest.h>

#include <cmath>

using namespace latticeforge;

namespace {

CorruptionConfig zero_config(std::uint64_t seed) {
    return CorruptionConfig{0.0, 0.0, 0.0, 0.0, 0.0, seed};
}

}  // namespace

TEST_CASE("corrupt: zero parameters are the identity") {
    const UnitCell oct = catalog::make("octet");
    const UnitCell out = corrupt(oct, zero_config(3));
    CHECK(out.vertices == oct.vertices);
    CHECK(out.edges == oct.edges);
}

TEST_CASE("corrupt: certain edge removal") {
    CorruptionConfig cfg = zero_config(4);
    cfg.p_edge_remove = 1.0;
    const UnitCell oct = catalog::make("octet");
    const UnitCell out = corrupt(oct, cfg);
    CHECK(out.edges.empty());
    CHECK(out.vertices == oct.vertices);
}

TEST_CASE("corrupt: insertion counts round up") {
    CorruptionConfig cfg = zero_config(5);
    cfg.p_node_add = 0.1;  // ceil(1.4) = 2
    cfg.p_edge_add = 0.1;  // ceil(3.6) = 4
    const UnitCell oct = catalog::make("octet");
    const UnitCell out = corrupt(oct, cfg);
    CHECK(out.num_vertices() == 16);
    CHECK(out.num_edges() == 40);
    CHECK_NOTHROW(out.check());
    for (std::size_t i = 14; i < 16; ++i) {
        CHECK(out.vertices[i].minCoeff() >= 0.0);
        CHECK(out.vertices[i].maxCoeff() <= 1.0);
    }
}

TEST_CASE("corrupt: at least two vertices survive") {
    CorruptionConfig cfg = zero_config(6);
    cfg.p_node_remove = 1.0;
    CHECK(corrupt(catalog::make("kelvin"), cfg).num_vertices() == 2);
}

TEST_CASE("corrupt: determinism") {
    CorruptionConfig cfg;
    cfg.seed = 77;
    const UnitCell a = corrupt(catalog::make("diamond"), cfg);
    const UnitCell b = corrupt(catalog::make("diamond"), cfg);
    CHECK(a.vertices == b.vertices);
    CHECK(a.edges == b.edges);
    cfg.seed = 78;
    CHECK(corrupt(catalog::make("diamond"), cfg).vertices != a.vertices);
}

TEST_CASE("corrupt: noise statistics") {
    const UnitCell oct = catalog::make("octet");
    double s = 0, s2 = 0;
    std::size_t n = 0;
    for (std::uint64_t k = 0; k < 2000; ++k) {
        const UnitCell out = corrupt(oct, CorruptionConfig::noise_only(0.01, derive_seed(1, k)));
        REQUIRE(out.num_vertices() == oct.num_vertices());
        CHECK(out.edges == oct.edges);
        for (std::size_t i = 0; i < oct.num_vertices(); ++i) {
            for (int a = 0; a < 3; ++a) {
                const double d = out.vertices[i][a] - oct.vertices[i][a];
                s += d;
                s2 += d * d;
                ++n;
            }
        }
    }
    const double mean = s / static_cast<double>(n);
    const double sd = std::sqrt(s2 / static_cast<double>(n) - mean * mean);
    CHECK(std::abs(mean) < 2e-4);
    CHECK(sd == doctest::Approx(0.01).epsilon(0.02));
}

TEST_CASE("corrupt: removal rate") {
    CorruptionConfig cfg = zero_config(0);
    cfg.p_edge_remove = 0.3;
    const UnitCell oct = catalog::make("octet");
    std::size_t kept = 0, total = 0;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        cfg.seed = derive_seed(2, k);
        kept += corrupt(oct, cfg).num_edges();
        total += oct.num_edges();
    }
    CHECK(static_cast<double>(kept) / static_cast<double>(total) == doctest::Approx(0.7).epsilon(0.02));
}

TEST_CASE("corrupt: invalid configuration") {
    CorruptionConfig cfg;
    cfg.sigma = -1;
    CHECK_THROWS_AS(corrupt(catalog::make("bcc"), cfg), LatticeError);
    cfg = CorruptionConfig{};
    cfg.p_edge_add = 1.5;
    CHECK_THROWS_AS(corrupt(catalog::make("bcc"), cfg), LatticeError);
}

TEST_CASE("make_pairs") {
    const auto pairs = make_pairs(catalog::list(), CorruptionConfig{}, 10, 123);
    CHECK(pairs.size() == 60);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        CHECK(pairs[k].seed == derive_seed(123, k));
        CHECK(intra_cell_valid(pairs[k].clean, 1e-9, SymmetryGroup::mirrors(), Frame::unit()).intra_valid);
    }
    std::vector<UnitCell> corrupted;
    for (const auto& p : pairs) corrupted.push_back(p.corrupted);
    const auto s = sweep(corrupted, {0.005}, SymmetryGroup::mirrors(), FramePolicy::unit);
    CHECK(s.rows[0].intra_pct <= 50.0);
    CHECK_THROWS_AS(make_pairs({"octet", "gyroid"}, CorruptionConfig{}, 1, 0), LatticeError);
    CHECK_THROWS_AS(make_pairs({"octet"}, CorruptionConfig{}, 0, 0), LatticeError);
}
