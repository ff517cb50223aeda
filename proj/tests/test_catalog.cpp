#include "latticeforge/catalog.hpp"
#include "latticeforge/validity.hpp"

#include <doctest.h>

using namespace latticeforge;

TEST_CASE("catalog names") {
    const auto& names = catalog::list();
    CHECK(names.size() == 6);
    CHECK(catalog::contains("octet"));
    CHECK_FALSE(catalog::contains("gyroid"));
    CHECK(catalog::list() == names);
    CHECK_THROWS_AS(catalog::make("gyroid"), LatticeError);
}

TEST_CASE("catalog counts") {
    auto counts = [](const char* name) {
        const UnitCell c = catalog::make(name);
        return std::pair{c.num_vertices(), c.num_edges()};
    };
    CHECK(counts("simple_cubic") == std::pair<std::size_t, std::size_t>{8, 12});
    CHECK(counts("bcc") == std::pair<std::size_t, std::size_t>{9, 8});
    CHECK(counts("octet") == std::pair<std::size_t, std::size_t>{14, 36});
    CHECK(counts("kelvin") == std::pair<std::size_t, std::size_t>{24, 36});
}

TEST_CASE("catalog cells are clean, connected, in the unit cube and symmetric") {
    for (const auto& name : catalog::list()) {
        CAPTURE(name);
        const UnitCell c = catalog::make(name);
        CHECK(c.name == name);
        CHECK_NOTHROW(c.check());
        CHECK(connected_components(c).count == 1);
        for (const auto& v : c.vertices) {
            CHECK(v.minCoeff() >= 0.0);
            CHECK(v.maxCoeff() <= 1.0);
        }
        for (auto preset : {SymmetryPreset::inversion, SymmetryPreset::mirrors, SymmetryPreset::cubic}) {
            const auto r = validate(c, 1e-9, SymmetryGroup(preset), Frame::unit());
            CHECK(r.intra_valid);
            CHECK(r.inter_valid);
        }
        // construction is deterministic
        const UnitCell again = catalog::make(name);
        CHECK(again.vertices == c.vertices);
        CHECK(again.edges == c.edges);
    }
}
