#include "latticeforge/catalog.hpp"

#include <algorithm>
#include <cmath>

namespace latticeforge::catalog {

namespace {

constexpr double kSnap = 1e-12;

class Builder {
  public:
    explicit Builder(std::string name) { cell_.name = std::move(name); }

    std::size_t vertex(const Vec3& p) {
        for (std::size_t i = 0; i < cell_.vertices.size(); ++i) {
            if ((cell_.vertices[i] - p).norm() < kSnap) return i;
        }
        cell_.vertices.push_back(p);
        return cell_.vertices.size() - 1;
    }

    void edge(const Vec3& a, const Vec3& b) {
        const std::size_t i = vertex(a);
        const std::size_t j = vertex(b);
        cell_.edges.emplace_back(std::min(i, j), std::max(i, j));
    }

    UnitCell finish() { return sorted_clean(cell_); }

  private:
    UnitCell cell_;
};

std::vector<Vec3> corners() {
    std::vector<Vec3> out;
    for (int i = 0; i < 8; ++i) out.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    return out;
}

std::vector<Vec3> face_centers() {
    std::vector<Vec3> out;
    for (int axis = 0; axis < 3; ++axis) {
        for (double s : {0.0, 1.0}) {
            Vec3 p(0.5, 0.5, 0.5);
            p[axis] = s;
            out.push_back(p);
        }
    }
    return out;
}

void add_corners(Builder& b) {
    for (const auto& c : corners()) b.vertex(c);
}

void add_corner_face_edges(Builder& b) {
    // Each face center joins the four corners of its face.
    for (const auto& f : face_centers()) {
        for (const auto& c : corners()) {
            if ((c - f).norm() < 0.75) b.edge(c, f);
        }
    }
}

UnitCell simple_cubic() {
    Builder b("simple_cubic");
    add_corners(b);
    const auto cs = corners();
    for (std::size_t i = 0; i < cs.size(); ++i) {
        for (std::size_t j = i + 1; j < cs.size(); ++j) {
            if (std::abs((cs[i] - cs[j]).norm() - 1.0) < kSnap) b.edge(cs[i], cs[j]);
        }
    }
    return b.finish();
}

UnitCell bcc() {
    Builder b("bcc");
    add_corners(b);
    const Vec3 center(0.5, 0.5, 0.5);
    for (const auto& c : corners()) b.edge(center, c);
    return b.finish();
}

UnitCell fcc() {
    Builder b("fcc");
    add_corners(b);
    for (const auto& f : face_centers()) b.vertex(f);
    add_corner_face_edges(b);
    return b.finish();
}

UnitCell octet() {
    Builder b("octet");
    add_corners(b);
    for (const auto& f : face_centers()) b.vertex(f);
    add_corner_face_edges(b);
    const auto fs = face_centers();
    for (std::size_t i = 0; i < fs.size(); ++i) {
        for (std::size_t j = i + 1; j < fs.size(); ++j) {
            if ((fs[i] - fs[j]).norm() < 0.75) b.edge(fs[i], fs[j]);
        }
    }
    return b.finish();
}

UnitCell kelvin() {
    // Truncated octahedron: all permutations of (0, ±1, ±2), mapped from
    // [-2, 2] onto [0, 1]. Edges join vertices at distance sqrt(2).
    Builder b("kelvin");
    std::vector<Vec3> pts;
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (const auto& pm : perms) {
        for (int sa : {-1, 1}) {
            for (int sb : {-1, 1}) {
                const double base[3] = {0.0, 1.0 * sa, 2.0 * sb};
                Vec3 q;
                for (int k = 0; k < 3; ++k) q[pm[k]] = base[k];
                pts.push_back((q + Vec3::Constant(2.0)) / 4.0);
            }
        }
    }
    std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& c) {
        return std::lexicographical_compare(a.data(), a.data() + 3, c.data(), c.data() + 3);
    });
    for (const auto& p : pts) b.vertex(p);
    const double edge_len = std::sqrt(2.0) / 4.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            if (std::abs((pts[i] - pts[j]).norm() - edge_len) < 1e-9) b.edge(pts[i], pts[j]);
        }
    }
    return b.finish();
}

UnitCell diamond() {
    // fcc sites of the closed cube plus both tetrahedral sublattices, each
    // tetrahedral site bonded to its four nearest fcc sites. Carrying both
    // sublattices keeps the cell closed under the mid-plane mirrors.
    Builder b("diamond");
    add_corners(b);
    for (const auto& f : face_centers()) b.vertex(f);
    std::vector<Vec3> fcc_sites = corners();
    for (const auto& f : face_centers()) fcc_sites.push_back(f);
    const double bond = std::sqrt(3.0) / 4.0;
    for (int i = 0; i < 8; ++i) {
        const Vec3 t(0.25 + 0.5 * (i & 1), 0.25 + 0.5 * ((i >> 1) & 1), 0.25 + 0.5 * ((i >> 2) & 1));
        for (const auto& s : fcc_sites) {
            if (std::abs((s - t).norm() - bond) < 1e-9) b.edge(t, s);
        }
    }
    return b.finish();
}

}  // namespace

const std::vector<std::string>& list() {
    static const std::vector<std::string> names = {"simple_cubic", "bcc",    "fcc",
                                                   "octet",        "kelvin", "diamond"};
    return names;
}

bool contains(std::string_view name) {
    const auto& names = list();
    return std::find(names.begin(), names.end(), name) != names.end();
}

UnitCell make(std::string_view name) {
    if (name == "simple_cubic") return simple_cubic();
    if (name == "bcc") return bcc();
    if (name == "fcc") return fcc();
    if (name == "octet") return octet();
    if (name == "kelvin") return kelvin();
    if (name == "diamond") return diamond();
    throw LatticeError("unknown catalog entry '" + std::string(name) + "'");
}

}  // namespace latticeforge::catalog
