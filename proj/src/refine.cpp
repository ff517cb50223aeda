#include "latticeforge/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>

namespace latticeforge {

void RefineConfig::check() const {
    if (!(merge_tol >= 0.0 && merge_tol < snap_tol)) {
        throw LatticeError("refine config requires 0 <= merge_tol < snap_tol");
    }
    if (!(pair_tol >= 0.0)) throw LatticeError("pair_tol must be non-negative");
    if (!(target_threshold >= 0.0)) throw LatticeError("target threshold must be non-negative");
    if (max_cycles < 1) throw LatticeError("max_cycles must be at least 1");
}

StageStats& StageStats::operator+=(const StageStats& o) {
    nodes_moved += o.nodes_moved;
    nodes_added += o.nodes_added;
    nodes_removed += o.nodes_removed;
    edges_added += o.edges_added;
    edges_removed += o.edges_removed;
    return *this;
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
// Displacements below this fraction of the side count as "not moved".
constexpr double kMoveEps = 1e-12;
// Orbit images closer than this fraction of the side are the same point.
constexpr double kImageEps = 1e-9;

/// Rebuilds the cell keeping vertices with keep[i] and routing edges through
/// target[i] (a surviving index in the old numbering).
UnitCell compact(const UnitCell& cell, const std::vector<std::size_t>& target) {
    const std::size_t n = cell.vertices.size();
    std::vector<std::size_t> new_index(n, kNone);
    UnitCell out;
    out.name = cell.name;
    for (std::size_t i = 0; i < n; ++i) {
        if (target[i] == i) {
            new_index[i] = out.vertices.size();
            out.vertices.push_back(cell.vertices[i]);
        }
    }
    for (const auto& [a, b] : cell.edges) {
        out.edges.emplace_back(new_index[target[a]], new_index[target[b]]);
    }
    return canonical_clean(out);
}

std::size_t count_lost_edges(const UnitCell& before, const UnitCell& after) {
    return before.edges.size() > after.edges.size() ? before.edges.size() - after.edges.size() : 0;
}

/// Single-linkage clustering of vertices closer than tol; each cluster
/// collapses to its centroid at the position of its lowest index.
UnitCell merge_close(const UnitCell& cell, double tol, StageStats& stats) {
    const std::size_t n = cell.vertices.size();
    DisjointSets sets(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if ((cell.vertices[i] - cell.vertices[j]).norm() <= tol) sets.unite(i, j);
        }
    }
    std::vector<std::size_t> rep(n, kNone);
    std::vector<std::size_t> target(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = sets.find(i);
        if (rep[r] == kNone) rep[r] = i;
        target[i] = rep[r];
    }
    UnitCell moved = cell;
    std::map<std::size_t, std::pair<Vec3, std::size_t>> sums;
    for (std::size_t i = 0; i < n; ++i) {
        auto& [sum, count] = sums[target[i]];
        if (count == 0) sum.setZero();
        sum += cell.vertices[i];
        ++count;
    }
    for (const auto& [root, acc] : sums) {
        if (acc.second > 1) {
            moved.vertices[root] = acc.first / static_cast<double>(acc.second);
            ++stats.nodes_moved;
            stats.nodes_removed += acc.second - 1;
        }
    }
    UnitCell out = compact(moved, target);
    stats.edges_removed += count_lost_edges(cell, out);
    return out;
}

struct OrbitMatch {
    std::size_t op = 0;
    std::size_t vertex = kNone;
};

}  // namespace

UnitCell refine_nodes(const UnitCell& cell, const RefineConfig& cfg, const Frame& frame,
                      StageStats* stats_out) {
    StageStats stats;
    const double side = frame.side;
    UnitCell merged = merge_close(canonical_clean(cell), cfg.merge_tol * side, stats);

    const std::size_t n = merged.vertices.size();
    const auto& ops = cfg.group.ops();
    std::vector<Vec3> rel(n);
    for (std::size_t i = 0; i < n; ++i) rel[i] = merged.vertices[i] - frame.center;

    std::vector<std::size_t> owner(n, kNone);
    std::vector<Vec3> new_rel = rel;
    std::vector<std::size_t> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = i;
    std::vector<Vec3> appended;
    const double snap = cfg.snap_tol * side;
    const double half = 0.5 * side;

    for (std::size_t root = 0; root < n; ++root) {
        if (owner[root] != kNone) continue;
        const std::size_t orbit = root;

        auto match = [&](const Vec3& ref) {
            for (std::size_t i = 0; i < n; ++i) {
                if (owner[i] == orbit && i != root) owner[i] = kNone;
            }
            owner[root] = orbit;
            std::vector<OrbitMatch> out;
            for (std::size_t k = 0; k < ops.size(); ++k) {
                if (ops[k].is_identity()) {
                    out.push_back({k, root});
                    continue;
                }
                const Vec3 image = ops[k].apply_relative(ref);
                std::size_t best = kNone;
                double best_d = snap;
                for (std::size_t i = 0; i < n; ++i) {
                    if (owner[i] != kNone && owner[i] != orbit) continue;
                    const double d = (rel[i] - image).norm();
                    if (d <= best_d) {
                        best_d = d;
                        best = i;
                    }
                }
                if (best != kNone) owner[best] = orbit;
                out.push_back({k, best});
            }
            return out;
        };
        auto estimate = [&](const std::vector<OrbitMatch>& matches) {
            Vec3 sum = Vec3::Zero();
            std::size_t count = 0;
            for (const auto& m : matches) {
                if (m.vertex == kNone) continue;
                sum += ops[m.op].inverse().apply_relative(rel[m.vertex]);
                ++count;
            }
            return Vec3(sum / static_cast<double>(count));
        };

        auto matches = match(rel[root]);
        Vec3 canonical = estimate(matches);
        // Second pass from the averaged estimate, which carries less noise
        // than the root alone.
        matches = match(canonical);
        canonical = estimate(matches);
        canonical = canonical.cwiseMax(Vec3::Constant(-half)).cwiseMin(Vec3::Constant(half));

        // Distinct images of the canonical point, each owned by one vertex.
        std::vector<Vec3> images;
        std::vector<std::size_t> image_vertex;
        std::vector<std::size_t> image_of_op(ops.size());
        for (std::size_t k = 0; k < ops.size(); ++k) {
            const Vec3 img = ops[k].apply_relative(canonical);
            std::size_t found = kNone;
            for (std::size_t m = 0; m < images.size(); ++m) {
                if ((images[m] - img).norm() <= kImageEps * side) {
                    found = m;
                    break;
                }
            }
            if (found == kNone) {
                found = images.size();
                images.push_back(img);
                image_vertex.push_back(kNone);
            }
            image_of_op[k] = found;
        }
        std::map<std::size_t, std::size_t> assigned;  // vertex -> image
        for (const auto& m : matches) {
            if (m.vertex == kNone) continue;
            const std::size_t img = image_of_op[m.op];
            if (assigned.count(m.vertex)) continue;
            if (image_vertex[img] == kNone) {
                image_vertex[img] = m.vertex;
                assigned[m.vertex] = img;
            } else {
                // Second vertex sitting on an already-owned image: fold it in.
                target[m.vertex] = image_vertex[img];
                assigned[m.vertex] = img;
            }
        }
        for (std::size_t m = 0; m < images.size(); ++m) {
            if (image_vertex[m] == kNone) {
                appended.push_back(images[m]);
            } else {
                new_rel[image_vertex[m]] = images[m];
            }
        }
    }

    UnitCell moved = merged;
    for (std::size_t i = 0; i < n; ++i) {
        if (target[i] != i) {
            ++stats.nodes_removed;
            continue;
        }
        if ((new_rel[i] - rel[i]).norm() > kMoveEps * side) ++stats.nodes_moved;
        moved.vertices[i] = frame.center + new_rel[i];
    }
    // Folded vertices must route to a surviving vertex.
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t t = target[i];
        while (target[t] != t) t = target[t];
        target[i] = t;
    }
    UnitCell out = compact(moved, target);
    stats.edges_removed += count_lost_edges(merged, out);
    for (const auto& a : appended) out.vertices.push_back(frame.center + a);
    stats.nodes_added += appended.size();

    if (stats_out) *stats_out += stats;
    return out;
}

namespace {

std::size_t nearest_vertex(const std::vector<Vec3>& verts, const Vec3& p, double tol) {
    std::size_t best = kNone;
    double best_d = tol;
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const double d = (verts[i] - p).norm();
        if (d <= best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

void add_edge(std::set<Edge>& edges, std::size_t a, std::size_t b) {
    if (a == b) return;
    edges.insert({std::min(a, b), std::max(a, b)});
}

}  // namespace

UnitCell refine_edges(const UnitCell& cell, const RefineConfig& cfg, const Frame& frame,
                      StageStats* stats_out) {
    StageStats stats;
    const double side = frame.side;
    const double tol = cfg.pair_tol * side;
    UnitCell work = canonical_clean(cell);
    std::set<Edge> edges(work.edges.begin(), work.edges.end());
    const std::size_t initial_edges = edges.size();
    stats.edges_removed += cell.edges.size() - work.edges.size();

    // (1) closure under the group
    for (const auto& [u, v] : work.edges) {
        for (const auto& op : cfg.group.ops()) {
            if (op.is_identity()) continue;
            const std::size_t a =
                nearest_vertex(work.vertices, apply_symmetry(op, work.vertices[u], frame), tol);
            const std::size_t b =
                nearest_vertex(work.vertices, apply_symmetry(op, work.vertices[v], frame), tol);
            if (a != kNone && b != kNone) add_edge(edges, a, b);
        }
    }

    // (2) periodic boundary partners
    auto& verts = work.vertices;
    for (std::size_t i = 0; i < verts.size(); ++i) {
        Vec3 p = verts[i];
        for (int axis = 0; axis < 3; ++axis) {
            if (std::abs(p[axis] - frame.face_min(axis)) <= tol) {
                p[axis] = frame.face_min(axis);
            } else if (std::abs(p[axis] - frame.face_max(axis)) <= tol) {
                p[axis] = frame.face_max(axis);
            }
        }
        if ((p - verts[i]).norm() > kMoveEps * side) ++stats.nodes_moved;
        verts[i] = p;
    }
    for (int axis = 0; axis < 3; ++axis) {
        const int a1 = (axis + 1) % 3;
        const int a2 = (axis + 2) % 3;
        const double lo = frame.face_min(axis);
        const double hi = frame.face_max(axis);
        std::vector<std::size_t> on_min;
        std::vector<std::size_t> on_max;
        for (std::size_t i = 0; i < verts.size(); ++i) {
            if (verts[i][axis] == lo) on_min.push_back(i);
            if (verts[i][axis] == hi) on_max.push_back(i);
        }
        std::map<std::size_t, std::size_t> partner;
        std::set<std::size_t> taken;
        for (std::size_t m : on_min) {
            std::size_t best = kNone;
            double best_d = tol;
            for (std::size_t x : on_max) {
                if (taken.count(x)) continue;
                const double d = std::hypot(verts[m][a1] - verts[x][a1], verts[m][a2] - verts[x][a2]);
                if (d <= best_d) {
                    best_d = d;
                    best = x;
                }
            }
            if (best == kNone) continue;
            taken.insert(best);
            partner[m] = best;
            partner[best] = m;
            for (int c : {a1, a2}) {
                const double mean = 0.5 * (verts[m][c] + verts[best][c]);
                if (std::abs(verts[m][c] - mean) > kMoveEps * side ||
                    std::abs(verts[best][c] - mean) > kMoveEps * side) {
                    ++stats.nodes_moved;
                }
                verts[m][c] = mean;
                verts[best][c] = mean;
            }
        }

        // Unmatched boundary vertices get a translated copy, but only if some
        // in-face edge can come along; a bare copy would be dropped as
        // isolated in step (3).
        auto same_face = [&](std::size_t i, double face) { return verts[i][axis] == face; };
        std::vector<std::size_t> unmatched;
        for (std::size_t i : on_min) {
            if (!partner.count(i)) unmatched.push_back(i);
        }
        for (std::size_t i : on_max) {
            if (!partner.count(i)) unmatched.push_back(i);
        }
        std::map<std::size_t, std::size_t> copy_of;
        std::vector<std::pair<std::size_t, std::size_t>> pending;  // (unmatched, in-face neighbour)
        for (std::size_t i : unmatched) {
            const double face = verts[i][axis];
            for (const auto& [a, b] : edges) {
                if (a != i && b != i) continue;
                const std::size_t other = a == i ? b : a;
                if (same_face(other, face)) pending.emplace_back(i, other);
            }
        }
        std::set<std::size_t> unmatched_set(unmatched.begin(), unmatched.end());
        for (const auto& [i, other] : pending) {
            const bool other_has_image = partner.count(other) || unmatched_set.count(other);
            if (!other_has_image) continue;
            auto image_of = [&](std::size_t v) {
                if (auto it = partner.find(v); it != partner.end()) return it->second;
                if (auto it = copy_of.find(v); it != copy_of.end()) return it->second;
                Vec3 p = verts[v];
                p[axis] = verts[v][axis] == lo ? hi : lo;
                verts.push_back(p);
                ++stats.nodes_added;
                copy_of[v] = verts.size() - 1;
                return verts.size() - 1;
            };
            const std::size_t ci = image_of(i);
            const std::size_t co = image_of(other);
            add_edge(edges, ci, co);
        }
    }

    // (3) drop redundant structure
    UnitCell out;
    out.name = work.name;
    std::vector<std::size_t> degree(verts.size(), 0);
    for (const auto& [a, b] : edges) {
        ++degree[a];
        ++degree[b];
    }
    const bool drop_isolated = !edges.empty();
    std::vector<std::size_t> new_index(verts.size(), kNone);
    for (std::size_t i = 0; i < verts.size(); ++i) {
        if (drop_isolated && degree[i] == 0) {
            ++stats.nodes_removed;
            continue;
        }
        new_index[i] = out.vertices.size();
        out.vertices.push_back(verts[i]);
    }
    for (const auto& [a, b] : edges) out.edges.emplace_back(new_index[a], new_index[b]);
    stats.edges_added += edges.size() - initial_edges;
    out = sorted_clean(out);

    if (stats_out) *stats_out += stats;
    return out;
}

RefineResult refine(const UnitCell& cell, const RefineConfig& cfg) {
    cfg.check();
    if (cell.vertices.empty()) throw LatticeError("empty cell");
    const Frame frame = resolve_frame(cell, cfg.frame_policy);
    RefineResult result;
    result.cell = sorted_clean(cell);
    for (int cycle = 0; cycle < cfg.max_cycles; ++cycle) {
        CycleRecord rec;
        UnitCell nodes = refine_nodes(result.cell, cfg, frame, &rec.nodes);
        result.cell = refine_edges(nodes, cfg, frame, &rec.edges);
        rec.report = validate(result.cell, cfg.target_threshold, cfg.group, frame);
        const bool stable = rec.nodes.total() + rec.edges.total() == 0;
        const bool valid = rec.report.intra_valid && rec.report.inter_valid;
        result.trace.cycles.push_back(rec);
        if (valid && stable) {
            result.trace.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace latticeforge
