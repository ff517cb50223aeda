#include "latticeforge/cli_io.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace latticeforge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DocumentError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DocumentError("cannot write " + path);
    out << text;
    if (!out) throw DocumentError("write failed for " + path);
}

double number_at(const json& v, const std::string& where) {
    if (!v.is_number()) throw DocumentError(where + ": expected a number");
    return v.get<double>();
}

const json& require(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw DocumentError(std::string("missing key \"") + key + "\"");
    return *it;
}

std::string fixed(double v, int digits) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    return std::string(buf, r.ptr);
}

std::string shortest(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace

LatticeDocument parse_lattice(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DocumentError(std::string("parse error: ") + e.what());
    }
    if (!j.is_object()) throw DocumentError("parse error: top level must be an object");
    static const std::set<std::string> known{"name", "cell_size", "frame_center", "vertices", "edges",
                                             "strut_radius"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw DocumentError("unknown field \"" + key + "\"");
    }
    LatticeDocument doc;
    const json& name = require(j, "name");
    if (!name.is_string()) throw DocumentError("name: expected a string");
    doc.cell.name = name.get<std::string>();
    doc.frame.side = number_at(require(j, "cell_size"), "cell_size");
    if (!(doc.frame.side > 0)) throw DocumentError("cell_size must be positive");
    const json& fc = require(j, "frame_center");
    if (!fc.is_array() || fc.size() != 3) throw DocumentError("frame_center: expected 3 numbers");
    for (int a = 0; a < 3; ++a) doc.frame.center[a] = number_at(fc[static_cast<std::size_t>(a)], "frame_center");

    const json& verts = require(j, "vertices");
    if (!verts.is_array()) throw DocumentError("vertices: expected an array");
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const std::string where = "vertices[" + std::to_string(i) + "]";
        const json& v = verts[i];
        if (!v.is_array() || v.size() != 3) throw DocumentError(where + ": expected [x, y, z]");
        Vec3 p;
        for (int a = 0; a < 3; ++a) p[a] = number_at(v[static_cast<std::size_t>(a)], where);
        doc.cell.vertices.push_back(p);
    }
    const json& edges = require(j, "edges");
    if (!edges.is_array()) throw DocumentError("edges: expected an array");
    std::set<Edge> seen;
    const std::size_t n = doc.cell.vertices.size();
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const json& e = edges[k];
        const std::string where = "edges[" + std::to_string(k) + "]";
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
            throw DocumentError(where + ": expected [i, j] with integer indices");
        }
        const long long a = e[0].get<long long>();
        const long long b = e[1].get<long long>();
        if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n) {
            throw DocumentError(where + " = [" + std::to_string(a) + ", " + std::to_string(b) +
                                "]: index out of range for " + std::to_string(n) + " vertices");
        }
        if (a == b) throw DocumentError(where + ": self-loop");
        Edge edge = a < b ? Edge{static_cast<std::size_t>(a), static_cast<std::size_t>(b)}
                          : Edge{static_cast<std::size_t>(b), static_cast<std::size_t>(a)};
        if (!seen.insert(edge).second) throw DocumentError(where + ": duplicate edge");
        doc.cell.edges.push_back(edge);
    }
    if (j.contains("strut_radius")) {
        const double r = number_at(j["strut_radius"], "strut_radius");
        if (!(r > 0)) throw DocumentError("strut_radius must be positive");
        doc.strut_radius = r;
    }
    return doc;
}

std::string format_lattice(const LatticeDocument& doc) {
    // nlohmann writes the shortest representation that parses back to the
    // same double, so the text round-trips bit for bit.
    json j = json::object();
    j["name"] = doc.cell.name;
    j["cell_size"] = doc.frame.side;
    j["frame_center"] = {doc.frame.center.x(), doc.frame.center.y(), doc.frame.center.z()};
    json verts = json::array();
    for (const Vec3& v : doc.cell.vertices) verts.push_back({v.x(), v.y(), v.z()});
    j["vertices"] = std::move(verts);
    json edges = json::array();
    for (const auto& [a, b] : doc.cell.edges) edges.push_back({a, b});
    j["edges"] = std::move(edges);
    if (doc.strut_radius) j["strut_radius"] = *doc.strut_radius;
    return j.dump(1) + "\n";
}

LatticeDocument read_lattice(const std::string& path) {
    try {
        return parse_lattice(slurp(path));
    } catch (const DocumentError& e) {
        throw DocumentError(path + ": " + e.what());
    }
}

void write_lattice(const LatticeDocument& doc, const std::string& path) { spill(path, format_lattice(doc)); }

void write_lattice(const UnitCell& cell, const std::string& path) {
    write_lattice(LatticeDocument{cell, Frame::unit(), std::nullopt}, path);
}

std::string obj_text(const UnitCell& cell, const Frame& frame, int tile) {
    if (tile < 1) throw LatticeError("tile must be at least 1");
    std::string out;
    std::string edges;
    std::size_t base = 0;
    for (int a = 0; a < tile; ++a) {
        for (int b = 0; b < tile; ++b) {
            for (int c = 0; c < tile; ++c) {
                const Vec3 shift = frame.side * Vec3(a, b, c);
                for (const Vec3& v : cell.vertices) {
                    const Vec3 p = v + shift;
                    out += "v " + fixed(p.x(), 6) + " " + fixed(p.y(), 6) + " " + fixed(p.z(), 6) + "\n";
                }
                for (const auto& [i, j] : cell.edges) {
                    edges += "l " + std::to_string(base + i + 1) + " " + std::to_string(base + j + 1) + "\n";
                }
                base += cell.vertices.size();
            }
        }
    }
    return out + edges;
}

void export_obj(const UnitCell& cell, const Frame& frame, const std::string& path, int tile) {
    spill(path, obj_text(cell, frame, tile));
}

std::string sweep_csv(const ThresholdSweep& sweep) {
    std::string out = "threshold,intra_pct,inter_pct,n\n";
    for (const SweepRow& r : sweep.rows) {
        out += shortest(r.threshold) + "," + fixed(r.intra_pct, 2) + "," + fixed(r.inter_pct, 2) + "," +
               std::to_string(r.n) + "\n";
    }
    return out;
}

namespace {
const char* const kPropertyKeys[9] = {"E_x", "E_y", "E_z", "G_yz", "G_xz", "G_xy", "nu_yz", "nu_xz", "nu_xy"};
}

std::string properties_json(const ElasticProperties& props) {
    json j = json::object();
    const PropertyVector v = props.vector();
    for (std::size_t i = 0; i < 9; ++i) j[kPropertyKeys[i]] = v[i];
    j["rel_density"] = props.relative_density;
    return j.dump(1) + "\n";
}

PropertyVector parse_properties(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DocumentError(std::string("parse error: ") + e.what());
    }
    if (!j.is_object()) throw DocumentError("properties: top level must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = key == "rel_density";
        for (const char* k : kPropertyKeys) ok = ok || key == k;
        if (!ok) throw DocumentError("unknown field \"" + key + "\"");
    }
    PropertyVector p{};
    for (std::size_t i = 0; i < 9; ++i) p[i] = number_at(require(j, kPropertyKeys[i]), kPropertyKeys[i]);
    return p;
}

std::string trace_json(const RefineTrace& trace) {
    auto stats = [](const StageStats& s) {
        return json{{"nodes_moved", s.nodes_moved},   {"nodes_added", s.nodes_added},
                    {"nodes_removed", s.nodes_removed}, {"edges_added", s.edges_added},
                    {"edges_removed", s.edges_removed}};
    };
    json cycles = json::array();
    for (const CycleRecord& c : trace.cycles) {
        cycles.push_back({{"node_stage", stats(c.nodes)},
                          {"edge_stage", stats(c.edges)},
                          {"intra_valid", c.report.intra_valid},
                          {"inter_valid", c.report.inter_valid},
                          {"worst_pair_deviation", c.report.worst_pair_deviation},
                          {"worst_boundary_excess", c.report.worst_boundary_excess},
                          {"components", c.report.component_count}});
    }
    return json{{"converged", trace.converged}, {"cycles", cycles}}.dump(1) + "\n";
}

DatasetManifest write_dataset(const std::string& dir, const std::vector<CorruptedPair>& pairs,
                              const CorruptionConfig& cfg, std::uint64_t seed, std::size_t n_per_entry) {
    fs::create_directories(dir);
    DatasetManifest m{cfg, seed, n_per_entry, {}};
    json list = json::array();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "pair_%05zu", k);
        DatasetEntry e{pairs[k].clean_name, pairs[k].seed, std::string(stem) + "_corrupted.json",
                       std::string(stem) + "_clean.json"};
        write_lattice(LatticeDocument{pairs[k].corrupted, Frame::unit(), std::nullopt},
                      (fs::path(dir) / e.corrupted_path).string());
        write_lattice(LatticeDocument{pairs[k].clean, Frame::unit(), std::nullopt},
                      (fs::path(dir) / e.clean_path).string());
        list.push_back({{"clean_name", e.clean_name}, {"seed", e.seed}, {"corrupted", e.corrupted_path},
                        {"clean", e.clean_path}});
        m.entries.push_back(std::move(e));
    }
    json j{{"seed", seed},
           {"n_per_entry", n_per_entry},
           {"corruption",
            {{"sigma", cfg.sigma},
             {"p_node_remove", cfg.p_node_remove},
             {"p_node_add", cfg.p_node_add},
             {"p_edge_remove", cfg.p_edge_remove},
             {"p_edge_add", cfg.p_edge_add}}},
           {"pairs", list}};
    spill((fs::path(dir) / "manifest.json").string(), j.dump(1) + "\n");
    return m;
}

DatasetManifest read_manifest(const std::string& dir) {
    const std::string path = (fs::path(dir) / "manifest.json").string();
    DatasetManifest m;
    try {
        const json j = json::parse(slurp(path));
        m.seed = j.at("seed").get<std::uint64_t>();
        m.n_per_entry = j.at("n_per_entry").get<std::size_t>();
        const json& c = j.at("corruption");
        m.config.sigma = c.at("sigma").get<double>();
        m.config.p_node_remove = c.at("p_node_remove").get<double>();
        m.config.p_node_add = c.at("p_node_add").get<double>();
        m.config.p_edge_remove = c.at("p_edge_remove").get<double>();
        m.config.p_edge_add = c.at("p_edge_add").get<double>();
        m.config.seed = m.seed;
        for (const json& e : j.at("pairs")) {
            m.entries.push_back({e.at("clean_name").get<std::string>(), e.at("seed").get<std::uint64_t>(),
                                 e.at("corrupted").get<std::string>(), e.at("clean").get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw DocumentError(path + ": " + e.what());
    }
    return m;
}

}  // namespace latticeforge
