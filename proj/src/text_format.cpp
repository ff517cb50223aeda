#include "latticeforge/refine.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace latticeforge {

TextParseError::TextParseError(std::size_t line, const std::string& reason)
    : LatticeError("line " + std::to_string(line) + ": " + reason), line_(line) {}

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

std::string token_name(const std::string& name) {
    if (name.empty()) return "unnamed";
    std::string out = name;
    for (char& c : out) {
        if (std::isspace(static_cast<unsigned char>(c))) c = '_';
    }
    return out;
}

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_real(const std::string& tok, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw TextParseError(line, "expected a number, got '" + tok + "'");
    }
    return v;
}

std::size_t parse_index(const std::string& tok, std::size_t line) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw TextParseError(line, "expected a non-negative integer, got '" + tok + "'");
    }
    return v;
}

}  // namespace

std::string serialize_text(const UnitCell& cell) {
    return serialize_text(cell, bounding_frame(cell));
}

std::string serialize_text(const UnitCell& cell, const Frame& frame) {
    const UnitCell clean = sorted_clean(cell);
    std::string out;
    out += "LATTICE " + token_name(cell.name) + "\n";
    out += "FRAME " + fixed6(frame.center.x()) + " " + fixed6(frame.center.y()) + " " +
           fixed6(frame.center.z()) + " " + fixed6(frame.side) + "\n";
    for (std::size_t i = 0; i < clean.vertices.size(); ++i) {
        const auto& v = clean.vertices[i];
        out += "NODE " + std::to_string(i) + " " + fixed6(v.x()) + " " + fixed6(v.y()) + " " +
               fixed6(v.z()) + "\n";
    }
    for (const auto& [a, b] : clean.edges) {
        out += "EDGE " + std::to_string(a) + " " + std::to_string(b) + "\n";
    }
    out += "END\n";
    return out;
}

ParsedText parse_text(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    ParsedText out;
    enum class Section { header, frame, nodes, edges, done } section = Section::header;
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const std::size_t lineno = k + 1;
        const auto toks = split_ws(lines[k]);
        if (section == Section::done) {
            if (!toks.empty()) throw TextParseError(lineno, "content after END");
            continue;
        }
        if (toks.empty()) throw TextParseError(lineno, "empty line");
        const std::string& kw = toks[0];
        switch (section) {
            case Section::header:
                if (kw != "LATTICE" || toks.size() != 2) {
                    throw TextParseError(lineno, "expected 'LATTICE <name>'");
                }
                out.cell.name = toks[1];
                section = Section::frame;
                break;
            case Section::frame:
                if (kw != "FRAME" || toks.size() != 5) {
                    throw TextParseError(lineno, "expected 'FRAME <cx> <cy> <cz> <side>'");
                }
                out.frame.center = Vec3(parse_real(toks[1], lineno), parse_real(toks[2], lineno),
                                        parse_real(toks[3], lineno));
                out.frame.side = parse_real(toks[4], lineno);
                if (!(out.frame.side > 0.0)) throw TextParseError(lineno, "frame side must be positive");
                section = Section::nodes;
                break;
            case Section::nodes:
            case Section::edges:
                if (kw == "END") {
                    if (toks.size() != 1) throw TextParseError(lineno, "unexpected tokens after END");
                    section = Section::done;
                } else if (kw == "NODE" && section == Section::nodes) {
                    if (toks.size() != 5) throw TextParseError(lineno, "expected 'NODE <id> <x> <y> <z>'");
                    const std::size_t id = parse_index(toks[1], lineno);
                    if (id != out.cell.vertices.size()) {
                        throw TextParseError(lineno, "node ids must ascend from 0; expected " +
                                                         std::to_string(out.cell.vertices.size()));
                    }
                    out.cell.vertices.emplace_back(parse_real(toks[2], lineno),
                                                   parse_real(toks[3], lineno),
                                                   parse_real(toks[4], lineno));
                } else if (kw == "EDGE") {
                    section = Section::edges;
                    if (toks.size() != 3) throw TextParseError(lineno, "expected 'EDGE <i> <j>'");
                    const std::size_t a = parse_index(toks[1], lineno);
                    const std::size_t b = parse_index(toks[2], lineno);
                    const std::size_t n = out.cell.vertices.size();
                    if (a >= n || b >= n) {
                        throw TextParseError(lineno, "edge references unknown node " +
                                                         std::to_string(a >= n ? a : b));
                    }
                    if (a >= b) throw TextParseError(lineno, "edge must satisfy i < j");
                    if (!out.cell.edges.empty() && !(out.cell.edges.back() < Edge{a, b})) {
                        throw TextParseError(lineno, "edges must ascend lexicographically");
                    }
                    out.cell.edges.emplace_back(a, b);
                } else {
                    throw TextParseError(lineno, "unexpected keyword '" + kw + "'");
                }
                break;
            case Section::done:
                break;
        }
    }
    if (section != Section::done) throw TextParseError(lines.size() + 1, "missing END");
    return out;
}

}  // namespace latticeforge
