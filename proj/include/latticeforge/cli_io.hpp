#pragma once

#include "latticeforge/core.hpp"
#include "latticeforge/corrupt.hpp"
#include "latticeforge/homogenize.hpp"
#include "latticeforge/refine.hpp"
#include "latticeforge/validity.hpp"

#include <optional>
#include <string>
#include <vector>

namespace latticeforge {

/// Malformed or inconsistent file content.
class DocumentError : public LatticeError {
  public:
    using LatticeError::LatticeError;
};

/// JSON lattice file: name, cell_size, frame_center, vertices, edges and an
/// optional strut_radius.
struct LatticeDocument {
    UnitCell cell;
    Frame frame;
    std::optional<double> strut_radius;
};

LatticeDocument parse_lattice(const std::string& text);
std::string format_lattice(const LatticeDocument& doc);
LatticeDocument read_lattice(const std::string& path);
void write_lattice(const LatticeDocument& doc, const std::string& path);
/// Convenience: the cell in the unit frame, no strut radius.
void write_lattice(const UnitCell& cell, const std::string& path);

/// Wavefront OBJ polylines; tile > 1 repeats the cell on a tile^3 grid
/// spaced by the frame side.
std::string obj_text(const UnitCell& cell, const Frame& frame, int tile = 1);
void export_obj(const UnitCell& cell, const Frame& frame, const std::string& path, int tile = 1);

/// `threshold,intra_pct,inter_pct,n` with LF endings.
std::string sweep_csv(const ThresholdSweep& sweep);

/// Flat JSON object E_x ... nu_xy, rel_density.
std::string properties_json(const ElasticProperties& props);
/// Reads the nine engineering values from a properties document (other keys
/// such as rel_density are allowed).
PropertyVector parse_properties(const std::string& text);

std::string trace_json(const RefineTrace& trace);

struct DatasetEntry {
    std::string clean_name;
    std::uint64_t seed = 0;
    std::string corrupted_path;  // relative to the dataset directory
    std::string clean_path;
};

struct DatasetManifest {
    CorruptionConfig config;
    std::uint64_t seed = 0;
    std::size_t n_per_entry = 0;
    std::vector<DatasetEntry> entries;
};

/// Writes every pair as two lattice files plus manifest.json.
DatasetManifest write_dataset(const std::string& dir, const std::vector<CorruptedPair>& pairs,
                              const CorruptionConfig& cfg, std::uint64_t seed, std::size_t n_per_entry);
DatasetManifest read_manifest(const std::string& dir);

/// Command-line entry point; returns the process exit code
/// (0 ok, 1 usage error, 2 data or validation error).
int run_cli(int argc, const char* const* argv);

}  // namespace latticeforge
