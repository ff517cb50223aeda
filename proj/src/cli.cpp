#include "latticeforge/catalog.hpp"
#include "latticeforge/cli_io.hpp"
#include "latticeforge/gen/model_io.hpp"
#include "latticeforge/gen/train.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <iostream>
#include <map>

namespace latticeforge {

namespace {

namespace fs = std::filesystem;

/// Raised by command bodies when the verdict (not the input) is negative.
struct ValidationFailure {};

std::string shortest(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::vector<UnitCell> load_population(const std::string& dir) {
    std::vector<UnitCell> out;
    if (fs::exists(fs::path(dir) / "manifest.json")) {
        for (const auto& e : read_manifest(dir).entries) {
            out.push_back(read_lattice((fs::path(dir) / e.corrupted_path).string()).cell);
        }
        return out;
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(read_lattice(f).cell);
    return out;
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DocumentError("cannot write " + path);
        out << text;
    }
}

const std::map<std::string, SymmetryPreset> kGroups{
    {"inversion", SymmetryPreset::inversion}, {"mirrors", SymmetryPreset::mirrors}, {"cubic", SymmetryPreset::cubic}};
const std::map<std::string, FramePolicy> kFrames{{"unit", FramePolicy::unit}, {"fit", FramePolicy::fit}};

void add_corruption_flags(CLI::App* cmd, CorruptionConfig& cfg) {
    cmd->add_option("--p-node-remove", cfg.p_node_remove, "Per-vertex removal probability")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--p-node-add", cfg.p_node_add, "Vertex insertion rate")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--p-edge-remove", cfg.p_edge_remove, "Per-edge removal probability")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--p-edge-add", cfg.p_edge_add, "Edge insertion rate")->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"latticeforge: periodic lattice unit cells"};
    app.name("latticeforge");
    app.require_subcommand(1);
    std::function<void()> action;

    // catalog
    auto* catalog_cmd = app.add_subcommand("catalog", "List or emit catalog cells");
    catalog_cmd->require_subcommand(1);
    catalog_cmd->add_subcommand("list", "Print catalog names")->callback([&] {
        action = [] {
            for (const auto& n : catalog::list()) std::cout << n << "\n";
        };
    });
    std::string emit_name, emit_out;
    auto* emit_cmd = catalog_cmd->add_subcommand("emit", "Write a catalog cell as a lattice document");
    emit_cmd->add_option("name", emit_name, "Catalog entry")->required()->check(CLI::IsMember(catalog::list()));
    emit_cmd->add_option("-o,--out", emit_out, "Output path (default stdout)");
    emit_cmd->callback([&] {
        action = [&] {
            emit(format_lattice(LatticeDocument{catalog::make(emit_name), Frame::unit(), std::nullopt}), emit_out);
        };
    });

    // validate
    std::string val_file, val_group = "mirrors", val_frame = "unit";
    std::vector<double> val_thresholds;
    auto* val_cmd = app.add_subcommand("validate", "Intra/inter validity at each threshold");
    val_cmd->add_option("file", val_file, "Lattice document")->required()->check(CLI::ExistingFile);
    val_cmd->add_option("--thresholds", val_thresholds, "Comma-separated thresholds")->required()->delimiter(',');
    val_cmd->add_option("--symmetry", val_group, "inversion|mirrors|cubic")->check(CLI::IsMember({"inversion", "mirrors", "cubic"}));
    val_cmd->add_option("--frame", val_frame, "unit|fit")->check(CLI::IsMember({"unit", "fit"}));
    val_cmd->callback([&] {
        action = [&] {
            const UnitCell cell = read_lattice(val_file).cell;
            const SymmetryGroup group(kGroups.at(val_group));
            const Frame frame = resolve_frame(cell, kFrames.at(val_frame));
            bool all = true;
            for (double t : val_thresholds) {
                const ValidityReport r = validate(cell, t, group, frame);
                std::cout << shortest(t) << "," << (r.intra_valid ? "valid" : "invalid") << ","
                          << (r.inter_valid ? "valid" : "invalid") << "\n";
                all = all && r.intra_valid && r.inter_valid;
            }
            if (!all) throw ValidationFailure{};
        };
    });

    // refine
    std::string ref_file, ref_out, ref_trace, ref_group = "mirrors";
    RefineConfig ref_cfg;
    auto* ref_cmd = app.add_subcommand("refine", "Symmetry and periodicity repair");
    ref_cmd->add_option("file", ref_file, "Lattice document")->required()->check(CLI::ExistingFile);
    ref_cmd->add_option("-o,--out", ref_out, "Output lattice document")->required();
    ref_cmd->add_option("--cycles", ref_cfg.max_cycles, "Maximum refinement cycles")->check(CLI::PositiveNumber);
    ref_cmd->add_option("--group", ref_group, "inversion|mirrors|cubic")->check(CLI::IsMember({"inversion", "mirrors", "cubic"}));
    ref_cmd->add_option("--target", ref_cfg.target_threshold, "Validity threshold to reach");
    ref_cmd->add_option("--trace", ref_trace, "Write the per-cycle trace as JSON");
    ref_cmd->callback([&] {
        action = [&] {
            LatticeDocument doc = read_lattice(ref_file);
            ref_cfg.group = SymmetryGroup(kGroups.at(ref_group));
            RefineResult r = refine(doc.cell, ref_cfg);
            if (!ref_trace.empty()) emit(trace_json(r.trace), ref_trace);
            doc.cell = std::move(r.cell);
            doc.frame = resolve_frame(doc.cell, ref_cfg.frame_policy);
            write_lattice(doc, ref_out);
        };
    });

    // homogenize
    std::string hom_file, hom_out;
    double hom_radius = 0, hom_nu = 0.3, hom_e = 1.0;
    auto* hom_cmd = app.add_subcommand("homogenize", "Effective elastic properties of the frame");
    hom_cmd->add_option("file", hom_file, "Lattice document")->required()->check(CLI::ExistingFile);
    hom_cmd->add_option("--radius", hom_radius, "Strut radius (default: the document's strut_radius)")
        ->check(CLI::PositiveNumber);
    hom_cmd->add_option("--nu-s", hom_nu, "Solid Poisson ratio")->check(CLI::Range(-0.999, 0.499));
    hom_cmd->add_option("--youngs", hom_e, "Solid Young's modulus")->check(CLI::PositiveNumber);
    hom_cmd->add_option("-o,--out", hom_out, "Output path (default stdout)");
    hom_cmd->callback([&] {
        action = [&] {
            const LatticeDocument doc = read_lattice(hom_file);
            double r = hom_radius;
            if (r <= 0) {
                if (!doc.strut_radius) throw DocumentError("no --radius given and the document has no strut_radius");
                r = *doc.strut_radius;
            }
            MaterialSpec mat;
            mat.youngs = hom_e;
            mat.poisson = hom_nu;
            emit(properties_json(compute_properties(doc.cell, StrutSection{r}, mat)), hom_out);
        };
    });

    // corrupt
    std::string cor_file, cor_out;
    CorruptionConfig cor_cfg;
    auto* cor_cmd = app.add_subcommand("corrupt", "Seeded structural and coordinate corruption");
    cor_cmd->add_option("file", cor_file, "Lattice document")->required()->check(CLI::ExistingFile);
    cor_cmd->add_option("--sigma", cor_cfg.sigma, "Coordinate noise, fraction of side")->required()->check(CLI::NonNegativeNumber);
    cor_cmd->add_option("--seed", cor_cfg.seed, "Random seed")->required();
    add_corruption_flags(cor_cmd, cor_cfg);
    cor_cmd->add_option("-o,--out", cor_out, "Output lattice document")->required();
    cor_cmd->callback([&] {
        action = [&] {
            LatticeDocument doc = read_lattice(cor_file);
            doc.cell = corrupt(doc.cell, cor_cfg);
            write_lattice(doc, cor_out);
        };
    });

    // make-dataset
    std::string ds_out;
    std::size_t ds_n = 0;
    std::uint64_t ds_seed = 0;
    CorruptionConfig ds_cfg;
    std::vector<std::string> ds_entries = catalog::list();
    auto* ds_cmd = app.add_subcommand("make-dataset", "Corrupted/clean pairs from the catalog");
    ds_cmd->add_option("--out", ds_out, "Output directory")->required();
    ds_cmd->add_option("--n", ds_n, "Pairs per catalog entry")->required()->check(CLI::PositiveNumber);
    ds_cmd->add_option("--seed", ds_seed, "Random seed")->required();
    ds_cmd->add_option("--sigma", ds_cfg.sigma, "Coordinate noise, fraction of side")->check(CLI::NonNegativeNumber);
    add_corruption_flags(ds_cmd, ds_cfg);
    ds_cmd->add_option("--entries", ds_entries, "Catalog entries (comma-separated)")
        ->delimiter(',')
        ->check(CLI::IsMember(catalog::list()));
    ds_cmd->callback([&] {
        action = [&] {
            ds_cfg.seed = ds_seed;
            const auto pairs = make_pairs(ds_entries, ds_cfg, ds_n, ds_seed);
            write_dataset(ds_out, pairs, ds_cfg, ds_seed, ds_n);
            std::cout << pairs.size() << " pairs written to " << ds_out << "\n";
        };
    });

    // train
    std::string tr_data, tr_out;
    gen::GenConfig tr_cfg;
    double tr_radius = 0.02;
    bool tr_no_augment = false;
    auto* tr_cmd = app.add_subcommand("train", "Fit the coordinate denoiser and edge predictor");
    tr_cmd->add_option("--data", tr_data, "Dataset directory (its clean cells are used)")->required()->check(CLI::ExistingDirectory);
    tr_cmd->add_option("--epochs", tr_cfg.epochs, "Training epochs")->required()->check(CLI::NonNegativeNumber);
    tr_cmd->add_option("--out", tr_out, "Model file")->required();
    tr_cmd->add_option("--seed", tr_cfg.seed, "Random seed")->required();
    tr_cmd->add_option("--radius", tr_radius, "Strut radius for the conditioning properties")->check(CLI::PositiveNumber);
    tr_cmd->add_option("--repeats", tr_cfg.repeats, "Augmented copies per cell per epoch")->check(CLI::PositiveNumber);
    tr_cmd->add_option("--batch", tr_cfg.batch_size, "Batch size")->check(CLI::PositiveNumber);
    tr_cmd->add_option("--lr", tr_cfg.learning_rate, "Peak learning rate")->check(CLI::PositiveNumber);
    tr_cmd->add_flag("--no-augment", tr_no_augment, "Disable rotation/scale augmentation");
    tr_cmd->callback([&] {
        action = [&] {
            std::vector<UnitCell> clean;
            std::vector<std::string> names;
            for (const auto& e : read_manifest(tr_data).entries) {
                if (std::find(names.begin(), names.end(), e.clean_name) != names.end()) continue;
                names.push_back(e.clean_name);
                clean.push_back(read_lattice((fs::path(tr_data) / e.clean_path).string()).cell);
            }
            if (clean.empty()) throw DocumentError("dataset has no pairs");
            gen::ModelParams model = gen::init_model(tr_cfg);
            gen::TrainOptions opt;
            opt.augment = !tr_no_augment;
            opt.on_epoch = [&](const gen::EpochStats& s) {
                if (s.epoch == 1 || s.epoch == tr_cfg.epochs || s.epoch % 10 == 0) {
                    std::cerr << "epoch " << s.epoch << " coord " << s.coord_loss << " edge " << s.edge_loss << "\n";
                }
            };
            gen::train(model, gen::with_properties(clean, tr_radius), opt);
            gen::save_model(model, tr_out);
        };
    });

    // sample
    std::string sa_model, sa_props, sa_out;
    int sa_n = 0;
    std::uint64_t sa_seed = 0;
    auto* sa_cmd = app.add_subcommand("sample", "Generate a cell for a property vector");
    sa_cmd->add_option("--model", sa_model, "Model file")->required()->check(CLI::ExistingFile);
    sa_cmd->add_option("--props", sa_props, "Properties document")->required()->check(CLI::ExistingFile);
    sa_cmd->add_option("--n-vertices", sa_n, "Vertex count (default: nearest training cell's)")->check(CLI::PositiveNumber);
    sa_cmd->add_option("--seed", sa_seed, "Random seed")->required();
    sa_cmd->add_option("-o,--out", sa_out, "Output lattice document")->required();
    sa_cmd->callback([&] {
        action = [&] {
            const gen::ModelParams model = gen::load_model(sa_model);
            std::ifstream in(sa_props, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            const PropertyVector p = parse_properties(ss.str());
            const int n = sa_n > 0 ? sa_n : model.default_vertex_count(p);
            if (n < 1) throw DocumentError("no --n-vertices given and the model has no reference cells");
            write_lattice(gen::sample_cell(model, p, n, sa_seed), sa_out);
        };
    });

    // sweep
    std::string sw_dir, sw_report, sw_group = "mirrors", sw_frame = "unit";
    std::vector<double> sw_thresholds;
    auto* sw_cmd = app.add_subcommand("sweep", "Validity percentages over a population");
    sw_cmd->add_option("--population", sw_dir, "Dataset or directory of lattice documents")->required()->check(CLI::ExistingDirectory);
    sw_cmd->add_option("--thresholds", sw_thresholds, "Comma-separated thresholds")->required()->delimiter(',');
    sw_cmd->add_option("--report", sw_report, "CSV output (default stdout)");
    sw_cmd->add_option("--symmetry", sw_group, "inversion|mirrors|cubic")->check(CLI::IsMember({"inversion", "mirrors", "cubic"}));
    sw_cmd->add_option("--frame", sw_frame, "unit|fit")->check(CLI::IsMember({"unit", "fit"}));
    sw_cmd->callback([&] {
        action = [&] {
            const auto pop = load_population(sw_dir);
            emit(sweep_csv(sweep(pop, sw_thresholds, SymmetryGroup(kGroups.at(sw_group)), kFrames.at(sw_frame))), sw_report);
        };
    });

    // export-obj
    std::string obj_file, obj_out;
    int obj_tile = 1;
    auto* obj_cmd = app.add_subcommand("export-obj", "Wavefront OBJ polylines");
    obj_cmd->add_option("file", obj_file, "Lattice document")->required()->check(CLI::ExistingFile);
    obj_cmd->add_option("-o,--out", obj_out, "OBJ path")->required();
    obj_cmd->add_option("--tile", obj_tile, "Copies per axis")->check(CLI::PositiveNumber);
    obj_cmd->callback([&] {
        action = [&] {
            const LatticeDocument doc = read_lattice(obj_file);
            export_obj(doc.cell, doc.frame, obj_out, obj_tile);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }
    try {
        if (action) action();
        return 0;
    } catch (const ValidationFailure&) {
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace latticeforge
