#include "latticeforge/gen/model_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace latticeforge::gen {

namespace {

constexpr const char* kMagic = "LATTICEFORGE-MODEL";

const char* kind_label(ModelFileError::Kind k) {
    switch (k) {
        case ModelFileError::Kind::version_mismatch: return "version mismatch";
        case ModelFileError::Kind::shape_mismatch: return "shape mismatch";
        case ModelFileError::Kind::corrupt_file: return "corrupt file";
        case ModelFileError::Kind::io: return "i/o error";
    }
    return "model file error";
}

[[noreturn]] void corrupt(const std::string& why) {
    throw ModelFileError(ModelFileError::Kind::corrupt_file, why);
}

std::uint64_t fnv1a(const std::string& bytes, std::size_t from) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = from; i < bytes.size(); ++i) {
        h ^= static_cast<unsigned char>(bytes[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

void put_f64(std::string& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64(const std::string& in, std::size_t pos) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

struct Named {
    std::string name;
    const Matrix* value;
};

std::vector<Named> payload_order(const ModelParams& m) {
    std::vector<Named> out;
    for (std::size_t i = 0; i < m.tensors.size(); ++i) out.push_back({m.tensors.name(i), &m.tensors[i]});
    out.push_back({"norm.mean", &m.prop_mean});
    out.push_back({"norm.std", &m.prop_std});
    out.push_back({"reference.props", &m.reference_props});
    out.push_back({"reference.counts", &m.reference_counts});
    return out;
}

}  // namespace

ModelFileError::ModelFileError(Kind kind, const std::string& detail)
    : LatticeError(std::string(kind_label(kind)) + ": " + detail), kind_(kind) {}

std::string serialize_model(const ModelParams& m) {
    using nlohmann::json;
    const GenConfig& c = m.config;
    json header;
    header["config"] = {{"n_max", c.n_max},
                        {"width", c.width},
                        {"heads", c.heads},
                        {"blocks", c.blocks},
                        {"edge_width", c.edge_width},
                        {"learning_rate", c.learning_rate},
                        {"batch_size", c.batch_size},
                        {"epochs", c.epochs},
                        {"repeats", c.repeats},
                        {"edge_loss_weight", c.edge_loss_weight},
                        {"edge_jitter", c.edge_jitter},
                        {"grad_clip", c.grad_clip},
                        {"seed", c.seed}};
    header["schedule"] = {{"steps", m.schedule.steps()},
                          {"beta_start", m.schedule.beta_start()},
                          {"beta_end", m.schedule.beta_end()}};
    std::string payload;
    json tensors = json::array();
    for (const auto& [name, value] : payload_order(m)) {
        tensors.push_back({{"name", name}, {"rows", value->rows()}, {"cols", value->cols()}});
        // Row-major so the byte layout does not depend on Eigen's storage order.
        for (Eigen::Index r = 0; r < value->rows(); ++r) {
            for (Eigen::Index k = 0; k < value->cols(); ++k) put_f64(payload, (*value)(r, k));
        }
    }
    header["tensors"] = tensors;
    header["payload_bytes"] = payload.size();
    header["payload_fnv1a"] = fnv1a(payload, 0);
    std::string out = std::string(kMagic) + "\nversion " + std::to_string(kModelFormatVersion) + "\n" +
                      header.dump() + "\n";
    out += payload;
    return out;
}

ModelParams deserialize_model(const std::string& bytes) {
    using nlohmann::json;
    std::size_t pos = 0;
    auto next_line = [&](const char* what) {
        const std::size_t nl = bytes.find('\n', pos);
        if (nl == std::string::npos) corrupt(std::string("missing ") + what);
        std::string line = bytes.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };
    if (next_line("magic line") != kMagic) corrupt("not a model file");
    const std::string vline = next_line("version line");
    if (vline.rfind("version ", 0) != 0) corrupt("malformed version line");
    if (vline != "version " + std::to_string(kModelFormatVersion)) {
        throw ModelFileError(ModelFileError::Kind::version_mismatch,
                             "file has '" + vline.substr(8) + "', expected " + std::to_string(kModelFormatVersion));
    }
    json header;
    try {
        header = json::parse(next_line("manifest"));
    } catch (const json::exception& e) {
        corrupt(std::string("manifest: ") + e.what());
    }

    ModelParams m;
    try {
        const json& c = header.at("config");
        GenConfig cfg;
        cfg.n_max = c.at("n_max").get<int>();
        cfg.width = c.at("width").get<int>();
        cfg.heads = c.at("heads").get<int>();
        cfg.blocks = c.at("blocks").get<int>();
        cfg.edge_width = c.at("edge_width").get<int>();
        cfg.learning_rate = c.at("learning_rate").get<double>();
        cfg.batch_size = c.at("batch_size").get<int>();
        cfg.epochs = c.at("epochs").get<int>();
        cfg.repeats = c.at("repeats").get<int>();
        cfg.edge_loss_weight = c.at("edge_loss_weight").get<double>();
        cfg.edge_jitter = c.at("edge_jitter").get<double>();
        cfg.grad_clip = c.at("grad_clip").get<double>();
        cfg.seed = c.at("seed").get<std::uint64_t>();
        cfg.check();
        const json& s = header.at("schedule");
        m.config = cfg;
        m.schedule = NoiseSchedule(s.at("steps").get<int>(), s.at("beta_start").get<double>(),
                                   s.at("beta_end").get<double>());
    } catch (const json::exception& e) {
        corrupt(std::string("manifest: ") + e.what());
    } catch (const std::invalid_argument& e) {
        corrupt(std::string("manifest: ") + e.what());
    }

    std::size_t payload_bytes = 0;
    std::uint64_t checksum = 0;
    json tensors;
    try {
        payload_bytes = header.at("payload_bytes").get<std::size_t>();
        checksum = header.at("payload_fnv1a").get<std::uint64_t>();
        tensors = header.at("tensors");
    } catch (const json::exception& e) {
        corrupt(std::string("manifest: ") + e.what());
    }
    if (bytes.size() - pos != payload_bytes) {
        corrupt("payload is " + std::to_string(bytes.size() - pos) + " bytes, manifest declares " +
                std::to_string(payload_bytes));
    }
    if (fnv1a(bytes, pos) != checksum) corrupt("payload checksum mismatch");

    // Expected layout: network tensors, then the four statistics blocks.
    auto shapes = expected_shapes(m.config);
    const Eigen::Index refs = [&]() -> Eigen::Index {
        for (const auto& t : tensors) {
            if (t.value("name", "") == "reference.props") return t.value("rows", Eigen::Index{0});
        }
        return 0;
    }();
    shapes.push_back({"norm.mean", {1, kPropertyDim}});
    shapes.push_back({"norm.std", {1, kPropertyDim}});
    shapes.push_back({"reference.props", {refs, kPropertyDim}});
    shapes.push_back({"reference.counts", {refs, 1}});
    if (!tensors.is_array() || tensors.size() != shapes.size()) {
        throw ModelFileError(ModelFileError::Kind::shape_mismatch,
                             "expected " + std::to_string(shapes.size()) + " tensors for this configuration");
    }
    std::size_t declared = 0;
    for (const auto& [n, shape] : shapes) declared += 8 * static_cast<std::size_t>(shape.first * shape.second);
    if (declared != payload_bytes) corrupt("payload size disagrees with tensor shapes");
    std::size_t at = pos;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const json& t = tensors[i];
        std::string name;
        Eigen::Index rows = 0, cols = 0;
        try {
            name = t.at("name").get<std::string>();
            rows = t.at("rows").get<Eigen::Index>();
            cols = t.at("cols").get<Eigen::Index>();
        } catch (const json::exception& e) {
            corrupt(std::string("tensor entry: ") + e.what());
        }
        const auto& [ename, eshape] = shapes[i];
        if (name != ename || rows != eshape.first || cols != eshape.second) {
            throw ModelFileError(ModelFileError::Kind::shape_mismatch,
                                 "tensor " + std::to_string(i) + " is '" + name + "' " + std::to_string(rows) + "x" +
                                     std::to_string(cols) + ", expected '" + ename + "' " +
                                     std::to_string(eshape.first) + "x" + std::to_string(eshape.second));
        }
        Matrix v(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index k = 0; k < cols; ++k, at += 8) v(r, k) = get_f64(bytes, at);
        }
        if (i + 4 < shapes.size()) {
            m.tensors.add(name, std::move(v));
        } else if (name == "norm.mean") {
            m.prop_mean = std::move(v);
        } else if (name == "norm.std") {
            m.prop_std = std::move(v);
        } else if (name == "reference.props") {
            m.reference_props = std::move(v);
        } else {
            m.reference_counts = std::move(v);
        }
    }
    return m;
}

void save_model(const ModelParams& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelFileError(ModelFileError::Kind::io, "cannot write " + path);
    const std::string bytes = serialize_model(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ModelFileError(ModelFileError::Kind::io, "write failed for " + path);
}

ModelParams load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelFileError(ModelFileError::Kind::io, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_model(ss.str());
}

}  // namespace latticeforge::gen
