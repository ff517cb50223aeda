#pragma once

#include "latticeforge/core.hpp"
#include "latticeforge/gen/model.hpp"

#include <string>

namespace latticeforge::gen {

constexpr int kModelFormatVersion = 1;

class ModelFileError : public LatticeError {
  public:
    enum class Kind { version_mismatch, shape_mismatch, corrupt_file, io };
    ModelFileError(Kind kind, const std::string& detail);
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

/// Text manifest (magic line, version line, one JSON line) followed by the
/// tensors as little-endian float64, in manifest order.
void save_model(const ModelParams& model, const std::string& path);
ModelParams load_model(const std::string& path);

std::string serialize_model(const ModelParams& model);
ModelParams deserialize_model(const std::string& bytes);

}  // namespace latticeforge::gen
