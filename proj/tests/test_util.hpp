#pragma once

#include "latticeforge/core.hpp"

#include <algorithm>
#include <unistd.h>
#include <filesystem>
#include <string>
#include <vector>

namespace lf_test {

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() / ("latticeforge_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline bool same_point_set(std::vector<latticeforge::Vec3> a, std::vector<latticeforge::Vec3> b, double tol) {
    if (a.size() != b.size()) return false;
    for (const auto& p : a) {
        auto it = std::find_if(b.begin(), b.end(), [&](const latticeforge::Vec3& q) { return (p - q).norm() <= tol; });
        if (it == b.end()) return false;
        b.erase(it);
    }
    return true;
}

inline bool has_edge(const latticeforge::UnitCell& c, std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return std::find(c.edges.begin(), c.edges.end(), latticeforge::Edge{i, j}) != c.edges.end();
}

/// Index of the vertex nearest to p.
inline std::size_t nearest(const latticeforge::UnitCell& c, const latticeforge::Vec3& p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.vertices.size(); ++i) {
        if ((c.vertices[i] - p).norm() < (c.vertices[best] - p).norm()) best = i;
    }
    return best;
}

}  // namespace lf_test
