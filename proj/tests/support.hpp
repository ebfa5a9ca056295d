#pragma once

#include <sys/stat.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "partprompt/feature.hpp"
#include "partprompt/io.hpp"
#include "partprompt/rng.hpp"

namespace support {

using partprompt::FeatureMap;
using partprompt::FeatureSet;
using partprompt::Matrix;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  partprompt::Rng rng = partprompt::make_rng(partprompt::RngSeed{seed});
  Matrix m(rows, cols);
  for (double& v : m.values()) v = lo + (hi - lo) * partprompt::uniform01(rng);
  return m;
}

inline FeatureSet as_set(Matrix m) {
  FeatureSet s;
  s.origins.resize(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) s.origins[i] = {0, static_cast<int>(i)};
  s.vectors = std::move(m);
  return s;
}

inline FeatureMap random_map(int h, int w, int d, std::uint64_t seed) {
  partprompt::Rng rng = partprompt::make_rng(partprompt::RngSeed{seed});
  std::normal_distribution<float> g;
  std::vector<float> data(static_cast<std::size_t>(h) * w * d);
  for (float& v : data) v = g(rng);
  return FeatureMap(h, w, d, std::move(data));
}

/// Map whose cell (r, c) holds vectors[labels[r * w + c]].
inline FeatureMap labeled_map(int h, int w, const std::vector<int>& labels, const std::vector<std::vector<float>>& vectors) {
  const auto d = vectors.front().size();
  std::vector<float> data;
  for (int l : labels) data.insert(data.end(), vectors[l].begin(), vectors[l].end());
  return FeatureMap(h, w, static_cast<int>(d), std::move(data));
}

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "pp-test-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path write_script(const std::filesystem::path& path, const std::string& body) {
  partprompt::io::write_file(path, "#!/bin/sh\n" + body);
  ::chmod(path.c_str(), 0755);
  return path;
}

}  // namespace support
