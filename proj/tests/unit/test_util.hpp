#pragma once

#include "mvkit/matrix_core.hpp"
#include "mvkit/rng.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mvkit::test {

inline Matrix gaussian_matrix(std::uint64_t seed, Index rows, Index cols) {
  CounterRng rng(seed);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

inline std::vector<std::string> ids(Index n, const std::string& prefix = "u") {
  std::vector<std::string> out;
  for (Index i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

inline FeatureMatrix feature_matrix(const Matrix& m, const std::string& prefix = "f") {
  return FeatureMatrix(ids(m.rows()), ids(m.cols(), prefix), m);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mvkit_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace mvkit::test
