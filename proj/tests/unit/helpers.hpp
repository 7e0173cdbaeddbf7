#pragma once

#include "alignkit/core.hpp"
#include "alignkit/rng.hpp"

#include <filesystem>
#include <string>

namespace testing {

inline alignkit::Matrix gaussian(Eigen::Index rows, Eigen::Index cols, alignkit::Rng& rng) {
  alignkit::Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("alignkit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <class F>
alignkit::ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const alignkit::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an alignkit::Error");
}

}  // namespace testing
