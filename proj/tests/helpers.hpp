#pragma once

#include "scalpel/core.hpp"
#include "scalpel/segment.hpp"

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace testing {

inline scalpel::VideoMatrix video(const scalpel::Matrix& m, int height, int width) {
  return {m, scalpel::FrameGeometry(height, width)};
}

inline scalpel::SpatialDictionary dictionary(scalpel::FrameGeometry g,
                                             std::vector<std::vector<int>> cols) {
  scalpel::SpatialDictionary d;
  d.geometry = g;
  for (auto& c : cols) {
    std::sort(c.begin(), c.end());
    d.components.push_back({std::move(c), scalpel::FrameProvenance{0, 0.0}});
  }
  return d;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("scalpel_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline scalpel::Matrix gaussian(int rows, int cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  scalpel::Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

}  // namespace testing
