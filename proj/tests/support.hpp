#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "privlens/image.hpp"
#include "privlens/rng.hpp"

namespace privlens::testing {

inline Image random_image(int height, int width, int channels, std::uint64_t seed,
                          double lo = 0.0, double hi = 1.0) {
  Image out(height, width, channels);
  std::uint64_t counter = 0;
  for (int c = 0; c < channels; ++c) {
    for (auto& v : out.plane(c).values()) {
      v = rng::uniform(seed, counter++, lo, hi);
    }
  }
  return out;
}

inline Grid<double> random_grid(int rows, int cols, std::uint64_t seed, double lo = 0.0,
                                double hi = 1.0) {
  Grid<double> out(rows, cols);
  std::uint64_t counter = 0;
  for (auto& v : out.values()) {
    v = rng::uniform(seed, counter++, lo, hi);
  }
  return out;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("privlens_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace privlens::testing
