// Copyright 2026 The synmo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reference implementations used only by tests. They are written for
// clarity, not speed, and deliberately avoid calling the library routines
// they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "synmo/image.hpp"
#include "synmo/tokenizer.hpp"

namespace oracle {

/// Mirror-pads the signal with explicit copies until it is at least `pad`
/// long on each side, then convolves with a freshly sampled kernel.
inline std::vector<double> direct_gaussian(const std::vector<double>& x, double kappa) {
  const int radius = static_cast<int>(std::ceil(4.0 * kappa));
  std::vector<double> kernel;
  double total = 0.0;
  for (int z = -radius; z <= radius; ++z) {
    const double h = std::exp(-static_cast<double>(z) * z / (2.0 * kappa * kappa)) /
                     (std::sqrt(2.0 * M_PI) * kappa);
    kernel.push_back(h);
    total += h;
  }
  for (double& h : kernel) h /= total;

  // Build ... | reversed | x | reversed | x | reversed | ... wide enough.
  std::vector<double> rev(x.rbegin(), x.rend());
  std::vector<double> ext = x;
  std::size_t left = 0;
  bool flip = true;
  while (left < static_cast<std::size_t>(radius) || ext.size() - left - x.size() < static_cast<std::size_t>(radius)) {
    const auto& block = flip ? rev : x;
    ext.insert(ext.begin(), block.begin(), block.end());
    ext.insert(ext.end(), block.begin(), block.end());
    left += x.size();
    flip = !flip;
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double acc = 0.0;
    for (int z = -radius; z <= radius; ++z)
      acc += kernel[static_cast<std::size_t>(z + radius)] * ext[left + i - z];
    out[i] = acc;
  }
  return out;
}

/// Sum of squared errors over rows divided by the row count, in long double.
inline double naive_loss(const std::vector<std::vector<double>>& targets,
                         const std::vector<std::vector<double>>& predictions) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < targets.size(); ++i)
    for (std::size_t d = 0; d < targets[i].size(); ++d) {
      const long double e = static_cast<long double>(targets[i][d]) - predictions[i][d];
      sum += e * e;
    }
  return static_cast<double>(sum / static_cast<long double>(targets.size()));
}

inline std::size_t rhu(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

/// Flat token index of pixel (t, h, w) from the grid formula.
inline std::size_t token_index(std::size_t t, std::size_t h, std::size_t w, std::size_t pt,
                               std::size_t ps, std::size_t height, std::size_t width) {
  const std::size_t rows = height / ps, cols = width / ps;
  return (t / pt) * rows * cols + (h / ps) * cols + (w / ps);
}

/// Random clip with values in [0, 1].
inline synmo::Clip random_clip(std::size_t t, std::size_t h, std::size_t w, std::mt19937_64& gen,
                               std::string id = "random") {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  synmo::Clip c = synmo::Clip::zeros(t, h, w, std::move(id));
  for (auto& v : c.pixels) v = u(gen);
  return c;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("synmo-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace oracle
