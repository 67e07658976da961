// Copyright 2026 The anomseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "anomseg/png.hpp"
#include "anomseg/tensor.hpp"

namespace anomseg {

struct Rgb {
  std::uint8_t r, g, b;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// blue -> cyan -> green -> yellow -> red at 0, 1/4, 1/2, 3/4, 1.
inline constexpr std::array<Rgb, 5> kHeatStops = {{
    {0, 0, 255},
    {0, 255, 255},
    {0, 255, 0},
    {255, 255, 0},
    {255, 0, 0},
}};

/// Color for a normalized value; inputs outside [0, 1] are clamped.
inline Rgb heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const double pos = v * 4.0;
  const std::size_t seg = std::min<std::size_t>(static_cast<std::size_t>(pos), 3);
  const double t = pos - static_cast<double>(seg);
  const Rgb a = kHeatStops[seg];
  const Rgb b = kHeatStops[seg + 1];
  const auto lerp = [t](std::uint8_t x, std::uint8_t y) {
    return static_cast<std::uint8_t>(
        std::lround(x + (static_cast<double>(y) - x) * t));
  };
  return {lerp(a.r, b.r), lerp(a.g, b.g), lerp(a.b, b.b)};
}

/// Per-image min-max stretch into the heat gradient. Constant maps are all
/// blue.
inline png::Image heatmap_image(const AnomalyScoreMap& score) {
  const auto v = score.values();
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;

  png::Image img;
  img.width = score.width();
  img.height = score.height();
  img.channels = 3;
  img.pixels.resize(v.size() * 3);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = span > 0.0 ? (v[i] - lo) / span : 0.0;
    const Rgb c = heat_color(t);
    img.pixels[3 * i] = c.r;
    img.pixels[3 * i + 1] = c.g;
    img.pixels[3 * i + 2] = c.b;
  }
  return img;
}

inline const std::vector<std::pair<std::string, std::string>>&
heatmap_metadata() {
  static const std::vector<std::pair<std::string, std::string>> kMeta = {
      {"Comment", "anomaly score heatmap; normalization=per-image min-max; "
                  "gradient=blue,cyan,green,yellow,red"},
  };
  return kMeta;
}

inline void render_heatmap(const AnomalyScoreMap& score,
                           const std::filesystem::path& out) {
  png::write(out, heatmap_image(score), heatmap_metadata());
}

}  // namespace anomseg
