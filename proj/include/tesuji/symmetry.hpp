// Copyright 2026 The tesuji Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tesuji/error.hpp"

namespace tesuji {

/// The 8 symmetries of the square: the group generated by the horizontal,
/// vertical, and main-diagonal reflections.
enum class Transform : std::uint8_t {
  Identity = 0,
  FlipCols,       // reflect across the vertical axis (col -> n-1-col)
  FlipRows,       // reflect across the horizontal axis (row -> n-1-row)
  Rot180,
  Transpose,      // reflect across the main diagonal (row <-> col)
  Rot90,          // quarter turn clockwise
  Rot270,
  AntiTranspose,  // reflect across the anti-diagonal
};

inline constexpr int kNumTransforms = 8;

inline constexpr std::array<Transform, kNumTransforms> all_transforms() {
  return {Transform::Identity, Transform::FlipCols,  Transform::FlipRows,
          Transform::Rot180,   Transform::Transpose, Transform::Rot90,
          Transform::Rot270,   Transform::AntiTranspose};
}

/// Image of (row, col) under g on an n x n grid.
constexpr std::pair<int, int> apply_transform(Transform g, int row, int col,
                                              int n) {
  const int m = n - 1;
  switch (g) {
    case Transform::Identity: return {row, col};
    case Transform::FlipCols: return {row, m - col};
    case Transform::FlipRows: return {m - row, col};
    case Transform::Rot180: return {m - row, m - col};
    case Transform::Transpose: return {col, row};
    case Transform::Rot90: return {col, m - row};
    case Transform::Rot270: return {m - col, row};
    case Transform::AntiTranspose: return {m - col, m - row};
  }
  return {row, col};
}

/// Image of a flattened row-major index under g on an n x n grid.
constexpr int apply_transform_index(Transform g, int idx, int n) {
  auto [r, c] = apply_transform(g, idx / n, idx % n, n);
  return r * n + c;
}

namespace detail {

// Identify a transform by its action on three non-collinear probe points
// of a 4x4 grid.
constexpr Transform match_transform(
    const std::array<std::pair<int, int>, 3>& images) {
  constexpr int kProbeN = 4;
  constexpr std::array<std::pair<int, int>, 3> probes{
      {{0, 1}, {1, 3}, {2, 0}}};
  for (Transform g : all_transforms()) {
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      if (apply_transform(g, probes[i].first, probes[i].second, kProbeN) !=
          images[i]) {
        ok = false;
        break;
      }
    }
    if (ok) return g;
  }
  return Transform::Identity;  // unreachable: the probes separate all 8
}

}  // namespace detail

/// g2 * g1: apply g1 first, then g2.
constexpr Transform compose(Transform g2, Transform g1) {
  constexpr int kProbeN = 4;
  constexpr std::array<std::pair<int, int>, 3> probes{
      {{0, 1}, {1, 3}, {2, 0}}};
  std::array<std::pair<int, int>, 3> images{};
  for (int i = 0; i < 3; ++i) {
    auto [r1, c1] =
        apply_transform(g1, probes[i].first, probes[i].second, kProbeN);
    images[i] = apply_transform(g2, r1, c1, kProbeN);
  }
  return detail::match_transform(images);
}

constexpr Transform inverse(Transform g) {
  for (Transform h : all_transforms()) {
    if (compose(h, g) == Transform::Identity) return h;
  }
  return Transform::Identity;  // unreachable
}

/// Partition of a raw weight-index space into equivalence classes under
/// the symmetry group. One free parameter per orbit.
struct OrbitMap {
  std::vector<std::int32_t> orbit_of;                 // raw index -> orbit id
  std::vector<std::vector<std::int32_t>> orbit_members;  // inverse map

  std::size_t raw_size() const { return orbit_of.size(); }
  int orbit_count() const { return static_cast<int>(orbit_members.size()); }
};

namespace detail {

// Builds an orbit map over `raw_size` indices from a callable giving the
// image of an index under each transform.
template <typename ImageFn>
OrbitMap build_orbits(std::size_t raw_size, ImageFn&& image) {
  OrbitMap map;
  map.orbit_of.assign(raw_size, -1);
  for (std::size_t idx = 0; idx < raw_size; ++idx) {
    if (map.orbit_of[idx] >= 0) continue;
    std::int32_t id = static_cast<std::int32_t>(map.orbit_members.size());
    std::vector<std::int32_t> members;
    for (Transform g : all_transforms()) {
      std::int32_t img = image(g, static_cast<std::int32_t>(idx));
      if (map.orbit_of[img] < 0) {
        map.orbit_of[img] = id;
        members.push_back(img);
      }
    }
    std::sort(members.begin(), members.end());
    map.orbit_members.push_back(std::move(members));
  }
  return map;
}

}  // namespace detail

/// Orbits of the k x k spatial offsets of a convolution filter. A filter
/// constant on these orbits is symmetric across the horizontal, vertical,
/// and both diagonal axes.
inline OrbitMap build_orbit_map_conv(int k) {
  if (k < 1 || k % 2 == 0) {
    throw ConfigError("tied convolution kernels must be odd, got " +
                      std::to_string(k));
  }
  return detail::build_orbits(
      static_cast<std::size_t>(k) * k,
      [k](Transform g, std::int32_t idx) {
        return apply_transform_index(g, idx, k);
      });
}

/// Orbits of single grid positions on an n x n board (bias tying, and the
/// trivial building block of the dense map below).
inline OrbitMap build_position_orbit_map(int n) {
  return detail::build_orbits(static_cast<std::size_t>(n) * n,
                              [n](Transform g, std::int32_t idx) {
                                return apply_transform_index(g, idx, n);
                              });
}

/// Orbit maps of a fully connected layer from C x H x W activations to an
/// H x W grid of outputs. `pairs` partitions (output position, input
/// position) pairs under the diagonal action g.(p, q) = (g.p, g.q); it is
/// shared across input channels. `bias` partitions output positions.
struct DenseOrbitMaps {
  OrbitMap pairs;
  OrbitMap bias;
};

inline DenseOrbitMaps build_orbit_map_dense(int out_h, int out_w, int in_h,
                                            int in_w) {
  if (out_h != out_w || in_h != in_w || out_h != in_h) {
    throw ConfigError("tied dense layers require matching square shapes");
  }
  const int n = out_h;
  const std::int64_t nn = static_cast<std::int64_t>(n) * n;
  DenseOrbitMaps maps;
  maps.pairs = detail::build_orbits(
      static_cast<std::size_t>(nn) * nn, [n, nn](Transform g, std::int32_t idx) {
        std::int32_t p = idx / static_cast<std::int32_t>(nn);
        std::int32_t q = idx % static_cast<std::int32_t>(nn);
        return apply_transform_index(g, p, n) * static_cast<std::int32_t>(nn) +
               apply_transform_index(g, q, n);
      });
  maps.bias = build_position_orbit_map(n);
  return maps;
}

/// Untied layout: every raw index is its own orbit.
inline OrbitMap trivial_orbit_map(std::size_t raw_size) {
  OrbitMap map;
  map.orbit_of.resize(raw_size);
  map.orbit_members.resize(raw_size);
  for (std::size_t i = 0; i < raw_size; ++i) {
    map.orbit_of[i] = static_cast<std::int32_t>(i);
    map.orbit_members[i] = {static_cast<std::int32_t>(i)};
  }
  return map;
}

}  // namespace tesuji
