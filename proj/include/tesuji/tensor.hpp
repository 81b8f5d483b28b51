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

#include <cstddef>
#include <vector>

#include "tesuji/error.hpp"
#include "tesuji/symmetry.hpp"

namespace tesuji {

/// Dense channels x height x width array, row-major within each channel.
template <typename Scalar>
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<Scalar> data;

  Tensor() = default;
  Tensor(int c, int h, int w)
      : channels(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * h * w, Scalar(0)) {}

  Scalar& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  Scalar at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  Scalar* channel(int c) {
    return data.data() + static_cast<std::size_t>(c) * height * width;
  }
  const Scalar* channel(int c) const {
    return data.data() + static_cast<std::size_t>(c) * height * width;
  }

  std::size_t size() const { return data.size(); }

  bool same_shape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

/// Applies g to the spatial layout of every channel: out[c][g.p] = in[c][p].
template <typename Scalar>
Tensor<Scalar> reflect_tensor(const Tensor<Scalar>& t, Transform g) {
  if (t.height != t.width) {
    throw ShapeError("reflect_tensor requires a square tensor");
  }
  const int n = t.height;
  Tensor<Scalar> out(t.channels, n, n);
  for (int c = 0; c < t.channels; ++c) {
    const Scalar* src = t.channel(c);
    Scalar* dst = out.channel(c);
    for (int idx = 0; idx < n * n; ++idx) {
      dst[apply_transform_index(g, idx, n)] = src[idx];
    }
  }
  return out;
}

/// Same action on a flat per-point vector (mask, logits, probabilities).
template <typename T>
std::vector<T> reflect_flat(const std::vector<T>& v, Transform g, int n) {
  std::vector<T> out(v.size());
  for (int idx = 0; idx < n * n; ++idx) {
    out[apply_transform_index(g, idx, n)] = v[idx];
  }
  return out;
}

}  // namespace tesuji
