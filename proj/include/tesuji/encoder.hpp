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
#include <cstdint>
#include <string>
#include <vector>

#include "tesuji/board.hpp"
#include "tesuji/tensor.hpp"

namespace tesuji {

inline constexpr int kBoardSize = 19;
inline constexpr int kNumPoints = kBoardSize * kBoardSize;

/// Input feature selection. Channel order:
///   liberties off: [own, opponent]
///   liberties on:  [own 1 lib, own 2 libs, own >=3 libs,
///                   opp 1 lib, opp 2 libs, opp >=3 libs]
/// then the ko plane (if enabled), then the edge channel (if enabled,
/// always last, all zeros on the board proper).
struct EncodingConfig {
  bool use_liberties = true;
  bool use_ko_plane = true;
  bool use_edge_channel = true;

  int channels() const {
    return (use_liberties ? 6 : 2) + (use_ko_plane ? 1 : 0) +
           (use_edge_channel ? 1 : 0);
  }

  friend bool operator==(const EncodingConfig&, const EncodingConfig&) =
      default;
};

/// Binary feature planes for the player to move.
template <typename Scalar = float>
Tensor<Scalar> encode(const Board& board, const EncodingConfig& cfg) {
  if (board.size() != kBoardSize) {
    throw ShapeError("encoder supports only " + std::to_string(kBoardSize) +
                     "x" + std::to_string(kBoardSize) + " boards, got " +
                     std::to_string(board.size()));
  }
  Tensor<Scalar> t(cfg.channels(), kBoardSize, kBoardSize);
  const PointState own = to_state(board.to_move());

  if (cfg.use_liberties) {
    // One plane write per chain; bucket = min(liberties, 3).
    std::vector<std::uint8_t> visited(kNumPoints, 0);
    for (int idx = 0; idx < kNumPoints; ++idx) {
      if (visited[idx]) continue;
      Point p = board.point_of(idx);
      PointState s = board.at(p);
      if (s == PointState::Empty) continue;
      ChainInfo info = board.chain_and_liberties(p);
      int bucket = info.liberties >= 3 ? 2 : info.liberties - 1;
      int channel = (s == own ? 0 : 3) + bucket;
      for (Point q : info.chain) {
        int qi = board.index_of(q);
        visited[qi] = 1;
        t.channel(channel)[qi] = Scalar(1);
      }
    }
  } else {
    for (int idx = 0; idx < kNumPoints; ++idx) {
      PointState s = board.grid()[idx];
      if (s == PointState::Empty) continue;
      t.channel(s == own ? 0 : 1)[idx] = Scalar(1);
    }
  }

  if (cfg.use_ko_plane) {
    int ko_channel = cfg.use_liberties ? 6 : 2;
    if (auto ko = board.ko_point()) {
      t.channel(ko_channel)[board.index_of(*ko)] = Scalar(1);
    }
  }
  // The edge channel stays all zeros here; its ones live in the padding
  // ring added by pad_for_first_layer.
  return t;
}

/// Pads every channel with `pad` zeros on each side, except the edge
/// channel (when enabled) whose padding ring is ones.
template <typename Scalar>
Tensor<Scalar> pad_for_first_layer(const Tensor<Scalar>& t, int pad,
                                   const EncodingConfig& cfg) {
  if (pad < 0) throw ShapeError("negative padding");
  if (pad == 0) return t;
  Tensor<Scalar> out(t.channels, t.height + 2 * pad, t.width + 2 * pad);
  if (cfg.use_edge_channel) {
    int edge = t.channels - 1;
    Scalar* dst = out.channel(edge);
    std::fill(dst, dst + static_cast<std::size_t>(out.height) * out.width,
              Scalar(1));
    for (int y = pad; y < pad + t.height; ++y) {
      std::fill(dst + static_cast<std::size_t>(y) * out.width + pad,
                dst + static_cast<std::size_t>(y) * out.width + pad + t.width,
                Scalar(0));
    }
  }
  for (int c = 0; c < t.channels; ++c) {
    for (int y = 0; y < t.height; ++y) {
      const Scalar* src =
          t.channel(c) + static_cast<std::size_t>(y) * t.width;
      Scalar* dst = out.channel(c) +
                    static_cast<std::size_t>(y + pad) * out.width + pad;
      std::copy(src, src + t.width, dst);
    }
  }
  return out;
}

/// Per-point legality mask for the masked softmax, row-major.
inline std::vector<std::uint8_t> legal_mask(const Board& board) {
  std::vector<std::uint8_t> mask(
      static_cast<std::size_t>(board.size()) * board.size(), 0);
  for (Point p : board.legal_moves()) {
    mask[board.index_of(p)] = 1;
  }
  return mask;
}

}  // namespace tesuji
