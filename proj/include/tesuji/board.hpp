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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tesuji/error.hpp"

namespace tesuji {

enum class Color : std::uint8_t { Black = 0, White = 1 };

constexpr Color opponent(Color c) {
  return c == Color::Black ? Color::White : Color::Black;
}

inline const char* color_name(Color c) {
  return c == Color::Black ? "black" : "white";
}

/// Grid coordinate, 0-based, (0,0) = top-left, row-major ordering.
struct Point {
  int row = 0;
  int col = 0;

  friend constexpr bool operator==(const Point&, const Point&) = default;
  friend constexpr auto operator<=>(const Point& a, const Point& b) {
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }
};

enum class PointState : std::uint8_t { Empty = 0, Black = 1, White = 2 };

constexpr PointState to_state(Color c) {
  return c == Color::Black ? PointState::Black : PointState::White;
}

enum class MoveIllegalReason : std::uint8_t { Occupied, Ko, Suicide };

class IllegalMoveError : public Error {
 public:
  IllegalMoveError(MoveIllegalReason reason, Point p)
      : Error(std::string("illegal move at (") + std::to_string(p.row) + "," +
              std::to_string(p.col) + "): " + reason_name(reason)),
        reason_(reason),
        point_(p) {}

  MoveIllegalReason reason() const { return reason_; }
  Point point() const { return point_; }

  static const char* reason_name(MoveIllegalReason r) {
    switch (r) {
      case MoveIllegalReason::Occupied: return "occupied";
      case MoveIllegalReason::Ko: return "ko";
      case MoveIllegalReason::Suicide: return "suicide";
    }
    return "?";
  }

 private:
  MoveIllegalReason reason_;
  Point point_;
};

struct ChainInfo {
  std::vector<Point> chain;
  int liberties = 0;
};

struct MoveOutcome;

/// Rules-complete Go board. Immutable by contract: play() and pass()
/// return new values, suicide is illegal, captures are resolved eagerly,
/// simple-ko is the only repetition rule.
class Board {
 public:
  explicit Board(int size) : size_(size) {
    if (size < 2) {
      throw ConfigError("invalid board size " + std::to_string(size) +
                        " (must be >= 2)");
    }
    grid_.assign(static_cast<std::size_t>(size) * size, PointState::Empty);
  }

  int size() const { return size_; }
  Color to_move() const { return to_move_; }
  int move_count() const { return move_count_; }
  int captures_by(Color c) const {
    return c == Color::Black ? captured_by_black_ : captured_by_white_;
  }

  std::optional<Point> ko_point() const {
    if (ko_idx_ < 0) return std::nullopt;
    return point_of(ko_idx_);
  }

  bool in_bounds(Point p) const {
    return p.row >= 0 && p.row < size_ && p.col >= 0 && p.col < size_;
  }

  PointState at(Point p) const {
    check_bounds(p);
    return grid_[index_of(p)];
  }

  std::span<const PointState> grid() const { return grid_; }

  /// Maximal 4-connected same-color chain through p plus its liberty count.
  ChainInfo chain_and_liberties(Point p) const {
    check_bounds(p);
    PointState color = grid_[index_of(p)];
    if (color == PointState::Empty) {
      throw Error("chain_and_liberties: point (" + std::to_string(p.row) +
                  "," + std::to_string(p.col) + ") is not a stone");
    }
    ChainInfo info;
    std::vector<std::uint8_t> seen(grid_.size(), 0);
    std::vector<int> stack = {index_of(p)};
    seen[index_of(p)] = 1;
    int liberties = 0;
    while (!stack.empty()) {
      int idx = stack.back();
      stack.pop_back();
      info.chain.push_back(point_of(idx));
      for (int nb : neighbors(idx)) {
        if (seen[nb]) continue;
        if (grid_[nb] == PointState::Empty) {
          seen[nb] = 1;
          ++liberties;
        } else if (grid_[nb] == color) {
          seen[nb] = 1;
          stack.push_back(nb);
        }
      }
    }
    info.liberties = liberties;
    return info;
  }

  /// True iff p is empty, not the ko point, and not suicidal.
  bool is_legal(Point p) const {
    check_bounds(p);
    return classify(p) == std::nullopt;
  }

  /// Why p is illegal, or nullopt if it is legal.
  std::optional<MoveIllegalReason> classify(Point p) const {
    check_bounds(p);
    int idx = index_of(p);
    if (grid_[idx] != PointState::Empty) return MoveIllegalReason::Occupied;
    if (idx == ko_idx_) return MoveIllegalReason::Ko;
    if (is_suicide(idx)) return MoveIllegalReason::Suicide;
    return std::nullopt;
  }

  /// Plays to_move's stone at p. Removes captured opponent chains, flips
  /// the side to move, and sets the ko point iff the move was a
  /// single-stone ko capture.
  MoveOutcome play(Point p) const;

  /// Passing flips the side to move and lifts any ko constraint: a stone
  /// placement can never recreate the position that existed before a pass.
  Board pass() const {
    Board b = *this;
    b.to_move_ = opponent(to_move_);
    b.ko_idx_ = -1;
    b.move_count_ = move_count_ + 1;
    return b;
  }

  std::vector<Point> legal_moves() const {
    std::vector<Point> moves;
    for (int idx = 0; idx < static_cast<int>(grid_.size()); ++idx) {
      Point p = point_of(idx);
      if (classify(p) == std::nullopt) moves.push_back(p);
    }
    return moves;
  }

  Board with_to_move(Color c) const {
    Board b = *this;
    b.to_move_ = c;
    return b;
  }

  /// Restores a ko constraint on an empty point (snapshot decoding).
  Board with_ko(Point p) const {
    check_bounds(p);
    if (grid_[index_of(p)] != PointState::Empty) {
      throw Error("ko point must be empty");
    }
    Board b = *this;
    b.ko_idx_ = index_of(p);
    return b;
  }

  Board with_move_count(int count) const {
    Board b = *this;
    b.move_count_ = count;
    return b;
  }

  /// Board with pre-placed stones (handicap/setup). Rejects overlapping
  /// placements and dead-on-arrival chains.
  static Board with_setup(int size, std::span<const Point> black,
                          std::span<const Point> white) {
    Board b(size);
    auto place = [&](std::span<const Point> pts, PointState s) {
      for (Point p : pts) {
        b.check_bounds(p);
        int idx = b.index_of(p);
        if (b.grid_[idx] != PointState::Empty) {
          throw Error("setup stone on occupied point (" +
                      std::to_string(p.row) + "," + std::to_string(p.col) +
                      ")");
        }
        b.grid_[idx] = s;
      }
    };
    place(black, PointState::Black);
    place(white, PointState::White);
    for (int idx = 0; idx < static_cast<int>(b.grid_.size()); ++idx) {
      if (b.grid_[idx] != PointState::Empty &&
          b.count_liberties_capped(idx, 1) == 0) {
        throw Error("setup stones form a chain with no liberties");
      }
    }
    return b;
  }

  bool same_position(const Board& other) const {
    return size_ == other.size_ && grid_ == other.grid_;
  }

  int index_of(Point p) const { return p.row * size_ + p.col; }
  Point point_of(int idx) const { return Point{idx / size_, idx % size_}; }

 private:
  void check_bounds(Point p) const {
    if (!in_bounds(p)) {
      throw Error("point (" + std::to_string(p.row) + "," +
                  std::to_string(p.col) + ") out of bounds for size " +
                  std::to_string(size_));
    }
  }

  // Up to 4 orthogonal neighbor indices.
  struct NeighborList {
    int items[4];
    int count = 0;
    const int* begin() const { return items; }
    const int* end() const { return items + count; }
  };

  NeighborList neighbors(int idx) const {
    NeighborList n;
    int r = idx / size_, c = idx % size_;
    if (r > 0) n.items[n.count++] = idx - size_;
    if (r + 1 < size_) n.items[n.count++] = idx + size_;
    if (c > 0) n.items[n.count++] = idx - 1;
    if (c + 1 < size_) n.items[n.count++] = idx + 1;
    return n;
  }

  // Liberty count of the chain through idx, stopping early once `cap`
  // liberties are found. cap < 0 counts all.
  int count_liberties_capped(int idx, int cap) const {
    PointState color = grid_[idx];
    thread_local std::vector<std::uint8_t> seen;
    seen.assign(grid_.size(), 0);
    std::vector<int> stack = {idx};
    seen[idx] = 1;
    int libs = 0;
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      for (int nb : neighbors(cur)) {
        if (seen[nb]) continue;
        seen[nb] = 1;
        if (grid_[nb] == PointState::Empty) {
          if (++libs > cap && cap >= 0) return libs;
        } else if (grid_[nb] == color) {
          stack.push_back(nb);
        }
      }
    }
    return libs;
  }

  void remove_chain(int idx, std::vector<Point>& removed) {
    PointState color = grid_[idx];
    std::vector<int> stack = {idx};
    grid_[idx] = PointState::Empty;
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      removed.push_back(point_of(cur));
      for (int nb : neighbors(cur)) {
        if (grid_[nb] == color) {
          grid_[nb] = PointState::Empty;
          stack.push_back(nb);
        }
      }
    }
  }

  // A move on an empty non-ko point is suicide iff it neither keeps a
  // liberty, captures something, nor joins a chain with a spare liberty.
  bool is_suicide(int idx) const {
    PointState own = to_state(to_move_);
    PointState opp = to_state(opponent(to_move_));
    for (int nb : neighbors(idx)) {
      if (grid_[nb] == PointState::Empty) return false;
    }
    for (int nb : neighbors(idx)) {
      if (grid_[nb] == opp && liberties_without(nb, idx) == 0) return false;
      if (grid_[nb] == own && liberties_without(nb, idx) >= 1) return false;
    }
    return true;
  }

  // Liberties of the chain through idx, not counting `excluded`.
  int liberties_without(int idx, int excluded) const {
    PointState color = grid_[idx];
    thread_local std::vector<std::uint8_t> seen;
    seen.assign(grid_.size(), 0);
    std::vector<int> stack = {idx};
    seen[idx] = 1;
    int libs = 0;
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      for (int nb : neighbors(cur)) {
        if (seen[nb]) continue;
        seen[nb] = 1;
        if (grid_[nb] == PointState::Empty) {
          if (nb != excluded) ++libs;
        } else if (grid_[nb] == color) {
          stack.push_back(nb);
        }
      }
    }
    return libs;
  }

  int size_;
  std::vector<PointState> grid_;
  Color to_move_ = Color::Black;
  int ko_idx_ = -1;
  int move_count_ = 0;
  int captured_by_black_ = 0;
  int captured_by_white_ = 0;
};

struct MoveOutcome {
  Board new_board;
  std::vector<Point> captured;
  std::optional<Point> ko_created;
};

inline MoveOutcome Board::play(Point p) const {
  if (auto reason = classify(p)) {
    throw IllegalMoveError(*reason, p);
  }
  MoveOutcome result{*this, {}, std::nullopt};
  Board& b = result.new_board;
  Color mover = to_move_;
  PointState opp = to_state(opponent(mover));
  int idx = index_of(p);
  b.grid_[idx] = to_state(mover);

  // Remove adjacent opponent chains left with zero liberties.
  for (int nb : neighbors(idx)) {
    if (b.grid_[nb] != opp) continue;
    if (b.count_liberties_capped(nb, 0) == 0) {
      b.remove_chain(nb, result.captured);
    }
  }

  // Simple-ko: single-stone capture leaving a lone stone with exactly
  // one liberty (the vacated point).
  b.ko_idx_ = -1;
  if (result.captured.size() == 1) {
    ChainInfo own_chain = b.chain_and_liberties(p);
    if (own_chain.chain.size() == 1 && own_chain.liberties == 1) {
      b.ko_idx_ = index_of(result.captured.front());
      result.ko_created = result.captured.front();
    }
  }

  if (mover == Color::Black) {
    b.captured_by_black_ += static_cast<int>(result.captured.size());
  } else {
    b.captured_by_white_ += static_cast<int>(result.captured.size());
  }
  b.to_move_ = opponent(mover);
  b.move_count_ = move_count_ + 1;
  return result;
}

/// Factory matching the rules-engine construction contract: all points
/// empty, Black to move, no ko, move_count 0.
inline Board new_board(int size) { return Board(size); }

}  // namespace tesuji
