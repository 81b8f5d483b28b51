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

#include <catch2/catch_amalgamated.hpp>

#include "tesuji/encoder.hpp"
#include "test_util.hpp"

using namespace tesuji;
using namespace tesuji::testutil;

namespace {

const EncodingConfig kFull{true, true, true};      // 8 channels
const EncodingConfig kBasic{false, true, false};   // 3 channels
const EncodingConfig kTwoPlane{false, false, false};

Board place_black_corner() {
  return Board(19).play(Point{0, 0}).new_board;  // white to move
}

}  // namespace

TEST_CASE("channel counts follow the config") {
  CHECK(kFull.channels() == 8);
  CHECK(kBasic.channels() == 3);
  CHECK(kTwoPlane.channels() == 2);
  CHECK(EncodingConfig{true, true, false}.channels() == 7);
  CHECK(EncodingConfig{true, false, false}.channels() == 6);
}

TEST_CASE("empty board encodes to all-zero planes") {
  Tensor<float> t = encode(Board(19), kFull);
  REQUIRE(t.channels == 8);
  for (float v : t.data) CHECK(v == 0.0f);
}

TEST_CASE("encoder rejects non-19x19 boards") {
  CHECK_THROWS_AS(encode(Board(9), kFull), ShapeError);
}

TEST_CASE("liberty buckets from the mover's perspective") {
  // Lone black corner stone (2 liberties); white to move, so it lands in
  // the opponent 2-liberty plane (index 4).
  Board corner = place_black_corner();
  REQUIRE(corner.to_move() == Color::White);
  Tensor<float> t = encode(corner, kFull);
  int nonzero = 0;
  for (std::size_t i = 0; i < t.data.size(); ++i) nonzero += t.data[i] != 0;
  CHECK(nonzero == 1);
  CHECK(t.at(4, 0, 0) == 1.0f);

  // Lone black center stone (4 liberties) goes to the opponent >=3 plane.
  Board center = Board(19).play(Point{9, 9}).new_board;
  Tensor<float> c = encode(center, kFull);
  CHECK(c.at(5, 9, 9) == 1.0f);

  // Same stone from black's own perspective lands in planes 0-2.
  Board own = center.with_to_move(Color::Black);
  Tensor<float> o = encode(own, kFull);
  CHECK(o.at(2, 9, 9) == 1.0f);
}

TEST_CASE("liberty planes agree with the flood-fill oracle") {
  for (std::uint64_t seed = 40; seed < 44; ++seed) {
    Board b = random_board(19, 70, seed);
    SimGrid g = SimGrid::from_board(b);
    Tensor<float> t = encode(b, kFull);
    const PointState own = to_state(b.to_move());
    for (int idx = 0; idx < 361; ++idx) {
      int set_planes = 0;
      for (int c = 0; c < 6; ++c) set_planes += t.channel(c)[idx] != 0;
      if (b.grid()[idx] == PointState::Empty) {
        CHECK(set_planes == 0);
        continue;
      }
      CHECK(set_planes == 1);  // at most one liberty plane per point
      auto chain = oracle_chain(g, idx);
      int bucket = std::min<int>(3, static_cast<int>(chain.liberties.size()));
      int expected = (b.grid()[idx] == own ? 0 : 3) + bucket - 1;
      CHECK(t.channel(expected)[idx] == 1.0f);
    }
  }
}

TEST_CASE("basic two-plane mode marks stones without liberties") {
  Board b = random_board(19, 30, 99);
  Tensor<float> t = encode(b, kTwoPlane);
  const PointState own = to_state(b.to_move());
  for (int idx = 0; idx < 361; ++idx) {
    PointState s = b.grid()[idx];
    CHECK(t.channel(0)[idx] == (s == own ? 1.0f : 0.0f));
    CHECK(t.channel(1)[idx] ==
          (s != PointState::Empty && s != own ? 1.0f : 0.0f));
  }
}

TEST_CASE("ko plane carries at most a single one") {
  std::vector<std::string> rows(19, std::string(19, '.'));
  rows[1] = ".XO................";
  rows[2] = "X.XO...............";
  rows[3] = ".XO................";
  Board ko_shape = board_from_diagram(rows, Color::White);
  Board after = ko_shape.play(Point{2, 1}).new_board;
  REQUIRE(after.ko_point().has_value());
  Tensor<float> t = encode(after, kBasic);
  float total = 0;
  for (int idx = 0; idx < 361; ++idx) total += t.channel(2)[idx];
  CHECK(total == 1.0f);
  CHECK(t.at(2, 2, 2) == 1.0f);

  Tensor<float> none = encode(Board(19), kBasic);
  for (int idx = 0; idx < 361; ++idx) CHECK(none.channel(2)[idx] == 0.0f);
}

TEST_CASE("all planes are binary") {
  Board b = random_board(19, 120, 3);
  for (const auto& cfg : {kFull, kBasic, kTwoPlane}) {
    Tensor<float> t = encode(b, cfg);
    for (float v : t.data) CHECK((v == 0.0f || v == 1.0f));
  }
}

TEST_CASE("padding: zero pad everywhere, ones ring on the edge channel") {
  Board b = place_black_corner();
  Tensor<float> t = encode(b, kFull);

  SECTION("pad 0 is the identity") {
    Tensor<float> p = pad_for_first_layer(t, 0, kFull);
    CHECK(p.data == t.data);
  }

  SECTION("pad 1: 80 ones, all on the border ring of the edge channel") {
    Tensor<float> p = pad_for_first_layer(t, 1, kFull);
    REQUIRE(p.height == 21);
    REQUIRE(p.width == 21);
    int ones = 0;
    for (int c = 0; c < p.channels; ++c) {
      for (int y = 0; y < 21; ++y) {
        for (int x = 0; x < 21; ++x) {
          if (p.at(c, y, x) != 1.0f) continue;
          if (c == p.channels - 1) {
            ++ones;
            bool on_ring = y == 0 || y == 20 || x == 0 || x == 20;
            CHECK(on_ring);
          }
        }
      }
    }
    CHECK(ones == 4 * 21 - 4);
    // Board channels are unchanged inside the ring.
    CHECK(p.at(4, 1, 1) == 1.0f);  // the corner stone moved to (1,1)
  }

  SECTION("pad 3: border of width 3 all ones in the edge channel only") {
    Tensor<float> p = pad_for_first_layer(t, 3, kFull);
    REQUIRE(p.height == 25);
    for (int c = 0; c < p.channels; ++c) {
      for (int y = 0; y < 25; ++y) {
        for (int x = 0; x < 25; ++x) {
          bool in_border = y < 3 || y >= 22 || x < 3 || x >= 22;
          float expected;
          if (c == p.channels - 1) {
            expected = in_border ? 1.0f : 0.0f;  // interior stays empty
          } else if (in_border) {
            expected = 0.0f;
          } else {
            expected = t.at(c, y - 3, x - 3);
          }
          CHECK(p.at(c, y, x) == expected);
        }
      }
    }
  }

  SECTION("without the edge channel the ring is all zeros") {
    Tensor<float> basic = encode(b, kBasic);
    Tensor<float> p = pad_for_first_layer(basic, 2, kBasic);
    for (int c = 0; c < p.channels; ++c) {
      for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
          bool in_border = y < 2 || y >= p.height - 2 || x < 2 ||
                           x >= p.width - 2;
          if (in_border) CHECK(p.at(c, y, x) == 0.0f);
        }
      }
    }
  }
}

TEST_CASE("reflect_tensor implements the group action") {
  Board b = random_board(19, 50, 11);
  Tensor<float> t = encode(b, kFull);

  SECTION("identity and involutions") {
    CHECK(reflect_tensor(t, Transform::Identity).data == t.data);
    for (Transform g : {Transform::FlipCols, Transform::FlipRows,
                        Transform::Transpose, Transform::AntiTranspose}) {
      CHECK(reflect_tensor(reflect_tensor(t, g), g).data == t.data);
    }
  }

  SECTION("composition matches the permutation oracle") {
    for (Transform g2 : all_transforms()) {
      for (Transform g1 : all_transforms()) {
        Tensor<float> sequential =
            reflect_tensor(reflect_tensor(t, g1), g2);
        Tensor<float> composed = reflect_tensor(t, compose(g2, g1));
        CHECK(sequential.data == composed.data);
      }
    }
  }
}

TEST_CASE("encoding commutes with board reflection") {
  for (std::uint64_t seed = 60; seed < 63; ++seed) {
    Board b = random_board(19, 45, seed);
    for (const auto& cfg : {kFull, kBasic, kTwoPlane}) {
      Tensor<float> encoded = encode(b, cfg);
      for (Transform g : all_transforms()) {
        Tensor<float> reflected_encoding = reflect_tensor(encoded, g);
        Tensor<float> encoded_reflection = encode(reflect_board(b, g), cfg);
        CHECK(reflected_encoding.data == encoded_reflection.data);
      }
    }
  }
}
