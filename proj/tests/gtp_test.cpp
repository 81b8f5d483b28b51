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

#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "tesuji/gtp.hpp"
#include "test_util.hpp"

using namespace tesuji;
using namespace tesuji::testutil;

namespace {

Network<float> engine_net(std::uint64_t seed) {
  auto net = Network<float>::make(19, EncodingConfig{true, true, true},
                                  std::vector<Network<float>::ConvSpec>{{4, 3}},
                                  true, true, Activation::Relu);
  randomize_params(net, seed, 0.3);
  return net;
}

std::string respond(GtpEngine& engine, const std::string& line) {
  return engine.handle(line).text;
}

}  // namespace

TEST_CASE("vertex conversion is bit-exact and skips the letter I") {
  CHECK(vertex_of(Point{0, 0}, 19) == "A19");
  CHECK(vertex_of(Point{18, 0}, 19) == "A1");
  CHECK(vertex_of(Point{18, 18}, 19) == "T1");
  CHECK(vertex_of(Point{0, 7}, 19) == "H19");
  CHECK(vertex_of(Point{0, 8}, 19) == "J19");  // I is skipped
  CHECK(vertex_of(Point{3, 15}, 19) == "Q16");

  // Round trip over every point.
  for (int r = 0; r < 19; ++r) {
    for (int c = 0; c < 19; ++c) {
      Point p{r, c};
      auto back = vertex_to_point(vertex_of(p, 19), 19);
      REQUIRE(back.has_value());
      CHECK(*back == p);
    }
  }

  // Lowercase accepted, junk rejected.
  CHECK(*vertex_to_point("q16", 19) == Point{3, 15});
  CHECK(!vertex_to_point("I5", 19).has_value());
  CHECK(!vertex_to_point("U1", 19).has_value());
  CHECK(!vertex_to_point("A0", 19).has_value());
  CHECK(!vertex_to_point("A20", 19).has_value());
  CHECK(!vertex_to_point("5A", 19).has_value());
  CHECK(!vertex_to_point("", 19).has_value());
}

TEST_CASE("golden transcript matches byte for byte") {
  GtpEngine engine(engine_net(1));
  std::istringstream in(
      "protocol_version\n"
      "1 name\n"
      "version\n"
      "known_command genmove\n"
      "known_command frobnicate\n"
      "boardsize 19\n"
      "boardsize 9\n"
      "clear_board\n"
      "komi 7.5\n"
      "play b Q16\n"
      "play w D4\n"
      "play b C16\n"
      "play w Q4\n"
      "play b R14\n"
      "play w P3\n"
      "play b K17\n"
      "play w C6\n"
      "play b E16\n"
      "play w R9\n"
      "play b Q16\n"
      "# a comment line\n"
      "\n"
      "flub\n"
      "quit\n");
  std::ostringstream out;
  int status = engine.run(in, out);
  CHECK(status == 0);

  const std::string golden =
      "= 2\n\n"
      "=1 tesuji\n\n"
      "= 0.1.0\n\n"
      "= true\n\n"
      "= false\n\n"
      "= \n\n"
      "? unacceptable size\n\n"
      "= \n\n"
      "= \n\n"
      "= \n\n"
      "= \n\n"
      "= \n\n"
      "= \n\n"
      "= \n\n"
      "= \n\n"
      "= \n\n"
      "= \n\n"
      "= \n\n"
      "= \n\n"
      "? illegal move\n\n"
      "? unknown command\n\n"
      "= \n\n";
  CHECK(out.str() == golden);

  // The scripted ten moves replayed through the rules engine match the
  // engine's internal board.
  Board replayed(19);
  const std::vector<std::pair<Color, std::string>> moves = {
      {Color::Black, "Q16"}, {Color::White, "D4"}, {Color::Black, "C16"},
      {Color::White, "Q4"},  {Color::Black, "R14"}, {Color::White, "P3"},
      {Color::Black, "K17"}, {Color::White, "C6"},  {Color::Black, "E16"},
      {Color::White, "R9"}};
  for (const auto& [color, vertex] : moves) {
    replayed = replayed.with_to_move(color)
                   .play(*vertex_to_point(vertex, 19))
                   .new_board;
  }
  CHECK(engine.board().same_position(replayed));
}

TEST_CASE("list_commands names every supported command") {
  GtpEngine engine(engine_net(2));
  std::string response = respond(engine, "list_commands");
  for (const char* cmd :
       {"protocol_version", "name", "version", "known_command",
        "list_commands", "boardsize", "clear_board", "komi", "play",
        "genmove", "quit"}) {
    CHECK(response.find(cmd) != std::string::npos);
  }
}

TEST_CASE("genmove plays a legal vertex and tracks the board") {
  GtpEngine engine(engine_net(3));
  std::string response = respond(engine, "genmove b");
  REQUIRE(response.rfind("= ", 0) == 0);
  std::string vertex = response.substr(2, response.size() - 4);
  auto p = vertex_to_point(vertex, 19);
  REQUIRE(p.has_value());
  CHECK(engine.board().at(*p) == PointState::Black);
  CHECK(engine.board().to_move() == Color::White);
}

TEST_CASE("pass mirroring and the mutual-pass latch") {
  GtpEngine engine(engine_net(4));
  CHECK(respond(engine, "play b Q16") == "= \n\n");
  CHECK(respond(engine, "play w pass") == "= \n\n");
  // Opponent passed: mirror it.
  CHECK(respond(engine, "genmove b") == "= pass\n\n");
  // Game over by mutual pass: keep passing even after opponent moves.
  CHECK(respond(engine, "play w D4") == "= \n\n");
  CHECK(respond(engine, "genmove b") == "= pass\n\n");
  // clear_board resets the latch.
  CHECK(respond(engine, "clear_board") == "= \n\n");
  std::string response = respond(engine, "genmove b");
  CHECK(response != "= pass\n\n");
}

TEST_CASE("genmove passes when no legal move exists") {
  GtpEngine engine(engine_net(5));
  // Play a random game to exhaustion, feeding every move as a play
  // command; the mover at the end has no legal move left.
  Board board(19);
  std::mt19937_64 rng(99);
  while (true) {
    auto legal = board.legal_moves();
    if (legal.empty()) break;
    Point p = legal[uniform_below(rng, legal.size())];
    std::string cmd =
        std::string("play ") +
        (board.to_move() == Color::Black ? "b " : "w ") +
        vertex_of(p, 19);
    REQUIRE(respond(engine, cmd) == "= \n\n");
    board = board.play(p).new_board;
  }
  CHECK(engine.board().same_position(board));
  std::string color = board.to_move() == Color::Black ? "b" : "w";
  CHECK(respond(engine, "genmove " + color) == "= pass\n\n");
}

TEST_CASE("self-play audit: genmove never emits an illegal vertex") {
  GtpEngine engine(engine_net(6));
  Board mirror(19);
  int moves = 0, passes = 0;
  for (int i = 0; i < 240; ++i) {
    if (i % 60 == 0) {
      REQUIRE(respond(engine, "clear_board") == "= \n\n");
      mirror = Board(19);
    }
    Color color = mirror.to_move();
    std::string response =
        respond(engine, std::string("genmove ") +
                            (color == Color::Black ? "b" : "w"));
    REQUIRE(response.rfind("= ", 0) == 0);
    std::string vertex = response.substr(2, response.size() - 4);
    if (vertex == "pass") {
      mirror = mirror.pass();
      ++passes;
      continue;
    }
    auto p = vertex_to_point(vertex, 19);
    REQUIRE(p.has_value());
    REQUIRE(mirror.is_legal(*p));  // the audit: legality via goboard
    mirror = mirror.play(*p).new_board;
    ++moves;
    REQUIRE(engine.board().same_position(mirror));
  }
  CHECK(moves + passes == 240);
  CHECK(moves > 200);  // fresh boards: nearly all genmoves are stone plays
}

TEST_CASE("protocol errors") {
  GtpEngine engine(engine_net(7));
  CHECK(respond(engine, "frobnicate") == "? unknown command\n\n");
  CHECK(respond(engine, "play purple D4") == "? syntax error\n\n");
  CHECK(respond(engine, "play b I5") == "? syntax error\n\n");
  CHECK(respond(engine, "play b") == "? syntax error\n\n");
  CHECK(respond(engine, "komi abc") == "? syntax error\n\n");
  CHECK(respond(engine, "boardsize 13") == "? unacceptable size\n\n");
  // Occupied point.
  CHECK(respond(engine, "play b D4") == "= \n\n");
  CHECK(respond(engine, "play w D4") == "? illegal move\n\n");
  // Ids are echoed on errors too.
  CHECK(respond(engine, "42 flub") == "?42 unknown command\n\n");
  CHECK(respond(engine, "7 name") == "=7 tesuji\n\n");
}

TEST_CASE("play accepts either color in any order") {
  GtpEngine engine(engine_net(8));
  CHECK(respond(engine, "play w Q16") == "= \n\n");  // white first is fine
  CHECK(respond(engine, "play white D4") == "= \n\n");
  CHECK(respond(engine, "play BLACK K10") == "= \n\n");
  CHECK(engine.board().at(Point{9, 9}) == PointState::Black);
  CHECK(engine.board().at(*vertex_to_point("Q16", 19)) == PointState::White);
}
