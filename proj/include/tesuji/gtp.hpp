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

#include <cctype>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tesuji/board.hpp"
#include "tesuji/checkpoint.hpp"
#include "tesuji/evaluator.hpp"
#include "tesuji/net.hpp"

namespace tesuji {

inline constexpr const char* kEngineName = "tesuji";
inline constexpr const char* kEngineVersion = "0.1.0";

/// GTP vertex letters skip I: A..H, J..T for 19 columns.
inline std::string vertex_of(Point p, int board_size) {
  char col = static_cast<char>('A' + p.col + (p.col >= 8 ? 1 : 0));
  return std::string(1, col) + std::to_string(board_size - p.row);
}

inline std::optional<Point> vertex_to_point(const std::string& vertex,
                                            int board_size) {
  if (vertex.size() < 2) return std::nullopt;
  char c = static_cast<char>(std::toupper(static_cast<unsigned char>(
      vertex[0])));
  if (c == 'I' || c < 'A' || c > 'T') return std::nullopt;
  int col = c - 'A' - (c > 'I' ? 1 : 0);
  int row_num = 0;
  for (std::size_t i = 1; i < vertex.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(vertex[i]))) {
      return std::nullopt;
    }
    row_num = row_num * 10 + (vertex[i] - '0');
  }
  if (row_num < 1 || row_num > board_size || col >= board_size) {
    return std::nullopt;
  }
  return Point{board_size - row_num, col};
}

/// GTP v2 front end around a move-prediction network. The policy is the
/// network's top-ranked legal move; the engine mirrors an opponent's pass
/// (ending the game by mutual pass), never resigns, and never scores.
class GtpEngine {
 public:
  explicit GtpEngine(Network<float> net)
      : net_(std::move(net)), board_(net_.board_size) {}

  /// Command loop over line-oriented streams. Returns the process exit
  /// status (0 after quit or end of input).
  int run(std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
      Response r = handle(line);
      if (r.text.empty()) continue;  // blank/comment lines are ignored
      out << r.text << std::flush;
      if (r.quit) return 0;
    }
    return 0;
  }

  struct Response {
    std::string text;
    bool quit = false;
  };

  Response handle(const std::string& raw_line) {
    std::string line = preprocess(raw_line);
    std::istringstream in(line);
    std::string token;
    in >> token;

    std::string id;
    if (!token.empty() &&
        std::isdigit(static_cast<unsigned char>(token[0]))) {
      id = token;
      token.clear();
      in >> token;
    }

    if (token.empty() && id.empty()) return {"", false};
    if (token.empty()) return {format(false, id, "unknown command"), false};

    if (token == "protocol_version") return {format(true, id, "2"), false};
    if (token == "name") return {format(true, id, kEngineName), false};
    if (token == "version") return {format(true, id, kEngineVersion), false};
    if (token == "known_command") {
      std::string arg;
      in >> arg;
      return {format(true, id, is_known(arg) ? "true" : "false"), false};
    }
    if (token == "list_commands") {
      std::string commands;
      for (const char* c : kCommands) {
        if (!commands.empty()) commands += "\n";
        commands += c;
      }
      return {format(true, id, commands), false};
    }
    if (token == "quit") return {format(true, id, ""), true};
    if (token == "boardsize") {
      int size = 0;
      in >> size;
      if (size != net_.board_size) {
        return {format(false, id, "unacceptable size"), false};
      }
      return {format(true, id, ""), false};
    }
    if (token == "clear_board") {
      board_ = Board(net_.board_size);
      opponent_passed_last_ = false;
      game_over_ = false;
      return {format(true, id, ""), false};
    }
    if (token == "komi") {
      double komi = 0;
      if (!(in >> komi)) return {format(false, id, "syntax error"), false};
      komi_ = komi;  // accepted; the policy does not use it
      return {format(true, id, ""), false};
    }
    if (token == "play") return {handle_play(in, id), false};
    if (token == "genmove") return {handle_genmove(in, id), false};

    return {format(false, id, "unknown command"), false};
  }

  const Board& board() const { return board_; }
  double komi() const { return komi_; }

 private:
  static constexpr const char* kCommands[] = {
      "protocol_version", "name",        "version", "known_command",
      "list_commands",    "boardsize",   "clear_board", "komi",
      "play",             "genmove",     "quit"};

  static bool is_known(const std::string& name) {
    for (const char* c : kCommands) {
      if (name == c) return true;
    }
    return false;
  }

  static std::string preprocess(const std::string& line) {
    std::string out;
    for (char c : line) {
      if (c == '#') break;  // comment to end of line
      if (c == '\t') c = ' ';
      if (c == '\r' || static_cast<unsigned char>(c) < 32) continue;
      out.push_back(c);
    }
    return out;
  }

  // "=id result\n\n" / "?id error\n\n"; the separator space is kept even
  // for empty results, matching common engines.
  static std::string format(bool ok, const std::string& id,
                            const std::string& payload) {
    return std::string(ok ? "=" : "?") + id + " " + payload + "\n\n";
  }

  static std::optional<Color> parse_color(const std::string& s) {
    std::string lower;
    for (char c : s) {
      lower.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (lower == "b" || lower == "black") return Color::Black;
    if (lower == "w" || lower == "white") return Color::White;
    return std::nullopt;
  }

  std::string handle_play(std::istream& in, const std::string& id) {
    std::string color_arg, vertex_arg;
    in >> color_arg >> vertex_arg;
    auto color = parse_color(color_arg);
    if (!color || vertex_arg.empty()) {
      return format(false, id, "syntax error");
    }
    std::string lower;
    for (char c : vertex_arg) {
      lower.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (lower == "pass") {
      board_ = board_.with_to_move(*color).pass();
      opponent_passed_last_ = true;
      return format(true, id, "");
    }
    auto point = vertex_to_point(vertex_arg, net_.board_size);
    if (!point) return format(false, id, "syntax error");
    Board placed = board_.with_to_move(*color);
    if (!placed.is_legal(*point)) {
      return format(false, id, "illegal move");
    }
    board_ = placed.play(*point).new_board;
    opponent_passed_last_ = false;
    return format(true, id, "");
  }

  std::string handle_genmove(std::istream& in, const std::string& id) {
    std::string color_arg;
    in >> color_arg;
    auto color = parse_color(color_arg);
    if (!color) return format(false, id, "syntax error");

    // Mirror a pass; after the mutual pass the game is over until
    // clear_board, so keep passing.
    if (game_over_ || opponent_passed_last_) {
      game_over_ = true;
      board_ = board_.with_to_move(*color).pass();
      return format(true, id, "pass");
    }

    Board to_play = board_.with_to_move(*color);
    if (to_play.legal_moves().empty()) {
      board_ = to_play.pass();
      return format(true, id, "pass");
    }
    auto ranked = predict_ranked(net_, to_play);
    Point best = ranked.front().first;
    board_ = to_play.play(best).new_board;
    opponent_passed_last_ = false;
    return format(true, id, vertex_of(best, net_.board_size));
  }

  Network<float> net_;
  Board board_;
  bool opponent_passed_last_ = false;
  bool game_over_ = false;
  double komi_ = 0.0;
};

/// Loads the checkpoint and serves GTP until quit/EOF.
inline int run_gtp(const std::filesystem::path& checkpoint, std::istream& in,
                   std::ostream& out) {
  auto loaded = load_checkpoint<float>(checkpoint);
  GtpEngine engine(std::move(loaded.net));
  return engine.run(in, out);
}

}  // namespace tesuji
