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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tesuji/board.hpp"

namespace tesuji {

/// One game's worth of SGF content: the first game tree's main line.
struct GameRecord {
  struct Move {
    Color color = Color::Black;
    std::optional<Point> point;  // nullopt = pass
  };

  int board_size = 19;
  std::vector<Point> setup_black;
  std::vector<Point> setup_white;
  std::vector<Move> moves;
  std::map<std::string, std::string> metadata;  // first value per property
};

namespace sgf_detail {

struct Node {
  // Property id -> values, in file order.
  std::vector<std::pair<std::string, std::vector<std::string>>> props;
};

struct Tree {
  std::vector<Node> sequence;
  std::vector<Tree> children;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Tree parse_first_tree() {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '(') {
      throw ParseError("expected '(' to open a game tree", pos_);
    }
    return parse_tree();
  }

 private:
  Tree parse_tree() {
    expect('(');
    Tree tree;
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != ';') {
      throw ParseError("game tree must start with a node", pos_);
    }
    while (true) {
      skip_ws();
      if (pos_ >= text_.size()) {
        throw ParseError("unterminated game tree", pos_);
      }
      char c = text_[pos_];
      if (c == ';') {
        ++pos_;
        tree.sequence.push_back(parse_node());
      } else if (c == '(') {
        tree.children.push_back(parse_tree());
      } else if (c == ')') {
        ++pos_;
        return tree;
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'",
                         pos_);
      }
    }
  }

  Node parse_node() {
    Node node;
    while (true) {
      skip_ws();
      if (pos_ >= text_.size()) break;
      if (!std::isalpha(static_cast<unsigned char>(text_[pos_]))) break;
      std::string ident;
      while (pos_ < text_.size() &&
             std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
        // FF[3] idents may carry lowercase filler letters; only the
        // uppercase letters are significant.
        if (std::isupper(static_cast<unsigned char>(text_[pos_]))) {
          ident.push_back(text_[pos_]);
        }
        ++pos_;
      }
      if (ident.empty()) {
        throw ParseError("property ident has no uppercase letters", pos_);
      }
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != '[') {
        throw ParseError("property '" + ident + "' has no value", pos_);
      }
      std::vector<std::string> values;
      while (pos_ < text_.size() && text_[pos_] == '[') {
        values.push_back(parse_value());
        skip_ws();
      }
      node.props.emplace_back(std::move(ident), std::move(values));
    }
    return node;
  }

  std::string parse_value() {
    expect('[');
    std::string value;
    while (true) {
      if (pos_ >= text_.size()) {
        throw ParseError("unterminated property value", pos_);
      }
      char c = text_[pos_++];
      if (c == '\\') {
        if (pos_ >= text_.size()) {
          throw ParseError("dangling escape", pos_);
        }
        value.push_back(text_[pos_++]);
      } else if (c == ']') {
        return value;
      } else {
        value.push_back(c);
      }
    }
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) {
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline Point parse_point(const std::string& v, int size, std::size_t offset) {
  if (v.size() != 2) {
    throw ParseError("bad coordinate '" + v + "'", offset);
  }
  int col = v[0] - 'a';
  int row = v[1] - 'a';
  if (col < 0 || col >= size || row < 0 || row >= size) {
    throw ParseError("coordinate '" + v + "' out of bounds", offset);
  }
  return Point{row, col};
}

// SGF point value: single point "dd" or rectangle "aa:cc".
inline void append_points(std::vector<Point>& out, const std::string& v,
                          int size) {
  auto colon = v.find(':');
  if (colon == std::string::npos) {
    out.push_back(parse_point(v, size, 0));
    return;
  }
  Point a = parse_point(v.substr(0, colon), size, 0);
  Point b = parse_point(v.substr(colon + 1), size, 0);
  for (int r = std::min(a.row, b.row); r <= std::max(a.row, b.row); ++r) {
    for (int c = std::min(a.col, b.col); c <= std::max(a.col, b.col); ++c) {
      out.push_back(Point{r, c});
    }
  }
}

}  // namespace sgf_detail

/// Parses the first game tree's main line (variations ignored). Move
/// coordinates are SGF letters: first letter = column, second = row,
/// "" (and "tt" on boards up to 19) = pass.
inline GameRecord parse_sgf(std::string_view text) {
  sgf_detail::Parser parser(text);
  sgf_detail::Tree tree = parser.parse_first_tree();

  // Linearize the main line: every node of each first child in turn.
  std::vector<const sgf_detail::Node*> nodes;
  const sgf_detail::Tree* cur = &tree;
  while (cur) {
    for (const auto& node : cur->sequence) nodes.push_back(&node);
    cur = cur->children.empty() ? nullptr : &cur->children.front();
  }

  GameRecord game;

  // Board size first: coordinate parsing depends on it.
  for (const auto* node : nodes) {
    for (const auto& [id, values] : node->props) {
      if (id == "SZ" && !values.empty()) {
        int size = 0;
        try {
          size = std::stoi(values.front());
        } catch (const std::exception&) {
          throw ParseError("bad SZ value '" + values.front() + "'", 0);
        }
        if (size < 2 || size > 19) {
          throw ParseError("unsupported board size " + std::to_string(size),
                           0);
        }
        game.board_size = size;
      }
    }
  }

  auto is_pass = [&](const std::string& v) {
    return v.empty() || (game.board_size <= 19 && v == "tt");
  };

  for (const auto* node : nodes) {
    for (const auto& [id, values] : node->props) {
      if (id == "B" || id == "W") {
        Color color = id == "B" ? Color::Black : Color::White;
        const std::string& v = values.empty() ? std::string() : values.front();
        if (is_pass(v)) {
          game.moves.push_back({color, std::nullopt});
        } else {
          game.moves.push_back(
              {color, sgf_detail::parse_point(v, game.board_size, 0)});
        }
      } else if (id == "AB") {
        for (const auto& v : values) {
          sgf_detail::append_points(game.setup_black, v, game.board_size);
        }
      } else if (id == "AW") {
        for (const auto& v : values) {
          sgf_detail::append_points(game.setup_white, v, game.board_size);
        }
      } else if (id != "SZ") {
        if (!values.empty() && !game.metadata.contains(id)) {
          game.metadata.emplace(id, values.front());
        }
      }
    }
  }
  return game;
}

}  // namespace tesuji
