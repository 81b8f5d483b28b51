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
#include <stdexcept>
#include <string>

namespace tesuji {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (SGF, config). Carries the byte offset of the
/// first offending character.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// A recorded game could not be replayed through the rules engine.
class ReplayError : public Error {
 public:
  ReplayError(const std::string& what, std::string game_id, int move_index)
      : Error(what + " [game " + game_id + ", move " +
              std::to_string(move_index) + "]"),
        game_id_(std::move(game_id)),
        move_index_(move_index) {}
  const std::string& game_id() const { return game_id_; }
  int move_index() const { return move_index_; }

 private:
  std::string game_id_;
  int move_index_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Stored data failed an integrity check (bad magic, version, checksum).
class CorruptDataError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration (layer shapes, schedules, flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor/layer shape mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Training loss became non-finite or exceeded the divergence threshold.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace tesuji
