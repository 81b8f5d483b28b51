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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tesuji/board.hpp"
#include "tesuji/encoder.hpp"
#include "tesuji/rng.hpp"
#include "tesuji/sgf.hpp"

namespace tesuji {

/// One (position, expert move) pair in the fixed 98-byte wire layout:
/// packed 2-bit occupancy (91 bytes), side to move (1), ko point (2),
/// target point (2), move number (2); multi-byte fields little-endian,
/// 0xFFFF = no ko point.
struct PositionRecord {
  static constexpr std::size_t kBytes = 98;
  static constexpr std::uint16_t kNoKo = 0xFFFF;

  std::array<std::uint8_t, 91> occupancy{};
  std::uint8_t to_move = 0;  // 0 = black, 1 = white
  std::uint16_t ko = kNoKo;
  std::uint16_t target = 0;
  std::uint16_t move_number = 0;

  void set_occupancy(int idx, PointState s) {
    int shift = 2 * (idx % 4);
    occupancy[idx / 4] = static_cast<std::uint8_t>(
        (occupancy[idx / 4] & ~(0x3 << shift)) |
        (static_cast<int>(s) << shift));
  }

  PointState get_occupancy(int idx) const {
    return static_cast<PointState>((occupancy[idx / 4] >> (2 * (idx % 4))) &
                                   0x3);
  }

  void serialize(std::uint8_t* out) const {
    std::memcpy(out, occupancy.data(), 91);
    out[91] = to_move;
    out[92] = static_cast<std::uint8_t>(ko & 0xFF);
    out[93] = static_cast<std::uint8_t>(ko >> 8);
    out[94] = static_cast<std::uint8_t>(target & 0xFF);
    out[95] = static_cast<std::uint8_t>(target >> 8);
    out[96] = static_cast<std::uint8_t>(move_number & 0xFF);
    out[97] = static_cast<std::uint8_t>(move_number >> 8);
  }

  static PositionRecord deserialize(const std::uint8_t* in) {
    PositionRecord rec;
    std::memcpy(rec.occupancy.data(), in, 91);
    rec.to_move = in[91];
    rec.ko = static_cast<std::uint16_t>(in[92] | (in[93] << 8));
    rec.target = static_cast<std::uint16_t>(in[94] | (in[95] << 8));
    rec.move_number = static_cast<std::uint16_t>(in[96] | (in[97] << 8));
    return rec;
  }

  /// Snapshot of the position the record was taken from; move_count is
  /// restored from the move number.
  Board to_board() const {
    Board b(kBoardSize);
    std::vector<Point> black, white;
    for (int idx = 0; idx < kNumPoints; ++idx) {
      PointState s = get_occupancy(idx);
      if (s == PointState::Black) black.push_back(b.point_of(idx));
      if (s == PointState::White) white.push_back(b.point_of(idx));
    }
    b = Board::with_setup(kBoardSize, black, white);
    b = b.with_to_move(to_move == 0 ? Color::Black : Color::White);
    if (ko != kNoKo) b = b.with_ko(b.point_of(ko));
    return b.with_move_count(move_number);
  }

  static PositionRecord from_board(const Board& board, Point target_point) {
    if (board.size() != kBoardSize) {
      throw ShapeError("position records are 19x19 only");
    }
    PositionRecord rec;
    for (int idx = 0; idx < kNumPoints; ++idx) {
      rec.set_occupancy(idx, board.grid()[idx]);
    }
    rec.to_move = board.to_move() == Color::Black ? 0 : 1;
    rec.ko = board.ko_point()
                 ? static_cast<std::uint16_t>(board.index_of(*board.ko_point()))
                 : kNoKo;
    rec.target = static_cast<std::uint16_t>(board.index_of(target_point));
    rec.move_number = static_cast<std::uint16_t>(
        std::min(board.move_count(), 0xFFFE));
    return rec;
  }

  friend bool operator==(const PositionRecord&, const PositionRecord&) =
      default;
};

/// Replays a parsed game, emitting one record per non-pass move with the
/// position immediately before that move. Setup stones are placed first;
/// passes advance the turn and emit nothing.
inline std::vector<PositionRecord> replay(const GameRecord& game,
                                          const std::string& game_id = "?") {
  if (game.board_size != kBoardSize) {
    throw ReplayError("board size " + std::to_string(game.board_size) +
                          " unsupported",
                      game_id, -1);
  }
  Board board = [&] {
    try {
      return Board::with_setup(kBoardSize, game.setup_black, game.setup_white);
    } catch (const Error& e) {
      throw ReplayError(std::string("bad setup: ") + e.what(), game_id, -1);
    }
  }();

  std::vector<PositionRecord> records;
  records.reserve(game.moves.size());
  for (std::size_t i = 0; i < game.moves.size(); ++i) {
    const auto& move = game.moves[i];
    // SGF move colors are authoritative (handicap games open with White).
    if (board.to_move() != move.color) {
      board = board.with_to_move(move.color);
    }
    if (!move.point) {
      board = board.pass();
      continue;
    }
    if (auto reason = board.classify(*move.point)) {
      throw ReplayError(std::string("illegal move (") +
                            IllegalMoveError::reason_name(*reason) + ")",
                        game_id, static_cast<int>(i));
    }
    records.push_back(PositionRecord::from_board(board, *move.point));
    board = board.play(*move.point).new_board;
  }
  return records;
}

// ---------------------------------------------------------------------------
// Shard files

namespace dataset_detail {

inline constexpr char kShardMagic[8] = {'T', 'S', 'J', 'S',
                                        'H', 'A', 'R', 'D'};
inline constexpr std::uint32_t kShardVersion = 1;
inline constexpr std::size_t kShardHeaderBytes = 8 + 4 + 4 + 8;

inline std::uint64_t fnv1a(const std::uint8_t* data, std::size_t len,
                           std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < len; ++i) {
    hash ^= data[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline void put_u32(std::uint8_t* out, std::uint32_t v) {
  out[0] = v & 0xFF;
  out[1] = (v >> 8) & 0xFF;
  out[2] = (v >> 16) & 0xFF;
  out[3] = (v >> 24) & 0xFF;
}

inline void put_u64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = (v >> (8 * i)) & 0xFF;
}

inline std::uint32_t get_u32(const std::uint8_t* in) {
  return static_cast<std::uint32_t>(in[0]) |
         (static_cast<std::uint32_t>(in[1]) << 8) |
         (static_cast<std::uint32_t>(in[2]) << 16) |
         (static_cast<std::uint32_t>(in[3]) << 24);
}

inline std::uint64_t get_u64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

}  // namespace dataset_detail

/// Writes a shard: header (magic, version, record count, payload
/// checksum) followed by fixed-size records.
inline std::uint64_t write_shard(const std::filesystem::path& path,
                                 const std::vector<PositionRecord>& records) {
  namespace dd = dataset_detail;
  std::vector<std::uint8_t> payload(records.size() * PositionRecord::kBytes);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].serialize(payload.data() + i * PositionRecord::kBytes);
  }
  std::uint64_t checksum = dd::fnv1a(payload.data(), payload.size());

  std::uint8_t header[dd::kShardHeaderBytes];
  std::memcpy(header, dd::kShardMagic, 8);
  dd::put_u32(header + 8, dd::kShardVersion);
  dd::put_u32(header + 12, static_cast<std::uint32_t>(records.size()));
  dd::put_u64(header + 16, checksum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write shard " + path.string());
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("short write to shard " + path.string());
  return checksum;
}

/// Reads and verifies a whole shard.
inline std::vector<PositionRecord> read_shard(
    const std::filesystem::path& path) {
  namespace dd = dataset_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open shard " + path.string());
  std::uint8_t header[dd::kShardHeaderBytes];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(header, dd::kShardMagic, 8) != 0) {
    throw CorruptDataError("bad shard magic in " + path.string());
  }
  if (dd::get_u32(header + 8) != dd::kShardVersion) {
    throw CorruptDataError("unsupported shard version in " + path.string());
  }
  std::uint32_t count = dd::get_u32(header + 12);
  std::uint64_t checksum = dd::get_u64(header + 16);
  std::vector<std::uint8_t> payload(static_cast<std::size_t>(count) *
                                    PositionRecord::kBytes);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  if (!in || in.gcount() != static_cast<std::streamsize>(payload.size())) {
    throw CorruptDataError("truncated shard " + path.string());
  }
  if (dd::fnv1a(payload.data(), payload.size()) != checksum) {
    throw CorruptDataError("checksum mismatch in shard " + path.string());
  }
  std::vector<PositionRecord> records(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    records[i] =
        PositionRecord::deserialize(payload.data() + i * PositionRecord::kBytes);
  }
  return records;
}

// ---------------------------------------------------------------------------
// Manifest

struct ShardEntry {
  std::string path;  // relative to the manifest's directory
  std::uint64_t records = 0;
  std::string checksum;
};

struct SplitInfo {
  std::uint64_t games = 0;
  std::uint64_t examples = 0;
  std::vector<ShardEntry> shards;
};

struct DatasetManifest {
  int format_version = 1;
  int board_size = kBoardSize;
  std::uint64_t seed = 0;
  std::array<double, 3> fractions{1.0, 0.0, 0.0};
  std::string source_checksum;
  bool includes_setup_games = true;
  std::map<std::string, SplitInfo> splits;  // "train", "val", "test"
  std::filesystem::path base_dir;           // set on load, not serialized

  const SplitInfo& split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) {
      throw ConfigError("manifest has no split '" + name + "'");
    }
    return it->second;
  }
};

inline std::string to_json_text(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["format_version"] = m.format_version;
  j["board_size"] = m.board_size;
  j["seed"] = m.seed;
  j["fractions"] = m.fractions;
  j["source_checksum"] = m.source_checksum;
  j["includes_setup_games"] = m.includes_setup_games;
  for (const auto& [name, info] : m.splits) {
    nlohmann::ordered_json js;
    js["games"] = info.games;
    js["examples"] = info.examples;
    js["shards"] = nlohmann::ordered_json::array();
    for (const auto& s : info.shards) {
      js["shards"].push_back({{"path", s.path},
                              {"records", s.records},
                              {"checksum", s.checksum}});
    }
    j["splits"][name] = std::move(js);
  }
  return j.dump(2) + "\n";
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptDataError("bad manifest JSON: " + std::string(e.what()));
  }
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    m.board_size = j.at("board_size").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.fractions = j.at("fractions").get<std::array<double, 3>>();
    m.source_checksum = j.at("source_checksum").get<std::string>();
    m.includes_setup_games = j.at("includes_setup_games").get<bool>();
    for (const auto& [name, js] : j.at("splits").items()) {
      SplitInfo info;
      info.games = js.at("games").get<std::uint64_t>();
      info.examples = js.at("examples").get<std::uint64_t>();
      for (const auto& s : js.at("shards")) {
        info.shards.push_back({s.at("path").get<std::string>(),
                               s.at("records").get<std::uint64_t>(),
                               s.at("checksum").get<std::string>()});
      }
      m.splits.emplace(name, std::move(info));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptDataError("manifest missing fields: " +
                           std::string(e.what()));
  }
  if (m.format_version != 1) {
    throw CorruptDataError("unsupported manifest version");
  }
  m.base_dir = path.parent_path();
  return m;
}

// ---------------------------------------------------------------------------
// Dataset building

struct IngestOptions {
  std::array<double, 3> fractions{0.88, 0.04, 0.08};  // train, val, test
  std::uint64_t seed = 1;
  int jobs = 1;
  std::size_t shard_capacity = 16384;  // records per shard file
};

struct IngestReport {
  std::uint64_t games_found = 0;
  std::uint64_t games_used = 0;
  std::vector<std::pair<std::string, std::string>> rejects;  // path, reason
};

namespace dataset_detail {

struct ParsedGame {
  std::string rel_path;
  std::vector<PositionRecord> records;
  bool ok = false;
  std::string reject_reason;
};

inline void parse_one(const std::filesystem::path& root,
                      const std::filesystem::path& path, ParsedGame& out) {
  out.rel_path = std::filesystem::relative(path, root).generic_string();
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    out.reject_reason = "unreadable";
    return;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    GameRecord game = parse_sgf(text);
    out.records = replay(game, out.rel_path);
    if (out.records.empty()) {
      out.reject_reason = "no trainable moves";
      return;
    }
    out.ok = true;
  } catch (const Error& e) {
    out.reject_reason = e.what();
  }
}

}  // namespace dataset_detail

/// Discovers .sgf files under sgf_dir, splits whole games into
/// train/val/test by seeded shuffle, replays them, and writes shards plus
/// a manifest and a rejects report under out_dir. Deterministic for a
/// fixed seed and corpus.
inline DatasetManifest build_dataset(const std::filesystem::path& sgf_dir,
                                     const std::filesystem::path& out_dir,
                                     const IngestOptions& options,
                                     IngestReport* report_out = nullptr) {
  namespace fs = std::filesystem;
  namespace dd = dataset_detail;

  double fraction_sum =
      options.fractions[0] + options.fractions[1] + options.fractions[2];
  if (std::abs(fraction_sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }

  std::vector<fs::path> files;
  if (!fs::exists(sgf_dir)) {
    throw IoError("sgf directory does not exist: " + sgf_dir.string());
  }
  for (const auto& entry : fs::recursive_directory_iterator(sgf_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".sgf") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw Error("empty corpus: no .sgf files under " + sgf_dir.string());
  }

  // Corpus checksum over sorted relative paths and contents.
  std::uint64_t source_hash = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    std::string rel = fs::relative(f, sgf_dir).generic_string();
    source_hash = dd::fnv1a(
        reinterpret_cast<const std::uint8_t*>(rel.data()), rel.size(),
        source_hash);
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    source_hash = dd::fnv1a(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size(),
        source_hash);
  }

  // Parse + replay, optionally across threads; results keyed by file order.
  std::vector<dd::ParsedGame> parsed(files.size());
  int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < files.size(); ++i) {
      dd::parse_one(sgf_dir, files[i], parsed[i]);
    }
  } else {
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        while (true) {
          std::size_t i = next.fetch_add(1);
          if (i >= files.size()) return;
          dd::parse_one(sgf_dir, files[i], parsed[i]);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  IngestReport report;
  report.games_found = files.size();
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].ok) {
      usable.push_back(i);
    } else {
      report.rejects.emplace_back(parsed[i].rel_path,
                                  parsed[i].reject_reason);
    }
  }
  if (usable.empty()) {
    throw Error("empty corpus: no usable games under " + sgf_dir.string());
  }
  report.games_used = usable.size();

  // Whole-game split assignment from a seeded shuffle.
  std::mt19937_64 rng(derive_seed(options.seed, /*stream=*/7));
  deterministic_shuffle(usable, rng);
  const std::size_t n = usable.size();
  auto boundary = [&](double f) {
    return static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
  };
  std::size_t train_end = boundary(options.fractions[0]);
  std::size_t val_end = boundary(options.fractions[0] + options.fractions[1]);

  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.seed = options.seed;
  manifest.fractions = options.fractions;
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv64:%016llx",
                  static_cast<unsigned long long>(source_hash));
    manifest.source_checksum = buf;
  }

  struct SplitSlice {
    const char* name;
    std::size_t begin, end;
  };
  const SplitSlice slices[3] = {{"train", 0, train_end},
                                {"val", train_end, val_end},
                                {"test", val_end, n}};
  for (const auto& slice : slices) {
    SplitInfo info;
    info.games = slice.end - slice.begin;
    std::vector<PositionRecord> pending;
    int shard_index = 0;
    auto flush = [&]() {
      if (pending.empty()) return;
      char name[64];
      std::snprintf(name, sizeof(name), "%s-%05d.shard", slice.name,
                    shard_index++);
      std::uint64_t checksum = write_shard(out_dir / name, pending);
      char sum[32];
      std::snprintf(sum, sizeof(sum), "fnv64:%016llx",
                    static_cast<unsigned long long>(checksum));
      info.shards.push_back({name, pending.size(), sum});
      info.examples += pending.size();
      pending.clear();
    };
    for (std::size_t i = slice.begin; i < slice.end; ++i) {
      const auto& records = parsed[usable[i]].records;
      for (const auto& rec : records) {
        pending.push_back(rec);
        if (pending.size() >= options.shard_capacity) flush();
      }
    }
    flush();
    // An empty split still appears in the manifest, with zero shards.
    manifest.splits.emplace(slice.name, std::move(info));
  }

  {
    std::ofstream out(out_dir / "manifest.json",
                      std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest under " + out_dir.string());
    out << to_json_text(manifest);
  }
  {
    std::sort(report.rejects.begin(), report.rejects.end());
    std::ofstream out(out_dir / "rejects.txt",
                      std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write rejects report");
    out << "# games rejected during ingest: " << report.rejects.size() << " of "
        << report.games_found << "\n";
    for (const auto& [path, reason] : report.rejects) {
      out << path << "\t" << reason << "\n";
    }
  }

  manifest.base_dir = out_dir;
  if (report_out) *report_out = std::move(report);
  return manifest;
}

// ---------------------------------------------------------------------------
// Random-access reads

/// Random access into one split's shards. Each shard is checksum-verified
/// once on first touch. Instances are not thread-safe; concurrent readers
/// should each own one.
class DatasetReader {
 public:
  DatasetReader(const DatasetManifest& manifest, const std::string& split)
      : base_dir_(manifest.base_dir) {
    const SplitInfo& info = manifest.split(split);
    std::uint64_t offset = 0;
    for (const auto& shard : info.shards) {
      starts_.push_back(offset);
      offset += shard.records;
      shards_.push_back(shard);
    }
    total_ = offset;
    if (total_ != info.examples) {
      throw CorruptDataError("manifest example count does not match shards");
    }
    cache_.resize(shards_.size());
  }

  std::uint64_t size() const { return total_; }

  PositionRecord get(std::uint64_t index) {
    if (index >= total_) {
      throw Error("dataset index " + std::to_string(index) +
                  " out of range (size " + std::to_string(total_) + ")");
    }
    std::size_t shard = 0;
    while (shard + 1 < starts_.size() && starts_[shard + 1] <= index) ++shard;
    auto& records = cache_[shard];
    if (records.empty()) {
      records = read_shard(base_dir_ / shards_[shard].path);
      if (records.size() != shards_[shard].records) {
        throw CorruptDataError("shard record count mismatch: " +
                               shards_[shard].path);
      }
    }
    return records[index - starts_[shard]];
  }

  std::vector<PositionRecord> load_batch(
      const std::vector<std::uint64_t>& indices) {
    std::vector<PositionRecord> out;
    out.reserve(indices.size());
    for (auto idx : indices) out.push_back(get(idx));
    return out;
  }

 private:
  std::filesystem::path base_dir_;
  std::vector<ShardEntry> shards_;
  std::vector<std::uint64_t> starts_;
  std::vector<std::vector<PositionRecord>> cache_;
  std::uint64_t total_ = 0;
};

/// Per-op convenience matching the dataset contract.
inline std::vector<PositionRecord> load_batch(
    const DatasetManifest& manifest, const std::string& split,
    const std::vector<std::uint64_t>& indices) {
  DatasetReader reader(manifest, split);
  return reader.load_batch(indices);
}

}  // namespace tesuji
