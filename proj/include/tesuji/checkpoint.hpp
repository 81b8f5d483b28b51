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

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "tesuji/net.hpp"

namespace tesuji {

/// Training progress captured in a checkpoint. The shuffle permutation is
/// a pure function of (seed, epoch), so seed + progress is a complete
/// restart state.
struct TrainProgress {
  int epoch = 0;             // completed epochs
  std::uint64_t batch = 0;   // completed batches within the current epoch
  std::uint64_t examples_seen = 0;

  friend bool operator==(const TrainProgress&, const TrainProgress&) = default;
};

struct CheckpointMeta {
  std::uint64_t seed = 0;
  TrainProgress progress;
  std::vector<double> val_history;    // one NLL per completed epoch
  std::vector<double> train_history;  // mean train NLL per completed epoch
};

namespace checkpoint_detail {

inline constexpr char kMagic[8] = {'T', 'S', 'J', 'C', 'K', 'P', 'T', '1'};

template <typename Scalar>
const char* scalar_tag() {
  if constexpr (std::is_same_v<Scalar, float>) {
    return "f32";
  } else {
    static_assert(std::is_same_v<Scalar, double>);
    return "f64";
  }
}

template <typename Scalar>
void write_scalars(std::ostream& out, const Scalar* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if constexpr (std::is_same_v<Scalar, float>) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(data[i]);
      char buf[4];
      for (int b = 0; b < 4; ++b) buf[b] = static_cast<char>(bits >> (8 * b));
      out.write(buf, 4);
    } else {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(data[i]);
      char buf[8];
      for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>(bits >> (8 * b));
      out.write(buf, 8);
    }
  }
}

template <typename Scalar>
void read_scalars(std::istream& in, Scalar* data, std::size_t n) {
  constexpr int kWidth = std::is_same_v<Scalar, float> ? 4 : 8;
  std::vector<char> buf(n * kWidth);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!in) throw CorruptDataError("checkpoint parameter block truncated");
  for (std::size_t i = 0; i < n; ++i) {
    if constexpr (std::is_same_v<Scalar, float>) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(
                    static_cast<std::uint8_t>(buf[i * 4 + b]))
                << (8 * b);
      }
      data[i] = std::bit_cast<float>(bits);
    } else {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(
                    static_cast<std::uint8_t>(buf[i * 8 + b]))
                << (8 * b);
      }
      data[i] = std::bit_cast<double>(bits);
    }
  }
}

}  // namespace checkpoint_detail

/// Self-describing checkpoint: magic, JSON header (architecture, encoding,
/// training progress, histories), then per-layer parameter blobs in
/// network order, little-endian IEEE-754.
template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path,
                     const Network<Scalar>& net, const CheckpointMeta& meta) {
  namespace cd = checkpoint_detail;
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["scalar"] = cd::scalar_tag<Scalar>();
  j["board_size"] = net.board_size;
  j["encoding"] = {{"liberties", net.encoding.use_liberties},
                   {"ko_plane", net.encoding.use_ko_plane},
                   {"edge_channel", net.encoding.use_edge_channel}};
  j["tied"] = net.tied;
  j["masked_training"] = net.masked_training;
  j["activation"] = activation_name(net.activation);
  j["conv_layers"] = nlohmann::ordered_json::array();
  for (const auto& l : net.conv_layers) {
    j["conv_layers"].push_back(
        {{"filters", l.out_channels}, {"kernel", l.kernel}});
  }
  j["seed"] = meta.seed;
  j["progress"] = {{"epoch", meta.progress.epoch},
                   {"batch", meta.progress.batch},
                   {"examples_seen", meta.progress.examples_seen}};
  // NaN marks epochs without a validation split; JSON stores it as null.
  auto history_json = [](const std::vector<double>& h) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (double v : h) {
      if (std::isfinite(v)) {
        a.push_back(v);
      } else {
        a.push_back(nullptr);
      }
    }
    return a;
  };
  j["val_history"] = history_json(meta.val_history);
  j["train_history"] = history_json(meta.train_history);
  std::string header = j.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(cd::kMagic, 8);
  std::uint64_t len = header.size();
  char lenbuf[8];
  for (int b = 0; b < 8; ++b) lenbuf[b] = static_cast<char>(len >> (8 * b));
  out.write(lenbuf, 8);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  auto views = net.param_views();
  auto sizes = net.param_sizes();
  for (std::size_t i = 0; i < views.size(); ++i) {
    cd::write_scalars(out, views[i], sizes[i]);
  }
  if (!out) throw IoError("short write to checkpoint " + path.string());
}

template <typename Scalar>
struct LoadedCheckpoint {
  Network<Scalar> net;
  CheckpointMeta meta;
};

template <typename Scalar = float>
LoadedCheckpoint<Scalar> load_checkpoint(const std::filesystem::path& path) {
  namespace cd = checkpoint_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, cd::kMagic, 8) != 0) {
    throw CorruptDataError("bad checkpoint magic in " + path.string());
  }
  char lenbuf[8];
  in.read(lenbuf, 8);
  if (!in) throw CorruptDataError("truncated checkpoint header");
  std::uint64_t len = 0;
  for (int b = 0; b < 8; ++b) {
    len |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(lenbuf[b]))
           << (8 * b);
  }
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw CorruptDataError("truncated checkpoint header");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptDataError("bad checkpoint JSON: " + std::string(e.what()));
  }
  if (j.at("format_version").get<int>() != 1) {
    throw CorruptDataError("unsupported checkpoint version");
  }
  if (j.at("scalar").get<std::string>() !=
      std::string(cd::scalar_tag<Scalar>())) {
    throw CorruptDataError("checkpoint scalar type mismatch");
  }

  EncodingConfig encoding;
  encoding.use_liberties = j.at("encoding").at("liberties").get<bool>();
  encoding.use_ko_plane = j.at("encoding").at("ko_plane").get<bool>();
  encoding.use_edge_channel = j.at("encoding").at("edge_channel").get<bool>();
  std::vector<typename Network<Scalar>::ConvSpec> convs;
  for (const auto& l : j.at("conv_layers")) {
    convs.push_back(
        {l.at("filters").get<int>(), l.at("kernel").get<int>()});
  }
  LoadedCheckpoint<Scalar> loaded{
      Network<Scalar>::make(
          j.at("board_size").get<int>(), encoding, convs,
          j.at("tied").get<bool>(), j.at("masked_training").get<bool>(),
          activation_from_name(j.at("activation").get<std::string>())),
      {}};
  loaded.meta.seed = j.at("seed").get<std::uint64_t>();
  loaded.meta.progress.epoch = j.at("progress").at("epoch").get<int>();
  loaded.meta.progress.batch =
      j.at("progress").at("batch").get<std::uint64_t>();
  loaded.meta.progress.examples_seen =
      j.at("progress").at("examples_seen").get<std::uint64_t>();
  auto history_from = [](const nlohmann::json& a) {
    std::vector<double> h;
    for (const auto& v : a) {
      h.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                              : v.get<double>());
    }
    return h;
  };
  loaded.meta.val_history = history_from(j.at("val_history"));
  loaded.meta.train_history = history_from(j.at("train_history"));

  auto views = loaded.net.param_views();
  auto sizes = loaded.net.param_sizes();
  for (std::size_t i = 0; i < views.size(); ++i) {
    cd::read_scalars(in, views[i], sizes[i]);
  }
  loaded.net.expand_all();
  return loaded;
}

}  // namespace tesuji
