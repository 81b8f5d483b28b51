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

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tesuji/checkpoint.hpp"
#include "tesuji/dataset.hpp"
#include "tesuji/net.hpp"
#include "tesuji/rng.hpp"

namespace tesuji {

struct SchedulePhase {
  int epochs = 0;
  double lr = 0.0;
};

struct TrainConfig {
  std::vector<Network<float>::ConvSpec> conv_layers{{16, 5}};
  EncodingConfig encoding;
  bool tied = true;
  bool masked_training = true;
  Activation activation = Activation::Relu;
  int batch_size = 128;
  std::vector<SchedulePhase> schedule{{7, 0.05}, {2, 0.01}, {1, 0.005}};
  std::uint64_t seed = 1;
  std::string manifest_path;
  std::string checkpoint_dir = "checkpoints";
  std::string resume_from;  // optional checkpoint to continue
  int jobs = 1;
  bool deterministic = false;
  std::uint64_t max_train_examples = 0;  // 0 = whole split
  std::uint64_t max_val_examples = 0;

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (schedule.empty()) throw ConfigError("schedule must be nonempty");
    for (const auto& phase : schedule) {
      if (phase.epochs < 0) throw ConfigError("schedule epochs must be >= 0");
      if (phase.lr <= 0) throw ConfigError("learning rates must be > 0");
    }
  }

  int total_epochs() const {
    int n = 0;
    for (const auto& phase : schedule) n += phase.epochs;
    return n;
  }

  double lr_for_epoch(int epoch) const {
    int e = epoch;
    for (const auto& phase : schedule) {
      if (e < phase.epochs) return phase.lr;
      e -= phase.epochs;
    }
    return schedule.back().lr;
  }
};

/// Parses the documented JSON schema; unknown keys are rejected so typos
/// fail loudly.
inline TrainConfig parse_train_config(const nlohmann::json& j) {
  TrainConfig cfg;
  static const std::vector<std::string> known = {
      "conv_layers", "encoding",      "tied",          "masked_training",
      "activation",  "batch_size",    "schedule",      "seed",
      "manifest",    "checkpoint_dir", "resume_from",  "jobs",
      "deterministic", "max_train_examples", "max_val_examples"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  try {
    if (j.contains("conv_layers")) {
      cfg.conv_layers.clear();
      for (const auto& l : j.at("conv_layers")) {
        cfg.conv_layers.push_back(
            {l.at("filters").get<int>(), l.at("kernel").get<int>()});
      }
    }
    if (j.contains("encoding")) {
      const auto& e = j.at("encoding");
      if (e.contains("liberties")) {
        cfg.encoding.use_liberties = e.at("liberties").get<bool>();
      }
      if (e.contains("ko_plane")) {
        cfg.encoding.use_ko_plane = e.at("ko_plane").get<bool>();
      }
      if (e.contains("edge_channel")) {
        cfg.encoding.use_edge_channel = e.at("edge_channel").get<bool>();
      }
    }
    if (j.contains("tied")) cfg.tied = j.at("tied").get<bool>();
    if (j.contains("masked_training")) {
      cfg.masked_training = j.at("masked_training").get<bool>();
    }
    if (j.contains("activation")) {
      cfg.activation =
          activation_from_name(j.at("activation").get<std::string>());
    }
    if (j.contains("batch_size")) {
      cfg.batch_size = j.at("batch_size").get<int>();
    }
    if (j.contains("schedule")) {
      cfg.schedule.clear();
      for (const auto& s : j.at("schedule")) {
        cfg.schedule.push_back(
            {s.at("epochs").get<int>(), s.at("lr").get<double>()});
      }
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("manifest")) {
      cfg.manifest_path = j.at("manifest").get<std::string>();
    }
    if (j.contains("checkpoint_dir")) {
      cfg.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
    }
    if (j.contains("resume_from")) {
      cfg.resume_from = j.at("resume_from").get<std::string>();
    }
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
    if (j.contains("deterministic")) {
      cfg.deterministic = j.at("deterministic").get<bool>();
    }
    if (j.contains("max_train_examples")) {
      cfg.max_train_examples =
          j.at("max_train_examples").get<std::uint64_t>();
    }
    if (j.contains("max_val_examples")) {
      cfg.max_val_examples = j.at("max_val_examples").get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad config value: " + std::string(e.what()));
  }
  cfg.validate();
  return cfg;
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad config JSON: " + std::string(e.what()));
  }
  return parse_train_config(j);
}

/// Fresh network with orbit parameters ~ Normal(0, 0.01^2) from the seeded
/// generator and all biases zero.
inline Network<float> init_network(const TrainConfig& cfg,
                                   std::uint64_t seed) {
  cfg.validate();
  auto net = Network<float>::make(kBoardSize, cfg.encoding, cfg.conv_layers,
                                  cfg.tied, cfg.masked_training,
                                  cfg.activation);
  std::mt19937_64 rng(derive_seed(seed, /*stream=*/1));
  NormalSampler normal(rng);
  for (auto& layer : net.conv_layers) {
    for (auto& p : layer.params) p = static_cast<float>(normal() * 0.01);
    // biases stay zero
  }
  for (auto& p : net.dense.params) p = static_cast<float>(normal() * 0.01);
  net.expand_all();
  return net;
}

namespace train_detail {

template <typename Scalar>
struct ExampleView {
  Tensor<Scalar> input;
  std::vector<std::uint8_t> mask;
  int target = 0;
};

template <typename Scalar>
ExampleView<Scalar> decode_example(const PositionRecord& rec,
                                   const Network<Scalar>& net) {
  ExampleView<Scalar> ex;
  Board board = rec.to_board();
  ex.input = encode<Scalar>(board, net.encoding);
  if (net.masked_training) {
    ex.mask = legal_mask(board);
  } else {
    ex.mask.assign(kNumPoints, 1);
  }
  ex.target = rec.target;
  if (!ex.mask[ex.target]) {
    throw CorruptDataError("stored target is not legal on decoded board");
  }
  return ex;
}

}  // namespace train_detail

/// One SGD step on a batch of records: parameters -= lr * mean gradient.
/// Returns the mean negative log likelihood. Worker slices are contiguous
/// and reduced in worker order, so results are reproducible for a fixed
/// job count.
template <typename Scalar>
double sgd_step(Network<Scalar>& net,
                const std::vector<PositionRecord>& batch, double lr,
                int jobs = 1) {
  if (batch.empty()) throw ConfigError("sgd_step: empty batch");
  if (lr < 0) throw ConfigError("sgd_step: negative learning rate");
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(batch.size())));

  std::vector<GradientBuffer<Scalar>> grads;
  grads.reserve(jobs);
  for (int w = 0; w < jobs; ++w) grads.push_back(net.make_gradient_buffer());
  std::vector<double> losses(jobs, 0.0);

  auto run_slice = [&](int w, std::size_t begin, std::size_t end) {
    ForwardContext<Scalar> ctx;
    double loss = 0;
    for (std::size_t i = begin; i < end; ++i) {
      auto ex = train_detail::decode_example(batch[i], net);
      loss += net.backward(ex.input, ex.mask, ex.target, grads[w], ctx);
    }
    losses[w] = loss;
  };

  if (jobs == 1) {
    run_slice(0, 0, batch.size());
  } else {
    std::vector<std::thread> workers;
    std::size_t per = (batch.size() + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
      std::size_t begin = std::min(batch.size(), w * per);
      std::size_t end = std::min(batch.size(), begin + per);
      workers.emplace_back(run_slice, w, begin, end);
    }
    for (auto& t : workers) t.join();
  }

  for (int w = 1; w < jobs; ++w) grads[0].add(grads[w]);
  double total_loss = 0;
  for (int w = 0; w < jobs; ++w) total_loss += losses[w];
  double mean_loss = total_loss / static_cast<double>(batch.size());

  if (!std::isfinite(mean_loss)) {
    throw DivergenceError("non-finite batch loss");
  }
  net.apply_gradients(grads[0],
                      static_cast<Scalar>(lr / static_cast<double>(batch.size())));
  return mean_loss;
}

/// Mean NLL over up to `limit` examples of a reader (0 = all), using the
/// network's own masking mode.
template <typename Scalar>
double validate(const Network<Scalar>& net, DatasetReader& reader,
                std::uint64_t limit = 0) {
  std::uint64_t n = reader.size();
  if (limit > 0 && limit < n) n = limit;
  if (n == 0) throw Error("validation split is empty");
  ForwardContext<Scalar> ctx;
  double total = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto ex = train_detail::decode_example(reader.get(i), net);
    auto probs = net.forward(ex.input, ex.mask, ctx);
    double p = std::max<double>(probs[ex.target], 1e-45);
    total += -std::log(p);
  }
  return total / static_cast<double>(n);
}

struct BatchEvent {
  int epoch = 0;
  std::uint64_t batch = 0;
  std::uint64_t batches_per_epoch = 0;
  double lr = 0;
  double loss = 0;
};

struct TrainResult {
  std::filesystem::path final_checkpoint;
  CheckpointMeta meta;
  bool stopped_early = false;
};

/// Runs the annealing schedule over the train split with per-epoch
/// validation and checkpointing. A callback returning false stops the run
/// cleanly after writing a mid-epoch checkpoint (also the resume point).
inline TrainResult train(
    const TrainConfig& cfg, std::ostream& log = std::cout,
    const std::function<bool(const BatchEvent&)>& callback = {}) {
  cfg.validate();
  namespace fs = std::filesystem;
  if (cfg.manifest_path.empty()) {
    throw ConfigError("train: manifest path required");
  }
  DatasetManifest manifest = load_manifest(cfg.manifest_path);
  DatasetReader train_reader(manifest, "train");
  std::uint64_t train_n = train_reader.size();
  if (cfg.max_train_examples > 0 && cfg.max_train_examples < train_n) {
    train_n = cfg.max_train_examples;
  }
  if (train_n == 0) throw Error("train split is empty");

  bool has_val = manifest.split("val").examples > 0;

  int jobs = cfg.deterministic ? 1 : std::max(1, cfg.jobs);

  Network<float> net;
  CheckpointMeta meta;
  if (!cfg.resume_from.empty()) {
    auto loaded = load_checkpoint<float>(cfg.resume_from);
    net = std::move(loaded.net);
    meta = std::move(loaded.meta);
    if (net.encoding != cfg.encoding || net.tied != cfg.tied ||
        net.masked_training != cfg.masked_training) {
      throw ConfigError("resume: checkpoint disagrees with config");
    }
    if (meta.seed != cfg.seed) {
      throw ConfigError("resume: checkpoint seed disagrees with config");
    }
  } else {
    net = init_network(cfg, cfg.seed);
    meta.seed = cfg.seed;
  }

  fs::create_directories(cfg.checkpoint_dir);
  auto checkpoint_path = [&](const TrainProgress& p) {
    char name[64];
    std::snprintf(name, sizeof(name), "ckpt-e%04d-b%06llu.tsjn", p.epoch,
                  static_cast<unsigned long long>(p.batch));
    return fs::path(cfg.checkpoint_dir) / name;
  };

  const std::uint64_t batches_per_epoch =
      (train_n + cfg.batch_size - 1) / cfg.batch_size;
  const int total_epochs = cfg.total_epochs();
  const double divergence_limit = 10.0 * std::log(361.0);

  TrainResult result;
  fs::path last_good = cfg.resume_from.empty() ? fs::path()
                                               : fs::path(cfg.resume_from);

  for (int epoch = meta.progress.epoch; epoch < total_epochs; ++epoch) {
    const double lr = cfg.lr_for_epoch(epoch);
    auto t0 = std::chrono::steady_clock::now();

    // Seeded epoch permutation; resuming mid-epoch replays the same one.
    std::vector<std::uint64_t> perm(train_n);
    for (std::uint64_t i = 0; i < train_n; ++i) perm[i] = i;
    std::mt19937_64 rng(derive_seed(cfg.seed, 1000 + epoch));
    deterministic_shuffle(perm, rng);

    std::uint64_t start_batch =
        (epoch == meta.progress.epoch) ? meta.progress.batch : 0;
    double epoch_loss = 0;
    std::uint64_t epoch_examples = 0;

    for (std::uint64_t b = start_batch; b < batches_per_epoch; ++b) {
      std::uint64_t begin = b * cfg.batch_size;
      std::uint64_t end = std::min<std::uint64_t>(begin + cfg.batch_size,
                                                  train_n);
      std::vector<std::uint64_t> indices(perm.begin() + begin,
                                         perm.begin() + end);
      std::vector<PositionRecord> batch = train_reader.load_batch(indices);
      double loss;
      try {
        loss = sgd_step(net, batch, lr, jobs);
      } catch (const DivergenceError& e) {
        log << "divergence at epoch " << epoch << " batch " << b << ": "
            << e.what() << " (last good checkpoint: " << last_good.string()
            << ")\n";
        throw;
      }
      if (loss > divergence_limit) {
        log << "divergence at epoch " << epoch << " batch " << b
            << ": loss " << loss << " exceeds " << divergence_limit
            << " (last good checkpoint: " << last_good.string() << ")\n";
        throw DivergenceError("batch loss " + std::to_string(loss) +
                              " exceeds divergence threshold");
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      epoch_examples += batch.size();
      meta.progress.examples_seen += batch.size();

      if (callback) {
        BatchEvent ev{epoch, b, batches_per_epoch, lr, loss};
        if (!callback(ev)) {
          meta.progress.epoch = epoch;
          meta.progress.batch = b + 1;
          if (meta.progress.batch == batches_per_epoch) {
            meta.progress.epoch = epoch + 1;
            meta.progress.batch = 0;
          }
          fs::path path = checkpoint_path(meta.progress);
          save_checkpoint(path, net, meta);
          result.final_checkpoint = path;
          result.meta = meta;
          result.stopped_early = true;
          return result;
        }
      }
    }

    meta.progress.epoch = epoch + 1;
    meta.progress.batch = 0;

    double train_nll =
        epoch_examples > 0 ? epoch_loss / static_cast<double>(epoch_examples)
                           : std::numeric_limits<double>::quiet_NaN();
    meta.train_history.push_back(train_nll);
    double val_nll = std::numeric_limits<double>::quiet_NaN();
    if (has_val) {
      DatasetReader val_reader(manifest, "val");
      val_nll = validate(net, val_reader, cfg.max_val_examples);
    }
    meta.val_history.push_back(val_nll);

    fs::path path = checkpoint_path(meta.progress);
    save_checkpoint(path, net, meta);
    last_good = path;
    result.final_checkpoint = path;

    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
    char line[160];
    std::snprintf(line, sizeof(line),
                  "epoch=%d lr=%g train_nll=%.4f val_nll=%.4f examples=%llu "
                  "time=%.1fs",
                  epoch, lr, train_nll, val_nll,
                  static_cast<unsigned long long>(epoch_examples), dt);
    log << line << "\n" << std::flush;
  }

  result.meta = meta;
  return result;
}

}  // namespace tesuji
