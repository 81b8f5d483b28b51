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

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tesuji/tesuji.hpp"

namespace fs = std::filesystem;

namespace {

std::string default_data_dir() {
  const char* env = std::getenv("TESUJI_DATA_DIR");
  return env ? std::string(env) : std::string();
}

std::array<double, 3> parse_split(const std::string& s) {
  std::array<double, 3> fractions{};
  std::stringstream ss(s);
  std::string part;
  int i = 0;
  while (std::getline(ss, part, ',')) {
    if (i >= 3) throw tesuji::ConfigError("--split takes three fractions");
    fractions[i++] = std::stod(part);
  }
  if (i != 3) throw tesuji::ConfigError("--split takes three fractions");
  return fractions;
}

// Applies "dot.path=value" onto a JSON config; values that parse as JSON
// are spliced in typed, anything else is a string.
void apply_override(nlohmann::json& j, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw tesuji::ConfigError("--override needs key=value, got '" +
                              assignment + "'");
  }
  std::string key = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    parsed = value;
  }
  nlohmann::json* cur = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw tesuji::ConfigError("empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    cur = &(*cur)[parts[i]];
  }
  (*cur)[parts.back()] = parsed;
}

tesuji::Board board_before_move(const tesuji::GameRecord& game,
                                int move_number) {
  tesuji::Board board = tesuji::Board::with_setup(
      game.board_size, game.setup_black, game.setup_white);
  int limit = move_number <= 0 ? static_cast<int>(game.moves.size())
                               : move_number - 1;
  for (int i = 0; i < limit && i < static_cast<int>(game.moves.size()); ++i) {
    const auto& move = game.moves[i];
    if (board.to_move() != move.color) {
      board = board.with_to_move(move.color);
    }
    board = move.point ? board.play(*move.point).new_board : board.pass();
  }
  if (move_number >= 1 &&
      move_number <= static_cast<int>(game.moves.size())) {
    board = board.with_to_move(game.moves[move_number - 1].color);
  }
  return board;
}

int cmd_ingest(const std::string& sgf_dir, const std::string& out_dir,
               const std::string& split, std::uint64_t seed, int jobs) {
  tesuji::IngestOptions options;
  options.fractions = parse_split(split);
  options.seed = seed;
  options.jobs = jobs;
  tesuji::IngestReport report;
  tesuji::DatasetManifest manifest =
      tesuji::build_dataset(sgf_dir, out_dir, options, &report);
  std::cout << "games_found=" << report.games_found << "\n"
            << "games_used=" << report.games_used << "\n"
            << "rejected=" << report.rejects.size() << "\n";
  for (const char* name : {"train", "val", "test"}) {
    const auto& info = manifest.split(name);
    std::cout << name << "_games=" << info.games << "\n"
              << name << "_examples=" << info.examples << "\n";
  }
  std::cout << "manifest=" << (fs::path(out_dir) / "manifest.json").string()
            << "\n";
  return 0;
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides, int jobs,
              bool deterministic) {
  nlohmann::json j = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw tesuji::IoError("cannot open config " + config_path);
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw tesuji::ConfigError("bad config JSON: " + std::string(e.what()));
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  if (jobs > 0) j["jobs"] = jobs;
  if (deterministic) j["deterministic"] = true;
  tesuji::TrainConfig cfg = tesuji::parse_train_config(j);

  fs::create_directories(cfg.checkpoint_dir);
  std::ofstream log_file(fs::path(cfg.checkpoint_dir) / "train.log",
                         std::ios::app);

  struct Tee : std::ostream, std::streambuf {
    std::ostream& a;
    std::ostream& b;
    Tee(std::ostream& a, std::ostream& b) : std::ostream(this), a(a), b(b) {}
    int overflow(int c) override {
      if (c != EOF) {
        a.put(static_cast<char>(c));
        b.put(static_cast<char>(c));
      }
      return c;
    }
  } tee(std::cout, log_file);

  tesuji::TrainResult result = tesuji::train(cfg, tee);
  std::cout << "final_checkpoint=" << result.final_checkpoint.string()
            << "\n";
  return 0;
}

int cmd_eval(const std::string& model, const std::string& data,
             const std::string& split, bool curves,
             const std::string& curves_dir, std::uint64_t limit) {
  auto loaded = tesuji::load_checkpoint<float>(model);
  tesuji::DatasetManifest manifest = tesuji::load_manifest(data);
  auto result = tesuji::evaluate(loaded.net, manifest, split, limit);
  tesuji::write_metrics(std::cout, result.metrics);
  if (curves) {
    fs::path dir = curves_dir.empty() ? fs::path(".") : fs::path(curves_dir);
    fs::create_directories(dir);
    std::ofstream move_curve(dir / "accuracy_by_move.tsv");
    std::ofstream topk_curve(dir / "topk_accuracy.tsv");
    tesuji::write_curves(move_curve, topk_curve, result.curves);
    std::cout << "curves_dir=" << dir.string() << "\n";
  }
  return 0;
}

int cmd_predict(const std::string& model, const std::string& sgf_path,
                int move_number, int topk) {
  auto loaded = tesuji::load_checkpoint<float>(model);
  std::ifstream in(sgf_path, std::ios::binary);
  if (!in) throw tesuji::IoError("cannot open " + sgf_path);
  std::stringstream ss;
  ss << in.rdbuf();
  tesuji::GameRecord game = tesuji::parse_sgf(ss.str());
  tesuji::Board board = board_before_move(game, move_number);

  auto ranked = tesuji::predict_ranked(loaded.net, board);
  std::cout << "position: " << (move_number <= 0 ? "final" : "before move " +
                                std::to_string(move_number))
            << ", " << tesuji::color_name(board.to_move()) << " to move\n";
  int shown = std::min<int>(topk, static_cast<int>(ranked.size()));
  for (int i = 0; i < shown; ++i) {
    std::printf("%2d. %-4s %.4f\n", i + 1,
                tesuji::vertex_of(ranked[i].first, board.size()).c_str(),
                static_cast<double>(ranked[i].second));
  }
  if (move_number >= 1 &&
      move_number <= static_cast<int>(game.moves.size()) &&
      game.moves[move_number - 1].point) {
    tesuji::Point expert = *game.moves[move_number - 1].point;
    int rank = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (ranked[i].first == expert) {
        rank = static_cast<int>(i) + 1;
        break;
      }
    }
    std::cout << "expert_move=" << tesuji::vertex_of(expert, board.size())
              << " rank=" << rank << "\n";
  }
  return 0;
}

int cmd_inspect(const std::string& model, int layer_index) {
  auto loaded = tesuji::load_checkpoint<float>(model);
  const auto& net = loaded.net;

  auto stats = [](const std::vector<float>& v) {
    double mn = v.empty() ? 0 : v[0], mx = mn, sum = 0, sq = 0;
    for (float x : v) {
      mn = std::min<double>(mn, x);
      mx = std::max<double>(mx, x);
      sum += x;
      sq += static_cast<double>(x) * x;
    }
    double mean = v.empty() ? 0 : sum / v.size();
    double var = v.empty() ? 0 : sq / v.size() - mean * mean;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "min=%.4f max=%.4f mean=%.5f std=%.5f",
                  mn, mx, mean, std::sqrt(std::max(0.0, var)));
    return std::string(buf);
  };

  std::cout << "board_size=" << net.board_size
            << " channels=" << net.encoding.channels()
            << " tied=" << (net.tied ? "yes" : "no")
            << " activation=" << tesuji::activation_name(net.activation)
            << "\n";
  std::cout << "free_parameters=" << net.param_count()
            << " untied_equivalent=" << net.raw_param_count() << "\n";

  for (std::size_t l = 0; l < net.conv_layers.size(); ++l) {
    const auto& layer = net.conv_layers[l];
    std::cout << "layer " << l << ": conv " << layer.kernel << "x"
              << layer.kernel << " in=" << layer.in_channels
              << " out=" << layer.out_channels
              << " spatial_orbits=" << layer.orbits.orbit_count()
              << " free_params=" << layer.param_count() << " ("
              << stats(layer.params) << ")\n";
  }
  std::cout << "layer " << net.conv_layers.size() << ": dense in="
            << net.dense.in_channels << "x" << net.board_size << "x"
            << net.board_size << " out=" << net.board_size << "x"
            << net.board_size
            << " pair_orbits=" << net.dense.pair_orbits.orbit_count()
            << " bias_orbits=" << net.dense.bias_orbits.orbit_count()
            << " free_params=" << net.dense.param_count() << " ("
            << stats(net.dense.params) << ")\n";

  if (layer_index >= 0) {
    if (layer_index >= static_cast<int>(net.conv_layers.size())) {
      std::cout << "(dense layer selected: no filters to render)\n";
      return 0;
    }
    const auto& layer = net.conv_layers[layer_index];
    const int k = layer.kernel;
    int out_limit = std::min(layer.out_channels, 4);
    int in_limit = std::min(layer.in_channels, 2);
    for (int o = 0; o < out_limit; ++o) {
      for (int i = 0; i < in_limit; ++i) {
        std::cout << "filter out=" << o << " in=" << i << ":\n";
        const float* w =
            layer.weights.data() +
            (static_cast<std::size_t>(o) * layer.in_channels + i) * k * k;
        for (int dy = 0; dy < k; ++dy) {
          for (int dx = 0; dx < k; ++dx) {
            std::printf(" %+.3f", static_cast<double>(w[dy * k + dx]));
          }
          std::printf("\n");
        }
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Go move prediction with reflection-tied convolutional "
               "networks"};
  app.require_subcommand(1);

  std::string data_dir = default_data_dir();

  // ingest
  auto* ingest = app.add_subcommand(
      "ingest", "Build train/val/test shards from a directory of SGF games");
  std::string sgf_dir, out_dir = data_dir, split = "0.88,0.04,0.08";
  std::uint64_t ingest_seed = 1;
  int ingest_jobs = 1;
  ingest->add_option("--sgf-dir", sgf_dir, "Directory of .sgf files")
      ->required();
  auto* out_opt =
      ingest->add_option("--out", out_dir, "Output dataset directory");
  if (data_dir.empty()) out_opt->required();
  ingest->add_option("--split", split, "train,val,test fractions");
  ingest->add_option("--seed", ingest_seed, "Shuffle seed");
  ingest->add_option("--jobs", ingest_jobs, "Parallel parse workers");

  // train
  auto* train = app.add_subcommand("train", "Train a network from a config");
  std::string config_path;
  std::vector<std::string> overrides;
  int train_jobs = 0;
  bool train_deterministic = false;
  train->add_option("--config", config_path, "JSON config file");
  train->add_option("--override", overrides,
                    "key=value config override (repeatable)");
  train->add_option("--jobs", train_jobs, "Worker parallelism cap");
  train->add_flag("--deterministic", train_deterministic,
                  "Single-worker updates for bit-reproducible runs");

  // eval
  auto* eval = app.add_subcommand("eval", "Compute metrics on a split");
  std::string model, data = data_dir.empty()
                                ? std::string()
                                : (fs::path(data_dir) / "manifest.json")
                                      .string();
  std::string eval_split = "test", curves_dir;
  bool curves = false;
  std::uint64_t eval_limit = 0;
  eval->add_option("--model", model, "Checkpoint file")->required();
  auto* data_opt = eval->add_option("--data", data, "Dataset manifest");
  if (data.empty()) data_opt->required();
  eval->add_option("--split", eval_split, "train|val|test");
  eval->add_flag("--curves", curves, "Write accuracy curve tables");
  eval->add_option("--curves-dir", curves_dir, "Curve output directory");
  eval->add_option("--limit", eval_limit, "Evaluate at most N examples");

  // predict
  auto* predict =
      app.add_subcommand("predict", "Rank moves for a position in a game");
  std::string predict_model, predict_sgf;
  int move_number = 0, topk = 10;
  predict->add_option("--model", predict_model, "Checkpoint file")
      ->required();
  predict->add_option("--sgf", predict_sgf, "Game record")->required();
  predict->add_option("--move-number", move_number,
                      "Predict the position before this 1-based move "
                      "(0 = after the last move)");
  predict->add_option("--topk", topk, "Moves to print");

  // gtp
  auto* gtp = app.add_subcommand("gtp", "Serve the engine over GTP v2");
  std::string gtp_model;
  gtp->add_option("--model", gtp_model, "Checkpoint file")->required();

  // inspect
  auto* inspect =
      app.add_subcommand("inspect", "Print layer/orbit/parameter summaries");
  std::string inspect_model;
  int layer_index = -1;
  inspect->add_option("--model", inspect_model, "Checkpoint file")
      ->required();
  inspect->add_option("--layer", layer_index,
                      "Render this layer's expanded filters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest) {
      return cmd_ingest(sgf_dir, out_dir, split, ingest_seed, ingest_jobs);
    }
    if (*train) {
      return cmd_train(config_path, overrides, train_jobs,
                       train_deterministic);
    }
    if (*eval) {
      return cmd_eval(model, data, eval_split, curves, curves_dir,
                      eval_limit);
    }
    if (*predict) {
      return cmd_predict(predict_model, predict_sgf, move_number, topk);
    }
    if (*gtp) return tesuji::run_gtp(gtp_model, std::cin, std::cout);
    if (*inspect) return cmd_inspect(inspect_model, layer_index);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
