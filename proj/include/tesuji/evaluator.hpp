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
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tesuji/dataset.hpp"
#include "tesuji/encoder.hpp"
#include "tesuji/net.hpp"

namespace tesuji {

struct Metrics {
  double accuracy = 0;          // fraction with the expert move ranked first
  double mean_rank = 0;         // 1-based rank among legal moves
  double mean_probability = 0;  // probability assigned to the expert move
  std::uint64_t count = 0;
};

inline constexpr int kTopKCurveLimit = 50;
inline constexpr int kMoveBucketWidth = 10;

struct Curves {
  // move-number bucket (bucket b covers moves [10b, 10b+10)) -> accuracy
  std::map<int, double> accuracy_by_move_number;
  std::map<int, std::uint64_t> count_by_move_number;
  // k -> fraction of examples with the expert move in the top k (k=1..50)
  std::map<int, double> topk_accuracy;
};

/// Probabilities over legal moves only, sorted by descending probability
/// with row-major ties.
template <typename Scalar>
std::vector<std::pair<Point, Scalar>> predict_ranked(
    const Network<Scalar>& net, const Board& board) {
  std::vector<std::uint8_t> mask = legal_mask(board);
  std::vector<Scalar> probs = net.forward(encode<Scalar>(board, net.encoding),
                                          mask);
  std::vector<std::pair<Point, Scalar>> ranked;
  for (int idx = 0; idx < kNumPoints; ++idx) {
    if (mask[idx]) ranked.emplace_back(board.point_of(idx), probs[idx]);
  }
  std::sort(ranked.begin(), ranked.end(), [&board](const auto& a,
                                                   const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return board.index_of(a.first) < board.index_of(b.first);
  });
  return ranked;
}

/// A prediction source: probabilities over all points given a board (the
/// same contract as Network::forward with the legal mask applied).
template <typename Scalar>
using Predictor =
    std::function<std::vector<Scalar>(const Board&,
                                      const std::vector<std::uint8_t>&)>;

template <typename Scalar>
struct EvalResult {
  Metrics metrics;
  Curves curves;
};

namespace eval_detail {

template <typename Scalar>
void accumulate(const PositionRecord& rec, const Predictor<Scalar>& predict,
                std::vector<std::uint64_t>& rank_le_k, Metrics& metrics,
                std::map<int, std::uint64_t>& bucket_hits,
                std::map<int, std::uint64_t>& bucket_counts) {
  Board board = rec.to_board();
  std::vector<std::uint8_t> mask = legal_mask(board);
  if (!mask[rec.target]) {
    throw CorruptDataError("stored target is not legal on decoded board");
  }
  std::vector<Scalar> probs = predict(board, mask);

  // 1-based rank of the target under (probability desc, row-major) order.
  const Scalar target_prob = probs[rec.target];
  std::uint64_t rank = 1;
  for (int idx = 0; idx < kNumPoints; ++idx) {
    if (!mask[idx] || idx == rec.target) continue;
    if (probs[idx] > target_prob ||
        (probs[idx] == target_prob && idx < rec.target)) {
      ++rank;
    }
  }

  metrics.count += 1;
  metrics.mean_rank += static_cast<double>(rank);
  metrics.mean_probability += static_cast<double>(target_prob);
  if (rank == 1) metrics.accuracy += 1;
  if (rank <= static_cast<std::uint64_t>(kTopKCurveLimit)) {
    rank_le_k[rank] += 1;
  }

  int bucket = rec.move_number / kMoveBucketWidth;
  bucket_counts[bucket] += 1;
  if (rank == 1) bucket_hits[bucket] += 1;
}

}  // namespace eval_detail

namespace eval_detail {

template <typename Scalar, typename RecordAt>
EvalResult<Scalar> run(const Predictor<Scalar>& predict, std::uint64_t n,
                       RecordAt&& record_at) {
  if (n == 0) throw Error("evaluate: no examples");
  EvalResult<Scalar> result;
  std::vector<std::uint64_t> rank_le_k(kTopKCurveLimit + 1, 0);
  std::map<int, std::uint64_t> bucket_hits, bucket_counts;
  for (std::uint64_t i = 0; i < n; ++i) {
    accumulate<Scalar>(record_at(i), predict, rank_le_k, result.metrics,
                       bucket_hits, bucket_counts);
  }

  Metrics& m = result.metrics;
  m.accuracy /= static_cast<double>(m.count);
  m.mean_rank /= static_cast<double>(m.count);
  m.mean_probability /= static_cast<double>(m.count);

  std::uint64_t cumulative = 0;
  for (int k = 1; k <= kTopKCurveLimit; ++k) {
    cumulative += rank_le_k[k];
    result.curves.topk_accuracy[k] =
        static_cast<double>(cumulative) / static_cast<double>(m.count);
  }
  for (const auto& [bucket, count] : bucket_counts) {
    result.curves.count_by_move_number[bucket] = count;
    result.curves.accuracy_by_move_number[bucket] =
        static_cast<double>(bucket_hits[bucket]) /
        static_cast<double>(count);
  }
  return result;
}

}  // namespace eval_detail

/// Move-prediction metrics and curves over one split.
template <typename Scalar>
EvalResult<Scalar> evaluate(const Predictor<Scalar>& predict,
                            const DatasetManifest& manifest,
                            const std::string& split,
                            std::uint64_t limit = 0) {
  DatasetReader reader(manifest, split);
  std::uint64_t n = reader.size();
  if (limit > 0 && limit < n) n = limit;
  if (n == 0) throw Error("evaluate: split '" + split + "' is empty");
  return eval_detail::run<Scalar>(
      predict, n, [&reader](std::uint64_t i) { return reader.get(i); });
}

/// Same metrics over an in-memory record list.
template <typename Scalar>
EvalResult<Scalar> evaluate_records(const Predictor<Scalar>& predict,
                                    std::span<const PositionRecord> records) {
  return eval_detail::run<Scalar>(
      predict, records.size(),
      [&records](std::uint64_t i) -> const PositionRecord& {
        return records[i];
      });
}

template <typename Scalar>
Predictor<Scalar> network_predictor(const Network<Scalar>& net) {
  return [&net](const Board& board, const std::vector<std::uint8_t>& mask) {
    return net.forward(encode<Scalar>(board, net.encoding), mask);
  };
}

template <typename Scalar>
EvalResult<Scalar> evaluate(const Network<Scalar>& net,
                            const DatasetManifest& manifest,
                            const std::string& split,
                            std::uint64_t limit = 0) {
  return evaluate<Scalar>(network_predictor(net), manifest, split, limit);
}

/// Machine-readable key=value lines.
inline void write_metrics(std::ostream& out, const Metrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "accuracy=%.4f\nmean_rank=%.2f\nmean_probability=%.4f\n"
                "count=%llu\n",
                m.accuracy, m.mean_rank, m.mean_probability,
                static_cast<unsigned long long>(m.count));
  out << buf;
}

/// Plain-text tables for external plotting.
inline void write_curves(std::ostream& move_curve, std::ostream& topk_curve,
                         const Curves& curves) {
  move_curve << "# move_bucket_start\tmove_bucket_end\tcount\taccuracy\n";
  for (const auto& [bucket, acc] : curves.accuracy_by_move_number) {
    move_curve << bucket * kMoveBucketWidth << "\t"
               << (bucket + 1) * kMoveBucketWidth << "\t"
               << curves.count_by_move_number.at(bucket) << "\t" << acc
               << "\n";
  }
  topk_curve << "# k\taccuracy\n";
  for (const auto& [k, acc] : curves.topk_accuracy) {
    topk_curve << k << "\t" << acc << "\n";
  }
}

}  // namespace tesuji
