/*
 * Copyright 2026 The AutoDC Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Isolation Forest (Liu, Ting & Zhou, 2008).
//
// Each tree is grown on a random subsample of psi rows by repeatedly picking a
// feature uniformly among those that still vary and a threshold uniformly
// inside that feature's range, until the node holds one row, all rows are
// identical, or the height limit ceil(log2 psi) is hit. An observation's path
// length h(x) is its leaf depth plus c(leaf size), and the anomaly score is
// s = 2^(-E[h(x)] / c(psi)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "autodc/embeddings.hpp"
#include "autodc/error.hpp"
#include "autodc/io.hpp"
#include "autodc/parallel.hpp"
#include "autodc/rng.hpp"

namespace autodc {

inline constexpr double kEulerGamma = 0.5772156649;

/// Average path length of an unsuccessful BST search over n points; the
/// score normalizer c(n). c(2) is taken as 1 rather than the raw formula.
inline double average_path_length(std::size_t n) noexcept {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double nd = static_cast<double>(n);
  return 2.0 * (std::log(nd - 1.0) + kEulerGamma) - 2.0 * (nd - 1.0) / nd;
}

struct IForestConfig {
  int trees = 100;
  std::size_t subsample = 256;
  double contamination = 0.125;

  bool operator==(const IForestConfig&) const = default;

  void validate() const {
    if (trees < 1) fail(ErrorCode::InvalidConfig, "forest needs at least one tree");
    if (subsample < 2) fail(ErrorCode::InvalidConfig, "subsample size must be at least 2");
    if (!(contamination > 0.0 && contamination <= 0.5))
      fail(ErrorCode::InvalidContamination, std::to_string(contamination));
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(IForestConfig, trees, subsample, contamination)

struct ITreeNode {
  int split_dim = -1;  // -1 marks a leaf
  double split_val = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::size_t size = 0;  // samples that reached this node
  std::size_t depth = 0;

  bool is_leaf() const noexcept { return split_dim < 0; }
  bool operator==(const ITreeNode&) const = default;
};

struct ITree {
  std::vector<ITreeNode> nodes;  // nodes[0] is the root
  std::size_t height_limit = 0;
  std::size_t dim = 0;

  bool operator==(const ITree&) const = default;
};

inline std::size_t height_limit_for(std::size_t psi) {
  return static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(psi, 1)))));
}

namespace detail {

class TreeGrower {
 public:
  TreeGrower(std::span<const double> data, std::size_t dim, std::size_t height_limit, Stream& rng)
      : data_(data), dim_(dim), rng_(rng) {
    tree_.height_limit = height_limit;
    tree_.dim = dim;
  }

  std::int32_t grow(std::span<std::size_t> sample, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].size = sample.size();
    tree_.nodes[id].depth = depth;
    if (sample.size() <= 1 || depth >= tree_.height_limit) return id;

    splittable_.clear();
    lows_.assign(dim_, 0.0);
    highs_.assign(dim_, 0.0);
    for (std::size_t k = 0; k < dim_; ++k) {
      double lo = value(sample[0], k);
      double hi = lo;
      for (std::size_t s : sample.subspan(1)) {
        const double v = value(s, k);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      lows_[k] = lo;
      highs_[k] = hi;
      if (hi > lo) splittable_.push_back(k);
    }
    // Constant sample: nothing can separate these rows.
    if (splittable_.empty()) return id;

    const std::size_t k = splittable_[rng_.below(splittable_.size())];
    const double lo = lows_[k];
    const double hi = highs_[k];
    double split = lo;
    while (!(split > lo)) split = lo + (hi - lo) * rng_.uniform();

    auto middle = std::partition(sample.begin(), sample.end(),
                                 [&](std::size_t s) { return value(s, k) < split; });
    const auto n_left = static_cast<std::size_t>(middle - sample.begin());
    tree_.nodes[id].split_dim = static_cast<int>(k);
    tree_.nodes[id].split_val = split;
    const std::int32_t left = grow(sample.first(n_left), depth + 1);
    const std::int32_t right = grow(sample.subspan(n_left), depth + 1);
    tree_.nodes[id].left = left;
    tree_.nodes[id].right = right;
    return id;
  }

  ITree release() { return std::move(tree_); }

 private:
  double value(std::size_t row, std::size_t k) const { return data_[row * dim_ + k]; }

  std::span<const double> data_;
  std::size_t dim_;
  Stream& rng_;
  ITree tree_;
  std::vector<std::size_t> splittable_;
  std::vector<double> lows_;
  std::vector<double> highs_;
};

}  // namespace detail

/// Grows one isolation tree over `sample` (row indices into the row-major
/// `data`). The index list is reordered in place.
inline ITree build_tree(std::span<const double> data, std::size_t dim,
                        std::vector<std::size_t> sample, std::size_t height_limit, Stream& rng) {
  if (sample.empty()) fail(ErrorCode::TooFewPoints, "isolation tree needs a non-empty sample");
  detail::TreeGrower grower(data, dim, height_limit, rng);
  grower.grow(sample, 0);
  return grower.release();
}

inline double path_length(const ITree& tree, std::span<const double> x) {
  if (x.size() != tree.dim)
    fail(ErrorCode::DimensionMismatch,
         "expected " + std::to_string(tree.dim) + ", got " + std::to_string(x.size()));
  const ITreeNode* node = &tree.nodes.front();
  while (!node->is_leaf())
    node = &tree.nodes[x[node->split_dim] < node->split_val ? node->left : node->right];
  return static_cast<double>(node->depth) + average_path_length(node->size);
}

struct IsolationForest {
  std::vector<ITree> trees;
  std::size_t psi = 0;
  double c_psi = 0.0;
  std::size_t dim = 0;
};

/// Builds `config.trees` trees; tree k draws from the stream
/// "<domain>/tree/<k>".
inline IsolationForest build_forest(const EmbeddingMatrix& matrix, const IForestConfig& config,
                                    std::uint64_t master_seed, const std::string& domain) {
  config.validate();
  const std::size_t n = matrix.rows();
  if (n < 2) fail(ErrorCode::TooFewPoints, std::to_string(n));
  IsolationForest forest;
  forest.psi = std::min(n, config.subsample);
  forest.c_psi = average_path_length(forest.psi);
  forest.dim = matrix.dim;
  forest.trees.resize(static_cast<std::size_t>(config.trees));
  const std::size_t limit = height_limit_for(forest.psi);
  parallel_for(forest.trees.size(), [&](std::size_t t) {
    Stream rng = derive_stream(master_seed, domain + "/tree/" + std::to_string(t));
    std::vector<std::size_t> sample;
    sample.reserve(forest.psi);
    // Selection sampling: psi distinct rows, uniformly.
    for (std::size_t i = 0; i < n && sample.size() < forest.psi; ++i)
      if (rng.below(n - i) < forest.psi - sample.size()) sample.push_back(i);
    forest.trees[t] = build_tree(matrix.data, matrix.dim, std::move(sample), limit, rng);
  });
  return forest;
}

struct AnomalyScore {
  std::string record_id;
  double score = 0.0;
  double mean_path_length = 0.0;

  bool operator==(const AnomalyScore&) const = default;
};

inline double anomaly_score(double mean_path_length, double c_psi) {
  return std::exp2(-mean_path_length / c_psi);
}

inline std::vector<AnomalyScore> score_all(const IsolationForest& forest,
                                           const EmbeddingMatrix& matrix) {
  std::vector<AnomalyScore> out(matrix.rows());
  parallel_for(matrix.rows(), [&](std::size_t r) {
    double total = 0.0;
    for (const auto& tree : forest.trees) total += path_length(tree, matrix.row(r));
    const double mean = total / static_cast<double>(forest.trees.size());
    out[r] = {matrix.ids[r], anomaly_score(mean, forest.c_psi), mean};
  });
  return out;
}

struct CandidateSet {
  std::string label;
  std::vector<std::string> candidates;  // descending score, ties by ascending id
  double contamination = 0.0;

  bool operator==(const CandidateSet&) const = default;
};

/// max(1, floor(contamination * n + 0.5)), capped at n.
inline std::size_t candidate_count(double contamination, std::size_t n) {
  if (!(contamination > 0.0 && contamination <= 0.5))
    fail(ErrorCode::InvalidContamination, std::to_string(contamination));
  if (n == 0) return 0;
  const auto k = static_cast<std::size_t>(std::floor(contamination * static_cast<double>(n) + 0.5));
  return std::min(n, std::max<std::size_t>(1, k));
}

inline CandidateSet rank_candidates(std::span<const AnomalyScore> scores, double contamination,
                                    std::string label = {}) {
  const std::size_t k = candidate_count(contamination, scores.size());
  std::vector<const AnomalyScore*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const AnomalyScore* a, const AnomalyScore* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->record_id < b->record_id;
  });
  CandidateSet out{std::move(label), {}, contamination};
  for (std::size_t i = 0; i < k; ++i) out.candidates.push_back(order[i]->record_id);
  return out;
}

}  // namespace autodc
