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

// Exact t-SNE.
//
// Input affinities are Gaussian conditionals p_{j|i} with a per-point
// bandwidth found by binary search on beta = 1/(2 sigma^2) so that
// 2^H(P_i) matches the target perplexity. They are symmetrized as
// p_ij = (p_{j|i} + p_{i|j}) / 2n. The output kernel is Student-t with one
// degree of freedom, and the map minimizes KL(P || Q) by gradient descent
// with momentum and per-coordinate adaptive gains.
//
// Everything is O(n^2) in memory and time; callers cap n per class.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "autodc/embeddings.hpp"
#include "autodc/error.hpp"
#include "autodc/io.hpp"
#include "autodc/rng.hpp"

namespace autodc {

inline constexpr double kProbabilityFloor = 1e-12;

struct TsneConfig {
  double perplexity = 30.0;
  int iters = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iter = 250;
  double init_scale = 1e-4;
  double search_tol = 1e-5;
  int search_max_iters = 50;
  int record_every = 50;

  bool operator==(const TsneConfig&) const = default;

  void validate() const {
    if (!(perplexity > 0) || iters < 0 || !(learning_rate > 0) ||
        !(early_exaggeration > 0) || exaggeration_iters < 0 || !(init_scale > 0) ||
        !(search_tol > 0) || search_max_iters < 1 || record_every < 1 ||
        initial_momentum < 0 || final_momentum < 0)
      fail(ErrorCode::InvalidConfig, "t-SNE parameters must be positive");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TsneConfig, perplexity, iters, learning_rate,
                                                early_exaggeration, exaggeration_iters,
                                                initial_momentum, final_momentum,
                                                momentum_switch_iter, init_scale, search_tol,
                                                search_max_iters, record_every)

/// Dense n x n matrix.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size, double fill = 0.0) : n(size), data(size * size, fill) {}

  double& operator()(std::size_t i, std::size_t j) noexcept { return data[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * n + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {data.data() + i * n, n}; }
};

/// Pairwise squared Euclidean distances of the rows of a row-major
/// (n x dim) array.
inline SquareMatrix squared_distance_matrix(std::span<const double> rows, std::size_t dim) {
  const std::size_t n = dim == 0 ? 0 : rows.size() / dim;
  if (n < 2) fail(ErrorCode::TooFewPoints, std::to_string(n));
  SquareMatrix d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = rows.data() + i * dim;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* xj = rows.data() + j * dim;
      double sum = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = xi[k] - xj[k];
        sum += diff * diff;
      }
      d2(i, j) = sum;
      d2(j, i) = sum;
    }
  }
  return d2;
}

inline SquareMatrix squared_distance_matrix(const EmbeddingMatrix& m) {
  return squared_distance_matrix(m.data, m.dim);
}

struct RowCalibration {
  double beta = 1.0;
  std::vector<double> probabilities;  // conditional p_{j|i}, sums to 1
  double entropy_bits = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  // every distance was zero; uniform fallback
};

/// Finds the Gaussian precision for one point. `distances` are squared
/// distances to every other point (self excluded). The search doubles or
/// halves beta until the target is bracketed, then bisects.
inline RowCalibration calibrate_row(std::span<const double> distances, double perplexity,
                                    double tol, int max_iters) {
  RowCalibration out;
  const std::size_t m = distances.size();
  out.probabilities.assign(m, m == 0 ? 0.0 : 1.0 / static_cast<double>(m));
  if (m == 0) return out;

  // Shifting by the nearest distance leaves the normalized row unchanged and
  // keeps exp() away from underflow for large raw distances.
  const double nearest = *std::min_element(distances.begin(), distances.end());
  double spread = 0.0;
  for (double d : distances) spread += d - nearest;
  if (!(spread > 0.0)) {
    out.degenerate = nearest == 0.0;
    out.entropy_bits = std::log2(static_cast<double>(m));
    out.converged = std::abs(out.entropy_bits - std::log2(perplexity)) <= tol;
    out.beta = 0.0;
    return out;
  }

  const double target = std::log2(perplexity);
  double beta = static_cast<double>(m) / spread;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  bool have_lo = false;
  std::vector<double>& p = out.probabilities;
  for (int iter = 0; iter < max_iters; ++iter) {
    double sum = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double shifted = distances[j] - nearest;
      p[j] = std::exp(-beta * shifted);
      sum += p[j];
      weighted += shifted * p[j];
    }
    const double entropy = (std::log(sum) + beta * weighted / sum) / std::numbers::ln2;
    for (double& v : p) v /= sum;
    out.beta = beta;
    out.entropy_bits = entropy;
    out.iterations = iter + 1;

    const double diff = entropy - target;
    if (std::abs(diff) <= tol) {
      out.converged = true;
      break;
    }
    if (iter + 1 == max_iters) break;
    if (diff > 0) {
      // Too flat: sharpen.
      lo = beta;
      have_lo = true;
      beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
    } else {
      hi = beta;
      beta = have_lo ? 0.5 * (lo + beta) : beta * 0.5;
    }
  }
  return out;
}

/// Symmetric affinity matrix with zero diagonal, off-diagonal entries that
/// sum to one and none below kProbabilityFloor.
struct AffinityMatrix {
  SquareMatrix p;
  double effective_perplexity = 0.0;
  std::size_t degenerate_rows = 0;
  std::size_t unconverged_rows = 0;
};

/// Symmetrizes conditional rows (row i holds p_{j|i}, diagonal ignored).
///
/// The floor is applied as a mass-preserving mixture
/// p_ij = floor + (1 - m*floor) * (p_{j|i} + p_{i|j}) / 2n over the
/// m = n(n-1) off-diagonal entries, so flooring does not break normalization.
inline SquareMatrix symmetrize(const SquareMatrix& conditional) {
  const std::size_t n = conditional.n;
  SquareMatrix p(n);
  if (n < 2) return p;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  const double keep = 1.0 - pairs * kProbabilityFloor;
  const double inv = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = kProbabilityFloor + keep * (conditional(i, j) + conditional(j, i)) * inv;
      p(i, j) = v;
      p(j, i) = v;
    }
  }
  return p;
}

/// Perplexities above (n-1)/3 are clamped to (n-1)/3.
inline double clamp_perplexity(double perplexity, std::size_t n) {
  const double limit = (static_cast<double>(n) - 1.0) / 3.0;
  return perplexity > limit ? limit : perplexity;
}

inline AffinityMatrix compute_affinities(const SquareMatrix& d2, double perplexity, double tol,
                                         int max_iters) {
  const std::size_t n = d2.n;
  if (n < 2) fail(ErrorCode::TooFewPoints, std::to_string(n));
  AffinityMatrix out;
  out.effective_perplexity = clamp_perplexity(perplexity, n);
  SquareMatrix conditional(n);
  std::vector<double> others(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0, k = 0; j < n; ++j)
      if (j != i) others[k++] = d2(i, j);
    const auto row = calibrate_row(others, out.effective_perplexity, tol, max_iters);
    out.degenerate_rows += row.degenerate;
    out.unconverged_rows += !row.converged;
    for (std::size_t j = 0, k = 0; j < n; ++j)
      if (j != i) conditional(i, j) = row.probabilities[k++];
  }
  out.p = symmetrize(conditional);
  return out;
}

/// Student-t output similarities q_ij = w_ij / sum_{k != l} w_kl with
/// w_ij = 1 / (1 + |y_i - y_j|^2), floored at kProbabilityFloor. Also
/// returns the raw kernel values in `kernel`.
inline SquareMatrix student_t_q(std::span<const double> coords, SquareMatrix* kernel = nullptr) {
  const std::size_t n = coords.size() / 2;
  SquareMatrix w(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = coords[2 * i] - coords[2 * j];
      const double dy = coords[2 * i + 1] - coords[2 * j + 1];
      const double v = 1.0 / (1.0 + dx * dx + dy * dy);
      w(i, j) = v;
      w(j, i) = v;
      z += 2.0 * v;
    }
  }
  SquareMatrix q(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) q(i, j) = std::max(w(i, j) / z, kProbabilityFloor);
  if (kernel) *kernel = std::move(w);
  return q;
}

/// KL(P || Q) over off-diagonal entries. Both inputs are expected to be
/// floored already.
inline double kl_divergence(const SquareMatrix& p, const SquareMatrix& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.n; ++i)
    for (std::size_t j = 0; j < p.n; ++j)
      if (i != j && p(i, j) > 0.0) kl += p(i, j) * std::log(p(i, j) / q(i, j));
  return std::max(kl, 0.0);
}

inline double kl_divergence(const SquareMatrix& p, std::span<const double> coords) {
  return kl_divergence(p, student_t_q(coords));
}

/// dC/dy_i = 4 sum_j (s*p_ij - q_ij) w_ij (y_i - y_j), where s is the
/// exaggeration factor (1 for the true objective).
inline std::vector<double> tsne_gradient(const SquareMatrix& p, std::span<const double> coords,
                                         double exaggeration = 1.0) {
  const std::size_t n = p.n;
  SquareMatrix w;
  const SquareMatrix q = student_t_q(coords, &w);
  std::vector<double> grad(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double gx = 0.0;
    double gy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double mult = (exaggeration * p(i, j) - q(i, j)) * w(i, j);
      gx += mult * (coords[2 * i] - coords[2 * j]);
      gy += mult * (coords[2 * i + 1] - coords[2 * j + 1]);
    }
    grad[2 * i] = 4.0 * gx;
    grad[2 * i + 1] = 4.0 * gy;
  }
  return grad;
}

struct KlSample {
  int iteration = 0;  // number of completed iterations
  double kl = 0.0;

  bool operator==(const KlSample&) const = default;
};

struct Embedding2D {
  std::vector<std::string> ids;
  std::vector<double> coords;  // row-major n x 2
  std::vector<KlSample> kl_trace;
  TsneConfig config;
  double effective_perplexity = 0.0;
  double final_kl = 0.0;
  bool degenerate = false;

  std::size_t size() const noexcept { return ids.size(); }
};

namespace detail {
inline int sign(double x) noexcept { return (x > 0) - (x < 0); }
}  // namespace detail

/// Points below this count skip optimization and are laid out on the unit
/// circle.
inline constexpr std::size_t kMinTsnePoints = 4;

inline Embedding2D run_tsne(const EmbeddingMatrix& input, const TsneConfig& config, Stream& rng) {
  config.validate();
  Embedding2D out;
  out.ids = input.ids;
  out.config = config;
  const std::size_t n = input.rows();
  out.coords.assign(2 * n, 0.0);

  if (n < kMinTsnePoints) {
    out.degenerate = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      out.coords[2 * i] = std::cos(angle);
      out.coords[2 * i + 1] = std::sin(angle);
    }
    return out;
  }

  const AffinityMatrix affinity = compute_affinities(
      squared_distance_matrix(input), config.perplexity, config.search_tol,
      config.search_max_iters);
  out.effective_perplexity = affinity.effective_perplexity;
  const SquareMatrix& p = affinity.p;

  GaussianSampler gauss;
  for (double& v : out.coords) v = config.init_scale * gauss(rng);
  std::vector<double> velocity(2 * n, 0.0);
  std::vector<double> gains(2 * n, 1.0);
  std::vector<double>& y = out.coords;

  for (int iter = 0; iter < config.iters; ++iter) {
    const double exaggeration = iter < config.exaggeration_iters ? config.early_exaggeration : 1.0;
    const double momentum =
        iter < config.momentum_switch_iter ? config.initial_momentum : config.final_momentum;
    const auto grad = tsne_gradient(p, y, exaggeration);
    for (std::size_t k = 0; k < grad.size(); ++k) {
      if (!std::isfinite(grad[k]))
        fail(ErrorCode::NonFiniteGradient,
             "iteration " + std::to_string(iter) + ", point " + std::to_string(k / 2));
      const bool agree = detail::sign(grad[k]) == detail::sign(velocity[k]);
      gains[k] = agree ? gains[k] * 0.8 : gains[k] + 0.2;
      if (gains[k] < 0.01) gains[k] = 0.01;
      velocity[k] = momentum * velocity[k] - config.learning_rate * gains[k] * grad[k];
      y[k] += velocity[k];
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += y[2 * i];
      my += y[2 * i + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[2 * i] -= mx;
      y[2 * i + 1] -= my;
    }
    if ((iter + 1) % config.record_every == 0)
      out.kl_trace.push_back({iter + 1, kl_divergence(p, y)});
  }
  out.final_kl = kl_divergence(p, y);
  return out;
}

}  // namespace autodc
