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

// Deterministic image augmentation.
//
// All pixel arithmetic rounds half up and clamps to [0, 255]. Resampling is
// bilinear with pixel centers at integer coordinates (src = (dst + 0.5) *
// scale - 0.5), so a resize to the same size is the identity. Pixels that
// map outside the source frame are filled black.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "autodc/aug_config.hpp"
#include "autodc/error.hpp"
#include "autodc/image.hpp"
#include "autodc/io.hpp"
#include "autodc/rng.hpp"

namespace autodc {

inline double round_half_up(double x) noexcept { return std::floor(x + 0.5); }

inline std::uint8_t to_channel(double x) noexcept {
  return static_cast<std::uint8_t>(std::clamp(round_half_up(x), 0.0, 255.0));
}

namespace detail {

inline double bilinear(const ImageBuf& img, double sx, double sy, std::size_t c) noexcept {
  const double max_x = static_cast<double>(img.width - 1);
  const double max_y = static_cast<double>(img.height - 1);
  sx = std::clamp(sx, 0.0, max_x);
  sy = std::clamp(sy, 0.0, max_y);
  const auto x0 = static_cast<std::size_t>(sx);
  const auto y0 = static_cast<std::size_t>(sy);
  const std::size_t x1 = std::min(x0 + 1, img.width - 1);
  const std::size_t y1 = std::min(y0 + 1, img.height - 1);
  const double fx = sx - static_cast<double>(x0);
  const double fy = sy - static_cast<double>(y0);
  const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
  const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

}  // namespace detail

inline ImageBuf resize_bilinear(const ImageBuf& src, std::size_t width, std::size_t height) {
  ImageBuf out(width, height);
  const double scale_x = static_cast<double>(src.width) / static_cast<double>(width);
  const double scale_y = static_cast<double>(src.height) / static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = (static_cast<double>(y) + 0.5) * scale_y - 0.5;
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = (static_cast<double>(x) + 0.5) * scale_x - 0.5;
      for (std::size_t c = 0; c < 3; ++c) out.at(x, y, c) = to_channel(detail::bilinear(src, sx, sy, c));
    }
  }
  return out;
}

/// Adds round(e), e ~ N(0, sigma^2), to every channel. Deviates are drawn in
/// row-major pixel order, R, G, B within a pixel.
inline ImageBuf gaussian_noise(const ImageBuf& img, double sigma, Stream& rng) {
  if (!(sigma >= 0.0)) fail(ErrorCode::InvalidConfig, "noise sigma must be non-negative");
  ImageBuf out = img;
  GaussianSampler gauss;
  for (auto& px : out.pixels) px = to_channel(px + round_half_up(sigma * gauss(rng)));
  return out;
}

/// Size of the window kept by random_crop: round(w(1-f)) x round(h(1-f)).
inline std::pair<std::size_t, std::size_t> crop_extent(std::size_t width, std::size_t height, double f) {
  if (!(f >= 0.0 && f < 1.0)) fail(ErrorCode::InvalidConfig, "crop fraction must be in [0, 1)");
  const auto cw = static_cast<std::size_t>(round_half_up(static_cast<double>(width) * (1.0 - f)));
  const auto ch = static_cast<std::size_t>(round_half_up(static_cast<double>(height) * (1.0 - f)));
  if (cw == 0 || ch == 0) fail(ErrorCode::DegenerateCrop, "crop of zero extent");
  return {cw, ch};
}

/// Removes the fraction `f` of each side length at a uniformly drawn offset,
/// then resizes back to the original size.
inline ImageBuf random_crop(const ImageBuf& img, double f, Stream& rng) {
  const auto [cw, ch] = crop_extent(img.width, img.height, f);
  const std::size_t x0 = rng.below(img.width - cw + 1);
  const std::size_t y0 = rng.below(img.height - ch + 1);
  ImageBuf crop(cw, ch);
  for (std::size_t y = 0; y < ch; ++y)
    for (std::size_t x = 0; x < cw; ++x)
      for (std::size_t c = 0; c < 3; ++c) crop.at(x, y, c) = img.at(x0 + x, y0 + y, c);
  return resize_bilinear(crop, img.width, img.height);
}

enum class FlipAxis { Horizontal, Vertical };

/// Horizontal mirrors left-right, vertical mirrors top-bottom.
inline ImageBuf flip(const ImageBuf& img, FlipAxis axis) {
  ImageBuf out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const std::size_t sx = axis == FlipAxis::Horizontal ? img.width - 1 - x : x;
      const std::size_t sy = axis == FlipAxis::Vertical ? img.height - 1 - y : y;
      for (std::size_t c = 0; c < 3; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

/// Rotates counter-clockwise by `degrees` about the image center.
inline ImageBuf rotate(const ImageBuf& img, double degrees) {
  if (std::fmod(degrees, 360.0) == 0.0) return img;
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  const double cx = (static_cast<double>(img.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(img.height) - 1.0) / 2.0;
  constexpr double slack = 1e-6;
  ImageBuf out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      // Image y points down, so a counter-clockwise turn on screen maps
      // destination back to source with this sign pattern.
      const double sx = cs * dx - sn * dy + cx;
      const double sy = sn * dx + cs * dy + cy;
      if (sx < -slack || sy < -slack || sx > static_cast<double>(img.width - 1) + slack ||
          sy > static_cast<double>(img.height - 1) + slack)
        continue;
      for (std::size_t c = 0; c < 3; ++c) out.at(x, y, c) = to_channel(detail::bilinear(img, sx, sy, c));
    }
  }
  return out;
}

/// Rotates by +theta or -theta, the sign drawn from `rng`.
inline ImageBuf rotate(const ImageBuf& img, double theta, Stream& rng) {
  return rotate(img, rng.coin() ? -theta : theta);
}

/// Shrinks the content by `f` and centers it on a black canvas of the
/// original size.
inline ImageBuf scale(const ImageBuf& img, double f) {
  if (!(f > 0.0 && f <= 1.0)) fail(ErrorCode::InvalidConfig, "scale factor must be in (0, 1]");
  const auto nw = static_cast<std::size_t>(round_half_up(static_cast<double>(img.width) * f));
  const auto nh = static_cast<std::size_t>(round_half_up(static_cast<double>(img.height) * f));
  if (nw == 0 || nh == 0) fail(ErrorCode::DegenerateScale, "scaled image of zero extent");
  const ImageBuf content = resize_bilinear(img, nw, nh);
  ImageBuf out(img.width, img.height);
  const std::size_t ox = (img.width - nw) / 2;
  const std::size_t oy = (img.height - nh) / 2;
  for (std::size_t y = 0; y < nh; ++y)
    for (std::size_t x = 0; x < nw; ++x)
      for (std::size_t c = 0; c < 3; ++c) out.at(ox + x, oy + y, c) = content.at(x, y, c);
  return out;
}

inline double luma(double r, double g, double b) noexcept {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

inline ImageBuf adjust_brightness(const ImageBuf& img, double factor) {
  ImageBuf out = img;
  for (auto& px : out.pixels) px = to_channel(px * factor);
  return out;
}

/// Scales each channel's distance from the image's mean luma.
inline ImageBuf adjust_contrast(const ImageBuf& img, double factor) {
  ImageBuf out = img;
  const std::size_t n = img.width * img.height;
  if (n == 0) return out;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    total += luma(img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]);
  const double mean = total / static_cast<double>(n);
  for (auto& px : out.pixels) px = to_channel((px - mean) * factor + mean);
  return out;
}

/// Scales each channel's distance from the pixel's own luma.
inline ImageBuf adjust_saturation(const ImageBuf& img, double factor) {
  ImageBuf out = img;
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    const double l = luma(img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]);
    for (std::size_t c = 0; c < 3; ++c)
      out.pixels[3 * i + c] = to_channel(l + (img.pixels[3 * i + c] - l) * factor);
  }
  return out;
}

/// Jitter factor m ~ U[max(0, 1 - v), 1 + v].
inline double draw_jitter_factor(double magnitude, Stream& rng) {
  return rng.uniform(std::max(0.0, 1.0 - magnitude), 1.0 + magnitude);
}

inline ImageBuf brightness(const ImageBuf& img, double v, Stream& rng) {
  return adjust_brightness(img, draw_jitter_factor(v, rng));
}
inline ImageBuf contrast(const ImageBuf& img, double v, Stream& rng) {
  return adjust_contrast(img, draw_jitter_factor(v, rng));
}
inline ImageBuf saturation(const ImageBuf& img, double v, Stream& rng) {
  return adjust_saturation(img, draw_jitter_factor(v, rng));
}

/// One sampled augmentation. `value` is sigma, crop fraction, signed degrees
/// or scale factor; colour ops keep the magnitude in `value` and the drawn
/// factor in `factor`. Noise and crop draw pixels/offsets from `seed`.
struct AugStep {
  Technique technique = Technique::Flip;
  double value = 0.0;
  double factor = 1.0;
  FlipAxis axis = FlipAxis::Horizontal;
  std::uint64_t seed = 0;

  bool operator==(const AugStep&) const = default;
};

struct AugPlan {
  std::string source_id;
  std::size_t copy_index = 0;
  std::vector<AugStep> steps;  // canonical technique order

  bool operator==(const AugPlan&) const = default;
};

inline constexpr int kMaxPlanAttempts = 64;

/// Includes each enabled technique with probability 1/2, redrawing the whole
/// selection when it comes out empty (falling back to the first enabled
/// technique after kMaxPlanAttempts), then draws each parameter uniformly from
/// its configured range.
inline AugPlan sample_plan(const std::string& source_id, std::size_t copy_index,
                           const AugConfig& config, Stream& rng) {
  if (config.enabled.empty()) fail(ErrorCode::InvalidConfig, "no augmentation technique enabled");
  std::vector<Technique> enabled = config.enabled;
  std::sort(enabled.begin(), enabled.end());
  enabled.erase(std::unique(enabled.begin(), enabled.end()), enabled.end());

  std::vector<Technique> chosen;
  for (int attempt = 0; attempt < kMaxPlanAttempts && chosen.empty(); ++attempt)
    for (Technique t : enabled)
      if (rng.uniform() < 0.5) chosen.push_back(t);
  if (chosen.empty()) chosen.push_back(enabled.front());

  AugPlan plan{source_id, copy_index, {}};
  for (Technique t : chosen) {
    AugStep step;
    step.technique = t;
    const ParamRange r = config.range(t);
    switch (t) {
      case Technique::GaussianNoise:
      case Technique::RandomCrop:
        step.value = rng.uniform(r.lo, r.hi);
        step.seed = rng.next();
        break;
      case Technique::Flip:
        step.axis = rng.coin() ? FlipAxis::Vertical : FlipAxis::Horizontal;
        break;
      case Technique::Rotation:
        step.value = rng.uniform(r.lo, r.hi);
        if (rng.coin()) step.value = -step.value;
        break;
      case Technique::Scaling:
        step.value = rng.uniform(r.lo, r.hi);
        break;
      case Technique::Brightness:
      case Technique::Contrast:
      case Technique::Saturation:
        step.value = rng.uniform(r.lo, r.hi);
        step.factor = draw_jitter_factor(step.value, rng);
        break;
    }
    plan.steps.push_back(step);
  }
  return plan;
}

inline ImageBuf apply_step(const ImageBuf& img, const AugStep& step) {
  switch (step.technique) {
    case Technique::GaussianNoise: {
      Stream rng(step.seed);
      return gaussian_noise(img, step.value, rng);
    }
    case Technique::RandomCrop: {
      Stream rng(step.seed);
      return random_crop(img, step.value, rng);
    }
    case Technique::Flip: return flip(img, step.axis);
    case Technique::Rotation: return rotate(img, step.value);
    case Technique::Scaling: return scale(img, step.value);
    case Technique::Brightness: return adjust_brightness(img, step.factor);
    case Technique::Contrast: return adjust_contrast(img, step.factor);
    case Technique::Saturation: return adjust_saturation(img, step.factor);
  }
  return img;
}

inline ImageBuf apply_plan(const ImageBuf& img, const AugPlan& plan) {
  ImageBuf out = img;
  for (const auto& step : plan.steps) out = apply_step(out, step);
  return out;
}

inline json plan_to_json(const AugPlan& plan) {
  json steps = json::array();
  for (const auto& s : plan.steps) {
    json j = {{"technique", technique_name(s.technique)}};
    switch (s.technique) {
      case Technique::GaussianNoise: j["sigma"] = s.value; j["seed"] = s.seed; break;
      case Technique::RandomCrop: j["fraction"] = s.value; j["seed"] = s.seed; break;
      case Technique::Flip: j["axis"] = s.axis == FlipAxis::Horizontal ? "horizontal" : "vertical"; break;
      case Technique::Rotation: j["degrees"] = s.value; break;
      case Technique::Scaling: j["factor"] = s.value; break;
      default: j["magnitude"] = s.value; j["factor"] = s.factor; break;
    }
    steps.push_back(std::move(j));
  }
  return {{"source_id", plan.source_id}, {"copy_index", plan.copy_index}, {"steps", std::move(steps)}};
}

inline AugPlan plan_from_json(const json& j) {
  AugPlan plan;
  try {
    plan.source_id = j.at("source_id").get<std::string>();
    plan.copy_index = j.at("copy_index").get<std::size_t>();
    for (const auto& js : j.at("steps")) {
      AugStep s;
      const auto t = parse_technique(js.at("technique").get<std::string>());
      if (!t) fail(ErrorCode::MalformedDocument, "unknown technique in plan");
      s.technique = *t;
      switch (s.technique) {
        case Technique::GaussianNoise: s.value = js.at("sigma"); s.seed = js.at("seed"); break;
        case Technique::RandomCrop: s.value = js.at("fraction"); s.seed = js.at("seed"); break;
        case Technique::Flip:
          s.axis = js.at("axis") == "vertical" ? FlipAxis::Vertical : FlipAxis::Horizontal;
          break;
        case Technique::Rotation: s.value = js.at("degrees"); break;
        case Technique::Scaling: s.value = js.at("factor"); break;
        default: s.value = js.at("magnitude"); s.factor = js.at("factor"); break;
      }
      plan.steps.push_back(s);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedDocument, std::string("plan: ") + e.what());
  }
  return plan;
}

}  // namespace autodc
