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

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "autodc/error.hpp"
#include "autodc/io.hpp"

namespace autodc {

/// Augmentation techniques, in canonical application order.
enum class Technique {
  GaussianNoise,
  RandomCrop,
  Flip,
  Rotation,
  Scaling,
  Brightness,
  Contrast,
  Saturation,
};

inline constexpr std::array kAllTechniques = {
    Technique::GaussianNoise, Technique::RandomCrop, Technique::Flip,       Technique::Rotation,
    Technique::Scaling,       Technique::Brightness, Technique::Contrast,   Technique::Saturation,
};

constexpr std::string_view technique_name(Technique t) {
  switch (t) {
    case Technique::GaussianNoise: return "gaussian_noise";
    case Technique::RandomCrop: return "random_crop";
    case Technique::Flip: return "flip";
    case Technique::Rotation: return "rotation";
    case Technique::Scaling: return "scaling";
    case Technique::Brightness: return "brightness";
    case Technique::Contrast: return "contrast";
    case Technique::Saturation: return "saturation";
  }
  return "";
}

inline std::optional<Technique> parse_technique(std::string_view name) {
  for (Technique t : kAllTechniques)
    if (technique_name(t) == name) return t;
  return std::nullopt;
}

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const ParamRange&) const = default;
};

/// Default sampling ranges. Noise is the per-channel standard deviation in
/// 8-bit units, crop is the fraction removed from each side length, rotation
/// is in degrees (sign drawn separately), scaling is the content scale, and
/// brightness/contrast/saturation are jitter magnitudes v for a factor drawn
/// from [max(0, 1-v), 1+v]. Flip has no range.
inline constexpr std::array<ParamRange, kAllTechniques.size()> kDefaultRanges = {{
    {10.0, 60.0},
    {0.0, 0.5},
    {0.0, 0.0},
    {30.0, 60.0},
    {0.5, 1.0},
    {0.2, 0.8},
    {0.1, 0.6},
    {0.1, 0.6},
}};

inline constexpr double kDefaultAugRatio = 0.20;
inline constexpr double kMaxAugRatio = 0.5;

struct AugConfig {
  std::vector<Technique> enabled{kAllTechniques.begin(), kAllTechniques.end()};
  std::array<ParamRange, kAllTechniques.size()> ranges = kDefaultRanges;
  double ratio = kDefaultAugRatio;

  bool operator==(const AugConfig&) const = default;

  const ParamRange& range(Technique t) const { return ranges[static_cast<std::size_t>(t)]; }
  ParamRange& range(Technique t) { return ranges[static_cast<std::size_t>(t)]; }

  /// Sorts `enabled` into canonical order and drops duplicates.
  void canonicalize() {
    std::sort(enabled.begin(), enabled.end());
    enabled.erase(std::unique(enabled.begin(), enabled.end()), enabled.end());
  }

  void validate() const {
    if (!(ratio >= 0.0 && ratio <= kMaxAugRatio))
      fail(ErrorCode::RatioOutOfRange, std::to_string(ratio));
    if (enabled.empty()) fail(ErrorCode::InvalidConfig, "no augmentation technique enabled");
    for (Technique t : kAllTechniques) {
      if (t == Technique::Flip) continue;
      const auto [lo, hi] = range(t);
      const std::string what(technique_name(t));
      if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
        fail(ErrorCode::InvalidConfig, what + ": range must be finite with lo <= hi");
      switch (t) {
        case Technique::RandomCrop:
          if (lo < 0.0 || hi >= 1.0) fail(ErrorCode::InvalidConfig, what + ": need 0 <= f < 1");
          break;
        case Technique::Scaling:
          if (lo <= 0.0 || hi > 1.0) fail(ErrorCode::InvalidConfig, what + ": need 0 < f <= 1");
          break;
        case Technique::Rotation:
          break;
        default:
          if (lo < 0.0) fail(ErrorCode::InvalidConfig, what + ": must be non-negative");
      }
    }
  }
};

inline json technique_list_to_json(const std::vector<Technique>& list) {
  json out = json::array();
  for (Technique t : list) out.push_back(technique_name(t));
  return out;
}

inline std::vector<Technique> technique_list_from_json(const json& j) {
  std::vector<Technique> out;
  for (const auto& item : j) {
    const auto name = item.get<std::string>();
    const auto t = parse_technique(name);
    if (!t) fail(ErrorCode::InvalidConfig, "unknown augmentation technique '" + name + "'");
    out.push_back(*t);
  }
  return out;
}

inline json aug_config_to_json(const AugConfig& c) {
  json ranges = json::object();
  for (Technique t : kAllTechniques) {
    if (t == Technique::Flip) continue;
    ranges[std::string(technique_name(t))] = {c.range(t).lo, c.range(t).hi};
  }
  return {{"enabled", technique_list_to_json(c.enabled)}, {"ranges", ranges}, {"ratio", c.ratio}};
}

/// Missing keys keep the values already in `base`.
inline AugConfig aug_config_from_json(const json& j, AugConfig base = {}) {
  try {
    if (j.contains("enabled")) base.enabled = technique_list_from_json(j.at("enabled"));
    if (j.contains("ranges")) {
      for (const auto& [name, value] : j.at("ranges").items()) {
        const auto t = parse_technique(name);
        if (!t) fail(ErrorCode::InvalidConfig, "unknown augmentation technique '" + name + "'");
        if (value.is_array()) {
          base.range(*t) = {value.at(0).get<double>(), value.at(1).get<double>()};
        } else {
          base.range(*t) = {value.at("lo").get<double>(), value.at("hi").get<double>()};
        }
      }
    }
    if (j.contains("ratio")) base.ratio = j.at("ratio").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::BadRequest, std::string("augmentation config: ") + e.what());
  }
  base.canonicalize();
  base.validate();
  return base;
}

}  // namespace autodc
