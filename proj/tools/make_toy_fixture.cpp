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

// Writes the bundled two-class toy dataset: 19 "i" and 21 "ii" images
// (32x32, one or two vertical strokes), a manifest and 16-dim embeddings.
// Embeddings are class-centered Gaussians with three far points per class.
// Record ii_20 is labeled "i" but drawn and embedded as "ii", so each label
// holds 20 records.

#include <iostream>
#include <string>

#include "autodc/embeddings.hpp"
#include "autodc/image.hpp"
#include "autodc/io.hpp"
#include "autodc/manifest.hpp"
#include "autodc/rng.hpp"

using namespace autodc;

namespace {

constexpr std::size_t kSide = 32;
constexpr std::size_t kDim = 16;

ImageBuf draw_numeral(int strokes, Stream& rng) {
  ImageBuf img(kSide, kSide, 235);
  const std::size_t gap = 8;
  const std::size_t total = strokes * 3 + (strokes - 1) * gap;
  const std::size_t start = (kSide - total) / 2 + rng.below(5) - 2;
  const std::size_t top = 5 + rng.below(3);
  const std::size_t bottom = kSide - 5 - rng.below(3);
  for (int s = 0; s < strokes; ++s) {
    const std::size_t x0 = start + s * (3 + gap);
    for (std::size_t y = top; y < bottom; ++y)
      for (std::size_t x = x0; x < x0 + 3; ++x)
        for (std::size_t c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(20 + rng.below(30));
  }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("tests/fixtures/toy");
  fs::create_directories(out / "images");
  Stream rng = derive_stream(7, "fixture/toy");
  GaussianSampler gauss;

  DatasetManifest manifest{"roman-numerals-toy", {"i", "ii"}, {}};
  EmbeddingMatrix emb;
  emb.dim = kDim;
  for (int cls = 0; cls < 2; ++cls) {
    const std::string label = cls == 0 ? "i" : "ii";
    const int count = cls == 0 ? 19 : 21;
    for (int k = 0; k < count; ++k) {
      const std::string id = label + "_" + (k < 10 ? "0" : "") + std::to_string(k);
      const bool mislabeled = cls == 1 && k == 20;
      const bool far = !mislabeled && k >= count - (cls == 0 ? 3 : 4);
      const int strokes = cls + 1;
      write_png(draw_numeral(strokes, rng), out / "images" / (id + ".png"));
      manifest.records.push_back({id, "images/" + id + ".png", mislabeled ? "i" : label,
                                  Origin::Original, std::nullopt});
      emb.ids.push_back(id);
      for (std::size_t d = 0; d < kDim; ++d) {
        const double center = (d % 2 == static_cast<std::size_t>(cls)) ? 4.0 : 0.0;
        const double spread = far ? 2.5 : 0.5;
        emb.data.push_back(center + spread * gauss(rng));
      }
    }
  }
  save_manifest(manifest, out / "dataset.json");
  write_file_atomic(out / "embeddings.csv", format_embeddings(emb));
  std::cout << "wrote " << manifest.records.size() << " records to " << out << "\n";
}
