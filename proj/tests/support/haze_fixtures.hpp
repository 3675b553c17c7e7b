// Copyright 2026 The clipce Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>

#include "common/rng.hpp"
#include "haze/haze.hpp"
#include "image/image.hpp"

namespace testing_support {

inline clipce::Image random_image(clipce::SplitMix64& rng, int w, int h) {
  clipce::Image img(w, h, 3);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

// Depth with a positive floor and a wide dynamic range.
inline clipce::Map2D random_depth(clipce::SplitMix64& rng, int w, int h) {
  clipce::Map2D d(w, h);
  for (double& v : d.values) v = std::exp(rng.uniform(-2.0, 6.0));
  return d;
}

// Outdoor-like scene of known airlight: textured foreground at small depth,
// a distant band whose clear radiance lies near A. Returns the hazy image.
struct DcpFixture {
  clipce::Image hazy;
  clipce::haze::Rgb a{};
  int beta = 0;
};

inline DcpFixture dcp_fixture(clipce::SplitMix64& rng, int size = 64) {
  DcpFixture f;
  for (double& c : f.a) c = rng.uniform(0.6, 1.0);
  f.beta = 2 + static_cast<int>(rng.below(4));
  clipce::Image clear(size, size, 3);
  clipce::Map2D depth(size, size);
  const int horizon = size / 3;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool far = y < horizon;
      depth.at(x, y) = far ? 1.0 : 0.05 + 0.3 * static_cast<double>(y - horizon) / size;
      for (int c = 0; c < 3; ++c) {
        clear.at(x, y, c) = far ? std::clamp(f.a[c] + rng.uniform(-0.2, 0.2), 0.0, 1.0) : rng.uniform(0.0, 0.9);
      }
    }
  }
  f.hazy = clipce::haze::compose_haze(clear, clipce::haze::transmission(depth, f.beta), f.a);
  return f;
}

}  // namespace testing_support
