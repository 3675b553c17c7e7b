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

#include <cstdint>
#include <vector>

#include "data/manifest.hpp"
#include "embedding/embedding.hpp"
#include "image/image.hpp"

namespace clipce::data {

// One prepared crop per annotation, in annotation order.
std::vector<Image> crop_objects(const DatasetManifest& manifest, std::int64_t image_id,
                                const embedding::CropPolicy& policy);

}  // namespace clipce::data
