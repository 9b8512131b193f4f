// Copyright 2026 The oproute Authors
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

// Checkpoint layout (JSON):
//   {
//     "format": "oproute-checkpoint",
//     "format_version": 1,
//     "architecture": {"widths": [...], "taps": [...],
//                      "activation": "relu", "normalize_gso": false},
//     "tensors": [{"name": "filter0", "shape": [2, 2, 16], "data": [...]}, ...]
//   }
// Tensors appear in GnnParams::flatten() order. Values are written with
// enough digits to round-trip exactly.

#ifndef OPROUTE_CHECKPOINT_HPP_
#define OPROUTE_CHECKPOINT_HPP_

#include <filesystem>
#include <string>

#include "oproute/gnn.hpp"

namespace oproute {

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_json(const GnnParams& params);
GnnParams checkpoint_from_json(const std::string& text);
void save_checkpoint(const GnnParams& params, const std::filesystem::path& path);
GnnParams load_checkpoint(const std::filesystem::path& path);

}  // namespace oproute

#endif  // OPROUTE_CHECKPOINT_HPP_
