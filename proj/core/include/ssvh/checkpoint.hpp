// Copyright 2026 The ssvh Authors.
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

// Checkpoints: a binary parameter file plus a JSON sidecar holding the
// effective configuration.

#ifndef SSVH_CHECKPOINT_HPP_
#define SSVH_CHECKPOINT_HPP_

#include <filesystem>
#include <string>

#include "ssvh/trainer.hpp"

namespace ssvh {

// Parameter file (.ckpt): "SVCK" | u16 version=1 | u16 flags (bit 0: Adam
// moments follow each value) | u32 epoch | u64 optimizer steps |
// u32 param count | per param: u16 name length, name, u32 rows, u32 cols,
// rows*cols f64 values [, first moments, second moments].
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);

// Sidecar path for a checkpoint: `<path>.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& path);

// Rebuilds the state; semantic centers are recomputed on the next full epoch.
TrainState load_checkpoint(const std::filesystem::path& path);

// The effective config stored in a sidecar.
ExperimentConfig load_sidecar_config(const std::filesystem::path& path);

}  // namespace ssvh

#endif  // SSVH_CHECKPOINT_HPP_
