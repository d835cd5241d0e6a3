// Copyright 2026 The mrcqt Authors
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


#ifndef MRCQT_CHECKPOINT_H_
#define MRCQT_CHECKPOINT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrcqt/net.h"
#include "mrcqt/optim.h"

// Little-endian binary checkpoint:
//   "MRCQTCKP"                      8-byte magic
//   u32 version                     kCheckpointVersion
//   u64 iteration, u64 adam step
//   u32 length + bytes              rng state
//   u32 length + bytes              run config text, verbatim
//   u32 tensor count, then per tensor (sorted by name within each group):
//     u32 name length, name, u8 dtype (1 = float64), u32 rank,
//     u64 dims[rank], raw values
// Tensor groups are prefixed "param/", "buffer/", "ema/", "adam_m/" and
// "adam_v/", in that order. Encoding is a pure function of the contents, so
// save -> load -> save reproduces the bytes.
namespace mrcqt {

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_text;
  uint64_t iteration = 0;
  std::string rng_state;
  ModelParams params;  // trainable and buffers
  ModelParams ema;     // trainable only
  AdamState adam;
};

std::vector<uint8_t> EncodeCheckpoint(const Checkpoint& checkpoint);
// Throws FormatError on bad magic, unknown version or dtype, truncation or
// trailing bytes.
Checkpoint DecodeCheckpoint(std::span<const uint8_t> bytes);

// Writes to a temporary file and renames it into place.
void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::string& path);

// Throws SizeError naming the first tensor missing from, extra in or shaped
// differently in `actual` relative to `expected`.
void CheckSameTree(const std::map<std::string, Tensor>& expected,
                   const std::map<std::string, Tensor>& actual,
                   const std::string& what);

}  // namespace mrcqt

#endif  // MRCQT_CHECKPOINT_H_
