// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_CHECKPOINT_H_
#define CRA_CHECKPOINT_H_

#include <cstdint>
#include <stdexcept>
#include <string>

#include "cra/model.h"

namespace cra {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error("checkpoint: " + what) {}
};

// "CRAM", u32 version, u32 length + ModelConfig JSON, then per tensor in
// layout order: u32 name length, name, u64 rows, u64 cols, f64 values.
// All integers and floats little-endian.
std::string checkpoint_bytes(const model::Model& model);
model::Model checkpoint_from_bytes(const std::string& bytes, const std::string& origin = "<memory>");

void save_checkpoint(const std::string& path, const model::Model& model);
model::Model load_checkpoint(const std::string& path);

}  // namespace cra

#endif  // CRA_CHECKPOINT_H_
