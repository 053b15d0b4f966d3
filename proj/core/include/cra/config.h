// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_CONFIG_H_
#define CRA_CONFIG_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cra/evaluate.h"
#include "cra/model.h"
#include "cra/synth.h"
#include "cra/train.h"

namespace cra {

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument("config: " + what) {}
};

struct Paths {
  std::string train_tasks;
  std::string valid_tasks;
  std::string test_tasks;
  // A pool file, or "@train" for the training molecules with labels removed.
  std::string reference_pool;
  std::string checkpoint;
  std::string out_dir;
};

struct AblationSettings {
  std::vector<model::Variant> variants = {model::Variant::kEncoderOnly, model::Variant::kAttention,
                                          model::Variant::kAnchor, model::Variant::kFull};
  std::size_t seeds = 3;
  std::vector<std::size_t> reference_sweep = {32, 128, 512, 2048};
};

struct RunConfig {
  std::string preset = "custom";  // moleculenet | fsmol | custom
  std::uint64_t seed = 0;
  model::ModelConfig model;       // input_dim 0 = infer from the data
  train::TrainConfig train;
  eval::EvalConfig eval;
  AblationSettings ablation;
  data::SynthConfig synth;
  Paths paths;
};

// Episode-shape defaults of a named protocol; "custom" changes nothing.
void apply_preset(RunConfig& config, std::string_view preset);

// Strict: unknown keys and wrong types are errors. Keys absent from the
// document keep the preset's (then the built-in) defaults.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);

// Every field, resolved. Round-trips through parse_run_config.
std::string dump_run_config(const RunConfig& config);

std::string model_config_to_json(const model::ModelConfig& config);
model::ModelConfig model_config_from_json(std::string_view json_text);

}  // namespace cra

#endif  // CRA_CONFIG_H_
