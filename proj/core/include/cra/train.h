// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_TRAIN_H_
#define CRA_TRAIN_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cra/episodes.h"
#include "cra/model.h"
#include "cra/records.h"

namespace cra::train {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t max_episodes = 2000;
  std::size_t validation_interval = 100;
  std::size_t patience = 5;  // validation checks without improvement
  std::size_t support_size = 16;
  std::size_t query_size = 16;
  double clip_norm = 5.0;
  data::SamplingMode sampling = data::SamplingMode::kStratified;
  std::size_t validation_draws = 2;  // episodes per validation task

  void validate() const;
};

struct CurvePoint {
  std::size_t episode = 0;
  double loss = 0.0;
  bool validated = false;
  double validation_delta_auc_pr = 0.0;
};

struct TrainResult {
  model::Params params;  // best validation parameters
  std::vector<CurvePoint> curve;
  double initial_validation = 0.0;  // before the first update
  double best_validation = 0.0;
  std::size_t best_episode = 0;
  std::size_t episodes_run = 0;
  bool early_stopped = false;
  bool has_validation = false;
};

using ProgressFn = std::function<void(const CurvePoint&)>;

// Episodic training. `valid` may be empty (no early stopping; the final
// parameters are returned). `pool` may be empty for variants that do not
// use a reference batch. All randomness derives from config.seed.
TrainResult train(std::span<const data::Task> tasks, std::span<const data::Task> valid,
                  std::span<const data::MoleculeRecord> pool, const model::ModelConfig& config,
                  const TrainConfig& train_config, const ProgressFn& progress = {});

// Mean query delta AUC-PR over fixed validation episodes.
double validation_score(const model::Model& model,
                        std::span<const data::Episode> episodes);

std::vector<data::Episode> validation_episodes(std::span<const data::Task> valid,
                                               std::span<const data::MoleculeRecord> pool,
                                               const model::ModelConfig& config,
                                               const TrainConfig& train_config);

std::string curve_csv(std::span<const CurvePoint> curve);

}  // namespace cra::train

#endif  // CRA_TRAIN_H_
