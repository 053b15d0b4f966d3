// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_EVALUATE_H_
#define CRA_EVALUATE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cra/episodes.h"
#include "cra/metrics.h"
#include "cra/model.h"

namespace cra::eval {

struct EvalConfig {
  std::size_t support_size = 16;
  std::size_t query_size = data::kAllRemaining;
  std::size_t reruns = 1;  // R; checkpoints are cycled when fewer are given
  std::size_t draws = 10;  // K support draws per rerun
  data::SamplingMode sampling = data::SamplingMode::kStratified;
  std::size_t workers = 0;          // 0 = hardware concurrency
  std::size_t reference_size = 0;   // 0 = each model's M
  std::vector<std::size_t> support_sweep;  // empty = just support_size

  void validate() const;
};

// Episode (task, rerun r, draw k) is sampled from a stream seeded by
// (seed, task id, r, k), independent of the model and of scheduling, so
// different models are scored on identical episodes.
data::Episode eval_episode(const data::Task& task, std::span<const data::MoleculeRecord> pool,
                           std::size_t n_support, std::size_t n_query,
                           data::SamplingMode mode, std::size_t reference_size,
                           std::uint64_t seed, std::size_t rerun, std::size_t draw);

std::vector<metrics::EpisodeMetrics> evaluate_episodes(
    std::span<const model::Model> models, std::span<const data::Task> tasks,
    std::span<const data::MoleculeRecord> pool, const EvalConfig& config,
    std::size_t support_size, std::uint64_t seed);

metrics::EvalReport evaluate(std::span<const model::Model> models,
                             std::span<const data::Task> tasks,
                             std::span<const data::MoleculeRecord> pool,
                             const EvalConfig& config, std::uint64_t seed,
                             std::vector<metrics::EpisodeMetrics>* episodes = nullptr);

// One report per support size in config.support_sweep.
std::vector<metrics::EvalReport> evaluate_sweep(std::span<const model::Model> models,
                                                std::span<const data::Task> tasks,
                                                std::span<const data::MoleculeRecord> pool,
                                                const EvalConfig& config, std::uint64_t seed);

}  // namespace cra::eval

#endif  // CRA_EVALUATE_H_
