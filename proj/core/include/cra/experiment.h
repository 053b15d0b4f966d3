// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_EXPERIMENT_H_
#define CRA_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cra/config.h"
#include "cra/metrics.h"
#include "cra/model.h"
#include "cra/records.h"

namespace cra::exp {

struct Suite {
  std::span<const data::Task> train;
  std::span<const data::Task> valid;
  std::span<const data::Task> test;
  std::span<const data::MoleculeRecord> pool;
};

using LogFn = std::function<void(const std::string&)>;

// Model seed of training replica r. Variants share it, so their common
// tensors (the encoder) start from identical values.
std::uint64_t replica_seed(std::uint64_t seed, std::size_t replica);

std::vector<model::Model> train_replicas(const Suite& suite, const model::ModelConfig& config,
                                         const train::TrainConfig& train_config,
                                         std::size_t replicas, std::uint64_t seed,
                                         const LogFn& log = {});

struct VariantRow {
  model::Variant variant;
  std::vector<model::Model> models;
  metrics::EvalReport report;
};

struct SweepRow {
  std::size_t reference_size = 0;
  bool skipped = false;
  std::string reason;
  metrics::EvalReport report;
};

struct AblationResult {
  std::vector<VariantRow> variants;
  std::vector<SweepRow> sweep;
};

// Trains config.ablation.seeds replicas of every listed variant and
// evaluates them on identical test episodes. With reference_sweep, also
// trains and evaluates the full variant at each M of the sweep; sizes
// above the pool size are marked skipped.
AblationResult run_ablation(const Suite& suite, const RunConfig& config, bool reference_sweep,
                            const LogFn& log = {});

std::string ablation_csv(const AblationResult& result);
std::string sweep_csv(const AblationResult& result);

}  // namespace cra::exp

#endif  // CRA_EXPERIMENT_H_
