// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_SYNTH_H_
#define CRA_SYNTH_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cra/records.h"
#include "cra/rng.h"

namespace cra::data {

// Selection-bias benchmark. Every task has two unit-covariance Gaussian
// clusters whose means lie on a sphere of radius `separation` inside a
// random signal subspace of dimension signal_dim shared by all tasks. Query
// candidates come from the true clusters; support candidates come from
// copies of the clusters displaced by bias * separation along a random
// direction per cluster. The reference pool holds unlabeled draws from
// the true clusters of every task.
struct SynthConfig {
  std::size_t dim = 32;
  std::size_t signal_dim = 0;  // 0 = dim
  std::size_t train_tasks = 24;
  std::size_t valid_tasks = 4;
  std::size_t test_tasks = 12;
  double separation = 3.0;
  double bias = 0.5;
  double prevalence = 0.3;
  std::size_t support_candidates = 64;
  std::size_t query_candidates = 64;
  std::size_t min_per_class = 2;
  std::size_t reference_pool = 4096;

  std::size_t task_count() const { return train_tasks + valid_tasks + test_tasks; }
  std::size_t effective_signal_dim() const { return signal_dim == 0 ? dim : signal_dim; }
  void validate() const;  // throws InvalidConfig
};

class InvalidConfigError : public std::invalid_argument {
 public:
  explicit InvalidConfigError(const std::string& what) : std::invalid_argument("InvalidConfig: " + what) {}
};

struct SynthSuite {
  std::vector<Task> train;
  std::vector<Task> valid;
  std::vector<Task> test;
  std::vector<MoleculeRecord> reference;
};

SynthSuite synth_tasks(const SynthConfig& config, Rng& rng);

}  // namespace cra::data

#endif  // CRA_SYNTH_H_
