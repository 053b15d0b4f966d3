// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_EPISODES_H_
#define CRA_EPISODES_H_

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cra/records.h"
#include "cra/rng.h"

namespace cra::data {

enum class SamplingMode {
  kBalanced,    // N^s / 2 per class
  kStratified,  // support keeps the task's positive fraction
};

const char* to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(std::string_view s);

// Query size meaning "every remaining eligible record".
inline constexpr std::size_t kAllRemaining = std::numeric_limits<std::size_t>::max();

struct Episode {
  std::vector<const MoleculeRecord*> support;
  std::vector<const MoleculeRecord*> query;
  std::vector<const MoleculeRecord*> reference;

  std::vector<int> support_labels() const;
  std::vector<int> query_labels() const;
};

class EpisodeError : public std::runtime_error {
 public:
  enum class Kind { kTaskTooSmall, kSingleClassTask, kPoolTooSmall };
  EpisodeError(Kind kind, const std::string& detail);
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Positive count of a stratified support set of size n_support.
std::size_t stratified_positive_count(double positive_fraction, std::size_t n_support);

// Support is drawn from records whose role is kAny or kSupport, the query
// from the remaining kAny / kQuery records. When fewer than n_query remain,
// the query takes all of them (TaskTooSmall if none remain and n_query > 0).
Episode sample_episode(const Task& task, Rng& rng, std::size_t n_support, std::size_t n_query,
                       SamplingMode mode);

// Uniform without replacement, in draw order.
std::vector<const MoleculeRecord*> sample_reference(std::span<const MoleculeRecord> pool,
                                                    std::size_t m, Rng& rng);

}  // namespace cra::data

#endif  // CRA_EPISODES_H_
