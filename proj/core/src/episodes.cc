// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/episodes.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cra::data {

namespace {

const char* kind_name(EpisodeError::Kind k) {
  switch (k) {
    case EpisodeError::Kind::kTaskTooSmall: return "TaskTooSmall";
    case EpisodeError::Kind::kSingleClassTask: return "SingleClassTask";
    case EpisodeError::Kind::kPoolTooSmall: return "PoolTooSmall";
  }
  return "EpisodeError";
}

std::vector<int> labels_of(const std::vector<const MoleculeRecord*>& rs) {
  std::vector<int> out;
  out.reserve(rs.size());
  for (const auto* r : rs) out.push_back(r->label.value_or(0));
  return out;
}

}  // namespace

EpisodeError::EpisodeError(Kind kind, const std::string& detail)
    : std::runtime_error(std::string(kind_name(kind)) + ": " + detail), kind_(kind) {}

const char* to_string(SamplingMode mode) {
  return mode == SamplingMode::kBalanced ? "balanced" : "stratified";
}

SamplingMode sampling_mode_from_string(std::string_view s) {
  if (s == "balanced") return SamplingMode::kBalanced;
  if (s == "stratified") return SamplingMode::kStratified;
  throw std::invalid_argument("unknown sampling mode '" + std::string(s) + "'");
}

std::vector<int> Episode::support_labels() const { return labels_of(support); }
std::vector<int> Episode::query_labels() const { return labels_of(query); }

std::size_t stratified_positive_count(double positive_fraction, std::size_t n_support) {
  if (n_support < 2) throw std::invalid_argument("stratified sampling needs a support size of at least 2");
  const auto rounded = static_cast<std::size_t>(std::llround(positive_fraction * static_cast<double>(n_support)));
  return std::clamp<std::size_t>(rounded, 1, n_support - 1);
}

Episode sample_episode(const Task& task, Rng& rng, std::size_t n_support, std::size_t n_query,
                       SamplingMode mode) {
  if (task.positives() == 0 || task.negatives() == 0) {
    throw EpisodeError(EpisodeError::Kind::kSingleClassTask, "task '" + task.task_id + "'");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < task.records.size(); ++i) {
    const auto& r = task.records[i];
    if (r.role == PoolRole::kQuery) continue;
    (*r.label == 1 ? pos : neg).push_back(i);
  }
  std::size_t want_pos = 0;
  if (mode == SamplingMode::kBalanced) {
    if (n_support < 2) throw std::invalid_argument("balanced sampling needs a support size of at least 2");
    want_pos = n_support / 2;
  } else {
    want_pos = stratified_positive_count(task.positive_fraction(), n_support);
  }
  const std::size_t want_neg = n_support - want_pos;
  if (pos.size() < want_pos || neg.size() < want_neg) {
    throw EpisodeError(EpisodeError::Kind::kTaskTooSmall,
                       "task '" + task.task_id + "' needs " + std::to_string(want_pos) + " positive and " +
                           std::to_string(want_neg) + " negative support candidates, has " +
                           std::to_string(pos.size()) + " and " + std::to_string(neg.size()));
  }
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<unsigned char> used(task.records.size(), 0);
  Episode ep;
  ep.support.reserve(n_support);
  for (std::size_t k = 0; k < want_pos; ++k) {
    ep.support.push_back(&task.records[pos[k]]);
    used[pos[k]] = 1;
  }
  for (std::size_t k = 0; k < want_neg; ++k) {
    ep.support.push_back(&task.records[neg[k]]);
    used[neg[k]] = 1;
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < task.records.size(); ++i) {
    if (!used[i] && task.records[i].role != PoolRole::kSupport) rest.push_back(i);
  }
  if (n_query > 0 && rest.empty()) {
    throw EpisodeError(EpisodeError::Kind::kTaskTooSmall,
                       "task '" + task.task_id + "' has no records left for the query set");
  }
  rng.shuffle(rest);
  const std::size_t take = std::min(n_query, rest.size());
  ep.query.reserve(take);
  for (std::size_t k = 0; k < take; ++k) ep.query.push_back(&task.records[rest[k]]);
  return ep;
}

std::vector<const MoleculeRecord*> sample_reference(std::span<const MoleculeRecord> pool,
                                                    std::size_t m, Rng& rng) {
  if (pool.size() < m) {
    throw EpisodeError(EpisodeError::Kind::kPoolTooSmall,
                       "reference pool has " + std::to_string(pool.size()) + " molecules, need " +
                           std::to_string(m));
  }
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const MoleculeRecord*> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(idx[i], idx[j]);
    out.push_back(&pool[idx[i]]);
  }
  return out;
}

}  // namespace cra::data
