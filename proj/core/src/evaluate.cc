// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/evaluate.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "cra/rng.h"

namespace cra::eval {

void EvalConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("EvalConfig: " + m); };
  if (support_size < 2) fail("support_size must be >= 2");
  if (query_size == 0) fail("query_size must be > 0");
  if (reruns == 0) fail("reruns must be >= 1");
  if (draws == 0) fail("draws must be >= 1");
  for (std::size_t s : support_sweep) {
    if (s < 2) fail("support sizes must be >= 2");
  }
}

data::Episode eval_episode(const data::Task& task, std::span<const data::MoleculeRecord> pool,
                           std::size_t n_support, std::size_t n_query, data::SamplingMode mode,
                           std::size_t reference_size, std::uint64_t seed, std::size_t rerun,
                           std::size_t draw) {
  std::uint64_t s = derive_seed(seed, "eval", task.task_id);
  s = derive_seed(s, "rerun", rerun);
  s = derive_seed(s, "draw", draw);
  Rng rng(s);
  data::Episode e = data::sample_episode(task, rng, n_support, n_query, mode);
  if (reference_size > 0) e.reference = data::sample_reference(pool, reference_size, rng);
  return e;
}

std::vector<metrics::EpisodeMetrics> evaluate_episodes(
    std::span<const model::Model> models, std::span<const data::Task> tasks,
    std::span<const data::MoleculeRecord> pool, const EvalConfig& config,
    std::size_t support_size, std::uint64_t seed) {
  config.validate();
  if (models.empty()) throw std::invalid_argument("evaluate: no models");
  const std::size_t per_task = config.reruns * config.draws;
  std::vector<metrics::EpisodeMetrics> out(tasks.size() * per_task);

  auto run_task = [&](std::size_t t) {
    const data::Task& task = tasks[t];
    for (std::size_t r = 0; r < config.reruns; ++r) {
      const model::Model& m = models[r % models.size()];
      const bool with_ref = model::uses_reference(m.config.variant);
      const std::size_t ref_size =
          with_ref ? (config.reference_size ? config.reference_size : m.config.reference_size) : 0;
      if (ref_size > pool.size()) {
        throw data::EpisodeError(data::EpisodeError::Kind::kPoolTooSmall,
                                 "reference pool has " + std::to_string(pool.size()) +
                                     " molecules, need " + std::to_string(ref_size));
      }
      for (std::size_t k = 0; k < config.draws; ++k) {
        data::Episode e = eval_episode(task, pool, support_size, config.query_size,
                                       config.sampling, ref_size, seed, r, k);
        const auto probs = model::predict(m, e);
        std::vector<std::string> ids;
        for (const auto* q : e.query) ids.push_back(q->id);
        auto& slot = out[t * per_task + r * config.draws + k];
        slot = metrics::score_episode(probs, e.query_labels(), ids);
        slot.task_id = task.task_id;
        slot.rerun = r;
        slot.draw = k;
      }
    }
  };

  std::size_t workers = config.workers ? config.workers : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, tasks.size()));
  if (workers == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool_threads;
  for (std::size_t w = 0; w < workers; ++w) {
    pool_threads.emplace_back([&] {
      for (std::size_t t = next++; t < tasks.size(); t = next++) {
        try {
          run_task(t);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool_threads) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

metrics::EvalReport evaluate(std::span<const model::Model> models,
                             std::span<const data::Task> tasks,
                             std::span<const data::MoleculeRecord> pool, const EvalConfig& config,
                             std::uint64_t seed, std::vector<metrics::EpisodeMetrics>* episodes) {
  auto eps = evaluate_episodes(models, tasks, pool, config, config.support_size, seed);
  metrics::EvalReport report = metrics::aggregate(eps, config.reruns, config.draws);
  report.support_size = config.support_size;
  if (episodes != nullptr) *episodes = std::move(eps);
  return report;
}

std::vector<metrics::EvalReport> evaluate_sweep(std::span<const model::Model> models,
                                                std::span<const data::Task> tasks,
                                                std::span<const data::MoleculeRecord> pool,
                                                const EvalConfig& config, std::uint64_t seed) {
  std::vector<std::size_t> sizes = config.support_sweep;
  if (sizes.empty()) sizes.push_back(config.support_size);
  std::vector<metrics::EvalReport> out;
  for (std::size_t s : sizes) {
    auto eps = evaluate_episodes(models, tasks, pool, config, s, seed);
    metrics::EvalReport report = metrics::aggregate(eps, config.reruns, config.draws);
    report.support_size = s;
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace cra::eval
