// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cra::data {

namespace {

std::vector<double> random_direction(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// Rows span a random k-dimensional subspace of R^dim (Gram-Schmidt).
std::vector<std::vector<double>> orthonormal_basis(Rng& rng, std::size_t dim, std::size_t k) {
  if (k == dim) {
    std::vector<std::vector<double>> eye(dim, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < dim; ++i) eye[i][i] = 1.0;
    return eye;
  }
  std::vector<std::vector<double>> rows;
  while (rows.size() < k) {
    auto v = random_direction(rng, dim);
    for (const auto& r : rows) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dot += v[j] * r[j];
      for (std::size_t j = 0; j < dim; ++j) v[j] -= dot * r[j];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (double& x : v) x /= norm;
    rows.push_back(std::move(v));
  }
  return rows;
}

std::vector<double> gaussian_around(Rng& rng, const std::vector<double>& mean) {
  std::vector<double> x(mean.size());
  for (std::size_t k = 0; k < mean.size(); ++k) x[k] = mean[k] + rng.normal();
  return x;
}

std::size_t binomial(Rng& rng, std::size_t n, double p) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) k += rng.uniform() < p ? 1 : 0;
  return k;
}

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

struct Clusters {
  std::vector<double> mean[2];     // [0] class -1, [1] class +1
  std::vector<double> shifted[2];  // support-side means
};

}  // namespace

void SynthConfig::validate() const {
  if (dim == 0) throw InvalidConfigError("dim must be positive");
  if (signal_dim > dim) throw InvalidConfigError("signal_dim must not exceed dim");
  if (task_count() == 0) throw InvalidConfigError("at least one task is required");
  if (!(separation > 0.0)) throw InvalidConfigError("separation must be positive");
  if (!(bias >= 0.0 && bias <= 1.0)) throw InvalidConfigError("bias must lie in [0, 1]");
  if (!(prevalence > 0.0 && prevalence < 1.0)) throw InvalidConfigError("prevalence must lie in (0, 1)");
  if (min_per_class == 0) throw InvalidConfigError("min_per_class must be positive");
  if (support_candidates < 2 * min_per_class || query_candidates < 2 * min_per_class) {
    throw InvalidConfigError("candidate pools must hold min_per_class records of each class");
  }
}

SynthSuite synth_tasks(const SynthConfig& config, Rng& rng) {
  config.validate();
  const std::size_t n_tasks = config.task_count();
  const std::size_t k_dim = config.effective_signal_dim();
  const auto basis = orthonormal_basis(rng, config.dim, k_dim);
  auto embed = [&](const std::vector<double>& z, double length) {
    std::vector<double> x(config.dim, 0.0);
    for (std::size_t a = 0; a < k_dim; ++a) {
      for (std::size_t j = 0; j < config.dim; ++j) x[j] += length * z[a] * basis[a][j];
    }
    return x;
  };
  std::vector<Clusters> clusters(n_tasks);
  for (auto& c : clusters) {
    for (int k = 0; k < 2; ++k) {
      c.mean[k] = embed(random_direction(rng, k_dim), config.separation);
      const auto shift = embed(random_direction(rng, k_dim), config.bias * config.separation);
      c.shifted[k] = c.mean[k];
      for (std::size_t j = 0; j < config.dim; ++j) c.shifted[k][j] += shift[j];
    }
  }

  auto draw_labels = [&](std::size_t n) {
    const std::size_t lo = config.min_per_class;
    const std::size_t pos = std::clamp(binomial(rng, n, config.prevalence), lo, n - lo);
    std::vector<int> labels(n, -1);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(pos), 1);
    rng.shuffle(labels);
    return labels;
  };

  SynthSuite suite;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    Task task;
    if (t < config.train_tasks) {
      task.task_id = numbered("train-", t, 3);
    } else if (t < config.train_tasks + config.valid_tasks) {
      task.task_id = numbered("valid-", t - config.train_tasks, 3);
    } else {
      task.task_id = numbered("test-", t - config.train_tasks - config.valid_tasks, 3);
    }
    const auto& c = clusters[t];
    const auto support_labels = draw_labels(config.support_candidates);
    for (std::size_t i = 0; i < support_labels.size(); ++i) {
      MoleculeRecord r;
      r.id = numbered((task.task_id + "-s").c_str(), i, 3);
      r.label = support_labels[i];
      r.role = PoolRole::kSupport;
      r.features = gaussian_around(rng, c.shifted[support_labels[i] == 1 ? 1 : 0]);
      task.records.push_back(std::move(r));
    }
    const auto query_labels = draw_labels(config.query_candidates);
    for (std::size_t i = 0; i < query_labels.size(); ++i) {
      MoleculeRecord r;
      r.id = numbered((task.task_id + "-q").c_str(), i, 3);
      r.label = query_labels[i];
      r.role = PoolRole::kQuery;
      r.features = gaussian_around(rng, c.mean[query_labels[i] == 1 ? 1 : 0]);
      task.records.push_back(std::move(r));
    }
    if (t < config.train_tasks) {
      suite.train.push_back(std::move(task));
    } else if (t < config.train_tasks + config.valid_tasks) {
      suite.valid.push_back(std::move(task));
    } else {
      suite.test.push_back(std::move(task));
    }
  }

  suite.reference.reserve(config.reference_pool);
  for (std::size_t i = 0; i < config.reference_pool; ++i) {
    const auto t = static_cast<std::size_t>(rng.below(n_tasks));
    const int k = rng.uniform() < config.prevalence ? 1 : 0;
    MoleculeRecord r;
    r.id = numbered("ref-", i, 5);
    r.features = gaussian_around(rng, clusters[t].mean[k]);
    suite.reference.push_back(std::move(r));
  }
  return suite;
}

}  // namespace cra::data
