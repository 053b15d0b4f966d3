// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_METRICS_H_
#define CRA_METRICS_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cra/matrix.h"

namespace cra::metrics {

class MetricError : public std::invalid_argument {
 public:
  enum class Kind { kSingleClass, kNoPositives, kRaggedInput, kBadInput };
  MetricError(Kind kind, const std::string& detail);
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Labels are -1 / +1 throughout.

// Mann-Whitney statistic with mid-ranks, so tied pairs count 1/2.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Average precision. Equal scores are ordered by ascending id (by index
// when ids are omitted).
double auc_pr(std::span<const double> scores, std::span<const int> labels,
              std::span<const std::string> ids = {});

double prevalence(std::span<const int> labels);

inline double delta_auc_pr(std::span<const double> scores, std::span<const int> labels,
                           std::span<const std::string> ids = {}) {
  return auc_pr(scores, labels, ids) - prevalence(labels);
}

// Number of scores equal to some other score.
std::size_t tied_scores(std::span<const double> scores);

struct EpisodeMetrics {
  std::string task_id;
  std::size_t rerun = 0;
  std::size_t draw = 0;
  std::size_t n_query = 0;
  double auroc = 0.0;
  double auc_pr = 0.0;
  double delta_auc_pr = 0.0;
  double prevalence = 0.0;  // of the query set
  std::size_t ties = 0;
};

EpisodeMetrics score_episode(std::span<const double> scores, std::span<const int> labels,
                             std::span<const std::string> ids);

struct Stat {
  double mean = 0.0;
  double se = 0.0;  // sample std / sqrt(n); 0 when n < 2
};

Stat mean_stderr(std::span<const double> values);

struct TaskSummary {
  std::string task_id;
  std::size_t episodes = 0;
  double auroc = 0.0;
  double auc_pr = 0.0;
  double delta_auc_pr = 0.0;
  double prevalence = 0.0;
  std::size_t ties = 0;
};

struct EvalReport {
  std::size_t reruns = 0;
  std::size_t draws = 0;
  std::size_t support_size = 0;
  std::vector<TaskSummary> tasks;
  Stat auroc;
  Stat auc_pr;
  Stat delta_auc_pr;
  Stat prevalence;
  std::size_t ties = 0;
};

// Averages each task over its reruns x draws episodes (RaggedInput unless
// every task has exactly that many), then mean and standard error across
// tasks. Tasks keep first-appearance order.
EvalReport aggregate(std::span<const EpisodeMetrics> episodes, std::size_t reruns,
                     std::size_t draws);

std::string report_csv(const EvalReport& report);
std::string report_json(const EvalReport& report);
std::string episodes_csv(std::span<const EpisodeMetrics> episodes);

struct Pca {
  ad::Matrix coords;      // n x 2
  ad::Matrix components;  // 2 x h, orthonormal rows
  ad::Matrix mean;        // 1 x h
  double variance[2] = {0.0, 0.0};
  bool degenerate = false;
};

// Projection onto the top two covariance eigenvectors; each component's
// largest-magnitude entry is made positive. Zero variance yields zero
// coordinates and degenerate = true.
Pca pca_2d(const ad::Matrix& x);

}  // namespace cra::metrics

#endif  // CRA_METRICS_H_
