// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/metrics.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cra/text.h"
#include "json.hpp"

namespace cra::metrics {
namespace {

const char* kind_name(MetricError::Kind k) {
  switch (k) {
    case MetricError::Kind::kSingleClass: return "SingleClass";
    case MetricError::Kind::kNoPositives: return "NoPositives";
    case MetricError::Kind::kRaggedInput: return "RaggedInput";
    case MetricError::Kind::kBadInput: return "BadInput";
  }
  return "?";
}

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw MetricError(MetricError::Kind::kBadInput,
                      std::to_string(scores.size()) + " scores for " +
                          std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y != 1 && y != -1) {
      throw MetricError(MetricError::Kind::kBadInput, "label " + std::to_string(y));
    }
  }
  for (double s : scores) {
    if (std::isnan(s)) throw MetricError(MetricError::Kind::kBadInput, "NaN score");
  }
}

nlohmann::ordered_json stat_json(const Stat& s) { return {{"mean", s.mean}, {"stderr", s.se}}; }

}  // namespace

MetricError::MetricError(Kind kind, const std::string& detail)
    : std::invalid_argument(std::string(kind_name(kind)) + ": " + detail), kind_(kind) {}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos_rank_sum += mid_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw MetricError(MetricError::Kind::kSingleClass, "AUROC needs both classes");
  }
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double auc_pr(std::span<const double> scores, std::span<const int> labels,
              std::span<const std::string> ids) {
  check_inputs(scores, labels);
  if (!ids.empty() && ids.size() != scores.size()) {
    throw MetricError(MetricError::Kind::kBadInput, "ids do not align with scores");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (!ids.empty() && ids[a] != ids[b]) return ids[a] < ids[b];
    return a < b;
  });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  if (hits == 0) throw MetricError(MetricError::Kind::kNoPositives, "AUC-PR needs a positive");
  return sum / static_cast<double>(hits);
}

double prevalence(std::span<const int> labels) {
  if (labels.empty()) throw MetricError(MetricError::Kind::kBadInput, "empty label set");
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  return static_cast<double>(pos) / static_cast<double>(labels.size());
}

std::size_t tied_scores(std::span<const double> scores) {
  std::vector<double> s(scores.begin(), scores.end());
  std::sort(s.begin(), s.end());
  std::size_t tied = 0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    if (j - i > 1) tied += j - i;
    i = j;
  }
  return tied;
}

EpisodeMetrics score_episode(std::span<const double> scores, std::span<const int> labels,
                             std::span<const std::string> ids) {
  EpisodeMetrics m;
  m.n_query = scores.size();
  m.auroc = auroc(scores, labels);
  m.auc_pr = auc_pr(scores, labels, ids);
  m.prevalence = prevalence(labels);
  m.delta_auc_pr = m.auc_pr - m.prevalence;
  m.ties = tied_scores(scores);
  return m;
}

Stat mean_stderr(std::span<const double> values) {
  Stat s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

EvalReport aggregate(std::span<const EpisodeMetrics> episodes, std::size_t reruns,
                     std::size_t draws) {
  if (reruns == 0 || draws == 0) {
    throw MetricError(MetricError::Kind::kRaggedInput, "reruns and draws must be >= 1");
  }
  EvalReport report;
  report.reruns = reruns;
  report.draws = draws;
  std::map<std::string, std::size_t> index;
  for (const auto& e : episodes) {
    auto [it, fresh] = index.emplace(e.task_id, report.tasks.size());
    if (fresh) report.tasks.push_back(TaskSummary{e.task_id});
    TaskSummary& t = report.tasks[it->second];
    ++t.episodes;
    t.auroc += e.auroc;
    t.auc_pr += e.auc_pr;
    t.delta_auc_pr += e.delta_auc_pr;
    t.prevalence += e.prevalence;
    t.ties += e.ties;
  }
  std::vector<double> au, ap, dap, prev;
  for (auto& t : report.tasks) {
    if (t.episodes != reruns * draws) {
      throw MetricError(MetricError::Kind::kRaggedInput,
                        "task '" + t.task_id + "' has " + std::to_string(t.episodes) +
                            " episodes, expected " + std::to_string(reruns * draws));
    }
    const double n = static_cast<double>(t.episodes);
    t.auroc /= n;
    t.auc_pr /= n;
    t.delta_auc_pr /= n;
    t.prevalence /= n;
    report.ties += t.ties;
    au.push_back(t.auroc);
    ap.push_back(t.auc_pr);
    dap.push_back(t.delta_auc_pr);
    prev.push_back(t.prevalence);
  }
  report.auroc = mean_stderr(au);
  report.auc_pr = mean_stderr(ap);
  report.delta_auc_pr = mean_stderr(dap);
  report.prevalence = mean_stderr(prev);
  return report;
}

std::string report_csv(const EvalReport& r) {
  std::string out = "task_id,episodes,auroc,auc_pr,delta_auc_pr,prevalence,tied_scores\n";
  for (const auto& t : r.tasks) {
    out += csv_field(t.task_id) + "," + std::to_string(t.episodes) + "," +
           format_double(t.auroc) + "," + format_double(t.auc_pr) + "," +
           format_double(t.delta_auc_pr) + "," + format_double(t.prevalence) + "," +
           std::to_string(t.ties) + "\n";
  }
  return out;
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["support_size"] = r.support_size;
  j["reruns"] = r.reruns;
  j["draws"] = r.draws;
  j["tasks"] = r.tasks.size();
  j["auroc"] = stat_json(r.auroc);
  j["auc_pr"] = stat_json(r.auc_pr);
  j["delta_auc_pr"] = stat_json(r.delta_auc_pr);
  j["prevalence"] = stat_json(r.prevalence);
  j["tied_scores"] = r.ties;
  return j.dump(2) + "\n";
}

std::string episodes_csv(std::span<const EpisodeMetrics> episodes) {
  std::string out = "task_id,rerun,draw,n_query,auroc,auc_pr,delta_auc_pr,prevalence,tied_scores\n";
  for (const auto& e : episodes) {
    out += csv_field(e.task_id) + "," + std::to_string(e.rerun) + "," + std::to_string(e.draw) +
           "," + std::to_string(e.n_query) + "," + format_double(e.auroc) + "," +
           format_double(e.auc_pr) + "," + format_double(e.delta_auc_pr) + "," +
           format_double(e.prevalence) + "," + std::to_string(e.ties) + "\n";
  }
  return out;
}

Pca pca_2d(const ad::Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t h = x.cols();
  if (n < 2 || h == 0) {
    throw MetricError(MetricError::Kind::kBadInput, "pca_2d needs at least 2 rows");
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> xm(x.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(h));
  Eigen::RowVectorXd mu = xm.colwise().mean();
  RowMat centered = xm.rowwise() - mu;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  Pca out;
  out.coords = ad::Matrix(n, 2);
  out.components = ad::Matrix(2, h);
  out.mean = ad::Matrix(1, h);
  for (std::size_t c = 0; c < h; ++c) out.mean(0, c) = mu(static_cast<Eigen::Index>(c));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const double top = evals(evals.size() - 1);
  const double tol = 1e-12 * std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  if (!(top > tol)) {
    out.degenerate = true;
    return out;
  }
  const std::size_t k = std::min<std::size_t>(2, h);
  for (std::size_t p = 0; p < k; ++p) {
    const Eigen::Index col = evals.size() - 1 - static_cast<Eigen::Index>(p);
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    out.variance[p] = std::max(0.0, evals(col));
    for (std::size_t c = 0; c < h; ++c) out.components(p, c) = v(static_cast<Eigen::Index>(c));
    Eigen::VectorXd proj = centered * v;
    for (std::size_t r = 0; r < n; ++r) out.coords(r, p) = proj(static_cast<Eigen::Index>(r));
  }
  return out;
}

}  // namespace cra::metrics
