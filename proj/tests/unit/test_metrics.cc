// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "cra/metrics.h"
#include "cra/rng.h"
#include "oracles.h"

namespace cra::metrics {
namespace {

using testing::brute_ap;
using testing::brute_auroc;

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<std::string> ids;
};

Instance random_instance(Rng& rng) {
  Instance in;
  const std::size_t n = 2 + rng.below(19);
  for (std::size_t i = 0; i < n; ++i) {
    // Coarse scores so ties are common.
    in.scores.push_back(static_cast<double>(rng.below(6)) / 5.0);
    in.labels.push_back(rng.uniform() < 0.4 ? 1 : -1);
    in.ids.push_back("id" + std::to_string(rng.below(1000)) + "_" + std::to_string(i));
  }
  in.labels[0] = 1;
  in.labels[1] = -1;
  return in;
}

TEST(Oracle, AurocAndApOnRandomInstances) {
  Rng rng(2026);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_instance(rng);
    EXPECT_NEAR(auroc(in.scores, in.labels), brute_auroc(in.scores, in.labels), 1e-9);
    EXPECT_NEAR(auc_pr(in.scores, in.labels, in.ids), brute_ap(in.scores, in.labels, in.ids), 1e-9);
  }
}

TEST(Auroc, MonotoneTransformInvariantExactly) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng);
    std::vector<double> t;
    for (double s : in.scores) t.push_back(std::exp(3.0 * s) - 10.0);
    EXPECT_EQ(auroc(t, in.labels), auroc(in.scores, in.labels));
  }
}

TEST(Auroc, Examples) {
  const std::vector<int> y{1, 1, -1, -1};
  EXPECT_EQ(auroc(std::vector<double>{0.9, 0.8, 0.3, 0.1}, y), 1.0);
  EXPECT_EQ(auroc(std::vector<double>{0.1, 0.3, 0.8, 0.9}, y), 0.0);
  EXPECT_EQ(auroc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y), 0.5);
  try {
    auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1});
    FAIL();
  } catch (const MetricError& e) {
    EXPECT_EQ(e.kind(), MetricError::Kind::kSingleClass);
  }
}

TEST(AucPr, ExamplesAndTieOrder) {
  const std::vector<int> y{1, -1, 1};
  // Ranking +, +, - gives 1; +, -, + gives (1 + 2/3) / 2.
  EXPECT_DOUBLE_EQ(auc_pr(std::vector<double>{0.9, 0.1, 0.8}, y), 1.0);
  EXPECT_DOUBLE_EQ(auc_pr(std::vector<double>{0.9, 0.5, 0.1}, y), (1.0 + 2.0 / 3.0) / 2.0);
  // All tied: order by id decides.
  const std::vector<double> flat{0.5, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(auc_pr(flat, y, std::vector<std::string>{"a", "b", "c"}), (1.0 + 2.0 / 3.0) / 2.0);
  EXPECT_DOUBLE_EQ(auc_pr(flat, y, std::vector<std::string>{"a", "z", "b"}), 1.0);
  try {
    auc_pr(flat, std::vector<int>{-1, -1, -1});
    FAIL();
  } catch (const MetricError& e) {
    EXPECT_EQ(e.kind(), MetricError::Kind::kNoPositives);
  }
}

TEST(Inputs, Rejected) {
  EXPECT_THROW(auroc(std::vector<double>{0.1}, std::vector<int>{1, -1}), MetricError);
  EXPECT_THROW(auroc(std::vector<double>{0.1, NAN}, std::vector<int>{1, -1}), MetricError);
  EXPECT_THROW(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 0}), MetricError);
}

TEST(Delta, SubtractsPrevalence) {
  const std::vector<double> s{0.9, 0.1, 0.8, 0.2};
  const std::vector<int> y{1, -1, 1, -1};
  EXPECT_DOUBLE_EQ(prevalence(y), 0.5);
  EXPECT_DOUBLE_EQ(delta_auc_pr(s, y), 0.5);
}

TEST(Ties, Counted) {
  EXPECT_EQ(tied_scores(std::vector<double>{1, 2, 2, 3, 3, 3}), 5u);
  EXPECT_EQ(tied_scores(std::vector<double>{1, 2, 3}), 0u);
}

TEST(Stat, SampleStandardError) {
  const auto s = mean_stderr(std::vector<double>{1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(mean_stderr(std::vector<double>{7.0}).se, 0.0);
}

TEST(Aggregate, TaskMeansThenAcrossTasks) {
  std::vector<EpisodeMetrics> eps;
  for (const char* t : {"B", "A"}) {
    for (std::size_t k = 0; k < 2; ++k) {
      EpisodeMetrics m;
      m.task_id = t;
      m.draw = k;
      m.auroc = std::string(t) == "A" ? 0.6 + 0.2 * static_cast<double>(k) : 1.0;
      m.delta_auc_pr = m.auroc - 0.5;
      eps.push_back(m);
    }
  }
  const auto r = aggregate(eps, 1, 2);
  ASSERT_EQ(r.tasks.size(), 2u);
  EXPECT_EQ(r.tasks[0].task_id, "B");
  EXPECT_DOUBLE_EQ(r.tasks[1].auroc, 0.7);
  EXPECT_DOUBLE_EQ(r.auroc.mean, 0.85);
  EXPECT_NEAR(r.auroc.se, 0.15, 1e-15);
  eps.pop_back();
  try {
    aggregate(eps, 1, 2);
    FAIL();
  } catch (const MetricError& e) {
    EXPECT_EQ(e.kind(), MetricError::Kind::kRaggedInput);
  }
}

TEST(Reports, CsvHeadersAndStableFormatting) {
  EpisodeMetrics m;
  m.task_id = "T,1";
  m.auroc = 0.1;
  const std::vector<EpisodeMetrics> eps{m};
  const auto r = aggregate(eps, 1, 1);
  const auto csv = report_csv(r);
  EXPECT_EQ(csv.rfind("task_id,episodes,auroc,auc_pr,delta_auc_pr,prevalence,tied_scores\n", 0), 0u);
  EXPECT_NE(csv.find("\"T,1\",1,0.1,"), std::string::npos);
  EXPECT_EQ(csv, report_csv(aggregate(eps, 1, 1)));
  EXPECT_NE(report_json(r).find("\"delta_auc_pr\""), std::string::npos);
  EXPECT_NE(episodes_csv(eps).find("T,1"), std::string::npos);
}

TEST(Pca, RecoversDominantAxes) {
  Rng rng(3);
  ad::Matrix x(200, 3);
  for (std::size_t i = 0; i < 200; ++i) {
    x(i, 0) = 0.1 * rng.normal();
    x(i, 1) = 5.0 * rng.normal() + 2.0;
    x(i, 2) = 1.0 * rng.normal();
  }
  const auto p = pca_2d(x);
  EXPECT_FALSE(p.degenerate);
  EXPECT_NEAR(std::abs(p.components(0, 1)), 1.0, 1e-2);
  EXPECT_NEAR(std::abs(p.components(1, 2)), 1.0, 1e-2);
  EXPECT_GT(p.components(0, 1), 0.0);  // sign convention
  EXPECT_GT(p.variance[0], p.variance[1]);
  double dot = 0.0, mean0 = 0.0;
  for (std::size_t c = 0; c < 3; ++c) dot += p.components(0, c) * p.components(1, c);
  EXPECT_NEAR(dot, 0.0, 1e-12);
  for (std::size_t i = 0; i < 200; ++i) mean0 += p.coords(i, 0);
  EXPECT_NEAR(mean0, 0.0, 1e-9);
  EXPECT_NEAR(p.mean(0, 1), 2.0, 1.0);
}

TEST(Pca, ConstantInputIsDegenerate) {
  const auto p = pca_2d(ad::Matrix(5, 4, 1.5));
  EXPECT_TRUE(p.degenerate);
  for (double v : p.coords.values()) EXPECT_EQ(v, 0.0);
}

}  // namespace
}  // namespace cra::metrics
