// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "cra/checkpoint.h"
#include "cra/evaluate.h"
#include "cra/experiment.h"
#include "cra/metrics.h"
#include "cra/rng.h"
#include "cra/synth.h"
#include "cra/train.h"
#include "fixtures.h"

namespace cra {
namespace {

const data::SynthSuite& suite() {
  static const data::SynthSuite s = [] {
    data::SynthConfig c;
    c.dim = 8;
    c.train_tasks = 4;
    c.valid_tasks = 2;
    c.test_tasks = 3;
    c.support_candidates = c.query_candidates = 24;
    c.reference_pool = 64;
    Rng rng(5);
    return data::synth_tasks(c, rng);
  }();
  return s;
}

model::ModelConfig config(model::Variant v) {
  auto c = testing::small_config(v, 8, 8, 2);
  c.reference_size = 16;
  return c;
}

train::TrainConfig short_train() {
  train::TrainConfig t;
  t.max_episodes = 30;
  t.validation_interval = 10;
  t.support_size = 6;
  t.query_size = 8;
  return t;
}

TEST(Train, ZeroLearningRateLeavesParameters) {
  const auto cfg = config(model::Variant::kFull);
  auto tc = short_train();
  tc.learning_rate = 0.0;
  const auto r = train::train(suite().train, {}, suite().reference, cfg, tc);
  EXPECT_EQ(r.params, model::init_params(cfg));
  EXPECT_EQ(r.episodes_run, 30u);
}

TEST(Train, DeterministicAndMoves) {
  const auto cfg = config(model::Variant::kFull);
  const auto a = train::train(suite().train, suite().valid, suite().reference, cfg, short_train());
  const auto b = train::train(suite().train, suite().valid, suite().reference, cfg, short_train());
  EXPECT_EQ(checkpoint_bytes({cfg, a.params}), checkpoint_bytes({cfg, b.params}));
  EXPECT_EQ(train::curve_csv(a.curve), train::curve_csv(b.curve));
  EXPECT_TRUE(a.has_validation);
  EXPECT_TRUE(a.params.all_finite());
  // Best parameters are the initial ones only when no check improved.
  if (a.best_episode > 0) {
    EXPECT_NE(a.params, model::init_params(cfg));
  }
  EXPECT_GE(a.best_validation, a.initial_validation);
}

TEST(Train, CurveRecordsValidationAtInterval) {
  const auto cfg = config(model::Variant::kEncoderOnly);
  const auto r = train::train(suite().train, suite().valid, {}, cfg, short_train());
  std::size_t checks = 0;
  for (const auto& p : r.curve) checks += p.validated;
  EXPECT_GE(checks, 3u);
  EXPECT_EQ(train::curve_csv(r.curve).rfind("episode,", 0), 0u);
}

TEST(Train, EarlyStopsWithPatience) {
  const auto cfg = config(model::Variant::kEncoderOnly);
  auto tc = short_train();
  tc.max_episodes = 2000;
  tc.validation_interval = 5;
  tc.patience = 1;
  tc.learning_rate = 0.3;  // large steps make a non-improving check likely
  const auto r = train::train(suite().train, suite().valid, {}, cfg, tc);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_LT(r.episodes_run, 2000u);
}

TEST(Train, FullVariantNeedsPool) {
  const auto cfg = config(model::Variant::kFull);
  EXPECT_ANY_THROW(train::train(suite().train, {}, {}, cfg, short_train()));
}

eval::EvalConfig eval_config(std::size_t workers) {
  eval::EvalConfig e;
  e.support_size = 6;
  e.reruns = 2;
  e.draws = 3;
  e.workers = workers;
  return e;
}

TEST(Eval, DeterministicAndIndependentOfWorkers) {
  const auto cfg = config(model::Variant::kFull);
  const std::vector<model::Model> models{{cfg, model::init_params(cfg)}};
  std::vector<metrics::EpisodeMetrics> e1, e4;
  const auto r1 = eval::evaluate(models, suite().test, suite().reference, eval_config(1), 3, &e1);
  const auto r4 = eval::evaluate(models, suite().test, suite().reference, eval_config(4), 3, &e4);
  EXPECT_EQ(metrics::report_csv(r1), metrics::report_csv(r4));
  EXPECT_EQ(metrics::episodes_csv(e1), metrics::episodes_csv(e4));
  EXPECT_EQ(e1.size(), 3u * 2u * 3u);
  EXPECT_EQ(r1.tasks.size(), 3u);
  const auto other = eval::evaluate(models, suite().test, suite().reference, eval_config(1), 4);
  EXPECT_NE(metrics::report_csv(other), metrics::report_csv(r1));
}

TEST(Eval, EpisodesDoNotDependOnModel) {
  const auto& task = suite().test[0];
  const auto a = eval::eval_episode(task, suite().reference, 6, data::kAllRemaining,
                                    data::SamplingMode::kStratified, 16, 8, 1, 2);
  const auto b = eval::eval_episode(task, suite().reference, 6, data::kAllRemaining,
                                    data::SamplingMode::kStratified, 16, 8, 1, 2);
  const auto c = eval::eval_episode(task, suite().reference, 6, data::kAllRemaining,
                                    data::SamplingMode::kStratified, 16, 8, 1, 3);
  EXPECT_EQ(a.support, b.support);
  EXPECT_EQ(a.reference, b.reference);
  EXPECT_NE(a.support, c.support);
  EXPECT_EQ(a.reference.size(), 16u);
}

TEST(Eval, SweepProducesOneReportPerSize) {
  const auto cfg = config(model::Variant::kAnchor);
  const std::vector<model::Model> models{{cfg, model::init_params(cfg)}};
  auto e = eval_config(1);
  e.reruns = 1;
  e.draws = 1;
  e.support_sweep = {2, 4, 8};
  const auto reports = eval::evaluate_sweep(models, suite().test, suite().reference, e, 1);
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[2].support_size, 8u);
}

TEST(Experiment, ReplicaSeedsDifferAndVariantsShareEncoderInit) {
  EXPECT_NE(exp::replica_seed(1, 0), exp::replica_seed(1, 1));
  EXPECT_EQ(exp::replica_seed(1, 2), exp::replica_seed(1, 2));
  auto a = config(model::Variant::kEncoderOnly);
  auto b = config(model::Variant::kFull);
  a.seed = b.seed = exp::replica_seed(1, 0);
  EXPECT_EQ(model::init_params(a).at("encoder.w0"), model::init_params(b).at("encoder.w0"));
}

TEST(Experiment, AblationRowsAndSkippedSweep) {
  RunConfig rc;
  rc.seed = 2;
  rc.model = config(model::Variant::kFull);
  rc.train = short_train();
  rc.train.max_episodes = 10;
  rc.eval = eval_config(1);
  rc.eval.reruns = 1;
  rc.eval.draws = 1;
  rc.ablation.seeds = 1;
  rc.ablation.reference_sweep = {16, 1000};
  const exp::Suite s{suite().train, suite().valid, suite().test, suite().reference};
  const auto result = exp::run_ablation(s, rc, true);
  ASSERT_EQ(result.variants.size(), 4u);
  ASSERT_EQ(result.sweep.size(), 2u);
  EXPECT_FALSE(result.sweep[0].skipped);
  EXPECT_TRUE(result.sweep[1].skipped);
  EXPECT_NE(exp::ablation_csv(result).find("encoder-only"), std::string::npos);
  EXPECT_NE(exp::sweep_csv(result).find("1000"), std::string::npos);
}

}  // namespace
}  // namespace cra
