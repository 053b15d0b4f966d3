// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "cra/episodes.h"
#include "cra/records.h"
#include "cra/rng.h"
#include "cra/synth.h"

namespace cra::data {
namespace {

Task make_task(std::size_t pos, std::size_t neg) {
  Task t;
  t.task_id = "T";
  for (std::size_t i = 0; i < pos + neg; ++i) {
    MoleculeRecord r;
    r.id = "m" + std::to_string(i);
    r.features = {static_cast<double>(i)};
    r.label = i < pos ? 1 : -1;
    t.records.push_back(r);
  }
  return t;
}

TEST(ParseTasks, GroupsByTaskInFirstAppearanceOrder) {
  const std::string text =
      R"({"task_id":"B","id":"x","smiles":"CCO","label":1})" "\n"
      R"({"task_id":"A","id":"y","features":[1.0,2.0],"label":0})" "\n"
      "\n"
      R"({"task_id":"B","id":"z","smiles":"CC","label":-1,"pool":"support"})" "\n";
  const auto tasks = parse_tasks(text);
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks[0].task_id, "B");
  EXPECT_EQ(tasks[0].records.size(), 2u);
  EXPECT_EQ(tasks[1].records[0].label, -1);  // 0 is an alias
  EXPECT_EQ(tasks[1].records[0].features, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(tasks[0].records[1].role, PoolRole::kSupport);
}

TEST(ParseTasks, Errors) {
  EXPECT_THROW(parse_tasks(R"({"task_id":"A","id":"x","smiles":"C","label":2})"), TaskFileError);
  EXPECT_THROW(parse_tasks(R"({"task_id":"A","id":"x","smiles":"C"})"), TaskFileError);
  EXPECT_THROW(parse_tasks(R"({"task_id":"A","id":"x","smiles":"C","label":1,"colour":3})"), TaskFileError);
  EXPECT_THROW(parse_tasks("{not json"), TaskFileError);
  EXPECT_THROW(parse_tasks(R"({"task_id":"A","id":"x","smiles":"C","label":1})" "\n"
                           R"({"task_id":"A","id":"x","smiles":"CC","label":-1})"),
               DuplicateRecordIdError);
  try {
    parse_tasks("\n" R"({"id":"x"})", "f.jsonl");
    FAIL();
  } catch (const TaskFileError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseTasks, WarnsOnSingleClass) {
  std::vector<std::string> warnings;
  parse_tasks(R"({"task_id":"A","id":"x","smiles":"C","label":1})", "<m>", &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("single class"), std::string::npos);
}

TEST(ReferencePool, FromTasksStripsLabelsAndDeduplicates) {
  // Raw-feature records are distinct per task; SMILES records dedupe.
  auto tasks = std::vector<Task>{make_task(2, 2), make_task(1, 1)};
  tasks[1].task_id = "U";
  const auto pool = pool_from_tasks(tasks);
  EXPECT_EQ(pool.size(), 6u);
  for (const auto& r : pool) EXPECT_FALSE(r.label.has_value());
  EXPECT_EQ(pool[4].id, "U/m0");
  tasks[0].records[0].smiles = tasks[1].records[0].smiles = "CCO";
  EXPECT_EQ(pool_from_tasks(tasks).size(), 5u);
  EXPECT_THROW(parse_reference_pool(R"({"id":"a","smiles":"C","label":1})"), TaskFileError);
}

TEST(TaskFile, WriteLoadRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "cra_tasks_rt.jsonl").string();
  auto t = make_task(2, 3);
  t.records[1].role = PoolRole::kQuery;
  write_tasks(path, std::vector<Task>{t});
  const auto back = load_tasks(path);
  ASSERT_EQ(back.size(), 1u);
  ASSERT_EQ(back[0].records.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back[0].records[i].id, t.records[i].id);
    EXPECT_EQ(back[0].records[i].label, t.records[i].label);
    EXPECT_EQ(back[0].records[i].features, t.records[i].features);
    EXPECT_EQ(back[0].records[i].role, t.records[i].role);
  }
  std::filesystem::remove(path);
}

TEST(Stratified, RoundsAndClamps) {
  EXPECT_EQ(stratified_positive_count(0.3, 16), 5u);
  EXPECT_EQ(stratified_positive_count(0.01, 16), 1u);
  EXPECT_EQ(stratified_positive_count(0.99, 16), 15u);
  EXPECT_EQ(stratified_positive_count(0.5, 2), 1u);
  EXPECT_THROW(stratified_positive_count(0.5, 1), std::invalid_argument);
}

TEST(SampleEpisode, DisjointAndClassCounts) {
  const auto task = make_task(12, 28);
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ep = sample_episode(task, rng, 10, 8, SamplingMode::kStratified);
    ASSERT_EQ(ep.support.size(), 10u);
    ASSERT_EQ(ep.query.size(), 8u);
    std::set<const MoleculeRecord*> seen;
    for (const auto* r : ep.support) seen.insert(r);
    for (const auto* r : ep.query) EXPECT_TRUE(seen.insert(r).second);
    const auto y = ep.support_labels();
    EXPECT_EQ(std::count(y.begin(), y.end(), 1), 3);  // round(0.3 * 10)
  }
  const auto ep = sample_episode(task, rng, 4, 8, SamplingMode::kBalanced);
  const auto y = ep.support_labels();
  EXPECT_EQ(std::count(y.begin(), y.end(), 1), 2);
}

TEST(SampleEpisode, QueryTakesRemainderWhenShort) {
  const auto task = make_task(3, 3);
  Rng rng(2);
  const auto ep = sample_episode(task, rng, 2, kAllRemaining, SamplingMode::kBalanced);
  EXPECT_EQ(ep.query.size(), 4u);
}

TEST(SampleEpisode, Errors) {
  Rng rng(3);
  try {
    sample_episode(make_task(3, 0), rng, 2, 1, SamplingMode::kBalanced);
    FAIL();
  } catch (const EpisodeError& e) {
    EXPECT_EQ(e.kind(), EpisodeError::Kind::kSingleClassTask);
  }
  try {
    sample_episode(make_task(1, 8), rng, 4, 1, SamplingMode::kBalanced);
    FAIL();
  } catch (const EpisodeError& e) {
    EXPECT_EQ(e.kind(), EpisodeError::Kind::kTaskTooSmall);
  }
  EXPECT_THROW(sample_episode(make_task(1, 1), rng, 2, 1, SamplingMode::kBalanced), EpisodeError);
}

TEST(SampleEpisode, HonoursPoolRoles) {
  auto task = make_task(10, 10);
  for (std::size_t i = 0; i < task.records.size(); ++i) task.records[i].role = i % 2 ? PoolRole::kQuery : PoolRole::kSupport;
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ep = sample_episode(task, rng, 4, kAllRemaining, SamplingMode::kBalanced);
    for (const auto* r : ep.support) EXPECT_EQ(r->role, PoolRole::kSupport);
    for (const auto* r : ep.query) EXPECT_EQ(r->role, PoolRole::kQuery);
    EXPECT_EQ(ep.query.size(), 10u);
  }
}

TEST(SampleEpisode, DeterministicGivenSeed) {
  const auto task = make_task(10, 20);
  Rng a(9), b(9);
  const auto x = sample_episode(task, a, 6, 6, SamplingMode::kStratified);
  const auto y = sample_episode(task, b, 6, 6, SamplingMode::kStratified);
  EXPECT_EQ(x.support, y.support);
  EXPECT_EQ(x.query, y.query);
}

TEST(SampleReference, WithoutReplacement) {
  std::vector<MoleculeRecord> pool(50);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].id = std::to_string(i);
  Rng rng(5);
  const auto ref = sample_reference(pool, 50, rng);
  EXPECT_EQ(std::set<const MoleculeRecord*>(ref.begin(), ref.end()).size(), 50u);
  EXPECT_EQ(sample_reference(pool, 0, rng).size(), 0u);
  try {
    sample_reference(pool, 51, rng);
    FAIL();
  } catch (const EpisodeError& e) {
    EXPECT_EQ(e.kind(), EpisodeError::Kind::kPoolTooSmall);
  }
}

TEST(Synth, ShapesRolesAndDeterminism) {
  SynthConfig cfg;
  cfg.reference_pool = 256;
  Rng rng(7);
  const auto suite = synth_tasks(cfg, rng);
  EXPECT_EQ(suite.train.size(), 24u);
  EXPECT_EQ(suite.valid.size(), 4u);
  EXPECT_EQ(suite.test.size(), 12u);
  EXPECT_EQ(suite.reference.size(), 256u);
  std::set<std::string> ids;
  for (const auto* set : {&suite.train, &suite.valid, &suite.test}) {
    for (const auto& t : *set) {
      EXPECT_TRUE(ids.insert(t.task_id).second);
      EXPECT_EQ(t.records.size(), cfg.support_candidates + cfg.query_candidates);
      std::size_t support_pos = 0, query_pos = 0, support = 0;
      for (const auto& r : t.records) {
        EXPECT_EQ(r.features.size(), cfg.dim);
        ASSERT_NE(r.role, PoolRole::kAny);
        if (r.role == PoolRole::kSupport) {
          ++support;
          support_pos += *r.label == 1;
        } else {
          query_pos += *r.label == 1;
        }
      }
      EXPECT_EQ(support, cfg.support_candidates);
      EXPECT_GE(support_pos, cfg.min_per_class);
      EXPECT_GE(query_pos, cfg.min_per_class);
      EXPECT_LE(support_pos, cfg.support_candidates - cfg.min_per_class);
    }
  }
  for (const auto& r : suite.reference) EXPECT_FALSE(r.label.has_value());
  Rng again(7);
  const auto twin = synth_tasks(cfg, again);
  EXPECT_EQ(twin.test[3].records[5].features, suite.test[3].records[5].features);
}

TEST(Synth, PrevalenceNearTarget) {
  SynthConfig cfg;
  cfg.reference_pool = 16;
  Rng rng(8);
  const auto suite = synth_tasks(cfg, rng);
  double pos = 0.0, total = 0.0;
  for (const auto& t : suite.train) {
    pos += static_cast<double>(t.positives());
    total += static_cast<double>(t.records.size());
  }
  EXPECT_NEAR(pos / total, cfg.prevalence, 0.05);
}

TEST(Synth, BiasShiftsSupportClusters) {
  // Support and query class means differ by about bias * separation.
  SynthConfig cfg;
  cfg.bias = 1.0;
  cfg.support_candidates = cfg.query_candidates = 400;
  cfg.reference_pool = 16;
  Rng rng(9);
  const auto suite = synth_tasks(cfg, rng);
  const auto& t = suite.test[0];
  std::vector<double> ms(cfg.dim, 0.0), mq(cfg.dim, 0.0);
  double ns = 0, nq = 0;
  for (const auto& r : t.records) {
    if (*r.label != -1) continue;
    auto& m = r.role == PoolRole::kSupport ? ms : mq;
    (r.role == PoolRole::kSupport ? ns : nq) += 1;
    for (std::size_t c = 0; c < cfg.dim; ++c) m[c] += r.features[c];
  }
  double d2 = 0.0;
  for (std::size_t c = 0; c < cfg.dim; ++c) d2 += std::pow(ms[c] / ns - mq[c] / nq, 2);
  EXPECT_NEAR(std::sqrt(d2), cfg.bias * cfg.separation, 0.6);
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig cfg;
  cfg.prevalence = 1.0;
  Rng rng(1);
  EXPECT_THROW(synth_tasks(cfg, rng), InvalidConfigError);
  cfg = SynthConfig{};
  cfg.signal_dim = 64;
  EXPECT_THROW(synth_tasks(cfg, rng), InvalidConfigError);
}

}  // namespace
}  // namespace cra::data
