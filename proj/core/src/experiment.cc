// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/experiment.h"

#include "cra/evaluate.h"
#include "cra/rng.h"
#include "cra/text.h"
#include "cra/train.h"

namespace cra::exp {
namespace {

std::uint64_t eval_seed(std::uint64_t seed) { return derive_seed(seed, "evaluation"); }

}  // namespace

std::uint64_t replica_seed(std::uint64_t seed, std::size_t replica) {
  return derive_seed(seed, "replica", replica);
}

std::vector<model::Model> train_replicas(const Suite& suite, const model::ModelConfig& config,
                                         const train::TrainConfig& tc, std::size_t replicas,
                                         std::uint64_t seed, const LogFn& log) {
  std::vector<model::Model> out;
  for (std::size_t r = 0; r < replicas; ++r) {
    model::ModelConfig c = config;
    c.seed = replica_seed(seed, r);
    train::TrainResult res = train::train(suite.train, suite.valid, suite.pool, c, tc);
    if (log) {
      log(std::string(model::to_string(c.variant)) + " M=" + std::to_string(c.reference_size) +
          " replica " + std::to_string(r) + ": " + std::to_string(res.episodes_run) +
          " episodes, validation " + format_double(res.initial_validation) + " -> " +
          format_double(res.best_validation) + " (best at " + std::to_string(res.best_episode) +
          ")");
    }
    out.push_back({c, std::move(res.params)});
  }
  return out;
}

AblationResult run_ablation(const Suite& suite, const RunConfig& config, bool reference_sweep,
                            const LogFn& log) {
  AblationResult result;
  const std::uint64_t es = eval_seed(config.seed);
  for (model::Variant v : config.ablation.variants) {
    model::ModelConfig mc = config.model;
    mc.variant = v;
    VariantRow row{v, train_replicas(suite, mc, config.train, config.ablation.seeds, config.seed, log), {}};
    row.report = eval::evaluate(row.models, suite.test, suite.pool, config.eval, es);
    if (log) {
      log(std::string("variant ") + model::to_string(v) + ": delta AUC-PR " +
          format_double(row.report.delta_auc_pr.mean) + " +- " +
          format_double(row.report.delta_auc_pr.se));
    }
    result.variants.push_back(std::move(row));
  }
  if (!reference_sweep) return result;

  for (std::size_t m : config.ablation.reference_sweep) {
    SweepRow row;
    row.reference_size = m;
    if (m > suite.pool.size()) {
      row.skipped = true;
      row.reason = "pool has " + std::to_string(suite.pool.size()) + " molecules";
      result.sweep.push_back(std::move(row));
      continue;
    }
    std::vector<model::Model> models;
    for (const auto& vr : result.variants) {
      if (vr.variant == model::Variant::kFull && vr.models.front().config.reference_size == m) {
        models = vr.models;
      }
    }
    if (models.empty()) {
      model::ModelConfig mc = config.model;
      mc.variant = model::Variant::kFull;
      mc.reference_size = m;
      models = train_replicas(suite, mc, config.train, config.ablation.seeds, config.seed, log);
    }
    eval::EvalConfig ec = config.eval;
    ec.reference_size = m;
    row.report = eval::evaluate(models, suite.test, suite.pool, ec, es);
    if (log) {
      log("reference size " + std::to_string(m) + ": delta AUC-PR " +
          format_double(row.report.delta_auc_pr.mean));
    }
    result.sweep.push_back(std::move(row));
  }
  return result;
}

std::string ablation_csv(const AblationResult& r) {
  std::string out = "variant,auroc_mean,auroc_stderr,delta_auc_pr_mean,delta_auc_pr_stderr\n";
  for (const auto& v : r.variants) {
    out += std::string(model::to_string(v.variant)) + "," + format_double(v.report.auroc.mean) +
           "," + format_double(v.report.auroc.se) + "," +
           format_double(v.report.delta_auc_pr.mean) + "," +
           format_double(v.report.delta_auc_pr.se) + "\n";
  }
  return out;
}

std::string sweep_csv(const AblationResult& r) {
  std::string out =
      "reference_size,status,auroc_mean,auroc_stderr,delta_auc_pr_mean,delta_auc_pr_stderr\n";
  for (const auto& s : r.sweep) {
    out += std::to_string(s.reference_size) + ",";
    if (s.skipped) {
      out += "skipped,,,,\n";
      continue;
    }
    out += "ok," + format_double(s.report.auroc.mean) + "," + format_double(s.report.auroc.se) +
           "," + format_double(s.report.delta_auc_pr.mean) + "," +
           format_double(s.report.delta_auc_pr.se) + "\n";
  }
  return out;
}

}  // namespace cra::exp
