// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/train.h"

#include <cmath>
#include <sstream>

#include "cra/adam.h"
#include "cra/metrics.h"
#include "cra/ops.h"
#include "cra/rng.h"
#include "cra/text.h"

namespace cra::train {
namespace {

std::vector<std::string> query_ids(const data::Episode& e) {
  std::vector<std::string> ids;
  ids.reserve(e.query.size());
  for (const auto* r : e.query) ids.push_back(r->id);
  return ids;
}

std::string describe_nonfinite(const model::ModelConfig& config, const model::Params& params,
                               std::size_t episode, const std::string& task, double loss) {
  std::ostringstream os;
  os << "loss " << loss << " at episode " << episode << " (task '" << task << "', variant "
     << model::to_string(config.variant) << ")";
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& m = params.value(i);
    for (double v : m.values()) {
      if (!std::isfinite(v)) {
        os << "; parameter '" << params.name(i) << "' is not finite";
        break;
      }
    }
  }
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("TrainConfig: " + m); };
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
  if (max_episodes == 0) fail("max_episodes must be > 0");
  if (validation_interval == 0) fail("validation_interval must be > 0");
  if (patience == 0) fail("patience must be > 0");
  if (support_size < 2) fail("support_size must be >= 2");
  if (query_size == 0) fail("query_size must be > 0");
  if (!(clip_norm > 0.0)) fail("clip_norm must be > 0");
  if (validation_draws == 0) fail("validation_draws must be > 0");
}

std::vector<data::Episode> validation_episodes(std::span<const data::Task> valid,
                                               std::span<const data::MoleculeRecord> pool,
                                               const model::ModelConfig& config,
                                               const TrainConfig& tc) {
  std::vector<data::Episode> out;
  const bool with_ref = model::uses_reference(config.variant);
  for (const auto& task : valid) {
    for (std::size_t k = 0; k < tc.validation_draws; ++k) {
      Rng rng(derive_seed(derive_seed(config.seed, "validation", task.task_id), "draw", k));
      data::Episode e = data::sample_episode(task, rng, tc.support_size, data::kAllRemaining,
                                             tc.sampling);
      if (with_ref) e.reference = data::sample_reference(pool, config.reference_size, rng);
      out.push_back(std::move(e));
    }
  }
  return out;
}

double validation_score(const model::Model& model, std::span<const data::Episode> episodes) {
  if (episodes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : episodes) {
    const auto probs = model::predict(model, e);
    const auto labels = e.query_labels();
    sum += metrics::delta_auc_pr(probs, labels, query_ids(e));
  }
  return sum / static_cast<double>(episodes.size());
}

TrainResult train(std::span<const data::Task> tasks, std::span<const data::Task> valid,
                  std::span<const data::MoleculeRecord> pool, const model::ModelConfig& config,
                  const TrainConfig& tc, const ProgressFn& progress) {
  config.validate();
  tc.validate();
  if (tasks.empty()) throw std::invalid_argument("train: no training tasks");
  const bool with_ref = model::uses_reference(config.variant);
  if (with_ref && pool.size() < config.reference_size) {
    throw model::ModelError(model::ModelError::Kind::kEmptyReferencePool,
                            "reference pool has " + std::to_string(pool.size()) +
                                " molecules, need M = " + std::to_string(config.reference_size));
  }

  model::Model current{config, model::init_params(config)};
  TrainResult result;
  const auto val_episodes = validation_episodes(valid, pool, config, tc);
  result.has_validation = !val_episodes.empty();
  result.initial_validation = validation_score(current, val_episodes);
  result.best_validation = result.initial_validation;
  result.params = current.params;

  Rng rng(derive_seed(config.seed, "train"));
  ad::AdamState adam;
  const ad::AdamConfig adam_cfg{tc.learning_rate};
  std::size_t stale = 0;
  std::vector<ad::Matrix*> param_ptrs;
  for (auto& m : current.params.values()) param_ptrs.push_back(&m);

  for (std::size_t ep = 1; ep <= tc.max_episodes; ++ep) {
    const data::Task& task = tasks[rng.below(tasks.size())];
    data::Episode episode =
        data::sample_episode(task, rng, tc.support_size, tc.query_size, tc.sampling);
    if (with_ref) episode.reference = data::sample_reference(pool, config.reference_size, rng);

    ad::Tape tape;
    model::BoundParams bound = model::bind_params(tape, config, current.params, true);
    model::EpisodeInput input = model::make_episode_input(episode, config);
    model::ForwardResult fwd = model::forward_episode(input, bound, config);
    ad::Var loss = model::bce_loss(fwd.probs, input.query_labels);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value)) {
      throw model::ModelError(model::ModelError::Kind::kNonFiniteLoss,
                              describe_nonfinite(config, current.params, ep, task.task_id,
                                                 loss_value));
    }
    tape.backward(loss);
    std::vector<ad::Matrix> grads;
    grads.reserve(bound.all.size());
    for (const auto& v : bound.all) grads.push_back(tape.grad(v));
    ad::clip_grad_norm(grads, tc.clip_norm);
    if (tc.learning_rate > 0.0) ad::adam_step(param_ptrs, grads, adam, adam_cfg);

    CurvePoint point{ep, loss_value};
    result.episodes_run = ep;
    if (result.has_validation && ep % tc.validation_interval == 0) {
      point.validated = true;
      point.validation_delta_auc_pr = validation_score(current, val_episodes);
      if (point.validation_delta_auc_pr > result.best_validation) {
        result.best_validation = point.validation_delta_auc_pr;
        result.best_episode = ep;
        result.params = current.params;
        stale = 0;
      } else {
        ++stale;
      }
    }
    result.curve.push_back(point);
    if (progress) progress(point);
    if (point.validated && stale >= tc.patience) {
      result.early_stopped = true;
      break;
    }
  }
  if (!result.has_validation) {
    result.params = current.params;
    result.best_episode = result.episodes_run;
  }
  return result;
}

std::string curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "episode,loss,validation_delta_auc_pr\n";
  for (const auto& p : curve) {
    out += std::to_string(p.episode) + "," + format_double(p.loss) + "," +
           (p.validated ? format_double(p.validation_delta_auc_pr) : std::string()) + "\n";
  }
  return out;
}

}  // namespace cra::train
