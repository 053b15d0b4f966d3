// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cra/checkpoint.h"
#include "cra/config.h"
#include "cra/episodes.h"
#include "cra/evaluate.h"
#include "cra/experiment.h"
#include "cra/featurize.h"
#include "cra/metrics.h"
#include "cra/model.h"
#include "cra/ops.h"
#include "cra/records.h"
#include "cra/rng.h"
#include "cra/smiles.h"
#include "cra/synth.h"
#include "cra/text.h"
#include "cra/train.h"
#include "json.hpp"

namespace cra::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kToolVersion = "0.1.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "RunConfig JSON; flags override its keys");
  app->add_option("--out", c.out, "Output directory (default: paths.out_dir)");
  app->add_option("--preset", c.preset, "Episode preset: moleculenet, fsmol or custom");
  app->add_option("--seed", c.seed, "Global seed (fallback: $CRA_SEED, then the config)");
  app->add_option("--workers", c.workers, "Evaluation threads (0 = all cores)");
}

std::uint64_t parse_seed(const std::string& text, const std::string& origin) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw UsageError(origin + ": not an unsigned integer: '" + text + "'");
  return v;
}

// Config file, then preset, then flags. The seed falls back to CRA_SEED
// only when --seed is absent.
RunConfig resolve_config(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (!c.preset.empty()) apply_preset(rc, c.preset);
  if (c.seed) {
    rc.seed = *c.seed;
  } else if (const char* env = std::getenv("CRA_SEED"); env != nullptr && *env != '\0') {
    rc.seed = parse_seed(env, "CRA_SEED");
  }
  rc.model.seed = rc.seed;
  if (c.workers) rc.eval.workers = *c.workers;
  if (!c.out.empty()) rc.paths.out_dir = c.out;
  if (rc.paths.out_dir.empty()) throw UsageError("--out is required (or set paths.out_dir)");
  return rc;
}

// Collects the files a command writes, for the manifest.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw UsageError("cannot create " + dir + ": " + ec.message());
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw UsageError("cannot write " + path(name));
    f << content;
    if (!f) throw UsageError("write failed: " + path(name));
    record(name);
  }

  void record(const std::string& name) { files_.push_back(name); }

  void finish(const std::string& command, const RunConfig& rc, Json inputs, Json summary = Json::object()) {
    write("config.json", dump_run_config(rc));
    Json m;
    m["command"] = command;
    m["tool_version"] = kToolVersion;
    m["seed"] = rc.seed;
    m["config"] = "config.json";
    m["inputs"] = std::move(inputs);
    std::vector<std::string> files = files_;
    files.push_back("manifest.json");
    std::sort(files.begin(), files.end());
    m["outputs"] = files;
    m["summary"] = std::move(summary);
    std::ofstream f(path("manifest.json"), std::ios::binary);
    if (!f) throw UsageError("cannot write " + path("manifest.json"));
    f << m.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::vector<data::Task> require_tasks(const std::string& path, const std::string& flag,
                                      std::ostream& err) {
  if (path.empty()) throw UsageError("missing " + flag);
  std::vector<std::string> warnings;
  auto tasks = data::load_tasks(path, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  if (tasks.empty()) throw UsageError(path + ": no tasks");
  return tasks;
}

std::vector<data::Task> optional_tasks(const std::string& path, std::ostream& err) {
  if (path.empty()) return {};
  std::vector<std::string> warnings;
  auto tasks = data::load_tasks(path, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  return tasks;
}

// "@train" strips the labels from the training tasks.
std::vector<data::MoleculeRecord> resolve_pool(const RunConfig& rc,
                                               std::span<const data::Task> train_tasks,
                                               bool needed, const char* why) {
  const std::string& p = rc.paths.reference_pool;
  if (!needed) return {};
  if (p.empty()) {
    throw UsageError(std::string(why) +
                     " needs a reference pool: pass --reference-pool FILE or --reference-pool @train");
  }
  if (p == "@train") {
    if (train_tasks.empty()) throw UsageError("--reference-pool @train needs --train-tasks");
    return data::pool_from_tasks(train_tasks);
  }
  auto pool = data::load_reference_pool(p);
  if (pool.empty()) throw UsageError(p + ": empty reference pool");
  return pool;
}

// Fits the input representation on the training tasks and applies it to
// every record the run touches.
void prepare_features(RunConfig& rc, std::vector<data::Task>& train_tasks,
                      std::vector<data::Task>& valid, std::vector<data::Task>& test,
                      std::vector<data::MoleculeRecord>& pool) {
  data::FeatureSpec spec =
      data::fit_feature_spec(train_tasks, rc.model.features.radius, rc.model.features.nbits);
  data::featurize_tasks(train_tasks, spec);
  data::featurize_tasks(valid, spec);
  data::featurize_tasks(test, spec);
  data::featurize_records(pool, spec);
  const bool gin = rc.model.encoder.kind == model::EncoderKind::kGin;
  if (gin) {
    for (auto* set : {&train_tasks, &valid, &test}) {
      for (auto& t : *set) data::ensure_graphs(t.records);
    }
    data::ensure_graphs(pool);
  }
  const std::size_t dim = gin ? feat::kAtomFeatureDim : spec.dim();
  if (rc.model.input_dim != 0 && rc.model.input_dim != dim) {
    throw UsageError("model.input_dim is " + std::to_string(rc.model.input_dim) +
                     " but the data gives " + std::to_string(dim));
  }
  rc.model.input_dim = dim;
  rc.model.features = spec;
}

void apply_model_features(const model::ModelConfig& mc, std::span<data::Task> tasks,
                          std::span<data::MoleculeRecord> pool) {
  data::featurize_tasks(tasks, mc.features);
  data::featurize_records(pool, mc.features);
  if (mc.encoder.kind == model::EncoderKind::kGin) {
    for (auto& t : tasks) data::ensure_graphs(t.records);
    data::ensure_graphs(pool);
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const data::Task& pick_task(std::span<const data::Task> tasks, const std::string& id) {
  if (id.empty()) return tasks.front();
  for (const auto& t : tasks) {
    if (t.task_id == id) return t;
  }
  throw UsageError("no task with id '" + id + "'");
}

Json stat_json(const metrics::Stat& s) { return Json{{"mean", s.mean}, {"stderr", s.se}}; }

std::string summary_header() {
  return "support_size,tasks,auroc_mean,auroc_stderr,auc_pr_mean,auc_pr_stderr,"
         "delta_auc_pr_mean,delta_auc_pr_stderr,prevalence_mean,tied_scores\n";
}

std::string summary_row(const metrics::EvalReport& r) {
  return std::to_string(r.support_size) + "," + std::to_string(r.tasks.size()) + "," +
         format_double(r.auroc.mean) + "," + format_double(r.auroc.se) + "," +
         format_double(r.auc_pr.mean) + "," + format_double(r.auc_pr.se) + "," +
         format_double(r.delta_auc_pr.mean) + "," + format_double(r.delta_auc_pr.se) + "," +
         format_double(r.prevalence.mean) + "," + std::to_string(r.ties) + "\n";
}

// ---------------------------------------------------------------- featurize

struct FeaturizeArgs {
  Common common;
  std::string input;
  std::string norm_stats;
  int radius = feat::kDefaultRadius;
  std::size_t nbits = feat::kDefaultBits;
};

int cmd_featurize(const FeaturizeArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig rc = resolve_config(a.common);
  const chem::SmilesFile file = chem::read_smiles_file(a.input);
  const std::size_t total = file.total_lines();
  if (total == 0) throw UsageError(a.input + ": no molecules");
  for (const auto& e : file.errors) {
    err << "warning: " << a.input << ":" << e.line_number << ": " << e.message << "\n";
  }
  // One bad line is tolerated in tiny files; above that, 1%.
  const std::size_t limit = std::max<std::size_t>(1, total / 100);
  if (file.errors.size() > limit) {
    throw DomainError(std::to_string(file.errors.size()) + " of " + std::to_string(total) +
                      " lines failed to parse (limit " + std::to_string(limit) + ")");
  }
  if (file.molecules.empty()) throw DomainError(a.input + ": no parseable molecules");

  std::vector<feat::Descriptors> desc;
  std::vector<std::vector<std::uint8_t>> bits;
  for (const auto& mol : file.molecules) {
    desc.push_back(feat::descriptors(mol));
    bits.push_back(feat::circular_fingerprint(mol, a.radius, a.nbits));
  }
  feat::NormStats stats;
  if (a.norm_stats.empty()) {
    stats = feat::fit_normalize(desc);
  } else {
    std::ifstream in(a.norm_stats, std::ios::binary);
    if (!in) throw UsageError("cannot open " + a.norm_stats);
    std::stringstream ss;
    ss << in.rdbuf();
    stats = feat::norm_stats_from_json(ss.str());
  }
  ad::Matrix rows(file.molecules.size(), a.nbits + feat::kDescriptorCount);
  for (std::size_t i = 0; i < file.molecules.size(); ++i) {
    const auto fv = feat::apply_normalize(bits[i], desc[i], stats);
    std::copy(fv.combined.begin(), fv.combined.end(), rows.row(i).begin());
  }

  OutputDir dir(rc.paths.out_dir);
  feat::write_feature_container(dir.path("features.craf"), rows);
  dir.record("features.craf");
  dir.write("norm_stats.json", feat::norm_stats_to_json(stats));
  std::string ids = "line\tid\tsmiles\n";
  for (const auto& l : file.lines) ids += std::to_string(l.line_number) + "\t" + l.id + "\t" + l.smiles + "\n";
  dir.write("molecules.tsv", ids);
  dir.finish("featurize", rc, Json{{"input", a.input}, {"norm_stats", a.norm_stats}},
             Json{{"count", file.molecules.size()}, {"failed", file.errors.size()},
                  {"radius", a.radius}, {"nbits", a.nbits}});
  out << "featurized " << file.molecules.size() << " of " << total << " molecules\n";
  return kExitOk;
}

// -------------------------------------------------------------------- train

struct TrainArgs {
  Common common;
  std::string train_tasks, valid_tasks, reference_pool, checkpoint, variant;
  std::optional<std::size_t> max_episodes, reference_size;
  std::optional<double> learning_rate;
};

void apply_path_flags(RunConfig& rc, const std::string& train_tasks, const std::string& valid_tasks,
                      const std::string& test_tasks, const std::string& reference_pool) {
  if (!train_tasks.empty()) rc.paths.train_tasks = train_tasks;
  if (!valid_tasks.empty()) rc.paths.valid_tasks = valid_tasks;
  if (!test_tasks.empty()) rc.paths.test_tasks = test_tasks;
  if (!reference_pool.empty()) rc.paths.reference_pool = reference_pool;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig rc = resolve_config(a.common);
  apply_path_flags(rc, a.train_tasks, a.valid_tasks, "", a.reference_pool);
  if (!a.checkpoint.empty()) rc.paths.checkpoint = a.checkpoint;
  if (!a.variant.empty()) rc.model.variant = model::variant_from_string(a.variant);
  if (a.max_episodes) rc.train.max_episodes = *a.max_episodes;
  if (a.reference_size) rc.model.reference_size = *a.reference_size;
  if (a.learning_rate) rc.train.learning_rate = *a.learning_rate;

  auto train_tasks = require_tasks(rc.paths.train_tasks, "--train-tasks", err);
  auto valid = optional_tasks(rc.paths.valid_tasks, err);
  std::vector<data::Task> none;
  const bool needs_pool = model::uses_reference(rc.model.variant);
  auto pool = resolve_pool(rc, train_tasks, needs_pool, "variant full");
  prepare_features(rc, train_tasks, valid, none, pool);

  OutputDir dir(rc.paths.out_dir);
  if (rc.paths.checkpoint.empty()) rc.paths.checkpoint = dir.path("model.cram");

  auto progress = [&](const train::CurvePoint& p) {
    if (p.validated) {
      err << "episode " << p.episode << " loss " << format_double(p.loss) << " validation "
          << format_double(p.validation_delta_auc_pr) << "\n";
    }
  };
  const train::TrainResult result = train::train(train_tasks, valid, pool, rc.model, rc.train, progress);
  const model::Model m{rc.model, result.params};
  save_checkpoint(rc.paths.checkpoint, m);
  if (fs::path(rc.paths.checkpoint).parent_path() == fs::path(rc.paths.out_dir)) {
    dir.record(fs::path(rc.paths.checkpoint).filename().string());
  }
  dir.write("curve.csv", train::curve_csv(result.curve));

  Json summary{{"variant", model::to_string(rc.model.variant)},
               {"episodes_run", result.episodes_run},
               {"early_stopped", result.early_stopped},
               {"checkpoint", rc.paths.checkpoint}};
  if (result.has_validation) {
    summary["initial_validation_delta_auc_pr"] = result.initial_validation;
    summary["best_validation_delta_auc_pr"] = result.best_validation;
    summary["best_episode"] = result.best_episode;
  }
  dir.finish("train", rc,
             Json{{"train_tasks", rc.paths.train_tasks},
                  {"valid_tasks", rc.paths.valid_tasks},
                  {"reference_pool", needs_pool ? rc.paths.reference_pool : ""}},
             summary);
  out << "trained " << model::to_string(rc.model.variant) << " for " << result.episodes_run
      << " episodes; checkpoint " << rc.paths.checkpoint << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- eval

struct EvalArgs {
  Common common;
  std::vector<std::string> checkpoints;
  std::string train_tasks, test_tasks, reference_pool;
  std::optional<std::size_t> support_size, reruns, draws, reference_size;
  std::vector<std::size_t> sweep;
};

std::vector<model::Model> load_models(const RunConfig& rc) {
  const auto paths = split_commas(rc.paths.checkpoint);
  if (paths.empty()) throw UsageError("missing --checkpoint");
  std::vector<model::Model> models;
  for (const auto& p : paths) models.push_back(load_checkpoint(p));
  for (const auto& m : models) {
    if (m.config.input_dim != models.front().config.input_dim ||
        m.config.features.kind != models.front().config.features.kind) {
      throw UsageError("checkpoints disagree on their input representation");
    }
  }
  return models;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig rc = resolve_config(a.common);
  apply_path_flags(rc, a.train_tasks, "", a.test_tasks, a.reference_pool);
  if (!a.checkpoints.empty()) {
    std::string joined;
    for (const auto& c : a.checkpoints) joined += (joined.empty() ? "" : ",") + c;
    rc.paths.checkpoint = joined;
  }
  if (a.support_size) rc.eval.support_size = *a.support_size;
  if (a.reruns) rc.eval.reruns = *a.reruns;
  if (a.draws) rc.eval.draws = *a.draws;
  if (a.reference_size) rc.eval.reference_size = *a.reference_size;
  if (!a.sweep.empty()) rc.eval.support_sweep = a.sweep;
  rc.eval.validate();

  const auto models = load_models(rc);
  auto test = require_tasks(rc.paths.test_tasks, "--test-tasks", err);
  const bool needs_pool = std::any_of(models.begin(), models.end(), [](const model::Model& m) {
    return model::uses_reference(m.config.variant);
  });
  auto train_tasks = rc.paths.reference_pool == "@train" && needs_pool
                         ? require_tasks(rc.paths.train_tasks, "--train-tasks", err)
                         : std::vector<data::Task>{};
  apply_model_features(models.front().config, train_tasks, {});
  auto pool = resolve_pool(rc, train_tasks, needs_pool, "a full-variant checkpoint");
  apply_model_features(models.front().config, test, pool);

  OutputDir dir(rc.paths.out_dir);
  const std::uint64_t seed = derive_seed(rc.seed, "evaluation");
  std::vector<std::size_t> sizes = rc.eval.support_sweep;
  const bool sweep = !sizes.empty();
  if (!sweep) sizes = {rc.eval.support_size};
  std::string summary = summary_header();
  Json reports = Json::array();
  for (std::size_t ns : sizes) {
    eval::EvalConfig ec = rc.eval;
    ec.support_size = ns;
    ec.support_sweep.clear();
    std::vector<metrics::EpisodeMetrics> episodes;
    const auto report = eval::evaluate(models, test, pool, ec, seed, &episodes);
    const std::string suffix = sweep ? "_ns" + std::to_string(ns) : "";
    dir.write("report" + suffix + ".csv", metrics::report_csv(report));
    dir.write("report" + suffix + ".json", metrics::report_json(report));
    dir.write("episodes" + suffix + ".csv", metrics::episodes_csv(episodes));
    summary += summary_row(report);
    reports.push_back(Json{{"support_size", ns},
                           {"auroc", stat_json(report.auroc)},
                           {"delta_auc_pr", stat_json(report.delta_auc_pr)}});
    out << "N^s=" << ns << " AUROC " << format_double(report.auroc.mean) << " +- "
        << format_double(report.auroc.se) << "  dAUC-PR " << format_double(report.delta_auc_pr.mean)
        << " +- " << format_double(report.delta_auc_pr.se) << "\n";
  }
  dir.write("summary.csv", summary);
  dir.finish("eval", rc,
             Json{{"checkpoint", rc.paths.checkpoint},
                  {"test_tasks", rc.paths.test_tasks},
                  {"reference_pool", needs_pool ? rc.paths.reference_pool : ""}},
             Json{{"reports", reports}});
  return kExitOk;
}

// ------------------------------------------------------------------- ablate

struct AblateArgs {
  Common common;
  std::string train_tasks, valid_tasks, test_tasks, reference_pool;
  std::optional<std::size_t> seeds, max_episodes;
  std::vector<std::string> variants;
  std::vector<std::size_t> reference_sweep;
  bool no_sweep = false;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig rc = resolve_config(a.common);
  apply_path_flags(rc, a.train_tasks, a.valid_tasks, a.test_tasks, a.reference_pool);
  if (a.seeds) rc.ablation.seeds = *a.seeds;
  if (a.max_episodes) rc.train.max_episodes = *a.max_episodes;
  if (!a.variants.empty()) {
    rc.ablation.variants.clear();
    for (const auto& v : a.variants) rc.ablation.variants.push_back(model::variant_from_string(v));
  }
  if (!a.reference_sweep.empty()) rc.ablation.reference_sweep = a.reference_sweep;
  if (a.no_sweep) rc.ablation.reference_sweep.clear();

  // Without task files the run uses the synthetic generator in the config.
  std::vector<data::Task> train_tasks, valid, test;
  std::vector<data::MoleculeRecord> pool;
  const bool synthetic = rc.paths.train_tasks.empty();
  if (synthetic) {
    Rng rng(derive_seed(rc.seed, "synth"));
    auto suite = data::synth_tasks(rc.synth, rng);
    train_tasks = std::move(suite.train);
    valid = std::move(suite.valid);
    test = std::move(suite.test);
    pool = std::move(suite.reference);
    if (!rc.paths.reference_pool.empty()) pool = resolve_pool(rc, train_tasks, true, "ablate");
  } else {
    train_tasks = require_tasks(rc.paths.train_tasks, "--train-tasks", err);
    valid = optional_tasks(rc.paths.valid_tasks, err);
    test = require_tasks(rc.paths.test_tasks, "--test-tasks", err);
    pool = resolve_pool(rc, train_tasks, true, "ablate");
  }
  prepare_features(rc, train_tasks, valid, test, pool);

  const exp::Suite suite{train_tasks, valid, test, pool};
  const bool sweep = !rc.ablation.reference_sweep.empty();
  const auto result = exp::run_ablation(suite, rc, sweep, [&](const std::string& m) { err << m << "\n"; });

  OutputDir dir(rc.paths.out_dir);
  dir.write("ablation.csv", exp::ablation_csv(result));
  if (sweep) dir.write("sweep.csv", exp::sweep_csv(result));
  Json rows = Json::array();
  for (const auto& row : result.variants) {
    const std::string name = model::to_string(row.variant);
    dir.write("report_" + name + ".json", metrics::report_json(row.report));
    rows.push_back(Json{{"variant", name},
                        {"auroc", stat_json(row.report.auroc)},
                        {"delta_auc_pr", stat_json(row.report.delta_auc_pr)}});
    out << name << ": AUROC " << format_double(row.report.auroc.mean) << "  dAUC-PR "
        << format_double(row.report.delta_auc_pr.mean) << "\n";
  }
  dir.finish("ablate", rc,
             Json{{"synthetic", synthetic},
                  {"train_tasks", rc.paths.train_tasks},
                  {"valid_tasks", rc.paths.valid_tasks},
                  {"test_tasks", rc.paths.test_tasks},
                  {"reference_pool", rc.paths.reference_pool}},
             Json{{"variants", rows}});
  return kExitOk;
}

// -------------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  std::optional<std::size_t> dim, signal_dim;
  std::optional<double> bias, separation, prevalence;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream&) {
  RunConfig rc = resolve_config(a.common);
  if (a.dim) rc.synth.dim = *a.dim;
  if (a.signal_dim) rc.synth.signal_dim = *a.signal_dim;
  if (a.bias) rc.synth.bias = *a.bias;
  if (a.separation) rc.synth.separation = *a.separation;
  if (a.prevalence) rc.synth.prevalence = *a.prevalence;
  Rng rng(derive_seed(rc.seed, "synth"));
  const auto suite = data::synth_tasks(rc.synth, rng);

  OutputDir dir(rc.paths.out_dir);
  data::write_tasks(dir.path("train.jsonl"), suite.train);
  data::write_tasks(dir.path("valid.jsonl"), suite.valid);
  data::write_tasks(dir.path("test.jsonl"), suite.test);
  data::write_reference_pool(dir.path("reference.jsonl"), suite.reference);
  for (const char* f : {"train.jsonl", "valid.jsonl", "test.jsonl", "reference.jsonl"}) dir.record(f);
  dir.finish("synth", rc, Json::object(),
             Json{{"train_tasks", suite.train.size()},
                  {"valid_tasks", suite.valid.size()},
                  {"test_tasks", suite.test.size()},
                  {"reference_pool", suite.reference.size()}});
  out << "wrote " << suite.train.size() + suite.valid.size() + suite.test.size() << " tasks and "
      << suite.reference.size() << " reference molecules to " << rc.paths.out_dir << "\n";
  return kExitOk;
}

// ------------------------------------------------------------- embed / attn

struct InspectArgs {
  Common common;
  std::string checkpoint, tasks, task_id, train_tasks, reference_pool;
  std::optional<std::size_t> support_size, query_size, reference_size;
};

// Shared setup of the single-episode commands.
struct Inspection {
  RunConfig rc;
  model::Model model;
  std::vector<data::Task> tasks;
  std::vector<data::Task> train_tasks;
  std::vector<data::MoleculeRecord> pool;
  const data::Task* task = nullptr;
};

Inspection inspect_setup(const InspectArgs& a, std::ostream& err) {
  Inspection s;
  s.rc = resolve_config(a.common);
  RunConfig& rc = s.rc;
  apply_path_flags(rc, a.train_tasks, "", a.tasks, a.reference_pool);
  if (!a.checkpoint.empty()) rc.paths.checkpoint = a.checkpoint;
  if (a.support_size) rc.eval.support_size = *a.support_size;
  if (a.query_size) rc.eval.query_size = *a.query_size;
  if (a.reference_size) rc.eval.reference_size = *a.reference_size;
  if (rc.paths.checkpoint.empty()) throw UsageError("missing --checkpoint");
  s.model = load_checkpoint(rc.paths.checkpoint);
  s.tasks = require_tasks(rc.paths.test_tasks, "--tasks", err);
  const bool needs_pool = model::uses_reference(s.model.config.variant);
  if (needs_pool && rc.paths.reference_pool == "@train") {
    s.train_tasks = require_tasks(rc.paths.train_tasks, "--train-tasks", err);
  }
  apply_model_features(s.model.config, s.train_tasks, {});
  s.pool = resolve_pool(rc, s.train_tasks, needs_pool, "a full-variant checkpoint");
  apply_model_features(s.model.config, s.tasks, s.pool);
  s.task = &pick_task(s.tasks, a.task_id);
  return s;
}

std::size_t reference_size_for(const Inspection& s) {
  return s.rc.eval.reference_size != 0 ? s.rc.eval.reference_size : s.model.config.reference_size;
}

void append_rows(ad::Matrix& dst, std::size_t& at, const ad::Matrix& src) {
  for (std::size_t i = 0; i < src.rows(); ++i, ++at) {
    std::copy(src.row(i).begin(), src.row(i).end(), dst.row(at).begin());
  }
}

int cmd_embed(const InspectArgs& a, std::ostream& out, std::ostream& err) {
  Inspection s = inspect_setup(a, err);
  const auto& mc = s.model.config;
  Rng rng(derive_seed(s.rc.seed, "embed", s.task->task_id));
  data::Episode ep = data::sample_episode(*s.task, rng, s.rc.eval.support_size, s.rc.eval.query_size,
                                          s.rc.eval.sampling);
  if (model::uses_reference(mc.variant)) ep.reference = data::sample_reference(s.pool, reference_size_for(s), rng);

  ad::Tape tape;
  const auto bound = model::bind_params(tape, mc, s.model.params, false);
  const auto input = model::make_episode_input(ep, mc);
  const auto fr = model::forward_episode(input, bound, mc);
  const ad::Var anchors = fr.anchors.valid() ? fr.anchors
                                             : model::initial_anchors(fr.support_embedding, input.support_labels);
  const ad::Var augmented = fr.augmented_anchors.valid() ? fr.augmented_anchors : anchors;

  struct RowTag {
    std::string id, role, label;
  };
  std::vector<RowTag> tags;
  for (const auto* r : ep.support) tags.push_back({r->id, "support", std::to_string(*r->label)});
  for (const auto* r : ep.query) tags.push_back({r->id, "query", std::to_string(*r->label)});
  for (const auto* r : ep.reference) tags.push_back({r->id, "reference", ""});
  tags.push_back({"anchor-neg", "anchor", "-1"});
  tags.push_back({"anchor-pos", "anchor", "1"});

  auto stage = [&](const ad::Var& sup, const ad::Var& qry, const ad::Var& anc) {
    ad::Matrix x(tags.size(), mc.embed_dim);
    std::size_t at = 0;
    append_rows(x, at, sup.value());
    append_rows(x, at, qry.value());
    if (fr.reference_embedding.valid()) append_rows(x, at, fr.reference_embedding.value());
    append_rows(x, at, anc.value());
    return metrics::pca_2d(x);
  };
  const metrics::Pca pre = stage(fr.support_embedding, fr.query_embedding, anchors);
  const metrics::Pca post = stage(fr.support_star, fr.query_star, augmented);

  std::string csv = "stage,id,role,label,pc1,pc2\n";
  for (const auto* pca : {&pre, &post}) {
    const char* name = pca == &pre ? "pre" : "post";
    for (std::size_t i = 0; i < tags.size(); ++i) {
      csv += std::string(name) + "," + csv_field(tags[i].id) + "," + tags[i].role + "," + tags[i].label + "," +
             format_double(pca->coords(i, 0)) + "," + format_double(pca->coords(i, 1)) + "\n";
    }
  }
  OutputDir dir(s.rc.paths.out_dir);
  dir.write("embed.csv", csv);
  dir.finish("embed", s.rc,
             Json{{"checkpoint", s.rc.paths.checkpoint}, {"tasks", s.rc.paths.test_tasks}, {"task_id", s.task->task_id}},
             Json{{"support", ep.support.size()},
                  {"query", ep.query.size()},
                  {"reference", ep.reference.size()},
                  {"pre_variance", {pre.variance[0], pre.variance[1]}},
                  {"post_variance", {post.variance[0], post.variance[1]}}});
  out << "embedded " << tags.size() << " rows per stage for task " << s.task->task_id << "\n";
  return kExitOk;
}

std::string matrix_csv(const std::vector<std::string>& ids, const ad::Matrix& m) {
  std::string csv = "id";
  for (const auto& id : ids) csv += "," + csv_field(id);
  csv += "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    csv += csv_field(ids[i]);
    for (std::size_t j = 0; j < m.cols(); ++j) csv += "," + format_double(m(i, j));
    csv += "\n";
  }
  return csv;
}

// Attention among the support molecules alone, so every weight links two
// labelled molecules.
int cmd_attn(const InspectArgs& a, std::ostream& out, std::ostream& err) {
  Inspection s = inspect_setup(a, err);
  const auto& mc = s.model.config;
  if (mc.variant == model::Variant::kEncoderOnly) {
    throw DomainError("the encoder-only variant has no attention block");
  }
  Rng rng(derive_seed(s.rc.seed, "attn", s.task->task_id));
  data::Episode ep = data::sample_episode(*s.task, rng, s.rc.eval.support_size, 0, s.rc.eval.sampling);
  if (model::uses_reference(mc.variant)) ep.reference = data::sample_reference(s.pool, reference_size_for(s), rng);

  ad::Tape tape;
  const auto bound = model::bind_params(tape, mc, s.model.params, false);
  const auto input = model::make_episode_input(ep, mc);
  const ad::Var sup = model::encode(bound.encoder, input.labeled);
  model::MhaOutput att;
  if (mc.variant == model::Variant::kAttention) {
    att = model::mha(sup, sup, sup, bound.am);
  } else {
    ad::Var anchors = model::initial_anchors(sup, input.support_labels);
    if (mc.variant == model::Variant::kFull) {
      anchors = model::context_augment(anchors, model::encode(bound.encoder, input.reference), bound.cam);
    }
    const ad::Var pair = ad::concat_cols(ad::slice_rows(anchors, 0, 1), ad::slice_rows(anchors, 1, 2));
    const ad::Var x = ad::concat_cols(sup, ad::repeat_rows(pair, sup.rows()));
    att = model::mha(x, x, x, bound.aam);
  }

  std::vector<std::string> ids;
  for (const auto* r : ep.support) ids.push_back(r->id);
  const std::size_t n = ids.size();
  ad::Matrix sim(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto* x = ep.support[i];
      const auto* y = ep.support[j];
      sim(i, j) = !x->fingerprint.empty() && !y->fingerprint.empty()
                      ? feat::tanimoto(x->fingerprint, y->fingerprint)
                      : feat::continuous_tanimoto(x->features, y->features);
    }
  }
  OutputDir dir(s.rc.paths.out_dir);
  for (std::size_t h = 0; h < att.weights.size(); ++h) {
    dir.write("attention_head" + std::to_string(h) + ".csv", matrix_csv(ids, att.weights[h].value()));
  }
  dir.write("tanimoto.csv", matrix_csv(ids, sim));
  std::string labels = "id,label\n";
  for (const auto* r : ep.support) labels += csv_field(r->id) + "," + std::to_string(*r->label) + "\n";
  dir.write("support.csv", labels);
  dir.finish("attn", s.rc,
             Json{{"checkpoint", s.rc.paths.checkpoint}, {"tasks", s.rc.paths.test_tasks}, {"task_id", s.task->task_id}},
             Json{{"support", n}, {"heads", att.weights.size()}, {"block", mc.variant == model::Variant::kAttention ? "am" : "aam"}});
  out << "exported " << att.weights.size() << " attention heads over " << n << " support molecules\n";
  return kExitOk;
}

int classify(const std::exception& e, std::ostream& err) {
  const bool domain = dynamic_cast<const DomainError*>(&e) != nullptr ||
                      dynamic_cast<const data::EpisodeError*>(&e) != nullptr ||
                      dynamic_cast<const model::ModelError*>(&e) != nullptr ||
                      dynamic_cast<const metrics::MetricError*>(&e) != nullptr;
  err << "error: " << e.what() << "\n";
  return domain ? kExitDomain : kExitUsage;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot molecular property prediction with context-augmented anchors", "cra"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  FeaturizeArgs fa;
  auto* featurize = app.add_subcommand("featurize", "SMILES file to a feature container plus norm stats");
  add_common(featurize, fa.common);
  featurize->add_option("--input", fa.input, "SMILES file, one molecule per line")->required();
  featurize->add_option("--norm-stats", fa.norm_stats, "Apply these stats instead of fitting");
  featurize->add_option("--radius", fa.radius, "Fingerprint radius");
  featurize->add_option("--nbits", fa.nbits, "Fingerprint length (power of two)");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Episodic training; writes a checkpoint and a curve CSV");
  add_common(train_cmd, ta.common);
  train_cmd->add_option("--train-tasks", ta.train_tasks, "Training task file (JSON lines)");
  train_cmd->add_option("--valid-tasks", ta.valid_tasks, "Validation task file for early stopping");
  train_cmd->add_option("--reference-pool", ta.reference_pool, "Reference pool file or @train");
  train_cmd->add_option("--checkpoint", ta.checkpoint, "Checkpoint path (default: OUT/model.cram)");
  train_cmd->add_option("--variant", ta.variant, "encoder-only, am, aam or full");
  train_cmd->add_option("--max-episodes", ta.max_episodes);
  train_cmd->add_option("--learning-rate", ta.learning_rate);
  train_cmd->add_option("--reference-size", ta.reference_size, "M, reference molecules per episode");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints on test tasks");
  add_common(eval_cmd, ea.common);
  eval_cmd->add_option("--checkpoint", ea.checkpoints, "Checkpoint; repeat to cycle over reruns");
  eval_cmd->add_option("--test-tasks", ea.test_tasks, "Test task file");
  eval_cmd->add_option("--train-tasks", ea.train_tasks, "Needed with --reference-pool @train");
  eval_cmd->add_option("--reference-pool", ea.reference_pool, "Reference pool file or @train");
  eval_cmd->add_option("--support-size", ea.support_size, "N^s");
  eval_cmd->add_option("--reruns", ea.reruns, "R");
  eval_cmd->add_option("--draws", ea.draws, "K support draws per rerun");
  eval_cmd->add_option("--reference-size", ea.reference_size, "M (default: the checkpoint's)");
  eval_cmd->add_option("--sweep", ea.sweep, "Support sizes, one report each")->delimiter(',');

  AblateArgs aa;
  auto* ablate = app.add_subcommand("ablate", "Train and compare all variants, plus a reference-size sweep");
  add_common(ablate, aa.common);
  ablate->add_option("--train-tasks", aa.train_tasks, "Omit to use the synthetic generator");
  ablate->add_option("--valid-tasks", aa.valid_tasks);
  ablate->add_option("--test-tasks", aa.test_tasks);
  ablate->add_option("--reference-pool", aa.reference_pool, "Reference pool file or @train");
  ablate->add_option("--seeds", aa.seeds, "Training replicas per variant");
  ablate->add_option("--max-episodes", aa.max_episodes);
  ablate->add_option("--variants", aa.variants, "Subset of variants")->delimiter(',');
  ablate->add_option("--reference-sweep", aa.reference_sweep, "Reference sizes M")->delimiter(',');
  ablate->add_flag("--no-sweep", aa.no_sweep, "Skip the reference-size sweep");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a synthetic selection-bias suite");
  add_common(synth, sa.common);
  synth->add_option("--dim", sa.dim);
  synth->add_option("--signal-dim", sa.signal_dim, "0 = dim");
  synth->add_option("--bias", sa.bias);
  synth->add_option("--separation", sa.separation);
  synth->add_option("--prevalence", sa.prevalence);

  InspectArgs embed_args;
  InspectArgs attn_args;
  auto add_inspect = [](CLI::App* cmd, InspectArgs& ia) {
    add_common(cmd, ia.common);
    cmd->add_option("--checkpoint", ia.checkpoint, "Checkpoint path");
    cmd->add_option("--tasks", ia.tasks, "Task file holding the task");
    cmd->add_option("--task-id", ia.task_id, "Task to use (default: the first)");
    cmd->add_option("--train-tasks", ia.train_tasks, "Needed with --reference-pool @train");
    cmd->add_option("--reference-pool", ia.reference_pool, "Reference pool file or @train");
    cmd->add_option("--support-size", ia.support_size, "N^s");
    cmd->add_option("--reference-size", ia.reference_size, "M");
  };
  auto* embed = app.add_subcommand("embed", "PCA of embeddings before and after augmentation");
  add_inspect(embed, embed_args);
  embed->add_option("--query-size", embed_args.query_size, "N^q (default: all remaining)");
  auto* attn = app.add_subcommand("attn", "Support-set attention weights and Tanimoto similarities");
  add_inspect(attn, attn_args);

  std::vector<std::string> rev(argv.rbegin(), argv.rend() - (argv.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (featurize->parsed()) return cmd_featurize(fa, out, err);
    if (train_cmd->parsed()) return cmd_train(ta, out, err);
    if (eval_cmd->parsed()) return cmd_eval(ea, out, err);
    if (ablate->parsed()) return cmd_ablate(aa, out, err);
    if (synth->parsed()) return cmd_synth(sa, out, err);
    if (embed->parsed()) return cmd_embed(embed_args, out, err);
    if (attn->parsed()) return cmd_attn(attn_args, out, err);
  } catch (const std::exception& e) {
    return classify(e, err);
  }
  return kExitUsage;
}

}  // namespace cra::cli
