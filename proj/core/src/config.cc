// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cra {
namespace {

using Json = nlohmann::ordered_json;

// Reads the keys of one JSON object and rejects any it was not asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const Json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void size(const char* key, std::size_t& out) {
    if (const Json* v = find(key)) out = as_size(*v, key);
  }

  void u64(const char* key, std::uint64_t& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        throw ConfigError(where(key) + " must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void real(const char* key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
      out = v->get<double>();
    }
  }

  void boolean(const char* key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + " must be true or false");
      out = v->get<bool>();
    }
  }

  void text(const char* key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  void sizes(const char* key, std::vector<std::size_t>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + " must be an array");
      out.clear();
      for (const auto& e : *v) out.push_back(as_size(e, key));
    }
  }

  template <typename F>
  void choice(const char* key, F&& convert) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
      try {
        convert(v->get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(where(key) + ": " + e.what());
      }
    }
  }

  std::string where(const char* key = nullptr) const {
    return key == nullptr ? path_ : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where(it.key().c_str()));
    }
  }

 private:
  std::size_t as_size(const Json& v, const char* key) const {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<std::int64_t>() < 0)) {
      throw ConfigError(where(key) + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* activation_name(model::Activation a) {
  return a == model::Activation::kRelu ? "relu" : "tanh";
}

model::Activation activation_from(const std::string& s) {
  if (s == "relu") return model::Activation::kRelu;
  if (s == "tanh") return model::Activation::kTanh;
  throw std::invalid_argument("expected relu or tanh, got '" + s + "'");
}

model::MatchingScale scale_from(const std::string& s) {
  if (s == "paper") return model::MatchingScale::kPaper;
  if (s == "none") return model::MatchingScale::kNone;
  throw std::invalid_argument("expected paper or none, got '" + s + "'");
}

Json query_size_json(std::size_t n) {
  return n == data::kAllRemaining ? Json("all") : Json(n);
}

void read_query_size(ObjectReader& r, const char* key, std::size_t& out) {
  if (r.has(key)) {
    const Json* v = r.find(key);
    if (v->is_string() && v->get<std::string>() == "all") {
      out = data::kAllRemaining;
      return;
    }
  }
  r.size(key, out);
}

Json encoder_json(const model::EncoderConfig& e) {
  Json j;
  j["kind"] = e.kind == model::EncoderKind::kMlp ? "mlp" : "gin";
  j["hidden"] = e.hidden;
  j["activation"] = activation_name(e.activation);
  j["gin_layers"] = e.gin_layers;
  j["gin_epsilon"] = e.gin_epsilon;
  return j;
}

void read_encoder(const Json& j, const std::string& path, model::EncoderConfig& e) {
  ObjectReader r(j, path);
  r.choice("kind", [&](const std::string& s) {
    if (s == "mlp") {
      e.kind = model::EncoderKind::kMlp;
    } else if (s == "gin") {
      e.kind = model::EncoderKind::kGin;
    } else {
      throw std::invalid_argument("expected mlp or gin, got '" + s + "'");
    }
  });
  r.sizes("hidden", e.hidden);
  r.choice("activation", [&](const std::string& s) { e.activation = activation_from(s); });
  r.size("gin_layers", e.gin_layers);
  r.real("gin_epsilon", e.gin_epsilon);
  r.finish();
}

Json features_json(const data::FeatureSpec& f) {
  Json j;
  j["kind"] = f.kind == data::FeatureSpec::Kind::kRaw ? "raw" : "fingerprint";
  j["raw_dim"] = f.raw_dim;
  j["radius"] = f.radius;
  j["nbits"] = f.nbits;
  if (f.norm) {
    j["norm"] = {{"mean", f.norm->mean}, {"std", f.norm->std}};
  } else {
    j["norm"] = nullptr;
  }
  return j;
}

void read_features(const Json& j, const std::string& path, data::FeatureSpec& f) {
  ObjectReader r(j, path);
  r.choice("kind", [&](const std::string& s) {
    if (s == "raw") {
      f.kind = data::FeatureSpec::Kind::kRaw;
    } else if (s == "fingerprint") {
      f.kind = data::FeatureSpec::Kind::kFingerprint;
    } else {
      throw std::invalid_argument("expected raw or fingerprint, got '" + s + "'");
    }
  });
  r.size("raw_dim", f.raw_dim);
  std::size_t radius = static_cast<std::size_t>(f.radius);
  r.size("radius", radius);
  f.radius = static_cast<int>(radius);
  r.size("nbits", f.nbits);
  if (const Json* n = r.find("norm")) {
    if (n->is_null()) {
      f.norm.reset();
    } else {
      try {
        f.norm = feat::norm_stats_from_json(n->dump());
      } catch (const std::exception& e) {
        throw ConfigError(r.where("norm") + ": " + e.what());
      }
    }
  }
  r.finish();
}

// Model keys shared by the checkpoint form and the run-config form.
Json model_body_json(const model::ModelConfig& m) {
  Json j;
  j["input_dim"] = m.input_dim;
  j["embed_dim"] = m.embed_dim;
  j["heads"] = m.heads;
  j["key_dim"] = m.key_dim;
  j["encoder"] = encoder_json(m.encoder);
  j["reference_size"] = m.reference_size;
  j["matching_scale"] = m.matching_scale == model::MatchingScale::kPaper ? "paper" : "none";
  j["variant"] = model::to_string(m.variant);
  j["mask_query_attention"] = m.mask_query_attention;
  return j;
}

void read_model_body(ObjectReader& r, model::ModelConfig& m) {
  r.size("input_dim", m.input_dim);
  r.size("embed_dim", m.embed_dim);
  r.size("heads", m.heads);
  r.size("key_dim", m.key_dim);
  if (const Json* e = r.find("encoder")) read_encoder(*e, r.where("encoder"), m.encoder);
  r.size("reference_size", m.reference_size);
  r.choice("matching_scale", [&](const std::string& s) { m.matching_scale = scale_from(s); });
  r.choice("variant", [&](const std::string& s) { m.variant = model::variant_from_string(s); });
  r.boolean("mask_query_attention", m.mask_query_attention);
}

Json train_json(const train::TrainConfig& t) {
  Json j;
  j["learning_rate"] = t.learning_rate;
  j["max_episodes"] = t.max_episodes;
  j["validation_interval"] = t.validation_interval;
  j["patience"] = t.patience;
  j["support_size"] = t.support_size;
  j["query_size"] = t.query_size;
  j["clip_norm"] = t.clip_norm;
  j["sampling"] = data::to_string(t.sampling);
  j["validation_draws"] = t.validation_draws;
  return j;
}

void read_train(const Json& j, train::TrainConfig& t) {
  ObjectReader r(j, "train");
  r.real("learning_rate", t.learning_rate);
  r.size("max_episodes", t.max_episodes);
  r.size("validation_interval", t.validation_interval);
  r.size("patience", t.patience);
  r.size("support_size", t.support_size);
  r.size("query_size", t.query_size);
  r.real("clip_norm", t.clip_norm);
  r.choice("sampling", [&](const std::string& s) { t.sampling = data::sampling_mode_from_string(s); });
  r.size("validation_draws", t.validation_draws);
  r.finish();
}

Json eval_json(const eval::EvalConfig& e) {
  Json j;
  j["support_size"] = e.support_size;
  j["query_size"] = query_size_json(e.query_size);
  j["reruns"] = e.reruns;
  j["draws"] = e.draws;
  j["sampling"] = data::to_string(e.sampling);
  j["workers"] = e.workers;
  j["reference_size"] = e.reference_size;
  j["support_sweep"] = e.support_sweep;
  return j;
}

void read_eval(const Json& j, eval::EvalConfig& e) {
  ObjectReader r(j, "eval");
  r.size("support_size", e.support_size);
  read_query_size(r, "query_size", e.query_size);
  r.size("reruns", e.reruns);
  r.size("draws", e.draws);
  r.choice("sampling", [&](const std::string& s) { e.sampling = data::sampling_mode_from_string(s); });
  r.size("workers", e.workers);
  r.size("reference_size", e.reference_size);
  r.sizes("support_sweep", e.support_sweep);
  r.finish();
}

Json ablation_json(const AblationSettings& a) {
  Json j;
  Json variants = Json::array();
  for (auto v : a.variants) variants.push_back(model::to_string(v));
  j["variants"] = variants;
  j["seeds"] = a.seeds;
  j["reference_sweep"] = a.reference_sweep;
  return j;
}

void read_ablation(const Json& j, AblationSettings& a) {
  ObjectReader r(j, "ablation");
  if (const Json* v = r.find("variants")) {
    if (!v->is_array()) throw ConfigError("ablation.variants must be an array");
    a.variants.clear();
    for (const auto& e : *v) {
      if (!e.is_string()) throw ConfigError("ablation.variants entries must be strings");
      try {
        a.variants.push_back(model::variant_from_string(e.get<std::string>()));
      } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("ablation.variants: ") + err.what());
      }
    }
  }
  r.size("seeds", a.seeds);
  r.sizes("reference_sweep", a.reference_sweep);
  r.finish();
}

Json synth_json(const data::SynthConfig& s) {
  Json j;
  j["dim"] = s.dim;
  j["signal_dim"] = s.signal_dim;
  j["train_tasks"] = s.train_tasks;
  j["valid_tasks"] = s.valid_tasks;
  j["test_tasks"] = s.test_tasks;
  j["separation"] = s.separation;
  j["bias"] = s.bias;
  j["prevalence"] = s.prevalence;
  j["support_candidates"] = s.support_candidates;
  j["query_candidates"] = s.query_candidates;
  j["min_per_class"] = s.min_per_class;
  j["reference_pool"] = s.reference_pool;
  return j;
}

void read_synth(const Json& j, data::SynthConfig& s) {
  ObjectReader r(j, "synth");
  r.size("dim", s.dim);
  r.size("signal_dim", s.signal_dim);
  r.size("train_tasks", s.train_tasks);
  r.size("valid_tasks", s.valid_tasks);
  r.size("test_tasks", s.test_tasks);
  r.real("separation", s.separation);
  r.real("bias", s.bias);
  r.real("prevalence", s.prevalence);
  r.size("support_candidates", s.support_candidates);
  r.size("query_candidates", s.query_candidates);
  r.size("min_per_class", s.min_per_class);
  r.size("reference_pool", s.reference_pool);
  r.finish();
}

Json paths_json(const Paths& p) {
  return {{"train_tasks", p.train_tasks},       {"valid_tasks", p.valid_tasks},
          {"test_tasks", p.test_tasks},         {"reference_pool", p.reference_pool},
          {"checkpoint", p.checkpoint},         {"out_dir", p.out_dir}};
}

void read_paths(const Json& j, Paths& p) {
  ObjectReader r(j, "paths");
  r.text("train_tasks", p.train_tasks);
  r.text("valid_tasks", p.valid_tasks);
  r.text("test_tasks", p.test_tasks);
  r.text("reference_pool", p.reference_pool);
  r.text("checkpoint", p.checkpoint);
  r.text("out_dir", p.out_dir);
  r.finish();
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

void apply_preset(RunConfig& c, std::string_view preset) {
  if (preset == "moleculenet") {
    c.train.sampling = data::SamplingMode::kBalanced;
    c.train.support_size = 20;
    c.train.query_size = 16;
    c.eval.sampling = data::SamplingMode::kBalanced;
    c.eval.support_size = 20;
    c.eval.query_size = 16;
  } else if (preset == "fsmol") {
    c.train.sampling = data::SamplingMode::kStratified;
    c.train.support_size = 16;
    c.train.query_size = 16;
    c.eval.sampling = data::SamplingMode::kStratified;
    c.eval.support_size = 16;
    c.eval.query_size = data::kAllRemaining;
  } else if (preset != "custom") {
    throw ConfigError("unknown preset '" + std::string(preset) +
                      "' (expected moleculenet, fsmol, custom)");
  }
  c.preset = std::string(preset);
}

RunConfig parse_run_config(std::string_view json_text) {
  const Json j = parse_json(json_text);
  RunConfig c;
  ObjectReader r(j, "config");
  std::string preset = "custom";
  r.text("preset", preset);
  apply_preset(c, preset);
  r.u64("seed", c.seed);
  if (const Json* m = r.find("model")) {
    ObjectReader mr(*m, "model");
    read_model_body(mr, c.model);
    mr.finish();
  }
  if (const Json* t = r.find("train")) read_train(*t, c.train);
  if (const Json* e = r.find("eval")) read_eval(*e, c.eval);
  if (const Json* a = r.find("ablation")) read_ablation(*a, c.ablation);
  if (const Json* s = r.find("synth")) read_synth(*s, c.synth);
  if (const Json* p = r.find("paths")) read_paths(*p, c.paths);
  r.finish();
  c.model.seed = c.seed;
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
  Json j;
  j["preset"] = c.preset;
  j["seed"] = c.seed;
  j["model"] = model_body_json(c.model);
  j["train"] = train_json(c.train);
  j["eval"] = eval_json(c.eval);
  j["ablation"] = ablation_json(c.ablation);
  j["synth"] = synth_json(c.synth);
  j["paths"] = paths_json(c.paths);
  return j.dump(2) + "\n";
}

std::string model_config_to_json(const model::ModelConfig& m) {
  Json j = model_body_json(m);
  j["seed"] = m.seed;
  j["features"] = features_json(m.features);
  return j.dump();
}

model::ModelConfig model_config_from_json(std::string_view json_text) {
  const Json j = parse_json(json_text);
  model::ModelConfig m;
  ObjectReader r(j, "model");
  read_model_body(r, m);
  r.u64("seed", m.seed);
  if (const Json* f = r.find("features")) read_features(*f, "model.features", m.features);
  r.finish();
  return m;
}

}  // namespace cra
