// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/records.h"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cra::data {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename F>
void for_each_line(std::string_view text, F f) {
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_number;
    start = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.remove_suffix(1);
    }
    if (!line.empty()) f(line_number, line);
  }
}

MoleculeRecord record_from_json(const json& j, bool labelled, const std::string& origin,
                                std::size_t line) {
  auto fail = [&](const std::string& what) { return TaskFileError(origin, line, what); };
  static const std::set<std::string> kTaskKeys = {"task_id", "id", "smiles", "features", "label", "pool"};
  static const std::set<std::string> kPoolKeys = {"id", "smiles", "features", "pool"};
  const auto& allowed = labelled ? kTaskKeys : kPoolKeys;
  if (!j.is_object()) throw fail("expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw fail("unexpected key '" + key + "'");
  }
  MoleculeRecord r;
  if (!j.contains("id") || !j["id"].is_string()) throw fail("missing string field 'id'");
  r.id = j["id"].get<std::string>();
  const bool has_smiles = j.contains("smiles");
  const bool has_features = j.contains("features");
  if (has_smiles == has_features) throw fail("exactly one of 'smiles' or 'features' is required");
  if (has_smiles) {
    if (!j["smiles"].is_string()) throw fail("'smiles' must be a string");
    r.smiles = j["smiles"].get<std::string>();
  } else {
    if (!j["features"].is_array() || j["features"].empty()) throw fail("'features' must be a non-empty array");
    for (const auto& v : j["features"]) {
      if (!v.is_number()) throw fail("'features' must hold numbers");
      r.features.push_back(v.get<double>());
    }
  }
  if (labelled) {
    if (!j.contains("label") || !j["label"].is_number_integer()) throw fail("missing integer 'label'");
    const int label = j["label"].get<int>();
    if (label == 1) {
      r.label = 1;
    } else if (label == -1 || label == 0) {
      r.label = -1;
    } else {
      throw fail("label " + std::to_string(label) + " not in {-1, 0, 1}");
    }
  }
  if (j.contains("pool")) {
    const std::string p = j["pool"].is_string() ? j["pool"].get<std::string>() : "";
    if (p == "support") {
      r.role = PoolRole::kSupport;
    } else if (p == "query") {
      r.role = PoolRole::kQuery;
    } else if (p == "any") {
      r.role = PoolRole::kAny;
    } else {
      throw fail("'pool' must be one of support, query, any");
    }
  }
  return r;
}

json record_to_json(const MoleculeRecord& r, const std::string* task_id) {
  json j;
  if (task_id) j["task_id"] = *task_id;
  j["id"] = r.id;
  if (!r.smiles.empty()) {
    j["smiles"] = r.smiles;
  } else {
    j["features"] = r.features;
  }
  if (task_id && r.label) j["label"] = *r.label;
  if (r.role == PoolRole::kSupport) j["pool"] = "support";
  if (r.role == PoolRole::kQuery) j["pool"] = "query";
  return j;
}

}  // namespace

TaskFileError::TaskFileError(const std::string& path, std::size_t line, const std::string& what)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

std::size_t Task::positives() const {
  std::size_t n = 0;
  for (const auto& r : records) n += (r.label && *r.label == 1) ? 1 : 0;
  return n;
}

std::size_t Task::negatives() const { return records.size() - positives(); }

double Task::positive_fraction() const {
  return records.empty() ? 0.0 : static_cast<double>(positives()) / static_cast<double>(records.size());
}

std::vector<Task> parse_tasks(std::string_view text, const std::string& origin,
                              std::vector<std::string>* warnings) {
  std::vector<Task> tasks;
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::set<std::string>> ids;
  for_each_line(text, [&](std::size_t line, std::string_view body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      throw TaskFileError(origin, line, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("task_id") || !j["task_id"].is_string()) {
      throw TaskFileError(origin, line, "missing string field 'task_id'");
    }
    const std::string task_id = j["task_id"].get<std::string>();
    MoleculeRecord r = record_from_json(j, true, origin, line);
    if (!ids[task_id].insert(r.id).second) throw DuplicateRecordIdError(task_id, r.id);
    auto [it, inserted] = index.emplace(task_id, tasks.size());
    if (inserted) tasks.push_back(Task{task_id, {}});
    tasks[it->second].records.push_back(std::move(r));
  });
  if (warnings) {
    if (tasks.empty()) warnings->push_back(origin + ": no tasks");
    for (const auto& t : tasks) {
      if (t.positives() == 0 || t.negatives() == 0) {
        warnings->push_back("task '" + t.task_id + "' has a single class (" +
                            std::to_string(t.positives()) + " positive, " +
                            std::to_string(t.negatives()) + " negative)");
      }
    }
  }
  return tasks;
}

std::vector<Task> load_tasks(const std::string& path, std::vector<std::string>* warnings) {
  return parse_tasks(read_file(path), path, warnings);
}

std::vector<MoleculeRecord> parse_reference_pool(std::string_view text, const std::string& origin) {
  std::vector<MoleculeRecord> pool;
  std::set<std::string> ids;
  for_each_line(text, [&](std::size_t line, std::string_view body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::parse_error& e) {
      throw TaskFileError(origin, line, std::string("malformed JSON: ") + e.what());
    }
    MoleculeRecord r = record_from_json(j, false, origin, line);
    if (!ids.insert(r.id).second) throw DuplicateRecordIdError("<reference pool>", r.id);
    pool.push_back(std::move(r));
  });
  return pool;
}

std::vector<MoleculeRecord> load_reference_pool(const std::string& path) {
  return parse_reference_pool(read_file(path), path);
}

std::vector<MoleculeRecord> pool_from_tasks(std::span<const Task> tasks) {
  std::vector<MoleculeRecord> pool;
  std::set<std::string> seen;
  for (const auto& t : tasks) {
    for (const auto& r : t.records) {
      const std::string key = r.smiles.empty() ? t.task_id + "/" + r.id : r.smiles;
      if (!seen.insert(key).second) continue;
      MoleculeRecord u = r;
      u.label.reset();
      u.role = PoolRole::kAny;
      u.id = t.task_id + "/" + r.id;
      pool.push_back(std::move(u));
    }
  }
  return pool;
}

void write_tasks(const std::string& path, std::span<const Task> tasks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& t : tasks) {
    for (const auto& r : t.records) out << record_to_json(r, &t.task_id).dump() << '\n';
  }
}

void write_reference_pool(const std::string& path, std::span<const MoleculeRecord> pool) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : pool) out << record_to_json(r, nullptr).dump() << '\n';
}

std::size_t FeatureSpec::dim() const {
  return kind == Kind::kRaw ? raw_dim : nbits + feat::kDescriptorCount;
}

void ensure_graphs(std::span<MoleculeRecord> records) {
  for (auto& r : records) {
    if (r.graph || r.smiles.empty()) continue;
    try {
      r.graph = std::make_shared<const chem::MolGraph>(chem::parse_smiles(r.smiles));
    } catch (const chem::SmilesError& e) {
      throw std::runtime_error("record '" + r.id + "': " + e.what());
    }
  }
}

FeatureSpec fit_feature_spec(std::span<const Task> train, int radius, std::size_t nbits) {
  FeatureSpec spec;
  spec.radius = radius;
  spec.nbits = nbits;
  bool all_raw = true;
  std::size_t dim = 0;
  for (const auto& t : train) {
    for (const auto& r : t.records) {
      if (r.smiles.empty()) {
        if (dim != 0 && r.features.size() != dim) {
          throw std::invalid_argument("record '" + r.id + "' has " + std::to_string(r.features.size()) +
                                      " features, expected " + std::to_string(dim));
        }
        dim = r.features.size();
      } else {
        all_raw = false;
      }
    }
  }
  if (all_raw) {
    spec.kind = FeatureSpec::Kind::kRaw;
    spec.raw_dim = dim;
    return spec;
  }
  spec.kind = FeatureSpec::Kind::kFingerprint;
  std::vector<feat::Descriptors> raw;
  for (const auto& t : train) {
    for (const auto& r : t.records) {
      if (r.smiles.empty()) {
        throw std::invalid_argument("record '" + r.id + "' has raw features in a SMILES training set");
      }
      const auto g = r.graph ? *r.graph : chem::parse_smiles(r.smiles);
      raw.push_back(feat::descriptors(g));
    }
  }
  spec.norm = feat::fit_normalize(raw);
  return spec;
}

void featurize_records(std::span<MoleculeRecord> records, const FeatureSpec& spec) {
  if (spec.kind == FeatureSpec::Kind::kRaw) {
    for (const auto& r : records) {
      if (!r.smiles.empty() && r.features.empty()) {
        throw std::invalid_argument("record '" + r.id + "' has SMILES but the model expects raw features");
      }
      if (r.features.size() != spec.raw_dim) {
        throw std::invalid_argument("record '" + r.id + "' has " + std::to_string(r.features.size()) +
                                    " features, expected " + std::to_string(spec.raw_dim));
      }
    }
    return;
  }
  if (!spec.norm) throw std::invalid_argument("fingerprint features need fitted NormStats");
  ensure_graphs(records);
  for (auto& r : records) {
    if (!r.graph) throw std::invalid_argument("record '" + r.id + "' has no SMILES");
    r.fingerprint = feat::circular_fingerprint(*r.graph, spec.radius, spec.nbits);
    r.features = feat::apply_normalize(r.fingerprint, feat::descriptors(*r.graph), *spec.norm).combined;
  }
}

void featurize_tasks(std::span<Task> tasks, const FeatureSpec& spec) {
  for (auto& t : tasks) featurize_records(t.records, spec);
}

}  // namespace cra::data
