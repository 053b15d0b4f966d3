// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_RECORDS_H_
#define CRA_RECORDS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cra/featurize.h"
#include "cra/smiles.h"

namespace cra::data {

// Which side of an episode a record may be drawn into. Synthetic tasks
// tag biased support candidates and unbiased query candidates; real task
// files leave everything kAny.
enum class PoolRole : std::uint8_t { kAny, kSupport, kQuery };

struct MoleculeRecord {
  std::string id;
  std::string smiles;
  std::vector<double> features;  // encoder input x
  std::optional<int> label;      // -1 / +1; absent for reference molecules
  PoolRole role = PoolRole::kAny;
  std::shared_ptr<const chem::MolGraph> graph;
  std::vector<std::uint8_t> fingerprint;
};

struct Task {
  std::string task_id;
  std::vector<MoleculeRecord> records;

  std::size_t positives() const;
  std::size_t negatives() const;
  double positive_fraction() const;
};

class TaskFileError : public std::runtime_error {
 public:
  TaskFileError(const std::string& path, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateRecordIdError : public std::runtime_error {
 public:
  DuplicateRecordIdError(const std::string& task_id, const std::string& id)
      : std::runtime_error("DuplicateRecordId: '" + id + "' in task '" + task_id + "'") {}
};

// JSON lines: {"task_id", "id", "smiles" | "features", "label", ["pool"]}.
// Label 0 is accepted as an alias for -1. Tasks keep first-appearance order.
std::vector<Task> parse_tasks(std::string_view text, const std::string& origin = "<memory>",
                              std::vector<std::string>* warnings = nullptr);
std::vector<Task> load_tasks(const std::string& path, std::vector<std::string>* warnings = nullptr);

// Same record shape without label / task_id.
std::vector<MoleculeRecord> parse_reference_pool(std::string_view text,
                                                 const std::string& origin = "<memory>");
std::vector<MoleculeRecord> load_reference_pool(const std::string& path);

// Union of the task molecules with labels stripped, deduplicated by id.
std::vector<MoleculeRecord> pool_from_tasks(std::span<const Task> tasks);

void write_tasks(const std::string& path, std::span<const Task> tasks);
void write_reference_pool(const std::string& path, std::span<const MoleculeRecord> pool);

// How records turn into encoder inputs.
struct FeatureSpec {
  enum class Kind { kRaw, kFingerprint };
  Kind kind = Kind::kRaw;
  std::size_t raw_dim = 0;
  int radius = feat::kDefaultRadius;
  std::size_t nbits = feat::kDefaultBits;
  std::optional<feat::NormStats> norm;

  std::size_t dim() const;
};

// Chooses raw features when every training record carries them, otherwise
// fingerprints fitted (NormStats) on the training molecules only.
FeatureSpec fit_feature_spec(std::span<const Task> train, int radius = feat::kDefaultRadius,
                             std::size_t nbits = feat::kDefaultBits);

// Parses SMILES where needed and fills `features` (and graph/fingerprint).
// Always recomputes from the source, so normalisation is applied once.
void featurize_records(std::span<MoleculeRecord> records, const FeatureSpec& spec);
void featurize_tasks(std::span<Task> tasks, const FeatureSpec& spec);

// Parses `smiles` into `graph` if not already present.
void ensure_graphs(std::span<MoleculeRecord> records);

}  // namespace cra::data

#endif  // CRA_RECORDS_H_
