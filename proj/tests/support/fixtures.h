// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_TESTS_FIXTURES_H_
#define CRA_TESTS_FIXTURES_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cra/episodes.h"
#include "cra/model.h"
#include "cra/records.h"
#include "cra/rng.h"
#include "cra/smiles.h"
#include "gradcheck.h"

namespace cra::testing {

// Raw-feature episode with its own record storage.
struct EpisodeFixture {
  std::vector<data::MoleculeRecord> labeled;
  std::vector<data::MoleculeRecord> reference;
  data::Episode episode;
};

// Support labels alternate +1 / -1 starting with +1 (so both classes are
// present whenever n_support >= 2); query labels are random.
std::unique_ptr<EpisodeFixture> random_episode(std::size_t n_support, std::size_t n_query,
                                               std::size_t n_reference, std::size_t dim,
                                               std::uint64_t seed);

model::ModelConfig small_config(model::Variant variant, std::size_t dim, std::size_t h = 4,
                                std::size_t heads = 2);

// Finite differences of the episode BCE loss against every parameter.
GradCheck episode_gradcheck(const model::ModelConfig& config, const model::Params& params,
                            const model::EpisodeInput& input, double eps = 1e-5,
                            double floor = 1e-4);

// Same molecule with atoms renumbered and bonds reordered and flipped.
chem::MolGraph permute_atoms(const chem::MolGraph& mol, Rng& rng);

// Golden files directory configured by the build.
std::string golden_path(const std::string& name);

}  // namespace cra::testing

#endif  // CRA_TESTS_FIXTURES_H_
