// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "cra/featurize.h"
#include "cra/matrix.h"
#include "cra/model.h"
#include "cra/rng.h"
#include "cra/smiles.h"

namespace {

using cra::ad::Matrix;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  cra::Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1);
  const Matrix b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(cra::ad::gemm(a, false, b, false));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(256)->Arg(512);

struct EpisodeData {
  std::vector<cra::data::MoleculeRecord> records;
  cra::data::Episode episode;
};

EpisodeData make_episode(std::size_t dim, std::size_t reference) {
  EpisodeData d;
  cra::Rng rng(3);
  const std::size_t labeled = 32;
  d.records.resize(labeled + reference);
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    auto& r = d.records[i];
    r.id = std::to_string(i);
    r.features.resize(dim);
    for (double& v : r.features) v = rng.normal();
    if (i < labeled) r.label = i % 2 ? 1 : -1;
  }
  for (std::size_t i = 0; i < 16; ++i) d.episode.support.push_back(&d.records[i]);
  for (std::size_t i = 16; i < labeled; ++i) d.episode.query.push_back(&d.records[i]);
  for (std::size_t i = labeled; i < d.records.size(); ++i) d.episode.reference.push_back(&d.records[i]);
  return d;
}

cra::model::ModelConfig bench_config(cra::model::Variant v) {
  cra::model::ModelConfig c;
  c.input_dim = 32;
  c.variant = v;
  c.features.raw_dim = 32;
  return c;
}

void BM_EpisodeForwardBackward(benchmark::State& state) {
  const auto variant = static_cast<cra::model::Variant>(state.range(0));
  const auto cfg = bench_config(variant);
  const auto params = cra::model::init_params(cfg);
  const auto data = make_episode(cfg.input_dim, cfg.reference_size);
  const auto input = cra::model::make_episode_input(data.episode, cfg);
  for (auto _ : state) {
    cra::ad::Tape tape;
    const auto bound = cra::model::bind_params(tape, cfg, params, true);
    const auto fr = cra::model::forward_episode(input, bound, cfg);
    tape.backward(cra::model::bce_loss(fr.probs, input.query_labels));
    benchmark::DoNotOptimize(tape.grad(bound.all.front()));
  }
  state.SetLabel(cra::model::to_string(variant));
}
BENCHMARK(BM_EpisodeForwardBackward)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_Fingerprint(benchmark::State& state) {
  const auto mol = cra::chem::parse_smiles("CN1C=NC2=C1C(=O)N(C(=O)N2C)C");
  for (auto _ : state) benchmark::DoNotOptimize(cra::feat::circular_fingerprint(mol));
}
BENCHMARK(BM_Fingerprint);

void BM_ParseSmiles(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cra::chem::parse_smiles("CC(=O)Oc1ccccc1C(=O)O"));
}
BENCHMARK(BM_ParseSmiles);

}  // namespace

BENCHMARK_MAIN();
