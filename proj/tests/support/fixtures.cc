// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.h"

#include "cra/ops.h"
#include "cra/rng.h"

namespace cra::testing {

namespace {

data::MoleculeRecord raw_record(const std::string& id, std::size_t dim, Rng& rng) {
  data::MoleculeRecord r;
  r.id = id;
  r.features.resize(dim);
  for (double& v : r.features) v = rng.normal();
  return r;
}

}  // namespace

std::unique_ptr<EpisodeFixture> random_episode(std::size_t n_support, std::size_t n_query,
                                               std::size_t n_reference, std::size_t dim,
                                               std::uint64_t seed) {
  auto fx = std::make_unique<EpisodeFixture>();
  Rng rng(seed);
  for (std::size_t i = 0; i < n_support + n_query; ++i) {
    auto r = raw_record((i < n_support ? "s" : "q") + std::to_string(i), dim, rng);
    if (i < n_support) {
      r.label = i % 2 == 0 ? 1 : -1;
    } else {
      r.label = rng.uniform() < 0.5 ? 1 : -1;
    }
    fx->labeled.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < n_reference; ++i) fx->reference.push_back(raw_record("r" + std::to_string(i), dim, rng));
  for (std::size_t i = 0; i < n_support; ++i) fx->episode.support.push_back(&fx->labeled[i]);
  for (std::size_t i = n_support; i < n_support + n_query; ++i) fx->episode.query.push_back(&fx->labeled[i]);
  for (const auto& r : fx->reference) fx->episode.reference.push_back(&r);
  return fx;
}

model::ModelConfig small_config(model::Variant variant, std::size_t dim, std::size_t h, std::size_t heads) {
  model::ModelConfig c;
  c.input_dim = dim;
  c.embed_dim = h;
  c.heads = heads;
  c.encoder.hidden = {8};
  c.encoder.activation = model::Activation::kTanh;
  c.reference_size = 2;
  c.variant = variant;
  c.seed = 11;
  c.features.kind = data::FeatureSpec::Kind::kRaw;
  c.features.raw_dim = dim;
  return c;
}

GradCheck episode_gradcheck(const model::ModelConfig& config, const model::Params& params,
                            const model::EpisodeInput& input, double eps, double floor) {
  ad::Tape tape;
  const auto bound = model::bind_params(tape, config, params, true);
  const auto fr = model::forward_episode(input, bound, config);
  tape.backward(model::bce_loss(fr.probs, input.query_labels));
  std::vector<ad::Matrix> analytic;
  for (const auto& v : bound.all) analytic.push_back(tape.grad(v));

  auto loss = [&](const std::vector<ad::Matrix>& values) {
    model::Params p = params;
    for (std::size_t i = 0; i < values.size(); ++i) p.value(i) = values[i];
    ad::Tape t;
    const auto b = model::bind_params(t, config, p, false);
    const auto r = model::forward_episode(input, b, config);
    return model::bce_loss(r.probs, input.query_labels).value()(0, 0);
  };
  return gradcheck_scalar(loss, params.values(), analytic, eps, floor);
}

chem::MolGraph permute_atoms(const chem::MolGraph& mol, Rng& rng) {
  std::vector<std::size_t> perm(mol.atoms.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);  // new index of old atom i is perm[i]
  chem::MolGraph out;
  out.atoms.resize(mol.atoms.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out.atoms[perm[i]] = mol.atoms[i];
  out.bonds = mol.bonds;
  for (auto& b : out.bonds) {
    b.a = perm[b.a];
    b.b = perm[b.b];
    if (rng.uniform() < 0.5) std::swap(b.a, b.b);
  }
  rng.shuffle(out.bonds);
  return out;
}

std::string golden_path(const std::string& name) { return std::string(CRA_GOLDEN_DIR) + "/" + name; }

}  // namespace cra::testing
