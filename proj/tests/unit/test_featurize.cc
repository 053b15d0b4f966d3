// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cra/featurize.h"
#include "cra/records.h"
#include "cra/rng.h"
#include "cra/smiles.h"
#include "fixtures.h"

namespace cra::feat {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

struct GoldenFingerprint {
  std::string smiles;
  int radius;
  std::size_t nbits;
  std::vector<std::size_t> bits;
};

std::vector<GoldenFingerprint> load_fingerprint_goldens() {
  std::ifstream in(testing::golden_path("fingerprints.tsv"));
  std::vector<GoldenFingerprint> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, '\t');
    GoldenFingerprint g{f[0], std::stoi(f[1]), std::stoul(f[2]), {}};
    for (const auto& b : split(f[3], ',')) g.bits.push_back(std::stoul(b));
    out.push_back(g);
  }
  return out;
}

TEST(AtomInvariant, MatchesOracleConstants) {
  std::ifstream in(testing::golden_path("atom_invariants.tsv"));
  ASSERT_TRUE(in);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, '\t');
    chem::Atom a;
    a.atomic_number = static_cast<std::uint8_t>(std::stoi(f[0]));
    a.formal_charge = std::stoi(f[2]);
    a.aromatic = f[3] == "1";
    if (f[4] != "none") a.explicit_h = std::stoi(f[4]);
    EXPECT_EQ(atom_invariant(a, std::stoul(f[1])), std::stoull(f[5])) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 6);
}

TEST(AtomInvariant, DegreeMatters) {
  chem::Atom c;
  c.atomic_number = 6;
  EXPECT_EQ(atom_invariant(c, 1), atom_invariant(c, 1));
  EXPECT_NE(atom_invariant(c, 1), atom_invariant(c, 2));
}

TEST(Fingerprint, GoldenBitIndices) {
  const auto goldens = load_fingerprint_goldens();
  ASSERT_EQ(goldens.size(), 10u);
  for (const auto& g : goldens) {
    const auto bits = circular_fingerprint(chem::parse_smiles(g.smiles), g.radius, g.nbits);
    EXPECT_EQ(set_bits(bits), g.bits) << g.smiles;
  }
}

TEST(Fingerprint, MethaneRadiusZeroSetsOneBit) {
  const auto bits = circular_fingerprint(chem::parse_smiles("C"), 0, 2048);
  EXPECT_EQ(set_bits(bits).size(), 1u);
}

TEST(Fingerprint, AtomOrderInvariant) {
  EXPECT_EQ(circular_fingerprint(chem::parse_smiles("CCO")), circular_fingerprint(chem::parse_smiles("OCC")));
  Rng rng(5);
  for (const auto& g : load_fingerprint_goldens()) {
    const auto mol = chem::parse_smiles(g.smiles);
    const auto ref = circular_fingerprint(mol);
    for (int t = 0; t < 20; ++t) {
      const auto perm = testing::permute_atoms(mol, rng);
      EXPECT_EQ(circular_fingerprint(perm), ref) << g.smiles;
      EXPECT_EQ(circular_fingerprint(chem::parse_smiles(chem::write_smiles(perm))), ref) << g.smiles;
    }
  }
}

TEST(Fingerprint, RejectsBadArguments) {
  const auto mol = chem::parse_smiles("CC");
  EXPECT_THROW(circular_fingerprint(mol, 2, 1000), std::invalid_argument);
  EXPECT_THROW(circular_fingerprint(mol, -1, 1024), std::invalid_argument);
  EXPECT_EQ(circular_fingerprint(mol, 2, 64).size(), 64u);
}

TEST(Descriptors, WorkedExamples) {
  const auto e = descriptors(chem::parse_smiles("CCO"));
  const Descriptors want{3, 2, 0, 0, 1.0 / 3.0, 4.0 / 3.0};
  for (std::size_t i = 0; i < kDescriptorCount; ++i) EXPECT_DOUBLE_EQ(e[i], want[i]);
  EXPECT_EQ(descriptors(chem::parse_smiles("c1ccccc1")), (Descriptors{6, 6, 1, 1, 0, 2}));
  EXPECT_EQ(descriptors(chem::parse_smiles("C")), (Descriptors{1, 0, 0, 0, 0, 0}));
}

TEST(Normalize, SingleMoleculeGivesZeros) {
  const std::vector<Descriptors> train{descriptors(chem::parse_smiles("CCO"))};
  const auto stats = fit_normalize(train);
  for (double s : stats.std) EXPECT_EQ(s, kStdFloor);
  const auto fv = apply_normalize(std::vector<std::uint8_t>(4, 1), train[0], stats);
  for (double d : fv.descriptors) EXPECT_EQ(d, 0.0);
}

TEST(Normalize, MeanAndPopulationStd) {
  Descriptors a{}, b{};
  a[0] = 1.0;
  b[0] = 3.0;
  const std::vector<Descriptors> train{a, b};
  const auto stats = fit_normalize(train);
  EXPECT_DOUBLE_EQ(stats.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(stats.std[0], 1.0);
  const std::vector<std::uint8_t> bits{0, 1, 1};
  const auto fv = apply_normalize(bits, b, stats);
  EXPECT_DOUBLE_EQ(fv.descriptors[0], 1.0);
  ASSERT_EQ(fv.combined.size(), 3 + kDescriptorCount);
  EXPECT_EQ(fv.combined[0], 0.0);
  EXPECT_EQ(fv.combined[1], 1.0);
  EXPECT_DOUBLE_EQ(fv.combined[3], 1.0);
}

TEST(Normalize, EmptyTrainingSet) {
  EXPECT_THROW(fit_normalize(std::vector<Descriptors>{}), EmptyTrainingSetError);
}

TEST(Normalize, PipelineAppliesStatsExactlyOnce) {
  std::vector<data::Task> tasks(1);
  tasks[0].task_id = "T";
  for (const char* s : {"CCO", "c1ccccc1", "CC(=O)O", "CCN"}) {
    data::MoleculeRecord r;
    r.id = s;
    r.smiles = s;
    r.label = 1;
    tasks[0].records.push_back(r);
  }
  const auto spec = data::fit_feature_spec(tasks, 2, 256);
  ASSERT_EQ(spec.kind, data::FeatureSpec::Kind::kFingerprint);
  data::featurize_tasks(tasks, spec);
  const auto once = tasks[0].records[0].features;
  data::featurize_tasks(tasks, spec);
  EXPECT_EQ(tasks[0].records[0].features, once);
  // Directly: normalised descriptor of record 0 equals (raw - mean) / std.
  const auto raw = descriptors(chem::parse_smiles("CCO"));
  for (std::size_t k = 0; k < kDescriptorCount; ++k) {
    EXPECT_DOUBLE_EQ(once[256 + k], (raw[k] - spec.norm->mean[k]) / spec.norm->std[k]);
  }
}

TEST(Tanimoto, Basics) {
  const std::vector<std::uint8_t> a{1, 1, 0, 0}, b{1, 0, 1, 0}, z{0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(tanimoto(a, a), 1.0);
  EXPECT_DOUBLE_EQ(tanimoto(a, b), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(tanimoto(z, z), 1.0);  // identical, even when empty
  EXPECT_DOUBLE_EQ(tanimoto(a, z), 0.0);
  const std::vector<double> x{1.0, 2.0}, y{2.0, 1.0};
  EXPECT_DOUBLE_EQ(continuous_tanimoto(x, x), 1.0);
  EXPECT_DOUBLE_EQ(continuous_tanimoto(x, y), 4.0 / 6.0);
}

TEST(Container, RoundTripAndHeader) {
  const auto path = (std::filesystem::temp_directory_path() / "cra_test_container.craf").string();
  ad::Matrix m(3, 4);
  for (std::size_t i = 0; i < m.size(); ++i) m.values()[i] = 0.25 * static_cast<double>(i) - 1.0;
  write_feature_container(path, m);
  EXPECT_EQ(read_feature_container(path), m);
  std::ifstream in(path, std::ios::binary);
  char head[24];
  in.read(head, 24);
  EXPECT_EQ(std::string(head, 4), "CRAF");
  EXPECT_EQ(static_cast<unsigned char>(head[8]), 3);   // count
  EXPECT_EQ(static_cast<unsigned char>(head[16]), 4);  // dim
  std::filesystem::remove(path);
}

TEST(NormStatsJson, RoundTrip) {
  NormStats s;
  s.mean = {1, 2, 3, 4, 5, 0.1};
  s.std = {1, 1, 2, 2, 1e-8, 0.3};
  const auto back = norm_stats_from_json(norm_stats_to_json(s));
  EXPECT_EQ(back.mean, s.mean);
  EXPECT_EQ(back.std, s.std);
}

TEST(AtomFeatures, FixedWidth) {
  const auto mol = chem::parse_smiles("c1ccccc1[N+](=O)[O-]");
  const auto deg = mol.degrees();
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    const auto f = atom_features(mol.atoms[i], deg[i]);
    EXPECT_EQ(f.size(), kAtomFeatureDim);
    for (double v : f) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_NE(atom_features(mol.atoms[0], deg[0]), atom_features(mol.atoms[6], deg[6]));
}

}  // namespace
}  // namespace cra::feat
