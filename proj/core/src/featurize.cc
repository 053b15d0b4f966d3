// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/featurize.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include "json.hpp"

#include "cra/binary_io.h"
#include "cra/hash.h"

namespace cra::feat {

std::uint64_t atom_invariant(const chem::Atom& atom, std::size_t degree) {
  const std::array<std::uint8_t, 5> bytes = {
      atom.atomic_number,
      static_cast<std::uint8_t>(std::min<std::size_t>(degree, 255)),
      static_cast<std::uint8_t>(atom.formal_charge + 9),
      static_cast<std::uint8_t>(atom.aromatic ? 1 : 0),
      static_cast<std::uint8_t>(atom.explicit_h ? std::min(*atom.explicit_h, 254) : 255),
  };
  return fnv1a64(bytes);
}

std::vector<std::uint8_t> circular_fingerprint(const chem::MolGraph& mol, int radius,
                                               std::size_t nbits) {
  if (nbits == 0 || !std::has_single_bit(nbits)) {
    throw std::invalid_argument("circular_fingerprint: nbits must be a power of two");
  }
  if (radius < 0) throw std::invalid_argument("circular_fingerprint: negative radius");
  std::vector<std::uint8_t> bits(nbits, 0);
  const auto degrees = mol.degrees();
  const auto adj = mol.adjacency();
  std::vector<std::uint64_t> inv(mol.atoms.size());
  for (std::size_t v = 0; v < mol.atoms.size(); ++v) {
    inv[v] = atom_invariant(mol.atoms[v], degrees[v]);
    bits[inv[v] % nbits] = 1;
  }
  std::vector<std::pair<std::uint8_t, std::uint64_t>> env;
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(inv.size());
    for (std::size_t v = 0; v < inv.size(); ++v) {
      env.clear();
      for (const auto& [u, order] : adj[v]) env.emplace_back(static_cast<std::uint8_t>(order), inv[u]);
      std::sort(env.begin(), env.end());
      Fnv1a h;
      h.update_u64(inv[v]);
      for (const auto& [code, ninv] : env) {
        h.update_byte(code);
        h.update_u64(ninv);
      }
      next[v] = h.value();
      bits[next[v] % nbits] = 1;
    }
    inv = std::move(next);
  }
  return bits;
}

std::vector<std::size_t> set_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out.push_back(i);
  }
  return out;
}

Descriptors descriptors(const chem::MolGraph& mol) {
  const double n = static_cast<double>(mol.atoms.size());
  std::size_t aromatic = 0;
  std::size_t hetero = 0;
  for (const auto& a : mol.atoms) {
    aromatic += a.aromatic ? 1 : 0;
    hetero += (a.element != "C" && a.element != "H") ? 1 : 0;
  }
  const double bonds = static_cast<double>(mol.bonds.size());
  return {n,
          bonds,
          static_cast<double>(mol.cycle_rank()),
          n > 0 ? static_cast<double>(aromatic) / n : 0.0,
          n > 0 ? static_cast<double>(hetero) / n : 0.0,
          n > 0 ? 2.0 * bonds / n : 0.0};
}

NormStats fit_normalize(std::span<const Descriptors> train) {
  if (train.empty()) throw EmptyTrainingSetError();
  NormStats stats;
  stats.mean.assign(kDescriptorCount, 0.0);
  stats.std.assign(kDescriptorCount, 0.0);
  const double n = static_cast<double>(train.size());
  for (const auto& d : train) {
    for (std::size_t k = 0; k < kDescriptorCount; ++k) stats.mean[k] += d[k];
  }
  for (auto& m : stats.mean) m /= n;
  for (const auto& d : train) {
    for (std::size_t k = 0; k < kDescriptorCount; ++k) {
      const double c = d[k] - stats.mean[k];
      stats.std[k] += c * c;
    }
  }
  for (auto& s : stats.std) s = std::max(std::sqrt(s / n), kStdFloor);
  return stats;
}

FeatureVector apply_normalize(std::span<const std::uint8_t> bits, const Descriptors& raw,
                              const NormStats& stats) {
  if (stats.mean.size() != kDescriptorCount || stats.std.size() != kDescriptorCount) {
    throw std::invalid_argument("apply_normalize: stats have the wrong length");
  }
  FeatureVector fv;
  fv.bits.assign(bits.begin(), bits.end());
  fv.descriptors.resize(kDescriptorCount);
  for (std::size_t k = 0; k < kDescriptorCount; ++k) {
    fv.descriptors[k] = (raw[k] - stats.mean[k]) / stats.std[k];
  }
  fv.combined.reserve(bits.size() + kDescriptorCount);
  for (auto b : bits) fv.combined.push_back(b ? 1.0 : 0.0);
  fv.combined.insert(fv.combined.end(), fv.descriptors.begin(), fv.descriptors.end());
  return fv;
}

double tanimoto(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("tanimoto: length mismatch");
  std::size_t both = 0;
  std::size_t either = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    both += (a[i] && b[i]) ? 1 : 0;
    either += (a[i] || b[i]) ? 1 : 0;
  }
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

double continuous_tanimoto(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("continuous_tanimoto: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  const double denom = aa + bb - ab;
  return denom <= 0.0 ? 1.0 : ab / denom;
}

std::array<double, kAtomFeatureDim> atom_features(const chem::Atom& atom, std::size_t degree) {
  // element (12) | degree 0..5 (6) | aromatic (1) | charge -,0,+ (3) | H 0..3 (4)
  static constexpr std::array<std::string_view, 11> kElems = {"C", "N", "O", "S", "F", "Cl",
                                                              "Br", "I", "P", "B", "H"};
  std::array<double, kAtomFeatureDim> f{};
  std::size_t slot = 11;
  for (std::size_t i = 0; i < kElems.size(); ++i) {
    if (atom.element == kElems[i]) slot = i;
  }
  f[slot] = 1.0;
  f[12 + std::min<std::size_t>(degree, 5)] = 1.0;
  f[18] = atom.aromatic ? 1.0 : 0.0;
  f[19 + (atom.formal_charge < 0 ? 0 : atom.formal_charge == 0 ? 1 : 2)] = 1.0;
  f[22 + static_cast<std::size_t>(std::clamp(atom.explicit_h.value_or(0), 0, 3))] = 1.0;
  return f;
}

void write_feature_container(const std::string& path, const ad::Matrix& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  io::write_magic(out, "CRAF");
  io::write_u32(out, kContainerVersion);
  io::write_u64(out, rows.rows());
  io::write_u64(out, rows.cols());
  for (double v : rows.values()) io::write_f64(out, v);
  if (!out) throw std::runtime_error("write failed: " + path);
}

ad::Matrix read_feature_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  io::expect_magic(in, "CRAF", path);
  const auto version = io::read_u32(in);
  if (version != kContainerVersion) {
    throw std::runtime_error(path + ": unsupported container version " + std::to_string(version));
  }
  const auto count = io::read_u64(in);
  const auto dim = io::read_u64(in);
  std::vector<double> values(count * dim);
  for (auto& v : values) v = io::read_f64(in);
  return ad::Matrix(count, dim, std::move(values));
}

std::string norm_stats_to_json(const NormStats& stats) {
  nlohmann::json j;
  j["mean"] = stats.mean;
  j["std"] = stats.std;
  return j.dump(2);
}

NormStats norm_stats_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  NormStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std = j.at("std").get<std::vector<double>>();
  if (s.mean.size() != kDescriptorCount || s.std.size() != kDescriptorCount) {
    throw std::invalid_argument("norm stats: expected " + std::to_string(kDescriptorCount) + " entries");
  }
  return s;
}

}  // namespace cra::feat
