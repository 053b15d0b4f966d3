// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_FEATURIZE_H_
#define CRA_FEATURIZE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cra/matrix.h"
#include "cra/smiles.h"

namespace cra::feat {

inline constexpr std::size_t kDescriptorCount = 6;
inline constexpr int kDefaultRadius = 2;
inline constexpr std::size_t kDefaultBits = 2048;
inline constexpr double kStdFloor = 1e-8;

using Descriptors = std::array<double, kDescriptorCount>;

// FNV-1a over the bytes (atomic number, degree, charge + 9, aromatic,
// explicit H or 255), each a single unsigned byte.
std::uint64_t atom_invariant(const chem::Atom& atom, std::size_t degree);

// ECFP-style hashed fingerprint. Round 0 uses atom_invariant; round r
// rehashes (previous invariant, sorted (bond code, neighbour invariant)
// pairs) with integers encoded as 8 little-endian bytes and bond codes as
// one byte (single 1, double 2, triple 3, aromatic 4). Every invariant of
// every round sets bit (invariant mod nbits). nbits must be a power of two.
std::vector<std::uint8_t> circular_fingerprint(const chem::MolGraph& mol,
                                               int radius = kDefaultRadius,
                                               std::size_t nbits = kDefaultBits);

std::vector<std::size_t> set_bits(std::span<const std::uint8_t> bits);

// [atoms, bonds, cycle rank, aromatic fraction, hetero (not C/H) fraction,
//  mean degree]
Descriptors descriptors(const chem::MolGraph& mol);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

class EmptyTrainingSetError : public std::invalid_argument {
 public:
  EmptyTrainingSetError() : std::invalid_argument("EmptyTrainingSet: cannot fit normalisation stats") {}
};

// Population mean and standard deviation, std floored at kStdFloor.
NormStats fit_normalize(std::span<const Descriptors> train);

struct FeatureVector {
  std::vector<std::uint8_t> bits;
  std::vector<double> descriptors;  // normalised
  std::vector<double> combined;     // [bits as reals || descriptors]
};

FeatureVector apply_normalize(std::span<const std::uint8_t> bits, const Descriptors& raw,
                              const NormStats& stats);

double tanimoto(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
// a.b / (|a|^2 + |b|^2 - a.b) for real-valued features; 1 for identical
// non-zero vectors.
double continuous_tanimoto(std::span<const double> a, std::span<const double> b);

// Per-atom input features for the graph encoder.
inline constexpr std::size_t kAtomFeatureDim = 26;
std::array<double, kAtomFeatureDim> atom_features(const chem::Atom& atom, std::size_t degree);

// Binary feature container: "CRAF", u32 version, u64 count, u64 dim, then
// count * dim little-endian f64 values, row-major.
inline constexpr std::uint32_t kContainerVersion = 1;
void write_feature_container(const std::string& path, const ad::Matrix& rows);
ad::Matrix read_feature_container(const std::string& path);

std::string norm_stats_to_json(const NormStats& stats);
NormStats norm_stats_from_json(const std::string& text);

}  // namespace cra::feat

#endif  // CRA_FEATURIZE_H_
