// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CRA_SMILES_H_
#define CRA_SMILES_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cra::chem {

enum class BondOrder : std::uint8_t { kSingle = 1, kDouble = 2, kTriple = 3, kAromatic = 4 };

struct Atom {
  std::string element;  // capitalised symbol, e.g. "C", "Cl", "Se"
  std::uint8_t atomic_number = 0;
  int formal_charge = 0;
  std::optional<int> explicit_h;
  bool aromatic = false;
  std::optional<int> isotope;
};

struct Bond {
  std::size_t a = 0;
  std::size_t b = 0;
  BondOrder order = BondOrder::kSingle;
};

struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::string source;
  // Stereo markers (/ \ @) seen and dropped while parsing.
  std::size_t stereo_discarded = 0;

  std::size_t component_count() const;
  // |bonds| - |atoms| + components
  std::size_t cycle_rank() const;
  std::vector<std::size_t> degrees() const;
  // Neighbour lists as (atom, bond order), in bond order of appearance.
  std::vector<std::vector<std::pair<std::size_t, BondOrder>>> adjacency() const;
};

enum class TokenKind {
  kOrganicAtom,
  kBracketAtom,
  kBond,
  kBranchOpen,
  kBranchClose,
  kRingClosure,
  kDot,
};

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t position;  // byte offset into the input
  friend bool operator==(const Token&, const Token&) = default;
};

class SmilesError : public std::runtime_error {
 public:
  enum class Kind {
    kEmptyInput,
    kUnknownCharacter,
    kUnterminatedBracket,
    kInvalidBracketAtom,
    kUnmatchedRingClosure,
    kDanglingBond,
    kUnbalancedBranch,
    kDuplicateBond,
  };

  SmilesError(Kind kind, std::size_t position, const std::string& detail);

  Kind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

const char* to_string(SmilesError::Kind kind);

std::vector<Token> tokenize(std::string_view smiles);
MolGraph parse(const std::vector<Token>& tokens, std::string_view source = {});
inline MolGraph parse_smiles(std::string_view smiles) { return parse(tokenize(smiles), smiles); }

// Non-canonical SMILES in which every atom is bracketed and every bond is
// written explicitly; parse_smiles(write_smiles(g)) reproduces g's atoms
// and bonds up to renumbering.
std::string write_smiles(const MolGraph& mol);

std::optional<std::uint8_t> atomic_number(std::string_view symbol);

// One SMILES per line with an optional tab-separated id.
struct SmilesLine {
  std::size_t line_number = 0;
  std::string id;
  std::string smiles;
};

struct SmilesFileError {
  std::size_t line_number = 0;
  std::string message;
};

struct SmilesFile {
  std::vector<SmilesLine> lines;
  std::vector<MolGraph> molecules;  // aligned with lines
  std::vector<SmilesFileError> errors;
  std::size_t total_lines() const { return lines.size() + errors.size(); }
};

// Blank lines are ignored. Malformed lines land in `errors` and are skipped.
SmilesFile read_smiles_file(const std::string& path);
SmilesFile read_smiles_text(std::string_view text);

}  // namespace cra::chem

#endif  // CRA_SMILES_H_
