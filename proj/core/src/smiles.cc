// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/smiles.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace cra::chem {

namespace {

constexpr std::array<std::string_view, 118> kElements = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si", "P",
    "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh",
    "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re",
    "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db",
    "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

// Lowercase forms allowed for aromatic atoms inside brackets.
constexpr std::array<std::string_view, 9> kBracketAromatic = {"se", "as", "te", "b", "c",
                                                               "n",  "o",  "p",  "s"};

bool is_organic_aromatic(char c) {
  return c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's';
}

std::string capitalise(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

BondOrder bond_from_symbol(char c) {
  switch (c) {
    case '=': return BondOrder::kDouble;
    case '#': return BondOrder::kTriple;
    case ':': return BondOrder::kAromatic;
    default: return BondOrder::kSingle;
  }
}

Atom decode_bracket(const Token& tok, std::size_t& stereo) {
  const std::string_view body = std::string_view(tok.text).substr(1, tok.text.size() - 2);
  std::size_t i = 0;
  auto fail = [&](const std::string& what) {
    return SmilesError(SmilesError::Kind::kInvalidBracketAtom, tok.position + 1 + i,
                       what + " in " + tok.text);
  };
  Atom atom;
  if (i < body.size() && is_digit(body[i])) {
    int iso = 0;
    while (i < body.size() && is_digit(body[i])) iso = iso * 10 + (body[i++] - '0');
    if (iso <= 0) throw fail("non-positive isotope");
    atom.isotope = iso;
  }
  // Element symbol: aromatic lowercase forms, then two letters, then one.
  bool matched = false;
  for (std::string_view arom : kBracketAromatic) {
    if (body.substr(i, arom.size()) == arom) {
      atom.element = capitalise(arom);
      atom.aromatic = true;
      i += arom.size();
      matched = true;
      break;
    }
  }
  if (!matched && i < body.size() && std::isupper(static_cast<unsigned char>(body[i]))) {
    if (i + 1 < body.size() && std::islower(static_cast<unsigned char>(body[i + 1])) &&
        atomic_number(body.substr(i, 2))) {
      atom.element = std::string(body.substr(i, 2));
      i += 2;
      matched = true;
    } else if (atomic_number(body.substr(i, 1))) {
      atom.element = std::string(body.substr(i, 1));
      i += 1;
      matched = true;
    }
  }
  if (!matched) throw fail("unknown element");
  atom.atomic_number = *atomic_number(atom.element);
  if (i < body.size() && body[i] == '@') {
    ++stereo;
    ++i;
    if (i < body.size() && body[i] == '@') {
      ++i;
    } else if (i + 1 < body.size() && std::isupper(static_cast<unsigned char>(body[i])) &&
               std::isupper(static_cast<unsigned char>(body[i + 1])) && body[i] != 'H') {
      i += 2;
      while (i < body.size() && is_digit(body[i])) ++i;
    }
  }
  atom.explicit_h = 0;
  if (i < body.size() && body[i] == 'H') {
    ++i;
    int h = 1;
    if (i < body.size() && is_digit(body[i])) {
      h = 0;
      while (i < body.size() && is_digit(body[i])) h = h * 10 + (body[i++] - '0');
    }
    atom.explicit_h = h;
  }
  if (i < body.size() && (body[i] == '+' || body[i] == '-')) {
    const char sign = body[i++];
    int magnitude = 1;
    if (i < body.size() && is_digit(body[i])) {
      magnitude = 0;
      while (i < body.size() && is_digit(body[i])) magnitude = magnitude * 10 + (body[i++] - '0');
    } else {
      while (i < body.size() && body[i] == sign) {
        ++magnitude;
        ++i;
      }
    }
    if (magnitude > 9) throw fail("formal charge beyond +/-9");
    atom.formal_charge = sign == '+' ? magnitude : -magnitude;
  }
  if (i < body.size() && body[i] == ':') {
    ++i;
    const std::size_t start = i;
    while (i < body.size() && is_digit(body[i])) ++i;
    if (i == start) throw fail("empty atom class");
  }
  if (i != body.size()) throw fail("unexpected character");
  return atom;
}

BondOrder default_order(const Atom& a, const Atom& b) {
  return a.aromatic && b.aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
}

}  // namespace

SmilesError::SmilesError(Kind kind, std::size_t position, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + " at position " + std::to_string(position) +
                         (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      position_(position) {}

const char* to_string(SmilesError::Kind kind) {
  switch (kind) {
    case SmilesError::Kind::kEmptyInput: return "EmptyInput";
    case SmilesError::Kind::kUnknownCharacter: return "UnknownCharacter";
    case SmilesError::Kind::kUnterminatedBracket: return "UnterminatedBracket";
    case SmilesError::Kind::kInvalidBracketAtom: return "InvalidBracketAtom";
    case SmilesError::Kind::kUnmatchedRingClosure: return "UnmatchedRingClosure";
    case SmilesError::Kind::kDanglingBond: return "DanglingBond";
    case SmilesError::Kind::kUnbalancedBranch: return "UnbalancedBranch";
    case SmilesError::Kind::kDuplicateBond: return "DuplicateBond";
  }
  return "SmilesError";
}

std::optional<std::uint8_t> atomic_number(std::string_view symbol) {
  for (std::size_t i = 0; i < kElements.size(); ++i) {
    if (kElements[i] == symbol) return static_cast<std::uint8_t>(i + 1);
  }
  return std::nullopt;
}

std::vector<Token> tokenize(std::string_view s) {
  if (s.empty()) throw SmilesError(SmilesError::Kind::kEmptyInput, 0, "");
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const std::size_t pos = i;
    if (c == '[') {
      const std::size_t close = s.find(']', i);
      if (close == std::string_view::npos) {
        throw SmilesError(SmilesError::Kind::kUnterminatedBracket, pos, "");
      }
      out.push_back({TokenKind::kBracketAtom, std::string(s.substr(i, close - i + 1)), pos});
      i = close + 1;
    } else if ((c == 'C' && i + 1 < s.size() && s[i + 1] == 'l') ||
               (c == 'B' && i + 1 < s.size() && s[i + 1] == 'r')) {
      out.push_back({TokenKind::kOrganicAtom, std::string(s.substr(i, 2)), pos});
      i += 2;
    } else if (c == 'B' || c == 'C' || c == 'N' || c == 'O' || c == 'P' || c == 'S' || c == 'F' ||
               c == 'I' || is_organic_aromatic(c)) {
      out.push_back({TokenKind::kOrganicAtom, std::string(1, c), pos});
      ++i;
    } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\') {
      out.push_back({TokenKind::kBond, std::string(1, c), pos});
      ++i;
    } else if (c == '(') {
      out.push_back({TokenKind::kBranchOpen, "(", pos});
      ++i;
    } else if (c == ')') {
      out.push_back({TokenKind::kBranchClose, ")", pos});
      ++i;
    } else if (is_digit(c)) {
      out.push_back({TokenKind::kRingClosure, std::string(1, c), pos});
      ++i;
    } else if (c == '%') {
      if (i + 2 >= s.size() || !is_digit(s[i + 1]) || !is_digit(s[i + 2])) {
        throw SmilesError(SmilesError::Kind::kUnknownCharacter, pos, "'%' must be followed by two digits");
      }
      out.push_back({TokenKind::kRingClosure, std::string(s.substr(i, 3)), pos});
      i += 3;
    } else if (c == '.') {
      out.push_back({TokenKind::kDot, ".", pos});
      ++i;
    } else {
      throw SmilesError(SmilesError::Kind::kUnknownCharacter, pos,
                        std::string("'") + c + "'");
    }
  }
  return out;
}

MolGraph parse(const std::vector<Token>& tokens, std::string_view source) {
  if (tokens.empty()) throw SmilesError(SmilesError::Kind::kEmptyInput, 0, "");
  MolGraph mol;
  mol.source = std::string(source);

  struct PendingBond {
    BondOrder order;
    std::size_t position;
  };
  struct OpenRing {
    std::size_t atom;
    std::optional<BondOrder> order;
    std::size_t position;
  };

  std::optional<std::size_t> prev;
  std::optional<PendingBond> pending;
  std::vector<std::size_t> branches;
  std::map<std::string, OpenRing> rings;
  std::set<std::pair<std::size_t, std::size_t>> bonded;

  auto add_bond = [&](std::size_t a, std::size_t b, BondOrder order, std::size_t position) {
    const auto key = std::minmax(a, b);
    if (!bonded.insert(key).second) {
      throw SmilesError(SmilesError::Kind::kDuplicateBond, position,
                        "atoms " + std::to_string(a) + " and " + std::to_string(b));
    }
    mol.bonds.push_back({a, b, order});
  };

  for (const Token& tok : tokens) {
    switch (tok.kind) {
      case TokenKind::kOrganicAtom:
      case TokenKind::kBracketAtom: {
        Atom atom;
        if (tok.kind == TokenKind::kOrganicAtom) {
          atom.aromatic = is_organic_aromatic(tok.text[0]);
          atom.element = capitalise(tok.text);
          atom.atomic_number = *atomic_number(atom.element);
        } else {
          atom = decode_bracket(tok, mol.stereo_discarded);
        }
        mol.atoms.push_back(std::move(atom));
        const std::size_t idx = mol.atoms.size() - 1;
        if (prev) {
          const BondOrder order =
              pending ? pending->order : default_order(mol.atoms[*prev], mol.atoms[idx]);
          add_bond(*prev, idx, order, tok.position);
        } else if (pending) {
          throw SmilesError(SmilesError::Kind::kDanglingBond, pending->position, "no atom before bond");
        }
        pending.reset();
        prev = idx;
        break;
      }
      case TokenKind::kBond: {
        if (!prev || pending) {
          throw SmilesError(SmilesError::Kind::kDanglingBond, tok.position, "bond '" + tok.text + "'");
        }
        if (tok.text == "/" || tok.text == "\\") ++mol.stereo_discarded;
        pending = PendingBond{bond_from_symbol(tok.text[0]), tok.position};
        break;
      }
      case TokenKind::kBranchOpen: {
        if (!prev) throw SmilesError(SmilesError::Kind::kUnbalancedBranch, tok.position, "branch without atom");
        if (pending) throw SmilesError(SmilesError::Kind::kDanglingBond, pending->position, "bond before '('");
        branches.push_back(*prev);
        break;
      }
      case TokenKind::kBranchClose: {
        if (branches.empty()) throw SmilesError(SmilesError::Kind::kUnbalancedBranch, tok.position, "unmatched ')'");
        if (pending) throw SmilesError(SmilesError::Kind::kDanglingBond, pending->position, "bond before ')'");
        prev = branches.back();
        branches.pop_back();
        break;
      }
      case TokenKind::kRingClosure: {
        if (!prev) {
          throw SmilesError(SmilesError::Kind::kDanglingBond, tok.position, "ring closure without atom");
        }
        const std::string digit = tok.text[0] == '%' ? tok.text.substr(1) : tok.text;
        auto it = rings.find(digit);
        if (it == rings.end()) {
          rings.emplace(digit, OpenRing{*prev, pending ? std::optional(pending->order) : std::nullopt,
                                        tok.position});
        } else {
          const OpenRing open = it->second;
          rings.erase(it);
          if (open.atom == *prev) {
            throw SmilesError(SmilesError::Kind::kUnmatchedRingClosure, tok.position,
                              "ring " + digit + " closes on its own atom");
          }
          std::optional<BondOrder> order = open.order;
          if (pending) {
            if (order && *order != pending->order) {
              throw SmilesError(SmilesError::Kind::kUnmatchedRingClosure, tok.position,
                                "conflicting bond orders on ring " + digit);
            }
            order = pending->order;
          }
          add_bond(open.atom, *prev,
                   order.value_or(default_order(mol.atoms[open.atom], mol.atoms[*prev])),
                   tok.position);
        }
        pending.reset();
        break;
      }
      case TokenKind::kDot: {
        if (pending) throw SmilesError(SmilesError::Kind::kDanglingBond, pending->position, "bond before '.'");
        prev.reset();
        break;
      }
    }
  }
  if (pending) throw SmilesError(SmilesError::Kind::kDanglingBond, pending->position, "trailing bond");
  if (!branches.empty()) {
    throw SmilesError(SmilesError::Kind::kUnbalancedBranch, tokens.back().position, "unclosed '('");
  }
  if (!rings.empty()) {
    const auto& [digit, open] = *rings.begin();
    throw SmilesError(SmilesError::Kind::kUnmatchedRingClosure, open.position, "ring " + digit + " never closed");
  }
  if (mol.atoms.empty()) throw SmilesError(SmilesError::Kind::kEmptyInput, 0, "no atoms");
  return mol;
}

std::size_t MolGraph::component_count() const {
  std::vector<std::size_t> parent(atoms.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t comps = atoms.size();
  for (const auto& b : bonds) {
    const auto ra = find(b.a);
    const auto rb = find(b.b);
    if (ra != rb) {
      parent[ra] = rb;
      --comps;
    }
  }
  return comps;
}

std::size_t MolGraph::cycle_rank() const {
  return bonds.size() + component_count() - atoms.size();
}

std::vector<std::size_t> MolGraph::degrees() const {
  std::vector<std::size_t> deg(atoms.size(), 0);
  for (const auto& b : bonds) {
    ++deg[b.a];
    ++deg[b.b];
  }
  return deg;
}

std::vector<std::vector<std::pair<std::size_t, BondOrder>>> MolGraph::adjacency() const {
  std::vector<std::vector<std::pair<std::size_t, BondOrder>>> adj(atoms.size());
  for (const auto& b : bonds) {
    adj[b.a].emplace_back(b.b, b.order);
    adj[b.b].emplace_back(b.a, b.order);
  }
  return adj;
}

namespace {

bool organic_writable(const Atom& a) {
  if (a.explicit_h || a.isotope || a.formal_charge != 0) return false;
  static const std::set<std::string> kOrganic = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"};
  static const std::set<std::string> kAromatic = {"B", "C", "N", "O", "P", "S"};
  return a.aromatic ? kAromatic.count(a.element) > 0 : kOrganic.count(a.element) > 0;
}

std::string atom_text(const Atom& a) {
  std::string sym = a.element;
  if (a.aromatic) {
    for (auto& ch : sym) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  if (organic_writable(a)) return sym;
  std::string out = "[";
  if (a.isotope) out += std::to_string(*a.isotope);
  out += sym;
  const int h = a.explicit_h.value_or(0);
  if (h > 0) out += "H" + (h > 1 ? std::to_string(h) : std::string());
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? "+" : "-";
    const int m = std::abs(a.formal_charge);
    if (m > 1) out += std::to_string(m);
  }
  return out + "]";
}

const char* bond_text(BondOrder o) {
  switch (o) {
    case BondOrder::kSingle: return "-";
    case BondOrder::kDouble: return "=";
    case BondOrder::kTriple: return "#";
    case BondOrder::kAromatic: return ":";
  }
  return "-";
}

std::string ring_label(int n) { return n < 10 ? std::to_string(n) : "%" + std::to_string(n); }

}  // namespace

std::string write_smiles(const MolGraph& mol) {
  const std::size_t n = mol.atoms.size();
  // Pass 1: DFS tree; non-tree edges become ring closures.
  std::vector<std::vector<std::size_t>> incident(n);
  for (std::size_t e = 0; e < mol.bonds.size(); ++e) {
    incident[mol.bonds[e].a].push_back(e);
    incident[mol.bonds[e].b].push_back(e);
  }
  std::vector<int> order(n, -1);
  std::vector<std::vector<std::size_t>> children(n);  // (bond index) per atom
  std::vector<unsigned char> tree_edge(mol.bonds.size(), 0);
  std::vector<std::size_t> roots;
  int counter = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (order[start] >= 0) continue;
    roots.push_back(start);
    std::vector<std::pair<std::size_t, std::size_t>> stack{{start, 0}};
    order[start] = counter++;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next == incident[v].size()) {
        stack.pop_back();
        continue;
      }
      const std::size_t e = incident[v][next++];
      const std::size_t u = mol.bonds[e].a == v ? mol.bonds[e].b : mol.bonds[e].a;
      if (order[u] >= 0) continue;
      order[u] = counter++;
      tree_edge[e] = 1;
      children[v].push_back(e);
      stack.push_back({u, 0});
    }
  }
  // Pass 2: emit.
  std::vector<int> ring_of_edge(mol.bonds.size(), 0);
  std::set<int> free_labels;
  int next_label = 1;
  std::vector<unsigned char> emitted(n, 0);
  std::string out;

  auto emit = [&](auto&& self, std::size_t v) -> void {
    out += atom_text(mol.atoms[v]);
    emitted[v] = 1;
    for (std::size_t e : incident[v]) {
      if (tree_edge[e]) continue;
      const std::size_t u = mol.bonds[e].a == v ? mol.bonds[e].b : mol.bonds[e].a;
      if (emitted[u] && u != v && ring_of_edge[e] > 0) {
        out += ring_label(ring_of_edge[e]);
        free_labels.insert(ring_of_edge[e]);
        ring_of_edge[e] = -1;
      } else if (ring_of_edge[e] == 0) {
        int label;
        if (!free_labels.empty()) {
          label = *free_labels.begin();
          free_labels.erase(free_labels.begin());
        } else {
          label = next_label++;
        }
        ring_of_edge[e] = label;
        out += bond_text(mol.bonds[e].order);
        out += ring_label(label);
      }
    }
    for (std::size_t k = 0; k < children[v].size(); ++k) {
      const std::size_t e = children[v][k];
      const std::size_t u = mol.bonds[e].a == v ? mol.bonds[e].b : mol.bonds[e].a;
      const bool last = k + 1 == children[v].size();
      if (!last) out += "(";
      out += bond_text(mol.bonds[e].order);
      self(self, u);
      if (!last) out += ")";
    }
  };
  for (std::size_t k = 0; k < roots.size(); ++k) {
    if (k > 0) out += ".";
    emit(emit, roots[k]);
  }
  return out;
}

SmilesFile read_smiles_text(std::string_view text) {
  SmilesFile file;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_number;
    start = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    SmilesLine entry;
    entry.line_number = line_number;
    const std::size_t tab = line.find('\t');
    entry.smiles = std::string(line.substr(0, tab));
    entry.id = tab == std::string_view::npos ? "L" + std::to_string(line_number)
                                             : std::string(line.substr(tab + 1));
    try {
      file.molecules.push_back(parse_smiles(entry.smiles));
      file.lines.push_back(std::move(entry));
    } catch (const SmilesError& e) {
      file.errors.push_back({line_number, e.what()});
    }
    if (end == text.size()) break;
  }
  return file;
}

SmilesFile read_smiles_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_smiles_text(ss.str());
}

}  // namespace cra::chem
