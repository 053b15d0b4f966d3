#!/usr/bin/env python3
# Copyright 2026 The CRA Authors
# SPDX-License-Identifier: Apache-2.0
"""Independent reference for the circular fingerprint.

Parses SMILES with a separate regex tokenizer and recomputes the hashed
fingerprint bit indices. Writes the golden files consumed by the C++ tests:

    python3 fingerprint_oracle.py ../golden
"""

import re
import sys

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK = (1 << 64) - 1

ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn "
    "Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce "
    "Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn "
    "Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl "
    "Mc Lv Ts Og"
).split()
Z = {sym: i + 1 for i, sym in enumerate(ELEMENTS)}

TOKEN = re.compile(r"(\[[^\]]+\]|Cl|Br|[BCNOPSFI]|[bcnops]|[-=#:/\\]|\(|\)|%\d\d|\d|\.)")
BRACKET = re.compile(
    r"^\[(?P<iso>\d+)?(?P<sym>se|as|te|[bcnops]|[A-Z][a-z]?)"
    r"(?P<chiral>@@|@)?(?P<h>H\d*)?(?P<charge>[+-]\d*|\++|-+)?(?::\d+)?\]$"
)
ORDER = {"-": 1, "/": 1, "\\": 1, "=": 2, "#": 3, ":": 4}


def fnv(data):
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK
    return h


def le64(v):
    return [(v >> (8 * i)) & 0xFF for i in range(8)]


def parse_atom(tok):
    if not tok.startswith("["):
        return {"z": Z[tok.capitalize()], "arom": tok.islower(), "charge": 0, "h": None}
    m = BRACKET.match(tok)
    if not m:
        raise ValueError("bad bracket atom " + tok)
    sym = m.group("sym")
    if sym[0].isupper() and len(sym) == 2 and sym not in Z:
        raise ValueError("unsupported two-letter symbol " + sym)
    h = m.group("h")
    hcount = 0 if h is None else (1 if h == "H" else int(h[1:]))
    ch = m.group("charge") or ""
    if not ch:
        charge = 0
    elif ch[1:].isdigit():
        charge = int(ch[1:]) * (1 if ch[0] == "+" else -1)
    else:
        charge = len(ch) * (1 if ch[0] == "+" else -1)
    return {"z": Z[sym.capitalize()], "arom": sym.islower(), "charge": charge, "h": hcount}


def parse(smiles):
    atoms, bonds = [], []
    prev, pending, stack, rings = None, None, [], {}
    pos = 0
    for m in TOKEN.finditer(smiles):
        if m.start() != pos:
            raise ValueError("unparsed text in " + smiles)
        pos = m.end()
        t = m.group(0)
        if t[0] == "[" or t[0].isalpha():
            atoms.append(parse_atom(t))
            cur = len(atoms) - 1
            if prev is not None:
                order = pending or (4 if atoms[prev]["arom"] and atoms[cur]["arom"] else 1)
                bonds.append((prev, cur, order))
            prev, pending = cur, None
        elif t in ORDER:
            pending = ORDER[t]
        elif t == "(":
            stack.append(prev)
        elif t == ")":
            prev = stack.pop()
        elif t == ".":
            prev = None
        else:
            label = t.lstrip("%")
            if label in rings:
                other, order = rings.pop(label)
                order = pending or order or (4 if atoms[other]["arom"] and atoms[prev]["arom"] else 1)
                bonds.append((other, prev, order))
            else:
                rings[label] = (prev, pending)
            pending = None
    if pos != len(smiles) or rings or stack:
        raise ValueError("incomplete SMILES " + smiles)
    return atoms, bonds


def fingerprint(smiles, radius=2, nbits=2048):
    atoms, bonds = parse(smiles)
    nbrs = [[] for _ in atoms]
    for a, b, order in bonds:
        nbrs[a].append((b, order))
        nbrs[b].append((a, order))
    bits = set()
    inv = []
    for i, a in enumerate(atoms):
        h = 255 if a["h"] is None else min(a["h"], 254)
        inv.append(fnv([a["z"], min(len(nbrs[i]), 255), a["charge"] + 9, int(a["arom"]), h]))
    bits.update(v % nbits for v in inv)
    for _ in range(radius):
        nxt = []
        for i in range(len(atoms)):
            env = sorted((order, inv[j]) for j, order in nbrs[i])
            data = le64(inv[i])
            for order, v in env:
                data += [order] + le64(v)
            nxt.append(fnv(data))
        inv = nxt
        bits.update(v % nbits for v in inv)
    return sorted(bits)


MOLECULES = [
    "CCO",
    "c1ccccc1",
    "CC(=O)Oc1ccccc1C(=O)O",
    "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
    "C[N+](C)(C)C",
    "[O-]C(=O)C.[Na+]",
    "Cl[13CH2]C(F)(F)S(=O)(=O)O",
    "c1ccc2c(c1)[nH]c1ccccc12",
    "N#CC%10CCCCC%10",
    "OC[C@H]1OC(O)[C@H](O)[C@@H](O)[C@@H]1O",
]


# (atomic number, degree, charge, aromatic, explicit H or None)
INVARIANTS = [
    (6, 1, 0, False, None),
    (6, 2, 0, False, None),
    (6, 2, 0, True, None),
    (7, 3, 1, False, 0),
    (8, 1, -1, False, 0),
    (7, 2, 0, True, 1),
]


def main():
    outdir = sys.argv[1] if len(sys.argv) > 1 else "."
    with open(outdir + "/fingerprints.tsv", "w") as out:
        out.write("# smiles\tradius\tnbits\tset bits\n")
        for s in MOLECULES:
            out.write("%s\t2\t2048\t%s\n" % (s, ",".join(str(b) for b in fingerprint(s))))
    with open(outdir + "/atom_invariants.tsv", "w") as out:
        out.write("# atomic_number\tdegree\tcharge\taromatic\texplicit_h\tinvariant\n")
        for z, deg, charge, arom, h in INVARIANTS:
            hb = 255 if h is None else h
            v = fnv([z, deg, charge + 9, int(arom), hb])
            out.write("%d\t%d\t%d\t%d\t%s\t%d\n" % (z, deg, charge, int(arom), "none" if h is None else h, v))


if __name__ == "__main__":
    main()
