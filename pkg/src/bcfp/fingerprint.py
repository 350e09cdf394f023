"""Atom-centered (ECFP) and bond-centered (BCFP) circular substructure keys.

Both generators return count multisets of 64-bit keys.  Keys only depend on
the chemical environment, never on atom or bond numbering.

Hash layouts (tag, value), see :mod:`bcfp.hashing`:

* atom invariant:  1 atomic number, 2 heavy degree, 3 formal charge,
  4 total H, 5 in-ring, 6 aromatic
* bond invariant:  1 order, 2 in-ring, 3 smaller endpoint key, 4 larger endpoint key
* ECFP update:     1 iteration, 2 center key, then per sorted neighbor
  3 bond order, 4 neighbor key
* BCFP update:     1 iteration, 2 center key, then 3 neighbor-bond key per sorted neighbor
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from bcfp.hashing import RowBuilder, hash_fields
from bcfp.smiles import Atom, Bond, Molecule

SCHEMES = ("ecfp", "bcfp")
KeyMultiset = Counter


@dataclass(frozen=True, slots=True)
class EnvironmentRecord:
    center: int
    radius: int
    key: int
    bond_mask: int

    @property
    def bond_set(self) -> frozenset[int]:
        m, out, i = self.bond_mask, [], 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return frozenset(out)


def _atom_fields(atom: Atom):
    return ((1, atom.element), (2, atom.degree), (3, atom.formal_charge),
            (4, atom.total_h), (5, int(atom.in_ring)), (6, int(atom.aromatic)))


def _bond_fields(bond: Bond, akeys: Sequence[int]):
    a, b = akeys[bond.begin], akeys[bond.end]
    lo, hi = (a, b) if a <= b else (b, a)
    return ((1, int(bond.order)), (2, int(bond.in_ring)), (3, lo), (4, hi))


def atom_invariant(atom: Atom, mol: Molecule | None = None) -> int:
    return hash_fields(_atom_fields(atom))


def bond_invariant(bond: Bond, mol: Molecule) -> int:
    akeys = {i: atom_invariant(mol.atoms[i]) for i in bond.endpoints}
    return hash_fields(_bond_fields(bond, akeys))


def atom_invariants(mol: Molecule) -> list[int]:
    rb = RowBuilder()
    for atom in mol.atoms:
        rb.add(_atom_fields(atom))
    return rb.hash()


def bond_invariants(mol: Molecule, akeys: Sequence[int] | None = None) -> list[int]:
    if akeys is None:
        akeys = atom_invariants(mol)
    rb = RowBuilder()
    for bond in mol.bonds:
        rb.add(_bond_fields(bond, akeys))
    return rb.hash()


def _ecfp_step(mol: Molecule, keys: list[int], k: int) -> list[int]:
    rb = RowBuilder()
    for i in range(mol.n_atoms):
        nbrs = sorted((int(mol.bonds[b].order), keys[j]) for b, j in mol.neighbors(i))
        fields = [(1, k), (2, keys[i])]
        for order, nk in nbrs:
            fields.append((3, order))
            fields.append((4, nk))
        rb.add(fields)
    return rb.hash()


def refine_atom_ids(mol: Molecule) -> list[int]:
    """Iterate the ECFP identifier update until the atom partition is stable."""
    keys = atom_invariants(mol)
    n_classes = len(set(keys))
    for k in range(1, mol.n_atoms + 1):
        new = _ecfp_step(mol, keys, k)
        n_new = len(set(new))
        if n_new == n_classes:
            break
        keys, n_classes = new, n_new
    return keys


def _check_radius(r: int) -> None:
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")


def _dedup(records: list, centers_masks: Iterable[tuple[int, int, int]], k: int) -> None:
    # Among environments sharing a bond set the smallest key survives (then the
    # lowest center); picking by index alone would depend on atom numbering.
    best: dict[int, tuple[int, int]] = {}
    for center, key, mask in centers_masks:
        if mask and (mask not in best or (key, center) < best[mask]):
            best[mask] = (key, center)
    for mask, (key, center) in sorted(best.items(), key=lambda kv: kv[1][1]):
        records.append(EnvironmentRecord(center, k, key, mask))


def ecfp_environments(mol: Molecule, r: int) -> list[EnvironmentRecord]:
    """Atom environments for iterations ``0..r`` after duplicate removal.

    Radius 0 keeps every atom.  From iteration 1 on, atoms without bonds add no
    record, and environments covering an identical bond set within one
    iteration are collapsed onto the one with the smallest key.
    """
    _check_radius(r)
    keys = atom_invariants(mol)
    records = [EnvironmentRecord(i, 0, keys[i], 0) for i in range(mol.n_atoms)]
    masks = [0] * mol.n_atoms
    for k in range(1, r + 1):
        new_keys = _ecfp_step(mol, keys, k)
        new_masks = []
        for i in range(mol.n_atoms):
            m = masks[i]
            for b, j in mol.neighbors(i):
                m |= masks[j] | (1 << b)
            new_masks.append(m)
        _dedup(records, zip(range(mol.n_atoms), new_keys, new_masks), k)
        keys, masks = new_keys, new_masks
    return records


def bond_neighbors(mol: Molecule, b: int) -> list[int]:
    """Bonds sharing exactly one endpoint with bond ``b``."""
    bond = mol.bonds[b]
    return [e for a in bond.endpoints for e in mol.adjacency[a] if e != b]


def bcfp_environments(mol: Molecule, r: int) -> list[EnvironmentRecord]:
    """Bond environments for iterations ``0..r``; same dedup rule as ECFP."""
    _check_radius(r)
    keys = bond_invariants(mol)
    nb = mol.n_bonds
    records = [EnvironmentRecord(b, 0, keys[b], 1 << b) for b in range(nb)]
    masks = [1 << b for b in range(nb)]
    neighbors = [bond_neighbors(mol, b) for b in range(nb)]
    for k in range(1, r + 1):
        rb = RowBuilder()
        new_masks = []
        for b in range(nb):
            fields = [(1, k), (2, keys[b])]
            fields.extend((3, nk) for nk in sorted(keys[e] for e in neighbors[b]))
            rb.add(fields)
            m = masks[b]
            for e in neighbors[b]:
                m |= masks[e]
            new_masks.append(m)
        new_keys = rb.hash()
        _dedup(records, zip(range(nb), new_keys, new_masks), k)
        keys, masks = new_keys, new_masks
    return records


def _count(records: Iterable[EnvironmentRecord], r: int | None = None) -> KeyMultiset:
    return Counter(rec.key for rec in records if r is None or rec.radius <= r)


def ecfp_keys(mol: Molecule, r: int) -> KeyMultiset:
    return _count(ecfp_environments(mol, r))


def bcfp_keys(mol: Molecule, r: int) -> KeyMultiset:
    return _count(bcfp_environments(mol, r))


ENVIRONMENTS = {"ecfp": ecfp_environments, "bcfp": bcfp_environments}


class KeyTable:
    """Environments of a molecule list, generated once up to ``max_radius``.

    Records at radius ``k`` do not depend on the requested maximum, so any
    ``r <= max_radius`` multiset is a filter over the cached records.
    """

    def __init__(self, molecules: Sequence[Molecule], max_radius: int = 3):
        _check_radius(max_radius)
        self.max_radius = max_radius
        self.n = len(molecules)
        self._records = {s: [ENVIRONMENTS[s](m, max_radius) for m in molecules] for s in SCHEMES}
        self._cache: dict[tuple[str, int], list[KeyMultiset]] = {}

    def multisets(self, scheme: str, r: int) -> list[KeyMultiset]:
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        if not 0 <= r <= self.max_radius:
            raise ValueError(f"radius {r} outside 0..{self.max_radius}")
        key = (scheme, r)
        if key not in self._cache:
            self._cache[key] = [_count(recs, r) for recs in self._records[scheme]]
        return self._cache[key]


def dump_keys(items: Iterable[tuple[str, Molecule]], scheme: str, radius: int, fh: IO[str]) -> int:
    """Write one JSON line per molecule: ``{smiles, scheme, radius, keys: [{key, count}]}``."""
    gen = ENVIRONMENTS[scheme]
    n = 0
    for smiles, mol in items:
        counts = _count(gen(mol, radius))
        keys = [{"key": k, "count": c} for k, c in sorted(counts.items())]
        fh.write(json.dumps({"smiles": smiles, "scheme": scheme, "radius": radius, "keys": keys}) + "\n")
        n += 1
    return n
