"""SMILES parsing into heavy-atom graphs, ring/aromaticity perception,
graph-invariant hashing, and dataset cleanup.

Only the subset of OpenSMILES that shows up in drug-like datasets is handled:
organic-subset and bracket atoms, branches, ring closures (``1``-``9`` and
``%nn``), the bond symbols ``- = # : / \\`` and ``.`` disconnections.
Stereo markers are read and dropped.
"""
from __future__ import annotations

import csv
import enum
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

log = logging.getLogger(__name__)

ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn Ga Ge As Se Br Kr "
    "Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb "
    "Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf "
    "Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og"
).split()
ATOMIC_NUMBER = {sym: i + 1 for i, sym in enumerate(ELEMENTS)}

# allowed valences for organic-subset atoms, smallest first
DEFAULT_VALENCE = {5: (3,), 6: (4,), 7: (3,), 8: (2,), 15: (3, 5), 16: (2, 4, 6), 9: (1,), 17: (1,), 35: (1,), 53: (1,)}
AROMATIC_ORGANIC = {"b": 5, "c": 6, "n": 7, "o": 8, "p": 15, "s": 16}
AROMATIC_BRACKET = {**AROMATIC_ORGANIC, "se": 34, "as": 33, "te": 52}


class SmilesError(ValueError):
    """Base class for rejected SMILES."""


class UnclosedRingError(SmilesError):
    pass


class UnbalancedParenthesisError(SmilesError):
    pass


class UnknownSymbolError(SmilesError):
    pass


class ValenceError(SmilesError):
    pass


class AromaticityError(SmilesError):
    """Lowercase (aromatic) atom that is not part of any ring."""


class BondError(SmilesError):
    """Self-loop, duplicate bond between one atom pair, or dangling bond symbol."""


class EmptyDatasetError(ValueError):
    pass


class BondOrder(enum.IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


_BOND_SYMBOLS = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE, "#": BondOrder.TRIPLE,
                 ":": BondOrder.AROMATIC, "/": BondOrder.SINGLE, "\\": BondOrder.SINGLE}


@dataclass(frozen=True, slots=True)
class Atom:
    element: int
    formal_charge: int = 0
    explicit_h: int = 0
    implicit_h: int = 0
    aromatic: bool = False
    in_ring: bool = False
    isotope: Optional[int] = None
    degree: int = 0
    bracket: bool = False

    @property
    def total_h(self) -> int:
        return self.explicit_h + self.implicit_h


@dataclass(frozen=True, slots=True)
class Bond:
    begin: int
    end: int
    order: BondOrder
    in_ring: bool = False

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.begin, self.end)

    def other(self, atom: int) -> int:
        return self.end if atom == self.begin else self.begin


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    adjacency: tuple[tuple[int, ...], ...]
    source: str = ""

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    def neighbors(self, atom: int) -> list[tuple[int, int]]:
        """``(bond index, neighbor atom index)`` pairs for ``atom``."""
        return [(b, self.bonds[b].other(atom)) for b in self.adjacency[atom]]


@dataclass(frozen=True, slots=True)
class DatasetRecord:
    smiles: str
    label: int
    row_id: int


# ---------------------------------------------------------------------------
# tokenizer / parser

_BRACKET_RE = re.compile(
    r"""(?P<isotope>\d+)?
        (?P<symbol>se|as|te|[bcnops]|[A-Z][a-z]?)
        (?P<chiral>@(?:@|TH[12]|AL[12]|SP[123]|TB\d{1,2}|OH\d{1,2})?)?
        (?P<hcount>H\d?)?
        (?P<charge>\+\+|--|[+-]\d{0,2})?
        (?::(?P<klass>\d+))?$""",
    re.VERBOSE,
)


@dataclass
class _WorkAtom:
    element: int
    aromatic: bool
    bracket: bool
    charge: int = 0
    hcount: int = 0
    isotope: Optional[int] = None
    implicit_h: int = 0


def _parse_bracket(body: str, text: str) -> _WorkAtom:
    m = _BRACKET_RE.match(body)
    if m is None:
        raise UnknownSymbolError(f"cannot parse bracket atom [{body}] in {text!r}")
    sym = m.group("symbol")
    if sym in AROMATIC_BRACKET:
        element, aromatic = AROMATIC_BRACKET[sym], True
    elif sym in ATOMIC_NUMBER:
        element, aromatic = ATOMIC_NUMBER[sym], False
    else:
        raise UnknownSymbolError(f"unknown element {sym!r} in {text!r}")
    hc = m.group("hcount")
    hcount = 0 if not hc else (1 if len(hc) == 1 else int(hc[1:]))
    ch = m.group("charge")
    charge = 0
    if ch:
        if ch in ("++", "--"):
            charge = 2 if ch[0] == "+" else -2
        else:
            mag = int(ch[1:]) if len(ch) > 1 else 1
            charge = mag if ch[0] == "+" else -mag
    iso = m.group("isotope")
    return _WorkAtom(element, aromatic, True, charge, hcount, int(iso) if iso else None)


def _tokenize_graph(text: str):
    """Single left-to-right pass building atoms and raw bonds.

    Returns ``(atoms, bonds)`` where each bond is ``[a, b, order or None]``;
    ``None`` marks an implicit bond whose order is decided after ring perception.
    """
    atoms: list[_WorkAtom] = []
    bonds: list[list] = []
    branch_stack: list[Optional[int]] = []
    ring_open: dict[int, tuple[int, Optional[str]]] = {}
    prev: Optional[int] = None
    pending: Optional[str] = None
    i, n = 0, len(text)

    def add_atom(atom: _WorkAtom):
        nonlocal prev, pending
        atoms.append(atom)
        idx = len(atoms) - 1
        if prev is not None:
            bonds.append([prev, idx, _BOND_SYMBOLS[pending] if pending else None])
        elif pending is not None:
            raise BondError(f"bond symbol {pending!r} without a preceding atom in {text!r}")
        prev, pending = idx, None

    while i < n:
        c = text[i]
        if c == "[":
            j = text.find("]", i + 1)
            if j < 0:
                raise UnknownSymbolError(f"unterminated bracket atom in {text!r}")
            add_atom(_parse_bracket(text[i + 1:j], text))
            i = j + 1
            continue
        two = text[i:i + 2]
        if two in ("Cl", "Br"):
            add_atom(_WorkAtom(ATOMIC_NUMBER[two], False, False))
            i += 2
            continue
        if c in "BCNOPSFI":
            add_atom(_WorkAtom(ATOMIC_NUMBER[c], False, False))
        elif c in AROMATIC_ORGANIC:
            add_atom(_WorkAtom(AROMATIC_ORGANIC[c], True, False))
        elif c == "(":
            if prev is None:
                raise UnbalancedParenthesisError(f"branch opened before any atom in {text!r}")
            branch_stack.append(prev)
        elif c == ")":
            if not branch_stack:
                raise UnbalancedParenthesisError(f"unmatched ')' in {text!r}")
            if pending is not None:
                raise BondError(f"dangling bond before ')' in {text!r}")
            prev = branch_stack.pop()
        elif c in _BOND_SYMBOLS:
            if pending is not None:
                raise BondError(f"two consecutive bond symbols in {text!r}")
            pending = c
        elif c == ".":
            if pending is not None:
                raise BondError(f"bond symbol before '.' in {text!r}")
            prev = None
        elif c.isdigit() or c == "%":
            if c == "%":
                digits = text[i + 1:i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise UnknownSymbolError(f"bad %nn ring label in {text!r}")
                label, i = int(digits), i + 2
            else:
                label = int(c)
            if prev is None:
                raise UnclosedRingError(f"ring label {label} without an atom in {text!r}")
            if label in ring_open:
                other, sym = ring_open.pop(label)
                if sym and pending and _BOND_SYMBOLS[sym] != _BOND_SYMBOLS[pending]:
                    raise BondError(f"conflicting ring-closure bonds for label {label} in {text!r}")
                use = pending or sym
                bonds.append([other, prev, _BOND_SYMBOLS[use] if use else None])
            else:
                ring_open[label] = (prev, pending)
            pending = None
        else:
            raise UnknownSymbolError(f"unexpected character {c!r} at {i} in {text!r}")
        i += 1

    if branch_stack:
        raise UnbalancedParenthesisError(f"unclosed branch in {text!r}")
    if ring_open:
        raise UnclosedRingError(f"ring label(s) {sorted(ring_open)} never closed in {text!r}")
    if pending is not None:
        raise BondError(f"trailing bond symbol in {text!r}")

    seen = set()
    for a, b, _ in bonds:
        if a == b:
            raise BondError(f"atom bonded to itself in {text!r}")
        key = (min(a, b), max(a, b))
        if key in seen:
            raise BondError(f"duplicate bond {key} in {text!r}")
        seen.add(key)
    return atoms, bonds


def ring_bonds(n_atoms: int, edges: Sequence[tuple[int, int]]) -> list[bool]:
    """Flag every edge that lies on a cycle (i.e. is not a bridge).

    Iterative Tarjan bridge finding; handles disconnected graphs.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_atoms)]
    for e, (a, b) in enumerate(edges):
        adj[a].append((b, e))
        adj[b].append((a, e))
    disc = [-1] * n_atoms
    low = [0] * n_atoms
    in_ring = [True] * len(edges)
    t = 0
    for root in range(n_atoms):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = t
        t += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, parent_edge, it = stack[-1]
            advanced = False
            for w, e in it:
                if e == parent_edge:
                    continue
                if disc[w] < 0:
                    disc[w] = low[w] = t
                    t += 1
                    stack.append((w, e, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if stack:
                u = stack[-1][0]
                low[u] = min(low[u], low[v])
                if low[v] > disc[u]:
                    in_ring[parent_edge] = False
    return in_ring


def _implicit_hydrogens(atom: _WorkAtom, orders: list[BondOrder], text: str) -> int:
    allowed = DEFAULT_VALENCE.get(atom.element)
    if allowed is None:  # pragma: no cover - organic subset only reaches here
        return 0
    n_arom = sum(1 for o in orders if o == BondOrder.AROMATIC)
    plain = sum(int(o) for o in orders if o != BondOrder.AROMATIC)
    if atom.aromatic:
        # aromatic bonds count 1 each, plus one for the pi contribution when
        # the atom still has room for it (lone-pair donors like o, s get 0 H)
        used = plain + n_arom
        target = next((v for v in allowed if v >= used), None)
        if target is None:
            raise ValenceError(f"valence {used} exceeds {allowed} for aromatic atom {atom.element} in {text!r}")
        return max(0, target - used - 1)
    used = plain + -(-3 * n_arom // 2)  # ceil(1.5 * n_arom)
    target = next((v for v in allowed if v >= used), None)
    if target is None:
        raise ValenceError(f"valence {used} exceeds {allowed} for element {atom.element} in {text!r}")
    return target - used


def _six_rings(n_atoms: int, adj: list[list[tuple[int, int]]], ring_bond: list[bool]) -> list[tuple[list[int], list[int]]]:
    """All simple 6-cycles as ``(atoms, bonds)`` in ring order."""
    found = {}
    for start in range(n_atoms):
        stack = [(start, [start], [])]
        while stack:
            v, path, pbonds = stack.pop()
            for w, e in adj[v]:
                if not ring_bond[e]:
                    continue
                if len(path) == 6:
                    if w == start and e != pbonds[0]:
                        key = frozenset(pbonds + [e])
                        found.setdefault(key, (list(path), pbonds + [e]))
                    continue
                if w <= start or w in path:
                    continue
                stack.append((w, path + [w], pbonds + [e]))
    return list(found.values())


def _normalize_aromaticity(atoms: list[_WorkAtom], bonds: list[list], adj, ring_bond) -> None:
    """Mark 6-rings of C/N with alternating single/double bonds as aromatic.

    Aromatic bonds act as wildcards so fused Kekule systems converge over a
    few passes.  Hydrogen counts are left untouched.
    """
    rings = [r for r in _six_rings(len(atoms), adj, ring_bond)
             if all(atoms[a].element in (6, 7) for a in r[0])]
    changed = True
    while changed:
        changed = False
        for ring_atoms, ring_edges in rings:
            orders = [bonds[e][2] for e in ring_edges]
            if all(o == BondOrder.AROMATIC for o in orders) and all(atoms[a].aromatic for a in ring_atoms):
                continue
            if any(o not in (BondOrder.SINGLE, BondOrder.DOUBLE, BondOrder.AROMATIC) for o in orders):
                continue
            ok = False
            for phase in (0, 1):
                if all(o == BondOrder.AROMATIC
                       or (o == BondOrder.DOUBLE) == (k % 2 == phase)
                       for k, o in enumerate(orders)):
                    ok = True
                    break
            if not ok:
                continue
            for a in ring_atoms:
                atoms[a].aromatic = True
            for e in ring_edges:
                bonds[e][2] = BondOrder.AROMATIC
            changed = True


def parse_smiles(text: str, normalize_aromaticity: bool = False) -> Molecule:
    """Parse ``text`` into a :class:`Molecule` with ring, H and aromatic flags.

    With ``normalize_aromaticity`` Kekule benzene-like rings are rewritten as
    aromatic so that both spellings produce the same graph.
    """
    if text is None or not text.strip():
        raise SmilesError("empty SMILES")
    text = text.strip()
    atoms, raw_bonds = _tokenize_graph(text)

    edges = [(a, b) for a, b, _ in raw_bonds]
    ring_bond = ring_bonds(len(atoms), edges)
    for e, rb in enumerate(raw_bonds):
        if rb[2] is None:
            both_arom = atoms[rb[0]].aromatic and atoms[rb[1]].aromatic
            rb[2] = BondOrder.AROMATIC if both_arom and ring_bond[e] else BondOrder.SINGLE

    adj: list[list[tuple[int, int]]] = [[] for _ in atoms]
    for e, (a, b, _) in enumerate(raw_bonds):
        adj[a].append((b, e))
        adj[b].append((a, e))
    in_ring_atom = [any(ring_bond[e] for _, e in adj[a]) for a in range(len(atoms))]
    for a, atom in enumerate(atoms):
        if atom.aromatic and not in_ring_atom[a]:
            raise AromaticityError(f"aromatic atom {a} outside any ring in {text!r}")
        if not atom.bracket:
            atom.implicit_h = _implicit_hydrogens(atom, [raw_bonds[e][2] for _, e in adj[a]], text)

    if normalize_aromaticity:
        _normalize_aromaticity(atoms, raw_bonds, adj, ring_bond)

    return _fold_hydrogens(atoms, raw_bonds, text)


def _is_foldable_h(a: int, atoms, adj, raw_bonds) -> bool:
    atom = atoms[a]
    if atom.element != 1 or atom.isotope is not None or atom.charge or atom.hcount or len(adj[a]) != 1:
        return False
    w, e = adj[a][0]
    return atoms[w].element != 1 and raw_bonds[e][2] == BondOrder.SINGLE


def _fold_hydrogens(atoms: list[_WorkAtom], raw_bonds: list[list], text: str) -> Molecule:
    adj: list[list[tuple[int, int]]] = [[] for _ in atoms]
    for e, (a, b, _) in enumerate(raw_bonds):
        adj[a].append((b, e))
        adj[b].append((a, e))
    drop = {a for a in range(len(atoms)) if _is_foldable_h(a, atoms, adj, raw_bonds)}
    extra_h = [0] * len(atoms)
    for a in drop:
        extra_h[adj[a][0][0]] += 1
    keep = [a for a in range(len(atoms)) if a not in drop]
    new_index = {a: i for i, a in enumerate(keep)}
    kept_bonds = [(new_index[a], new_index[b], o) for a, b, o in raw_bonds if a not in drop and b not in drop]
    return build_molecule(
        [(atoms[a].element, atoms[a].charge, atoms[a].hcount + extra_h[a], atoms[a].implicit_h,
          atoms[a].aromatic, atoms[a].isotope, atoms[a].bracket) for a in keep],
        kept_bonds,
        source=text,
    )


def build_molecule(atom_specs, bond_specs, source: str = "") -> Molecule:
    """Assemble a :class:`Molecule` from raw tuples, recomputing ring flags and degrees.

    ``atom_specs``: ``(element, charge, explicit_h, implicit_h, aromatic, isotope, bracket)``;
    ``bond_specs``: ``(begin, end, order)``.
    """
    n = len(atom_specs)
    edges = [(a, b) for a, b, _ in bond_specs]
    ring = ring_bonds(n, edges)
    adjacency: list[list[int]] = [[] for _ in range(n)]
    bonds = []
    for e, (a, b, order) in enumerate(bond_specs):
        bonds.append(Bond(a, b, BondOrder(order), ring[e]))
        adjacency[a].append(e)
        adjacency[b].append(e)
    atoms = tuple(
        Atom(element=el, formal_charge=ch, explicit_h=eh, implicit_h=ih, aromatic=ar,
             in_ring=any(ring[e] for e in adjacency[i]), isotope=iso,
             degree=len(adjacency[i]), bracket=br)
        for i, (el, ch, eh, ih, ar, iso, br) in enumerate(atom_specs)
    )
    return Molecule(atoms, tuple(bonds), tuple(tuple(a) for a in adjacency), source)


def relabel(mol: Molecule, perm: Sequence[int], bond_perm: Optional[Sequence[int]] = None) -> Molecule:
    """Copy of ``mol`` with atom ``i`` moved to position ``perm[i]`` (bonds optionally reordered too)."""
    inv = [0] * len(perm)
    for old, new in enumerate(perm):
        inv[new] = old
    atom_specs = []
    for new in range(len(perm)):
        a = mol.atoms[inv[new]]
        atom_specs.append((a.element, a.formal_charge, a.explicit_h, a.implicit_h, a.aromatic, a.isotope, a.bracket))
    bond_specs = [(perm[b.end], perm[b.begin], b.order) for b in mol.bonds]
    if bond_perm is not None:
        reordered = [None] * len(bond_specs)
        for old, new in enumerate(bond_perm):
            reordered[new] = bond_specs[old]
        bond_specs = reordered
    return build_molecule(atom_specs, bond_specs, mol.source)


def canonical_hash(mol: Molecule) -> int:
    """Relabeling-invariant 64-bit graph hash used for deduplication.

    Atom identifiers are refined with the ECFP update until the number of
    distinct identifiers stops growing (at most ``n_atoms`` rounds); the
    sorted identifier multiset is hashed together with atom and bond counts.
    """
    from bcfp.fingerprint import refine_atom_ids
    from bcfp.hashing import hash_fields

    ids = refine_atom_ids(mol)
    fields = [(1, mol.n_atoms), (2, mol.n_bonds)]
    fields.extend((3, k) for k in sorted(ids))
    return hash_fields(fields)


# ---------------------------------------------------------------------------
# dataset ingestion and cleanup

@dataclass
class CleanReport:
    n_input: int = 0
    dropped: list[tuple[int, str]] = field(default_factory=list)
    label_conflicts: list[tuple[int, int]] = field(default_factory=list)
    n_invalid: int = 0
    n_duplicates: int = 0

    @property
    def n_kept(self) -> int:
        return self.n_input - self.n_invalid - self.n_duplicates


@dataclass
class CleanDataset:
    records: list[DatasetRecord]
    molecules: list[Molecule]
    report: CleanReport

    @property
    def labels(self) -> list[int]:
        return [r.label for r in self.records]

    def __len__(self):
        return len(self.records)


def _parse_label(raw: str) -> int:
    value = float(raw)
    if value not in (0.0, 1.0):
        raise ValueError(f"label {raw!r} is not binary")
    return int(value)


def read_dataset_csv(path, smiles_col: str = "smiles", label_col: str = "p_np") -> tuple[list[DatasetRecord], list[tuple[int, str]]]:
    """Read records from CSV.

    Returns the records plus ``(row_id, reason)`` for rows whose label could not
    be read.  ``row_id`` is the 0-based data-row index in the file.
    Raises ``KeyError`` if a configured column is missing.
    """
    records, bad = [], []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyDatasetError(f"{path}: empty file")
        for col in (smiles_col, label_col):
            if col not in reader.fieldnames:
                raise KeyError(f"{path}: missing column {col!r} (have {reader.fieldnames})")
        for row_id, row in enumerate(reader):
            try:
                label = _parse_label(row[label_col])
            except (TypeError, ValueError):
                bad.append((row_id, f"invalid_label:{row[label_col]!r}"))
                continue
            records.append(DatasetRecord(row[smiles_col] or "", label, row_id))
    return records, bad


def clean_dataset(records: Iterable[DatasetRecord], normalize_aromaticity: bool = True) -> CleanDataset:
    """Drop unparsable SMILES and graph duplicates (first occurrence wins)."""
    records = list(records)
    report = CleanReport(n_input=len(records))
    kept: list[DatasetRecord] = []
    mols: list[Molecule] = []
    first_seen: dict[int, DatasetRecord] = {}
    for rec in records:
        try:
            mol = parse_smiles(rec.smiles, normalize_aromaticity=normalize_aromaticity)
        except SmilesError as exc:
            report.n_invalid += 1
            report.dropped.append((rec.row_id, f"invalid_smiles:{type(exc).__name__}"))
            continue
        key = canonical_hash(mol)
        if key in first_seen:
            first = first_seen[key]
            report.n_duplicates += 1
            reason = f"duplicate_of:{first.row_id}"
            if first.label != rec.label:
                reason += ":label_conflict"
                report.label_conflicts.append((first.row_id, rec.row_id))
                log.warning("label conflict between rows %d and %d; keeping row %d",
                            first.row_id, rec.row_id, first.row_id)
            report.dropped.append((rec.row_id, reason))
            continue
        first_seen[key] = rec
        kept.append(rec)
        mols.append(mol)
    if not kept:
        raise EmptyDatasetError("no records survived cleanup")
    return CleanDataset(kept, mols, report)
