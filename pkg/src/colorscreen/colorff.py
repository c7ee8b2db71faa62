"""Pharmacophore "color atom" typing.

Six color types are assigned by simple graph rules (a stand-in for the
Implicit Mills-Dean force field, whose patterns are not public):

* Donor      N or O carrying at least one hydrogen (explicit or implicit)
* Acceptor   N or O with formal charge <= 0 and valence below its maximum
* Cation     positively charged atom, or the central carbon of an
             amidinium/guanidinium group
* Anion      negatively charged atom, or one site per carboxylate/sulfonate
             group placed at the group centroid
* Ring       centroid of every SSSR ring
* Hydrophobe centroid of every connected group of >= 3 carbons none of
             which touches a heteroatom

Molecules that carry a ``COLOR_ATOMS`` SDF property bypass the rules.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from .molio import Molecule

COLOR_AMPLITUDE = 2.70
COLOR_RADIUS = 1.0


def gaussian_width(radius: float, amplitude: float = COLOR_AMPLITUDE) -> float:
    """Width alpha such that amplitude * (pi/alpha)^1.5 equals the hard-sphere volume."""
    return math.pi * (3.0 * amplitude / (4.0 * math.pi * radius ** 3)) ** (2.0 / 3.0)


COLOR_WIDTH = gaussian_width(COLOR_RADIUS)


class ColorType(enum.IntEnum):
    DONOR = 0
    ACCEPTOR = 1
    CATION = 2
    ANION = 3
    RING = 4
    HYDROPHOBE = 5

    @classmethod
    def from_token(cls, token: str) -> "ColorType":
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown color type {token!r}") from None


@dataclass(frozen=True)
class ColorAtom:
    color_type: ColorType
    position: Tuple[float, float, float]
    amplitude: float = COLOR_AMPLITUDE
    width: float = COLOR_WIDTH

    def __post_init__(self):
        if not (self.amplitude > 0 and self.width > 0):
            raise ValueError("color atom amplitude and width must be positive")


_MAX_VALENCE = {"N": 4, "O": 3}
_DEFAULT_VALENCE = {"C": 4, "N": 3, "O": 2, "S": 2, "P": 3, "B": 3}


def perceive_rings(molecule: Molecule) -> List[Tuple[int, ...]]:
    """Smallest set of smallest rings, each a sorted atom-index tuple.

    Rings are ordered by (smallest member index, size, members).
    """
    g = nx.Graph()
    g.add_nodes_from(range(len(molecule.atoms)))
    g.add_edges_from((b.atom_a, b.atom_b) for b in molecule.bonds)
    rings = [tuple(sorted(c)) for c in nx.minimum_cycle_basis(g)]
    return sorted(rings, key=lambda r: (r[0], len(r), r))


def _valence_and_hydrogens(molecule: Molecule, adj) -> Tuple[List[float], List[int]]:
    valence, hcount = [], []
    for i, atom in enumerate(molecule.atoms):
        v = sum(b.valence_contribution for _, b in adj[i])
        explicit_h = sum(1 for j, _ in adj[i] if molecule.atoms[j].is_hydrogen)
        implicit_h = 0
        default = _DEFAULT_VALENCE.get(atom.element)
        if default is not None and not atom.is_hydrogen:
            # charge shifts the usual valence: N+ -> 4, O- -> 1, C- -> 3
            if atom.element in ("N", "O", "S", "P"):
                target = default + atom.formal_charge
            else:
                target = default - abs(atom.formal_charge)
            implicit_h = max(0, int(math.floor(target - v + 1e-6)))
        valence.append(v + implicit_h)
        hcount.append(explicit_h + implicit_h)
    return valence, hcount


def _acid_groups(molecule: Molecule, adj) -> List[Tuple[int, ...]]:
    """Carboxylate / carboxylic acid (C + 2 terminal O) and sulfonate (S + 3 terminal O)."""
    groups = []
    for i, atom in enumerate(molecule.atoms):
        if atom.element not in ("C", "S"):
            continue
        terminal_o = [
            j for j, _ in adj[i]
            if molecule.atoms[j].element == "O"
            and all(k == i or molecule.atoms[k].is_hydrogen for k, _ in adj[j])
        ]
        need = 2 if atom.element == "C" else 3
        if len(terminal_o) >= need:
            groups.append((i, *sorted(terminal_o)))
    return groups


def _amidinium_carbons(molecule: Molecule, adj, ring_atoms: Set[int]) -> List[int]:
    out = []
    for i, atom in enumerate(molecule.atoms):
        if atom.element != "C" or i in ring_atoms:
            continue
        elems = [molecule.atoms[j].element for j, _ in adj[i]]
        if any(e in ("O", "S") for e in elems):
            continue
        n_nbrs = [(j, b) for j, b in adj[i] if molecule.atoms[j].element == "N"]
        if len(n_nbrs) >= 2 and any(b.order == 2 for _, b in n_nbrs):
            out.append(i)
    return out


def assign_color_atoms(molecule: Molecule) -> List[ColorAtom]:
    """Heuristic color typing, ordered by (color type, first contributing atom)."""
    atoms = molecule.atoms
    xyz = molecule.coords
    adj = molecule.neighbors()
    valence, hcount = _valence_and_hydrogens(molecule, adj)
    rings = perceive_rings(molecule)
    ring_atoms = {i for r in rings for i in r}
    found: List[Tuple[int, int, ColorAtom]] = []

    def add(ctype: ColorType, members: Sequence[int]) -> None:
        center = xyz[list(members)].mean(axis=0)
        found.append((int(ctype), min(members), ColorAtom(ctype, tuple(float(c) for c in center))))

    for i, atom in enumerate(atoms):
        if atom.element in ("N", "O"):
            if hcount[i] >= 1:
                add(ColorType.DONOR, [i])
            if atom.formal_charge <= 0 and valence[i] < _MAX_VALENCE[atom.element]:
                add(ColorType.ACCEPTOR, [i])

    amidinium = _amidinium_carbons(molecule, adj, ring_atoms)
    absorbed_pos = {j for c in amidinium for j, _ in adj[c] if atoms[j].element == "N"}
    for c in amidinium:
        add(ColorType.CATION, [c])
    for i, atom in enumerate(atoms):
        # zwitterionic pairs such as nitro (N+ bonded to O-) are not ions
        if atom.formal_charge > 0 and i not in absorbed_pos and not any(atoms[j].formal_charge < 0 for j, _ in adj[i]):
            add(ColorType.CATION, [i])

    acids = _acid_groups(molecule, adj)
    absorbed_neg = {j for g in acids for j in g}
    for g in acids:
        add(ColorType.ANION, list(g))
    for i, atom in enumerate(atoms):
        if atom.formal_charge < 0 and i not in absorbed_neg and not any(atoms[j].formal_charge > 0 for j, _ in adj[i]):
            add(ColorType.ANION, [i])

    for r in rings:
        add(ColorType.RING, list(r))

    def is_hetero(j: int) -> bool:
        return atoms[j].element not in ("C", "H", "D", "T")

    apolar = [
        i for i, a in enumerate(atoms)
        if a.element == "C" and not any(is_hetero(j) for j, _ in adj[i])
    ]
    g = nx.Graph()
    g.add_nodes_from(apolar)
    apolar_set = set(apolar)
    g.add_edges_from((b.atom_a, b.atom_b) for b in molecule.bonds if b.atom_a in apolar_set and b.atom_b in apolar_set)
    for comp in nx.connected_components(g):
        if len(comp) >= 3:
            add(ColorType.HYDROPHOBE, sorted(comp))

    found.sort(key=lambda t: (t[0], t[1]))
    return [c for _, _, c in found]


def load_annotated_color_atoms(molecule: Molecule) -> Optional[List[ColorAtom]]:
    """Color atoms from the ``COLOR_ATOMS`` property (lines ``type x y z``), or None."""
    text = molecule.properties.get("COLOR_ATOMS")
    if text is None:
        return None
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 4:
            raise ValueError(f"{molecule.name}: COLOR_ATOMS line {lineno} needs 'type x y z', got {line!r}")
        ctype = ColorType.from_token(fields[0])
        try:
            pos = tuple(float(v) for v in fields[1:])
        except ValueError:
            raise ValueError(f"{molecule.name}: non-numeric coordinate in COLOR_ATOMS line {lineno}") from None
        if not all(math.isfinite(v) for v in pos):
            raise ValueError(f"{molecule.name}: non-finite coordinate in COLOR_ATOMS line {lineno}")
        out.append(ColorAtom(ctype, pos))
    return out


def format_color_atoms(color_atoms: Sequence[ColorAtom]) -> str:
    """Inverse of :func:`load_annotated_color_atoms`."""
    return "\n".join(
        f"{c.color_type.name.lower()} {c.position[0]:.4f} {c.position[1]:.4f} {c.position[2]:.4f}"
        for c in color_atoms
    )


def color_atoms_for(molecule: Molecule) -> List[ColorAtom]:
    annotated = load_annotated_color_atoms(molecule)
    return annotated if annotated is not None else assign_color_atoms(molecule)


def color_arrays(color_atoms: Sequence[ColorAtom]) -> Dict[str, np.ndarray]:
    return {
        "centers": np.array([c.position for c in color_atoms], dtype=float).reshape(-1, 3),
        "amplitudes": np.array([c.amplitude for c in color_atoms], dtype=float),
        "widths": np.array([c.width for c in color_atoms], dtype=float),
        "types": np.array([int(c.color_type) for c in color_atoms], dtype=int),
    }
