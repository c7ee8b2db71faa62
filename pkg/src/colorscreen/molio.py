"""Molecule model, SDF (MDL V2000) reading/writing and dataset manifests."""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

log = logging.getLogger(__name__)

# Bondi (1964) van der Waals radii, Angstrom. Hydrogen uses 1.20.
BONDI_RADII: Dict[str, float] = {
    "H": 1.20, "He": 1.40,
    "Li": 1.82, "C": 1.70, "N": 1.55, "O": 1.52, "F": 1.47, "Ne": 1.54,
    "Na": 2.27, "Mg": 1.73, "Si": 2.10, "P": 1.80, "S": 1.80, "Cl": 1.75, "Ar": 1.88,
    "K": 2.75, "Ni": 1.63, "Cu": 1.40, "Zn": 1.39, "Ga": 1.87, "As": 1.85,
    "Se": 1.90, "Br": 1.85, "Kr": 2.02,
    "Pd": 1.63, "Ag": 1.72, "Cd": 1.58, "In": 1.93, "Sn": 2.17, "Te": 2.06,
    "I": 1.98, "Xe": 2.16, "Pt": 1.72, "Au": 1.66, "Hg": 1.55, "Tl": 1.96, "Pb": 2.02,
    "U": 1.86,
}
DEFAULT_RADIUS = 1.70

AROMATIC = 4  # MDL bond type code for aromatic bonds

# MDL charge field codes -> formal charge
_CHARGE_CODES = {0: 0, 1: 3, 2: 2, 3: 1, 4: 0, 5: -1, 6: -2, 7: -3}


class SDFError(ValueError):
    """Malformed SDF record. ``record`` is the 1-based record index."""

    def __init__(self, record: int, message: str):
        super().__init__(f"record {record}: {message}")
        self.record = record


@dataclass(frozen=True)
class Atom:
    element: str
    position: Tuple[float, float, float]
    formal_charge: int = 0
    vdw_radius: float = DEFAULT_RADIUS

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.position):
            raise ValueError(f"non-finite coordinate for {self.element}: {self.position}")
        if not self.vdw_radius > 0:
            raise ValueError("vdw_radius must be positive")

    @property
    def is_hydrogen(self) -> bool:
        return self.element in ("H", "D", "T")


@dataclass(frozen=True)
class Bond:
    atom_a: int
    atom_b: int
    order: int = 1  # 1, 2, 3 or AROMATIC

    def __post_init__(self):
        if self.atom_a == self.atom_b:
            raise ValueError("bond joins an atom to itself")
        if self.order not in (1, 2, 3, AROMATIC):
            raise ValueError(f"unsupported bond order {self.order}")

    @property
    def valence_contribution(self) -> float:
        return 1.5 if self.order == AROMATIC else float(self.order)


@dataclass(frozen=True)
class Molecule:
    """An immutable 3D molecule.

    ``properties`` holds the SDF data block verbatim (tag -> text). Externally
    computed color atoms live under the ``COLOR_ATOMS`` tag.
    """

    name: str
    atoms: Tuple[Atom, ...]
    bonds: Tuple[Bond, ...] = ()
    properties: Dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        n = len(self.atoms)
        for b in self.bonds:
            if not (0 <= b.atom_a < n and 0 <= b.atom_b < n):
                raise ValueError(f"bond ({b.atom_a}, {b.atom_b}) outside atom range 0..{n - 1}")
        if not any(not a.is_hydrogen for a in self.atoms):
            raise ValueError(f"molecule {self.name!r} has no heavy atoms")

    @property
    def coords(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms], dtype=float).reshape(-1, 3)

    @property
    def heavy_indices(self) -> List[int]:
        return [i for i, a in enumerate(self.atoms) if not a.is_hydrogen]

    def neighbors(self) -> List[List[Tuple[int, Bond]]]:
        adj: List[List[Tuple[int, Bond]]] = [[] for _ in self.atoms]
        for b in self.bonds:
            adj[b.atom_a].append((b.atom_b, b))
            adj[b.atom_b].append((b.atom_a, b))
        return adj

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "Molecule":
        """Copy with every atom moved by x -> R x + t (annotations are not touched)."""
        xyz = self.coords @ np.asarray(rotation).T + np.asarray(translation)
        atoms = [replace(a, position=tuple(float(v) for v in p)) for a, p in zip(self.atoms, xyz)]
        return replace(self, atoms=tuple(atoms))


def assign_radii(molecule: Molecule) -> Molecule:
    """Set each atom's radius from the Bondi table; unknown elements get 1.70 A."""
    atoms = [replace(a, vdw_radius=BONDI_RADII.get(a.element, DEFAULT_RADIUS)) for a in molecule.atoms]
    return replace(molecule, atoms=tuple(atoms))


def _parse_record(lines: List[str], record: int) -> Molecule:
    if len(lines) < 4:
        raise SDFError(record, "truncated header")
    name = lines[0].strip()
    counts = lines[3]
    if "V3000" in counts:
        raise SDFError(record, "V3000 molfiles are not supported")
    try:
        n_atoms = int(counts[0:3])
        n_bonds = int(counts[3:6])
    except ValueError:
        raise SDFError(record, f"malformed counts line {counts!r}") from None
    if len(lines) < 4 + n_atoms + n_bonds:
        raise SDFError(record, "fewer atom/bond lines than the counts line declares")

    elements, xyz, charges = [], [], []
    for i in range(n_atoms):
        line = lines[4 + i]
        try:
            x, y, z = float(line[0:10]), float(line[10:20]), float(line[20:30])
        except ValueError:
            raise SDFError(record, f"non-numeric coordinate on atom line {i + 1}") from None
        elements.append(line[31:34].strip())
        code = line[36:39].strip()
        charges.append(_CHARGE_CODES.get(int(code), 0) if code.lstrip("-").isdigit() else 0)
        xyz.append((x, y, z))

    bonds = []
    for j in range(n_bonds):
        line = lines[4 + n_atoms + j]
        try:
            a, b, order = int(line[0:3]), int(line[3:6]), int(line[6:9])
        except ValueError:
            raise SDFError(record, f"malformed bond line {j + 1}") from None
        if not (1 <= a <= n_atoms and 1 <= b <= n_atoms):
            raise SDFError(record, f"bond {j + 1} references atom {max(a, b)} of {n_atoms}")
        if order not in (1, 2, 3, AROMATIC):
            order = 1
        bonds.append(Bond(a - 1, b - 1, order))

    props: Dict[str, str] = {}
    i = 4 + n_atoms + n_bonds
    while i < len(lines):
        line = lines[i]
        if line.startswith("M  CHG"):
            fields = line.split()
            for k in range(int(fields[2])):
                idx, chg = int(fields[3 + 2 * k]), int(fields[4 + 2 * k])
                charges[idx - 1] = chg
        elif line.startswith(">"):
            start, end = line.find("<"), line.find(">", line.find("<"))
            tag = line[start + 1:end] if start >= 0 and end > start else line[1:].strip()
            body = []
            i += 1
            while i < len(lines) and lines[i].strip() != "":
                body.append(lines[i])
                i += 1
            props[tag] = "\n".join(body)
        i += 1

    atoms = [Atom(e, p, c) for e, p, c in zip(elements, xyz, charges)]
    try:
        return Molecule(name or f"mol{record}", atoms, bonds, props)
    except ValueError as exc:
        raise SDFError(record, str(exc)) from None


def parse_sdf(content: Union[bytes, str], strict: bool = True) -> List[Molecule]:
    """Parse multi-record SDF text.

    With ``strict=False`` malformed records are logged and skipped instead of
    raising :class:`SDFError`. Radii are assigned on the way out.
    """
    if isinstance(content, bytes):
        content = content.decode("utf-8", errors="replace")
    text = content.replace("\r\n", "\n")
    molecules = []
    chunks = text.split("$$$$")
    for record, chunk in enumerate(chunks, start=1):
        lines = chunk.split("\n")
        if record > 1 and lines and lines[0] == "":
            lines = lines[1:]  # newline that followed the previous $$$$
        if not any(l.strip() for l in lines):
            continue
        try:
            molecules.append(assign_radii(_parse_record(lines, record)))
        except SDFError:
            if strict:
                raise
            log.warning("skipping malformed SDF record %d", record, exc_info=True)
    return molecules


def read_sdf(path: Union[str, os.PathLike], strict: bool = True) -> List[Molecule]:
    return parse_sdf(Path(path).read_bytes(), strict=strict)


def _charge_code(charge: int) -> int:
    return {3: 1, 2: 2, 1: 3, -1: 5, -2: 6, -3: 7}.get(charge, 0)


def to_sdf(molecules: Sequence[Molecule]) -> str:
    out = []
    for mol in molecules:
        out.append(mol.name)
        out.append("  colorscreen3D")
        out.append("")
        out.append(f"{len(mol.atoms):3d}{len(mol.bonds):3d}  0  0  0  0  0  0  0  0999 V2000")
        for a in mol.atoms:
            x, y, z = a.position
            out.append(f"{x:10.4f}{y:10.4f}{z:10.4f} {a.element:<3} 0{_charge_code(a.formal_charge):3d}  0  0  0  0  0  0  0  0  0  0")
        for b in mol.bonds:
            out.append(f"{b.atom_a + 1:3d}{b.atom_b + 1:3d}{b.order:3d}  0")
        charged = [(i + 1, a.formal_charge) for i, a in enumerate(mol.atoms) if a.formal_charge]
        for k in range(0, len(charged), 8):
            chunk = charged[k:k + 8]
            out.append(f"M  CHG{len(chunk):3d}" + "".join(f"{i:4d}{c:4d}" for i, c in chunk))
        out.append("M  END")
        for tag, body in mol.properties.items():
            out.append(f">  <{tag}>")
            out.append(body)
            out.append("")
        out.append("$$$$")
    return "\n".join(out) + ("\n" if out else "")


def write_sdf(path: Union[str, os.PathLike], molecules: Sequence[Molecule]) -> None:
    Path(path).write_text(to_sdf(molecules))


@dataclass(frozen=True)
class DatasetManifest:
    """A screening dataset: SDF references for actives, decoys and (optionally) queries.

    An empty ``queries`` list means active-as-query: every active is used
    once as the query and removed from its own library.
    """

    dataset_name: str
    actives: Tuple[str, ...]
    decoys: Tuple[str, ...]
    queries: Tuple[str, ...] = ()
    root: Optional[str] = None

    def __post_init__(self):
        if not self.actives:
            raise ValueError(f"dataset {self.dataset_name!r} has no actives")
        if not self.decoys:
            raise ValueError(f"dataset {self.dataset_name!r} has no decoys")
        overlap = set(self.actives) & set(self.decoys)
        if overlap:
            raise ValueError(f"references listed as both active and decoy: {sorted(overlap)[:5]}")

    def _resolve(self, ref: str) -> Path:
        p = Path(ref)
        return p if p.is_absolute() or self.root is None else Path(self.root) / p

    def _load(self, refs: Sequence[str], strict: bool) -> List[Molecule]:
        mols: List[Molecule] = []
        for ref in refs:
            mols.extend(read_sdf(self._resolve(ref), strict=strict))
        return mols

    def load(self, strict: bool = True) -> Tuple[List[Molecule], List[Molecule], List[Molecule]]:
        """Read (actives, decoys, queries). Queries default to the actives."""
        actives = self._load(self.actives, strict)
        decoys = self._load(self.decoys, strict)
        clash = {m.name for m in actives} & {m.name for m in decoys}
        if clash:
            raise ValueError(f"molecule names present in both actives and decoys: {sorted(clash)[:5]}")
        queries = self._load(self.queries, strict) if self.queries else list(actives)
        return actives, decoys, queries

    def to_json(self) -> str:
        doc = {"dataset": self.dataset_name, "actives": list(self.actives), "decoys": list(self.decoys)}
        if self.queries:
            doc["queries"] = list(self.queries)
        return json.dumps(doc, indent=2)


def load_manifest(path: Union[str, os.PathLike]) -> DatasetManifest:
    """Read a manifest ``{"dataset", "actives", "decoys", "queries"?}``.

    Relative references resolve against the manifest's directory and must exist.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    doc = json.loads(path.read_text())
    for key in ("dataset", "actives", "decoys"):
        if key not in doc:
            raise ValueError(f"manifest {path} lacks required key {key!r}")
    manifest = DatasetManifest(
        dataset_name=str(doc["dataset"]),
        actives=tuple(doc["actives"]),
        decoys=tuple(doc["decoys"]),
        queries=tuple(doc.get("queries") or ()),
        root=str(path.parent),
    )
    for ref in manifest.actives + manifest.decoys + manifest.queries:
        if not manifest._resolve(ref).is_file():
            raise FileNotFoundError(f"manifest {path} references missing file {ref}")
    return manifest
