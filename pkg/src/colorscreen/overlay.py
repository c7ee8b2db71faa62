"""Gaussian volume overlap and rigid-body overlay optimization.

Atoms and color atoms are isotropic Gaussians ``p * exp(-alpha |r - c|^2)``.
Overlaps are first-order: plain sums of pairwise Gaussian product integrals,
with no inclusion-exclusion corrections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .colorff import COLOR_AMPLITUDE, ColorAtom, ColorType, color_atoms_for, gaussian_width
from .molio import Molecule

N_COLOR_TYPES = len(ColorType)
SHAPE_AMPLITUDE = 2.70


@dataclass(frozen=True)
class GaussianSphere:
    center: Tuple[float, float, float]
    amplitude: float
    width: float

    @classmethod
    def from_radius(cls, center, radius: float, amplitude: float = SHAPE_AMPLITUDE) -> "GaussianSphere":
        return cls(tuple(float(c) for c in center), amplitude, gaussian_width(radius, amplitude))

    @property
    def volume(self) -> float:
        return self.amplitude * (math.pi / self.width) ** 1.5


@dataclass(frozen=True)
class GaussianSet:
    """Array form of a list of Gaussians (the representation every kernel uses)."""

    centers: np.ndarray
    amplitudes: np.ndarray
    widths: np.ndarray

    @classmethod
    def coerce(cls, obj: Union["GaussianSet", Sequence[GaussianSphere], Sequence[ColorAtom]]) -> "GaussianSet":
        if isinstance(obj, GaussianSet):
            return obj
        items = list(obj)
        return cls(
            np.array([g.center if isinstance(g, GaussianSphere) else g.position for g in items], dtype=float).reshape(-1, 3),
            np.array([g.amplitude for g in items], dtype=float),
            np.array([g.width for g in items], dtype=float),
        )

    def __len__(self) -> int:
        return len(self.amplitudes)


@dataclass(frozen=True)
class Transform:
    """x -> R(q) x + translation, with q = (w, x, y, z) a unit quaternion."""

    rotation: Tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=float)
        n = np.linalg.norm(q)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {n} is not 1")

    @classmethod
    def from_arrays(cls, q, t) -> "Transform":
        q = np.asarray(q, dtype=float)
        q = q / np.linalg.norm(q)
        return cls(tuple(float(v) for v in q), tuple(float(v) for v in t))

    @classmethod
    def from_matrix(cls, rot: np.ndarray, t) -> "Transform":
        return cls.from_arrays(matrix_to_quaternion(rot), t)

    @property
    def matrix(self) -> np.ndarray:
        return quaternion_to_matrix(np.asarray(self.rotation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.matrix.T + np.asarray(self.translation)

    def compose(self, other: "Transform") -> "Transform":
        """self after other."""
        r = self.matrix @ other.matrix
        return Transform.from_matrix(r, self.matrix @ np.asarray(other.translation) + np.asarray(self.translation))


IDENTITY = Transform()


def quaternion_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _quaternion_jacobian(q: np.ndarray) -> np.ndarray:
    """d R / d q_k for the polynomial matrix above, shape (4, 3, 3)."""
    w, x, y, z = q
    return 2.0 * np.array([
        [[0, -z, y], [z, 0, -x], [-y, x, 0]],
        [[0, y, z], [y, -2 * x, -w], [z, w, -2 * x]],
        [[-2 * y, x, w], [x, 0, z], [-w, z, -2 * y]],
        [[-2 * z, -w, x], [w, -2 * z, y], [x, y, 0]],
    ])


def matrix_to_quaternion(rot: np.ndarray) -> np.ndarray:
    m = np.asarray(rot, dtype=float)
    tr = np.trace(m)
    if tr > 0:
        s = 2.0 * math.sqrt(tr + 1.0)
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    q = np.array(q)
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def pair_overlap(g1: GaussianSphere, g2: GaussianSphere) -> float:
    a1, a2 = g1.width, g2.width
    d2 = sum((u - v) ** 2 for u, v in zip(g1.center, g2.center))
    s = a1 + a2
    return g1.amplitude * g2.amplitude * (math.pi / s) ** 1.5 * math.exp(-a1 * a2 / s * d2)


class _PairTable:
    """Flattened list of interacting Gaussian pairs between a fixed set and a moving set.

    Holds the distance-independent prefactor and exponent for each pair so an
    evaluation costs a handful of vectorized operations.
    """

    def __init__(self, fixed: GaussianSet, moving: GaussianSet, weights: Optional[np.ndarray] = None):
        na, nb = len(fixed), len(moving)
        ii, jj = np.meshgrid(np.arange(na), np.arange(nb), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        if weights is not None:
            w = np.asarray(weights, dtype=float).reshape(na, nb).ravel()
            keep = w != 0
            ii, jj, w = ii[keep], jj[keep], w[keep]
        else:
            w = np.ones(len(ii))
        a, b = fixed.widths[ii], moving.widths[jj]
        s = a + b
        self.ii, self.jj = ii, jj
        self.prefactor = w * fixed.amplitudes[ii] * moving.amplitudes[jj] * (np.pi / s) ** 1.5
        self.exponent = a * b / s
        self.exponent2 = 2.0 * self.exponent
        self.x = fixed.centers[ii]
        self.y = moving.centers[jj]
        self.xt = np.ascontiguousarray(self.x.T)
        self.yt = np.ascontiguousarray(self.y.T)

    def terms(self, rot: np.ndarray, t: np.ndarray) -> np.ndarray:
        d = self.x - (self.y @ rot.T + t)
        return self.prefactor * np.exp(-self.exponent * np.einsum("ij,ij->i", d, d))

    def value_and_grad(self, q: np.ndarray, t: np.ndarray) -> Tuple[float, np.ndarray]:
        """Overlap and its gradient w.r.t. (q, t); the quaternion part is projected tangent to |q| = 1."""
        d = self.x - self.y @ quaternion_to_matrix(q).T
        d -= t
        e = self.prefactor * np.exp(-self.exponent * np.einsum("ij,ij->i", d, d))
        # d overlap / d moved-center
        gp = d * (self.exponent2 * e)[:, None]
        grad_t = gp.sum(axis=0)
        g00, g01, g02, g10, g11, g12, g20, g21, g22 = (gp.T @ self.y).ravel().tolist()
        w, x, y, z = q.tolist()
        gq = np.array([
            2 * (-z * g01 + y * g02 + z * g10 - x * g12 - y * g20 + x * g21),
            2 * (y * g01 + z * g02 + y * g10 - 2 * x * g11 - w * g12 + z * g20 + w * g21 - 2 * x * g22),
            2 * (-2 * y * g00 + x * g01 + w * g02 + x * g10 + z * g12 - w * g20 + z * g21 - 2 * y * g22),
            2 * (-2 * z * g00 - w * g01 + x * g02 + w * g10 - 2 * z * g11 + y * g12 + x * g20 + y * g21),
        ])
        gq -= gq.dot(q) * q
        return float(e.sum()), np.concatenate([gq, grad_t])


    def value_and_grad_batch(self, qs: np.ndarray, ts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorized :meth:`value_and_grad` over S poses: (S,4), (S,3) -> (S,), (S,7)."""
        # coordinates laid out (S, 3, P) so reductions run over contiguous rows
        d = self.xt - _batch_matrices(qs) @ self.yt
        d -= ts[:, :, None]
        e = self.prefactor * np.exp(-self.exponent * (d * d).sum(axis=1))
        gp = d * (self.exponent2 * e)[:, None, :]
        out = np.empty((len(qs), 7))
        out[:, 4:] = gp.sum(axis=2)
        grad_r = (gp @ self.y).reshape(-1, 9, 1)
        gq = (_batch_jacobians(qs) @ grad_r)[:, :, 0]
        gq -= (gq * qs).sum(axis=1)[:, None] * qs
        out[:, :4] = gq
        return e.sum(axis=1), out


# R(q) entries as quadratic forms: R_flat = (q outer q)_flat @ _QUAD
_QUAD = np.zeros((16, 9))
for _m, _terms in enumerate([
    [(0, 0, 1), (1, 1, 1), (2, 2, -1), (3, 3, -1)],
    [(1, 2, 2), (0, 3, -2)],
    [(1, 3, 2), (0, 2, 2)],
    [(1, 2, 2), (0, 3, 2)],
    [(0, 0, 1), (1, 1, -1), (2, 2, 1), (3, 3, -1)],
    [(2, 3, 2), (0, 1, -2)],
    [(1, 3, 2), (0, 2, -2)],
    [(2, 3, 2), (0, 1, 2)],
    [(0, 0, 1), (1, 1, -1), (2, 2, -1), (3, 3, 1)],
]):
    for _a, _b, _v in _terms:
        _QUAD[4 * _a + _b, _m] += _v


def _batch_matrices(qs: np.ndarray) -> np.ndarray:
    """Rotation matrices of unit quaternions, (S, 4) -> (S, 3, 3)."""
    qq = (qs[:, :, None] * qs[:, None, :]).reshape(-1, 16)
    return (qq @ _QUAD).reshape(-1, 3, 3)


# d R / d q_k (row-major) as linear maps of q: entry (k, m) = sum_c _JAC[k, m, c] q_c
_JAC = np.zeros((4, 9, 4))
for _k, _rows in enumerate([
    [(1, 3, -1), (2, 2, 1), (3, 3, 1), (5, 1, -1), (6, 2, -1), (7, 1, 1)],
    [(1, 2, 1), (2, 3, 1), (3, 2, 1), (4, 1, -2), (5, 0, -1), (6, 3, 1), (7, 0, 1), (8, 1, -2)],
    [(0, 2, -2), (1, 1, 1), (2, 0, 1), (3, 1, 1), (5, 3, 1), (6, 0, -1), (7, 3, 1), (8, 2, -2)],
    [(0, 3, -2), (1, 0, -1), (2, 1, 1), (3, 0, 1), (4, 3, -2), (5, 2, 1), (6, 1, 1), (7, 2, 1)],
]):
    for _m, _c, _v in _rows:
        _JAC[_k, _m, _c] = 2.0 * _v
_JAC_FLAT = _JAC.reshape(36, 4).T.copy()


def _batch_jacobians(qs: np.ndarray) -> np.ndarray:
    """(S, 4, 9): row-major flattened d R / d q_k for each pose."""
    return (qs @ _JAC_FLAT).reshape(-1, 4, 9)


def molecule_overlap(A, B, t: Transform = IDENTITY) -> float:
    """First-order overlap volume of A with B moved by ``t``."""
    A, B = GaussianSet.coerce(A), GaussianSet.coerce(B)
    if len(A) == 0 or len(B) == 0:
        return 0.0
    tab = _PairTable(A, B)
    return float(tab.terms(t.matrix, np.asarray(t.translation)).sum())


def overlap_gradient(A, B, t: Transform = IDENTITY) -> np.ndarray:
    """Gradient (dq_w, dq_x, dq_y, dq_z, dt_x, dt_y, dt_z) of :func:`molecule_overlap`.

    The quaternion block is the gradient of the overlap evaluated at
    ``q/|q|``, i.e. the unconstrained gradient projected onto the tangent
    space of the unit sphere.
    """
    A, B = GaussianSet.coerce(A), GaussianSet.coerce(B)
    if len(A) == 0 or len(B) == 0:
        return np.zeros(7)
    return _PairTable(A, B).value_and_grad(np.asarray(t.rotation, dtype=float), np.asarray(t.translation, dtype=float))[1]


def _same_type(types_a: np.ndarray, types_b: np.ndarray) -> np.ndarray:
    return (types_a[:, None] == types_b[None, :]).astype(float)


def color_overlap(a_colors: Sequence[ColorAtom], b_colors: Sequence[ColorAtom], t: Transform = IDENTITY) -> Tuple[np.ndarray, np.ndarray]:
    """Same-type color overlaps: (6-vector of per-type totals, per-A-color-atom row sums)."""
    by_type = np.zeros(N_COLOR_TYPES)
    per_atom = np.zeros(len(a_colors))
    if not a_colors or not b_colors:
        return by_type, per_atom
    ta = np.array([int(c.color_type) for c in a_colors])
    tb = np.array([int(c.color_type) for c in b_colors])
    A, B = GaussianSet.coerce(a_colors), GaussianSet.coerce(b_colors)
    mask = _same_type(ta, tb)
    tab = _PairTable(A, B, mask)
    terms = tab.terms(t.matrix, np.asarray(t.translation))
    np.add.at(per_atom, tab.ii, terms)
    np.add.at(by_type, ta[tab.ii], terms)
    return by_type, per_atom


@dataclass(frozen=True)
class OverlayConfig:
    w_color: float = 1.0
    max_iters: int = 200
    extra_random_starts: int = 0
    seed: int = 0


@dataclass(frozen=True)
class OverlayResult:
    transform: Transform
    shape_oab: float
    shape_oaa: float
    shape_obb: float
    color_oab_by_type: np.ndarray
    color_oaa_by_type: np.ndarray
    color_obb_by_type: np.ndarray
    query_color_atom_overlaps: np.ndarray
    query_name: str = ""
    library_name: str = ""
    objective: float = 0.0
    iterations: int = 0

    @property
    def color_oab(self) -> float:
        return float(self.color_oab_by_type.sum())

    @property
    def color_oaa(self) -> float:
        return float(self.color_oaa_by_type.sum())

    @property
    def color_obb(self) -> float:
        return float(self.color_obb_by_type.sum())


@dataclass
class PreparedMolecule:
    """Shape and color Gaussians of one molecule plus its self-overlaps."""

    name: str
    shape: GaussianSet
    color_atoms: List[ColorAtom]
    colors: GaussianSet = field(init=False)
    color_types: np.ndarray = field(init=False)
    shape_self: float = field(init=False)
    color_self_by_type: np.ndarray = field(init=False)

    def __post_init__(self):
        if len(self.shape) == 0:
            raise ValueError(f"molecule {self.name!r} has no heavy atoms")
        self.colors = GaussianSet.coerce(self.color_atoms)
        self.color_types = np.array([int(c.color_type) for c in self.color_atoms], dtype=int)
        self.shape_self = molecule_overlap(self.shape, self.shape)
        self.color_self_by_type = color_overlap(self.color_atoms, self.color_atoms)[0]


def prepare(molecule: Molecule, color_atoms: Optional[Sequence[ColorAtom]] = None) -> PreparedMolecule:
    """Heavy-atom shape Gaussians and color atoms (annotated or perceived) for ``molecule``."""
    heavy = [a for a in molecule.atoms if not a.is_hydrogen]
    shape = GaussianSet(
        np.array([a.position for a in heavy], dtype=float).reshape(-1, 3),
        np.full(len(heavy), SHAPE_AMPLITUDE),
        np.array([gaussian_width(a.vdw_radius, SHAPE_AMPLITUDE) for a in heavy]),
    )
    colors = list(color_atoms) if color_atoms is not None else color_atoms_for(molecule)
    return PreparedMolecule(molecule.name, shape, colors)


def _inertial_frame(g: GaussianSet, tol: float = 1e-6) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Weighted centroid, proper-rotation principal axes (columns, ascending moment), linear flag."""
    w = g.amplitudes * (np.pi / g.widths) ** 1.5
    c = (w[:, None] * g.centers).sum(axis=0) / w.sum()
    d = g.centers - c
    m = (w[:, None, None] * d[:, :, None] * d[:, None, :]).sum(axis=0)
    evals, evecs = np.linalg.eigh(m)
    scale = max(evals[-1], 1e-12)
    # groups of (nearly) equal moments get axes built from x, y, z in order
    groups, start = [], 0
    for k in range(1, 4):
        if k == 3 or evals[k] - evals[k - 1] > tol * scale:
            groups.append(list(range(start, k)))
            start = k
    axes = evecs.copy()
    for grp in groups:
        if len(grp) == 1:
            continue
        space = evecs[:, grp]
        basis = []
        for e in np.eye(3):
            v = space @ (space.T @ e)
            for b in basis:
                v = v - b.dot(v) * b
            if np.linalg.norm(v) > 1e-6:
                basis.append(v / np.linalg.norm(v))
            if len(basis) == len(grp):
                break
        axes[:, grp] = np.array(basis).T
    for k in range(3):
        # deterministic sign: largest-magnitude component positive
        if axes[np.argmax(np.abs(axes[:, k])), k] < 0:
            axes[:, k] = -axes[:, k]
    if np.linalg.det(axes) < 0:
        axes[:, 0] = -axes[:, 0]
    linear = len(g) > 1 and evals[1] <= tol * scale
    return c, axes, linear


_FLIPS = [np.diag(f) for f in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1))]


def _axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * k @ k


def starting_rotations(query: GaussianSet, library: GaussianSet, cfg: OverlayConfig = OverlayConfig()):
    """Centroids and the list of starting rotations for the centered library."""
    cq, vq, lin_q = _inertial_frame(query)
    cl, vl, lin_l = _inertial_frame(library)
    rots = [vq @ f @ vl.T for f in _FLIPS]
    if lin_q or lin_l:
        for angle in (math.pi / 2, -math.pi / 2):
            rots.append(vq @ vl.T @ _axis_rotation(vl[:, 2], angle))
    if cfg.extra_random_starts:
        rng = np.random.default_rng(cfg.seed)
        for _ in range(cfg.extra_random_starts):
            q = rng.normal(size=4)
            rots.append(quaternion_to_matrix(q / np.linalg.norm(q)))
    return cq, cl, rots


def _ascend(objective, q0: np.ndarray, t0: np.ndarray, max_iters: int, metric: float):
    """Projected gradient ascent with Armijo backtracking (c = 1e-4, shrink 0.5), run for
    S starting poses in lockstep.

    ``metric`` rescales the quaternion block so a unit step moves atoms about
    as far as a unit translation. Each line search starts from a
    Barzilai-Borwein step estimated from the previous iterate. A start stops
    when its relative improvement drops below 1e-6, its gradient norm below
    1e-8, or after ``max_iters`` iterations.
    """
    q, t = q0.copy(), t0.copy()
    n = len(q)
    f, g = objective(q, t)
    step = np.ones(n)
    prev_x = prev_g = None
    iters = np.zeros(n, dtype=int)
    active = np.ones(n, dtype=bool)
    scale = np.concatenate([np.full(4, 1.0 / metric), np.ones(3)])
    root = np.concatenate([np.full(4, math.sqrt(metric)), np.ones(3)])
    for _ in range(max_iters):
        direction = g * scale
        slope = np.einsum("sk,sk->s", g, direction)
        active &= (np.sqrt(np.einsum("sk,sk->s", g, g)) >= 1e-8) & (slope > 0)
        if not active.any():
            break
        x = np.hstack([q, t])
        if prev_x is not None:
            dx = (x - prev_x) * root
            dg = (g - prev_g) / root
            curv = -np.einsum("sk,sk->s", dx, dg)
            bb = np.einsum("sk,sk->s", dx, dx) / np.where(curv > 0, curv, 1.0)
            step = np.where(curv > 0, bb, step * 2.0)
        step = np.clip(step, 1e-8, 1e3)
        prev_x, prev_g = x, g.copy()

        pending = active.copy()
        new_q, new_t, new_f, new_g = q.copy(), t.copy(), f.copy(), g.copy()
        for _ in range(60):
            idx = np.flatnonzero(pending)
            if not len(idx):
                break
            qn = q[idx] + step[idx, None] * direction[idx, :4]
            qn /= np.linalg.norm(qn, axis=1)[:, None]
            tn = t[idx] + step[idx, None] * direction[idx, 4:]
            fn, gn = objective(qn, tn)
            ok = fn >= f[idx] + 1e-4 * step[idx] * slope[idx]
            acc = idx[ok]
            new_q[acc], new_t[acc], new_f[acc], new_g[acc] = qn[ok], tn[ok], fn[ok], gn[ok]
            pending[acc] = False
            step[idx[~ok]] *= 0.5
        # starts whose line search failed have converged
        active &= ~pending
        delta = new_f - f
        iters[active] += 1
        q, t, f, g = new_q, new_t, new_f, new_g
        active &= np.abs(delta) >= 1e-6 * np.abs(f)
    return f, q, t, iters


def best_overlay(query, library, cfg: OverlayConfig = OverlayConfig()) -> OverlayResult:
    """Rigidly move ``library`` onto ``query`` maximizing shape + w_color * color overlap.

    Accepts :class:`Molecule` or :class:`PreparedMolecule` inputs. Every
    starting pose is refined; the pose with the best objective wins and all
    volumes are reported there.
    """
    qp = query if isinstance(query, PreparedMolecule) else prepare(query)
    lp = library if isinstance(library, PreparedMolecule) else prepare(library)
    cq, cl, rots = starting_rotations(qp.shape, lp.shape, cfg)

    shape_c = GaussianSet(lp.shape.centers - cl, lp.shape.amplitudes, lp.shape.widths)
    color_c = GaussianSet(lp.colors.centers - cl, lp.colors.amplitudes, lp.colors.widths)
    fixed = GaussianSet(
        np.vstack([qp.shape.centers, qp.colors.centers]),
        np.concatenate([qp.shape.amplitudes, qp.colors.amplitudes]),
        np.concatenate([qp.shape.widths, qp.colors.widths]),
    )
    moving = GaussianSet(
        np.vstack([shape_c.centers, color_c.centers]),
        np.concatenate([shape_c.amplitudes, color_c.amplitudes]),
        np.concatenate([shape_c.widths, color_c.widths]),
    )
    na, ka = len(qp.shape), len(qp.colors)
    nb, kb = len(lp.shape), len(lp.colors)
    weights = np.zeros((na + ka, nb + kb))
    weights[:na, :nb] = 1.0
    if ka and kb and cfg.w_color:
        weights[na:, nb:] = cfg.w_color * _same_type(qp.color_types, lp.color_types)
    table = _PairTable(fixed, moving, weights)

    radius = math.sqrt(max(float(np.mean(np.sum(shape_c.centers ** 2, axis=1))), 1.0))
    metric = 4.0 * radius * radius

    q0 = np.array([matrix_to_quaternion(r) for r in rots])
    t0 = np.tile(cq, (len(rots), 1))
    fs, qs, ts, its = _ascend(table.value_and_grad_batch, q0, t0, cfg.max_iters, metric)
    k = int(np.argmax(fs))
    f, q, t = float(fs[k]), qs[k], ts[k]
    its = int(its[k])
    rot = quaternion_to_matrix(q)
    transform = Transform.from_arrays(q, t - rot @ cl)

    shape_oab = molecule_overlap(qp.shape, lp.shape, transform)
    by_type, per_atom = color_overlap(qp.color_atoms, lp.color_atoms, transform)
    return OverlayResult(
        transform=transform,
        shape_oab=shape_oab,
        shape_oaa=qp.shape_self,
        shape_obb=lp.shape_self,
        color_oab_by_type=by_type,
        color_oaa_by_type=qp.color_self_by_type,
        color_obb_by_type=lp.color_self_by_type,
        query_color_atom_overlaps=per_atom,
        query_name=qp.name,
        library_name=lp.name,
        objective=f,
        iterations=its,
    )
