"""Generalized real Schur (QZ) factorization of a matrix pencil and gap clustering.

Generalized eigenvalues are kept in homogeneous form: a diagonal block of
``(X1, X2)`` contributes the point ``span((x1, x2))`` of the projective line,
so that ``x2 * S1 @ z == x1 * S2 @ z`` for the matching eigenvector ``z``.
Infinite eigenvalues (``x1 == 0``) need no special casing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class GenEig:
    """A generalized eigenvalue as a unit vector in C^2.

    ``block`` is the index of the diagonal block the value came from; the two
    members of a complex-conjugate pair share it.
    """

    pair: np.ndarray
    block: int = 0
    singular: bool = False

    @classmethod
    def from_pair(cls, x1, x2, block: int = 0, singular: bool = False) -> "GenEig":
        x1, x2 = complex(x1), complex(x2)
        big = max(abs(x1), abs(x2))
        if big == 0:
            return cls(np.array([1.0, 0.0], dtype=complex), block, True)
        # Rescale first so subnormal inputs do not overflow in the division.
        x1, x2 = x1 / big, x2 / big
        nrm = math.hypot(abs(x1), abs(x2))
        # Canonical representative: first nonzero coordinate real and positive.
        lead = x1 if abs(x1) > 1e-300 * nrm else x2
        rot = lead.conjugate() / abs(lead) / nrm
        v = np.array([x1 * rot, x2 * rot])
        if np.all(np.abs(v.imag) <= 1e-15):
            v = v.real.astype(complex)
        return cls(v, block, singular)

    @classmethod
    def from_angle(cls, theta: float, block: int = 0) -> "GenEig":
        return cls.from_pair(np.cos(theta), np.sin(theta), block)

    @cached_property
    def is_real(self) -> bool:
        return bool(np.all(self.pair.imag == 0))

    @cached_property
    def theta(self) -> float:
        """Angle in [0, pi) of the (nearest) real line."""
        if self.is_real:
            v = self.pair.real
        else:
            g = self.pair[:, None]
            m = (g @ g.conj().T).real
            _, vecs = np.linalg.eigh(m)
            v = vecs[:, -1]
        th = math.atan2(v[1], v[0]) % math.pi
        return 0.0 if abs(th - math.pi) <= 1e-15 else th


def chordal(u, v) -> float:
    """Sine of the angle between two lines through the origin of K^2."""
    u0, u1 = (complex(x) for x in (u.pair if isinstance(u, GenEig) else u))
    v0, v1 = (complex(x) for x in (v.pair if isinstance(v, GenEig) else v))
    nu = math.hypot(abs(u0), abs(u1))
    nv = math.hypot(abs(v0), abs(v1))
    return min(1.0, abs(u0 * v1 - u1 * v0) / (nu * nv))


@dataclass(frozen=True)
class PencilSchur:
    """``S1 = Q @ X1 @ Z.T`` and ``S2 = Q @ X2 @ Z.T`` with quasi-triangular X1, X2."""

    Q: np.ndarray
    Z: np.ndarray
    X1: np.ndarray
    X2: np.ndarray
    blocks: tuple[tuple[int, int], ...]
    eigs: tuple[GenEig, ...]

    @property
    def size(self) -> int:
        return self.X1.shape[0]

    @property
    def has_singular(self) -> bool:
        return any(e.singular for e in self.eigs)


def _blocks_and_eigs(x1: np.ndarray, x2: np.ndarray, scale: float):
    n = x1.shape[0]
    tol = SINGULAR_RTOL * scale
    blocks, eigs = [], []
    i = 0
    while i < n:
        b = len(blocks)
        if i + 1 < n and x1[i + 1, i] != 0.0:
            w = scipy.linalg.eigvals(
                x1[i : i + 2, i : i + 2], x2[i : i + 2, i : i + 2], homogeneous_eigvals=True
            )
            for al, be in zip(w[0], w[1]):
                sing = max(abs(al), abs(be)) <= tol
                eigs.append(GenEig.from_pair(al, be, b, sing))
            blocks.append((i, 2))
            i += 2
        else:
            al, be = x1[i, i], x2[i, i]
            sing = max(abs(al), abs(be)) <= tol
            eigs.append(GenEig.from_pair(al, be, b, sing))
            blocks.append((i, 1))
            i += 1
    return tuple(blocks), tuple(eigs)


def _as_pencil(s1, s2):
    s1 = np.atleast_2d(np.asarray(s1, dtype=float))
    s2 = np.atleast_2d(np.asarray(s2, dtype=float))
    if s1.shape != s2.shape or s1.shape[0] != s1.shape[1]:
        raise ValueError(f"pencil needs two square matrices of equal size, got {s1.shape}, {s2.shape}")
    return s1, s2


def qz(s1, s2) -> PencilSchur:
    s1, s2 = _as_pencil(s1, s2)
    x1, x2, q, z = scipy.linalg.qz(s1, s2, output="real")
    scale = np.linalg.norm(s1) + np.linalg.norm(s2)
    blocks, eigs = _blocks_and_eigs(x1, x2, scale)
    return PencilSchur(q, z, x1, x2, blocks, eigs)


def reorder(ps: PencilSchur, select) -> PencilSchur:
    """Move the selected eigenvalues to the leading diagonal positions."""
    sel = np.zeros(ps.size, dtype=np.int32)
    idx = np.asarray(sorted(set(int(i) for i in select)), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= ps.size):
        raise IndexError(f"selection {idx.tolist()} out of range for size {ps.size}")
    sel[idx] = 1
    for start, size in ps.blocks:
        if size == 2 and sel[start] != sel[start + 1]:
            raise ValueError(f"selection splits the complex 2x2 block at {start}")
    if not sel.any() or sel.all():
        return ps
    x1, x2, _, _, _, q, z, _, _, _, _, info = lapack.dtgsen(
        sel, ps.X1, ps.X2, ps.Q, ps.Z, ijob=0
    )
    if info != 0:
        raise np.linalg.LinAlgError(f"dtgsen failed to reorder the pencil (info={info})")
    scale = np.linalg.norm(ps.X1) + np.linalg.norm(ps.X2)
    blocks, eigs = _blocks_and_eigs(x1, x2, scale)
    return PencilSchur(q, z, x1, x2, blocks, eigs)


def _units(eigs) -> list[list[int]]:
    """Group eigenvalue indices so that conjugate pairs travel together."""
    units: dict[tuple, list[int]] = {}
    for i, e in enumerate(eigs):
        key = ("c", e.block) if not e.is_real else ("r", i)
        units.setdefault(key, []).append(i)
    return list(units.values())


def cyclic_gaps(eigs) -> tuple[list[list[int]], np.ndarray]:
    """Units sorted by angle and the chordal gap from each unit to the next.

    The last entry is the wraparound gap between the angularly last and first
    units.  The gap between two units is the smallest chordal distance between
    their members.
    """
    eigs = list(eigs)
    units = _units(eigs)
    units.sort(key=lambda u: (eigs[u[0]].theta, u[0]))
    n = len(units)
    p = np.array([e.pair for e in eigs])
    nrm = np.linalg.norm(p, axis=1)
    dist = np.abs(np.outer(p[:, 0], p[:, 1]) - np.outer(p[:, 1], p[:, 0])) / np.outer(nrm, nrm)
    gaps = np.array([dist[np.ix_(units[k], units[(k + 1) % n])].min() for k in range(n)])
    return units, np.minimum(gaps, 1.0)


def cluster_by_gaps(eigs, threshold: float) -> list[list[int]]:
    """Split eigenvalue indices into clusters at every cyclic gap above ``threshold``.

    Fewer than two cuts yields a single cluster.
    """
    eigs = list(eigs)
    if not eigs:
        raise ValueError("no eigenvalues to cluster")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    everything = [list(range(len(eigs)))]
    if any(e.singular for e in eigs):
        return everything
    units, gaps = cyclic_gaps(eigs)
    cuts = np.flatnonzero(gaps > threshold)
    if cuts.size < 2:
        return everything
    return _cut(eigs, units, cuts)


def cluster_largest_gaps(eigs, j: int) -> list[list[int]]:
    """Split at the ``j`` largest cyclic gaps, giving ``j`` clusters (ties broken by position)."""
    eigs = list(eigs)
    units, gaps = cyclic_gaps(eigs)
    if not 2 <= j <= len(units):
        raise ValueError(f"cannot form {j} clusters from {len(units)} eigenvalue units")
    cuts = np.sort(np.argsort(-gaps, kind="stable")[:j])
    return _cut(eigs, units, cuts)


def _cut(eigs, units, cuts) -> list[list[int]]:
    n = len(units)
    clusters = []
    for a, b in zip(cuts, np.roll(cuts, -1)):
        # Units strictly after cut a up to and including cut b (cyclic).
        span = [(k % n) for k in range(a + 1, b + 1 + (n if b <= a else 0))]
        clusters.append(sorted(i for k in span for i in units[k]))
    clusters.sort(key=lambda c: min(eigs[i].theta for i in c))
    return clusters


@dataclass(frozen=True)
class ClusterSplit:
    """Eigenvalue clusters of one pencil with orthonormal eigenspace bases."""

    clusters: tuple[tuple[int, ...], ...]
    bases: tuple[np.ndarray, ...]
    gaps: np.ndarray

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.clusters)

    def __len__(self) -> int:
        return len(self.clusters)


def eigenspace_bases(ps: PencilSchur, clusters) -> ClusterSplit:
    clusters = [tuple(sorted(int(i) for i in c)) for c in clusters]
    flat = sorted(i for c in clusters for i in c)
    if flat != list(range(ps.size)):
        raise ValueError("clusters must partition the eigenvalue indices")
    bases = []
    for c in clusters:
        rps = reorder(ps, c)
        bases.append(rps.Z[:, : len(c)].copy())
    _, gaps = cyclic_gaps(ps.eigs)
    return ClusterSplit(tuple(clusters), tuple(bases), gaps)
