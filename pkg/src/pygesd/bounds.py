"""Deterministic perturbation bound for two (or J) separated eigenvalue clusters.

For an exact pencil ``[[A, B, C]]`` with unit-norm columns of C, every pencil
within distance ``min(eps1, eps2)`` keeps at least J distinct generalized
eigenvalues, where ``eps1 = smin(A) smin(B) delta``, ``delta`` is the J-th
largest cyclic half-gap between the sorted eigenvalues and ``eps2`` is the
distance to the nearest pencil that is not slice mix invertible (here replaced
by the cheap lower bound ``max_k smin(T_k)``).  Disjoint pencils of
``T x_3 U`` combine into a Frobenius radius for the whole tensor.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .pencil import GenEig, chordal
from .tensor_core import Cpd, mode_product

DISTINCT_TOL = 1e-12
RANK_TOL = 1e-12


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x n orthogonal matrix (QR with sign correction)."""
    if n < 1:
        raise ValueError("n must be positive")
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def _as_eigs(eigs) -> list[GenEig]:
    return [e if isinstance(e, GenEig) else GenEig.from_pair(*e) for e in eigs]


def delta_j(eigs, j: int = 2) -> float:
    """J-th largest half chordal gap between angularly adjacent eigenvalues."""
    eigs = _as_eigs(eigs)
    if j < 1:
        raise ValueError("J must be positive")
    order = sorted(eigs, key=lambda e: e.theta)
    n = len(order)
    halves = np.sort([chordal(order[r], order[(r + 1) % n]) / 2 for r in range(n)])[::-1]
    distinct = int(np.sum(halves > DISTINCT_TOL)) if n > 1 else 1
    if distinct < j or j > n:
        return 0.0
    return float(halves[j - 1])


def balanced_scaling(a, b, c=None) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Move column weights so C is unit-norm and ``|a_r| == |b_r|``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = np.linalg.norm(a, axis=0)
    nb = np.linalg.norm(b, axis=0)
    weight = na * nb
    if c is not None:
        c = np.asarray(c, dtype=float)
        nc = np.linalg.norm(c, axis=0)
        weight = weight * nc
        c = c / np.where(nc == 0, 1.0, nc)
    root = np.sqrt(weight)
    a = a / np.where(na == 0, 1.0, na) * root
    b = b / np.where(nb == 0, 1.0, nb) * root
    return a, b, c


def _smin(m: np.ndarray) -> float:
    s = np.linalg.svd(m, compute_uv=False)
    if m.shape[0] < m.shape[1]:
        return 0.0
    return float(s[-1])


def eps1(a_factor, b_factor, delta: float, c_factor=None) -> float:
    """``smin(A) smin(B) delta`` after balanced rescaling of the factors."""
    a, b, _ = balanced_scaling(a_factor, b_factor, c_factor)
    sa, sb = _smin(a), _smin(b)
    if sa <= RANK_TOL * max(np.linalg.norm(a), 1e-300) or sb <= RANK_TOL * max(np.linalg.norm(b), 1e-300):
        return 0.0
    return sa * sb * float(delta)


def eps2_lower(t) -> float:
    """``max_k smin(T_k)``, a lower bound on the distance to singular pencils."""
    t = np.asarray(t, dtype=float)
    return max(float(np.linalg.svd(t[:, :, k], compute_uv=False)[-1]) for k in range(t.shape[2]))


@dataclass(frozen=True)
class PencilBound:
    delta: float
    eps1: float
    eps2_lower: float

    @property
    def eps(self) -> float:
        return min(self.eps1, self.eps2_lower)


def pencil_bound_parts(pencil, truth: Cpd, j: int = 2) -> PencilBound:
    pencil = np.asarray(pencil, dtype=float)
    if pencil.ndim != 3 or pencil.shape[2] != 2:
        raise ValueError(f"expected an R x R x 2 pencil, got {pencil.shape}")
    a, b, c = balanced_scaling(truth.A, truth.B, truth.C)
    e2 = eps2_lower(pencil)
    invertible = (
        _smin(a) > RANK_TOL * np.linalg.norm(a)
        and _smin(b) > RANK_TOL * np.linalg.norm(b)
        and np.all(np.linalg.norm(truth.C, axis=0) > RANK_TOL * np.linalg.norm(truth.C))
    )
    if not invertible:
        return PencilBound(0.0, 0.0, e2)
    d = delta_j([GenEig.from_pair(*col) for col in c.T], j)
    return PencilBound(d, eps1(a, b, d), e2)


def pencil_bound(pencil, truth: Cpd, j: int = 2) -> float:
    """Frobenius radius around an exact pencil that keeps J distinct eigenvalues."""
    return pencil_bound_parts(pencil, truth, j).eps


@dataclass(frozen=True)
class BoundRecord:
    unitary_index: int
    pencil_index: int
    delta: float
    eps1: float
    eps2_lower: float
    eps_pencil: float
    eps_aggregate: float


@dataclass
class BoundReport:
    records: list[BoundRecord]
    eps: float
    U: np.ndarray
    best_unitary: int
    best_pencil: int
    J: int

    def per_unitary(self) -> np.ndarray:
        n = max(r.unitary_index for r in self.records) + 1
        out = np.zeros(n)
        for r in self.records:
            out[r.unitary_index] = r.eps_aggregate
        return out

    def to_csv(self, path_or_file) -> None:
        fields = list(BoundRecord.__dataclass_fields__)
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(fields)
            for r in self.records:
                w.writerow([getattr(r, f) for f in fields])
        finally:
            if own:
                fh.close()


def unitary_stream(seed, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def bound_for_unitary(t, truth: Cpd, u: np.ndarray, j: int = 2) -> list[PencilBound]:
    s = mode_product(t, u, 3)
    uc = u @ truth.C
    parts = []
    for k in range(s.shape[2] // 2):
        sl = slice(2 * k, 2 * k + 2)
        parts.append(pencil_bound_parts(s[:, :, sl], Cpd(truth.A, truth.B, uc[sl]), j))
    return parts


def corollary_bound(
    t, truth: Cpd, j: int = 2, num_unitaries: int = 5, seed=0, unitaries=None
) -> BoundReport:
    """Best aggregated bound over ``num_unitaries`` Haar orthogonal mixings.

    Unitary ``i`` is drawn from a stream keyed by ``(seed, i)``, so a larger
    ``num_unitaries`` always tries a superset of the smaller one.  Explicit
    ``unitaries`` override the random draw.
    """
    t = np.asarray(t, dtype=float)
    k = t.shape[2]
    if k < 2:
        raise ValueError("need at least two frontal slices")
    if unitaries is None:
        unitaries = [haar_orthogonal(k, unitary_stream(seed, i)) for i in range(num_unitaries)]
    records, best = [], (-1.0, 0, 0)
    for i, u in enumerate(unitaries):
        parts = bound_for_unitary(t, truth, u, j)
        eps_vec = np.array([p.eps for p in parts])
        agg = float(np.linalg.norm(eps_vec))
        for kk, p in enumerate(parts):
            records.append(BoundRecord(i, kk, p.delta, p.eps1, p.eps2_lower, p.eps, agg))
        if agg > best[0]:
            best = (agg, i, int(np.argmax(eps_vec)))
    return BoundReport(records, best[0], np.asarray(unitaries[best[1]]), best[1], best[2], j)
