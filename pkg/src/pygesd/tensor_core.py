"""Dense third-order tensors, unfoldings, modal products and CPD evaluation.

Tensors are plain ``numpy.ndarray`` objects of shape ``(I1, I2, I3)``.
Unfoldings follow a fixed column order: for mode 1 the column index of
fiber ``t[:, j, k]`` is ``j + I2 * k``; for mode 2 the column of
``t[i, :, k]`` is ``i + I1 * k``; for mode 3 the column of ``t[i, j, :]`` is
``i + I1 * j``.  With this convention

    unfold(from_cpd(Cpd(A, B, C)), 2) == B @ khatri_rao(C, A).T

holds exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_tensor3(t) -> np.ndarray:
    """Validate and convert ``t`` to a float64 array of order three."""
    arr = np.asarray(t, dtype=float)
    if arr.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={arr.ndim}")
    if min(arr.shape) < 1:
        raise ValueError(f"tensor dimensions must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains NaN or Inf entries")
    return arr


@dataclass(frozen=True)
class Cpd:
    """Factor matrices of a canonical polyadic decomposition ``[[A, B, C]]``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        factors = []
        for name in ("A", "B", "C"):
            f = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if f.ndim != 2:
                raise ValueError(f"factor {name} must be a matrix")
            if not np.all(np.isfinite(f)):
                raise ValueError(f"factor {name} has non-finite entries")
            factors.append(f)
            object.__setattr__(self, name, f)
        ranks = {f.shape[1] for f in factors}
        if len(ranks) != 1:
            raise ValueError(f"factors disagree on rank: {[f.shape for f in factors]}")
        for name, f in zip("ABC", factors):
            if np.any(np.all(f == 0, axis=0)):
                raise ValueError(f"factor {name} has a zero column")

    @property
    def rank(self) -> int:
        return self.A.shape[1]

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])

    @property
    def factors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.A, self.B, self.C)

    def permuted(self, perm) -> "Cpd":
        perm = np.asarray(perm)
        return Cpd(self.A[:, perm], self.B[:, perm], self.C[:, perm])


def _check_mode(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    return mode - 1


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding with the lower remaining index varying fastest."""
    ax = _check_mode(mode)
    t = np.asarray(t)
    return np.moveaxis(t, ax, 0).reshape(t.shape[ax], -1, order="F")


def refold(m: np.ndarray, mode: int, shape) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of the given ``shape``."""
    ax = _check_mode(mode)
    shape = tuple(int(s) for s in shape)
    rest = [s for i, s in enumerate(shape) if i != ax]
    m = np.asarray(m)
    if m.shape != (shape[ax], rest[0] * rest[1]):
        raise ValueError(f"matrix of shape {m.shape} cannot refold to {shape} along mode {mode}")
    moved = m.reshape([shape[ax]] + rest, order="F")
    return np.moveaxis(moved, 0, ax)


def mode_product(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """Multiply every mode-``mode`` fiber of ``t`` by the matrix ``m``."""
    ax = _check_mode(mode)
    t = np.asarray(t, dtype=float)
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[1] != t.shape[ax]:
        raise ValueError(
            f"mode-{mode} product needs {t.shape[ax]} columns, matrix is {m.shape}"
        )
    out = np.tensordot(m, t, axes=(1, ax))
    return np.moveaxis(out, 0, ax)


def khatri_rao(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product, ``x`` index varying slowest."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"column counts differ: {x.shape[1]} vs {y.shape[1]}")
    return (x[:, None, :] * y[None, :, :]).reshape(-1, x.shape[1])


def from_cpd(cpd: Cpd) -> np.ndarray:
    """Evaluate ``sum_r a_r o b_r o c_r``."""
    return np.einsum("ir,jr,kr->ijk", cpd.A, cpd.B, cpd.C)


def frob_norm(t: np.ndarray) -> float:
    return float(np.linalg.norm(np.ravel(t)))


def rank1_approx_matrix(m: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
    """Leading singular triple ``(u, sigma, v)`` of ``m``."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return u[:, 0], float(s[0]), vt[0]


def frontal_slices(t: np.ndarray) -> list[np.ndarray]:
    return [t[:, :, k] for k in range(t.shape[2])]
