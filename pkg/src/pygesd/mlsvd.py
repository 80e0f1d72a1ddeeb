"""Truncated multilinear SVD (orthogonal Tucker compression)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .tensor_core import Cpd, as_tensor3, mode_product, unfold


@dataclass(frozen=True)
class Mlsvd:
    """Column-orthonormal bases ``V1, V2, V3`` and the compressed core."""

    V1: np.ndarray
    V2: np.ndarray
    V3: np.ndarray
    core: np.ndarray
    singular_values: tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def bases(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.V1, self.V2, self.V3)

    def reconstruct(self) -> np.ndarray:
        t = mode_product(self.core, self.V1, 1)
        t = mode_product(t, self.V2, 2)
        return mode_product(t, self.V3, 3)


def _fix_signs(u: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry of each column made positive.
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def _left_svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left singular vectors and singular values of ``m``.

    Wide matrices are first reduced by a QR factorization of ``m.T`` so the
    right singular vectors are never formed.
    """
    rows, cols = m.shape
    if cols > 2 * rows:
        r = scipy.linalg.qr(m.T, mode="r", check_finite=False)[0][:rows]
        m = r.T
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    return u, s


def mlsvd_truncated(t: np.ndarray, target) -> Mlsvd:
    t = as_tensor3(t)
    target = tuple(int(r) for r in target)
    if len(target) != 3:
        raise ValueError("target must give one size per mode")
    for r, n in zip(target, t.shape):
        if not 1 <= r <= n:
            raise ValueError(f"truncation target {target} incompatible with dims {t.shape}")

    bases, svals = [], []
    for mode, r in enumerate(target, start=1):
        u, s = _left_svd(unfold(t, mode))
        bases.append(_fix_signs(u[:, :r]))
        svals.append(s)

    core = t
    for mode, v in enumerate(bases, start=1):
        core = mode_product(core, v.T, mode)
    return Mlsvd(bases[0], bases[1], bases[2], core, tuple(svals))


def expand(m: Mlsvd, core_cpd: Cpd) -> Cpd:
    """Map factors computed on the core back to the original space."""
    if core_cpd.shape != m.core.shape:
        raise ValueError(f"core CPD shape {core_cpd.shape} does not match core {m.core.shape}")
    return Cpd(m.V1 @ core_cpd.A, m.V2 @ core_cpd.B, m.V3 @ core_cpd.C)
