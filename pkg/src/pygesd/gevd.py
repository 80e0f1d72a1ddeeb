"""Classical single-pencil GEVD baseline on the first two MLSVD core slices."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .mlsvd import expand, mlsvd_truncated
from .tensor_core import Cpd, as_tensor3, rank1_approx_matrix, unfold

EIGVEC_COND_LIMIT = 1e12


class DefectivePencilWarning(RuntimeWarning):
    pass


@dataclass
class GevdResult:
    cpd: Cpd
    complex_pairs: int = 0
    eigvec_condition: float = 1.0
    notes: list[str] = field(default_factory=list)


def _real_eigenvectors(vecs: np.ndarray) -> tuple[np.ndarray, int]:
    """Replace each conjugate eigenvector pair by its real and imaginary parts."""
    out = np.empty(vecs.shape, dtype=float)
    pairs = 0
    j, n = 0, vecs.shape[1]
    while j < n:
        v = vecs[:, j]
        if np.any(np.abs(v.imag) > 1e-14 * np.abs(v).max()) and j + 1 < n:
            out[:, j] = v.real
            out[:, j + 1] = v.imag
            pairs += 1
            j += 2
        else:
            out[:, j] = v.real
            j += 1
    return out, pairs


def gevd_full(t, rank: int) -> GevdResult:
    t = as_tensor3(t)
    rank = int(rank)
    if rank < 1:
        raise ValueError("rank must be at least 1")
    if rank > min(t.shape[0], t.shape[1]):
        raise ValueError(f"rank {rank} exceeds min(I1, I2) = {min(t.shape[:2])}")
    k = min(t.shape[2], rank)
    m = mlsvd_truncated(t, (rank, rank, k))
    y = m.core
    if rank == 1:
        return GevdResult(expand(m, Cpd([[y[0, 0, 0]]], [[1.0]], [[1.0]])))
    if k < 2:
        raise ValueError("GEVD needs at least two frontal slices after compression")

    # Right eigenvectors of (S1, S2) are the columns of B^{-T} (up to scaling);
    # dggev computes them by QZ followed by back-substitution.
    _, vecs = scipy.linalg.eig(y[:, :, 0], y[:, :, 1])
    z, pairs = _real_eigenvectors(vecs)
    result = GevdResult(cpd=None, complex_pairs=pairs)  # type: ignore[arg-type]
    if pairs:
        result.notes.append(f"{pairs} complex eigenvector pair(s) replaced by real/imag parts")
    cond = float(np.linalg.cond(z))
    result.eigvec_condition = cond
    if not np.isfinite(cond) or cond > EIGVEC_COND_LIMIT:
        warnings.warn(
            f"eigenvector matrix condition {cond:.3e} exceeds {EIGVEC_COND_LIMIT:.0e}",
            DefectivePencilWarning,
            stacklevel=2,
        )
        result.notes.append("defective pencil")

    # B = Z^{-T}; then unfold(Y, 2) = B (C kr A)^T is solved for (C kr A)^T.
    b_core = np.linalg.pinv(z).T
    kr_t, *_ = np.linalg.lstsq(b_core, unfold(y, 2), rcond=None)
    a_core = np.empty((rank, rank))
    c_core = np.empty((k, rank))
    for r in range(rank):
        col = kr_t[r].reshape(rank, k, order="F")
        u, s, v = rank1_approx_matrix(col)
        a_core[:, r] = s * u
        c_core[:, r] = v
    result.cpd = expand(m, Cpd(a_core, b_core, c_core))
    return result


def gevd(t, rank: int) -> Cpd:
    """Rank-``rank`` CPD from one generalized eigenvalue decomposition."""
    return gevd_full(t, rank).cpd
