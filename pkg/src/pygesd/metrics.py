"""Factor-matrix error, SNR and principal angles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .tensor_core import Cpd, frob_norm


@dataclass(frozen=True)
class CpdErr:
    errors: tuple[float, float, float]
    perm: np.ndarray  # est column perm[r] is matched to truth column r
    scales: np.ndarray  # (3, R) per-factor least-squares column scales

    @property
    def max(self) -> float:
        return max(self.errors)

    def __float__(self) -> float:
        return self.max


def _unit_cols(m: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(m, axis=0)
    n[n == 0] = 1.0
    return m / n


def cpderr(truth: Cpd, est: Cpd) -> CpdErr:
    """Per-factor relative errors after optimal column matching and scaling.

    The permutation minimizes the summed ``1 - |cos|`` between matched columns
    over the three factors; each matched estimated column is then scaled by
    its least-squares coefficient against the truth column.
    """
    if truth.rank != est.rank:
        raise ValueError(f"rank mismatch: {truth.rank} vs {est.rank}")
    if truth.shape != est.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {est.shape}")
    cost = np.zeros((truth.rank, truth.rank))
    for f, g in zip(truth.factors, est.factors):
        cost += 1.0 - np.abs(_unit_cols(f).T @ _unit_cols(g))
    _, perm = linear_sum_assignment(cost)

    errors, scales = [], []
    for f, g in zip(truth.factors, est.factors):
        g = g[:, perm]
        denom = np.sum(g * g, axis=0)
        denom[denom == 0] = 1.0
        s = np.sum(f * g, axis=0) / denom
        errors.append(float(np.linalg.norm(f - g * s) / np.linalg.norm(f)))
        scales.append(s)
    return CpdErr(tuple(errors), perm, np.array(scales))


def snr_db(signal, noise) -> float:
    nn = frob_norm(noise)
    if nn == 0:
        return float("inf")
    return 20.0 * np.log10(frob_norm(signal) / nn)


def noise_for_snr(t, snr: float, rng: np.random.Generator) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if not np.isfinite(snr):
        raise ValueError("target SNR must be finite")
    n = rng.standard_normal(t.shape)
    return n * (frob_norm(t) / frob_norm(n) * 10.0 ** (-snr / 20.0))


def add_noise(t, snr: float, rng: np.random.Generator) -> np.ndarray:
    """Add iid Gaussian noise scaled to the requested SNR in dB."""
    return np.asarray(t, dtype=float) + noise_for_snr(t, snr, rng)


def principal_angles(x, y) -> np.ndarray:
    """Principal angles between ``range(x)`` and ``range(y)``, largest first."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] != y.shape[0]:
        raise ValueError("subspaces live in spaces of different dimension")
    for m in (x, y):
        if np.linalg.matrix_rank(m) < m.shape[1]:
            raise ValueError("principal angles need full column rank bases")
    return scipy.linalg.subspace_angles(x, y)
