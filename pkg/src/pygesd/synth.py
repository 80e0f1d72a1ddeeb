"""Synthetic CPD problems: factor sampling and noisy tensors."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .metrics import add_noise
from .tensor_core import Cpd, from_cpd, khatri_rao

log = logging.getLogger(__name__)

DISTRIBUTIONS = ("standard_normal", "uniform01", "correlated")


@dataclass(frozen=True)
class FactorSpec:
    distribution: str = "uniform01"
    angle_degrees: float = 10.0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.distribution == "correlated" and not 0 < self.angle_degrees < 90:
            raise ValueError("correlation angle must lie in (0, 90) degrees")

    @classmethod
    def parse(cls, text: str) -> "FactorSpec":
        """``normal``, ``uniform`` or ``correlated:<degrees>``."""
        name, _, arg = text.partition(":")
        name = {"normal": "standard_normal", "uniform": "uniform01"}.get(name, name)
        if name == "correlated":
            return cls(name, float(arg) if arg else 10.0)
        return cls(name)


def gen_factor(spec: FactorSpec, rows: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    if spec.distribution == "standard_normal":
        return rng.standard_normal((rows, rank))
    if spec.distribution == "uniform01":
        return rng.uniform(0.0, 1.0, (rows, rank))

    # Every column after the first sits at a fixed angle from the first one.
    a1 = rng.uniform(0.0, 1.0, rows)
    while np.linalg.norm(a1) == 0:
        a1 = rng.uniform(0.0, 1.0, rows)
    scale = np.linalg.norm(a1)
    u1 = a1 / scale
    th = np.deg2rad(spec.angle_degrees)
    out = np.empty((rows, rank))
    out[:, 0] = a1
    retries = 0
    for r in range(1, rank):
        while True:
            w = rng.standard_normal(rows)
            w -= (w @ u1) * u1
            nw = np.linalg.norm(w)
            if nw > 1e-8 * np.sqrt(rows):
                break
            retries += 1
        out[:, r] = scale * (np.cos(th) * u1 + np.sin(th) * w / nw)
    if retries:
        log.info("correlated factor: %d degenerate draws redrawn", retries)
    return out


@dataclass(frozen=True)
class Problem:
    noisy: np.ndarray
    truth: Cpd
    noiseless: np.ndarray


def _full_rank(cpd: Cpd) -> bool:
    s = np.linalg.svd(khatri_rao(cpd.C, cpd.A), compute_uv=False)
    return s[-1] > 1e-8 * s[0]


def gen_problem(
    dims,
    rank: int,
    spec_a: FactorSpec = FactorSpec(),
    spec_b: FactorSpec | None = None,
    spec_c: FactorSpec | None = None,
    snr_db: float | None = None,
    seed=0,
) -> Problem:
    """Random rank-``rank`` tensor of size ``dims`` with optional Gaussian noise."""
    i1, i2, i3 = (int(d) for d in dims)
    spec_b = spec_a if spec_b is None else spec_b
    spec_c = spec_a if spec_c is None else spec_c
    rng = np.random.default_rng(seed)
    attempt = 0
    while True:
        truth = Cpd(
            gen_factor(spec_a, i1, rank, rng),
            gen_factor(spec_b, i2, rank, rng),
            gen_factor(spec_c, i3, rank, rng),
        )
        if _full_rank(truth):
            break
        attempt += 1
        log.warning("rank-deficient Khatri-Rao product drawn (seed=%s); regenerating (%d)", seed, attempt)
    noiseless = from_cpd(truth)
    noisy = noiseless if snr_db is None else add_noise(noiseless, snr_db, rng)
    return Problem(noisy, truth, noiseless)
