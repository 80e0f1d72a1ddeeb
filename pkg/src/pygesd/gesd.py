"""Generalized eigenspace decomposition (GESD) for third-order CPD.

The tensor is compressed with a truncated MLSVD, a pencil of the core with at
least two well separated eigenvalue clusters is searched for, the core is
split along the eigenspace bases of those clusters and every part is handled
recursively.  Rank-one leaves give columns of A and C; B is recovered at each
level by linear least squares.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import pencil as pz
from .mlsvd import expand, mlsvd_truncated
from .tensor_core import Cpd, as_tensor3, khatri_rao, mode_product, rank1_approx_matrix, unfold

log = logging.getLogger(__name__)


class GesdError(ValueError):
    pass


class IllConditionedSystem(np.linalg.LinAlgError):
    pass


SLICE_PAIR_SCHEDULES = ("anchored", "disjoint")


@dataclass(frozen=True)
class GesdConfig:
    threshold: float = 0.2
    max_random_pencils: int = 50
    seed: int = 0
    rank1_tolerance: float = 1e-6
    slice_pairs: str = "anchored"

    def __post_init__(self):
        if self.slice_pairs not in SLICE_PAIR_SCHEDULES:
            raise ValueError(f"slice_pairs must be one of {SLICE_PAIR_SCHEDULES}")
        if not 0 < self.threshold <= 1:
            raise ValueError(f"threshold must lie in (0, 1], got {self.threshold}")
        if self.max_random_pencils < 1:
            raise ValueError("max_random_pencils must be at least 1")


@dataclass(frozen=True)
class PencilTrial:
    source: str  # "mlsvd(k1,k2)" or "random(n)"
    gaps: tuple[float, ...]
    n_clusters: int


@dataclass
class NodeRecord:
    path: tuple[int, ...]
    rank: int
    trials: list[PencilTrial] = field(default_factory=list)
    sizes: tuple[int, ...] = ()
    rank1_ratio: float | None = None

    @property
    def depth(self) -> int:
        return len(self.path)

    @property
    def source(self) -> str | None:
        """Pencil that produced the accepted split, if any."""
        if self.trials and self.trials[-1].n_clusters >= 2:
            return self.trials[-1].source
        return None


@dataclass(frozen=True)
class UnresolvedBlock:
    columns: tuple[int, ...]
    mode1_basis: np.ndarray
    mode3_basis: np.ndarray


@dataclass
class GesdResult:
    cpd: Cpd
    nodes: list[NodeRecord]
    unresolved_blocks: list[UnresolvedBlock]

    @property
    def ok(self) -> bool:
        return not self.unresolved_blocks

    @property
    def first_split(self) -> tuple[int, ...]:
        return self.nodes[0].sizes if self.nodes else ()


def pencil_schedule(k: int, kind: str = "anchored") -> list[tuple[int, int]]:
    """Order in which pairs of MLSVD core slices are tried.

    ``anchored`` keeps the dominant first slice in every pencil: (0, 1), (0, 2),
    ..., (0, K-1).  ``disjoint`` uses (0, 1), (2, 3), ...
    """
    if kind == "anchored":
        return [(0, j) for j in range(1, k)]
    if kind == "disjoint":
        return [(2 * i, 2 * i + 1) for i in range(k // 2)]
    raise ValueError(f"unknown slice pair schedule {kind!r}")


def random_mixing(k: int, rng: np.random.Generator) -> np.ndarray:
    """K x 2 matrix with orthonormal columns from a Gaussian draw."""
    q, _ = np.linalg.qr(rng.standard_normal((k, 2)))
    return q


def split_once(core, cfg: GesdConfig = GesdConfig(), rng=None, trials: list | None = None):
    """Return a :class:`~pygesd.pencil.ClusterSplit` of the core, or ``None``.

    Pencils are tried in a fixed order: the MLSVD slice pairs of
    :func:`pencil_schedule`, then up to ``cfg.max_random_pencils`` random
    orthonormal slice mixtures.  The first pencil with at least two clusters
    wins.  A two-slice core has only one pencil up to rotation, so no random
    pencils are tried for it.  Each attempt is appended to ``trials`` when
    given.
    """
    core = as_tensor3(core)
    k = core.shape[2]
    if core.shape[0] != core.shape[1]:
        raise ValueError(f"core must have square frontal slices, got {core.shape}")
    if k < 2:
        return None
    rng = np.random.default_rng(cfg.seed) if rng is None else rng

    def attempt(s1, s2, source):
        ps = pz.qz(s1, s2)
        clusters = pz.cluster_by_gaps(ps.eigs, cfg.threshold)
        _, gaps = pz.cyclic_gaps(ps.eigs)
        if trials is not None:
            trials.append(PencilTrial(source, tuple(float(g) for g in gaps), len(clusters)))
        if len(clusters) >= 2:
            return pz.eigenspace_bases(ps, clusters)
        return None

    for k1, k2 in pencil_schedule(k, cfg.slice_pairs):
        split = attempt(core[:, :, k1], core[:, :, k2], f"mlsvd({k1 + 1},{k2 + 1})")
        if split is not None:
            return split
    if k == 2:
        # An orthonormal 2 x 2 mixing rotates every eigenvalue line by the same
        # angle, so random pencils would repeat the gaps just computed.
        return None
    for n in range(cfg.max_random_pencils):
        s = mode_product(core, random_mixing(k, rng).T, 3)
        split = attempt(s[:, :, 0], s[:, :, 1], f"random({n})")
        if split is not None:
            return split
    return None


def extract_rank1(sub, tol: float = 1e-6):
    """Rank-one factors ``(a, c, ok)`` of a matrix; ``a`` carries the weight.

    ``ok`` is true when the second singular value is at most ``tol`` times the
    first.
    """
    sub = np.atleast_2d(np.asarray(sub, dtype=float))
    s = np.linalg.svd(sub, compute_uv=False)
    u, sigma, v = rank1_approx_matrix(sub)
    ratio = s[1] / s[0] if s.size > 1 and s[0] > 0 else 0.0
    return sigma * u, v, bool(ratio <= tol)


def solve_b(core, a_factor, c_factor, rcond: float = 1e-10) -> np.ndarray:
    """Least-squares B in ``unfold(core, 2) = B @ khatri_rao(C, A).T``."""
    core = np.asarray(core, dtype=float)
    kr = khatri_rao(c_factor, a_factor)
    if kr.shape[0] != core.shape[0] * core.shape[2]:
        raise ValueError(f"factor sizes {a_factor.shape}, {c_factor.shape} do not fit core {core.shape}")
    s = np.linalg.svd(kr, compute_uv=False)
    if s[-1] < rcond * s[0]:
        raise IllConditionedSystem(
            f"Khatri-Rao matrix is rank deficient: condition number {s[0] / max(s[-1], 1e-300):.3e}"
        )
    b_t, *_ = np.linalg.lstsq(kr, unfold(core, 2).T, rcond=None)
    return b_t.T


def _node_rng(seed: int, path: tuple[int, ...]) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=path))


def _cycle_columns(basis: np.ndarray, r: int) -> np.ndarray:
    return basis[:, [i % basis.shape[1] for i in range(r)]]


def _decompose(t, rank, cfg, path, nodes, unresolved, offset):
    rec = NodeRecord(path, rank)
    nodes.append(rec)
    i1, i2, i3 = t.shape

    if rank == 1 and i2 == 1:
        a, c, ok = extract_rank1(t[:, 0, :], cfg.rank1_tolerance)
        s = np.linalg.svd(t[:, 0, :], compute_uv=False)
        rec.rank1_ratio = float(s[1] / s[0]) if s.size > 1 and s[0] > 0 else 0.0
        return Cpd(a[:, None], np.ones((1, 1)), c[:, None])

    k = min(i3, rank)
    m = mlsvd_truncated(t, (rank, rank, k))
    y = m.core
    if rank == 1:
        s1 = m.singular_values[0]
        rec.rank1_ratio = float(s1[1] / s1[0]) if s1.size > 1 and s1[0] > 0 else 0.0
        return expand(m, Cpd([[y[0, 0, 0]]], [[1.0]], [[1.0]]))

    split = split_once(y, cfg, _node_rng(cfg.seed, path), rec.trials)
    if split is None:
        log.info("no separating pencil at node %s (rank %d); recording unresolved block", path, rank)
        a_core = np.eye(rank)
        c_core = _cycle_columns(np.eye(k), rank)
        unresolved.append(tuple(range(offset, offset + rank)))
        rec.sizes = (rank,)
    else:
        rec.sizes = split.sizes
        a_parts, c_parts = [], []
        child_offset = offset
        for n, z in enumerate(split.bases):
            child = mode_product(y, z.T, 2)
            sub = _decompose(child, z.shape[1], cfg, path + (n,), nodes, unresolved, child_offset)
            a_parts.append(sub.A)
            c_parts.append(sub.C)
            child_offset += z.shape[1]
        a_core = np.hstack(a_parts)
        c_core = np.hstack(c_parts)
    b_core = solve_b(y, a_core, c_core)
    return expand(m, Cpd(a_core, b_core, c_core))


def gesd(t, rank: int, cfg: GesdConfig = GesdConfig()) -> GesdResult:
    """Compute a rank-``rank`` CPD of ``t`` with the generalized eigenspace decomposition."""
    t = as_tensor3(t)
    rank = int(rank)
    if rank < 1:
        raise GesdError("rank must be at least 1")
    if rank > min(t.shape[0], t.shape[1]):
        raise GesdError(f"rank {rank} exceeds min(I1, I2) = {min(t.shape[:2])}")
    nodes: list[NodeRecord] = []
    unresolved_cols: list[tuple[int, ...]] = []
    cpd = _decompose(t, rank, cfg, (), nodes, unresolved_cols, 0)
    blocks = []
    for cols in unresolved_cols:
        qa, _ = np.linalg.qr(cpd.A[:, cols])
        qc, _ = np.linalg.qr(cpd.C[:, cols])
        blocks.append(UnresolvedBlock(cols, qa, qc))
    return GesdResult(cpd, nodes, blocks)
