"""Seeded experiment sweeps: GESD vs GEVD accuracy and timing, bound validation,
the adversarial two-equal-eigenvalue fixture and rank scaling.

Every runner returns a list of row dicts (one schema per experiment, see
``*_FIELDS``) and leaves writing to :func:`write_csv`.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import pencil as pz
from .bounds import BoundReport, balanced_scaling, corollary_bound
from .gesd import GesdConfig, gesd
from .gevd import DefectivePencilWarning, gevd
from .metrics import cpderr, noise_for_snr, principal_angles
from .synth import FactorSpec, Problem, gen_problem
from .tensor_core import Cpd, from_cpd, mode_product

EXPERIMENTS = ("decompose", "compare", "bound_sweep", "adversarial", "asymp")
METHODS = ("gesd", "gevd")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "compare"
    dims: tuple[int, int, int] = (10, 10, 10)
    rank: int = 10
    factors: str = "uniform"
    snr_grid: tuple[float, ...] = (0.0, 10.0, 20.0)
    noiseless: bool = False
    trials: int = 50
    threshold: float = 0.2
    unitaries: int = 5
    seed: int = 0
    method: str = "both"
    ranks: tuple[int, ...] = (10, 20, 50)
    max_random_pencils: int = 50
    workers: int = 1
    out: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not all(math.isfinite(s) for s in self.snr_grid):
            raise ValueError("SNR grid must be finite")
        if self.method not in METHODS + ("both",):
            raise ValueError(f"unknown method {self.method!r}")
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ValueError("dims must be three positive integers")
        FactorSpec.parse(self.factors)

    @property
    def methods(self) -> tuple[str, ...]:
        return METHODS if self.method == "both" else (self.method,)

    def config_hash(self) -> str:
        """Short digest of every parameter that affects non-timing results."""
        d = asdict(self)
        for k in ("out", "workers"):
            d.pop(k)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]


def parse_grid(text: str) -> tuple[float, ...]:
    """``a:b:step`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        a, b, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return tuple(float(a + i * step) for i in range(max(n, 0)))
    return tuple(float(x) for x in text.split(",") if x.strip())


def write_csv(rows: list[dict], fields: list[str], path_or_file) -> None:
    own = isinstance(path_or_file, str) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
    finally:
        if own:
            fh.close()


def _pmap(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


# ---------------------------------------------------------------- decompose


@dataclass
class MethodRun:
    method: str
    cpd: Cpd | None
    seconds: float
    ok: bool
    failure: str = ""
    detail: object = None


def run_method(method: str, t, rank: int, gcfg: GesdConfig) -> MethodRun:
    """Run one decomposition; wall-clock time covers the decomposition only."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DefectivePencilWarning)
        start = time.perf_counter()
        try:
            if method == "gesd":
                res = gesd(t, rank, gcfg)
                cpd, detail = res.cpd, res
            else:
                cpd, detail = gevd(t, rank), None
        except (ValueError, np.linalg.LinAlgError) as exc:
            return MethodRun(method, None, time.perf_counter() - start, False, f"{type(exc).__name__}: {exc}")
        seconds = time.perf_counter() - start
    failure = ""
    if method == "gesd" and not detail.ok:
        failure = "unresolved blocks " + ";".join(str(len(b.columns)) for b in detail.unresolved_blocks)
    if any(issubclass(w.category, DefectivePencilWarning) for w in caught):
        failure = "defective pencil"
    return MethodRun(method, cpd, seconds, not failure, failure, detail)


def _err(truth: Cpd, run: MethodRun) -> float:
    return cpderr(truth, run.cpd).max if run.cpd is not None else float("nan")


# ---------------------------------------------------------------- compare

COMPARE_FIELDS = [
    "experiment", "kind", "method", "rank", "dims", "factors", "snr_db", "trial",
    "seed", "config_hash", "cpderr", "time_s", "ok", "failure", "n_trials", "n_failed",
]


def _snr_label(snr) -> str:
    return "inf" if snr is None else f"{snr:g}"


def _trial_seed(seed: int, *keys: int) -> list[int]:
    return [int(seed), *(int(k) for k in keys)]


def _compare_trial(job):
    cfg, dims, rank, si, snr, trial, threshold = job
    spec = FactorSpec.parse(cfg.factors)
    prob = gen_problem(dims, rank, spec, snr_db=snr, seed=_trial_seed(cfg.seed, rank, si, trial))
    gcfg = GesdConfig(threshold=threshold, max_random_pencils=cfg.max_random_pencils, seed=cfg.seed)
    rows = []
    for method in cfg.methods:
        run = run_method(method, prob.noisy, rank, gcfg)
        rows.append(dict(
            experiment=cfg.experiment, kind="trial", method=method, rank=rank,
            dims="x".join(map(str, dims)), factors=cfg.factors, snr_db=_snr_label(snr),
            trial=trial, seed=cfg.seed, config_hash=cfg.config_hash(), cpderr=_err(prob.truth, run),
            time_s=run.seconds, ok=run.ok, failure=run.failure,
        ))
    return rows


def _medians(trial_rows: list[dict], keys: tuple[str, ...]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for r in trial_rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    out = []
    for rows in groups.values():
        errs = np.array([r["cpderr"] for r in rows], dtype=float)
        m = dict(rows[0])
        m.update(
            kind="median", trial="", ok="", failure="",
            cpderr=float(np.median(errs[np.isfinite(errs)])) if np.isfinite(errs).any() else float("nan"),
            time_s=float(np.median([r["time_s"] for r in rows])),
            n_trials=len(rows), n_failed=sum(not r["ok"] for r in rows),
        )
        out.append(m)
    return out


def run_compare(cfg: ExperimentConfig) -> list[dict]:
    """Per-trial and median cpderr / decomposition time of GESD and GEVD over an SNR grid."""
    grid: list[float | None] = list(cfg.snr_grid) + ([None] if cfg.noiseless else [])
    jobs = [
        (cfg, cfg.dims, cfg.rank, si, snr, n, cfg.threshold)
        for si, snr in enumerate(grid)
        for n in range(cfg.trials)
    ]
    trials = [r for rows in _pmap(_compare_trial, jobs, cfg.workers) for r in rows]
    return trials + _medians(trials, ("snr_db", "method"))


def run_asymp(cfg: ExperimentConfig) -> list[dict]:
    """Noiseless R x R x R rank-R tensors over a rank grid, threshold ``min(5/R, threshold)``."""
    jobs = [
        (cfg, (r, r, r), r, 0, None, n, min(5.0 / r, cfg.threshold))
        for r in cfg.ranks
        for n in range(cfg.trials)
    ]
    trials = [r for rows in _pmap(_compare_trial, jobs, cfg.workers) for r in rows]
    return trials + _medians(trials, ("rank", "method"))


# ---------------------------------------------------------------- bound sweep

BOUND_FIELDS = [
    "experiment", "kind", "snr_db", "trial", "seed", "config_hash", "unitaries",
    "angle_e12_deg", "max_angle_truth_deg", "ok", "failure", "eps_bound", "bound_snr_db",
    "best_unitary", "best_pencil", "n_trials", "n_failed",
]


@dataclass(frozen=True)
class BoundSetup:
    problem: Problem
    report: BoundReport
    truth_groups: tuple[tuple[int, ...], ...]

    @property
    def bound_snr_db(self) -> float:
        return bound_line_db(self.problem.noiseless, self.report.eps)


def bound_line_db(t, eps: float) -> float:
    """SNR at which the noise norm equals the guaranteed radius ``eps``."""
    return float("inf") if eps <= 0 else 20.0 * math.log10(np.linalg.norm(t) / eps)


def _best_pencil(t, u: np.ndarray, index: int) -> tuple[np.ndarray, np.ndarray]:
    s = mode_product(t, u, 3)
    return s[:, :, 2 * index], s[:, :, 2 * index + 1]


def bound_setup(cfg: ExperimentConfig) -> BoundSetup:
    r = cfg.rank
    dims = (r, r, r)
    prob = gen_problem(dims, r, FactorSpec.parse(cfg.factors), seed=_trial_seed(cfg.seed))
    report = corollary_bound(prob.noiseless, prob.truth, j=2, num_unitaries=cfg.unitaries, seed=cfg.seed)
    uc = report.U @ prob.truth.C
    k = report.best_pencil
    eigs = [pz.GenEig.from_pair(x1, x2) for x1, x2 in zip(uc[2 * k], uc[2 * k + 1])]
    groups = tuple(tuple(g) for g in pz.cluster_largest_gaps(eigs, 2))
    return BoundSetup(prob, report, groups)


def split_subspace_angles(t, setup: BoundSetup) -> tuple[float, float]:
    """Angles (radians) for the two eigenspaces of the selected pencil of ``t``.

    Returns the smallest principal angle between ``B^T Z1`` and ``B^T Z2`` (pi/2
    when exact) and the largest principal angle between each ``range(Z_i)`` and
    the span of its matched group of columns of ``B^{-T}``, maximized over i.
    """
    b = setup.problem.truth.B
    s1, s2 = _best_pencil(t, setup.report.U, setup.report.best_pencil)
    ps = pz.qz(s1, s2)
    split = pz.eigenspace_bases(ps, pz.cluster_largest_gaps(ps.eigs, 2))
    z1, z2 = split.bases
    e1, e2 = b.T @ z1, b.T @ z2
    angle_e12 = float(np.min(principal_angles(e1, e2)))

    binvt = np.linalg.inv(b).T
    true = [binvt[:, list(g)] for g in setup.truth_groups]

    def worst(z, y):
        if z.shape[1] != y.shape[1]:
            return math.pi / 2
        return float(np.max(principal_angles(z, y)))

    direct = max(worst(z1, true[0]), worst(z2, true[1]))
    swapped = max(worst(z1, true[1]), worst(z2, true[0]))
    return angle_e12, min(direct, swapped)


def _bound_trial(job):
    cfg, setup, si, snr, trial = job
    t = setup.problem.noiseless
    rng = np.random.default_rng(_trial_seed(cfg.seed, si, trial))
    noisy = t + noise_for_snr(t, snr, rng)
    row = dict(
        experiment="bound_sweep", kind="trial", snr_db=f"{snr:g}", trial=trial, seed=cfg.seed,
        config_hash=cfg.config_hash(), unitaries=cfg.unitaries, ok=True, failure="",
    )
    try:
        e12, tr = split_subspace_angles(noisy, setup)
        row.update(angle_e12_deg=math.degrees(e12), max_angle_truth_deg=math.degrees(tr))
    except (ValueError, np.linalg.LinAlgError) as exc:
        row.update(angle_e12_deg=float("nan"), max_angle_truth_deg=float("nan"), ok=False,
                   failure=f"first split failed: {exc}")
    return row


def run_bound_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Eigenspace separation vs SNR for one fixed low-rank tensor, with the bound's SNR line."""
    setup = bound_setup(cfg)
    jobs = [(cfg, setup, si, snr, n) for si, snr in enumerate(cfg.snr_grid) for n in range(cfg.trials)]
    trials = _pmap(_bound_trial, jobs, cfg.workers)
    extra = dict(eps_bound=setup.report.eps, bound_snr_db=setup.bound_snr_db,
                 best_unitary=setup.report.best_unitary, best_pencil=setup.report.best_pencil)
    for r in trials:
        r.update(extra)
    means = []
    for snr in dict.fromkeys(r["snr_db"] for r in trials):
        rows = [r for r in trials if r["snr_db"] == snr]
        good = [r for r in rows if r["ok"]]
        m = dict(rows[0])
        m.update(
            kind="mean", trial="", ok="", failure="",
            angle_e12_deg=float(np.mean([r["angle_e12_deg"] for r in good])) if good else float("nan"),
            max_angle_truth_deg=float(np.mean([r["max_angle_truth_deg"] for r in good])) if good else float("nan"),
            n_trials=len(rows), n_failed=len(rows) - len(good),
        )
        means.append(m)
    return trials + means


# ---------------------------------------------------------------- adversarial

ADVERSARIAL_FIELDS = ["experiment", "method", "cpderr", "time_s", "ok", "first_split", "trail", "threshold"]


def adversarial_problem() -> Problem:
    """Rank-3 tensor whose first two MLSVD slices share a double eigenvalue.

    The truth is returned with balanced column scaling (unit C columns and
    equal-norm A and B columns).
    """
    h = 1.0 / math.sqrt(2.0)
    a = np.array([[1.0, 0.0, 0.0], [0.0, h, h], [0.0, h, -h]])
    c = np.array([[1.0, 1.0, 1.0], [1.0, 0.5, 0.5], [0.0, 0.2, -0.2]])
    t = from_cpd(Cpd(a, a, c))
    ab, bb, cb = balanced_scaling(a, a, c)
    return Problem(t, Cpd(ab, bb, cb), t)


def _trail(res) -> str:
    parts = []
    for node in res.nodes:
        for tr in node.trials:
            gaps = ",".join(f"{g:.4g}" for g in tr.gaps)
            parts.append(f"node{list(node.path)} {tr.source} gaps[{gaps}] -> {tr.n_clusters}")
    return " | ".join(parts)


def run_adversarial(threshold: float = 0.02, seed: int = 0) -> list[dict]:
    prob = adversarial_problem()
    gcfg = GesdConfig(threshold=threshold, seed=seed)
    rows = []
    for method in METHODS:
        run = run_method(method, prob.noisy, 3, gcfg)
        row = dict(experiment="adversarial", method=method, cpderr=_err(prob.truth, run),
                   time_s=run.seconds, ok=run.ok, threshold=threshold if method == "gesd" else "")
        if method == "gesd" and run.detail is not None:
            row.update(first_split="/".join(map(str, sorted(run.detail.first_split))),
                       trail=_trail(run.detail))
        rows.append(row)
    return rows


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
