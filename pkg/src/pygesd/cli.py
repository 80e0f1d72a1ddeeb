"""Command-line front end: ``pygesd <subcommand> [flags]``.

Every subcommand writes a UTF-8 CSV with a header row (``--out``, default
stdout is not used for CSV) and prints a short summary table.  Parameters may
also come from a ``--config`` file in INI key/value form; command-line flags
take precedence over the file.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import sys
from dataclasses import fields

import numpy as np

from . import experiments as ex
from .gesd import GesdConfig
from .io import load_cpd, load_tensor, save_cpd
from .metrics import cpderr
from .synth import FactorSpec, gen_problem
from .tensor_core import from_cpd

log = logging.getLogger("pygesd")

CONFIG_KEYS = {f.name for f in fields(ex.ExperimentConfig)}


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in str(text).replace(",", " ").split())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


CONVERTERS = {
    "dims": _ints, "ranks": _ints, "snr_grid": ex.parse_grid, "noiseless": _bool,
    "rank": int, "trials": int, "unitaries": int, "seed": int, "workers": int,
    "max_random_pencils": int, "threshold": float,
}


def read_config(path) -> dict:
    """Flat ``key = value`` pairs from the ``[experiment]`` section (or the file top level)."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if not text.lstrip().startswith("["):
        text = "[experiment]\n" + text
    parser.read_string(text)
    section = parser["experiment"] if parser.has_section("experiment") else parser.defaults()
    out = {}
    for key, value in section.items():
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}: unknown config key {key!r}")
        out[key] = CONVERTERS.get(key, str)(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with experiment parameters")
    common.add_argument("--dims", nargs=3, type=int, metavar=("I1", "I2", "I3"))
    common.add_argument("--rank", type=int)
    common.add_argument("--ranks", type=_ints, help="rank grid for asymp, e.g. '10,20,50'")
    common.add_argument("--factors", help="normal | uniform | correlated:<degrees>")
    common.add_argument("--snr-grid", type=ex.parse_grid, help="a:b:step (inclusive) or a,b,c")
    common.add_argument("--noiseless", action="store_const", const=True, help="add a noiseless column")
    common.add_argument("--trials", type=int)
    common.add_argument("--threshold", type=float)
    common.add_argument("--max-random-pencils", type=int)
    common.add_argument("--unitaries", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--method", choices=("gesd", "gevd", "both"))
    common.add_argument("--workers", type=int, help="parallel trial processes (default: CPU count)")
    common.add_argument("--out", help="CSV output path")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="pygesd", description="GESD / GEVD tensor decomposition experiments")
    sub = p.add_subparsers(dest="command", required=True)
    dec = sub.add_parser("decompose", parents=[common], help="decompose one tensor")
    dec.add_argument("--input", help="tensor file; a synthetic problem is generated when absent")
    dec.add_argument("--truth", help="factor sidecar file with the true CPD")
    dec.add_argument("--snr", type=float, help="noise level for the synthetic problem")
    dec.add_argument("--factors-out", help="prefix for estimated factor sidecar files")
    sub.add_parser("compare", parents=[common], help="GESD vs GEVD over an SNR grid")
    sub.add_parser("bound-sweep", parents=[common], help="eigenspace separation vs the deterministic bound")
    sub.add_parser("adversarial", parents=[common], help="double-eigenvalue fixture")
    sub.add_parser("asymp", parents=[common], help="noiseless R x R x R scaling in R")
    return p


DEFAULTS = {
    "compare": dict(dims=(100, 100, 100), rank=10, trials=50),
    "bound_sweep": dict(dims=(4, 4, 4), rank=4, trials=50, snr_grid=ex.parse_grid("0:120:10")),
    "asymp": dict(trials=20, ranks=(10, 20, 50)),
    "adversarial": dict(trials=1, threshold=0.02, rank=3, dims=(3, 3, 3)),
    "decompose": dict(trials=1),
}


def config_from_args(args) -> ex.ExperimentConfig:
    experiment = args.command.replace("-", "_")
    values = dict(DEFAULTS.get(experiment, {}))
    values["workers"] = os.cpu_count() or 1
    if args.config:
        values.update(read_config(args.config))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = tuple(v) if key == "dims" else v
    values["experiment"] = experiment
    if experiment == "bound_sweep" and "dims" not in values:
        values["dims"] = (values["rank"],) * 3
    return ex.ExperimentConfig(**values)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.3e}"
    return str(x)


def print_table(rows: list[dict], cols: list[str], stream=None) -> None:
    if not rows:
        return
    stream = sys.stdout if stream is None else stream
    cells = [[_fmt(r.get(c, "")) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    print("  ".join(c.ljust(w) for c, w in zip(cols, widths)), file=stream)
    for row in cells:
        print("  ".join(v.ljust(w) for v, w in zip(row, widths)), file=stream)


DECOMPOSE_FIELDS = ["experiment", "method", "rank", "dims", "seed", "config_hash", "cpderr",
                    "rel_residual", "time_s", "ok", "failure"]


def run_decompose(cfg: ex.ExperimentConfig, args) -> list[dict]:
    truth = None
    if args.input:
        t = load_tensor(args.input)
    else:
        prob = gen_problem(cfg.dims, cfg.rank, FactorSpec.parse(cfg.factors), snr_db=args.snr, seed=cfg.seed)
        t, truth = prob.noisy, prob.truth
    if args.truth:
        truth = load_cpd(args.truth)
    gcfg = GesdConfig(threshold=cfg.threshold, max_random_pencils=cfg.max_random_pencils, seed=cfg.seed)
    rows = []
    for method in cfg.methods:
        run = ex.run_method(method, t, cfg.rank, gcfg)
        resid = float("nan")
        if run.cpd is not None:
            resid = float(np.linalg.norm(t - from_cpd(run.cpd)) / np.linalg.norm(t))
            if args.factors_out:
                save_cpd(f"{args.factors_out}.{method}.cpd", run.cpd)
        rows.append(dict(
            experiment="decompose", method=method, rank=cfg.rank, dims="x".join(map(str, t.shape)),
            seed=cfg.seed, config_hash=cfg.config_hash(),
            cpderr=cpderr(truth, run.cpd).max if truth is not None and run.cpd is not None else float("nan"),
            rel_residual=resid, time_s=run.seconds, ok=run.ok, failure=run.failure,
        ))
    return rows


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"pygesd: {exc}", file=sys.stderr)
        return 2

    exp = cfg.experiment
    if exp == "decompose":
        rows, fields_, show = run_decompose(cfg, args), DECOMPOSE_FIELDS, DECOMPOSE_FIELDS[1:2] + ["cpderr", "rel_residual", "time_s", "ok"]
        summary = rows
    elif exp in ("compare", "asymp"):
        rows = ex.run_compare(cfg) if exp == "compare" else ex.run_asymp(cfg)
        fields_ = ex.COMPARE_FIELDS
        summary = [r for r in rows if r["kind"] == "median"]
        show = ["rank", "snr_db", "method", "cpderr", "time_s", "n_trials", "n_failed"]
    elif exp == "bound_sweep":
        rows, fields_ = ex.run_bound_sweep(cfg), ex.BOUND_FIELDS
        summary = [r for r in rows if r["kind"] == "mean"]
        show = ["snr_db", "angle_e12_deg", "max_angle_truth_deg", "n_failed", "bound_snr_db"]
    else:
        rows, fields_ = ex.run_adversarial(cfg.threshold, cfg.seed), ex.ADVERSARIAL_FIELDS
        summary = rows
        show = ["method", "cpderr", "time_s", "first_split"]

    if cfg.out:
        ex.write_csv(rows, fields_, cfg.out)
    print_table(summary, show)
    if exp == "adversarial":
        print("GESD trail:", rows[0].get("trail", ""))
    if cfg.out:
        print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
