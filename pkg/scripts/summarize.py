"""Print median tables from CSVs written by ``pygesd compare`` / ``asymp`` / ``bound-sweep``.

Usage: python3 scripts/summarize.py results/*.csv
"""
import argparse
import csv
from collections import defaultdict


def summarize(path: str) -> None:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return
    print(f"== {path}")
    kind = rows[0]["experiment"]
    if kind in ("compare", "asymp"):
        key = "snr_db" if kind == "compare" else "rank"
        table = defaultdict(dict)
        for r in rows:
            if r["kind"] == "median":
                table[r[key]][r["method"]] = (float(r["cpderr"]), float(r["time_s"]), r["n_failed"])
        print(f"{key:>8} {'gesd err':>10} {'gevd err':>10} {'ratio':>7} {'t_gesd/t_gevd':>14}")
        for k, m in table.items():
            g, v = m.get("gesd"), m.get("gevd")
            if g and v:
                print(f"{k:>8} {g[0]:10.3e} {v[0]:10.3e} {v[0] / g[0]:7.2f} {g[1] / v[1]:14.2f}")
    elif kind == "bound_sweep":
        print(f"bound line {float(rows[0]['bound_snr_db']):.1f} dB")
        for r in rows:
            if r["kind"] == "mean":
                print(f"{r['snr_db']:>6} dB  angle(E1,E2) {float(r['angle_e12_deg']):7.2f} deg  "
                      f"max truth angle {float(r['max_angle_truth_deg']):8.3f} deg  failed {r['n_failed']}")
    else:
        for r in rows:
            print(f"{r['method']:>5} cpderr {float(r['cpderr']):.3e} first split {r.get('first_split', '')}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("paths", nargs="+")
    for path in p.parse_args().paths:
        summarize(path)


if __name__ == "__main__":
    main()
