"""Plain-text tensor and factor files.

Tensor file::

    dims I1 I2 I3
    <I1*I2*I3 values, first index fastest, whitespace separated>

Factor sidecar::

    cpd R
    factor A I1 R
    <I1 rows of R values>
    factor B I2 R
    ...
"""
from __future__ import annotations

import numpy as np

from .tensor_core import Cpd, as_tensor3, unfold


def save_tensor(path, t) -> None:
    t = as_tensor3(t)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("dims {} {} {}\n".format(*t.shape))
        np.savetxt(fh, t.ravel(order="F"), fmt="%.17g")


def load_tensor(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "dims":
            raise ValueError(f"{path}: expected 'dims I1 I2 I3' header")
        dims = tuple(int(x) for x in header[1:])
        data = np.array(fh.read().split(), dtype=float)
    if data.size != np.prod(dims):
        raise ValueError(f"{path}: {data.size} values for dims {dims}")
    return as_tensor3(data.reshape(dims, order="F"))


def save_cpd(path, cpd: Cpd) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"cpd {cpd.rank}\n")
        for name, f in zip("ABC", cpd.factors):
            fh.write(f"factor {name} {f.shape[0]} {f.shape[1]}\n")
            np.savetxt(fh, f, fmt="%.17g")


def load_cpd(path) -> Cpd:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines or lines[0][0] != "cpd":
        raise ValueError(f"{path}: expected 'cpd R' header")
    factors, pos = {}, 1
    while pos < len(lines):
        tag, name, rows, cols = lines[pos]
        if tag != "factor":
            raise ValueError(f"{path}: unexpected line {' '.join(lines[pos])!r}")
        rows, cols = int(rows), int(cols)
        block = lines[pos + 1 : pos + 1 + rows]
        factors[name] = np.array(block, dtype=float).reshape(rows, cols)
        pos += 1 + rows
    return Cpd(factors["A"], factors["B"], factors["C"])


def save_unfolding_csv(path, t, mode: int) -> None:
    np.savetxt(path, unfold(t, mode), delimiter=",", fmt="%.17g")
