"""CSV and JSON emission shared by the command-line front end.

Trajectory CSV schema (header mandatory, floats printed with 9 significant
digits): t, S, I, SS, SI, II, s, i, ss, si, ii, y.  Mean-field trajectories
use t, y, i, si, ii.  Infinite critical values serialize as the literal
"inf" in CSV and as {"kind": "infinite"} in JSON.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .analytic import CriticalValue
from .macro import MacroResult

TRAJ_COLUMNS = ["t", "S", "I", "SS", "SI", "II", "s", "i", "ss", "si", "ii", "y"]
MFE_COLUMNS = ["t", "y", "i", "si", "ii"]


def _f(x: float) -> str:
    return format(float(x), ".9g")


def write_trajectory_csv(path, result: MacroResult) -> None:
    fr = result.fractions()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJ_COLUMNS)
        for k in range(len(result.times)):
            S, I, SS, SI, II = (int(v) for v in result.states[k])
            w.writerow([_f(result.times[k]), S, I, SS, SI, II,
                        _f(fr[k, 0]), _f(fr[k, 1]), _f(fr[k, 2]),
                        _f(fr[k, 3]), _f(fr[k, 4]), _f(fr[k, 5])])


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (times, counts) with counts of shape (k, 5)."""
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != TRAJ_COLUMNS:
            raise ValueError(f"unexpected trajectory header: {header}")
        times, counts = [], []
        for row in r:
            times.append(float(row[0]))
            counts.append([int(v) for v in row[1:6]])
    return np.array(times), np.array(counts, dtype=np.int64)


def write_mfe_csv(path, times: np.ndarray, states: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(MFE_COLUMNS)
        for k in range(len(times)):
            w.writerow([_f(times[k])] + [_f(v) for v in states[k]])


def read_mfe_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != MFE_COLUMNS:
            raise ValueError(f"unexpected mean-field header: {header}")
        rows = [[float(v) for v in row] for row in r]
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1:]


def read_sweep_csv(path) -> list[tuple[float, float, CriticalValue]]:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["r_plus", "r_minus", "lambda_c"]:
            raise ValueError(f"unexpected sweep header: {header}")
        rows = []
        for rp, rm, lc in r:
            cv = (CriticalValue(kind="infinite") if lc == "inf"
                  else CriticalValue(kind="finite", value=float(lc)))
            rows.append((float(rp), float(rm), cv))
    return rows


def critical_value_json(cv: CriticalValue) -> dict:
    if cv.is_finite:
        return {"kind": "finite", "value": cv.value}
    return {"kind": "infinite"}


def critical_value_csv(cv: CriticalValue) -> str:
    return _f(cv.value) if cv.is_finite else "inf"


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
