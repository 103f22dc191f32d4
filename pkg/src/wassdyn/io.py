"""Snapshot formats: measures and plans as CSV, pairing results as JSON.

Floats are written with 17 significant digits so load(save(x)) reproduces x
bit for bit.  All writes go through a temp file plus rename.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .measures import DiscreteMeasure, VelocityMeasure
from .pairings import PairingResult
from .transport import Coupling


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_measure(path: str, mu: DiscreteMeasure) -> None:
    header = "w," + ",".join(f"x{k + 1}" for k in range(mu.dim))
    lines = [header]
    for w, pt in zip(mu.weights, mu.points):
        lines.append(",".join([_fmt(w)] + [_fmt(c) for c in pt]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_measure(path: str) -> DiscreteMeasure:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return DiscreteMeasure(data[:, 1:], data[:, 0])


def save_velocity_measure(path: str, phi: VelocityMeasure) -> None:
    d = phi.dim
    header = ("w," + ",".join(f"x{k + 1}" for k in range(d)) + ","
              + ",".join(f"v{k + 1}" for k in range(d)))
    lines = [header]
    for w, x, v in zip(phi.weights, phi.x, phi.v):
        lines.append(",".join([_fmt(w)] + [_fmt(c) for c in x] + [_fmt(c) for c in v]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_velocity_measure(path: str) -> VelocityMeasure:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    d = (data.shape[1] - 1) // 2
    return VelocityMeasure(data[:, 1:1 + d], data[:, 1 + d:], data[:, 0])


def save_plan(path: str, plan: Coupling) -> None:
    lines = ["i,j,mass"]
    for i, j, m in zip(plan.rows, plan.cols, plan.mass):
        lines.append(f"{int(i)},{int(j)},{_fmt(m)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_plan(path: str):
    """Plan entries as (rows, cols, mass) arrays; endpoint measures are not
    stored in the CSV and must be supplied to rebuild a Coupling."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return (data[:, 0].astype(np.intp), data[:, 1].astype(np.intp), data[:, 2])


def pairing_to_record(result: PairingResult) -> dict:
    return {
        "value": result.value,
        "side": result.side,
        "witness_entries": [
            [int(i), int(j), float(m)]
            for i, j, m in zip(result.witness.rows, result.witness.cols,
                               result.witness.mass)
        ],
    }


def save_pairing(path: str, result: PairingResult) -> None:
    atomic_write_text(path, json.dumps(pairing_to_record(result), indent=2,
                                       sort_keys=True) + "\n")
