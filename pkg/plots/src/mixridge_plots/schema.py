"""The sweep CSV column contract, restated here so this package never
imports the producer.  Readers reject files that do not match it."""

from __future__ import annotations

import csv
from pathlib import Path


class SchemaMismatch(Exception):
    """CSV does not match the documented column contract."""


BOUNDS_COLUMNS = [
    "k",
    "lambda",
    "Lambda",
    "V",
    "DeltaV",
    "B",
    "Diamond2",
    "M",
    "N",
    "sigma_eta",
    "t",
    "numerator",
    "denominator",
    "ratio",
    "sqrtV",
    "diamond_term",
    "noise_term",
    "precondition_ok",
]

EMPIRICAL_COLUMNS = [
    "alpha_hat",
    "ci_low",
    "ci_high",
    "trials",
    "dropped",
    "train_residual_med",
    "test_error_med",
]

KEY_COLUMNS = {
    "mu": ["mu_scale"],
    "lambda": [],
    "phase": ["q", "n", "r", "s"],
    "demo": ["mu_scale"],
}


def columns_for(kind: str) -> list:
    if kind not in KEY_COLUMNS:
        raise SchemaMismatch(f"unknown sweep kind {kind!r}")
    return KEY_COLUMNS[kind] + ["seed", "eps", "eta"] + BOUNDS_COLUMNS + EMPIRICAL_COLUMNS


def read_rows(path, kind: str) -> list[dict]:
    """Parse one sweep CSV into dicts with floats where cells are nonempty."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaMismatch(f"cannot read {path}: {exc}")
    want = columns_for(kind)
    if not rows or rows[0] != want:
        got = rows[0] if rows else []
        raise SchemaMismatch(
            f"{path.name}: header does not match the {kind!r} contract "
            f"(got {got[:4]}..., want {want[:4]}...)"
        )
    if len(rows) == 1:
        raise SchemaMismatch(f"{path.name}: no data rows")
    out = []
    for raw in rows[1:]:
        if len(raw) != len(want):
            raise SchemaMismatch(f"{path.name}: row width {len(raw)} != {len(want)}")
        rec = {}
        for name, cell in zip(want, raw):
            if cell == "":
                rec[name] = None
            else:
                try:
                    rec[name] = float(cell)
                except ValueError:
                    raise SchemaMismatch(f"{path.name}: non-numeric cell {cell!r} in {name}")
        out.append(rec)
    return out
