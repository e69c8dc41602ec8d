"""Sampling from the symmetric two-cluster model X = y mu^T + Z Sigma^(1/2).

Labels y are Rademacher, rows of Z are isotropic (standard normal or
Rademacher entries), and the observed labels y_hat are y with each sign
flipped independently with probability eta.

Randomness discipline: every random object is drawn from a dedicated stream
keyed by (master seed, trial index, stream role), so parallel trials are
independent and bitwise reproducible regardless of scheduling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidParams
from .spectrum import Spectrum

__all__ = [
    "ProblemSpec",
    "Dataset",
    "rng_stream",
    "sample_dataset",
    "flip_labels",
    "test_point",
    "test_error",
    "dump_dataset",
]

LAWS = ("gaussian", "rademacher")

# Stream roles; the integers go into the SeedSequence spawn key.
_ROLES = {"Z": 0, "y": 1, "flips": 2, "test": 3}


def rng_stream(master_seed: int, role: str, trial: int = 0, key: tuple = ()) -> np.random.Generator:
    """Independent, reproducible generator for (seed, trial, role, key)."""
    if role not in _ROLES:
        raise InvalidParams(f"unknown stream role {role!r}")
    spawn = (_ROLES[role], trial) + tuple(int(x) & 0xFFFFFFFFFFFFFFFF for x in key)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=spawn)))


@dataclass(frozen=True)
class ProblemSpec:
    """Full experiment description for one sampling distribution."""

    spectrum: Spectrum
    mu: np.ndarray
    n: int
    eta: float = 0.0
    lambda_reg: float = 0.0
    law: str = "gaussian"

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        object.__setattr__(self, "mu", mu)
        p = self.spectrum.p
        if mu.shape != (p,):
            raise InvalidParams(f"mu has shape {mu.shape}, expected ({p},)")
        if not 0.0 <= self.eta < 0.5:
            raise InvalidParams(f"eta={self.eta} outside [0, 1/2)")
        if self.law not in LAWS:
            raise InvalidParams(f"law must be one of {LAWS}, got {self.law!r}")
        if p <= self.n:
            raise InvalidParams(f"overparameterized regime requires p > n, got p={p}, n={self.n}")

    def with_mu(self, mu) -> "ProblemSpec":
        return ProblemSpec(self.spectrum, mu, self.n, self.eta, self.lambda_reg, self.law)

    def with_lambda(self, lambda_reg: float) -> "ProblemSpec":
        return ProblemSpec(self.spectrum, self.mu, self.n, self.eta, lambda_reg, self.law)


@dataclass(frozen=True)
class Dataset:
    """One sampled training set.  Q = Z * sqrt(lambda_j) columnwise, exactly."""

    Z: np.ndarray
    Q: np.ndarray
    y: np.ndarray
    y_hat: np.ndarray
    seed: int
    trial: int
    problem: ProblemSpec

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def p(self) -> int:
        return self.Z.shape[1]

    def X(self) -> np.ndarray:
        """Design matrix y mu^T + Q (materialized on demand)."""
        return self.Q + np.outer(self.y, self.problem.mu)


def _draw_z(rng: np.random.Generator, shape, law: str) -> np.ndarray:
    if law == "gaussian":
        return rng.standard_normal(shape)
    return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0


def flip_labels(y: np.ndarray, eta: float, seed, trial: int = 0, key: tuple = ()) -> np.ndarray:
    """Independently negate each label with probability eta.

    ``seed`` may be an integer master seed or a ready Generator.
    """
    if not 0.0 <= eta < 0.5:
        raise InvalidParams(f"eta={eta} outside [0, 1/2)")
    y = np.asarray(y, dtype=np.float64)
    if eta == 0.0:
        return y.copy()
    rng = seed if isinstance(seed, np.random.Generator) else rng_stream(seed, "flips", trial, key)
    mask = rng.random(len(y)) < eta
    return np.where(mask, -y, y)


def sample_dataset(problem: ProblemSpec, seed: int, trial: int = 0, key: tuple = ()) -> Dataset:
    """Draw (Z, Q, y, y_hat) for one trial; deterministic given (seed, trial, key)."""
    n, p = problem.n, problem.spectrum.p
    y = rng_stream(seed, "y", trial, key).integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
    Z = _draw_z(rng_stream(seed, "Z", trial, key), (n, p), problem.law)
    Q = Z * np.sqrt(problem.spectrum.values)
    y_hat = flip_labels(y, problem.eta, seed, trial, key)
    return Dataset(Z, Q, y, y_hat, seed, trial, problem)


def test_point(problem: ProblemSpec, seed: int, trial: int = 0, key: tuple = ()):
    """One fresh draw (x, y, y_hat) from the population."""
    rng = rng_stream(seed, "test", trial, key)
    y = 1.0 if rng.integers(0, 2) else -1.0
    z = _draw_z(rng, problem.spectrum.p, problem.law)
    x = y * problem.mu + np.sqrt(problem.spectrum.values) * z
    y_hat = y
    if problem.eta > 0 and rng.random() < problem.eta:
        y_hat = -y
    return x, y, y_hat


def test_error(
    problem: ProblemSpec,
    w: np.ndarray,
    draws: int,
    seed: int,
    trial: int = 0,
    key: tuple = (),
    chunk: int = 2000,
):
    """Monte-Carlo misclassification of the fixed classifier sign(w.x).

    Returns (error vs clean labels, error vs noise-flipped labels).  Points
    are drawn in chunks to bound memory at chunk * p floats.
    """
    if draws < 1:
        raise InvalidParams("draws must be >= 1")
    rng = rng_stream(seed, "test", trial, key)
    sqrt_l = np.sqrt(problem.spectrum.values)
    mu_w = float(problem.mu @ w)
    wrong_clean = 0
    wrong_noisy = 0
    left = draws
    while left > 0:
        m = min(chunk, left)
        y = rng.integers(0, 2, size=m).astype(np.float64) * 2.0 - 1.0
        z = _draw_z(rng, (m, len(w)), problem.law)
        scores = y * mu_w + (z * sqrt_l) @ w
        pred = np.where(scores >= 0, 1.0, -1.0)
        y_hat = y.copy()
        if problem.eta > 0:
            flip = rng.random(m) < problem.eta
            y_hat[flip] = -y_hat[flip]
        wrong_clean += int(np.sum(pred != y))
        wrong_noisy += int(np.sum(pred != y_hat))
        left -= m
    return wrong_clean / draws, wrong_noisy / draws


def dump_dataset(dataset: Dataset, directory, spectrum_ref: str = "") -> None:
    """Raw little-endian binary dump with a JSON sidecar.

    Layout: Z.f64 (row-major n x p float64), y.i8, yhat.i8, meta.json.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dataset.Z.astype("<f8").tofile(directory / "Z.f64")
    dataset.y.astype(np.int8).tofile(directory / "y.i8")
    dataset.y_hat.astype(np.int8).tofile(directory / "yhat.i8")
    meta = {
        "shape": [dataset.n, dataset.p],
        "law": dataset.problem.law,
        "seed": dataset.seed,
        "trial": dataset.trial,
        "eta": dataset.problem.eta,
        "lambda": dataset.problem.lambda_reg,
        "spectrum": spectrum_ref,
    }
    with open(directory / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def dump_solution(w: np.ndarray, directory) -> None:
    """Weight vector in the same raw binary layout (w.f64 next to Z.f64)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.asarray(w, dtype=np.float64).astype("<f8").tofile(directory / "w.f64")
