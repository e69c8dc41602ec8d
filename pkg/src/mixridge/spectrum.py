"""Covariance spectra: construction, tail energies, and split indices.

A spectrum is a nonincreasing positive sequence lambda_1 >= ... >= lambda_p,
always interpreted in the (fixed) eigenbasis of the covariance.  The central
derived quantity is the regularized tail energy

    Lambda(k, lam) = lam + sum_{i > k} lambda_i,

which the rest of the toolkit treats as the implicit regularization that the
tail of the covariance adds to the explicit ridge parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, InvalidSpectrum, NoKStar

__all__ = [
    "Spectrum",
    "TailSummary",
    "CorollaryInstance",
    "make_explicit",
    "make_bilevel",
    "make_corollary_example",
    "lambda_tail",
    "k_star",
    "tail_summary",
    "read_spectrum",
    "write_spectrum",
]

# Extended-precision dtype for the cached backward partial sums; falls back to
# float64 on platforms without 80-bit floats.
_ACC = np.longdouble if np.finfo(np.longdouble).eps < np.finfo(np.float64).eps else np.float64


def _suffix_sums(values: np.ndarray) -> np.ndarray:
    """Backward partial sums s[k] = sum_{i>k} values_i for k = 0..p (s[p]=0),
    accumulated in extended precision."""
    acc = np.cumsum(values[::-1].astype(_ACC))[::-1]
    out = np.zeros(len(values) + 1)
    out[:-1] = acc.astype(np.float64)
    return out


@dataclass(frozen=True)
class Spectrum:
    """Immutable nonincreasing positive eigenvalue sequence.

    Cached suffix sums make Lambda(k) and tail square sums O(1) per query,
    which matters in sweeps that touch every k.
    """

    values: np.ndarray
    _tail_sums: np.ndarray = field(repr=False, compare=False)
    _tail_sq_sums: np.ndarray = field(repr=False, compare=False)

    @property
    def p(self) -> int:
        return len(self.values)

    def tail_sum(self, k: int) -> float:
        """sum_{i > k} lambda_i, 0 <= k <= p."""
        return float(self._tail_sums[k])

    def tail_sq_sum(self, k: int) -> float:
        """sum_{i > k} lambda_i^2, 0 <= k <= p."""
        return float(self._tail_sq_sums[k])

    def __len__(self) -> int:
        return len(self.values)


def make_explicit(values) -> Spectrum:
    """Wrap an explicit eigenvalue sequence, validating the invariants."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidSpectrum("spectrum must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise InvalidSpectrum("spectrum contains non-finite entries")
    if np.any(arr <= 0):
        raise InvalidSpectrum("eigenvalues must be strictly positive")
    if np.any(np.diff(arr) > 0):
        raise InvalidSpectrum("eigenvalues must be nonincreasing")
    arr = arr.copy()
    arr.setflags(write=False)
    return Spectrum(arr, _suffix_sums(arr), _suffix_sums(arr**2))


def make_bilevel(n: int, s: float, q: float, r: float) -> Spectrum:
    """Two-level spectrum: p = round(n^s) eigenvalues, the first floor(n^r)
    equal to n^(s-q-r) and the rest equal to (1 - n^-q) / (1 - n^(r-s)).

    Constraints: 0 <= r < 1 < s and 0 <= q < s - r.  q = 0 makes the second
    level zero and the resulting InvalidSpectrum propagates.
    """
    if n < 2:
        raise InvalidParams("bilevel spectrum needs n >= 2")
    if not (0 <= r < 1 < s):
        raise InvalidParams(f"need 0 <= r < 1 < s, got r={r}, s={s}")
    if not (0 <= q < s - r):
        raise InvalidParams(f"need 0 <= q < s - r, got q={q}, s-r={s - r}")
    p = int(round(n**s))
    spike_count = int(math.floor(n**r + 1e-9))
    spike = float(n) ** (s - q - r)
    low = (1.0 - float(n) ** (-q)) / (1.0 - float(n) ** (r - s))
    values = np.full(p, low)
    values[:spike_count] = spike
    return make_explicit(values)


def lambda_tail(spec: Spectrum, k: int, lambda_reg: float = 0.0) -> float:
    """Regularized tail energy lam + sum_{i>k} lambda_i.  Exact partial sums;
    may be negative for strongly negative lam (caller decides what that means).

    k = p is accepted and gives lam alone (empty-tail convention).
    """
    if not 0 <= k <= spec.p:
        raise InvalidParams(f"split index k={k} outside [0, {spec.p}]")
    return lambda_reg + spec.tail_sum(k)


def k_star(spec: Spectrum, lambda_reg: float, n: int, strict: bool = False):
    """Smallest kappa in {0, ..., p-1} with lam + sum_{i>kappa} lambda_i
    >= n * lambda_{kappa+1}, together with the tail energy at that kappa.

    ``strict=True`` uses the strict ``>`` variant of the inequality instead;
    the two differ only at exact equality.
    """
    if n < 1:
        raise InvalidParams("n must be >= 1")
    vals = spec.values
    for kappa in range(spec.p):
        tail = lambda_reg + spec.tail_sum(kappa)
        thresh = n * vals[kappa]
        if (tail > thresh) if strict else (tail >= thresh):
            return kappa, tail
    raise NoKStar(
        f"no split index in [0, {spec.p - 1}] satisfies the tail-dominance "
        f"inequality at lambda={lambda_reg}, n={n}"
    )


@dataclass(frozen=True)
class TailSummary:
    """Tail energies at a given split plus the effective-rank margin
    Lambda / max(n * lambda_{k+1}, sqrt(n * sum_{i>k} lambda_i^2))."""

    k: int
    lambda_reg: float
    Lambda: float
    tail_sq_sum: float
    margin: float


def tail_summary(spec: Spectrum, k: int, lambda_reg: float, n: int) -> TailSummary:
    if not 0 <= k < spec.p:
        raise InvalidParams(f"split index k={k} outside [0, {spec.p - 1}]")
    Lam = lambda_tail(spec, k, lambda_reg)
    sq = spec.tail_sq_sum(k)
    denom = max(n * spec.values[k], math.sqrt(n * sq))
    margin = Lam / denom if denom > 0 else math.inf
    return TailSummary(k, lambda_reg, Lam, sq, margin)


@dataclass(frozen=True)
class CorollaryInstance:
    """A fully specified negative-regularization example: spectrum, mean
    vector, the (negative) regularization, and the measured precondition
    margins (each must be > 1 for the construction to be in-regime)."""

    spectrum: Spectrum
    mu: np.ndarray
    lambda_reg: float
    margins: dict
    binding: str

    def __iter__(self):
        # Allows ``spec, mu, lam = make_corollary_example(...)``.
        return iter((self.spectrum, self.mu, self.lambda_reg))


def _geometry_destroy(n: int, k: int, c1: float, dim_factor: float, a_snr: float) -> CorollaryInstance:
    # Head decays as k^{-4i/k}; tail is flat at (c1/e) * n / (p k^4); the mean
    # is equal on the first k coordinates and scaled until the SNR step holds.
    from . import bounds as _bounds  # local import: bounds depends on spectrum

    p = int(round(dim_factor * n))
    if p <= n:
        raise InvalidParams("geometry-destroy needs p > n; raise dim_factor")
    alpha = 4.0 * math.log(k) / k
    head = np.exp(-alpha * np.arange(1, k + 1))
    low = (c1 / math.e) * n / (p * k**4)
    if low >= head[-1]:
        raise InvalidParams("tail level crosses the head; lower dim_factor or raise k")
    values = np.concatenate([head, np.full(p - k, low)])
    spec = make_explicit(values)
    tail_mass = spec.tail_sum(k)
    lam = -((c1 - 1.0) / c1) * tail_mass
    Lam = lam + tail_mass

    direction = np.zeros(p)
    direction[:k] = 1.0
    # Scale the mean so that n*Diamond^2 >= V and N >= a_snr*Diamond with a
    # factor-4 safety margin; both conditions are monotone in the scale.
    qs1 = _bounds.quantities(spec, direction, n, k, lam)
    scale = 2.0 * max(
        math.sqrt(max(qs1.V, 1.0 / n) / (n * qs1.Diamond2)),
        a_snr * math.sqrt(qs1.Diamond2) / qs1.N,
        1e-12,
    )
    mu = scale * direction
    qs = _bounds.quantities(spec, mu, n, k, lam)

    head_mu = mu[:k]
    norm_sq = float(head_mu @ head_mu)
    sig = float(np.sqrt(head @ head_mu**2))
    sig_inv = float(np.sqrt((head_mu**2 / head).sum()))
    margins = {
        "effective_rank": Lam / max(n * low, math.sqrt(n * spec.tail_sq_sum(k))),
        "head_dominance": n * head[-1] / Lam,
        "adversarial_geometry": sig * sig_inv / (norm_sq * c1),
        "snr_diamond_vs_v": n * qs.Diamond2 / max(qs.V, 1e-300),
        "snr_n_vs_diamond": qs.N / (a_snr * math.sqrt(qs.Diamond2)),
    }
    binding = min(margins, key=margins.get)
    bad = {name: m for name, m in margins.items() if m <= 1.0}
    if bad:
        raise InvalidParams(f"corollary preconditions violated: {bad}")
    return CorollaryInstance(spec, mu, lam, margins, binding)


def _tail_balance(n: int, k: int, c1: float, b: float, a_snr: float) -> CorollaryInstance:
    # Flat spikes at 2b over a slowly decaying exponential tail
    # exp(-(i-k)/(bn)); the infinite tail is truncated once the omitted mass
    # is below 1e-10 * Lambda.
    from . import bounds as _bounds

    alpha = 1.0 / (b * n)
    beta = math.log(2.0)
    # Truncation: remaining mass e^{-alpha j}/(1-e^{-alpha}) < 1e-10 * Lambda
    # with Lambda = full tail mass / c1.
    j_max = int(math.ceil(math.log(c1 * 1e10) / alpha)) + 1
    head = np.full(k, 2.0 * b)
    j = np.arange(1, j_max + 1)
    tail = np.exp(-alpha * j)
    values = np.concatenate([head, tail])
    spec = make_explicit(values)
    p = spec.p
    tail_mass = spec.tail_sum(k)
    lam = -((c1 - 1.0) / c1) * tail_mass
    Lam = lam + tail_mass

    m_tail = 4.0 * math.sqrt(b)
    m_head = 4.0 * math.sqrt(b / k)
    mu = np.concatenate([np.full(k, m_head), m_tail * np.power(2.0, -j / 2.0)])
    qs = _bounds.quantities(spec, mu, n, k, lam)

    mu_t = mu[k:]
    mu_h = mu[:k]
    tail_sig = float((tail * mu_t**2).sum())
    tail_sq_norm = float((mu_t**2).sum())
    head_inv = float((mu_h**2 / head).sum())
    margins = {
        "effective_rank": Lam / max(n * tail[0], math.sqrt(n * spec.tail_sq_sum(k))),
        "head_dominance": n * head[-1] / (c1 * Lam),
        "tail_energy_spread": (Lam / (c1 * n)) * tail_sq_norm / tail_sig,
        "balance_upper": (n / (c1 * Lam)) * tail_sq_norm / head_inv,
        "balance_lower": head_inv / (n**2 / Lam**2 * tail_sig),
        "snr_diamond_vs_v": n * qs.Diamond2 / max(qs.V, 1e-300),
        "snr_n_vs_diamond": qs.N / (a_snr * math.sqrt(qs.Diamond2)),
    }
    binding = min(margins, key=margins.get)
    bad = {name: m for name, m in margins.items() if m <= 1.0}
    if bad:
        raise InvalidParams(f"corollary preconditions violated: {bad}")
    return CorollaryInstance(spec, mu, lam, margins, binding)


def make_corollary_example(
    kind: str,
    n: int,
    k: int,
    c1: float = 4.0,
    b: float = 50.0,
    dim_factor: float = 128.0,
    a_snr: float = 1.0,
) -> CorollaryInstance:
    """Construct one of the two negative-optimal-regularization examples.

    ``kind`` is ``"tail-balance"`` (flat spikes over a slowly decaying
    exponential tail, mean split between head and tail) or
    ``"geometry-destroy"`` (fast-decaying head, flat tail, mean supported on
    the head).  Both return the construction's negative regularization
    lambda = -((c1-1)/c1) * sum_{i>k} lambda_i.

    The free constants (c1, b, dim_factor, a_snr) default to values at which
    every measured precondition margin exceeds 1; ``margins`` records them and
    ``binding`` names the smallest.
    """
    if k < 1:
        raise InvalidParams("corollary constructions need k >= 1")
    if n < 8 * k:
        raise InvalidParams(f"corollary constructions need n >= 8k, got n={n}, k={k}")
    if c1 <= 1:
        raise InvalidParams("c1 must exceed 1 (it sets the negative regularization)")
    if kind == "geometry-destroy":
        return _geometry_destroy(n, k, c1, dim_factor, a_snr)
    if kind == "tail-balance":
        return _tail_balance(n, k, c1, b, a_snr)
    raise InvalidParams(f"unknown corollary kind {kind!r}")


def write_spectrum(spec: Spectrum, path) -> None:
    """One eigenvalue per line, decimal text."""
    with open(path, "w") as fh:
        for v in spec.values:
            fh.write(f"{float(v)!r}\n")


def read_spectrum(path) -> Spectrum:
    with open(path) as fh:
        vals = [float(line) for line in fh if line.strip()]
    return make_explicit(vals)
