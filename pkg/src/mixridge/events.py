"""Empirical constants of the two spectral assumption events.

The first event asks the regularized tail Gram matrix A_k to have all
eigenvalues within a factor L of the deterministic tail energy Lambda; the
second collects five law-of-large-numbers style conditions with a shared
constant c_B.  Nothing here is asserted: the operations return the smallest
constants at which the sampled matrices satisfy the events, and the
acceptance suite checks their concentration over trials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, SingularRegularization
from .model import Dataset
from .spectrum import lambda_tail

__all__ = ["EventReport", "check_A_k", "check_B_k", "EVENTS_COLUMNS", "events_row"]

# Condition keys in report order; 1 and 4 need a nonempty head block,
# 2 needs a nonzero tail mean.
B_CONDITIONS = ("b1", "b1inv", "b2", "b3", "b4", "b5")


def check_A_k(dataset: Dataset, k: int, lambda_reg: float) -> float:
    """Smallest L with Lambda/L <= mu_n(A_k) <= mu_1(A_k) <= L*Lambda for
    this sample; always >= 1 when A_k is PD."""
    p = dataset.p
    if not 0 <= k < p:
        raise InvalidParams(f"k={k} outside [0, {p - 1}]")
    Q_tail = dataset.Q[:, k:]
    G = Q_tail @ Q_tail.T
    G = 0.5 * (G + G.T)
    eigs = np.linalg.eigvalsh(G) + lambda_reg
    if eigs[0] <= 0:
        raise SingularRegularization(
            f"tail Gram matrix not PD at k={k}, lambda={lambda_reg} (mu_n={eigs[0]:.3e})"
        )
    Lam = lambda_tail(dataset.problem.spectrum, k, lambda_reg)
    if Lam <= 0:
        raise InvalidParams(f"Lambda={Lam} must be positive")
    return max(float(eigs[-1]) / Lam, Lam / float(eigs[0]))


@dataclass(frozen=True)
class EventReport:
    k: int
    per_condition: dict
    cB_measured: float
    L_measured: float | None = None


def check_B_k(dataset: Dataset, mu, k: int) -> EventReport:
    """Per-condition implied constants of the five-part event.

    Not-applicable ratios (empty head at k=0, zero tail mean) are absent from
    the report, never encoded as 0 or infinity.
    """
    p = dataset.p
    if not 0 <= k < p:
        raise InvalidParams(f"k={k} outside [0, {p - 1}]")
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (p,):
        raise InvalidParams(f"mu has shape {mu.shape}, expected ({p},)")
    n = dataset.n
    lams = dataset.problem.spectrum.values
    per: dict = {}

    if k >= 1:
        Z_head = dataset.Z[:, :k]
        sv = np.linalg.svd(Z_head, compute_uv=False)
        top = float(sv[0] ** 2)
        kth = float(sv[k - 1] ** 2) if len(sv) >= k else 0.0
        per["b1"] = top / n
        if kth > 0:
            per["b1inv"] = n / kth
        per["b4"] = float((sv**2).sum()) / (n * k)

    Q_tail = dataset.Q[:, k:]
    mu_tail = mu[k:]
    tail_sig2 = float((lams[k:] * mu_tail**2).sum())
    if tail_sig2 > 0:
        per["b2"] = float(np.sum((Q_tail @ mu_tail) ** 2)) / (n * tail_sig2)

    tail_sq = dataset.problem.spectrum.tail_sq_sum(k)
    QS = Q_tail * np.sqrt(lams[k:])  # rows of Q_tail Sigma_tail^(1/2)
    per["b3"] = float(np.sum(QS * QS)) / (n * tail_sq)

    sv_tail = np.linalg.svd(QS, compute_uv=False)
    lam_next_sq = float(lams[k] ** 2) if k < p else 0.0
    per["b5"] = float(sv_tail[0] ** 2) / (tail_sq + n * lam_next_sq)

    return EventReport(k, per, max(per.values()))


EVENTS_COLUMNS = ["trial", "k", "lambda", "L_measured"] + list(B_CONDITIONS) + ["cB_measured"]


def events_row(trial: int, k: int, lambda_reg: float, L_measured, report: EventReport) -> list:
    row = [trial, k, lambda_reg, "" if L_measured is None else L_measured]
    for name in B_CONDITIONS:
        row.append(report.per_condition.get(name, ""))
    row.append(report.cB_measured)
    return row
