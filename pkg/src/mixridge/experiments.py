"""Monte-Carlo drivers: quantile estimation, mu-scale and lambda sweeps,
phase-transition scans, and the benign-overfitting demonstration.

Every driver samples with per-trial streams derived from one master seed, so
results are independent of thread count and any single record can be replayed
from (master seed, key).  Degenerate trials (regularization below the
per-sample analytic floor, or a vanishing decomposition denominator) are
dropped from quantiles but counted and reported.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import binom

from . import bounds as bnd
from . import model, solver
from .errors import DegenerateS, InvalidParams, SingularRegularization, TooFewTrials, ZeroSolution
from .spectrum import Spectrum, make_bilevel, tail_summary

__all__ = [
    "QuantileEstimate",
    "SweepRecord",
    "estimate_quantile",
    "sweep_mu_scale",
    "sweep_lambda",
    "phase_scan",
    "benign_demo",
    "scale_for_snr",
    "order_stat_quantile",
    "sweep_columns",
    "write_sweep_csv",
    "EMPIRICAL_COLUMNS",
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

_KEY_COLUMNS = {"mu": ["mu_scale"], "lambda": [], "phase": ["q", "n", "r", "s"], "demo": ["mu_scale"]}


def sweep_columns(kind: str) -> list:
    """Full CSV column contract for one sweep kind."""
    if kind not in _KEY_COLUMNS:
        raise InvalidParams(f"unknown sweep kind {kind!r}")
    return _KEY_COLUMNS[kind] + ["seed", "eps", "eta"] + bnd.BOUNDS_COLUMNS + EMPIRICAL_COLUMNS


@dataclass(frozen=True)
class QuantileEstimate:
    """Order-statistic quantile with a distribution-free 95% interval."""

    eps: float
    alpha_hat: float | None
    ci_low: float | None
    ci_high: float | None
    trials: int
    dropped: int


def order_stat_quantile(samples, eps: float, conf: float = 0.95):
    """(alpha_hat, ci_low, ci_high): the ceil(eps*m)-th order statistic and a
    binomial order-statistic confidence interval clipped around it."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    m = len(xs)
    if m == 0:
        return None, None, None
    idx = min(max(int(math.ceil(eps * m)), 1), m)
    lo = int(binom.ppf((1.0 - conf) / 2.0, m, eps))
    hi = int(binom.ppf(1.0 - (1.0 - conf) / 2.0, m, eps)) + 1
    lo = min(max(lo, 1), idx)
    hi = max(min(hi, m), idx)
    return float(xs[idx - 1]), float(xs[lo - 1]), float(xs[hi - 1])


@dataclass(frozen=True)
class SweepRecord:
    """One grid point: embedded closed-form quantities plus empirical stats.

    Carries the master seed and trial count so the record can be regenerated
    exactly.
    """

    kind: str
    key: dict
    seed: int
    eps: float
    eta: float
    qs: bnd.QuantitySet | None
    be: bnd.BoundEval | None
    quantile: QuantileEstimate | None
    train_residual_med: float | None = None
    test_error_med: float | None = None
    comparisons: dict = field(default_factory=dict)

    def row(self) -> list:
        cells = [self.key[c] for c in _KEY_COLUMNS[self.kind]]
        cells += [self.seed, self.eps, self.eta]
        if self.qs is not None and self.be is not None:
            cells += bnd.bounds_row(self.qs, self.be)
        else:
            # out-of-domain grid point: keep the row attributable
            blank = [""] * len(bnd.BOUNDS_COLUMNS)
            if "k" in self.key:
                blank[bnd.BOUNDS_COLUMNS.index("k")] = self.key["k"]
            if "lambda" in self.key:
                blank[bnd.BOUNDS_COLUMNS.index("lambda")] = self.key["lambda"]
            cells += blank
        q = self.quantile
        if q is not None:
            cells += [
                "" if q.alpha_hat is None else q.alpha_hat,
                "" if q.ci_low is None else q.ci_low,
                "" if q.ci_high is None else q.ci_high,
                q.trials,
                q.dropped,
            ]
        else:
            cells += ["", "", "", "", ""]
        cells.append("" if self.train_residual_med is None else self.train_residual_med)
        cells.append("" if self.test_error_med is None else self.test_error_med)
        return cells


def write_sweep_csv(records, path, kind: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(sweep_columns(kind))
        for rec in records:
            if rec.kind != kind:
                raise InvalidParams(f"record kind {rec.kind!r} does not match {kind!r}")
            writer.writerow(rec.row())


def _map_trials(fn, trials: int, threads: int | None):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, range(trials)))
    return [fn(i) for i in range(trials)]


def _train_residual(ds: model.Dataset, w: np.ndarray, mu: np.ndarray) -> float:
    fitted = ds.Q @ w + float(mu @ w) * ds.y
    return float(np.linalg.norm(fitted - ds.y_hat) / np.linalg.norm(ds.y_hat))


def _check_trials(eps_list, trials: int) -> None:
    for eps in eps_list:
        need = math.ceil(10.0 / eps)
        if trials < need:
            raise TooFewTrials(f"eps={eps} needs at least {need} trials, got {trials}")


def estimate_quantile(
    problem: model.ProblemSpec,
    eps: float,
    trials: int,
    master_seed: int,
    threads: int | None = None,
) -> QuantileEstimate:
    """Empirical eps-quantile of the margin ratio over i.i.d. training sets."""
    _check_trials([eps], trials)

    def one(trial: int):
        ds = model.sample_dataset(problem, master_seed, trial)
        try:
            sol = solver.decompose(ds, problem.lambda_reg)
            return solver.margin_stats(sol.w, problem.mu, problem.spectrum).ratio
        except (SingularRegularization, DegenerateS, ZeroSolution):
            return None

    ratios = [r for r in _map_trials(one, trials, threads)]
    valid = [r for r in ratios if r is not None]
    dropped = trials - len(valid)
    alpha, lo, hi = order_stat_quantile(valid, eps)
    return QuantileEstimate(eps, alpha, lo, hi, trials, dropped)


def _grid_trial_stats(problem, grid_problems, master_seed, trials, threads, lambdas=None):
    """Shared engine: sample each trial once, factorize once, then evaluate
    every grid point on it.  Returns per-point lists of ratios/residuals and
    drop counts."""
    n_pts = len(grid_problems) if lambdas is None else len(lambdas)

    def one(trial: int):
        ds = model.sample_dataset(problem, master_seed, trial)
        U, eigs = solver.gram_eig(ds)
        out = []
        if lambdas is None:
            for pr in grid_problems:
                ds_pt = dataclasses.replace(ds, problem=pr)
                out.append(_solve_point(ds_pt, pr.lambda_reg, U, eigs))
        else:
            for lam in lambdas:
                out.append(_solve_point(ds, lam, U, eigs))
        return out

    per_trial = _map_trials(one, trials, threads)
    ratios = [[] for _ in range(n_pts)]
    residuals = [[] for _ in range(n_pts)]
    drops = [0] * n_pts
    for row in per_trial:
        for j, entry in enumerate(row):
            if entry is None:
                drops[j] += 1
            else:
                ratios[j].append(entry[0])
                residuals[j].append(entry[1])
    return ratios, residuals, drops


def _solve_point(ds, lam, U, eigs):
    try:
        state = solver.GramState(U, eigs, 0.0, ds.Q).shift(lam)
        sol = solver.decompose(ds, lam, state)
        stats = solver.margin_stats(sol.w, ds.problem.mu, ds.problem.spectrum)
        return stats.ratio, _train_residual(ds, sol.w, ds.problem.mu)
    except (SingularRegularization, DegenerateS, ZeroSolution):
        return None


def _records_for_point(kind, key, qs, be, ratios, residuals, dropped, trials, eps_list, seed, eta, comparisons):
    recs = []
    res_med = float(np.median(residuals)) if residuals else None
    for eps in eps_list:
        alpha, lo, hi = order_stat_quantile(ratios, eps)
        quant = QuantileEstimate(eps, alpha, lo, hi, trials, dropped)
        recs.append(
            SweepRecord(kind, key, seed, eps, eta, qs, be, quant, res_med, None, dict(comparisons))
        )
    return recs


def sweep_mu_scale(
    base_problem: model.ProblemSpec,
    scales,
    eps,
    trials: int,
    master_seed: int = 0,
    k: int = 0,
    t: float = 1.0,
    threads: int | None = None,
) -> list:
    """Scale the mean along its fixed unit direction and record, per scale,
    the empirical quantiles next to the closed-form terms (sqrt(V), the
    linear term Diamond*sqrt(n), the quadratic term N*sqrt(V)) that identify
    the regime transitions."""
    scales = [float(s) for s in scales]
    if any(s <= 0 for s in scales) or any(b > a for a, b in zip(scales[1:], scales)):
        raise InvalidParams("scales must be positive and increasing")
    eps_list = [float(e) for e in (eps if np.iterable(eps) else [eps])]
    _check_trials(eps_list, trials)
    norm = float(np.linalg.norm(base_problem.mu))
    if norm == 0:
        raise InvalidParams("base problem needs a nonzero mu direction")
    direction = base_problem.mu / norm

    grid = [base_problem.with_mu(s * direction) for s in scales]
    ratios, residuals, drops = _grid_trial_stats(base_problem, grid, master_seed, trials, threads)

    records = []
    for j, (s, pr) in enumerate(zip(scales, grid)):
        qs = bnd.quantities(pr.spectrum, pr.mu, pr.n, k, pr.lambda_reg, pr.eta)
        be = bnd.lower_bound(qs, t, pr.n)
        comp = {"cgb": bnd.cgb_bound(pr.spectrum, pr.mu, pr.n)}
        records.extend(
            _records_for_point(
                "mu", {"mu_scale": s}, qs, be, ratios[j], residuals[j], drops[j],
                trials, eps_list, master_seed, pr.eta, comp,
            )
        )
    return records


def sweep_lambda(
    base_problem: model.ProblemSpec,
    lambdas,
    eps,
    trials: int,
    master_seed: int = 0,
    k: int = 0,
    t: float = 1.0,
    threads: int | None = None,
) -> list:
    """Sweep the regularization (negative values included) on shared sampled
    datasets; trials whose per-sample analytic floor rejects a lambda are
    dropped for that lambda and counted."""
    lambdas = [float(v) for v in lambdas]
    eps_list = [float(e) for e in (eps if np.iterable(eps) else [eps])]
    _check_trials(eps_list, trials)

    ratios, residuals, drops = _grid_trial_stats(
        base_problem, None, master_seed, trials, threads, lambdas=lambdas
    )

    records = []
    for j, lam in enumerate(lambdas):
        try:
            qs = bnd.quantities(base_problem.spectrum, base_problem.mu, base_problem.n, k, lam, base_problem.eta)
            be = bnd.lower_bound(qs, t, base_problem.n)
        except InvalidParams:
            qs = None
            be = None
        records.extend(
            _records_for_point(
                "lambda", {"lambda": lam, "k": k}, qs, be, ratios[j], residuals[j], drops[j],
                trials, eps_list, master_seed, base_problem.eta, {},
            )
        )
    return records


def phase_scan(
    q_grid,
    r: float,
    s: float,
    n_grid,
    eps: float = 0.1,
    trials: int = 0,
    master_seed: int = 0,
    empirical_n_cap: int = 400,
    threads: int | None = None,
) -> list:
    """Closed-form phase-transition scan over (q, n), optionally with an
    empirical quantile at the largest n not exceeding ``empirical_n_cap``."""
    q_grid = [float(q) for q in q_grid]
    n_grid = [int(n) for n in n_grid]
    if not q_grid or not n_grid:
        raise InvalidParams("q_grid and n_grid must be nonempty")
    affordable = [n for n in n_grid if n <= empirical_n_cap]
    n_emp = max(affordable) if (trials > 0 and affordable) else None
    if trials > 0:
        _check_trials([eps], trials)

    records = []
    for q in q_grid:
        for n in n_grid:
            spec = make_bilevel(n, s, q, r)
            kk = int(math.floor(n**r + 1e-9))
            mu = np.zeros(spec.p)
            mu[0] = math.sqrt(2.0 * spec.values[0] / math.pi)
            qs = bnd.quantities(spec, mu, n, kk, 0.0)
            be = bnd.lower_bound(qs, 0.0, n)  # ratio = N/(sqrt(V)+sqrt(n)*Diamond)
            quant = None
            if n_emp is not None and n == n_emp:
                problem = model.ProblemSpec(spec, mu, n, 0.0, 0.0, "gaussian")
                quant = estimate_quantile(problem, eps, trials, master_seed, threads)
            records.append(
                SweepRecord("phase", {"q": q, "n": n, "r": r, "s": s}, master_seed, eps, 0.0, qs, be, quant)
            )
    return records


def scale_for_snr(
    spec: Spectrum,
    mu_dir,
    n: int,
    lambda_reg: float = 0.0,
    k: int = 1,
    factor: float = 8.0,
    base: float = 1.0,
) -> float:
    """Smallest mean scale m with N(m) >= base + factor*(sqrt(V) + Diamond(m)*sqrt(n)).

    N is quadratic and Diamond linear in m, so this is one quadratic root.
    """
    mu_dir = np.asarray(mu_dir, dtype=np.float64)
    norm = float(np.linalg.norm(mu_dir))
    if norm == 0:
        raise InvalidParams("mu_dir must be nonzero")
    unit = mu_dir / norm
    qs = bnd.quantities(spec, unit, n, k, lambda_reg)
    a = qs.N
    b = math.sqrt(qs.Diamond2)
    c = base + factor * math.sqrt(qs.V)
    if a <= 0:
        raise InvalidParams("N vanishes along this direction")
    lin = factor * math.sqrt(n) * b
    return (lin + math.sqrt(lin * lin + 4.0 * a * c)) / (2.0 * a)


def benign_demo(
    spec: Spectrum,
    mu_scale: float,
    n: int,
    eta: float,
    trials: int,
    master_seed: int = 0,
    k: int = 1,
    mu_dir=None,
    eps: float = 0.5,
    t: float = 1.0,
    test_draws: int = 2000,
    threads: int | None = None,
) -> SweepRecord:
    """Interpolate noisy labels and measure test error against the noise
    floor: per trial, the training residual (interpolation check), the
    Monte-Carlo test error on noisy labels, and the margin ratio.

    Requires zero regularization and a spectrum whose tail effective-rank
    margin at the given k exceeds 1.
    """
    ts = tail_summary(spec, k, 0.0, n)
    if ts.margin <= 1.0:
        raise InvalidParams(
            f"tail effective-rank margin {ts.margin:.3f} <= 1 at k={k}; spectrum out of regime"
        )
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    if mu_dir is None:
        mu_dir = np.zeros(spec.p)
        mu_dir[0] = 1.0
    mu_dir = np.asarray(mu_dir, dtype=np.float64)
    mu = mu_scale * mu_dir / float(np.linalg.norm(mu_dir))
    problem = model.ProblemSpec(spec, mu, n, eta, 0.0, "gaussian")

    def one(trial: int):
        ds = model.sample_dataset(problem, master_seed, trial)
        try:
            sol = solver.decompose(ds, 0.0)
        except (SingularRegularization, DegenerateS):
            return None
        ratio = solver.margin_stats(sol.w, mu, spec).ratio
        residual = _train_residual(ds, sol.w, mu)
        _, err_noisy = model.test_error(problem, sol.w, test_draws, master_seed, trial)
        return ratio, residual, err_noisy

    rows = _map_trials(one, trials, threads)
    good = [r for r in rows if r is not None]
    dropped = trials - len(good)
    ratios = [g[0] for g in good]
    residuals = [g[1] for g in good]
    errors = [g[2] for g in good]

    qs = bnd.quantities(spec, mu, n, k, 0.0, eta)
    be = bnd.lower_bound(qs, t, n)
    alpha, lo, hi = order_stat_quantile(ratios, eps)
    quant = QuantileEstimate(eps, alpha, lo, hi, trials, dropped)
    return SweepRecord(
        "demo",
        {"mu_scale": float(mu_scale)},
        master_seed,
        eps,
        eta,
        qs,
        be,
        quant,
        float(np.median(residuals)) if residuals else None,
        float(np.median(errors)) if errors else None,
    )
