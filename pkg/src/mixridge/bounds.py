"""Closed-form quantity set and every bound the toolkit evaluates.

For a split index k and regularized tail energy Lambda = lambda + sum_{i>k}
lambda_i, the quantity set is (writing head = first k coordinates, tail = the
rest, and r_i = n lambda_i / (Lambda + n lambda_i) for head coordinates):

    V        = (1/n) sum_head r_i^2 + n Lambda^-2 sum_tail lambda_i^2
    DeltaV   = min(1/n, n lambda_1^2/Lambda^2)
               + (n lambda_{k+1}^2 + sum_tail lambda_i^2) / Lambda^2
    B        = Lambda^2 sum_head lambda_i mu_i^2 / (Lambda + n lambda_i)^2
               + sum_tail lambda_i mu_i^2
    Diamond^2 = n B / Lambda^2
    M        = sum_head Lambda mu_i^2 / (Lambda + n lambda_i) + sum_tail mu_i^2
    N        = n M / Lambda
    sigma_eta = 1 / sqrt(ln((3 + 1/eta)/2))        (0 at eta = 0, by limit)

All unspecified absolute constants are normalized to 1 in reported values;
comparisons are
order relations with measured constants, never asserted absolute constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams
from .spectrum import Spectrum, k_star, lambda_tail, make_bilevel

__all__ = [
    "QuantitySet",
    "BoundEval",
    "KStarQuantities",
    "AltQuantities",
    "ComparisonBound",
    "sigma_eta",
    "quantities",
    "quantities_kstar",
    "quantities_alt",
    "lower_bound",
    "upper_bound_ratio",
    "cgb_bound",
    "wang_bounds",
    "chatterji_scaled",
    "muthukumar_ratio",
    "BOUNDS_COLUMNS",
    "bounds_row",
]


def sigma_eta(eta: float) -> float:
    """Sub-Gaussian scale of the label-flip noise; 0 at eta = 0 by continuity."""
    if eta < 0:
        raise InvalidParams("eta must be nonnegative")
    if eta == 0.0:
        return 0.0
    return 1.0 / math.sqrt(math.log((3.0 + 1.0 / eta) / 2.0))


@dataclass(frozen=True)
class QuantitySet:
    k: int
    lambda_reg: float
    Lambda: float
    V: float
    DeltaV: float
    B: float
    Diamond2: float
    M: float
    N: float
    sigma_eta: float
    precondition_ok: bool

    @property
    def Diamond(self) -> float:
        return math.sqrt(self.Diamond2)


def quantities(
    spec: Spectrum,
    mu: np.ndarray,
    n: int,
    k: int,
    lambda_reg: float = 0.0,
    eta: float = 0.0,
) -> QuantitySet:
    """Evaluate the full quantity set at split index k.

    k = 0 zeroes the head terms; k = p zeroes the tail terms (Lambda is then
    the bare regularization, and the precondition flag reduces to Lambda > 0).
    """
    p = spec.p
    if not 0 <= k <= p:
        raise InvalidParams(f"k={k} outside [0, {p}]")
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (p,):
        raise InvalidParams(f"mu has shape {mu.shape}, expected ({p},)")
    Lam = lambda_tail(spec, k, lambda_reg)
    if Lam <= 0:
        raise InvalidParams(f"Lambda={Lam} must be positive at k={k}")

    lams = spec.values
    head_l, head_m = lams[:k], mu[:k]
    tail_m = mu[k:]
    tail_sq = spec.tail_sq_sum(k)

    r = n * head_l / (Lam + n * head_l)
    V = float((r**2).sum()) / n + n * tail_sq / Lam**2
    lam_next_sq = float(lams[k]) ** 2 if k < p else 0.0
    DeltaV = min(1.0 / n, n * float(lams[0]) ** 2 / Lam**2) + (n * lam_next_sq + tail_sq) / Lam**2

    B = Lam**2 * float((head_l * head_m**2 / (Lam + n * head_l) ** 2).sum()) + float(
        (lams[k:] * tail_m**2).sum()
    )
    M = float((Lam * head_m**2 / (Lam + n * head_l)).sum()) + float((tail_m**2).sum())
    Diamond2 = n * B / Lam**2
    N = n * M / Lam

    if k == p:
        ok = Lam > 0
    else:
        ok = k <= n and Lam > max(n * lams[k], math.sqrt(n * tail_sq))
    return QuantitySet(k, lambda_reg, Lam, V, DeltaV, B, Diamond2, M, N, sigma_eta(eta), bool(ok))


@dataclass(frozen=True)
class KStarQuantities:
    k_star: int
    Lambda_star: float
    V_star: float
    Diamond2_star: float
    N_star: float


def quantities_kstar(spec: Spectrum, mu, n: int, lambda_reg: float = 0.0) -> KStarQuantities:
    """Starred quantity set at the self-selected split k*.

    The sandwich against the plain set (factors 2/2/4/2 for N, Diamond, V,
    Lambda) is asserted by the verification suite whenever k <= n/2 and
    Lambda > n lambda_{k+1}.
    """
    ks, Lam = k_star(spec, lambda_reg, n)
    mu = np.asarray(mu, dtype=np.float64)
    lams = spec.values
    head_l, head_m = lams[:ks], mu[:ks]
    tail_l, tail_m = lams[ks:], mu[ks:]
    head_inv = float((head_m**2 / head_l).sum()) if ks else 0.0
    tail_norm2 = float((tail_m**2).sum())
    tail_sig2 = float((tail_l * tail_m**2).sum())
    V = ks / n + n * spec.tail_sq_sum(ks) / Lam**2
    D2 = head_inv / n + n * tail_sig2 / Lam**2
    N = head_inv + n * tail_norm2 / Lam
    return KStarQuantities(ks, Lam, V, D2, N)


@dataclass(frozen=True)
class AltQuantities:
    N_a: float
    V_a: float
    Diamond2_a: float


def quantities_alt(spec: Spectrum, mu, n: int, lambda_reg: float = 0.0, k: int = 0) -> AltQuantities:
    """Full-spectrum form with denominators lambda_i + Lambda/n.

    Lambda is pinned by the split k (default 0); the k-dependence of the
    resulting values is weak, which is the point of this form.
    """
    Lam = lambda_tail(spec, k, lambda_reg)
    if Lam <= 0:
        raise InvalidParams(f"Lambda={Lam} must be positive at k={k}")
    mu = np.asarray(mu, dtype=np.float64)
    lams = spec.values
    denom = lams + Lam / n
    N_a = float((mu**2 / denom).sum())
    V_a = float((lams**2 / n / denom**2).sum())
    D2_a = float((lams * mu**2 / n / denom**2).sum())
    return AltQuantities(N_a, V_a, D2_a)


@dataclass(frozen=True)
class BoundEval:
    """One evaluation of the margin lower bound at deviation parameter t.

    ratio is None whenever the numerator is non-positive (the bound is
    vacuous there, which the small-mean regime makes unavoidable).
    """

    t: float
    numerator: float
    denominator: float
    ratio: float | None
    sqrtV: float
    diamond_term: float
    noise_term: float
    t_in_domain: bool


def lower_bound(qs: QuantitySet, t: float, n: int) -> BoundEval:
    """Evaluate (N - t*Diamond) / ([1 + N sigma_eta] sqrt(V + t^2 DeltaV)
    + Diamond sqrt(n)) with all constants normalized to 1."""
    if t < 0:
        raise InvalidParams("t must be nonnegative")
    d = qs.Diamond
    numerator = qs.N - t * d
    sqrtV = math.sqrt(qs.V + t * t * qs.DeltaV)
    noise_term = qs.N * qs.sigma_eta * sqrtV
    diamond_term = d * math.sqrt(n)
    denominator = (1.0 + qs.N * qs.sigma_eta) * sqrtV + diamond_term
    ratio = numerator / denominator if numerator > 0 and denominator > 0 else None
    return BoundEval(t, numerator, denominator, ratio, sqrtV, diamond_term, noise_term, t < math.sqrt(n))


def upper_bound_ratio(qs: QuantitySet, n: int) -> float:
    """The ratio expression N / sqrt(V + n Diamond^2) the upper bound scales;
    probability bookkeeping is out of scope."""
    return qs.N / math.sqrt(qs.V + n * qs.Diamond2)


@dataclass(frozen=True)
class ComparisonBound:
    value: float
    terms: dict
    vacuous: bool = False


def cgb_bound(spec: Spectrum, mu, n: int) -> float:
    """Prior interpolation-margin bound, constants dropped:
    sqrt(n ||mu||^4 / (n ||mu||_Sigma^2 + ||Sigma||_F^2 + n ||Sigma||^2))."""
    mu = np.asarray(mu, dtype=np.float64)
    lams = spec.values
    mu4 = float(mu @ mu) ** 2
    mu_sig2 = float((lams * mu**2).sum())
    frob2 = float((lams**2).sum())
    op2 = float(lams[0] ** 2)
    return math.sqrt(n * mu4 / (n * mu_sig2 + frob2 + n * op2))


def wang_bounds(spec: Spectrum, mu, n: int, lambda_reg: float, variant) -> ComparisonBound:
    """Prior ridge-classification bounds with named constants set to 1.

    variant is "balanced" (k = 0) or ("bilevel", j) with the mean supported
    on the single coordinate j > 1 (1-based) and k = 1.
    """
    mu = np.asarray(mu, dtype=np.float64)
    lams = spec.values
    mu_norm2 = float(mu @ mu)
    mu_sig = math.sqrt(float((lams * mu**2).sum()))

    if variant == "balanced":
        Lam = lambda_tail(spec, 0, lambda_reg)
        if Lam <= 0:
            raise InvalidParams("Lambda must be positive")
        frob = math.sqrt(float((lams**2).sum()))
        numerator = mu_norm2 - (n / Lam * mu_sig**2 + mu_sig)
        denominator = max(1.0, n / Lam * mu_sig) * frob + mu_sig
        value = numerator / denominator
        return ComparisonBound(
            value,
            {"numerator": numerator, "denominator": denominator, "frob": frob, "mu_sigma": mu_sig},
            vacuous=numerator <= 0,
        )

    if isinstance(variant, tuple) and len(variant) == 2 and variant[0] == "bilevel":
        j = int(variant[1])
        if j <= 1 or j > spec.p:
            raise InvalidParams("bilevel variant needs a coordinate index j > 1")
        support = np.nonzero(mu)[0]
        if len(support) != 1 or support[0] != j - 1:
            raise InvalidParams(f"bilevel variant requires mu supported on coordinate {j} only")
        Lam = lambda_tail(spec, 1, lambda_reg)
        if Lam <= 0:
            raise InvalidParams("Lambda must be positive")
        lam_j = float(lams[j - 1])
        A = lams[0] * (Lam + n * mu_sig) / (n * lams[0] + Lam)
        rest = float((lams**2).sum() - lams[0] ** 2 - lam_j**2)
        Bterm = (1.0 + n / Lam * mu_sig) * math.sqrt(max(rest, 0.0))
        numerator = mu_norm2 * (1.0 - n / Lam * lam_j) - mu_sig
        denominator = A + Bterm + lam_j + mu_sig
        value = numerator / denominator
        return ComparisonBound(
            value,
            {"numerator": numerator, "denominator": denominator, "A": A, "B": Bterm, "lambda_j": lam_j},
            vacuous=numerator <= 0,
        )

    raise InvalidParams(f"unknown wang variant {variant!r}")


def chatterji_scaled(mu, p: int, n: int, kappa: float):
    """Exponent arguments side by side: theirs ||mu||^2/sqrt(p), ours
    ||mu||^2 sqrt(n kappa)/sqrt(p).  ``mu`` may be the vector or the squared
    norm directly."""
    if not 0 < kappa <= 1:
        raise InvalidParams("kappa must lie in (0, 1]")
    mu_sq = float(mu) if np.isscalar(mu) else float(np.asarray(mu) @ np.asarray(mu))
    theirs = mu_sq / math.sqrt(p)
    ours = mu_sq * math.sqrt(n * kappa) / math.sqrt(p)
    return theirs, ours


def muthukumar_ratio(n: int, q: float, r: float, s: float) -> float:
    """N / (sqrt(V) + sqrt(n) Diamond) on the two-level spectrum with the
    mean sqrt(2 lambda_1 / pi) e_1, zero regularization, and k = floor(n^r).

    Limits as n grows: sqrt(2/pi) when 2q+2r-1-s < 0, a constant near
    1/sqrt(2 pi) at equality, and 0 when positive.
    """
    spec = make_bilevel(n, s, q, r)
    k = int(math.floor(n**r + 1e-9))
    mu = np.zeros(spec.p)
    mu[0] = math.sqrt(2.0 * spec.values[0] / math.pi)
    qs = quantities(spec, mu, n, k, 0.0)
    return qs.N / (math.sqrt(qs.V) + math.sqrt(n * qs.Diamond2))


# Fixed CSV column order for one QuantitySet + BoundEval row.
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


def bounds_row(qs: QuantitySet, be: BoundEval) -> list:
    """Serialize one (QuantitySet, BoundEval) pair in the fixed column order."""
    return [
        qs.k,
        qs.lambda_reg,
        qs.Lambda,
        qs.V,
        qs.DeltaV,
        qs.B,
        qs.Diamond2,
        qs.M,
        qs.N,
        qs.sigma_eta,
        be.t,
        be.numerator,
        be.denominator,
        "" if be.ratio is None else be.ratio,
        be.sqrtV,
        be.diamond_term,
        be.noise_term,
        int(qs.precondition_ok),
    ]
