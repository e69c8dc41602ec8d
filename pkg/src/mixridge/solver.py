"""Ridge / minimum-norm-interpolation solver in Gram space.

Everything runs on the n x n matrix A = lambda I + Q Q^T, never on p x p
objects.  A is factorized once per (dataset, lambda) by a symmetric
eigendecomposition; that exposes mu_n(Q Q^T), which gates how negative the
regularization may go, at no extra cost over a Cholesky solve.

The decomposition assembles the weight vector from three orthogonal pieces
(Q^T A^-1 dy, Q^T A^-1 y, and the residual of mu against the data rows) with
scalar coefficients sharing the common denominator

    S = (1 + nu^T A^-1 y)^2 + (mu^T mu_perp) (y^T A^-1 y),

and extends analytically to negative lambda down to -mu_n(Q Q^T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import DegenerateS, InvalidParams, SingularRegularization, ZeroSolution
from .model import Dataset
from .spectrum import Spectrum

__all__ = [
    "GramState",
    "RidgeSolution",
    "MarginStats",
    "gram_eig",
    "gram",
    "ridge_direct",
    "decompose",
    "mni_dual",
    "margin_stats",
    "gaussian_error",
    "smw_check",
]

# Relative slack below -mu_n(QQ^T) that is still accepted; anything beyond is
# numerically meaningless condition-number blowup.
NEGATIVE_LAMBDA_FLOOR = 1e-6


@dataclass(frozen=True)
class GramState:
    """Eigendecomposition of A = lambda I + Q Q^T, reusable across solves."""

    U: np.ndarray          # eigenvectors of Q Q^T (n x n)
    gram_eigs: np.ndarray  # eigenvalues of Q Q^T, ascending
    lambda_reg: float
    Q: np.ndarray

    @property
    def min_eig_QQt(self) -> float:
        return float(self.gram_eigs[0])

    @property
    def a_eigs(self) -> np.ndarray:
        return self.gram_eigs + self.lambda_reg

    def apply_inv(self, b: np.ndarray) -> np.ndarray:
        """A^-1 b via the cached factorization."""
        return self.U @ ((self.U.T @ b) / self.a_eigs)

    def shift(self, lambda_reg: float) -> "GramState":
        """Same dataset, different regularization; no refactorization."""
        _check_floor(self.gram_eigs[0], lambda_reg)
        return GramState(self.U, self.gram_eigs, lambda_reg, self.Q)


def _check_floor(min_eig: float, lambda_reg: float) -> None:
    floor = -(1.0 - NEGATIVE_LAMBDA_FLOOR) * min_eig
    if min_eig <= 0 and lambda_reg <= 0:
        raise SingularRegularization(
            f"Q Q^T has min eigenvalue {min_eig:.3e}; nonpositive lambda invalid"
        )
    if lambda_reg < floor:
        raise SingularRegularization(
            f"lambda={lambda_reg:.6e} below the analytic floor {floor:.6e} "
            f"(-(1-{NEGATIVE_LAMBDA_FLOOR})*mu_n(QQ^T))"
        )


def gram_eig(dataset: Dataset):
    """Factorize Q Q^T once; reuse via GramState.shift for many lambdas."""
    G = dataset.Q @ dataset.Q.T
    G = 0.5 * (G + G.T)
    eigs, U = np.linalg.eigh(G)
    return U, eigs


def gram(dataset: Dataset, lambda_reg: float) -> GramState:
    """Factorized A = lambda I + Q Q^T, validated against the analytic floor."""
    U, eigs = gram_eig(dataset)
    _check_floor(float(eigs[0]), lambda_reg)
    return GramState(U, eigs, lambda_reg, dataset.Q)


def ridge_direct(dataset: Dataset, lambda_reg: float) -> np.ndarray:
    """w = X^T (X X^T + lambda I)^-1 y_hat, the definition taken literally.

    Serves as the reference path; `decompose` must agree with it to 1e-8.
    """
    X = dataset.X()
    M = X @ X.T
    M = 0.5 * (M + M.T)
    eigs, U = np.linalg.eigh(M)
    shifted = eigs + lambda_reg
    scale = float(np.max(np.abs(shifted)))
    if scale == 0.0 or float(np.min(np.abs(shifted))) <= 1e-12 * scale:
        raise SingularRegularization(
            f"X X^T + lambda I numerically singular at lambda={lambda_reg}"
        )
    return X.T @ (U @ ((U.T @ dataset.y_hat) / shifted))


@dataclass(frozen=True)
class RidgeSolution:
    """Weight vector plus the full scalar decomposition it was built from."""

    w: np.ndarray
    S: float
    nu: np.ndarray
    mu_perp_tilde: np.ndarray
    xi: float
    y_tilde: np.ndarray
    y_A_y: float
    y_A_yhat: float
    nu_A_y: float
    nu_A_yhat: float
    nu_A_dy: float
    dy_A_y: float
    mu_dot_mu_perp: float
    lambda_reg: float


def decompose(dataset: Dataset, lambda_reg: float, state: GramState | None = None) -> RidgeSolution:
    """Assemble the ridge solution from the three-term closed form.

    Raises DegenerateS when the shared denominator S is non-positive within
    tolerance, which flags instances outside the regime the closed form is
    meaningful for (S appears as a denominator in every reported ratio).
    """
    if state is None:
        state = gram(dataset, lambda_reg)
    elif state.lambda_reg != lambda_reg:
        state = state.shift(lambda_reg)
    Q, y, y_hat = dataset.Q, dataset.y, dataset.y_hat
    mu = dataset.problem.mu
    dy = y_hat - y

    nu = Q @ mu
    Ainv_y = state.apply_inv(y)
    Ainv_yhat = state.apply_inv(y_hat)
    Ainv_nu = state.apply_inv(nu)
    Ainv_dy = Ainv_yhat - Ainv_y

    y_A_y = float(y @ Ainv_y)
    y_A_yhat = float(y @ Ainv_yhat)
    nu_A_y = float(nu @ Ainv_y)
    nu_A_yhat = float(nu @ Ainv_yhat)
    nu_A_dy = float(nu @ Ainv_dy)
    dy_A_y = float(dy @ Ainv_y)
    mu_dot_mu_perp = float(mu @ mu - nu @ Ainv_nu)

    S = (1.0 + nu_A_y) ** 2 + mu_dot_mu_perp * y_A_y
    trace = float(np.sum(dataset.problem.spectrum.values))
    scale_hint = 1.0 + float(mu @ mu) * dataset.n / max(lambda_reg + trace, 1e-300)
    if S <= 1e-12 * scale_hint:
        raise DegenerateS(f"decomposition denominator S={S:.3e} non-positive within tolerance")

    mu_perp_tilde = mu - Q.T @ Ainv_nu
    coef_dy = S
    coef_y = (1.0 + nu_A_y) * (1.0 - nu_A_dy) - dy_A_y * mu_dot_mu_perp
    coef_perp = y_A_y + (1.0 + nu_A_y) * dy_A_y - y_A_y * nu_A_dy

    w = (coef_dy * (Q.T @ Ainv_dy) + coef_y * (Q.T @ Ainv_y) + coef_perp * mu_perp_tilde) / S

    xi = y_A_yhat / y_A_y
    y_tilde = y_hat - xi * y

    return RidgeSolution(
        w=w,
        S=S,
        nu=nu,
        mu_perp_tilde=mu_perp_tilde,
        xi=xi,
        y_tilde=y_tilde,
        y_A_y=y_A_y,
        y_A_yhat=y_A_yhat,
        nu_A_y=nu_A_y,
        nu_A_yhat=nu_A_yhat,
        nu_A_dy=nu_A_dy,
        dy_A_y=dy_A_y,
        mu_dot_mu_perp=mu_dot_mu_perp,
        lambda_reg=lambda_reg,
    )


def mni_dual(dataset: Dataset, state: GramState | None = None) -> np.ndarray:
    """Dual-scaled interpolator: the projection of the origin onto the affine
    span of the signed data columns.  Equals w_MNI / ||w_MNI||^2, and
    satisfies w_MNI . w_tilde = 1."""
    sol = decompose(dataset, 0.0, state)
    norm_sq = float(sol.w @ sol.w)
    if norm_sq == 0.0:
        raise ZeroSolution("interpolator is the zero vector")
    return sol.w / norm_sq


@dataclass(frozen=True)
class MarginStats:
    inner: float        # mu . w
    sigma_norm: float   # ||w||_Sigma
    ratio: float        # inner / sigma_norm


def margin_stats(w: np.ndarray, mu: np.ndarray, spectrum: Spectrum) -> MarginStats:
    """The classification margin ratio mu.w / ||w||_Sigma; for Gaussian
    clusters the test error is exactly Phi(-ratio)."""
    sigma_norm = math.sqrt(float(spectrum.values @ (w * w)))
    if sigma_norm == 0.0:
        raise ZeroSolution("w has zero Sigma-norm")
    inner = float(mu @ w)
    return MarginStats(inner, sigma_norm, inner / sigma_norm)


def gaussian_error(ratio: float) -> float:
    """Phi(-ratio) through the complementary error function."""
    return 0.5 * erfc(ratio / math.sqrt(2.0))


def smw_check(dataset: Dataset, k: int, lambda_reg: float) -> float:
    """Maximum relative residual over the three head/tail inversion identities
    relating A^-1 to A_k^-1 = (lambda I + Q_tail Q_tail^T)^-1.

    At k=0 the head block is empty and the identities degenerate to
    A^-1 = A_0^-1 (residual 0 up to rounding).
    """
    n, p = dataset.n, dataset.p
    if not 0 <= k <= p:
        raise InvalidParams(f"k={k} outside [0, {p}]")
    Q_head = dataset.Q[:, :k]
    Q_tail = dataset.Q[:, k:]

    Ak = Q_tail @ Q_tail.T + lambda_reg * np.eye(n)
    Ak = 0.5 * (Ak + Ak.T)
    eigs_k = np.linalg.eigvalsh(Ak)
    if eigs_k[0] <= 1e-12 * max(abs(eigs_k[-1]), 1e-300):
        raise SingularRegularization(f"tail Gram matrix not PD at k={k}, lambda={lambda_reg}")
    Ak_inv = np.linalg.inv(Ak)

    A = Q_head @ Q_head.T + Ak
    A = 0.5 * (A + A.T)
    A_inv = np.linalg.inv(A)

    def rel(lhs, rhs):
        denom = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1e-300)
        return float(np.linalg.norm(lhs - rhs) / denom)

    if k == 0:
        return rel(A_inv, Ak_inv)

    core = np.eye(k) + Q_head.T @ Ak_inv @ Q_head
    core_inv = np.linalg.inv(core)

    r1 = rel(A_inv, Ak_inv - Ak_inv @ Q_head @ core_inv @ Q_head.T @ Ak_inv)
    r2 = rel(A_inv @ Q_head, Ak_inv @ Q_head @ core_inv)
    r3 = rel(np.eye(k) - Q_head.T @ A_inv @ Q_head, core_inv)
    return max(r1, r2, r3)
