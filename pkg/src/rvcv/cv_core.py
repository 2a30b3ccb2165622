"""Polynomial control variates built from (estimated) score vectors.

For a trial polynomial ``P(theta | phi)`` the control variate

    h = Laplacian(P)(theta) + grad(P)(theta) . u_hat

is linear in the coefficients, ``h = phi @ m(theta, u_hat)``.  This module
builds the basis ``m``, fits ``phi`` by least squares, and reports the
variance reduction that results.  It also carries the closed forms that
govern how many forward simulations ``K`` to spend per MCMC iterate.

Coefficient ordering is canonical: the ``d`` linear terms ``a_i``, then the
quadratic terms ``b_ij`` for ``i <= j`` in lexicographic order, then the cubic
terms ``c_ijk`` for ``i <= j <= k`` in lexicographic order.  Coefficients are
symmetric under index permutation, so each distinct monomial appears once and
carries its multinomial multiplicity (e.g. ``2 b_ij theta_i theta_j`` for
``i < j``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations_with_replacement

import numpy as np
from scipy import linalg
from scipy.optimize import lsq_linear

from .errors import DegenerateDesignError, InvalidArgumentError

__all__ = [
    "PolynomialSpec",
    "monomial_map",
    "estimate_optimal_coeffs",
    "controlled_values",
    "CvDiagnostics",
    "variance_reduction_factor",
    "rv_estimate",
    "RvEstimate",
    "RhoCurveFit",
    "fit_rho_curve",
    "rho_curve",
    "cost_normalized_ratio",
    "argmin_r",
    "batch_means_se",
]

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class PolynomialSpec:
    """Dimension and degree of the trial polynomial."""

    dimension: int
    degree: int = 2

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise InvalidArgumentError(f"dimension must be a positive integer, got {self.dimension!r}")
        if self.degree not in (1, 2, 3):
            raise InvalidArgumentError(f"degree must be 1, 2 or 3, got {self.degree!r}")

    @cached_property
    def multi_indices(self) -> tuple[tuple[int, ...], ...]:
        """Sorted index tuples, one per coefficient, in canonical order."""
        out = []
        for deg in range(1, self.degree + 1):
            out.extend(combinations_with_replacement(range(self.dimension), deg))
        return tuple(out)

    @property
    def n_coefficients(self) -> int:
        return len(self.multi_indices)

    def labels(self) -> list[str]:
        names = {1: "a", 2: "b", 3: "c"}
        return [names[len(idx)] + "_" + "".join(str(i + 1) for i in idx) for idx in self.multi_indices]


def _exponents(idx, d):
    alpha = np.zeros(d, dtype=int)
    for i in idx:
        alpha[i] += 1
    return alpha


def monomial_map(theta, u_hat, spec: PolynomialSpec) -> np.ndarray:
    """Evaluate the control-variate basis ``m(theta, u_hat)``.

    Parameters
    ----------
    theta, u_hat : array_like, shape (d,) or (n, d)
        Parameter values and score estimates at those values.
    spec : PolynomialSpec

    Returns
    -------
    ndarray, shape (n_coefficients,) or (n, n_coefficients)
        Inner product with the coefficient vector gives ``h``.  For degree
        one this is ``u_hat`` itself.
    """
    theta = np.asarray(theta, dtype=float)
    u_hat = np.asarray(u_hat, dtype=float)
    if theta.shape != u_hat.shape:
        raise InvalidArgumentError(f"theta shape {theta.shape} != u_hat shape {u_hat.shape}")
    single = theta.ndim == 1
    theta2 = np.atleast_2d(theta)
    u2 = np.atleast_2d(u_hat)
    if theta.ndim > 2 or theta2.shape[1] != spec.dimension:
        raise InvalidArgumentError(
            f"expected vectors of length {spec.dimension}, got shape {theta.shape}"
        )
    if not (np.all(np.isfinite(theta2)) and np.all(np.isfinite(u2))):
        raise InvalidArgumentError("theta and u_hat must be finite")

    d = spec.dimension
    n = theta2.shape[0]
    out = np.empty((n, spec.n_coefficients))
    for col, idx in enumerate(spec.multi_indices):
        alpha = _exponents(idx, d)
        order = len(idx)
        mult = math.factorial(order) / np.prod([math.factorial(a) for a in alpha])
        value = np.zeros(n)
        for l in range(d):
            if alpha[l] == 0:
                continue
            lowered = alpha.copy()
            lowered[l] -= 1
            grad_l = mult * alpha[l] * np.prod(theta2 ** lowered, axis=1)
            value += grad_l * u2[:, l]
            if alpha[l] >= 2:
                lowered2 = lowered.copy()
                lowered2[l] -= 1
                value += mult * alpha[l] * (alpha[l] - 1) * np.prod(theta2 ** lowered2, axis=1)
        out[:, col] = value
    return out[0] if single else out


def _as_design(g_samples, m_samples):
    g = np.asarray(g_samples, dtype=float)
    m = np.asarray(m_samples, dtype=float)
    if g.ndim != 1:
        raise InvalidArgumentError("g_samples must be one-dimensional")
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2 or m.shape[0] != g.shape[0]:
        raise InvalidArgumentError(f"m_samples shape {m.shape} incompatible with {g.shape[0]} samples")
    return g, m


def estimate_optimal_coeffs(g_samples, m_samples, centered: bool = True,
                            condition_limit: float = CONDITION_LIMIT) -> np.ndarray:
    """Plug-in estimate of the variance-minimising coefficients.

    ``phi_hat = -V[m]^{-1} C`` where ``V[m]`` is the empirical covariance of
    the basis and ``C`` is the empirical covariance of ``g`` with ``m``.  With
    ``centered=False`` the raw moment ``mean(g * m)`` is used for ``C``; the
    two agree in expectation because each basis function has mean zero.

    Raises
    ------
    DegenerateDesignError
        If the covariance of ``m`` (after scaling to unit diagonal) has
        condition number above ``condition_limit``.
    """
    g, m = _as_design(g_samples, m_samples)
    n, p = m.shape
    if n < 2:
        raise InvalidArgumentError("need at least two samples")
    mc = m - m.mean(axis=0)
    cov_m = mc.T @ mc / n
    if centered:
        cross = mc.T @ (g - g.mean()) / n
    else:
        cross = m.T @ g / n
    if not np.any(cross):
        return np.zeros(p)

    scale = np.sqrt(np.diag(cov_m))
    if np.any(scale <= 0) or not np.all(np.isfinite(scale)):
        raise DegenerateDesignError("a control variate has zero empirical variance", math.inf)
    corr = cov_m / np.outer(scale, scale)
    eig = np.linalg.eigvalsh(corr)
    cond = math.inf if eig[0] <= 0 else eig[-1] / eig[0]
    if cond > condition_limit:
        raise DegenerateDesignError(
            f"empirical variance of the control variates is ill-conditioned (cond={cond:.3g})", cond
        )
    factor = linalg.cho_factor(corr)
    return -linalg.cho_solve(factor, cross / scale) / scale


def controlled_values(g_samples, m_samples, phi) -> np.ndarray:
    """Per-sample ``g + phi @ m``; its mean is the reduced-variance estimate."""
    g, m = _as_design(g_samples, m_samples)
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if phi.shape != (m.shape[1],):
        raise InvalidArgumentError(f"phi has shape {phi.shape}, expected ({m.shape[1]},)")
    return g + m @ phi


@dataclass(frozen=True)
class CvDiagnostics:
    """Variance reduction ``R`` and correlation of ``g`` with the control variate."""

    R: float
    rho: float
    perfect: bool = False
    ess_note: str = ""

    def as_record(self) -> dict:
        return {"R": self.R, "rho": self.rho, "perfect": self.perfect}


def variance_reduction_factor(g_samples, controlled_samples) -> CvDiagnostics:
    """Ratio of empirical variances of the raw and controlled samples.

    A controlled sample with zero variance gives ``R = inf`` and
    ``perfect=True`` rather than an error.
    """
    g = np.asarray(g_samples, dtype=float)
    c = np.asarray(controlled_samples, dtype=float)
    if g.ndim != 1 or g.shape != c.shape:
        raise InvalidArgumentError("g_samples and controlled_samples must be equal-length vectors")
    if g.size < 2:
        raise InvalidArgumentError("need at least two samples")
    var_g = g.var()
    var_c = c.var()
    h = c - g
    var_h = h.var()
    if var_h > 0 and var_g > 0:
        rho = float(np.clip(np.mean((g - g.mean()) * (h - h.mean())) / math.sqrt(var_g * var_h), -1, 1))
    else:
        rho = 0.0
    # controlled values are constant up to roundoff of their magnitude
    tiny = (np.finfo(float).eps * max(np.abs(c).max(), 1.0)) ** 2
    if var_c <= tiny:
        return CvDiagnostics(math.inf, rho, perfect=True,
                             ess_note="controlled samples are constant")
    return CvDiagnostics(float(var_g / var_c), rho,
                         ess_note="variances treat samples as independent; MCMC autocorrelation not included")


@dataclass(frozen=True)
class RvEstimate:
    """Output of :func:`rv_estimate`."""

    mu_plain: float
    mu_controlled: float
    phi: np.ndarray
    controlled: np.ndarray
    diagnostics: CvDiagnostics
    se_plain: float
    se_controlled: float


def rv_estimate(g_samples, m_samples, centered: bool = True, split: bool = False,
                n_batches: int | None = None) -> RvEstimate:
    """Fit coefficients, apply the control variate and summarise.

    With ``split=True`` coefficients are fitted on the first half of the
    samples and everything else is evaluated on the second half, which
    removes the bias from reusing samples.  Standard errors use batch means.
    """
    g, m = _as_design(g_samples, m_samples)
    if split:
        half = g.size // 2
        phi = estimate_optimal_coeffs(g[:half], m[:half], centered=centered)
        g, m = g[half:], m[half:]
    else:
        phi = estimate_optimal_coeffs(g, m, centered=centered)
    c = controlled_values(g, m, phi)
    return RvEstimate(
        mu_plain=float(g.mean()),
        mu_controlled=float(c.mean()),
        phi=phi,
        controlled=c,
        diagnostics=variance_reduction_factor(g, c),
        se_plain=batch_means_se(g, n_batches),
        se_controlled=batch_means_se(c, n_batches),
    )


def batch_means_se(x, n_batches: int | None = None) -> float:
    """Standard error of the mean of a (possibly autocorrelated) series.

    Uses non-overlapping batch means with ``floor(sqrt(n))`` batches unless
    ``n_batches`` is given.  Falls back to the iid formula for short series.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return math.nan
    if n_batches is None:
        n_batches = int(math.isqrt(n))
    if n_batches < 2 or n // n_batches < 2:
        return float(x.std(ddof=1) / math.sqrt(n))
    size = n // n_batches
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


@dataclass(frozen=True)
class RhoCurveFit:
    """Fit of ``rho(K)^2 = (1/rho_inf^2 + C/K)^{-1}``."""

    rho_inf: float
    C: float
    residual: float
    K_values: np.ndarray = field(repr=False, default=None)
    rho_values: np.ndarray = field(repr=False, default=None)

    def predict(self, K):
        K = np.asarray(K, dtype=float)
        return rho_curve(K, self.rho_inf, self.C)


def rho_curve(K, rho_inf, C):
    """Correlation after ``K`` simulations given its limit and decay constant."""
    K = np.asarray(K, dtype=float)
    return 1.0 / np.sqrt(1.0 / rho_inf**2 + C / K)


def fit_rho_curve(K_values, rho_values) -> RhoCurveFit:
    """Least-squares fit of ``1/rho^2 = 1/rho_inf^2 + C/K``.

    The intercept is constrained to ``>= 1`` (so ``rho_inf <= 1``) and the
    slope to be positive.  ``residual`` is the RMS error on the linear scale.
    """
    K = np.asarray(K_values, dtype=float)
    rho = np.abs(np.asarray(rho_values, dtype=float))
    if K.ndim != 1 or K.shape != rho.shape:
        raise InvalidArgumentError("K_values and rho_values must be equal-length vectors")
    if np.any(K <= 0):
        raise InvalidArgumentError("K values must be positive")
    if np.unique(K).size < 2:
        raise InvalidArgumentError("need at least two distinct K values")
    if np.any(rho <= 0) or np.any(rho >= 1):
        raise InvalidArgumentError("rho values must lie in (0, 1)")
    y = 1.0 / rho**2
    design = np.column_stack([np.ones_like(K), 1.0 / K])
    sol = lsq_linear(design, y, bounds=([1.0, 1e-12], [np.inf, np.inf]), method="bvls")
    intercept, slope = sol.x
    resid = design @ sol.x - y
    return RhoCurveFit(
        rho_inf=float(1.0 / math.sqrt(intercept)),
        C=float(slope),
        residual=float(math.sqrt(np.mean(resid**2))),
        K_values=K,
        rho_values=rho,
    )


def _check_positive(**kw):
    for name, value in kw.items():
        if not value > 0:
            raise InvalidArgumentError(f"{name} must be positive, got {value!r}")


def cost_normalized_ratio(K, K0, c, rho_inf, C) -> float:
    """Variance ratio per unit cost when ``I = c / ceil(K/K0)`` iterations are affordable.

    ``r(K) = ceil(K/K0) / c * (1 - K rho_inf^2 / (K + C rho_inf^2))``.
    """
    _check_positive(K=K, K0=K0, c=c, C=C)
    if not 0 <= rho_inf <= 1:
        raise InvalidArgumentError(f"rho_inf must lie in [0, 1], got {rho_inf!r}")
    r2 = rho_inf**2
    blocks = -(-int(K) // int(K0))
    return blocks / c * (1.0 - K * r2 / (K + C * r2))


def argmin_r(K_max, K0, c, rho_inf, C) -> int:
    """``K`` in ``1..K_max`` minimising :func:`cost_normalized_ratio`; ties go to the smallest."""
    _check_positive(K_max=K_max, K0=K0)
    if rho_inf == 0:
        return 1
    # strictly decreasing inside each block of K0, so only block ends compete;
    # comparing those avoids rounding ties when rho_inf is tiny
    K_max, K0 = int(K_max), int(K0)
    cands = sorted({min(j * K0, K_max) for j in range(1, -(-K_max // K0) + 1)})
    values = [cost_normalized_ratio(k, K0, c, rho_inf, C) for k in cands]
    return cands[int(np.argmin(values))]
