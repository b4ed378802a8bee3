"""Scalar Bayesian estimation under a Gaussian likelihood.

The decoupled observation of one sample is modelled as ``y = x + z`` with
``z ~ N(0, sigma2)``. Two routes compute the posterior mean and variance of
``x``:

* :func:`sparse_gaussian_moments` evaluates the closed form for the
  Bernoulli-Gaussian prior ``(1 - rho) delta(x) + rho N(0, 1)``. It is
  vectorized and is what the OAS engine calls.
* :func:`generic_posterior_moments` integrates numerically against any
  :class:`ScalarPrior` (a point mass at zero plus a continuous part). It is
  slow and exists as an independent check and for experimenting with other
  priors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import expit

from .errors import InvalidArgumentError, NumericalError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PosteriorMoments:
    mean: np.ndarray | float
    variance: np.ndarray | float


@dataclass(frozen=True)
class SparseGaussianPrior:
    """Bernoulli-Gaussian prior with sparsity factor ``rho``."""

    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidArgumentError(f"rho must lie in [0, 1], got {self.rho}")

    def as_scalar_prior(self) -> "ScalarPrior":
        return ScalarPrior(
            point_mass=1.0 - self.rho,
            log_density=(lambda u: -0.5 * u * u - _LOG_SQRT_2PI) if self.rho > 0 else None,
            continuous_weight=self.rho,
        )


@dataclass(frozen=True)
class ScalarPrior:
    """``point_mass * delta(u) + continuous_weight * exp(log_density(u))``.

    ``log_density`` must be a normalized log-density (or None when the prior
    is a pure point mass).
    """

    point_mass: float
    log_density: Optional[Callable[[float], float]]
    continuous_weight: float = 1.0


def gaussian_prior(variance: float = 1.0) -> ScalarPrior:
    """Zero-mean Gaussian prior with no point mass."""
    c = -0.5 * math.log(2.0 * math.pi * variance)
    return ScalarPrior(0.0, lambda u: c - 0.5 * u * u / variance, 1.0)


def point_mass_prior() -> ScalarPrior:
    return ScalarPrior(1.0, None, 0.0)


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def sparse_gaussian_moments(y, sigma2, rho) -> PosteriorMoments:
    """Posterior mean and variance for the sparse-Gaussian prior.

    With ``I0 = (1 - rho) sqrt(1 + s2) exp(-y^2 / 2 s2)``,
    ``I1 = rho sqrt(s2) exp(-y^2 / 2 (1 + s2))`` and ``J = (1 + s2)(I0 + I1)``::

        mean     = I1 y / J
        variance = (I1 / J) (s2 + (I0 / J) y^2)

    The ratios ``I1 / (I0 + I1)`` are formed from log-weights, so large
    ``|y| / sigma`` neither underflows nor produces 0/0. Broadcasts over
    array arguments.
    """
    y = np.asarray(y, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(~(sigma2 > 0)):
        raise InvalidArgumentError("sigma2 must be positive")
    rho = np.asarray(rho, dtype=float)
    if np.any((rho < 0) | (rho > 1)):
        raise InvalidArgumentError("rho must lie in [0, 1]")

    y2 = y * y
    one_plus = 1.0 + sigma2
    log_i0 = _log(1.0 - rho) + 0.5 * np.log(one_plus) - y2 / (2.0 * sigma2)
    log_i1 = _log(rho) + 0.5 * np.log(sigma2) - y2 / (2.0 * one_plus)
    with np.errstate(invalid="ignore"):
        # w1 = I1 / (I0 + I1); both logs are -inf only if rho is outside [0, 1]
        w1 = expit(log_i1 - log_i0)
    w1 = np.where(rho == 0, 0.0, np.where(rho == 1, 1.0, w1))
    w0 = 1.0 - w1

    mean = w1 * y / one_plus
    variance = (w1 / one_plus) * (sigma2 + w0 * y2 / one_plus)
    if mean.ndim == 0:
        return PosteriorMoments(float(mean), float(variance))
    return PosteriorMoments(mean, variance)


def generic_posterior_moments(y: float, sigma2: float, prior: ScalarPrior,
                              tol: float = 1e-11) -> PosteriorMoments:
    """Posterior moments under ``prior`` by adaptive quadrature.

    The point mass at zero enters analytically. The continuous part is
    integrated over its posterior mode +/- 10 posterior standard deviations
    (estimated from the local curvature), after subtracting the log-integrand
    at the mode so that extreme ``y`` does not underflow.
    """
    if not sigma2 > 0:
        raise InvalidArgumentError(f"sigma2 must be positive, got {sigma2}")
    y = float(y)

    log_terms = []  # (log mass, mean, variance) per mixture component
    if prior.point_mass > 0:
        log_terms.append((math.log(prior.point_mass) - y * y / (2.0 * sigma2), 0.0, 0.0))

    if prior.log_density is not None and prior.continuous_weight > 0:
        log_f = lambda u: prior.log_density(u) - (y - u) ** 2 / (2.0 * sigma2)  # noqa: E731
        mode, spread = _locate(log_f, y, sigma2)
        peak = log_f(mode)
        g = lambda u: math.exp(log_f(u) - peak)  # noqa: E731
        lo, hi = mode - 10.0 * spread, mode + 10.0 * spread

        def quad(fn):
            val, _ = integrate.quad(fn, lo, hi, points=[mode], epsabs=tol * spread,
                                    epsrel=tol, limit=200)
            if not np.isfinite(val):
                raise NumericalError("quadrature returned a non-finite value")
            return val

        z0 = quad(g)
        if not z0 > 0:
            raise NumericalError("continuous posterior mass vanished")
        m1 = quad(lambda u: (u - mode) * g(u)) / z0
        m2 = quad(lambda u: (u - mode) ** 2 * g(u)) / z0
        cmean = mode + m1
        cvar = max(m2 - m1 * m1, 0.0)
        log_terms.append((math.log(prior.continuous_weight) + peak + math.log(z0), cmean, cvar))

    if not log_terms:
        raise InvalidArgumentError("prior has no mass")
    logs = np.array([t[0] for t in log_terms])
    w = np.exp(logs - logs.max())
    w /= w.sum()
    means = np.array([t[1] for t in log_terms])
    variances = np.array([t[2] for t in log_terms])
    mean = float(w @ means)
    variance = float(w @ (variances + (means - mean) ** 2))
    return PosteriorMoments(mean, variance)


def _locate(log_f, y, sigma2):
    """Mode and a curvature-based width of a unimodal-ish log integrand."""
    s = math.sqrt(sigma2)
    res = optimize.minimize_scalar(lambda u: -log_f(u), bracket=(y - s, y))
    mode = float(res.x)
    h = 1e-3 * min(s, 1.0)
    curv = -(log_f(mode + h) - 2.0 * log_f(mode) + log_f(mode - h)) / (h * h)
    spread = 1.0 / math.sqrt(curv) if curv > 0 else s
    return mode, max(min(spread, 10.0), 1e-3 * s)
