"""Wright-type auxiliary functions and the classical special functions.

The Wright function is summed from its power series.  For the M and N
specializations the series suffers cancellation once ``z**(1/(1-nu))``
grows, so there the value is taken from the real integral representation
of the one-sided stable law (Zolotarev/Kanter form), whose integrand is
positive and therefore well conditioned::

    M(z; nu) = z**(nu/(1-nu)) / (pi (1-nu)) * int_0^pi A(phi) exp(-A(phi) Z) dphi
    N(z; nu/2) = 1/pi * int_0^pi exp(-A(phi) Z) dphi,      Z = z**(1/(1-nu))

with ``A(phi) = (sin(nu phi)/sin phi)**(1/(1-nu)) sin((1-nu) phi)/sin(nu phi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from .errors import DistributionalCaseError, DomainError, EvaluationError

MAX_TERMS = 500

# Series/integral switch on Z = z**(1/(1-nu)).
_SWITCH_Z = 2.0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class WrightParams:
    """Order parameters (lambda, mu) of W(z; lambda, mu)."""

    lambda_w: float
    mu_w: float

    def __post_init__(self):
        if not self.lambda_w > -1.0:
            raise DomainError(f"lambda_w must exceed -1, got {self.lambda_w}")


def _scalar_or_array(values, like):
    if np.ndim(like) == 0:
        return float(np.asarray(values).reshape(-1)[0])
    return values


def gamma_fn(x):
    """Gamma function; raises DomainError at the poles 0, -1, -2, ..."""
    xa = np.asarray(x, dtype=float)
    if np.any((xa <= 0) & (xa == np.floor(xa))):
        raise DomainError(f"gamma has a pole at {x}")
    return _scalar_or_array(special.gamma(xa), x)


def _log_rgamma(x):
    """log|1/Gamma(x)| and sign(1/Gamma(x)); sign is 0 at the poles."""
    x = np.asarray(x, dtype=float)
    pole = (x <= 0) & (x == np.floor(x))
    sign = np.where(x > 0, 1.0, np.sign(np.sin(np.pi * x)))
    sign = np.where(pole, 0.0, sign)
    with np.errstate(divide="ignore", invalid="ignore"):
        neg = special.gammaln(1.0 - x) + np.log(np.abs(np.sin(np.pi * x)) / np.pi)
        logv = np.where(x > 0, -special.gammaln(np.where(x > 0, x, 1.0)), neg)
    logv = np.where(pole, -np.inf, logv)
    return logv, sign


def wright_w(z, params: WrightParams, tol: float = 1e-15, max_terms: int = MAX_TERMS):
    """W(z; lambda, mu) = sum_n z**n / (n! Gamma(lambda n + mu)).

    Summed with Neumaier compensation.  A point is converged after two
    consecutive non-vanishing terms satisfy ``|term| < tol*|sum|`` and
    ``|term| < tol``; terms at poles of Gamma are exactly zero and do not
    count towards convergence.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    za = np.atleast_1d(np.asarray(z, dtype=float))
    logz = np.log(np.abs(za), where=za != 0, out=np.full(za.shape, -np.inf))
    zsign = np.where(za < 0, -1.0, 1.0)

    total = np.zeros_like(za)
    comp = np.zeros_like(za)
    quiet = np.zeros(za.shape, dtype=int)
    lam, mu = params.lambda_w, params.mu_w
    n = 0
    for n in range(max_terms):
        logc, sgn = _log_rgamma(lam * n + mu)
        if sgn == 0.0:
            continue
        if n == 0:
            term = np.full_like(za, sgn * math.exp(logc))
        else:
            with np.errstate(over="ignore"):
                term = sgn * zsign**n * np.exp(n * logz - special.gammaln(n + 1) + logc)
        t = total + term
        comp += np.where(np.abs(total) >= np.abs(term), (total - t) + term, (term - t) + total)
        total = t
        small = (np.abs(term) < tol * np.abs(total + comp)) & (np.abs(term) < tol)
        quiet = np.where(small, quiet + 1, 0)
        if np.all(quiet >= 2):
            break
    else:
        result = total + comp
        raise EvaluationError(
            f"Wright series did not converge in {max_terms} terms",
            partial=_scalar_or_array(result, z),
            detail={"terms": max_terms},
        )
    return _scalar_or_array(total + comp, z)


def _kanter_a(phi, nu):
    s_nu = np.sin(nu * phi)
    return (s_nu / np.sin(phi)) ** (1.0 / (1.0 - nu)) * np.sin((1.0 - nu) * phi) / s_nu


@lru_cache(maxsize=64)
def _kanter_table(nu: float):
    phi = np.linspace(1e-9, np.pi * (1 - 1e-12), 4097)
    return phi, _kanter_a(phi, nu)


def _stable_integral(z, nu, kind):
    """Kanter-form integral for M (kind='M') or the stable CDF (kind='N')."""
    z = np.asarray(z, dtype=float)
    big_z = z ** (1.0 / (1.0 - nu))
    a0 = (1.0 - nu) * nu ** (nu / (1.0 - nu))
    # truncate phi where the integrand has dropped by e**-60 relative to phi=0
    phi_tab, a_tab = _kanter_table(nu)
    idx = np.searchsorted(a_tab, a0 + 60.0 / big_z)
    phi_max = np.where(idx >= len(phi_tab), np.pi, phi_tab[np.minimum(idx + 1, len(phi_tab) - 1)])

    acc = np.zeros_like(big_z)
    edges = np.linspace(0.0, 1.0, 7)
    for lo, hi in zip(edges[:-1], edges[1:]):
        u = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
        phi = np.minimum(np.multiply.outer(phi_max, u), np.pi * (1 - 1e-15))
        a = _kanter_a(phi, nu)
        e = np.exp(-(a - a0) * big_z[..., None])
        f = a * e if kind == "M" else e
        acc += (f @ _GL_W) * 0.5 * (hi - lo) * phi_max
    with np.errstate(under="ignore"):
        damp = np.exp(-a0 * big_z)
    if kind == "M":
        return z ** (nu / (1.0 - nu)) / (np.pi * (1.0 - nu)) * acc * damp
    return acc * damp / np.pi


def _series_or_integral(z, nu, mu, kind, tol):
    za = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty_like(za)
    use_series = za ** (1.0 / (1.0 - nu)) < _SWITCH_Z
    if np.any(use_series):
        out[use_series] = wright_w(-za[use_series], WrightParams(-nu, mu), tol)
    if np.any(~use_series):
        out[~use_series] = _stable_integral(za[~use_series], nu, kind)
    return _scalar_or_array(out, z)


def m_wright(z, beta: float, tol: float = 1e-15):
    """M-Wright function M(z; beta) = W(-z; -beta, 1-beta), z >= 0."""
    if beta == 1.0:
        raise DistributionalCaseError("M(z; 1) is the Dirac delta at z = 1")
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    za = np.asarray(z, dtype=float)
    if np.any(za < 0):
        raise DomainError("m_wright is evaluated for z >= 0 only")
    if beta == 0.5:
        return _scalar_or_array(np.exp(-za**2 / 4.0) / math.sqrt(math.pi), z)
    return _series_or_integral(za, beta, 1.0 - beta, "M", tol)


def heaviside(x):
    """Unit step with H(0) = 1/2."""
    return np.heaviside(x, 0.5)


def n_wright(z, beta: float, tol: float = 1e-15):
    """N(z; beta) = W(-z; -2 beta, 1) for 0 < beta <= 1/2, z >= 0.

    At beta = 1/2 this is the step H(1 - z).
    """
    if not 0.0 < beta <= 0.5:
        raise DomainError(f"beta must lie in (0, 1/2], got {beta}")
    za = np.asarray(z, dtype=float)
    if np.any(za < 0):
        raise DomainError("n_wright is evaluated for z >= 0 only")
    if beta == 0.5:
        return _scalar_or_array(heaviside(1.0 - za), z)
    return _series_or_integral(za, 2.0 * beta, 1.0, "N", tol)


def n_wright_cutoff(beta: float, level: float = 1e-18) -> float:
    """Argument beyond which N(z; beta) < level (beta < 1/2)."""
    nu = 2.0 * beta
    a0 = (1.0 - nu) * nu ** (nu / (1.0 - nu))
    # Laplace-method bound on the CDF tail, padded for the prefactor
    return (math.log(1.0 / level) / a0) ** (1.0 - nu) * 1.05


@lru_cache(maxsize=32)
def _n_spline(beta: float, step: float):
    zmax = n_wright_cutoff(beta)
    grid = np.linspace(0.0, zmax, int(math.ceil(zmax / step)) + 1)
    values = np.asarray(n_wright(grid, beta))
    return CubicSpline(grid, values, bc_type=((1, -float(m_wright(0.0, 2 * beta))), "natural")), zmax


def n_wright_fast(z, beta: float, step: float = 1e-3):
    """Spline-tabulated N(z; beta) for hot loops; zero past the tail cutoff.

    Agrees with :func:`n_wright` to about 1e-12 absolute.
    """
    if beta == 0.5:
        return heaviside(1.0 - np.asarray(z, dtype=float))
    spline, zmax = _n_spline(float(beta), float(step))
    za = np.asarray(z, dtype=float)
    return np.where(za < zmax, spline(np.minimum(za, zmax)), 0.0)


def erfc_fn(x):
    """Complementary error function (accepts +-inf)."""
    return _scalar_or_array(special.erfc(np.asarray(x, dtype=float)), x)


def bessel_k(nu: float, x):
    """Modified Bessel function of the second kind K_nu(x).

    Real ``x`` must be positive; complex ``x`` needs Re(x) > 0.
    """
    if not nu > 0:
        raise DomainError(f"nu must be positive, got {nu}")
    xa = np.asarray(x)
    if np.iscomplexobj(xa):
        if np.any(xa.real <= 0):
            raise DomainError("complex argument needs Re(x) > 0")
        out = special.kv(nu, xa)
        return complex(out) if np.ndim(x) == 0 else out
    if np.any(xa <= 0):
        raise DomainError("bessel_k needs x > 0")
    return _scalar_or_array(special.kv(nu, xa.astype(float)), x)
