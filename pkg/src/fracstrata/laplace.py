"""Forward Laplace transform, numerical inversion and the Caputo derivative."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma as _gamma

from .errors import DomainError, EvaluationError

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances for adaptive quadrature of (semi-)infinite integrals."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-13
    max_subdivisions: int = 4000
    tail_cutoff: float = 1e-16

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("rel_tol and abs_tol must be positive")
        if not self.tail_cutoff > 0:
            raise DomainError("tail_cutoff must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be a positive integer")


@dataclass(frozen=True)
class InvSpec:
    """Numerical inversion policy: engine, node count and contour shift."""

    method: str = "talbot"
    nodes: int = 32
    shift: float = 0.0

    def __post_init__(self):
        if self.method == "talbot":
            if not 16 <= self.nodes <= 64:
                raise DomainError("talbot nodes must lie in [16, 64]")
        elif self.method == "stehfest":
            if self.nodes % 2 or not 8 <= self.nodes <= 20:
                raise DomainError("stehfest nodes must be even and lie in [8, 20]")
        else:
            raise DomainError(f"unknown inversion method {self.method!r}")
        if self.shift < 0:
            raise DomainError("shift must be >= 0")


DEFAULT_QUAD = QuadSpec()
DEFAULT_INV = InvSpec()


def _call_vectorized(f, x):
    x = np.asarray(x)
    try:
        y = np.asarray(f(x))
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([f(v) for v in x.ravel()]).reshape(x.shape)


def _panel_rule(edges, panels_per_segment):
    nodes, weights = [], []
    for a, b, n in zip(edges[:-1], edges[1:], panels_per_segment):
        cuts = np.linspace(a, b, n + 1)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[:-1] + cuts[1:])
        nodes.append((mid[:, None] + half[:, None] * _GL_X).ravel())
        weights.append((half[:, None] * _GL_W).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def log_quad(g: Callable, t_lo: float, t_hi: float, spec: QuadSpec = DEFAULT_QUAD,
             points: Sequence[float] = (), width: float = 1.0):
    """Integrate g(t) dt over [t_lo, t_hi] with composite Gauss-Legendre in ln t.

    ``g`` is called once per refinement level with an array of abscissae.
    Panels are halved until two successive levels agree; returns
    ``(value, error_estimate)``.
    """
    if not 0 < t_lo < t_hi:
        raise DomainError("log_quad needs 0 < t_lo < t_hi")
    inner = sorted(p for p in points if t_lo < p < t_hi)
    edges = np.log(np.array([t_lo, *inner, t_hi]))
    seg = np.diff(edges)

    def level(w):
        counts = np.maximum(1, np.ceil(seg / w).astype(int))
        s, ws = _panel_rule(edges, counts)
        t = np.exp(s)
        vals = np.asarray(g(t))
        return np.sum(vals * t * ws, axis=-1), int(counts.sum())

    prev, _ = level(width)
    w = width / 2
    while True:
        cur, used = level(w)
        err = np.max(np.abs(cur - prev))
        if err <= max(spec.abs_tol, spec.rel_tol * np.max(np.abs(cur))):
            return cur, err
        if 2 * used > spec.max_subdivisions:
            raise EvaluationError("quadrature did not converge", partial=cur, detail={"error": err})
        prev, w = cur, w / 2


def forward_laplace(f: Callable, p, spec: QuadSpec = DEFAULT_QUAD, points: Sequence[float] = (),
                    t_min: float = 1e-30, t_max: float | None = None):
    """Numerical Laplace transform int_0^inf exp(-p t) f(t) dt.

    ``p`` may be complex (Re p > 0) or an array of such values.  The range
    is cut where exp(-Re(p) t) falls below ``spec.tail_cutoff`` (``f`` is
    assumed to be of order one there; pass ``t_max`` otherwise) and below
    ``t_min``.  ``points`` are breakpoints such as jump locations.
    Returns ``(value, error_estimate)``.
    """
    pa = np.atleast_1d(np.asarray(p, dtype=complex))
    if np.any(pa.real <= 0):
        raise DomainError("forward_laplace needs Re(p) > 0")
    if t_max is None:
        t_max = math.log(1.0 / spec.tail_cutoff) / float(pa.real.min())

    def integrand(t):
        ft = _call_vectorized(f, t)
        return np.exp(-np.multiply.outer(pa, t)) * ft

    value, err = log_quad(integrand, t_min, t_max, spec, points)
    if np.ndim(p) == 0:
        value = complex(value[0])
        if np.isrealobj(p) or np.imag(p) == 0:
            value = value.real
    return value, err


def _eval_transform(F, p):
    p = np.asarray(p, dtype=complex)
    return _call_vectorized(F, p).astype(complex)


def talbot(F: Callable, t: float, nodes: int = 32, shift: float = 0.0) -> float:
    """Fixed-Talbot inversion (Abate-Valko contour, r = 2M/(5t))."""
    if not t > 0:
        raise DomainError("inversion needs t > 0")
    m = nodes
    r = 2.0 * m / (5.0 * t)
    theta = np.pi * np.arange(1, m) / m
    cot = 1.0 / np.tan(theta)
    s = r * theta * (cot + 1j)
    sigma = theta + (theta * cot - 1.0) * cot
    vals = _eval_transform(F, np.concatenate([[r], s]) + shift)
    head = 0.5 * vals[0].real * math.exp(r * t)
    body = np.sum((np.exp(t * s) * vals[1:] * (1.0 + 1j * sigma)).real)
    return float(math.exp(shift * t) * r / m * (head + body))


@lru_cache(maxsize=None)
def stehfest_weights(n: int) -> tuple[float, ...]:
    """Gaver-Stehfest weights V_1..V_n (n even)."""
    half = n // 2
    out = []
    for k in range(1, n + 1):
        acc = 0
        for j in range((k + 1) // 2, min(k, half) + 1):
            num = j**half * math.factorial(2 * j)
            den = (math.factorial(half - j) * math.factorial(j) * math.factorial(j - 1)
                   * math.factorial(k - j) * math.factorial(2 * j - k))
            acc += num / den
        out.append((-1) ** (k + half) * acc)
    return tuple(out)


def stehfest(F: Callable, t: float, nodes: int = 16, shift: float = 0.0) -> float:
    """Gaver-Stehfest inversion from real-axis samples."""
    if not t > 0:
        raise DomainError("inversion needs t > 0")
    ln2 = math.log(2.0)
    k = np.arange(1, nodes + 1)
    vals = _eval_transform(F, k * ln2 / t + shift).real
    return float(math.exp(shift * t) * ln2 / t * np.dot(stehfest_weights(nodes), vals))


def invert(F: Callable, t: float, spec: InvSpec = DEFAULT_INV) -> float:
    """Approximate inverse Laplace transform of F at time t."""
    if spec.method == "talbot":
        return talbot(F, t, spec.nodes, spec.shift)
    return stehfest(F, t, spec.nodes, spec.shift)


@dataclass(frozen=True)
class Inversion:
    value: float
    check: float
    rel_diff: float
    reliable: bool


def invert_checked(F: Callable, t: float, spec: InvSpec = DEFAULT_INV, tol: float = 1e-3) -> Inversion:
    """Invert with the requested engine and cross-check with the other one.

    The result is flagged unreliable when the engines disagree by more than
    ``tol`` relative.  Stehfest is fragile on oscillatory or branch-point
    transforms, so a flag is a warning about the check, not a verdict.
    """
    value = invert(F, t, spec)
    other = InvSpec("stehfest", 16, spec.shift) if spec.method == "talbot" else InvSpec("talbot", 32, spec.shift)
    check = invert(F, t, other)
    rel = abs(value - check) / max(abs(value), abs(check), 1e-300)
    return Inversion(value, check, rel, rel <= tol)


def l1_weights(n: int, order: float) -> np.ndarray:
    k = np.arange(n, dtype=float)
    return (k + 1.0) ** (1.0 - order) - k ** (1.0 - order)


def caputo_derivative(samples, order: float, t_index: int, step: float) -> float:
    """Caputo derivative of order in (0, 1] at grid index ``t_index``.

    Fractional orders use the L1 scheme (piecewise-linear reconstruction,
    exact power-kernel weights) on the uniform grid ``k*step``.  Order 1
    falls back to second-order finite differences.
    """
    f = np.asarray(samples, dtype=float)
    if not 0.0 < order <= 1.0:
        raise DomainError(f"order must lie in (0, 1], got {order}")
    if len(f) < 3:
        raise DomainError("need at least 3 samples")
    if not 1 <= t_index < len(f):
        raise DomainError(f"t_index must lie in [1, {len(f) - 1}]")
    n = t_index
    if order == 1.0:
        if n + 1 < len(f):
            return float((f[n + 1] - f[n - 1]) / (2 * step))
        if n >= 2:
            return float((3 * f[n] - 4 * f[n - 1] + f[n - 2]) / (2 * step))
        return float((f[1] - f[0]) / step)
    jumps = f[n:0:-1] - f[n - 1::-1] if n > 0 else np.empty(0)
    b = l1_weights(n, order)
    return float(np.dot(b, jumps) / (step**order * _gamma(2.0 - order)))


def caputo_l1(samples, order: float, step: float) -> np.ndarray:
    """L1 Caputo derivative at every grid index (index 0 is returned as 0)."""
    f = np.asarray(samples, dtype=float)
    out = np.zeros_like(f)
    for n in range(1, len(f)):
        out[n] = caputo_derivative(f, order, n, step) if len(f) >= 3 else np.nan
    return out
