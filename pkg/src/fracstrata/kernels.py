"""Time-domain kernels of the Efros representations and their convolutions.

Notation used throughout: ``c = (z + alpha tau)/a`` is the effective depth,
``d = lam**2/(4 a**2)`` the drift shift and ``s = t**(2 beta)``.

The convolved kernel g2 = L^-1[e^{-tau P} e^{-c sqrt(P + d)} / p], P = p**(2 beta),
is evaluated by subordination: e^{-c sqrt(q + d)} is the transform of the
drifted first-passage density

    f_cd(w) = c / (2 sqrt(pi w**3)) exp(-c**2/(4w) - d w),

so g2(t) = int_0^inf f_cd(w) N((tau + w)/s; beta) dw, a smooth positive
integral.  Sampling the sharp kernels on a uniform grid and convolving them
is kept as a second route (``method="grid"``) for smooth configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DistributionalCaseError, DomainError
from .laplace import DEFAULT_QUAD, QuadSpec, log_quad
from .specfun import heaviside, m_wright, n_wright, n_wright_cutoff, n_wright_fast
from .transforms import Forcing, StratumParams

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_W_PANEL = 0.5
# f_cd mass below c**2/160 is erfc(sqrt(40)) ~ 1e-19
_W_LO_FACTOR = 1.0 / 160.0


@dataclass(frozen=True)
class ConvGrid:
    """Uniform time grid t_k = k*step, k = 0..length-1, for trapezoid convolutions."""

    step: float = 1.0 / 128
    length: int = 257

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError("ConvGrid.step must be positive")
        if self.length < 3:
            raise DomainError("ConvGrid.length must be at least 3")

    @classmethod
    def covering(cls, span: float, step: float) -> "ConvGrid":
        n = max(2, int(math.ceil(span / step)))
        return cls(span / n, n + 1)

    @property
    def span(self) -> float:
        return self.step * (self.length - 1)

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.length)

    def halved(self) -> "ConvGrid":
        return ConvGrid(self.step / 2, 2 * self.length - 1)


def _depth(tau, z, params: StratumParams):
    return (z + params.alpha * np.asarray(tau, dtype=float)) / params.a


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("kernels are evaluated for t > 0")
    return t


def _out(values, *like):
    if all(np.ndim(v) == 0 for v in like):
        return float(np.asarray(values).reshape(-1)[0])
    return values


def g_prime(t, tau, z, params: StratumParams, beta: float | None = None):
    """(c beta / t**(beta+1)) M(c / t**beta; beta); zero when c = 0."""
    beta = params.beta if beta is None else beta
    if not 0 < beta < 1:
        raise DomainError("g_prime needs 0 < beta < 1")
    t = _check_t(t)
    c = _depth(tau, z, params)
    if c == 0:
        return _out(np.zeros_like(t), t)
    val = c * beta / t ** (beta + 1) * np.asarray(m_wright(c / t**beta, beta))
    return _out(val, t)


def g_doubleprime(t, tau, beta: float):
    """N(tau / t**(2 beta); beta)."""
    t = _check_t(t)
    return _out(np.asarray(n_wright(tau / t ** (2 * beta), beta)), t)


def lemma_a_kernel(t, tau, beta: float):
    """Inverse transform of exp(-tau p**(2 beta)), 0 < beta < 1/2."""
    if beta == 0.5:
        raise DistributionalCaseError("at 2*beta = 1 the kernel is the delta at t = tau")
    if not 0 < beta < 0.5:
        raise DomainError("lemma_a_kernel needs 0 < beta < 1/2")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise DomainError("lemma_a_kernel needs tau > 0")
    t = _check_t(t)
    s = t ** (2 * beta)
    return _out(2 * beta * tau / (t * s) * np.asarray(m_wright(tau / s, 2 * beta)), t, tau)


def first_passage_density(w, c: float, d: float = 0.0):
    """f_cd(w), the inverse transform of exp(-c sqrt(p + d))."""
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        val = c / (2.0 * np.sqrt(math.pi * w**3)) * np.exp(-c * c / (4.0 * w) - d * w)
    return np.where(w > 0, val, 0.0)


def lemma_b_kernel(t, tau, z, params: StratumParams, spec: QuadSpec = DEFAULT_QUAD):
    """Inverse transform of exp(-c sqrt(p**(2 beta) + d)).

    2 beta < 1: the subordination integral over u is taken in v = u/s,
    ``(beta c / sqrt(pi) t**(2 beta + 1)) s**(1/2) int v**(-1/2) e^{-c**2/(4 s v) - d s v} M(v; 2 beta) dv``.
    2 beta = 1: the drifted first-passage density itself.
    """
    t = _check_t(t)
    c = float(_depth(tau, z, params))
    if not c > 0:
        raise DomainError("lemma_b_kernel needs z + alpha*tau > 0")
    d = params.drift_sq
    beta = params.beta
    if beta == 0.5:
        return _out(first_passage_density(t, c, d), t)
    nu = 2 * beta
    v_hi = n_wright_cutoff(beta)
    out = np.zeros(t.shape)
    for i, ti in np.ndenumerate(t):
        s = ti**nu
        v_lo = c * c / (4 * s) / 45.0
        if v_lo >= v_hi:
            continue

        def integrand(v, s=s):
            return v**-0.5 * np.exp(-c * c / (4 * s * v) - d * s * v) * np.asarray(m_wright(v, nu))

        val, _ = log_quad(integrand, v_lo, v_hi, QuadSpec(max(spec.rel_tol, 1e-10), spec.abs_tol * 1e-6),
                          points=(1.0,), width=0.5)
        out[i] = beta * c / (math.sqrt(math.pi) * ti * math.sqrt(s)) * val
    return _out(out, t)


# --- the convolved kernels g1, g2 -------------------------------------------

def _g2_closed(t, tau, c, k):
    """2 beta = 1: H(t - tau) * int_0^{t-tau} f_cd(w) dw in erfc form."""
    T = np.asarray(t, dtype=float) - tau
    out = np.zeros(np.broadcast(T, c).shape)
    pos = np.broadcast_to(T > 0, out.shape)
    T = np.broadcast_to(T, out.shape)[pos]
    cc = np.broadcast_to(c, out.shape)[pos]
    rt = np.sqrt(T)
    a1 = cc / (2 * rt) - k * rt
    a2 = cc / (2 * rt) + k * rt
    out[pos] = 0.5 * (np.exp(-cc * k) * special.erfc(a1)
                      + special.erfcx(a2) * np.exp(-cc * cc / (4 * T) - k * k * T))
    return out


def _g2_subordinated(t, tau, c, params: StratumParams):
    """g2 on the outer product of ``t`` (n_t,) and ``tau``/``c`` (n_tau,)."""
    beta = params.beta
    d = params.drift_sq
    s = t ** (2 * beta)
    z_cut = n_wright_cutoff(beta)
    out = np.zeros((t.size, tau.size))
    zero_c = c <= 0
    if np.any(zero_c):
        out[:, zero_c] = n_wright_fast(np.divide.outer(1.0 / s, 1.0 / tau[zero_c]), beta)
    w_hi = s.max() * z_cut - tau
    w_lo = np.where(zero_c, 1.0, c * c * _W_LO_FACTOR)
    live = (~zero_c) & (w_hi > w_lo)
    if not np.any(live):
        return out
    span = np.log(w_hi[live] / w_lo[live])
    panels = np.maximum(1, np.ceil(span / _W_PANEL).astype(int))
    idx_live = np.flatnonzero(live)
    for n in np.unique(panels):
        sel = idx_live[panels == n]
        # per-tau composite Gauss-Legendre in ln w with n panels
        u = ((np.arange(n)[:, None] + 0.5 * (_GL_X + 1.0)) / n).ravel()
        wts = np.tile(_GL_W / (2.0 * n), n)
        lo = np.log(w_lo[sel])
        width = np.log(w_hi[sel]) - lo
        lw = lo[:, None] + width[:, None] * u
        w = np.exp(lw)
        cs = c[sel][:, None]
        # f_cd(w) * w, the ln-w measure
        dens = cs / (2.0 * np.sqrt(math.pi * w)) * np.exp(-cs * cs / (4.0 * w) - d * w)
        dens *= (width[:, None] * wts)
        arg = (tau[sel][:, None] + w)[None, :, :] / s[:, None, None]
        vals = n_wright_fast(arg, beta)
        out[:, sel] = np.einsum("tjk,jk->tj", vals, dens)
    return out


def g2_matrix(t, tau, z, params: StratumParams):
    """g2(t_i, tau_j, z) as an (n_t, n_tau) array; all times must be > 0."""
    t = np.atleast_1d(_check_t(t))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    c = _depth(tau, z, params)
    if params.beta == 0.5:
        k = params.lam / (2 * params.a)
        return _g2_closed(t[:, None], tau[None, :], c[None, :], k)
    return _g2_subordinated(t, tau, c, params)


# lags below this fraction of t are dropped from forcing convolutions
_LAG_FLOOR = 1e-10


def forcing_rule(t: float, forcing: Forcing, width: float = 1.0):
    """Nodes and weights for int_0^t U(l) h'(t - l) dl.

    Composite 10-point Gauss-Legendre in ln l on [t*1e-10, t], broken at the
    kinks of sampled forcings.  Returns ``(lags, w_fine, w_coarse)``: the
    fine rule uses panels of ``width`` in ln l, the coarse rule twice that,
    and the h' factor is already folded into the weights.
    """
    kinks = [t - tk for tk in forcing.times if 0 < tk < t] if forcing.kind == "sampled" else []
    edges = np.log(np.array(sorted({t * _LAG_FLOOR, *kinks, t})))
    seg = np.diff(edges)
    lags, wf, wc = [], [], []
    for lo, hi, length in zip(edges[:-1], edges[1:], seg):
        for w_panel, bucket in ((width, wf), (2 * width, wc)):
            n = max(1, int(math.ceil(length / w_panel)))
            cuts = np.linspace(lo, hi, n + 1)
            half = 0.5 * np.diff(cuts)[:, None]
            s = (0.5 * (cuts[:-1] + cuts[1:])[:, None] + half * _GL_X).ravel()
            w = (half * _GL_W).ravel()
            lag = np.exp(s)
            lags.append(lag)
            weight = w * lag * forcing.derivative(t - lag)
            bucket.append(weight)
            (wc if bucket is wf else wf).append(np.zeros_like(weight))
    return np.concatenate(lags), np.concatenate(wf), np.concatenate(wc)


def forced_response(unit, t, forcing: Forcing):
    """d/dt (h * U)(t) = h(0+) U(t) + int_0^t U(l) h'(t - l) dl for each t.

    ``unit(times)`` returns the unit-forcing response with time on the
    leading axis.  All lags for all ``t`` are evaluated in one call.
    Returns ``(value, error_estimate)`` with ``t`` on the leading axis.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if forcing.is_unit:
        base = np.asarray(unit(t))
        return base, np.zeros_like(base)
    rules = [forcing_rule(float(ti), forcing) for ti in t]
    sizes = [len(r[0]) for r in rules]
    vals = np.asarray(unit(np.concatenate([t, *[r[0] for r in rules]])))
    base, rest = vals[: t.size], vals[t.size:]
    out = np.empty_like(base)
    err = np.empty_like(base)
    start = 0
    for i, (_, wf, wc) in enumerate(rules):
        block = rest[start: start + sizes[i]]
        start += sizes[i]
        fine = np.tensordot(wf, block, axes=(0, 0))
        coarse = np.tensordot(wc, block, axes=(0, 0))
        out[i] = forcing.at_zero * base[i] + fine
        err[i] = np.abs(fine - coarse)
    return out, err


def g1_matrix(t, tau, z, params: StratumParams, forcing: Forcing = Forcing()):
    """g1(t_i, tau_j, z) and an error estimate, both (n_t, n_tau).

    g1 = d/dt (g2 * h) = h(0+) g2(t) + int_0^t g2(l) h'(t - l) dl.
    """
    t = np.atleast_1d(_check_t(t))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    return forced_response(lambda s: g2_matrix(s, tau, z, params), t, forcing)


def convolve(f, g, grid: ConvGrid) -> np.ndarray:
    """Trapezoid Laplace convolution (f * g)(t_k) of samples on ``grid``."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != (grid.length,) or g.shape != (grid.length,):
        raise DomainError(f"samples must have length {grid.length}")
    full = np.convolve(f, g)[: grid.length]
    return grid.step * (full - 0.5 * (f[0] * g + g[0] * f))


def _sampled(fn, grid: ConvGrid):
    """Kernel samples with the t = 0 value set to its zero limit."""
    out = np.zeros(grid.length)
    out[1:] = fn(grid.times[1:])
    return out


def g1_kernel_grid(tau: float, z: float, params: StratumParams, forcing: Forcing, grid: ConvGrid,
                   order: str = "left", spec: QuadSpec = DEFAULT_QUAD) -> np.ndarray:
    """g1 on ``grid`` by sampled triple convolution of its three factors.

    ``order="left"`` forms (A*B)*C, ``"right"`` A*(B*C), with A the
    e^{-tau P} kernel, B the forcing and C the depth kernel.  At 2 beta = 1
    the A-factor is a delta and is applied as an exact shift.
    """
    b = forcing.value(grid.times)
    c = _sampled(lambda t: lemma_b_kernel(t, tau, z, params, spec), grid)
    if params.beta == 0.5:
        shifted = heaviside(grid.times - tau) * forcing.value(np.maximum(grid.times - tau, 0.0))
        return convolve(shifted, c, grid)
    a = _sampled(lambda t: lemma_a_kernel(t, tau, params.beta), grid)
    if order == "left":
        return convolve(convolve(a, b, grid), c, grid)
    if order == "right":
        return convolve(a, convolve(b, c, grid), grid)
    raise DomainError("order must be 'left' or 'right'")


def g1_kernel(t, tau, z, params: StratumParams, forcing: Forcing = Forcing(),
              grid: ConvGrid = ConvGrid(), method: str = "efros"):
    """Kernel g1(t, tau, z) of the forced problems (scalar or array ``t``).

    ``method="efros"`` (default) integrates the subordinated form and needs no
    grid; ``method="grid"`` interpolates the sampled triple convolution on
    ``grid``, which must cover max(t).
    """
    t = np.asarray(t, dtype=float)
    if method == "efros":
        val, _ = g1_matrix(np.atleast_1d(t), [tau], z, params, forcing)
        return _out(val[:, 0].reshape(t.shape), t)
    if method == "grid":
        if np.max(t) > grid.span + 1e-12:
            raise DomainError("grid does not cover the requested times")
        samples = g1_kernel_grid(tau, z, params, forcing, grid)
        return _out(np.interp(t, grid.times, samples), t)
    raise DomainError(f"unknown method {method!r}")


def g2_kernel(t, tau, z, params: StratumParams, grid: ConvGrid = ConvGrid(), method: str = "efros"):
    """Kernel g2(t, tau, z) of the Robin problem (scalar or array ``t``)."""
    t = np.asarray(t, dtype=float)
    if method == "efros":
        return _out(g2_matrix(np.atleast_1d(t), [tau], z, params)[:, 0].reshape(t.shape), t)
    if method == "grid":
        if np.max(t) > grid.span + 1e-12:
            raise DomainError("grid does not cover the requested times")
        b = _sampled(lambda s: lemma_b_kernel(s, tau, z, params), grid)
        if params.beta == 0.5:
            a = heaviside(grid.times - tau)
        else:
            a = _sampled(lambda s: g_doubleprime(s, tau, params.beta), grid)
        return _out(np.interp(t, grid.times, convolve(a, b, grid)), t)
    raise DomainError(f"unknown method {method!r}")


def step_halving_error(fn, grid: ConvGrid):
    """Estimate the trapezoid error of a sampled construction by halving the step.

    ``fn(grid)`` returns samples on ``grid``; returns (coarse, fine-on-coarse, estimate).
    """
    coarse = np.asarray(fn(grid))
    fine = np.asarray(fn(grid.halved()))[::2]
    return coarse, fine, float(np.max(np.abs(fine - coarse))) / 3.0


# --- time sides of the registered transform pairs ----------------------------

def pair_time_side(pair_id: str, t, params: StratumParams, tau: float = 0.0, z: float = 0.0,
                   x: float = 1.0, r: float = 1.0, spec: QuadSpec = DEFAULT_QUAD):
    """t-domain side matching :func:`fracstrata.transforms.pair_transform`."""
    t = _check_t(t)
    if pair_id == "2.5":
        return g_prime(t, tau, z, params)
    if pair_id == "2.6":
        return g_doubleprime(t, tau, params.beta)
    if pair_id == "2.14":
        return lemma_a_kernel(t, tau, params.beta)
    if pair_id == "2.15":
        return lemma_b_kernel(t, tau, z, params, spec)
    if pair_id == "2.16":
        return _out(first_passage_density(t, float(_depth(tau, z, params)), params.drift_sq), t)
    if pair_id == "3.12":
        return _out(first_passage_density(t, x), t)
    if pair_id == "4.12":
        g = params.gamma
        rt = np.sqrt(t)
        y = x / (2 * rt) + g * rt
        val = np.exp(-x * x / (4 * t)) * (1.0 / np.sqrt(math.pi * t) - g * special.erfcx(y))
        return _out(val, t)
    if pair_id == "5.14":
        nu = params.nu
        return _out(0.5 * (r / 2) ** (2 * nu) * t ** (-nu - 1) * np.exp(-r * r / (4 * t)), t)
    raise DomainError(f"unknown pair id {pair_id!r}")


__all__ = [
    "ConvGrid", "g_prime", "g_doubleprime", "lemma_a_kernel", "lemma_b_kernel",
    "first_passage_density", "g1_kernel", "g2_kernel", "g1_matrix", "g2_matrix",
    "forcing_rule", "forced_response",
    "g1_kernel_grid", "convolve", "step_halving_error", "pair_time_side",
]
