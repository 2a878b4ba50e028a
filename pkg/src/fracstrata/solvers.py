"""Temperature fields of the three stratum problems.

Each field is an outer integral over tau of a closed-form horizontal weight
times a convolved kernel from :mod:`fracstrata.kernels`:

    T1  u(x,z,t) = int w1(tau) g1(t,tau,z) dtau
        w1 = A x / (2 sqrt(pi)) tau**-1.5 exp(-(x/(2 sqrt tau) - gamma sqrt tau)**2) e^{lam(z+alpha tau)/2a**2}
    T2  u(x,z,t) = int w2(tau) g2(t,tau,z) dtau
        w2 = 2 gamma A exp(-(x/(2 sqrt tau) - gamma sqrt tau)**2)
             * (1/sqrt(pi tau) - gamma erfcx(x/(2 sqrt tau) + gamma sqrt tau)) e^{lam(z+alpha tau)/2a**2}
    T3  u(r,z,t) = int w3(tau) g1(t,tau,z) dtau
        w3 = A/Gamma(nu) tau**(-nu-1) (r/2)**(2 nu) exp(-r**2/(4 tau)) e^{lam(z+alpha tau)/2a**2}

The squares in the exponents absorb e^{gamma x} and e^{-gamma**2 tau} so
nothing overflows.  The kernels vanish for tau beyond t**(2 beta) times the
N-function tail cutoff (tau >= t at 2 beta = 1), which bounds the range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, EvaluationError
from .kernels import forced_response, g1_matrix, g2_matrix
from .laplace import QuadSpec, log_quad
from .specfun import n_wright_cutoff
from .transforms import PROBLEMS, Forcing, StratumParams

SOLVER_QUAD = QuadSpec(rel_tol=1e-7, abs_tol=1e-15, max_subdivisions=20000)
# exp(-40) cut on the e^{-h**2/(4 tau)} factor at small tau
_TAU_LO_FACTOR = 1.0 / 160.0


@dataclass(frozen=True)
class EvalPoint:
    """Evaluation point: horizontal coordinate (x or r), depth z, time t."""

    h_coord: float
    z: float
    t: float

    def __post_init__(self):
        if not (self.h_coord >= 0 and self.z >= 0 and self.t >= 0):
            raise DomainError(f"coordinates must be >= 0, got {self}")
        if not all(math.isfinite(v) for v in (self.h_coord, self.z, self.t)):
            raise DomainError("coordinates must be finite")


@dataclass(frozen=True)
class FieldGrid:
    """Axes given as (min, max, count) triples; count = 1 keeps only min."""

    h_axis: tuple
    z_axis: tuple
    t_axis: tuple

    def __post_init__(self):
        for name in ("h_axis", "z_axis", "t_axis"):
            lo, hi, n = getattr(self, name)
            if not (lo >= 0 and hi > lo and int(n) == n and n >= 1):
                raise DomainError(f"{name} must be (min >= 0, max > min, count >= 1), got {(lo, hi, n)}")

    @staticmethod
    def _axis(spec):
        lo, hi, n = spec
        return np.array([float(lo)]) if n == 1 else np.linspace(lo, hi, int(n))

    def axes(self):
        return self._axis(self.h_axis), self._axis(self.z_axis), self._axis(self.t_axis)

    @property
    def size(self) -> int:
        return int(self.h_axis[2] * self.z_axis[2] * self.t_axis[2])


@dataclass(frozen=True)
class GridCell:
    h_coord: float
    z: float
    t: float
    u: float | None
    flag: str


def _tau_range(params: StratumParams, t_max: float):
    if params.beta == 0.5:
        return t_max
    return t_max ** (2 * params.beta) * n_wright_cutoff(params.beta)


def _lift(tau, z, params: StratumParams):
    return np.exp(params.lam * (z + params.alpha * tau) / (2 * params.a**2))


def _weight(problem, h, tau, params: StratumParams):
    A, g = params.amp_A, params.gamma
    rt = np.sqrt(tau)
    if problem == "T1":
        core = np.exp(-(h / (2 * rt) - g * rt) ** 2)
        return A * h / (2 * math.sqrt(math.pi)) * tau**-1.5 * core
    if problem == "T2":
        core = np.exp(-(h / (2 * rt) - g * rt) ** 2)
        return 2 * g * A * core * (1 / np.sqrt(math.pi * tau) - g * special.erfcx(h / (2 * rt) + g * rt))
    nu = params.nu
    return A / special.gamma(nu) * np.exp(-(nu + 1) * np.log(tau) + 2 * nu * math.log(h / 2) - h * h / (4 * tau))


def _check_problem(problem):
    if problem not in PROBLEMS:
        raise DomainError(f"problem must be one of {PROBLEMS}, got {problem!r}")


def _kernel(t, tau, z, params: StratumParams, forcing: Forcing):
    g, e = g1_matrix(t, tau, z, params, forcing)
    return np.stack([g, e], axis=-1)


def _tau_line(problem, h, z, t, params: StratumParams, qspec: QuadSpec, forcing: Forcing = Forcing()):
    """Field and error at positive times ``t`` from the tau-integral, shape (n_t, 2).

    With a unit forcing the kernel is g2; otherwise g1 carries the forcing.
    """
    out = np.zeros((t.size, 2))
    if problem != "T2" and h == 0:
        # e^{-h sqrt(q)} and the radial factor reduce to 1: no tau-integral
        if z == 0:
            out[:, 0] = params.amp_A * forcing.value(t)
        else:
            out[:] = params.amp_A * _lift(0.0, z, params) * _kernel(t, [0.0], z, params, forcing)[:, 0, :]
        return out

    tau_hi = _tau_range(params, float(t.max()))
    tau_lo = h * h * _TAU_LO_FACTOR if h > 0 else 1e-16 * tau_hi
    if tau_lo >= tau_hi:
        return out

    def integrand(tau):
        w = _weight(problem, h, tau, params) * _lift(tau, z, params)
        if forcing.is_unit:
            return w * g2_matrix(t, tau, z, params)
        k = _kernel(t, tau, z, params, forcing)
        return np.stack([w * k[..., 0], np.abs(w) * k[..., 1]])

    peaks = [h * h / 2] + ([tau_hi / n_wright_cutoff(params.beta)] if params.beta < 0.5 else [])
    try:
        val, qerr = log_quad(integrand, tau_lo, tau_hi, qspec, points=peaks)
    except EvaluationError as exc:
        raise EvaluationError(f"{problem} tau-integral failed at h={h}, z={z}: {exc}",
                              partial=exc.partial, detail=exc.detail) from exc
    if forcing.is_unit:
        out[:, 0], out[:, 1] = val, qerr
        if problem == "T2" and h == 0:
            # the weight is ~ tau**-1/2 at the origin: add [0, tau_lo] with g2 and the lift frozen
            g = params.gamma
            head = 2 * g * params.amp_A * (2 * math.sqrt(tau_lo / math.pi) - g * tau_lo)
            piece = head * _lift(tau_lo, z, params) * g2_matrix(t, [tau_lo], z, params)[:, 0]
            out[:, 0] += piece
            out[:, 1] += tau_lo * np.abs(piece)
    else:
        out[:, 0], out[:, 1] = val[0], val[1] + qerr
    return out


def solve_line(problem: str, h: float, z: float, times, params: StratumParams,
               forcing: Forcing = Forcing(), qspec: QuadSpec = SOLVER_QUAD, route: str = "field"):
    """u and an error estimate at (h, z) for every entry of ``times``.

    The unit-forcing field U is the tau-integral with g2 (g1 = g2 when
    h = 1).  With ``route="field"`` a general forcing enters through
    u = d/dt (h * U) on a log-graded lag rule; ``route="kernel"`` puts the
    forcing into g1 at every tau-node instead (slower, kept as a cross-check).
    ``forcing`` is ignored for T2, whose boundary datum is the constant A.
    """
    if route not in ("field", "kernel"):
        raise DomainError(f"unknown route {route!r}")
    _check_problem(problem)
    if h < 0 or z < 0:
        raise DomainError("h_coord and z must be >= 0")
    params.check_tau_envelope()
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise DomainError("t must be >= 0")
    u = np.zeros(times.shape)
    err = np.zeros(times.shape)
    live = times > 0
    if not np.any(live):
        return u, err
    if problem == "T2":
        forcing = Forcing()
    t = times[live]
    if problem != "T2" and h == 0 and z == 0:
        u[live] = params.amp_A * forcing.value(t)
        return u, err
    if route == "kernel":
        res = _tau_line(problem, h, z, t, params, qspec, forcing)
        u[live], err[live] = res[:, 0], res[:, 1]
        return u, err
    res, conv_err = forced_response(lambda s: _tau_line(problem, h, z, s, params, qspec), t, forcing)
    u[live] = res[:, 0]
    err[live] = np.abs(res[:, 1]) + conv_err[:, 0]
    return u, err


def solve(problem: str, pt: EvalPoint, params: StratumParams, forcing: Forcing = Forcing(),
          qspec: QuadSpec = SOLVER_QUAD):
    """(u, err_est) at one point."""
    u, e = solve_line(problem, pt.h_coord, pt.z, [pt.t], params, forcing, qspec)
    return float(u[0]), float(e[0])


def solve_t1(pt: EvalPoint, params: StratumParams, forcing: Forcing = Forcing(),
             qspec: QuadSpec = SOLVER_QUAD) -> float:
    """Incomplete lumped linear problem (boundary datum A h(t))."""
    return solve("T1", pt, params, forcing, qspec)[0]


def solve_t2(pt: EvalPoint, params: StratumParams, qspec: QuadSpec = SOLVER_QUAD) -> float:
    """Lumped linear problem with the Robin datum u_x - 2 gamma u = -2 gamma A."""
    return solve("T2", pt, params, Forcing(), qspec)[0]


def solve_t3(pt: EvalPoint, params: StratumParams, forcing: Forcing = Forcing(),
             qspec: QuadSpec = SOLVER_QUAD) -> float:
    """Incomplete lumped radial problem (boundary datum A h(t) at r = z = 0)."""
    return solve("T3", pt, params, forcing, qspec)[0]


# --- classical (2 beta = 1) nested quadratures --------------------------------

def _classical_inner(c, d, forcing: Forcing, T):
    """int_0^T (c/(2 sqrt pi)) u**-1.5 e^{-c**2/(4u) - d u} h(T - u) du, taken in ln u."""
    if T <= 0 or c <= 0:
        return float(forcing.value(T)) if T > 0 else 0.0
    lo = c * c / 200.0
    if lo >= T:
        return 0.0

    def f(s):
        u = math.exp(s)
        return c / (2 * math.sqrt(math.pi * u)) * math.exp(-c * c / (4 * u) - d * u) * float(forcing.value(T - u))

    kinks = [T - tk for tk in forcing.times if 0 < tk < T] if forcing.kind == "sampled" else []
    pts = [math.log(p) for p in (c * c / 6.0, *kinks) if lo < p < T]
    val, _ = integrate.quad(f, math.log(lo), math.log(T), points=pts or None,
                            epsabs=1e-15, epsrel=1e-11, limit=400)
    return val


def _classical(problem, pt: EvalPoint, params: StratumParams, forcing: Forcing, qspec: QuadSpec):
    if pt.t == 0:
        return 0.0
    h, z, t = pt.h_coord, pt.z, pt.t
    if h == 0 and z == 0:
        return params.amp_A * float(forcing.value(t))
    a, alpha, d = params.a, params.alpha, params.drift_sq
    if h == 0:
        return params.amp_A * float(_lift(0.0, z, params)) * _classical_inner(z / a, d, forcing, t)

    def outer(s):
        tau = math.exp(s)
        inner = _classical_inner((z + alpha * tau) / a, d, forcing, t - tau)
        return tau * float(_weight(problem, h, np.float64(tau), params) * _lift(tau, z, params)) * inner

    lo = h * h * _TAU_LO_FACTOR
    if lo >= t:
        return 0.0
    pts = [math.log(p) for p in (h * h / 6.0, h * h / 2.0) if lo < p < t]
    val, _ = integrate.quad(outer, math.log(lo), math.log(t), points=pts or None, epsabs=qspec.abs_tol,
                            epsrel=max(qspec.rel_tol, 1e-10), limit=400)
    return val


def solve_t1_classical(pt: EvalPoint, params: StratumParams, forcing: Forcing = Forcing(),
                       qspec: QuadSpec = SOLVER_QUAD) -> float:
    """T1 at 2 beta = 1 by nested adaptive quadrature of the Gaussian-kernel double integral."""
    return _classical("T1", pt, params, forcing, qspec)


def solve_t3_classical(pt: EvalPoint, params: StratumParams, forcing: Forcing = Forcing(),
                       qspec: QuadSpec = SOLVER_QUAD) -> float:
    """T3 at 2 beta = 1 by nested adaptive quadrature."""
    return _classical("T3", pt, params, forcing, qspec)


def solve_grid(grid: FieldGrid, problem: str, params: StratumParams, forcing: Forcing = Forcing(),
               qspec: QuadSpec = SOLVER_QUAD) -> list[GridCell]:
    """Evaluate over ``grid`` in h-major, then z, then t order.

    A failing (h, z) line is retried point by point; points that still fail
    are returned with ``flag="fail"`` and ``u=None``.
    """
    _check_problem(problem)
    params.check_tau_envelope()
    hs, zs, ts = grid.axes()
    cells = []
    for h in hs:
        for z in zs:
            try:
                line, _ = solve_line(problem, h, z, ts, params, forcing, qspec)
                cells.extend(GridCell(float(h), float(z), float(t), float(u), "ok") for t, u in zip(ts, line))
                continue
            except (EvaluationError, FloatingPointError, ValueError, ArithmeticError):
                pass
            for t in ts:
                try:
                    u, _ = solve_line(problem, h, z, [t], params, forcing, qspec)
                    cells.append(GridCell(float(h), float(z), float(t), float(u[0]), "ok"))
                except (EvaluationError, FloatingPointError, ValueError, ArithmeticError):
                    cells.append(GridCell(float(h), float(z), float(t), None, "fail"))
    return cells
