"""Numerical verification: transform pairs, Efros identities, oracles and PDE residuals."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EvaluationError
from .kernels import first_passage_density, g2_matrix, lemma_a_kernel, lemma_b_kernel, pair_time_side
from .laplace import DEFAULT_QUAD, QuadSpec, caputo_derivative, forward_laplace, invert, log_quad
from .solvers import EvalPoint, solve_line, solve_t1_classical, solve_t3_classical
from .specfun import n_wright_cutoff
from .transforms import (PAIR_IDS, Forcing, StratumParams, efros_parts_t1, pair_transform,
                         u_hat_t1, u_hat_t2, u_hat_t3, _pow)

P_SAMPLES = (0.5, 1.0, 2.0, 4.0)
T_SAMPLES = (0.5, 1.0, 2.0)
PAIR_BETAS = (0.2, 0.25, 0.4)
# pairs whose t-side carries a numerical inner quadrature
NUMERICAL_PAIRS = ("2.15",)
# pair arguments: tau, z, x, r
PAIR_ARGS = dict(tau=0.3, z=0.5, x=1.0, r=1.0)
ORACLE_POINTS = ((1.0, 0.5, 1.0), (0.5, 0.2, 2.0), (2.0, 1.0, 3.0), (0.3, 0.3, 0.5), (1.5, 0.1, 1.5))
FORMAT = "{:.6g}"


@dataclass
class PairReport:
    """Outcome of one comparison; ``passed`` iff every relative error is within ``tolerance``."""

    pair_id: str
    direction: str
    samples: list
    max_abs_err: float
    max_rel_err: float
    tolerance: float
    passed: bool
    beta: float | None = None
    note: str = ""

    @classmethod
    def from_values(cls, pair_id, direction, samples, got, want, tolerance, beta=None, note="",
                    floor: float = 0.0):
        got = np.asarray(got, dtype=complex)
        want = np.asarray(want, dtype=complex)
        abs_err = np.abs(got - want)
        denom = np.maximum(np.abs(want), floor)
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(abs_err == 0, 0.0, abs_err / denom)
        rel_max = float(np.max(rel)) if rel.size else 0.0
        ok = bool(np.all(np.isfinite(rel)) and rel_max <= tolerance)
        return cls(pair_id, direction, [float(s) for s in samples], float(np.max(abs_err)), rel_max,
                   float(tolerance), ok, beta, note)

    @classmethod
    def failure(cls, pair_id, direction, samples, tolerance, beta, note):
        return cls(pair_id, direction, [float(s) for s in samples], math.inf, math.inf, float(tolerance),
                   False, beta, note)

    def to_json(self) -> str:
        d = asdict(self)
        for k in ("max_abs_err", "max_rel_err"):
            if not math.isfinite(d[k]):
                d[k] = None
        return json.dumps(d, sort_keys=True)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        beta = "" if self.beta is None else f" beta={self.beta:g}"
        return (f"{status} {self.pair_id} [{self.direction}]{beta} max_rel_err="
                f"{FORMAT.format(self.max_rel_err)} tol={self.tolerance:g}" + (f" ({self.note})" if self.note else ""))


# --- Efros identity -----------------------------------------------------------

def efros_check(F, G, q, f, g, t_samples=T_SAMPLES, p_samples=P_SAMPLES, qspec: QuadSpec = DEFAULT_QUAD,
                tau_range=(1e-12, 50.0), tau_points=(), tolerance: float = 1e-3, label: str = "efros",
                time_side=None, t_points=()):
    """Check F(q(p)) G(p) = L[int_0^inf f(tau) g(t, tau) dtau].

    ``g(t, tau)`` receives a time vector and a tau vector and returns the
    (n_t, n_tau) matrix.  ``time_side`` overrides the tau-quadrature with a
    closed form (used for the delta/step degenerate case).  Both directions
    are reported: the forward transform at ``p_samples`` and the Talbot
    inverse of the s-side at ``t_samples``.
    """
    lo, hi = tau_range

    def lhs(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if time_side is not None:
            return np.asarray(time_side(t), dtype=float)
        val, _ = log_quad(lambda tau: f(tau) * g(t, tau), lo, hi, qspec, points=tau_points, width=0.5)
        return val

    def rhs(p):
        return F(q(p)) * G(p)

    reports = []
    p = np.asarray(p_samples, dtype=float)
    try:
        fwd, _ = forward_laplace(lhs, p, qspec, points=t_points)
        reports.append(PairReport.from_values(label, "forward", p, fwd, rhs(p + 0j), tolerance))
    except EvaluationError as exc:
        reports.append(PairReport.failure(label, "forward", p, tolerance, None, str(exc)))
    t = np.asarray(t_samples, dtype=float)
    inv = [invert(rhs, float(ti)) for ti in t]
    reports.append(PairReport.from_values(label, "inverse", t, inv, lhs(t), tolerance))
    return reports


def efros_degenerate(tolerance: float = 1e-3):
    """q(p) = p, G = 1/p, g = H(t - tau), f = 1: the ordinary convolution theorem, L[int_0^t f] = F/p."""
    return efros_check(F=lambda s: 1.0 / s, G=lambda p: 1.0 / p, q=lambda p: p,
                       f=lambda tau: np.ones_like(tau), g=None,
                       time_side=lambda t: t, tolerance=tolerance, label="efros:convolution")


def efros_lemma_b(params: StratumParams, tau: float = 0.3, z: float = 0.5, tolerance: float = 1e-3):
    """F = e^{-c sqrt(p)}, q = p**(2 beta) + d, G = 1: the depth kernel as a subordinated integral."""
    c = (z + params.alpha * tau) / params.a
    d = params.drift_sq
    beta = params.beta
    label = "efros:lemma_b"

    def g(t, s):
        return np.exp(-d * s)[None, :] * np.asarray(lemma_a_kernel(t[:, None], s[None, :], beta))

    reports = efros_check(F=lambda s: np.exp(-c * np.sqrt(s)), G=lambda p: np.ones_like(p),
                          q=lambda p: _pow(p, 2 * beta) + d, f=lambda s: first_passage_density(s, c),
                          g=g, tau_range=(c * c / 400, 200.0), tau_points=(c * c / 6,), tolerance=tolerance,
                          label=label)
    # the same integral against the direct depth kernel
    t = np.asarray(T_SAMPLES)
    sub, _ = log_quad(lambda s: first_passage_density(s, c) * g(t, s), c * c / 400, 200.0,
                      QuadSpec(1e-10, 1e-14), points=(c * c / 6,), width=0.5)
    direct = lemma_b_kernel(t, tau, z, params)
    reports.append(PairReport.from_values(label, "kernel", t, sub, direct, tolerance, beta))
    return reports


def efros_theorem1(params: StratumParams, x: float = 1.0, z: float = 0.5,
                   forcing: Forcing = Forcing(), tolerance: float = 1e-3):
    """Full T1 instance: the Efros parts of the transform solution against the assembled time side."""
    G, F, q = efros_parts_t1(x, z, params, forcing)
    A, gam, lam, a, alpha = params.amp_A, params.gamma, params.lam, params.a, params.alpha
    t_max = math.log(1.0 / DEFAULT_QUAD.tail_cutoff) / min(P_SAMPLES)
    hi = t_max ** (2 * params.beta) * n_wright_cutoff(params.beta) if params.beta < 0.5 else t_max

    def f(tau):
        return x / (2 * math.sqrt(math.pi)) * tau**-1.5 * np.exp(-x * x / (4 * tau))

    def g(t, tau):
        lift = A * np.exp(gam * x - gam * gam * tau + lam * (z + alpha * tau) / (2 * a * a))
        return lift[None, :] * g2_matrix(t, tau, z, params)

    if not forcing.is_unit:
        raise ValueError("efros_theorem1 is assembled for the unit forcing")
    return efros_check(F, G, q, f, g, p_samples=P_SAMPLES[:3], tau_range=(x * x / 160, hi),
                       tau_points=(x * x / 2,), tolerance=tolerance, label="efros:theorem1")


# --- transform pairs ------------------------------------------------------------

def _pair_betas(pair_id, betas):
    if pair_id in ("2.5", "2.6", "2.15"):
        return [*betas, 0.5]
    if pair_id == "2.14":
        return list(betas)
    return [None]


def _pair_tolerance(pair_id, tolerances):
    if tolerances is not None:
        if isinstance(tolerances, (int, float)):
            return float(tolerances)
        if pair_id in tolerances:
            return float(tolerances[pair_id])
    return 1e-3 if pair_id in NUMERICAL_PAIRS else 1e-4


def _check_pair(pair_id, params: StratumParams, tol, qspec):
    args = PAIR_ARGS
    beta = params.beta if pair_id in ("2.5", "2.6", "2.14", "2.15") else None
    delayed = pair_id == "2.6" and params.beta == 0.5
    reports = []
    p = np.asarray(P_SAMPLES)
    try:
        fwd, _ = forward_laplace(lambda t: pair_time_side(pair_id, t, params, **args), p, qspec,
                                 points=(args["tau"],) if delayed else ())
        reports.append(PairReport.from_values(pair_id, "forward", p, fwd,
                                              pair_transform(pair_id, p, params, **args), tol, beta))
    except EvaluationError as exc:
        reports.append(PairReport.failure(pair_id, "forward", p, tol, beta, str(exc)))
    t = np.asarray(T_SAMPLES)
    want = np.asarray(pair_time_side(pair_id, t, params, **args))
    if delayed:
        # e^{-tau p}/p is a pure delay: shift theorem instead of sampling the contour
        got = [invert(lambda s: 1.0 / s, ti - args["tau"]) if ti > args["tau"] else 0.0 for ti in t]
        note = "delay applied by shift"
    else:
        got = [invert(lambda s: pair_transform(pair_id, s, params, **args), float(ti)) for ti in t]
        note = ""
    reports.append(PairReport.from_values(pair_id, "inverse", t, got, want, tol, beta, note))
    return reports


def run_pair_suite(pair_ids=None, params: StratumParams = StratumParams(), tolerances=None,
                   betas=PAIR_BETAS, qspec: QuadSpec = DEFAULT_QUAD) -> list[PairReport]:
    """Both directions of each registered pair; fractional pairs run at every beta in ``betas``
    and, where a closed form exists, at 2 beta = 1."""
    pair_ids = list(PAIR_IDS if pair_ids is None else pair_ids)
    reports = []
    for pid in pair_ids:
        if pid not in PAIR_IDS:
            raise ValueError(f"unknown pair id {pid!r}; known: {', '.join(PAIR_IDS)}")
        tol = _pair_tolerance(pid, tolerances)
        for beta in _pair_betas(pid, betas):
            prm = params if beta is None else params.replace(beta=beta)
            reports.extend(_check_pair(pid, prm, tol, qspec))
    return reports


# --- oracle equivalence -----------------------------------------------------

_U_HAT = {
    "T1": lambda h, z, p, prm, frc: u_hat_t1(h, z, p, prm, frc),
    "T2": lambda h, z, p, prm, frc: u_hat_t2(h, z, p, prm),
    "T3": lambda h, z, p, prm, frc: u_hat_t3(h, z, p, prm, frc),
}


def oracle_check(problem: str, params: StratumParams, forcing: Forcing = Forcing(),
                 points=ORACLE_POINTS, tolerance: float = 1e-3) -> PairReport:
    """Solver against Talbot inversion of the transform-domain solution."""
    got, want = [], []
    for h, z, t in points:
        u, _ = solve_line(problem, h, z, [t], params, forcing)
        got.append(u[0])
        want.append(invert(lambda p: _U_HAT[problem](h, z, p, params, forcing), t))
    return PairReport.from_values(f"oracle:{problem}", "talbot", [pt[2] for pt in points], got, want,
                                  tolerance, params.beta, floor=1e-8)


def classical_check(problem: str, params: StratumParams, forcing: Forcing = Forcing(),
                    points=ORACLE_POINTS, tolerance: float = 1e-3) -> PairReport:
    """Solver at 2 beta = 1 against the nested classical quadrature."""
    prm = params.replace(beta=0.5)
    fn = solve_t1_classical if problem == "T1" else solve_t3_classical
    got, want = [], []
    for h, z, t in points:
        u, _ = solve_line(problem, h, z, [t], prm, forcing)
        got.append(u[0])
        want.append(fn(EvalPoint(h, z, t), prm, forcing))
    return PairReport.from_values(f"classical:{problem}", "nested-quad", [pt[2] for pt in points], got, want,
                                  tolerance, 0.5, floor=1e-8)


# --- residuals ----------------------------------------------------------------

@dataclass(frozen=True)
class ResidualSpec:
    """Finite-difference step (relative to max(1, coordinate)) and Caputo grid size on [0, t]."""

    fd_rel: float = 1e-2
    caputo_points: int = 64

    def refined(self, level: int) -> "ResidualSpec":
        return ResidualSpec(self.fd_rel / 2**level, self.caputo_points * 2**level)


def _field(problem, params, forcing):
    def u(h, z, times):
        return solve_line(problem, h, z, times, params, forcing)[0]
    return u


def _caputo_at(u_line, order, step):
    return caputo_derivative(u_line, order, len(u_line) - 1, step)


def _normalized(lhs, rhs):
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-8)


def pde_residual(problem: str, pt: EvalPoint, params: StratumParams, forcing: Forcing = Forcing(),
                 spec: ResidualSpec = ResidualSpec(), field=None) -> float:
    """Normalized residual of D^{2 beta} u = a**2 u_zz - lam u_z at an interior point."""
    u = field or _field(problem, params, forcing)
    n = spec.caputo_points
    step = pt.t / n
    times = step * np.arange(n + 1)
    line = np.asarray(u(pt.h_coord, pt.z, times), dtype=float)
    lhs = _caputo_at(line, 2 * params.beta, step)
    dz = spec.fd_rel * max(1.0, pt.z)
    up, um = (float(np.asarray(u(pt.h_coord, zz, [pt.t]))[0]) for zz in (pt.z + dz, pt.z - dz))
    mid = line[-1]
    u_z = (up - um) / (2 * dz)
    u_zz = (up - 2 * mid + um) / dz**2
    rhs = params.a**2 * u_zz - params.lam * u_z
    return _normalized(lhs, rhs)


def boundary_residual(problem: str, pt: EvalPoint, params: StratumParams, forcing: Forcing = Forcing(),
                      spec: ResidualSpec = ResidualSpec(), field=None) -> float:
    """Normalized residual of the z = 0 boundary equation.

    Linear problems: D^{2 beta} u = u_xx - 2 gamma u_x + alpha u_z.
    Radial problem: D^{2 beta} u = u_rr + (1 - 2 nu)/r u_r + alpha u_z.
    """
    u = field or _field(problem, params, forcing)
    n = spec.caputo_points
    step = pt.t / n
    times = step * np.arange(n + 1)
    h = pt.h_coord
    line = np.asarray(u(h, 0.0, times), dtype=float)
    lhs = _caputo_at(line, 2 * params.beta, step)
    dz = spec.fd_rel
    dh = spec.fd_rel * max(1.0, h)
    u0 = line[-1]
    u1, u2 = (float(np.asarray(u(h, zz, [pt.t]))[0]) for zz in (dz, 2 * dz))
    hp, hm = (float(np.asarray(u(hh, 0.0, [pt.t]))[0]) for hh in (h + dh, h - dh))
    u_z = (-3 * u0 + 4 * u1 - u2) / (2 * dz)
    u_h = (hp - hm) / (2 * dh)
    u_hh = (hp - 2 * u0 + hm) / dh**2
    if problem == "T3":
        rhs = u_hh + (1 - 2 * params.nu) / h * u_h + params.alpha * u_z
    else:
        rhs = u_hh - 2 * params.gamma * u_h + params.alpha * u_z
    return _normalized(lhs, rhs)


def residual_study(kind: str, problem: str, pt: EvalPoint, params: StratumParams,
                   forcing: Forcing = Forcing(), levels: int = 3, base: ResidualSpec = ResidualSpec()):
    """Residuals over ``levels`` successive halvings of the steps."""
    fn = pde_residual if kind == "pde" else boundary_residual
    return [fn(problem, pt, params, forcing, base.refined(k)) for k in range(levels)]


RESIDUAL_POINT = EvalPoint(1.0, 0.5, 1.0)


def residual_report(kind: str, problem: str, params: StratumParams, forcing: Forcing = Forcing(),
                    pt: EvalPoint = RESIDUAL_POINT, levels: int = 3, tolerance: float = 5e-2) -> PairReport:
    """Residual study as a report: the last level must be within ``tolerance`` and the
    sequence must not grow under refinement."""
    kind = "pde" if kind == "pde" else "bnd"
    res = [abs(float(v)) for v in residual_study(kind, problem, pt, params, forcing, levels)]
    shrinking = all(b <= a * 1.05 for a, b in zip(res, res[1:]))
    return PairReport(f"residual:{kind}:{problem}", "refinement", res, res[-1], res[-1], float(tolerance),
                      bool(res[-1] <= tolerance and shrinking), params.beta,
                      "levels " + ", ".join(FORMAT.format(v) for v in res))


def robin_residual(params: StratumParams, t: float = 1.0, dx: float = 1e-3) -> float:
    """(u_x - 2 gamma u) at x = z = 0 for T2, by a second-order one-sided difference."""
    u = [solve_line("T2", k * dx, 0.0, [t], params)[0][0] for k in range(3)]
    u_x = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dx)
    return u_x - 2 * params.gamma * u[0]


# --- conditions -------------------------------------------------------------------

def far_field_coordinate(params: StratumParams) -> float:
    return 20.0 * max(1.0, 2.0 / params.gamma)


def condition_suite(params: StratumParams = StratumParams(), forcing: Forcing = Forcing(),
                    times=(0.5, 1.0, 2.0)) -> list[PairReport]:
    """Boundary datum, initial condition and far-field decay."""
    times = np.asarray(times, dtype=float)
    reports = []
    for problem in ("T1", "T3"):
        u, _ = solve_line(problem, 0.0, 0.0, times, params, forcing)
        want = params.amp_A * forcing.value(times)
        reports.append(PairReport("boundary:" + problem, "u(0,0,t)", list(times), float(np.max(np.abs(u - want))),
                                  float(np.max(np.abs(u - want))), 0.0, bool(np.all(u == want)), params.beta))
    for problem in ("T1", "T2", "T3"):
        zeros = [solve_line(problem, h, z, [0.0], params, forcing)[0][0] for h, z in ((0.0, 0.0), (1.0, 0.5))]
        worst = float(np.max(np.abs(zeros)))
        reports.append(PairReport("initial:" + problem, "u(.,.,0)", [0.0], worst, worst, 0.0, worst == 0.0,
                                  params.beta))
    h_far = far_field_coordinate(params)
    for problem in ("T1", "T2", "T3"):
        u, _ = solve_line(problem, h_far, 0.0, times, params, forcing)
        ratio = float(np.max(np.abs(u))) / params.amp_A
        reports.append(PairReport("farfield:" + problem, f"h={h_far:g}", list(times), ratio, ratio, 1e-4,
                                  ratio < 1e-4, params.beta))
    return reports


@dataclass
class SuiteResult:
    reports: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.reports)
