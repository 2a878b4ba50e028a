"""Model parameters, boundary forcing and the closed transform-domain solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import special

from .errors import DomainError

PROBLEMS = ("T1", "T2", "T3")


@dataclass(frozen=True)
class StratumParams:
    """Physical and model constants of the stratum problems.

    ``a`` vertical diffusivity coefficient, ``lam`` vertical drift,
    ``alpha`` boundary coupling, ``gamma`` horizontal drift, ``amp_A`` the
    boundary amplitude A, ``nu`` the radial order and ``beta`` the
    fractional half-order (the time derivative has order 2*beta).
    """

    a: float = 1.0
    lam: float = 1.0
    alpha: float = 1.0
    gamma: float = 1.0
    amp_A: float = 1.0
    nu: float = 0.5
    beta: float = 0.25

    def __post_init__(self):
        checks = {
            "a": self.a > 0,
            "lam": self.lam >= 0,
            "alpha": self.alpha > 0,
            "gamma": self.gamma > 0,
            "amp_A": self.amp_A > 0,
            "nu": self.nu > 0,
            "beta": 0 < self.beta <= 0.5,
        }
        for name, ok in checks.items():
            value = getattr(self, name)
            if not (ok and math.isfinite(value)):
                raise DomainError(f"invalid {name}={value!r}: {_RANGES[name]}")

    @property
    def b(self) -> float:
        return self.alpha / self.a

    @property
    def drift_sq(self) -> float:
        """lambda**2 / (4 a**2), the shift inside the square root of K."""
        return self.lam**2 / (4.0 * self.a**2)

    @property
    def classical(self) -> bool:
        return self.beta == 0.5

    def replace(self, **changes) -> "StratumParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return StratumParams(**values)

    def check_tau_envelope(self):
        """Require gamma**2 > lam*alpha/(2 a**2) so the outer tau-integrand decays."""
        if not self.gamma**2 > self.lam * self.alpha / (2.0 * self.a**2):
            raise DomainError(
                "gamma**2 must exceed lam*alpha/(2 a**2) for the tau-integral to converge "
                f"(gamma={self.gamma}, lam={self.lam}, alpha={self.alpha}, a={self.a})"
            )


_RANGES = {
    "a": "must be > 0",
    "lam": "must be >= 0",
    "alpha": "must be > 0",
    "gamma": "must be > 0",
    "amp_A": "must be > 0",
    "nu": "must be > 0",
    "beta": "must lie in (0, 1/2]",
}


@dataclass(frozen=True)
class Forcing:
    """Boundary forcing h(t) with its Laplace transform.

    kinds: ``constant_one`` (h = 1), ``exponential`` (h = exp(-rate t)),
    ``power`` (h = t**power) and ``sampled`` (piecewise linear through
    ``times``/``values``, held constant past the last sample).
    """

    kind: str = "constant_one"
    rate: float = 0.0
    power: int = 0
    times: tuple = field(default=(), repr=False)
    values: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind == "exponential" and not self.rate > 0:
            raise DomainError("exponential forcing needs rate > 0")
        if self.kind == "power" and (self.power < 0 or int(self.power) != self.power):
            raise DomainError("power forcing needs a non-negative integer exponent")
        if self.kind == "sampled":
            if len(self.times) < 2 or len(self.times) != len(self.values):
                raise DomainError("sampled forcing needs matching times/values (>= 2 samples)")
            if self.times[0] != 0 or np.any(np.diff(self.times) <= 0):
                raise DomainError("sampled forcing times must start at 0 and increase")
        if self.kind not in ("constant_one", "exponential", "power", "sampled"):
            raise DomainError(f"unknown forcing kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "Forcing":
        """Build from ``one``, ``exp:RATE``, ``power:N`` or ``table:T0=V0;T1=V1;...``."""
        kind, _, arg = text.partition(":")
        if kind in ("one", "constant_one", "1"):
            return cls()
        if kind in ("exp", "exponential"):
            return cls("exponential", rate=float(arg))
        if kind == "power":
            return cls("power", power=int(arg))
        if kind in ("table", "sampled"):
            pairs = [item.split("=") for item in arg.split(";") if item]
            return cls("sampled", times=tuple(float(a) for a, _ in pairs),
                       values=tuple(float(b) for _, b in pairs))
        raise DomainError(f"cannot parse forcing {text!r}")

    @property
    def is_unit(self) -> bool:
        return self.kind == "constant_one" or (self.kind == "power" and self.power == 0)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_unit:
            return np.ones_like(t)
        if self.kind == "exponential":
            return np.exp(-self.rate * t)
        if self.kind == "power":
            return t**self.power
        return np.interp(t, self.times, self.values)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_unit:
            return np.zeros_like(t)
        if self.kind == "exponential":
            return -self.rate * np.exp(-self.rate * t)
        if self.kind == "power":
            return self.power * t ** (self.power - 1)
        slopes = np.diff(self.values) / np.diff(self.times)
        idx = np.searchsorted(self.times, t, side="right") - 1
        return np.where(idx < len(slopes), slopes[np.clip(idx, 0, len(slopes) - 1)], 0.0)

    @property
    def at_zero(self) -> float:
        return float(self.value(0.0))

    def laplace(self, p):
        p = np.asarray(p, dtype=complex)
        if self.is_unit:
            return 1.0 / p
        if self.kind == "exponential":
            return 1.0 / (p + self.rate)
        if self.kind == "power":
            return math.factorial(self.power) / p ** (self.power + 1)
        # piecewise linear: h(0)/p + sum of slope changes * exp(-p t_k)/p**2
        t = np.asarray(self.times)
        slopes = np.diff(self.values) / np.diff(t)
        kinks = np.diff(np.concatenate([[0.0], slopes, [0.0]]))
        pv = p.reshape(-1)
        tail = np.exp(-np.multiply.outer(pv, t)) @ kinks
        return (self.values[0] / pv + tail / pv**2).reshape(p.shape)


def _pow(p, e):
    return np.exp(e * np.log(np.asarray(p, dtype=complex)))


def k_factor(p, params: StratumParams):
    """Depth decay rate K = -lam/a**2 + sqrt(lam**2/a**4 + 4 p**(2 beta)/a**2)."""
    a, lam = params.a, params.lam
    return -lam / a**2 + np.sqrt(lam**2 / a**4 + 4.0 * _pow(p, 2 * params.beta) / a**2)


def k_factor_shifted(p, params: StratumParams):
    """Same K written as -lam/a**2 + (2/a) sqrt(p**(2 beta) + lam**2/(4 a**2))."""
    return -params.lam / params.a**2 + 2.0 / params.a * np.sqrt(_pow(p, 2 * params.beta) + params.drift_sq)


def q_factor(p, params: StratumParams, theorem: str = "T1"):
    """Efros substitution argument q(p).

    T1/T2: gamma**2 + p**(2 beta) + (alpha/2) K;  T3: p**(2 beta) + (alpha/2) K.
    """
    base = _pow(p, 2 * params.beta) + 0.5 * params.alpha * k_factor(p, params)
    if theorem in ("T1", "T2"):
        return params.gamma**2 + base
    if theorem == "T3":
        return base
    raise DomainError(f"unknown theorem {theorem!r}")


def mu_factor(p, params: StratumParams):
    """Radial decay rate mu = sqrt(p**(2 beta) + (alpha/2) K)."""
    return np.sqrt(q_factor(p, params, "T3"))


def u_hat_t1(x, z, p, params: StratumParams, forcing: Forcing = Forcing()):
    """Transform-domain solution of the incomplete lumped linear problem.

    u = A h(p) exp(gamma x - x sqrt(q) - z K / 2).
    """
    k = k_factor(p, params)
    sq = np.sqrt(q_factor(p, params, "T1"))
    return params.amp_A * forcing.laplace(p) * np.exp(params.gamma * x - x * sq - 0.5 * z * k)


def efros_parts_t1(x, z, params: StratumParams, forcing: Forcing = Forcing()):
    """(G, F, q) with u_hat_t1 = G(p) F(q(p)) under the generalized convolution.

    G(p) = A h(p) e^{gamma x} e^{-zK/2}, F(q) = e^{-x sqrt(q)}.
    """
    def G(p):
        return params.amp_A * forcing.laplace(p) * np.exp(params.gamma * x - 0.5 * z * k_factor(p, params))

    def F(q):
        return np.exp(-x * np.sqrt(np.asarray(q, dtype=complex)))

    def q(p):
        return q_factor(p, params, "T1")

    return G, F, q


def u_hat_t2(x, z, p, params: StratumParams):
    """Transform-domain solution of the lumped linear (Robin) problem."""
    k = k_factor(p, params)
    sq = np.sqrt(q_factor(p, params, "T2"))
    g = params.gamma
    p = np.asarray(p, dtype=complex)
    return 2.0 * g * params.amp_A / (p * (g + sq)) * np.exp(x * (g - sq) - 0.5 * z * k)


def u_hat_t3(r, z, p, params: StratumParams, forcing: Forcing = Forcing()):
    """Transform-domain radial solution (2/Gamma(nu)) A h (mu r/2)**nu K_nu(mu r) e^{-zK/2}.

    At r = 0 the removable singularity is replaced by its limit A h e^{-zK/2}.
    """
    k = k_factor(p, params)
    lead = params.amp_A * forcing.laplace(p) * np.exp(-0.5 * z * k)
    if r == 0:
        return lead
    w = mu_factor(p, params) * r
    nu = params.nu
    radial = np.exp(nu * np.log(w / 2.0) - w) * special.kve(nu, w) * (2.0 / special.gamma(nu))
    return lead * radial


# --- registry of the auxiliary transform pairs (s-domain sides) -------------

PAIR_IDS = ("2.5", "2.6", "2.14", "2.15", "2.16", "3.12", "4.12", "5.14")


def pair_transform(pair_id: str, p, params: StratumParams, tau: float = 0.0, z: float = 0.0,
                   x: float = 1.0, r: float = 1.0):
    """s-domain side of a registered transform pair.

    ``tau``/``z`` feed the depth argument (z + alpha tau)/a of the kernel
    pairs, ``x`` and ``r`` the horizontal pairs.
    """
    p = np.asarray(p, dtype=complex)
    beta = params.beta
    c = (z + params.alpha * tau) / params.a
    if pair_id == "2.5":
        return np.exp(-c * _pow(p, beta))
    if pair_id == "2.6":
        return np.exp(-tau * _pow(p, 2 * beta)) / p
    if pair_id == "2.14":
        return np.exp(-tau * _pow(p, 2 * beta))
    if pair_id == "2.15":
        return np.exp(-c * np.sqrt(_pow(p, 2 * beta) + params.drift_sq))
    if pair_id == "2.16":
        return np.exp(-c * np.sqrt(p + params.drift_sq))
    if pair_id == "3.12":
        return np.exp(-x * np.sqrt(p))
    if pair_id == "4.12":
        sq = np.sqrt(p)
        return np.exp(-x * sq) / (params.gamma + sq)
    if pair_id == "5.14":
        w = r * np.sqrt(p)
        nu = params.nu
        return np.exp(nu * np.log(w / 2.0) - w) * special.kve(nu, w)
    raise DomainError(f"unknown pair id {pair_id!r}")
