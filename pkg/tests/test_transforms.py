from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracstrata.errors import DomainError
from fracstrata.transforms import (Forcing, StratumParams, efros_parts_t1, k_factor, k_factor_shifted,
                                   mu_factor, pair_transform, q_factor, u_hat_t1, u_hat_t2, u_hat_t3)

params_st = st.builds(
    StratumParams,
    a=st.floats(0.2, 3.0), lam=st.floats(0.0, 3.0), alpha=st.floats(0.1, 3.0), gamma=st.floats(0.1, 3.0),
    amp_A=st.floats(0.1, 5.0), nu=st.floats(0.1, 2.0), beta=st.floats(0.05, 0.5),
)
p_st = st.builds(complex, st.floats(0.05, 20.0), st.floats(-20.0, 20.0))


def test_params_validation_names_field():
    with pytest.raises(DomainError, match="beta"):
        StratumParams(beta=0.7)
    with pytest.raises(DomainError, match="gamma"):
        StratumParams(gamma=0.0)
    with pytest.raises(DomainError, match="lam"):
        StratumParams(lam=-1.0)
    with pytest.raises(DomainError, match="a="):
        StratumParams(a=float("nan"))
    assert StratumParams(beta=0.5).classical
    assert StratumParams(alpha=3.0, a=2.0).b == 1.5


def test_tau_envelope():
    StratumParams().check_tau_envelope()
    with pytest.raises(DomainError):
        StratumParams(gamma=0.5).check_tau_envelope()


def test_k_factor_examples():
    assert k_factor(1.0, StratumParams(lam=0.0, a=1.0, beta=0.25)).real == pytest.approx(2.0, rel=1e-15)
    assert k_factor(1.0, StratumParams(lam=2.0, a=1.0, beta=0.25)).real == pytest.approx(0.8284271247461903, rel=1e-14)
    assert k_factor(4.0, StratumParams(lam=0.0, a=2.0, beta=0.5)).real == pytest.approx(2.0, rel=1e-15)


def test_k_factor_rejects_half_drift_reading():
    # K must solve a**2 K**2/4 + lam K/2 ... i.e. the depth ODE a^2 B'' - lam B' = P B with B = e^{-zK/2}
    prm = StratumParams(lam=1.3, a=0.7, beta=0.3)
    p = 1.7
    k = k_factor(p, prm).real
    P = p ** (2 * prm.beta)
    assert prm.a**2 * k * k / 4 + prm.lam * k / 2 == pytest.approx(P, rel=1e-13)
    alt = -prm.lam / (2 * prm.a**2) + 2 / prm.a * math.sqrt(P + prm.drift_sq)
    assert abs(prm.a**2 * alt * alt / 4 + prm.lam * alt / 2 - P) > 1e-2


def test_q_factor_examples():
    prm = StratumParams(gamma=1.0, lam=0.0, alpha=2.0, a=1.0, beta=0.25)
    assert q_factor(1.0, prm, "T1").real == pytest.approx(4.0, rel=1e-15)
    assert q_factor(1.0, prm, "T3").real == pytest.approx(3.0, rel=1e-15)
    with pytest.raises(DomainError):
        q_factor(1.0, prm, "T9")


@settings(max_examples=50, deadline=None)
@given(params_st, p_st)
def test_k_forms_agree(prm, p):
    a = k_factor(p, prm)
    b = k_factor_shifted(p, prm)
    assert abs(a - b) <= 1e-13 * max(abs(a), 1.0) * 10


@settings(max_examples=50, deadline=None)
@given(params_st, p_st)
def test_q_difference_is_gamma_squared(prm, p):
    assert abs(q_factor(p, prm, "T1") - q_factor(p, prm, "T3") - prm.gamma**2) < 1e-12 * abs(q_factor(p, prm))


@settings(max_examples=40, deadline=None)
@given(params_st, p_st, st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_t1_factorization(prm, p, x, z):
    G, F, q = efros_parts_t1(x, z, prm)
    direct = u_hat_t1(x, z, p, prm)
    assert abs(G(p) * F(q(p)) - direct) <= 1e-13 * abs(direct) + 1e-300


def test_t1_product_form_meets_boundary():
    prm = StratumParams()
    f = Forcing("exponential", rate=0.5)
    p = np.array([0.5, 1.0, 3.0 + 1j])
    assert np.allclose(u_hat_t1(0.0, 0.0, p, prm, f), prm.amp_A * f.laplace(p), rtol=1e-15)

    def minus_reading(x, z):
        sq = np.sqrt(q_factor(p, prm))
        return prm.amp_A * f.laplace(p) * np.exp(prm.gamma * x) * (np.exp(-0.5 * z * k_factor(p, prm)) - np.exp(-x * sq))

    # a difference of the two exponentials would vanish on the boundary instead of giving A h
    assert np.all(minus_reading(0.0, 0.0) == 0)


def test_far_field_decay():
    prm = StratumParams()
    assert abs(u_hat_t1(60.0, 0.0, 1.0, prm)) < 1e-15
    assert abs(u_hat_t2(60.0, 0.0, 1.0, prm)) < 1e-15
    assert abs(u_hat_t3(60.0, 0.0, 1.0, prm)) < 1e-15


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0 + 1.0j])
def test_t2_robin_condition(p):
    prm = StratumParams(gamma=0.8, beta=0.3)
    dx = 1e-5
    du = (u_hat_t2(dx, 0.0, p, prm) - u_hat_t2(-dx, 0.0, p, prm)) / (2 * dx)
    lhs = du - 2 * prm.gamma * u_hat_t2(0.0, 0.0, p, prm)
    assert abs(lhs + 2 * prm.gamma * prm.amp_A / p) < 1e-7 * abs(2 * prm.gamma / p)


def test_t3_origin_limit():
    prm = StratumParams(nu=0.7)
    p = 1.3
    near = u_hat_t3(1e-7, 0.4, p, prm)
    assert u_hat_t3(0.0, 0.4, p, prm) == pytest.approx(near, rel=1e-3)


def _second_difference(fn, x, h):
    return (fn(x + h) - 2 * fn(x) + fn(x - h)) / h**2, (fn(x + h) - fn(x - h)) / (2 * h)


@settings(max_examples=30, deadline=None)
@given(params_st, st.floats(0.3, 4.0), st.floats(0.3, 2.0), st.floats(0.0, 2.0))
def test_horizontal_ode(prm, p, x, z):
    # B(x) = e^{gamma x - x sqrt q}: B'' - 2 gamma B' - (P + alpha K / 2) B = 0
    P = p ** (2 * prm.beta)

    def B(xx):
        return (u_hat_t1(xx, z, p, prm) / (prm.amp_A / p * np.exp(-0.5 * z * k_factor(p, prm)))).real

    bxx, bx = _second_difference(B, x, 1e-3)
    coef = P + 0.5 * prm.alpha * k_factor(p, prm).real
    scale = abs(bxx) + abs(2 * prm.gamma * bx) + abs(coef * B(x))
    assert abs(bxx - 2 * prm.gamma * bx - coef * B(x)) <= 1e-6 * scale


@settings(max_examples=30, deadline=None)
@given(params_st, st.floats(0.3, 4.0), st.floats(0.3, 2.0))
def test_radial_ode(prm, p, r):
    # B(r) = (mu r / 2)^nu K_nu(mu r) 2/Gamma(nu): B'' + (1 - 2 nu)/r B' - mu^2 B = 0
    def B(rr):
        return (u_hat_t3(rr, 0.0, p, prm) * p / prm.amp_A).real

    brr, br = _second_difference(B, r, 1e-3)
    mu2 = mu_factor(p, prm).real ** 2
    scale = abs(brr) + abs((1 - 2 * prm.nu) / r * br) + abs(mu2 * B(r))
    assert abs(brr + (1 - 2 * prm.nu) / r * br - mu2 * B(r)) <= 1e-6 * scale


def test_pair_examples():
    prm = StratumParams(beta=0.25)
    assert pair_transform("2.6", 1.0, prm, tau=1.0).real == pytest.approx(math.exp(-1), rel=1e-15)
    assert pair_transform("3.12", 2.0, prm, x=0.0).real == 1.0
    assert pair_transform("4.12", 1.0, prm, x=0.0).real == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(DomainError):
        pair_transform("9.99", 1.0, prm)


def test_forcing_parse_and_transforms():
    assert Forcing.parse("one").is_unit
    assert Forcing.parse("exp:2").laplace(1.0) == pytest.approx(1 / 3)
    assert Forcing.parse("power:2").laplace(2.0) == pytest.approx(2 / 8)
    f = Forcing.parse("table:0=1;1=2;3=0")
    assert f.value([0.5, 2.0, 5.0]) == pytest.approx([1.5, 1.0, 0.0])
    assert f.derivative([0.5, 2.0, 5.0]) == pytest.approx([1.0, -1.0, 0.0])
    with pytest.raises(DomainError):
        Forcing.parse("wave:1")
    with pytest.raises(DomainError):
        Forcing("exponential", rate=-1.0)
    with pytest.raises(DomainError):
        Forcing("sampled", times=(0.5, 1.0), values=(1.0, 2.0))


@pytest.mark.parametrize("p", [0.7, 2.0, 1.0 + 3.0j])
def test_sampled_transform_is_exact(p):
    from scipy import integrate
    f = Forcing.parse("table:0=1;1=2;3=0;4=0.5")
    re = integrate.quad(lambda t: (np.exp(-p * t) * f.value(t)).real, 0, 80, points=[1, 3, 4], limit=400)[0]
    im = integrate.quad(lambda t: (np.exp(-p * t) * f.value(t)).imag, 0, 80, points=[1, 3, 4], limit=400)[0]
    got = f.laplace(p)
    assert np.shape(got) == ()
    assert abs(got - (re + 1j * im)) < 1e-9
