from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, special

from fracstrata.errors import DistributionalCaseError, DomainError
from fracstrata.kernels import (ConvGrid, convolve, first_passage_density, forced_response, g1_kernel,
                                g1_kernel_grid, g1_matrix, g2_kernel, g2_matrix, g_doubleprime, g_prime,
                                lemma_a_kernel, lemma_b_kernel, pair_time_side, step_halving_error)
from fracstrata.laplace import forward_laplace, invert
from fracstrata.transforms import Forcing, StratumParams, pair_transform

P_SAMPLES = np.array([0.5, 1.0, 2.0, 4.0])
GAUSS_1 = math.exp(-0.25) / (2 * math.sqrt(math.pi))  # 0.2196956...


def test_g_prime_examples():
    prm = StratumParams(beta=0.5)
    assert g_prime(1.0, 0.0, 0.0, prm) == 0.0
    assert g_prime(1.0, 0.0, 1.0, prm) == pytest.approx(GAUSS_1, rel=1e-14)
    with pytest.raises(DomainError):
        g_prime(0.0, 0.1, 1.0, prm)


@pytest.mark.parametrize("beta", [0.2, 0.25, 0.4, 0.5])
def test_g_prime_transform(beta):
    prm = StratumParams(beta=beta)
    tau, z = 0.5, 1.0
    got, _ = forward_laplace(lambda t: g_prime(t, tau, z, prm), P_SAMPLES)
    want = np.exp(-(z + tau) * P_SAMPLES**beta)
    assert np.max(np.abs(got.real - want) / want) < 1e-4


def test_g_doubleprime_examples():
    assert g_doubleprime(1.7, 0.0, 0.3) == 1.0
    assert g_doubleprime(1.0, 0.5, 0.5) == 1.0
    assert g_doubleprime(1.0, 2.0, 0.5) == 0.0


@pytest.mark.parametrize("beta", [0.2, 0.25, 0.4])
def test_g_doubleprime_transform(beta):
    tau = 0.5
    got, _ = forward_laplace(lambda t: g_doubleprime(t, tau, beta), P_SAMPLES)
    want = np.exp(-tau * P_SAMPLES ** (2 * beta)) / P_SAMPLES
    assert np.max(np.abs(got.real - want) / want) < 1e-4


def test_lemma_a_guards():
    with pytest.raises(DistributionalCaseError):
        lemma_a_kernel(1.0, 0.5, 0.5)
    with pytest.raises(DomainError):
        lemma_a_kernel(1.0, 0.0, 0.25)


@pytest.mark.parametrize("beta", [0.2, 0.25, 0.4])
@pytest.mark.parametrize("tau", [0.5, 1.0])
def test_lemma_a_transform_and_inverse(beta, tau):
    p = np.array([0.5, 1.0, 2.0])
    got, _ = forward_laplace(lambda t: lemma_a_kernel(t, tau, beta), p, t_max=1e6)
    want = np.exp(-tau * p ** (2 * beta))
    assert np.max(np.abs(got.real - want) / want) < 1e-4
    for t in (0.5, 1.0, 2.0):
        inv = invert(lambda s: np.exp(-tau * s ** (2 * beta)), t)
        assert inv == pytest.approx(lemma_a_kernel(t, tau, beta), rel=1e-3)


@pytest.mark.parametrize("beta", [0.25, 0.4])
def test_lemma_a_is_reparameterized_g_prime(beta):
    # replace beta by 2 beta, take z = 0 and a = alpha = 1
    prm = StratumParams(a=1.0, alpha=1.0, beta=0.3)
    t = np.linspace(0.2, 3.0, 9)
    for tau in (0.2, 0.7, 1.5):
        a = lemma_a_kernel(t, tau, beta)
        g = g_prime(t, tau, 0.0, prm, beta=2 * beta)
        assert np.max(np.abs(a - g)) < 1e-10


def test_lemma_b_closed_branch():
    prm = StratumParams(beta=0.5, lam=0.0, a=1.0, alpha=1.0)
    assert lemma_b_kernel(1.0, 0.0, 1.0, prm) == pytest.approx(GAUSS_1, rel=1e-14)
    # with no drift this is the horizontal pair with x relabelled as (z + alpha tau)
    t = np.array([0.3, 1.0, 2.5])
    assert np.allclose(lemma_b_kernel(t, 0.2, 0.6, prm), first_passage_density(t, 0.8), rtol=1e-14)


@pytest.mark.parametrize("beta", [0.25, 0.4])
def test_lemma_b_transform(beta):
    prm = StratumParams(beta=beta, lam=0.8)
    tau, z = 0.3, 0.5
    got, _ = forward_laplace(lambda t: lemma_b_kernel(t, tau, z, prm), P_SAMPLES, t_max=1e6)
    want = pair_transform("2.15", P_SAMPLES, prm, tau=tau, z=z).real
    assert np.max(np.abs(got.real - want) / want) < 1e-3


def test_g1_classical_no_drift_is_erfc():
    prm = StratumParams(beta=0.5, lam=0.0)
    tau, z = 0.3, 0.4
    t = np.array([0.2, 0.5, 1.0, 2.0])
    c = z + prm.alpha * tau
    want = np.where(t > tau, special.erfc(c / (2 * np.sqrt(np.maximum(t - tau, 1e-300)))), 0.0)
    assert np.allclose(g1_kernel(t, tau, z, prm), want, atol=1e-12)
    assert g1_kernel(0.25, tau, z, prm) == 0.0


def test_g2_classical_closed_form_against_quadrature():
    prm = StratumParams(beta=0.5, lam=0.9)
    tau, z, t = 0.3, 0.4, 1.6
    c, d = z + prm.alpha * tau, prm.drift_sq
    direct, _ = integrate.quad(lambda u: first_passage_density(u, c, d), 0, t - tau, epsabs=1e-14)
    assert g2_kernel(t, tau, z, prm) == pytest.approx(direct, rel=1e-10)
    assert g2_kernel(0.2, tau, z, prm) == 0.0


@pytest.mark.parametrize("beta", [0.2, 0.25, 0.4, 0.5])
def test_g2_transform(beta):
    prm = StratumParams(beta=beta)
    tau, z = 0.3, 0.5
    fn = lambda t: g2_matrix(t, [tau], z, prm)[:, 0]  # noqa: E731
    got, _ = forward_laplace(fn, P_SAMPLES, t_max=1e6, points=[tau] if beta == 0.5 else ())
    want = (pair_transform("2.6", P_SAMPLES, prm, tau=tau) * pair_transform("2.15", P_SAMPLES, prm, tau=tau, z=z)).real
    assert np.max(np.abs(got.real - want) / want) < 1e-3


@pytest.mark.parametrize("forcing", ["exp:0.7", "power:1"])
def test_g1_transform_forced(forcing):
    prm = StratumParams(beta=0.25)
    f = Forcing.parse(forcing)
    tau, z = 0.3, 0.5
    fn = lambda t: g1_matrix(t, [tau], z, prm, f)[0][:, 0]  # noqa: E731
    got, _ = forward_laplace(fn, P_SAMPLES, t_max=200.0)
    want = (pair_transform("2.14", P_SAMPLES, prm, tau=tau) * f.laplace(P_SAMPLES)
            * pair_transform("2.15", P_SAMPLES, prm, tau=tau, z=z)).real
    assert np.max(np.abs(got.real - want) / want) < 1e-3


def test_g1_unit_forcing_is_g2():
    prm = StratumParams(beta=0.3)
    t = np.array([0.4, 1.0, 2.2])
    val, err = g1_matrix(t, [0.2, 0.7], 0.5, prm)
    assert np.array_equal(val, g2_matrix(t, [0.2, 0.7], 0.5, prm))
    assert np.all(err == 0)


def test_forced_response_matches_duhamel_quadrature():
    # u = h(0) U(t) + int_0^t U(l) h'(t - l) dl with U(t) = 1 - e^{-t} and a kinked sampled h
    f = Forcing("sampled", times=(0.0, 0.5, 1.5, 3.0), values=(0.2, 1.0, 0.4, 0.4))

    def unit(s):
        return (1 - np.exp(-np.asarray(s)))[:, None]

    t = np.array([0.3, 1.0, 2.0, 4.0])
    val, err = forced_response(unit, t, f)
    for k, tk in enumerate(t):
        pts = [p for p in f.times if 0 < p < tk]
        ref = f.at_zero * (1 - math.exp(-tk)) + integrate.quad(
            lambda l: (1 - math.exp(-l)) * f.derivative(tk - l), 0, tk, points=[tk - p for p in pts])[0]
        assert val[k, 0] == pytest.approx(ref, abs=1e-10)
    assert np.all(err < 1e-8)


def test_convolve_examples():
    grid = ConvGrid(1 / 64, 129)
    t = grid.times
    assert np.allclose(convolve(np.ones_like(t), np.ones_like(t), grid), t, atol=1e-14)
    assert np.allclose(convolve(np.ones_like(t), t, grid), t**2 / 2, atol=2 * grid.step**2)
    e = np.exp(-t)
    assert np.max(np.abs(convolve(e, e, grid) - t * e)) <= 2 * grid.step**2
    with pytest.raises(DomainError):
        convolve(np.ones(5), np.ones(5), grid)


def test_grid_route_orders_agree():
    prm = StratumParams(beta=0.25)
    grid = ConvGrid(1 / 64, 129)
    f = Forcing.parse("exp:0.5")
    left = g1_kernel_grid(0.3, 0.5, prm, f, grid, order="left")
    right = g1_kernel_grid(0.3, 0.5, prm, f, grid, order="right")
    assert np.max(np.abs(left - right)) <= 5 * grid.step**2 * max(1.0, np.max(np.abs(left)))


def test_grid_route_step_halving():
    prm = StratumParams(beta=0.5, lam=0.5)
    grid = ConvGrid(1 / 32, 65)
    f = Forcing.parse("exp:0.5")

    def build(g):
        # tau on a grid node keeps the shifted step second order
        return g1_kernel_grid(0.25, 0.5, prm, f, g)

    _, _, e1 = step_halving_error(build, grid)
    _, _, e2 = step_halving_error(build, grid.halved())
    assert e1 / e2 >= 3.0


def test_grid_route_agrees_with_subordination():
    prm = StratumParams(beta=0.5, lam=0.5)
    grid = ConvGrid(1 / 256, 513)
    t = np.array([0.5, 1.0, 1.7])
    f = Forcing.parse("exp:0.5")
    grid_val = g1_kernel(t, 0.25, 0.5, prm, f, grid, method="grid")
    exact = g1_kernel(t, 0.25, 0.5, prm, f)
    assert np.max(np.abs(grid_val - exact)) < 1e-3


def test_no_drift_special_chain():
    # with lam = 0 and h = 1 the depth kernel is g' itself and g1 = g' * g''
    prm = StratumParams(beta=0.3, lam=0.0)
    tau, z = 0.3, 0.5
    grid = ConvGrid(1 / 256, 513)
    t = grid.times[1:]
    gp = np.concatenate([[0.0], g_prime(t, tau, z, prm)])
    assert np.allclose(gp[1:], lemma_b_kernel(t, tau, z, prm), rtol=1e-8, atol=1e-14)
    gpp = np.concatenate([[0.0], g_doubleprime(t, tau, prm.beta)])
    chain = convolve(gp, gpp, grid)
    assert np.max(np.abs(chain[1:] - g1_kernel(t, tau, z, prm))) < 5e-3


@pytest.mark.parametrize("pair_id", ["3.12", "4.12", "5.14"])
def test_horizontal_pairs_round_trip(pair_id):
    prm = StratumParams(nu=0.5, gamma=1.2)
    got, _ = forward_laplace(lambda t: pair_time_side(pair_id, t, prm, x=1.0, r=1.0), P_SAMPLES)
    want = pair_transform(pair_id, P_SAMPLES, prm, x=1.0, r=1.0).real
    assert np.max(np.abs(got.real - want) / want) < 1e-4


def test_grid_validation():
    with pytest.raises(DomainError):
        ConvGrid(0.0, 10)
    with pytest.raises(DomainError):
        ConvGrid(0.1, 2)
    g = ConvGrid.covering(2.0, 0.03)
    assert g.span == pytest.approx(2.0)
    assert g.halved().step == g.step / 2
    with pytest.raises(DomainError):
        g1_kernel(5.0, 0.3, 0.5, StratumParams(), grid=ConvGrid(0.01, 11), method="grid")
