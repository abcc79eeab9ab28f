"""Special-function tests: golden values, scipy oracles, decay bounds."""

import math

import numpy as np
import pytest
from scipy import special

from polyspec import specfun as sf


def test_omega_small_dims():
    assert sf.omega(1) == pytest.approx(2.0, abs=1e-14)
    assert sf.omega(2) == pytest.approx(math.pi, abs=1e-14)
    assert sf.omega(3) == pytest.approx(4.0 * math.pi / 3.0, abs=1e-14)


def test_bessel_trivial_values():
    assert sf.bessel_j(0, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert sf.bessel_j(1, 0.0) == 0.0
    # J_{1/2}(pi/2) = sqrt(2/(pi * pi/2)) * sin(pi/2) = 2/pi
    assert sf.bessel_j(0.5, math.pi / 2.0) == pytest.approx(2.0 / math.pi, rel=1e-13)


def test_bessel_rejects_bad_orders():
    with pytest.raises(ValueError):
        sf.bessel_j(0.3, 1.0)
    with pytest.raises(ValueError):
        sf.bessel_j(9.0, 1.0)
    with pytest.raises(ValueError):
        sf.bessel_j(1, -1.0)


@pytest.mark.parametrize("order", [0, 0.5, 1, 1.5, 2, 2.5, 3, 4])
def test_bessel_against_scipy_envelope_relative(order):
    t = np.concatenate([[0.0], np.geomspace(1e-8, 15.9, 200),
                        np.linspace(16.0, 1000.0, 800)])
    ours = sf.bessel_j(order, t)
    ref = special.jv(order, t)
    envelope = np.maximum(np.abs(ref),
                          np.minimum(1.0, np.sqrt(2.0 / math.pi / np.maximum(t, 1e-12))))
    tol = 1e-12 if order <= 4 else 1e-8
    assert np.max(np.abs(ours - ref) / envelope) < tol


def test_h3_closed_form_and_golden_point():
    # start the grid where the elementary form itself is well conditioned
    t = np.linspace(0.5, 60.0, 500)
    closed = 3.0 * (np.sin(t) - t * np.cos(t)) / t ** 3
    assert np.max(np.abs(sf.h(3, t) - closed)) < 1e-13
    assert sf.h(3, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert sf.h(3, math.pi) == pytest.approx(3.0 / math.pi ** 2, rel=1e-13)


def test_h_normalization_and_bound():
    for n in (2, 3, 4, 5):
        t = np.linspace(0.0, 200.0, 4001)
        vals = sf.h(n, t)
        assert vals[0] == pytest.approx(1.0, abs=1e-14)
        assert np.max(np.abs(vals)) <= 1.0 + 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_h_decay_envelope(n):
    # |h_n(t)| <= C (1+t)^{-(n+1)/2} on a log grid
    t = np.geomspace(1.0, 1000.0, 400)
    ratio = np.abs(sf.h(n, t)) * (1.0 + t) ** ((n + 1) / 2.0)
    assert np.max(ratio) < 8.0


def test_hdot_zero_and_taylor():
    assert sf.hdot(3, 0.0) == 0.0
    t = 1e-3
    assert sf.hdot(3, t) == pytest.approx(-t / 5.0, rel=1e-5)
    assert sf.hdot(2, t) == pytest.approx(-t / 4.0, rel=1e-5)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_hdot_matches_finite_difference(n):
    t = np.linspace(0.01, 50.0, 300)
    d = 1e-5
    fd = (sf.h(n, t + d) - sf.h(n, t - d)) / (2.0 * d)
    assert np.max(np.abs(sf.hdot(n, t) - fd)) < 1e-8


@pytest.mark.parametrize("n", [2, 3])
def test_h_is_ball_transform_by_radial_quadrature(n):
    # omega_n h_n(t) equals the Fourier transform of the unit-ball
    # indicator, computed by brute-force radial quadrature
    from polyspec.quad import gauss_rule
    x, w = gauss_rule(400)
    t_test = np.linspace(0.3, 30.0, 20)
    for t in t_test:
        if n == 2:
            # 2 pi int_0^1 J_0(t rho) rho drho
            val = 2.0 * math.pi * float(np.dot(w, special.j0(t * x) * x))
        else:
            # 4 pi int_0^1 sinc(t rho) rho^2 drho
            val = 4.0 * math.pi * float(np.dot(w, np.sin(t * x) / (t * x) * x ** 2))
        assert val == pytest.approx(sf.omega(n) * sf.h(n, t), abs=1e-8)


def test_mu_hat_values():
    assert sf.mu_hat(2, 0.0) == pytest.approx(2.0 * math.pi, abs=1e-12)
    assert sf.mu_hat(3, 0.0) == pytest.approx(4.0 * math.pi, abs=1e-12)
    assert abs(sf.mu_hat(3, math.pi)) < 1e-12
    t = np.linspace(1e-3, 500.0, 2000)
    assert np.max(np.abs(sf.mu_hat(3, t) * t - 4.0 * math.pi * np.sin(t))) < 1e-12


def test_one_minus_h_taylor():
    for n in (2, 3):
        t = np.array([1e-8, 1e-5, 1e-3, 0.3])
        lead = t ** 2 / (2.0 * (n + 2.0))
        rel = np.abs(sf.one_minus_h(n, t) - lead) / lead
        assert rel[0] < 1e-10 and rel[1] < 1e-8
    assert sf.one_minus_h(3, 2.0) == pytest.approx(1.0 - sf.h(3, 2.0), rel=1e-13)
