from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from fchbilayer.errors import InvalidArgumentError, RegimeError, TruncationError
from fchbilayer.tangential import (FourierPair, Inhomogeneity, apply_operator, bump, closed_form_gk0, convolve_G,
                                   envelope, gk0, greens_eval, greens_params, kbar0, uniform_grid,
                                   xi_fourier)

BETA0 = -1.31548391


def test_bump_support_and_derivatives():
    x = np.array([-1.5, -1.0, 0.0, 1.0, 1.5])
    b = bump(x)
    assert b[2] == pytest.approx(np.exp(-1.0), rel=1e-15)
    assert b[0] == b[1] == b[3] == b[4] == 0.0
    xs = np.linspace(-0.9, 0.9, 37)
    hh = 1e-5
    for k in range(4):
        fd = (bump(xs + hh, k) - bump(xs - hh, k)) / (2 * hh)
        np.testing.assert_allclose(bump(xs, k + 1), fd, rtol=1e-5, atol=1e-6)


def test_transitional_mass_and_limits():
    xi = Inhomogeneity.bump_transitional(2.0, 1.5)
    assert xi.mass == pytest.approx(1.5, rel=1e-12)
    lo, hi = xi.limits()
    assert lo == 0.0 and hi == pytest.approx(1.5, rel=1e-12)
    integral = quad(lambda s: float(xi.derivative(np.array([s]), 1)[0]), -2, 2, epsabs=0, epsrel=1e-12)[0]
    assert integral == pytest.approx(1.5, rel=1e-10)


def test_localized_limits():
    xi = Inhomogeneity.dbump_localized(2.0)
    assert xi.mass == 0.0
    assert xi.limits() == (0.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        Inhomogeneity.dbump_localized(0.0)


def test_fourier_goldens():
    fp = xi_fourier(Inhomogeneity.bump_transitional(2.0, 1.0))
    assert fp.xi_e1 == 0.0
    assert fp.xi_o1 == pytest.approx(0.7171155729542538, abs=1e-13)
    # independent adaptive quadrature
    xi = Inhomogeneity.bump_transitional(2.0, 1.0)
    ref = quad(lambda s: float(xi.derivative(np.array([s]), 1)[0]) * np.cos(s), -2, 2,
               epsabs=0, epsrel=1e-13)[0]
    assert fp.xi_o1 == pytest.approx(ref, abs=1e-12)
    fl = xi_fourier(Inhomogeneity.dbump_localized(2.0))
    assert fl.xi_e1 == pytest.approx(0.6367897597390358, abs=1e-13)
    assert abs(fl.xi_o1) < 1e-14
    assert fl.theta1 == pytest.approx(0.0, abs=1e-12)


def test_greens_params_characteristic_root():
    p = greens_params(0.01, 0.4, -0.1)
    assert abs(p.symbol(p.A + 1j * p.B)) < 1e-12
    assert abs(p.symbol(p.A - 1j * p.B)) < 1e-12


def test_greens_params_small_eps_limit():
    p = greens_params(1e-4, 0.0, -1.0)
    assert p.B == pytest.approx(np.sqrt(1e-4), rel=1e-3)
    assert p.A == pytest.approx(1.0, abs=1e-3)


def test_greens_params_regime():
    with pytest.raises(RegimeError):
        greens_params(0.01, 0.0, 0.05)
    with pytest.raises(InvalidArgumentError):
        greens_params(0.0, 0.0, -0.1)


def test_green_value_and_symmetry():
    p = greens_params(0.01, 0.4, -0.1)
    assert greens_eval(p, 0.0) == pytest.approx(p.A * p.prefactor, rel=1e-15)
    t = np.linspace(0.1, 30, 50)
    np.testing.assert_allclose(greens_eval(p, t), greens_eval(p, -t), rtol=1e-15)


def test_green_solves_operator_away_from_origin():
    p = greens_params(0.05, 0.4, -0.1)
    h = 1e-2
    t = np.arange(0.5, 10.0, h)
    res = apply_operator(p, greens_eval(p, t), h)
    assert np.max(np.abs(res)) < 1e-3 * np.max(np.abs(greens_eval(p, t)))


def test_green_integral_matches_symbol():
    # integral of G equals 1/symbol(0)
    p = greens_params(0.05, 0.4, -0.1)
    val = 2 * quad(lambda s: float(greens_eval(p, s)), 0, 60 / p.B, limit=2000)[0]
    assert val == pytest.approx(1.0 / p.symbol(0.0), rel=1e-7)


def test_kbar0_golden_and_mean():
    xi = Inhomogeneity.dbump_localized(2.0)
    assert kbar0(1.0, xi, np.array([0.0]))[0] == pytest.approx(-1.75 / np.e, rel=1e-13)
    s = np.linspace(-2, 2, 40001)
    assert abs(np.trapezoid(kbar0(BETA0, xi, s), s)) < 1e-10


def test_convolution_linear_and_truncation():
    p = greens_params(0.02, 0.4, -0.1)
    t = uniform_grid(p, kappa=14.0, h=0.01)
    f1 = bump(t / 2.0)
    f2 = bump((t - 1.0) / 1.5)
    a = convolve_G(p, t, 2.0 * f1 - 3.0 * f2)
    b = 2.0 * convolve_G(p, t, f1) - 3.0 * convolve_G(p, t, f2)
    np.testing.assert_allclose(a, b, atol=1e-12 * np.max(np.abs(a)))
    with pytest.raises(TruncationError):
        convolve_G(p, t[len(t) // 4 : -len(t) // 4], f1[len(t) // 4 : -len(t) // 4])
    assert np.all(convolve_G(p, t, np.zeros_like(t)) == 0.0)


def test_convolution_narrow_bump_limit():
    # a unit-mass bump of width w -> G itself as w -> 0
    p = greens_params(0.02, 0.4, -0.1)
    t = uniform_grid(p, kappa=14.0, h=0.002)
    w = 0.02
    f = bump(t / w) / (w * quad(lambda s: float(bump(s)), -1, 1)[0])
    far = np.abs(t) > 1.0
    got = convolve_G(p, t, f)[far]
    # second-moment error ~ w^2 |G''| / 2
    np.testing.assert_allclose(got, greens_eval(p, t[far]), rtol=0, atol=1e-3 * greens_eval(p, 0.0))


def test_convolution_solves_operator():
    p = greens_params(0.05, 0.4, -0.1)
    h = 0.005
    t = uniform_grid(p, kappa=14.0, h=h)
    f = bump(t / 2.0)
    u = convolve_G(p, t, f)
    res = apply_operator(p, u, h) - f[2:-2]
    assert np.max(np.abs(res)) < 1e-3


def test_gk0_matches_coarse_convolution():
    p = greens_params(0.01, 0.4, -0.1)
    xi = Inhomogeneity.dbump_localized(2.0)
    t = uniform_grid(p, kappa=14.0, h=0.005)
    direct = convolve_G(p, t, kbar0(BETA0, xi, t))
    sub = t[:: 20]
    fine = gk0(p, BETA0, xi, sub)
    np.testing.assert_allclose(fine, direct[:: 20], atol=1e-5 * np.max(np.abs(fine)))


def test_closed_form_approaches_convolution():
    xi = Inhomogeneity.dbump_localized(2.0)
    fp = xi_fourier(xi)
    errs = []
    for eps in (0.01, 0.0025):
        p = greens_params(eps, 0.4, -0.1)
        t = uniform_grid(p, kappa=14.0, h=0.05)
        num = gk0(p, BETA0, xi, t)
        cf = closed_form_gk0(p, BETA0, fp, t)
        errs.append(np.max(np.abs(num - cf)) / np.max(np.abs(num)))
        assert np.all(np.abs(cf) <= envelope(p, BETA0, fp, t) * (1 + 1e-12))
    assert errs[1] < errs[0] < 0.2


def test_closed_form_zero_fourier():
    p = greens_params(0.01, 0.4, -0.1)
    assert np.all(closed_form_gk0(p, BETA0, FourierPair(0.0, 0.0), np.linspace(-5, 5, 11)) == 0.0)


def test_amplitude_scaling_inverse_sqrt_eps():
    xi = Inhomogeneity.dbump_localized(2.0)
    eps_list = np.array([0.02, 0.01, 0.005])
    amps = []
    for eps in eps_list:
        p = greens_params(eps, 0.4, -0.1)
        t = uniform_grid(p, kappa=14.0, h=0.05)
        amps.append(np.max(np.abs(gk0(p, BETA0, xi, t))))
    slope = np.polyfit(np.log(eps_list), np.log(amps), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_closed_form_regime():
    p = greens_params(0.01, 0.4, -0.1)
    with pytest.raises(RegimeError):
        closed_form_gk0(replace(p, alpha0=0.1), BETA0, xi_fourier(Inhomogeneity.dbump_localized(2.0)),
                        np.zeros(3))


def test_tabulated_matches_analytic():
    xi = Inhomogeneity.dbump_localized(2.0)
    t = np.linspace(-3, 3, 1201)
    tab = Inhomogeneity.tabulated(t, xi(t))
    s = np.linspace(-2.5, 2.5, 101)
    np.testing.assert_allclose(tab(s), xi(s), atol=1e-8)
