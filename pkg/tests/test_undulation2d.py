import numpy as np
import pytest

from fchbilayer import tangential as tg
from fchbilayer import undulation2d as ud
from fchbilayer.errors import DimensionError, ResolutionError
from fchbilayer.grid import HalfLineGrid
from fchbilayer.potential import PotentialSpec
from fchbilayer.profile1d import solve_u1

GRID = HalfLineGrid(12.0, 241)


def make(eps=1e-2, delta=1e-2, xi=None, ppp=32, spec=None):
    spec = spec or PotentialSpec.quartic(1.0, 3.5)
    xi = xi or tg.Inhomogeneity.dbump_localized(2.0)
    return ud.UndulationSetup(spec, GRID, eps, delta, 1.0, 1.0, 3.0, xi, points_per_period=ppp)


@pytest.fixture(scope="module")
def base():
    st = make()
    return st, ud.modulated_bilayer(st)


def test_regime_and_grid(base):
    st, mb = base
    assert st.eta_d0 == -2.0
    assert st.alpha0 < 0
    assert mb.U.shape == (st.t.size, GRID.n)
    assert st.t[-1] >= st.kappa / st.greens.B
    assert mb.max_newton_residual < 1e-9


def test_delta_zero_is_flat_bilayer():
    st = make(delta=0.0)
    mb = ud.modulated_bilayer(st)
    assert mb.solves == 1
    assert np.all(mb.U == st.uh.values[None, :])
    zero = np.zeros_like(mb.U)
    assert np.all(ud.residual_field(st, mb, zero) == 0.0)
    assert np.all(ud.hyperbolic_correction(st, mb) == 0.0)
    assert np.all(ud.phi0_linear_solve(st) == 0.0)
    f = ud.assemble_un(st, mb, ud.phi0_linear_solve(st), ud.hyperbolic_correction(st, mb))
    assert np.all(f.values == mb.U)


def test_slices_outside_support_identical(base):
    st, mb = base
    out = np.abs(st.t) >= st.xi.T
    assert np.all(mb.U[out] == st.uh.values[None, :])
    assert np.any(mb.U[~out] != st.uh.values[None, :])


def test_transitional_limits_differ():
    st = make(xi=tg.Inhomogeneity.bump_transitional(2.0, 1.0))
    mb = ud.modulated_bilayer(st)
    assert np.any(mb.U[0] != mb.U[-1])
    assert mb.eta_d[0] == st.eta_d0 and mb.eta_d[-1] == pytest.approx(st.eta_d0 - st.delta)


def test_modulation_first_order_response():
    # d U / d delta = -xi(t) eps d u1 / d eta_d + O(eps^2), with d u1 / d eta_d = u1(gamma=0, eta_d=1)
    st = make(delta=1e-3)
    mb = ud.modulated_bilayer(st)
    quot = (mb.U - st.uh.values[None, :]) / st.delta
    pred = -st.xi(st.t)[:, None] * st.eps * solve_u1(st.S, 0.0, 1.0).values[None, :]
    assert np.max(np.abs(quot - pred)) < 0.1 * np.max(np.abs(pred))


def test_residual_linearization_consistency(base):
    st, mb = base
    rng = np.random.default_rng(0)
    v = np.outer(np.exp(-(st.t / 3.0) ** 2), st.psi0) + 0.1 * np.outer(
        np.exp(-(st.t / 4.0) ** 2), np.exp(-GRID.r ** 2) * (1 + 0.1 * rng.standard_normal(GRID.n)))
    F0 = ud.residual_field(st, mb, 0 * v)[2:-2]
    second = []
    for s in (1e-2, 5e-3):
        F1 = ud.residual_field(st, mb, s * v)[2:-2]
        F2 = ud.residual_field(st, mb, 2 * s * v)[2:-2]
        second.append(np.max(np.abs(F2 - 2 * F1 + F0)))
    assert np.log2(second[0] / second[1]) == pytest.approx(2.0, abs=0.1)


def test_cross_check_agrees(base):
    st, mb = base
    phi = ud.phi0_linear_solve(st)
    v = st.psi0[None, :] * phi[:, None]
    rep = ud.residual_F(st, mb, v, cross_check=True)
    assert rep.cross_check_sup < 1e-6
    assert rep.sup > 0 and rep.l2 > 0


def test_resolution_and_dimension_errors(base):
    st, mb = base
    coarse = make(ppp=8)
    with pytest.raises(ResolutionError):
        coarse.check_resolution()
    with pytest.raises(DimensionError):
        ud.residual_F(st, mb, np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        ud.assemble_un(st, mb, np.zeros(5))
    with pytest.raises(DimensionError):
        ud.assemble_un(st, mb, np.zeros(st.t.size), np.zeros((2, 2)))


def test_hyperbolic_solver_on_eigenmode(base):
    st, _ = base
    nt = st.t.size
    hyp = ud.HyperbolicSolver(st, nt, st.ht)
    vals, vecs = st.S.even_eigh
    m = 5
    k = 2 * np.pi * m / (nt * st.ht)
    F = np.outer(np.cos(k * np.arange(nt) * st.ht), vecs[:, 2])
    kap = (2 - 2 * np.cos(k * st.ht)) / st.ht ** 2
    expect = F / (vals[2] - st.lam0 * kap) ** 2
    np.testing.assert_allclose(hyp.solve(F), expect, atol=1e-10 * np.max(np.abs(expect)))
    # the psi0 direction is removed
    P = np.outer(np.ones(nt), st.psi0)
    assert np.max(np.abs(hyp.solve(P))) < 1e-10


def test_hyperbolic_correction_reduces_residual(base):
    st, mb = base
    zero = np.zeros_like(mb.U)
    vh = ud.hyperbolic_correction(st, mb)
    bare = ud.residual_F(st, mb, zero).sup
    phi = ud.phi0_linear_solve(st)
    with_vh = ud.residual_F(st, mb, st.psi0[None, :] * phi[:, None] + vh).sup
    without = ud.residual_F(st, mb, st.psi0[None, :] * phi[:, None]).sup
    assert with_vh < without < 2 * bare
    assert bare / with_vh > 5
    assert np.max(np.abs(ud.project_psi0(st, vh))) < 1e-10


def test_phi0_sources_agree(base):
    st, mb = base
    a = ud.phi0_linear_solve(st)
    b = ud.phi0_linear_solve(st, source="projected", mb=mb)
    assert np.max(np.abs(a - b)) < 0.1 * np.max(np.abs(a))


def test_phi0_linear_in_delta_and_sqrt_eps():
    st1, st2 = make(delta=1e-2), make(delta=2e-2)
    np.testing.assert_allclose(ud.phi0_linear_solve(st2), 2 * ud.phi0_linear_solve(st1), rtol=1e-12)
    eps_list = np.array([0.02, 0.01, 0.005])
    peaks = [np.max(np.abs(ud.phi0_linear_solve(make(eps=e, delta=1e-2)))) for e in eps_list]
    slope = np.polyfit(np.log(eps_list), np.log(peaks), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.1)


def test_closed_form_phi0_close(base):
    st, _ = base
    a = ud.phi0_linear_solve(st)
    c = ud.phi0_closed_form(st)
    assert np.max(np.abs(a - c)) < 0.15 * np.max(np.abs(a))


def test_picard_contracts(base):
    st, mb = base
    phi = ud.phi0_linear_solve(st)
    vh = ud.hyperbolic_correction(st, mb)
    res = ud.phi0_picard_refine(st, mb, phi, vh, max_iters=4)
    assert all(r < 0.75 for r in res.ratios)
    assert res.residuals[-1] < res.residuals[0]


def test_width_and_envelope_helpers():
    r = np.linspace(0, 5, 501)
    rows = np.array([np.exp(-(r / a) ** 2) for a in (1.0, 2.0)])
    w = ud.level_half_width(rows, r, np.exp(-1.0))
    np.testing.assert_allclose(w, [1.0, 2.0], atol=1e-4)
    t = np.linspace(0, 200, 20001)
    sig = np.exp(-0.03 * t) * np.cos(1.01 * t)
    assert ud.envelope_rate(t, sig, 5.0, 150.0) == pytest.approx(0.03, rel=1e-3)
    with pytest.raises(ResolutionError):
        ud.envelope_rate(t, sig, 5.0, 6.0)


def test_amplitude_prediction_matches_peak(base):
    st, _ = base
    phi = ud.phi0_linear_solve(st)
    peak = np.max(np.abs(st.psi0[None, :] * phi[:, None]))
    assert peak / ud.amplitude_prediction(st) == pytest.approx(1.0, abs=0.15)


def test_field_outputs(tmp_path, base):
    st, mb = base
    f = ud.assemble_un(st, mb, ud.phi0_linear_solve(st))
    f.to_csv(tmp_path / "f.csv", stride_t=50, stride_r=20)
    data = np.loadtxt(tmp_path / "f.csv", delimiter=",", skiprows=1)
    assert data.shape == (len(range(0, st.t.size, 50)) * len(range(0, GRID.n, 20)), 3)
    f.write_metadata(tmp_path / "m.json")
    assert f.metadata["hyperbolic_correction"] is False


def test_scaling_csv_sorted(tmp_path):
    rows = [ud.ScalingRow(0.02, 0.02, 1.0, 0.1, None, 0.3), ud.ScalingRow(0.01, 0.01, 0.5, 0.01, 0.005, 0.2)]
    ud.write_scaling_csv(tmp_path / "s.csv", rows)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0].split(",") == ud.SCALING_HEADER
    assert lines[1].startswith("0.01,") and lines[2].endswith(",0.3")
    assert "nan" in lines[2]
