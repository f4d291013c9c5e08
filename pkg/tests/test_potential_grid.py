import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fchbilayer import grid as g
from fchbilayer.errors import InvalidArgumentError, TruncationError, WellShapeError
from fchbilayer.grid import HalfLineGrid
from fchbilayer.potential import PotentialSpec, eval_w, validate_well


def test_eval_w_quartic_values(spec):
    assert eval_w(spec, 0.0, 2) == 7.0
    assert eval_w(spec, 1.0, 0) == 0.0
    assert eval_w(spec, 1.0, 1) == pytest.approx(-2.5, abs=1e-15)


def test_eval_w_bad_order(spec):
    with pytest.raises(InvalidArgumentError):
        eval_w(spec, 0.5, 5)


def test_validate_quartic_35(spec):
    rep = validate_well(spec)
    assert rep.u_max_zero == 1.0
    assert rep.u_circ == pytest.approx(0.6398090866, abs=1e-9)
    assert rep.u_plus == pytest.approx(2.7351909134, abs=1e-9)
    assert rep.w3_negative_on_interval


def test_validate_quartic_30_boundary():
    # W'''(1) = 0 exactly; the flag samples the open interval only
    assert validate_well(PotentialSpec.quartic(1.0, 3.0)).w3_negative_on_interval


def test_validate_quartic_20_flag_false():
    rep = validate_well(PotentialSpec.quartic(1.0, 2.0))
    assert not rep.w3_negative_on_interval


def test_quartic_critical_points_are_roots():
    spec = PotentialSpec.quartic(1.0, 3.5)
    rep = spec.report
    # closed-form quadratic for W'(u)/u = 4u^2 - 3(1+c)u + 2c
    a, b, c = 4.0, -3.0 * 4.5, 7.0
    roots = sorted(np.roots([a, b, c]))
    assert rep.u_circ == pytest.approx(roots[0], rel=1e-13)
    assert rep.u_plus == pytest.approx(roots[1], rel=1e-13)


def test_polynomial_matches_quartic():
    q = PotentialSpec.quartic(1.0, 3.5)
    p = PotentialSpec.polynomial([0.0, 0.0, 3.5, -4.5, 1.0])
    u = np.linspace(-0.5, 3.0, 17)
    for k in range(5):
        np.testing.assert_allclose(p(u, k), q(u, k), rtol=1e-14, atol=1e-13)
    assert validate_well(p).u_max_zero == pytest.approx(1.0, abs=1e-12)


def test_bad_wells():
    with pytest.raises(InvalidArgumentError):
        PotentialSpec.quartic(-1.0, 3.5)
    with pytest.raises(WellShapeError):
        validate_well(PotentialSpec.polynomial([0.0, 0.0, -1.0, 0.0, 1.0]))  # W''(0) < 0


@settings(max_examples=25, deadline=None)
@given(st.floats(1.2, 6.0), st.floats(0.5, 2.0))
def test_quartic_family_invariants(c, m):
    spec = PotentialSpec.quartic(m, c)
    rep = validate_well(spec)
    assert spec(0.0, 0) == 0.0 and spec(0.0, 1) == 0.0
    assert spec(rep.u_plus, 0) < 0 < spec(rep.u_plus, 2)
    assert spec(rep.u_circ, 2) < 0
    assert spec(rep.u_max_zero, 1) < 0


# ---------------------------------------------------------------------------
# grid


def test_grid_basics():
    gr = HalfLineGrid(10.0, 101)
    assert gr.h == pytest.approx(0.1)
    assert gr.weights.sum() == pytest.approx(10.0)
    assert gr.refined().n == 201 and gr.refined().h == pytest.approx(0.05)
    with pytest.raises(InvalidArgumentError):
        HalfLineGrid(10.0, 10)


def test_truncation_check():
    HalfLineGrid(20.0, 2001).check_truncation(7.0)
    with pytest.raises(TruncationError):
        HalfLineGrid(5.0, 501).check_truncation(7.0)


def test_even_laplacian_order2():
    errs = []
    for n in (201, 401, 801):
        gr = HalfLineGrid(8.0, n)
        f = np.exp(-gr.r ** 2)
        exact = (4 * gr.r ** 2 - 2) * f
        errs.append(np.max(np.abs(g.lap(f, gr.h)[:-1] - exact[:-1])))
    assert np.log2(errs[0] / errs[1]) > 1.9 and np.log2(errs[1] / errs[2]) > 1.9


def test_laplacian_matrix_matches_stencil():
    gr = HalfLineGrid(6.0, 121)
    f = np.cos(gr.r) * np.exp(-gr.r)
    for parity in (g.EVEN, g.ODD):
        A = g.laplacian_matrix(gr, parity)
        x = g.restrict(f if parity == g.EVEN else np.sin(gr.r) * np.exp(-gr.r), parity)
        full = g.extend(x, parity)
        np.testing.assert_allclose(g.extend(A @ x, parity)[:-1], g.lap(full, gr.h, parity)[:-1],
                                   atol=1e-10)


def test_full_line_inner_product():
    gr = HalfLineGrid(10.0, 2001)
    f = np.exp(-gr.r ** 2)
    assert g.inner(gr, f, f) == pytest.approx(np.sqrt(np.pi / 2), rel=1e-10)
