import numpy as np
import pytest
import scipy.linalg as sla

from fchbilayer import grid as g
from fchbilayer.errors import FredholmError, InvalidArgumentError
from fchbilayer.grid import HalfLineGrid
from fchbilayer.profile1d import solve_homoclinic
from fchbilayer.spectral1d import build_operator, cosine_similarity, richardson

LAM0_2001 = 5.381459255568716
LAM0_4001 = 5.381466174505339


def test_lam0_golden(S_fine):
    assert S_fine.lam0 == pytest.approx(LAM0_2001, abs=1e-10)


def test_lam0_dense_oracle(S):
    # independent dense eigensolver on the nonsymmetric interior even block
    A = S.matrix_even.toarray()[:-1, :-1]
    top = np.max(sla.eigvals(A).real)
    assert top == pytest.approx(S.lam0, abs=1e-9)
    assert np.sort(S.even_spectrum)[::-1][0] == pytest.approx(S.lam0, abs=1e-10)


def test_lam0_richardson(spec):
    S2 = build_operator(solve_homoclinic(spec, HalfLineGrid(20.0, 4001)), spec)
    assert S2.lam0 == pytest.approx(LAM0_4001, abs=1e-10)
    assert richardson([LAM0_2001, S2.lam0]) == pytest.approx(5.381468480817546, abs=1e-9)


def test_spectrum_sign_structure(S_fine):
    ev = S_fine.even_spectrum
    assert ev[0] > 0 and ev[1] < 0
    od = S_fine.odd_spectrum
    assert abs(od[0]) < 1e-6 and od[1] < 0
    big = np.abs(S_fine.psi0) > 1e-20  # ignore round-off in the far tail
    assert np.all(S_fine.psi0[big] > 0)
    assert g.norm(S_fine.grid, S_fine.psi0) == pytest.approx(1.0, rel=1e-12)
    assert S_fine.essential_edge == -7.0


def test_translation_mode(S_fine):
    lam1_num, psi1_num = S_fine.odd_numeric
    assert abs(lam1_num) < 1e-6
    assert 1.0 - cosine_similarity(S_fine.grid, psi1_num, S_fine.psi1) < 1e-8


def test_eigenpair_residual(S):
    res = S.apply(S.psi0) - S.lam0 * S.psi0
    assert np.max(np.abs(res[:-1])) < 1e-9


def test_solve_even_inverts(S):
    x = S.solve_even(S.lam0 * S.psi0)
    np.testing.assert_allclose(x, S.psi0, atol=1e-10)


def test_eigh_orthonormal(S):
    vals, vecs = S.even_eigh
    gram = 2.0 * (vecs.T * S.grid.weights) @ vecs
    np.testing.assert_allclose(gram, np.eye(len(vals)), atol=1e-9)
    assert vals[0] == pytest.approx(S.lam0, abs=1e-10)


def test_shifted_pseudo_inverse_odd(S):
    # psi1 is an eigenfunction with eigenvalue ~0: (L - lam0)^{-1} psi1 = -psi1/lam0
    lam1, psi1 = S.odd_numeric
    x = S.shifted_pseudo_inverse(psi1, parity=g.ODD)
    np.testing.assert_allclose(x, psi1 / (lam1 - S.lam0), atol=1e-9)
    x2 = S.shifted_pseudo_inverse(psi1, power=2, parity=g.ODD)
    np.testing.assert_allclose(x2, psi1 / (lam1 - S.lam0) ** 2, atol=1e-9)


def test_shifted_pseudo_inverse_even(S):
    vals, vecs = S.even_eigh
    psi2 = vecs[:, 1]
    x = S.shifted_pseudo_inverse(psi2)
    np.testing.assert_allclose(x, psi2 / (vals[1] - S.lam0), atol=1e-8)
    # result stays orthogonal to psi0
    assert abs(S.inner(x, S.psi0)) < 1e-10


def test_fredholm_violation(S):
    with pytest.raises(FredholmError):
        S.shifted_pseudo_inverse(S.psi0)
    with pytest.raises(InvalidArgumentError):
        S.shifted_pseudo_inverse(S.psi0, power=3)


def test_richardson_exact_on_quadratic():
    f = lambda h: 3.0 + 0.7 * h ** 2
    assert richardson([f(0.1), f(0.05)]) == pytest.approx(3.0, abs=1e-14)


def test_spectral_csv(tmp_path, S):
    p = tmp_path / "s.csv"
    S.to_csv(p)
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    assert data.shape == (S.grid.n, 3)
