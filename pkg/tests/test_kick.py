import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_legendre

from rydreg.basis import GridSpec, QuantumDefects, build_basis
from rydreg.kick import (
    KickConvergenceError, angular_coupling, dipole_matrix, first_order_kick, kick_matrix,
    unitarity_defect,
)
from conftest import H_GRID

H = QuantumDefects.hydrogen()
XG, WG = leggauss(80)


def gaunt_quadrature(l, lp, L):
    # int Y_lp0 P_L Y_l0 dOmega by Gauss-Legendre in cos(theta)
    f = eval_legendre(l, XG) * eval_legendre(L, XG) * eval_legendre(lp, XG)
    return math.sqrt((2 * l + 1) * (2 * lp + 1)) / 2 * float(WG @ f)


@pytest.fixture(scope="module")
def h2():
    return build_basis((1, 2), 1, H)


@pytest.fixture(scope="module")
def h3():
    return build_basis((1, 3), 2, H)


def test_angular_examples():
    assert angular_coupling(0, 0, 0) == pytest.approx(1.0)
    assert angular_coupling(0, 1, 1) == pytest.approx(1 / math.sqrt(3))
    assert gaunt_quadrature(0, 1, 1) == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert angular_coupling(1, 2, 4) == 0.0


@given(l=st.integers(0, 12), lp=st.integers(0, 12), L=st.integers(0, 26))
def test_angular_matches_quadrature(l, lp, L):
    assert angular_coupling(l, lp, L) == pytest.approx(gaunt_quadrature(l, lp, L), abs=1e-10)


@given(l=st.integers(0, 15), lp=st.integers(0, 15), L=st.integers(0, 32))
def test_angular_selection_and_symmetry(l, lp, L):
    a = angular_coupling(l, lp, L)
    if not abs(l - lp) <= L <= l + lp or (l + lp + L) % 2:
        assert a == 0.0
    assert a == pytest.approx(angular_coupling(lp, l, L), abs=1e-14)


def test_zero_kick_is_identity(h3):
    K = kick_matrix(h3, 0.0, grid=H_GRID)
    assert np.array_equal(K.matrix, np.eye(len(h3)))
    assert np.array_equal(first_order_kick(h3, 0.0, H_GRID), np.eye(len(h3)))


def test_hydrogen_dipole(h2):
    Z = dipole_matrix(h2, H_GRID)
    assert Z[h2.find("2p"), h2.find("1s")] == pytest.approx(0.7449, abs=1e-4)
    assert Z[h2.find("2s"), h2.find("1s")] == 0.0


def test_hydrogen_kick_first_order(h2):
    Q = 1e-4
    K = kick_matrix(h2, Q, grid=H_GRID)
    k = K.matrix[h2.find("2p"), h2.find("1s")]
    assert k == pytest.approx(1j * Q * 0.7449, rel=1e-3)


def test_quadratic_scaling(h3):
    devs = []
    for Q in (1e-4, 5e-5, 2.5e-5):
        K = kick_matrix(h3, Q, grid=H_GRID)
        devs.append(np.max(np.abs(K.matrix - first_order_kick(h3, Q, H_GRID))))
    C = [d / q**2 for d, q in zip(devs, (1e-4, 5e-5, 2.5e-5))]
    assert devs[0] / devs[1] == pytest.approx(4, abs=0.5)
    assert devs[1] / devs[2] == pytest.approx(4, abs=0.5)
    assert np.ptp(C) / np.mean(C) < 0.05


def test_first_order_part_couples_dl_one(h3):
    Q = 1e-6
    odd = (kick_matrix(h3, Q, grid=H_GRID).matrix - kick_matrix(h3, -Q, grid=H_GRID).matrix) / (2j * Q)
    dl = np.abs(np.subtract.outer(h3.ls, h3.ls))
    assert np.max(np.abs(odd[dl != 1])) < 1e-8
    Z = dipole_matrix(h3, H_GRID)
    assert np.max(np.abs(Z[dl != 1])) == 0.0


def test_dipole_hermitian(small_cs_basis):
    Z = dipole_matrix(small_cs_basis)
    assert np.max(np.abs(Z - Z.conj().T)) < 1e-10


def test_reality_structure(small_cs_basis):
    Kp = kick_matrix(small_cs_basis, 0.0017)
    Km = kick_matrix(small_cs_basis, -0.0017)
    assert np.max(np.abs(Km.matrix - Kp.matrix.conj())) < 1e-10
    assert np.max(np.abs(Kp.conj().matrix - Km.matrix)) < 1e-10


def test_unitarity_identity():
    assert unitarity_defect(np.eye(5)) == 0.0


def test_default_basis_unitarity(cs_basis, cs_kick):
    assert unitarity_defect(cs_kick, cs_basis.interior) < 1e-3


def test_padding_improves_unitarity():
    cs = QuantumDefects.cesium()
    defects = []
    for pad in (3, 6, 10):
        b = build_basis((27 - pad, 32 + pad), 8, cs, register_n=range(27, 33))
        defects.append(unitarity_defect(kick_matrix(b, 0.0017), b.register))
    assert defects[0] > defects[1] > defects[2]


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_norm_conservation_on_interior(seed, cs_basis, cs_kick):
    rng = np.random.default_rng(seed)
    idx = np.array(cs_basis.interior)
    psi = np.zeros(len(cs_basis), complex)
    psi[idx] = rng.normal(size=len(idx)) + 1j * rng.normal(size=len(idx))
    psi /= np.linalg.norm(psi)
    assert np.linalg.norm(cs_kick.matrix @ psi) == pytest.approx(1.0, abs=1e-3)


def test_convergence_error_names_element(small_cs_basis):
    with pytest.raises(KickConvergenceError, match="worst element"):
        kick_matrix(small_cs_basis, 0.0017, l_cap=2)


def test_fixed_lmax_truncates(small_cs_basis):
    K = kick_matrix(small_cs_basis, 0.0017, l_max=1)
    assert K.l_max == 1


def test_cache_round_trip(small_cs_basis, tmp_path):
    a = kick_matrix(small_cs_basis, 0.0017, cache_dir=tmp_path)
    files = list(tmp_path.glob("kick_*.npz"))
    assert len(files) == 1
    b = kick_matrix(small_cs_basis, 0.0017, cache_dir=tmp_path)
    assert np.array_equal(a.matrix, b.matrix) and a.basis_key == b.basis_key
    with pytest.raises(ValueError):
        a.matrix[0, 0] = 2.0


def test_inverse_undoes_kick(small_cs_basis):
    K = kick_matrix(small_cs_basis, 0.0017)
    assert np.allclose(K.inverse().matrix @ K.matrix, np.eye(len(small_cs_basis)), atol=1e-10)
