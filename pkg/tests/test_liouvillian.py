import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from su3laser import bruteforce as bf
from su3laser import liouvillian as lv
from su3laser import su3basis as sb

from conftest import positive


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("k", [0, 1])
@pytest.mark.parametrize("chi", [0.0, 0.37])
def test_reduced_generator_equals_restricted_brute_force(N, k, chi):
    Om, Gc, W = 1.3, 0.7, 2.1
    L = lv.assemble_su3(N, Om, Gc, W, chi, k=k).matrix.toarray()
    full = bf.brute_force_liouvillian(N, Om, Gc, W, chi)
    ref = bf.restrict(full, N, k)
    np.testing.assert_allclose(L, ref, atol=1e-12)


@given(st.integers(1, 15), positive, positive, positive)
@settings(max_examples=40, deadline=None)
def test_trace_preservation(N, Om, Gc, W):
    L = lv.assemble_su3(N, Om, Gc, W, k=0).matrix
    assert np.abs(sb.identity_dual(N) @ L).max() <= 1e-12 * max(1.0, lv.assemble_su3(N, Om, Gc, W).norm_inf)


@given(st.integers(1, 12), positive, positive, positive)
@settings(max_examples=30, deadline=None)
def test_swap_symmetry_commutes_with_generator(N, Om, Gc, W):
    # Hermitian conjugation in the gauged basis is the r3 <-> r3' swap
    G = lv.assemble_su3(N, Om, Gc, W, k=0)
    assert G.is_real
    P = lv.swap_partner(G.basis)
    A = G.matrix.toarray()
    np.testing.assert_allclose(A[np.ix_(P, P)], A, atol=1e-12)


@pytest.mark.parametrize("N", [4, 9])
def test_numba_and_numpy_kernels_agree(N):
    for k in (0, 1):
        a = lv.assemble_su3(N, 2.0, 1.0, 3.0, 0.2, k=k, use_numba=True).matrix
        b = lv.assemble_su3(N, 2.0, 1.0, 3.0, 0.2, k=k, use_numba=False).matrix
        assert abs(a - b).max() == 0


def test_dispersive_term_is_imaginary_diagonal():
    a = lv.assemble_su3(4, 2.0, 1.0, 3.0, 0.0, k=1).matrix
    b = lv.assemble_su3(4, 2.0, 1.0, 3.0, 0.5, k=1).matrix
    d = (b - a).toarray()
    assert np.allclose(d.real, 0)
    assert np.allclose(d - np.diag(np.diag(d)), 0)
    np.testing.assert_allclose(np.diag(d).imag, 0.5 * lv.dispersive_diagonal(4, 1))


def test_sector_and_rate_validation():
    with pytest.raises(lv.SectorError):
        lv.assemble_su3(3, 1.0, 1.0, 1.0, k=2)
    with pytest.raises(ValueError):
        lv.assemble_su3(3, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        lv.assemble_su3(3, float("nan"), 1.0, 1.0)


def test_su2_generator_trace_preserving():
    G = lv.assemble_su2(8, 2.0, 1.0)
    assert np.abs(G.trace_dual @ G.matrix).max() < 1e-12


def test_matrix_market_export(tmp_path):
    from scipy.io import mmread

    G = lv.assemble_su3(3, 1.0, 1.0, 2.0, k=0)
    G.export_matrix_market(tmp_path / "L.mtx")
    back = mmread(str(tmp_path / "L.mtx"))
    assert abs(back.tocsc() - G.matrix).max() < 1e-14
