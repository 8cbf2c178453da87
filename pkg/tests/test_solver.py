import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from su3laser import bruteforce as bf
from su3laser import liouvillian as lv
from su3laser import solver as so

from conftest import positive


def su2_geometric(N, W, Gc):
    """Dicke-ladder steady state: a birth-death chain with ratio W/Gc per step."""
    j = N / 2
    m = np.arange(N + 1) - j
    p = (W / Gc) ** np.arange(N + 1)
    p /= p.sum()
    a1 = (j + m) * (j - m + 1)
    a2 = a1 * (j + m - 1) * (j - m + 2)
    return p @ a1, (p @ a2) / (p @ a1) ** 2, p @ m


@pytest.mark.parametrize("N,W", [(1, 0.5), (2, 3.0), (7, 1.0), (20, 2.5), (40, 0.3)])
def test_su2_matches_geometric_chain(N, W):
    st = so.steady_state(lv.assemble_su2(N, W, 1.0))
    ob = so.observables(st)
    I, g2, cz = su2_geometric(N, W, 1.0)
    assert ob.intensity == pytest.approx(I, rel=1e-10)
    assert ob.cz == pytest.approx(cz, abs=1e-10 * N)
    if N > 1:
        assert ob.g2 == pytest.approx(g2, rel=1e-9)


@pytest.mark.parametrize("N", [2, 3])
def test_steady_state_against_brute_force(N):
    Om, Gc, W = 1.7, 0.8, 2.6
    st = so.steady_state(lv.assemble_su3(N, Om, Gc, W, k=0))
    ob = so.observables(st)
    ref = bf.observables(bf.steady_state(bf.brute_force_liouvillian(N, Om, Gc, W), N, symmetric=True), N)
    assert ob.intensity == pytest.approx(ref["intensity"], rel=1e-10)
    assert ob.g2 == pytest.approx(ref["g2"], rel=1e-10)
    assert ob.cz == pytest.approx(ref["cz"], rel=1e-10)
    assert (ob.n_u, ob.n_d, ob.n_s) == pytest.approx((ref["n_u"], ref["n_d"], ref["n_s"]), rel=1e-10)


def test_reduced_and_unreduced_solves_agree():
    G = lv.assemble_su3(8, 9.0, 1.0, 4.0, k=0)
    a = so.steady_state(G, reduce=True)
    b = so.steady_state(G, reduce=False)
    np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-11)


def test_steady_state_with_dispersion_against_brute_force():
    N, Om, Gc, W, chi = 3, 1.1, 1.0, 2.0, 0.4
    st = so.steady_state(lv.assemble_su3(N, Om, Gc, W, chi, k=0))
    ob = so.observables(st)
    rho = bf.steady_state(bf.brute_force_liouvillian(N, Om, Gc, W, chi), N, symmetric=True)
    assert ob.intensity == pytest.approx(bf.observables(rho, N)["intensity"], rel=1e-9)


@given(st.integers(2, 14), positive, positive, positive)
@settings(max_examples=25, deadline=None)
def test_steady_state_is_physical(N, Om, Gc, W):
    st = so.steady_state(lv.assemble_su3(N, Om * N, Gc, W, k=0))
    assert st.trace() == pytest.approx(1.0, abs=1e-12)
    assert so.check_positivity(st, tol=1e-9)
    ob = so.observables(st)
    assert ob.n_u + ob.n_d + ob.n_s == pytest.approx(N, rel=1e-12)
    assert 0 <= ob.intensity <= N * (N + 2) / 4 + 1e-9  # max of C+C- on the symmetric space


def test_zero_generator_is_rejected():
    with pytest.raises(so.MultiplicityError):
        so.steady_state(lv.assemble_su3(3, 0.0, 0.0, 0.0, k=0))


def test_undriven_model_collects_in_d():
    # without the drive nothing leaves d, so every atom ends up there
    ob = so.observables(so.steady_state(lv.assemble_su3(4, 0.0, 1.0, 1.0, k=0)))
    assert ob.n_d == pytest.approx(4.0, abs=1e-10)
    assert ob.intensity == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("N", [2, 3])
def test_slowest_eigenvalue_against_brute_force(N):
    Om, Gc, W = 1.9, 1.0, 2.2
    ev = so.slowest_decay_eigenvalue(lv.assemble_su3(N, Om, Gc, W, k=1))
    w = np.linalg.eigvals(bf.coherence_sector(bf.brute_force_liouvillian(N, Om, Gc, W), N))
    ref = w[np.argmax(w.real)]
    assert ev.value.real == pytest.approx(ref.real, rel=1e-10)
    assert abs(ev.value.imag) == pytest.approx(abs(ref.imag), abs=1e-10 * abs(ref))
    assert ev.value.imag >= 0


def test_sparse_and_dense_eigen_paths_agree():
    N = 12  # k=1 dim is above the dense limit
    G = lv.assemble_su3(N, 0.5 * N * np.sqrt(15), 1.0, 15.0, k=1)
    assert G.dim > so.DENSE_LIMIT
    ev = so.slowest_decay_eigenvalue(G)
    w = np.linalg.eigvals(G.matrix.toarray())
    assert ev.value.real == pytest.approx(w.real.max(), rel=1e-9)


def test_g1_decay_matches_eigenvalue():
    N = 8
    Om = 0.5 * N * np.sqrt(15)
    L0 = lv.assemble_su3(N, Om, 1.0, 15.0, k=0)
    L1 = lv.assemble_su3(N, Om, 1.0, 15.0, k=1)
    ev = so.slowest_decay_eigenvalue(L1)
    taus = np.linspace(0, 6 / ev.linewidth, 200)
    g1 = so.g1_correlation(L1, so.steady_state(L0), taus)
    assert g1.linewidth == pytest.approx(ev.linewidth, rel=1e-3)
    # g1(0) is the intensity
    assert g1.values[0].real == pytest.approx(so.observables(so.steady_state(L0)).intensity, rel=1e-10)


def test_pulling_methods_agree():
    N = 10
    Om = 0.45 * N * np.sqrt(15)
    g = so.cavity_pulling(N, Om, 15.0, 1.0, np.linspace(-1e-3, 1e-3, 5), method="grid")
    p = so.cavity_pulling(N, Om, 15.0, 1.0, method="perturbative", kappa_x=2.0)
    assert p.slope == pytest.approx(g.slope, rel=1e-5)
    assert p.normalized == -p.slope
    assert p.wp(1.0) == pytest.approx(-p.slope / 2.0)


def test_pulling_grid_validation():
    with pytest.raises(ValueError):
        so.cavity_pulling(4, 1.0, 1.0, 1.0, chi_grid=[0.0, 0.1, 0.2])
    with pytest.raises(ValueError):
        so.cavity_pulling(4, 1.0, 1.0, 1.0, method="magic")


def test_thermo_fit_recovers_exact_coefficients():
    f = {N: 0.48 - 1.3 / N + 4.0 / N**2 for N in (20, 30, 40, 50, 60)}
    fit = so.thermo_fit(f)
    assert (fit.X, fit.Y, fit.Z) == pytest.approx((0.48, -1.3, 4.0), rel=1e-9)
    assert fit.residual < 1e-12
    assert fit(100) == pytest.approx(0.48 - 0.013 + 0.0004)
    with pytest.raises(so.FitError):
        so.thermo_fit({10: 1.0, 20: 2.0})


def test_zero_crossing():
    assert so.zero_crossing(lambda x: x**3 - 0.2, 0, 1, rtol=1e-12) == pytest.approx(0.2 ** (1 / 3), rel=1e-10)
    with pytest.raises(so.NoSignChangeError):
        so.zero_crossing(lambda x: x * x + 1, -1, 1)


def test_solve_point_record_is_json_ready():
    import json

    rec = so.solve_point(6, 10.0, 15.0, 1.0, linewidth=True, pulling=True, kappa_x=3.0)
    json.dumps(rec)
    assert rec["observables"]["linewidth"] > 0
    assert "wp_x" in rec["observables"]


def test_snapshot_small_exact():
    # frozen from the tensor-product reference model (N=3, Omega=2, Gc=1, W=3)
    ob = so.observables(so.steady_state(lv.assemble_su3(3, 2.0, 1.0, 3.0, k=0)))
    ref = bf.observables(bf.steady_state(bf.brute_force_liouvillian(3, 2.0, 1.0, 3.0), 3, symmetric=True), 3)
    assert ob.intensity == pytest.approx(SNAP_I, rel=1e-10)
    assert ref["intensity"] == pytest.approx(SNAP_I, rel=1e-10)


SNAP_I = 1.555180743225571
