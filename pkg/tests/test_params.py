import json
import math

import pytest
from hypothesis import given, strategies as st

from su3laser import params as pm


def good_physical(**kw):
    base = dict(g_x=1.0, g_z=1.0, kappa_x=1e4, kappa_z=1e4, Delta_x=0.0, Delta_z=0.0,
                Delta_c=1e5, Omega=2.0, Omega_p=100.0, gamma_c=1.0, gamma_b=0.5,
                gamma_d=1e-3, gamma_s=1e-3, N=100)
    base.update(kw)
    return pm.PhysicalParams(**base)


def test_effective_rates_from_cavity_parameters():
    p = good_physical(Delta_x=300.0, Delta_z=-200.0)
    r = pm.derive_effective_rates(p)
    assert r.Gamma_c == pytest.approx(1e4 / (4 * 300.0**2 + 1e8))
    assert r.chi_x == pytest.approx(300.0 / (4 * 300.0**2 + 1e8))
    lam = (2e10 + 0.5 * 1.5**2) ** 2
    Wz = 1e4 * 1e10 * 1e4 / (lam * (4 * 200.0**2 + 1e8))
    assert r.W == pytest.approx(Wz)
    assert r.chi_z == pytest.approx(-200.0 / 1e4 * Wz)
    assert r.w == pytest.approx(1e4 / (4e10 + 1.5**2))
    assert r.gamma_p == pytest.approx(0.5 * 1e4 / (4e10 + 1.5**2))
    assert (r.Omega, r.N, r.gamma_d) == (2.0, 100, 1e-3)


def test_regime_report():
    ok = pm.validate_regime(good_physical())
    assert ok.ok and ok.failed() == []
    bad = pm.validate_regime(good_physical(kappa_x=5.0))
    assert not bad.ok
    assert "kappa_x >> sqrt(N) g_x" in bad.failed()
    blob = json.loads(bad.to_json())
    assert blob["ok"] is False and len(blob["checks"]) == len(bad.checks)
    assert bad["kappa_x >> sqrt(N) g_x"].margin == pytest.approx(0.5)


def test_cooperativities():
    p = good_physical()
    c = pm.cooperativities(p)
    assert c.C_x == pytest.approx(1 / (1e-3 * 1e4))
    assert c.C_z_exact < c.C_z
    with pytest.raises(pm.InvalidParameterError):
        pm.rate_cooperativities(pm.EffectiveRates(Gamma_c=1, W=1))


@pytest.mark.parametrize("kw", [dict(Gamma_c=-1, W=1), dict(Gamma_c=1, W=math.nan),
                                dict(Gamma_c=1, W=1, N=0), dict(Gamma_c=1, W=1, N=2.5)])
def test_rates_validation(kw):
    with pytest.raises(pm.InvalidParameterError):
        pm.EffectiveRates(**kw)


def test_physical_validation():
    with pytest.raises(pm.InvalidParameterError):
        good_physical(kappa_x=0.0)
    with pytest.raises(pm.InvalidParameterError):
        good_physical(gamma_b=-1.0)


def test_barium_defaults():
    r = pm.barium_defaults(15.0, N=10**6)
    assert r.W / r.Gamma_c == pytest.approx(15.0)
    assert r.W / r.w == pytest.approx(0.1)
    assert r.gamma_p / r.w == pytest.approx(41.5 / 34.5)
    assert r.Omega is None and r.has_single_particle
    with pytest.raises(pm.InvalidParameterError):
        pm.barium_defaults(0.0)


def test_output_power_value():
    # hbar * 2 pi c / 1085 nm = 1.8308e-19 J per photon
    assert pm.output_power(1.0, 1.0) == pytest.approx(1.83079e-19, rel=1e-5)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.integers(1, 1000))
def test_scaling_keeps_ratios(Gc, W, N):
    r = pm.EffectiveRates(Gamma_c=Gc, W=W, Omega=1.0, N=N)
    s = r.scaled(3.0)
    assert s.W / s.Gamma_c == pytest.approx(W / Gc)
    assert s.omega_unit == pytest.approx(3.0 * r.omega_unit)
    assert s.N == N


def test_config_roundtrip(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[rates]\nGamma_c = 1\nW = 15\nN = 20\n\n[physical]\ng_x = 1\ng_z = 1\n"
                   "kappa_x = 10\nkappa_z = 10\n\n[other]\nfoo = bar\n")
    d = pm.load_config(cfg)
    assert d["other"] == {"foo": "bar"}
    assert pm.rates_from_config(d) == pm.EffectiveRates(Gamma_c=1.0, W=15.0, N=20)
    assert pm.physical_from_config(d).kappa_x == 10.0
    del d["rates"]
    assert pm.rates_from_config(d).Gamma_c == pytest.approx(0.1)


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[rates]\ngamma_c = 1\n")
    with pytest.raises(pm.InvalidParameterError):
        pm.load_config(cfg)
    cfg.write_text("[rates]\nN = 2.5\n")
    with pytest.raises(pm.InvalidParameterError):
        pm.load_config(cfg)
