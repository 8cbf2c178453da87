import csv
import io
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from su3laser import params as pm
from su3laser import sweepcli as sc

SMALL = pm.EffectiveRates(Gamma_c=1.0, W=15.0, N=6)

# column layout of every preset; the CSV header must not drift
GOLDEN_FIG2 = [
    "series", "index", "engine", "N", "omega_rad_s", "omega_rel", "W_rad_s", "w_over_gamma_c",
    "gamma_c_rad_s", "chi_x_rad_s", "w_rad_s", "gamma_p_rad_s", "gamma_d_rad_s", "gamma_s_rad_s",
    "intensity", "intensity_per_N2", "g2", "status", "error", "diagnostics", "version", "hash",
]


def small_spec(engine="exact-su3", n=3, **kw):
    return sc.SweepSpec(engine, (sc.Axis("omega_rel", 0.2, 0.8, n),), kw.pop("rates", SMALL), **kw)


def test_axis_parsing():
    a = sc.Axis.parse("W_rel:0.1:100:31:log")
    assert a.log and a.n == 31
    v = a.values()
    assert v[0] == pytest.approx(0.1) and v[-1] == pytest.approx(100) and v[10] == pytest.approx(1.0)
    assert sc.Axis.parse("N:20:60:3").values() == [20, 40, 60]
    for bad in ["W:1:2", "W:a:2:3", "bogus:1:2:3", "W:1:inf:3", "W:0:1:3:log", "W:1:2:0",
                "W:1:2:3:cubic"]:
        with pytest.raises(sc.SweepError):
            sc.Axis.parse(bad)


def test_relative_axes_resolve_after_N():
    spec = sc.SweepSpec("meanfield", (sc.Axis("N", 10, 20, 2), sc.Axis("omega_rel", 0.5, 0.5, 1)),
                        pm.EffectiveRates(Gamma_c=1.0, W=4.0))
    pts = spec.points()
    assert [p.Omega for p in pts] == pytest.approx([0.5 * 10 * 2, 0.5 * 20 * 2])


def test_spec_validation():
    with pytest.raises(sc.SweepError):
        small_spec(rates=SMALL.with_(w=0.1))  # exact engines need collective-only rates
    with pytest.raises(sc.SweepError):
        sc.SweepSpec("oracle", (sc.Axis("N", 2, 4, 3),), SMALL, (("omega", 1.0),))
    with pytest.raises(sc.SweepError):
        small_spec(outputs=("frequency",))
    with pytest.raises(sc.SweepError):
        small_spec(engine="warp-drive")
    with pytest.raises(sc.SweepError):
        sc.SweepSpec("meanfield", (), SMALL).points()  # no drive anywhere


def test_rows_and_determinism():
    spec = small_spec(outputs=("intensity", "g2", "populations", "linewidth"))
    a = sc.run_sweep(spec)
    b = sc.run_sweep(spec)
    assert [r["hash"] for r in a] == [r["hash"] for r in b]
    assert all(r["status"] == "ok" for r in a)
    for r in a:
        assert r["n_u"] + r["n_d"] + r["n_s"] == pytest.approx(6)
        assert r["hash"] == sc.row_hash(r)
    assert sc.emit(a, "json") == sc.emit(b, "json")


def test_parallel_equals_serial():
    specs = [small_spec(n=4), small_spec("exact-su2", n=2)]
    serial = sc.run_sweep(specs, workers=1)
    parallel = sc.run_sweep(specs, workers=3)
    assert serial == parallel
    assert [r["index"] for r in serial] == list(range(6))


def test_failed_points_are_recorded():
    r = pm.barium_defaults(15.0, N=10**6)
    spec = sc.SweepSpec("cumulant", (sc.Axis("omega_rel", 0.1, 0.1, 1),), r)
    (row,) = sc.run_sweep(spec)
    assert row["status"] == "error"
    assert row["error"].startswith("NonStationaryError")
    assert row["intensity"] is None if "intensity" in row else True


def test_non_finite_values_become_null():
    assert sc._clean({"a": float("nan"), "b": [1.0, float("inf")], "c": 2}) == \
        {"a": None, "b": [1.0, None], "c": 2}


def test_csv_layout_and_empty_table():
    text = sc.emit([], "csv")
    assert text.strip().split(",") == list(sc.INPUT_COLUMNS) + list(sc.TRAILER_COLUMNS)
    rows = sc.run_sweep(small_spec(n=2, outputs=("intensity", "g2")))
    table = list(csv.DictReader(io.StringIO(sc.emit(rows, "csv"))))
    assert len(table) == 2
    assert float(table[1]["intensity"]) == rows[1]["intensity"]


def test_golden_schema_fig2():
    specs = [sc.replace(s, axes=(sc.Axis("W_rel", 1, 10, 2, log=True),), rates=s.rates.with_(N=4))
             for s in sc.preset("fig2")]
    rows = sc.run_sweep(specs)
    header = sc.emit(rows, "csv").splitlines()[0].split(",")
    assert header == GOLDEN_FIG2
    # two curves against W / Gamma_c
    assert {r["series"] for r in rows} == {"su2", "su3"}
    assert sorted({r["w_over_gamma_c"] for r in rows}) == pytest.approx([1.0, 10.0])


def test_presets_are_well_formed():
    fig2 = sc.preset("fig2")
    assert [s.engine for s in fig2] == ["exact-su2", "exact-su3"]
    assert all(len(s.points()) == 31 for s in fig2)
    assert fig2[1].points()[0].Omega == pytest.approx(1.9 * 60)
    fig3 = sc.preset("fig3")
    assert [s.points()[0].N for s in fig3] == [20, 30, 40, 60]
    s3 = sc.preset("figS3")
    assert len(s3[0].points()) == 41 * 5
    assert s3[1].kappa_x == pytest.approx(2 * math.pi * 1e5)
    with pytest.raises(sc.SweepError):
        sc.preset("fig9")


def test_fit_and_zero_crossing():
    rows = [{"status": "ok", "N": n, "omega_rel": 0.5, "y": 0.48 - 1.0 / n + 3.0 / n**2}
            for n in (20, 30, 40, 60)]
    (fit,) = sc.fit_command(rows, "y", "thermo", "N", "omega_rel")
    assert fit["X"] == pytest.approx(0.48) and fit["omega_rel"] == 0.5
    (lin,) = sc.fit_command(rows[:2], "y", "linear", "N")
    assert "Z" not in lin
    with pytest.raises(sc.SweepError):
        sc.fit_command(rows[:2], "y", "thermo", "N")
    z = sc.zero_crossings(
        [{"status": "ok", "x": x, "c": x - 0.37, "series": "a"} for x in (0.1, 0.3, 0.5, 0.7)],
        "c", "x", "series")
    assert z == [{"column": "c", "x": "x", "crossing": pytest.approx(0.37), "series": "a"}]


def test_cli_end_to_end(tmp_path, capsys):
    out = tmp_path / "o.json"
    rc = sc.main(["--engine", "exact-su3", "--rates", "Gamma_c=1,W=15,N=5",
                  "--sweep", "omega_rel:0.3:0.6:2", "--format", "json", "--out", str(out),
                  "--outputs", "intensity,pulling", "--kappa-x", "1000"])
    assert rc == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 2
    r = rows[0]
    assert r["wp_x"] == pytest.approx(r["pulling_normalized"] * 1.0 / (2 * math.pi * 1000))


def test_cli_exit_codes(tmp_path, capsys):
    assert sc.main(["--engine", "exact-su3", "--rates", "Gamma_c=1,W=15,N=5,w=1",
                    "--fixed", "omega=1"]) == 2
    assert sc.main(["--engine", "exact-su3", "--sweep", "omega:1:2"]) == 2
    assert sc.main(["--engine", "cumulant", "--rates",
                    "Gamma_c=0.00023,W=0.00345,w=0.0345,gamma_p=0.0415,gamma_d=0.0023,"
                    "gamma_s=0.0023,N=1000000", "--fixed", "omega_rel=0.1"]) == 1
    with pytest.raises(SystemExit):
        sc.main(["--format", "xml"])


def _write_config(path, physical):
    path.write_text(
        "[rates]\nGamma_c = 1\nW = 15\nN = 5\n\n[sweep]\nengine = exact-su3\n"
        "sweep = omega_rel:0.3:0.6:2\noutputs = intensity\n\n" + physical)


def test_cli_config_and_regime_check(tmp_path, capsys):
    good = ("[physical]\ng_x = 1\ng_z = 1\nkappa_x = 1e4\nkappa_z = 1e4\nDelta_c = 1e5\n"
            "Omega_p = 100\ngamma_c = 1\ngamma_b = 0.5\ngamma_d = 1e-3\ngamma_s = 1e-3\nN = 5\n")
    cfg = tmp_path / "ok.ini"
    _write_config(cfg, good)
    assert sc.main(["--config", str(cfg), "--check-regime"]) == 0
    bad = tmp_path / "bad.ini"
    _write_config(bad, good.replace("kappa_x = 1e4", "kappa_x = 1"))
    assert sc.main(["--config", str(bad), "--check-regime"]) == 3
    assert "regime check failed" in capsys.readouterr().err
    bare = tmp_path / "bare.ini"
    _write_config(bare, "")
    assert sc.main(["--config", str(bare), "--check-regime"]) == 2
    assert sc.main(["--config", str(tmp_path / "missing.ini")]) == 2


def test_cli_fit_writes_sidecar(tmp_path, capsys):
    out = tmp_path / "f.csv"
    rc = sc.main(["--engine", "exact-su3", "--rates", "Gamma_c=1,W=15,N=5",
                  "--fixed", "omega_rel=0.5", "--sweep", "N:4:8:3", "--out", str(out),
                  "--fit", "intensity_per_N2:thermo:N", "--zero-crossing", "c_z:N",
                  "--outputs", "intensity,populations"])
    assert rc == 0
    blob = json.loads((tmp_path / "f.csv.analysis.json").read_text())
    assert blob["fits"][0]["column"] == "intensity_per_N2"


@given(st.lists(st.floats(allow_nan=True, allow_infinity=True), max_size=5))
@settings(max_examples=100)
def test_emit_handles_any_floats(values):
    rows = [sc._clean({"index": i, "intensity": v, "status": "ok"}) for i, v in enumerate(values)]
    back = json.loads(sc.emit(rows, "json"))
    for v, r in zip(values, back):
        assert r["intensity"] == (v if math.isfinite(v) else None)
    assert len(list(csv.reader(io.StringIO(sc.emit(rows, "csv"))))) == len(values) + 1
