"""Parameter sweeps over the exact, mean-field, cumulant and reference engines.

Rates are carried in one unit throughout a sweep (``unit_rad_s`` converts it
to rad/s for the emitted columns).  Sweep axes:

``omega``       drive in rate units
``omega_rel``   drive over ``N sqrt(W Gamma_c)``
``omega_ngc``   drive over ``N Gamma_c``
``W``           pump in rate units
``W_rel``       pump over ``Gamma_c``
``N``           atom number
``chi_x``       dispersive shift in rate units
``chi_x_rel``   dispersive shift over ``Gamma_c / N``

Relative drive axes are resolved after every other axis so that a joint
``N`` and ``omega_rel`` sweep keeps the ratio fixed.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from . import params as pm

log = logging.getLogger("su3laser.sweep")

ENGINES = ("exact-su3", "exact-su2", "meanfield", "cumulant", "oracle")
AXES = ("omega", "omega_rel", "omega_ngc", "W", "W_rel", "N", "chi_x", "chi_x_rel")
OUTPUTS = ("intensity", "g2", "populations", "linewidth", "pulling", "thresholds",
           "frequency", "power")
_DEFAULT_OUTPUTS = {
    "exact-su3": ("intensity", "g2", "populations"),
    "exact-su2": ("intensity", "g2"),
    "meanfield": ("intensity", "populations"),
    "cumulant": ("intensity", "populations"),
    "oracle": ("intensity", "g2", "populations"),
}
_SUPPORTED = {
    "exact-su3": {"intensity", "g2", "populations", "linewidth", "pulling"},
    "exact-su2": {"intensity", "g2", "populations"},
    "meanfield": {"intensity", "populations", "linewidth", "pulling", "thresholds",
                  "frequency", "power"},
    "cumulant": {"intensity", "populations", "power"},
    "oracle": {"intensity", "g2", "populations"},
}

# column name -> emitted order; units are in the suffix
INPUT_COLUMNS = (
    "series", "index", "engine", "N", "omega_rad_s", "omega_rel", "W_rad_s", "w_over_gamma_c",
    "gamma_c_rad_s", "chi_x_rad_s", "w_rad_s", "gamma_p_rad_s", "gamma_d_rad_s",
    "gamma_s_rad_s",
)
OUTPUT_COLUMNS = (
    "intensity", "intensity_per_N2", "g2", "n_u", "n_d", "n_s", "c_z", "p_z", "r_z",
    "linewidth_rad_s", "frequency_rad_s", "linewidth_over_gamma_c", "pulling_normalized",
    "wp_x", "omega_shift_rad_s", "threshold_case", "threshold_W_rad_s", "lasing_predicted",
    "lasing", "power_W",
)
TRAILER_COLUMNS = ("status", "error", "diagnostics", "version", "hash")


class SweepError(ValueError):
    pass


class RegimeError(RuntimeError):
    pass


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int
    log: bool = False

    def __post_init__(self):
        if self.name not in AXES:
            raise SweepError(f"unknown axis {self.name!r}; choose from {AXES}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise SweepError("grid bounds must be finite")
        if self.n < 1:
            raise SweepError("grid needs at least one point")
        if self.log and (self.lo <= 0 or self.hi <= 0):
            raise SweepError("log grid needs positive bounds")

    @classmethod
    def parse(cls, text: str) -> "Axis":
        parts = text.split(":")
        if len(parts) not in (4, 5) or (len(parts) == 5 and parts[4] not in ("log", "lin")):
            raise SweepError(f"sweep must be axis:lo:hi:n[:log], got {text!r}")
        try:
            lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as exc:
            raise SweepError(f"bad number in sweep {text!r}") from exc
        return cls(parts[0], lo, hi, n, len(parts) == 5 and parts[4] == "log")

    def values(self) -> list[float]:
        if self.n == 1:
            return [self.lo]
        g = np.geomspace(self.lo, self.hi, self.n) if self.log else np.linspace(self.lo, self.hi, self.n)
        if self.name == "N":
            return [int(round(v)) for v in g]
        return [float(v) for v in g]


@dataclass(frozen=True)
class SweepSpec:
    engine: str
    axes: tuple[Axis, ...]
    rates: pm.EffectiveRates
    fixed: tuple[tuple[str, float], ...] = ()
    outputs: tuple[str, ...] = ()
    kappa_x: float | None = None  # rad/s
    unit_rad_s: float = 1.0
    series: str = ""

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise SweepError(f"unknown engine {self.engine!r}; choose from {ENGINES}")
        outs = self.outputs or _DEFAULT_OUTPUTS[self.engine]
        bad = set(outs) - _SUPPORTED[self.engine]
        if bad:
            raise SweepError(f"engine {self.engine} cannot produce {sorted(bad)}")
        object.__setattr__(self, "outputs", tuple(outs))
        if self.engine.startswith("exact") and self.rates.has_single_particle:
            raise SweepError("exact engines need all single-particle rates to be zero")
        if self.engine == "oracle":
            for N in self._values_of("N"):
                if N > 3:
                    raise SweepError("oracle engine supports N <= 3 only")
        names = [a.name for a in self.axes] + [k for k, _ in self.fixed]
        if len(set(names)) != len(names):
            raise SweepError(f"axis given twice: {names}")

    def _values_of(self, name):
        for a in self.axes:
            if a.name == name:
                return a.values()
        for k, v in self.fixed:
            if k == name:
                return [v]
        return [self.rates.N] if name == "N" else []

    def points(self) -> list[pm.EffectiveRates]:
        grids = [a.values() for a in self.axes]
        out = []
        for combo in product(*grids) if grids else [()]:
            assign = dict(self.fixed)
            assign.update({a.name: v for a, v in zip(self.axes, combo)})
            out.append(resolve(self.rates, assign))
        return out


def resolve(base: pm.EffectiveRates, assign: dict) -> pm.EffectiveRates:
    """Apply axis values to ``base`` (relative drive axes last)."""
    r = base
    if "N" in assign:
        r = r.with_(N=int(assign["N"]))
    if "W" in assign:
        r = r.with_(W=float(assign["W"]))
    if "W_rel" in assign:
        r = r.with_(W=float(assign["W_rel"]) * r.Gamma_c)
    if "chi_x" in assign:
        r = r.with_(chi_x=float(assign["chi_x"]))
    if "chi_x_rel" in assign:
        r = r.with_(chi_x=float(assign["chi_x_rel"]) * r.Gamma_c / r.N)
    if "omega" in assign:
        r = r.with_(Omega=float(assign["omega"]))
    if "omega_rel" in assign:
        r = r.with_(Omega=float(assign["omega_rel"]) * r.omega_unit)
    if "omega_ngc" in assign:
        r = r.with_(Omega=float(assign["omega_ngc"]) * r.N * r.Gamma_c)
    if r.Omega is None:
        raise SweepError("drive strength not set; add an omega axis or fixed value")
    return r


# --- engines -----------------------------------------------------------------


def _eval_exact_su3(r: pm.EffectiveRates, outputs, kappa_x, unit):
    from . import liouvillian as lv
    from . import solver as so

    out, diag = {}, {}
    st = so.steady_state(lv.assemble_su3(r.N, r.Omega, r.Gamma_c, r.W, r.chi_x, k=0))
    ob = so.observables(st)
    diag["steady_state"] = st.diagnostics
    out.update(intensity=ob.intensity, intensity_per_N2=ob.intensity / r.N**2, g2=ob.g2)
    if "populations" in outputs:
        out.update(n_u=ob.n_u, n_d=ob.n_d, n_s=ob.n_s, c_z=(ob.n_u - ob.n_d) / r.N,
                   p_z=(ob.n_u - ob.n_s) / r.N, r_z=(ob.n_d - ob.n_s) / r.N)
    if "linewidth" in outputs:
        ev = so.slowest_decay_eigenvalue(assemble_k1(r))
        out.update(linewidth_rad_s=ev.linewidth * unit, frequency_rad_s=ev.frequency * unit,
                   linewidth_over_gamma_c=ev.linewidth / r.Gamma_c)
        diag["eigen"] = {k: v for k, v in ev.diagnostics.items() if k != "candidates"}
    if "pulling" in outputs:
        pr = so.cavity_pulling(r.N, r.Omega, r.W, r.Gamma_c, method="perturbative")
        out["pulling_normalized"] = pr.normalized
        if kappa_x:
            out["wp_x"] = pr.wp(r.Gamma_c * unit, kappa_x)
    return out, diag


def assemble_k1(r):
    from . import liouvillian as lv

    return lv.assemble_su3(r.N, r.Omega, r.Gamma_c, r.W, r.chi_x, k=1)


def _eval_exact_su2(r, outputs, kappa_x, unit):
    from . import liouvillian as lv
    from . import solver as so

    st = so.steady_state(lv.assemble_su2(r.N, r.W, r.Gamma_c))
    ob = so.observables(st)
    out = dict(intensity=ob.intensity, intensity_per_N2=ob.intensity / r.N**2, g2=ob.g2)
    if "populations" in outputs:
        out.update(n_u=ob.n_u, n_d=ob.n_d, c_z=(ob.n_u - ob.n_d) / r.N)
    return out, {"steady_state": st.diagnostics}


def _eval_meanfield(r, outputs, kappa_x, unit):
    from . import meanfield as mf

    out, diag = {}, {}
    if "thresholds" in outputs:
        rep = mf.stability_thresholds(r.N, r.W, r.Gamma_c, r.Omega)
        out.update(threshold_case=rep.case, threshold_W_rad_s=rep.threshold * unit,
                   lasing_predicted=rep.lasing)
    s = mf.mf_steady_state(r, r.chi_x)
    diag["steady_state"] = s.diagnostics
    out.update(intensity=s.intensity, intensity_per_N2=s.intensity_per_N2, lasing=s.lasing)
    if "populations" in outputs:
        n_u, n_d, n_s = s.populations
        out.update(n_u=n_u * r.N, n_d=n_d * r.N, n_s=n_s * r.N, c_z=s.c_z, p_z=s.p_z, r_z=s.r_z)
    if "frequency" in outputs:
        out["omega_shift_rad_s"] = s.omega_shift * unit
    if "power" in outputs:
        out["power_W"] = pm.output_power(s.intensity, r.Gamma_c * unit)
    if s.lasing and "linewidth" in outputs:
        pd = mf.phase_diffusion_linewidth(s)
        out.update(linewidth_rad_s=pd.linewidth * unit, linewidth_over_gamma_c=pd.linewidth / r.Gamma_c)
        diag["goldstone_over_NGc"] = abs(pd.goldstone) / (r.N * r.Gamma_c)
    if s.lasing and "pulling" in outputs:
        pl = mf.mf_pulling(r.with_(chi_x=0.0), kappa_x=None if kappa_x is None else kappa_x / unit)
        out["pulling_normalized"] = -pl.slope
        if kappa_x:
            out["wp_x"] = pl.wp
        diag["frequency_decomposition_error"] = pl.decomposition_error
    return out, diag


def _eval_cumulant(r, outputs, kappa_x, unit):
    from . import cumulant as cu

    res = cu.cumulant_steady_state(r)
    m = res.moments
    out = dict(intensity=m.intensity, intensity_per_N2=m.intensity / r.N**2)
    if "populations" in outputs:
        n_u, n_d, n_s = m.populations
        cz, pz, rz = m.inversions
        out.update(n_u=n_u * r.N, n_d=n_d * r.N, n_s=n_s * r.N, c_z=cz, p_z=pz, r_z=rz)
    if "power" in outputs:
        out["power_W"] = pm.output_power(m.intensity, r.Gamma_c * unit)
    d = {k: v for k, v in res.diagnostics.items() if k != "history"}
    d["steps"] = len(res.diagnostics["history"])
    return out, {"cumulant": d}


def _eval_oracle(r, outputs, kappa_x, unit):
    from . import bruteforce as bf

    L = bf.brute_force_liouvillian(r.N, r.Omega, r.Gamma_c, r.W, r.chi_x, r.gamma_d,
                                   r.gamma_s, r.w, r.gamma_p)
    rho = bf.steady_state(L, r.N, symmetric=not r.has_single_particle)
    ob = bf.observables(rho, r.N)
    out = dict(intensity=ob["intensity"], intensity_per_N2=ob["intensity"] / r.N**2, g2=ob["g2"])
    if "populations" in outputs:
        out.update(n_u=ob["n_u"], n_d=ob["n_d"], n_s=ob["n_s"], c_z=2 * ob["cz"] / r.N,
                   p_z=(ob["n_u"] - ob["n_s"]) / r.N, r_z=(ob["n_d"] - ob["n_s"]) / r.N)
    return out, {}


_EVAL = {
    "exact-su3": _eval_exact_su3, "exact-su2": _eval_exact_su2, "meanfield": _eval_meanfield,
    "cumulant": _eval_cumulant, "oracle": _eval_oracle,
}


# --- rows --------------------------------------------------------------------


def _clean(v):
    """JSON-safe scalar: numpy types unwrapped, non-finite floats become None."""
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, complex):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    return v


def row_hash(row: dict) -> str:
    body = {k: v for k, v in row.items() if k != "hash"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]


def evaluate_point(task: tuple) -> dict:
    """Compute one grid point; failures become error rows."""
    index, spec, r = task
    u = spec.unit_rad_s
    row = {
        "series": spec.series, "index": index, "engine": spec.engine, "N": r.N,
        "omega_rad_s": r.Omega * u,
        "omega_rel": r.Omega / r.omega_unit if r.omega_unit > 0 else None,
        "W_rad_s": r.W * u, "w_over_gamma_c": r.W / r.Gamma_c if r.Gamma_c else None,
        "gamma_c_rad_s": r.Gamma_c * u, "chi_x_rad_s": r.chi_x * u, "w_rad_s": r.w * u,
        "gamma_p_rad_s": r.gamma_p * u, "gamma_d_rad_s": r.gamma_d * u,
        "gamma_s_rad_s": r.gamma_s * u,
    }
    try:
        out, diag = _EVAL[spec.engine](r, spec.outputs, spec.kappa_x, u)
        row.update(out)
        row.update(status="ok", error=None, diagnostics=diag)
    except Exception as exc:  # every failure is recorded in the row
        row.update(status="error", error=f"{type(exc).__name__}: {exc}", diagnostics={})
    row["version"] = __version__
    row = _clean(row)
    row["hash"] = row_hash(row)
    return row


def run_sweep(specs: SweepSpec | list[SweepSpec], workers: int = 1) -> list[dict]:
    """Evaluate every grid point of every spec; rows come back in grid order."""
    if isinstance(specs, SweepSpec):
        specs = [specs]
    tasks, i = [], 0
    for spec in specs:
        for r in spec.points():
            tasks.append((i, spec, r))
            i += 1
    log.info("%d points, %d worker(s)", len(tasks), workers)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate_point, tasks))
    else:
        rows = []
        for t in tasks:
            rows.append(evaluate_point(t))
            log.info("point %d/%d %s", t[0] + 1, len(tasks), rows[-1]["status"])
    return sorted(rows, key=lambda r: r["index"])


# --- output -----------------------------------------------------------------


def columns_for(rows: list[dict]) -> list[str]:
    present = set().union(*(r.keys() for r in rows)) if rows else set()
    extra = sorted(present - set(INPUT_COLUMNS) - set(OUTPUT_COLUMNS) - set(TRAILER_COLUMNS))
    outs = [c for c in OUTPUT_COLUMNS if c in present]
    return list(INPUT_COLUMNS) + outs + extra + list(TRAILER_COLUMNS)


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def emit(rows: list[dict], fmt: str = "csv", path: str | Path | None = None) -> str:
    """Serialise rows; writes to ``path`` when given and returns the text."""
    if fmt == "json":
        text = json.dumps(rows, indent=1, sort_keys=True) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = columns_for(rows)
        w.writerow(cols)
        for r in rows:
            w.writerow([_csv_cell(r.get(c)) for c in cols])
        text = buf.getvalue()
    else:
        raise SweepError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def load_rows(path: str | Path) -> list[dict]:
    return json.loads(Path(path).read_text())


# --- fits and crossings ----------------------------------------------------------


def fit_command(rows: list[dict], column: str, model: str = "thermo", x: str = "N",
                group_by: str | None = None) -> list[dict]:
    """Fit ``column`` against ``x`` within each group of rows.

    ``thermo`` is ``X + Y/x + Z/x^2`` (``X`` is the large-``x`` limit);
    ``linear`` is ``X + Y x``.
    """
    groups: dict = {}
    for r in rows:
        if r.get("status") != "ok" or r.get(column) is None:
            continue
        key = r.get(group_by) if group_by else None
        groups.setdefault(key, []).append((float(r[x]), float(r[column])))
    results = []
    for key, pts in sorted(groups.items(), key=lambda kv: (kv[0] is None, kv[0])):
        xs, ys = np.array([p[0] for p in pts]), np.array([p[1] for p in pts])
        if model == "thermo":
            A = np.stack([np.ones_like(xs), 1 / xs, 1 / xs**2], axis=1)
        elif model == "linear":
            A = np.stack([np.ones_like(xs), xs], axis=1)
        else:
            raise SweepError(f"unknown fit model {model!r}")
        if len(pts) < A.shape[1] or np.linalg.matrix_rank(A) < A.shape[1]:
            raise SweepError(f"rank-deficient fit for group {key!r} ({len(pts)} points)")
        coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
        resid = float(np.sqrt(np.mean((A @ coef - ys) ** 2)))
        names = ("X", "Y", "Z")[: len(coef)]
        res = {"column": column, "model": model, "x": x, "residual": resid}
        if group_by:
            res[group_by] = key
        res.update({n: float(c) for n, c in zip(names, coef)})
        results.append(res)
    return results


def zero_crossings(rows: list[dict], column: str, x: str, group_by: str | None = None) -> list[dict]:
    """Linear interpolation of sign changes of ``column`` along ``x``."""
    groups: dict = {}
    for r in rows:
        if r.get("status") == "ok" and r.get(column) is not None and r.get(x) is not None:
            groups.setdefault(r.get(group_by) if group_by else None, []).append(
                (float(r[x]), float(r[column])))
    out = []
    for key, pts in groups.items():
        pts.sort()
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if y0 == 0 or y0 * y1 < 0:
                xc = x0 if y0 == 0 else x0 - y0 * (x1 - x0) / (y1 - y0)
                rec = {"column": column, "x": x, "crossing": xc}
                if group_by:
                    rec[group_by] = key
                out.append(rec)
    return out


# --- presets and config -------------------------------------------------------


def _exact_rates(W=15.0, N=60):
    return pm.EffectiveRates(Gamma_c=1.0, W=W, N=N)


def preset(name: str) -> list[SweepSpec]:
    if name == "fig2":
        base = _exact_rates(N=60)
        ax = (Axis("W_rel", 0.1, 100.0, 31, log=True),)
        fixed = (("omega_ngc", 1.9),)
        return [SweepSpec("exact-su2", ax, base, fixed, ("intensity", "g2"), series="su2"),
                SweepSpec("exact-su3", ax, base, fixed, ("intensity", "g2"), series="su3")]
    if name == "fig3":
        ax = (Axis("omega_rel", 0.05, 1.2, 24),)
        return [SweepSpec("exact-su3", ax, _exact_rates(N=N), (("N", N),),
                          ("intensity", "g2", "populations", "linewidth", "pulling"),
                          series=f"N={N}") for N in (20, 30, 40, 60)]
    if name == "figS3":
        base = pm.barium_defaults(15.0, N=10**6)
        om = Axis("omega", 240.0, 280.0, 41)
        chi = Axis("chi_x_rel", -1e-2, 1e-2, 5)
        return [SweepSpec("meanfield", (om, chi), base, (), ("frequency", "populations"),
                          series="frequency"),
                SweepSpec("meanfield", (om,), base, (), ("pulling", "populations"),
                          kappa_x=2 * math.pi * 1e5, series="pulling")]
    raise SweepError(f"unknown preset {name!r}; choose fig2, fig3 or figS3")


def spec_from_config(path: str | Path) -> tuple[list[SweepSpec], pm.PhysicalParams | None]:
    """Build a sweep from an INI file.

    ``[sweep]`` holds ``engine``, ``sweep`` (and optionally ``sweep2``),
    ``outputs``, ``unit_rad_s``, ``kappa_x_hz`` and ``series``; ``[fixed]``
    pins axis values; rates come from ``[rates]`` or are derived from
    ``[physical]``.
    """
    try:
        cfg = pm.load_config(path)
    except (configparser.Error, OSError) as exc:
        raise SweepError(f"cannot read config {path}: {exc}") from exc
    phys = pm.physical_from_config(cfg) if "physical" in cfg else None
    if "rates" not in cfg and phys is None:
        raise SweepError("config needs a [rates] or [physical] section")
    rates = pm.rates_from_config(cfg)
    sw = cfg.get("sweep", {})
    axes = tuple(Axis.parse(sw[k]) for k in ("sweep", "sweep2") if k in sw)
    fixed = tuple((k, float(v)) for k, v in cfg.get("fixed", {}).items())
    for k, _ in fixed:
        if k not in AXES:
            raise SweepError(f"unknown fixed axis {k!r}")
    outs = tuple(o.strip() for o in sw.get("outputs", "").split(",") if o.strip())
    kx = float(sw["kappa_x_hz"]) * 2 * math.pi if "kappa_x_hz" in sw else None
    spec = SweepSpec(sw.get("engine", "meanfield"), axes, rates, fixed, outs, kx,
                     float(sw.get("unit_rad_s", 1.0)), sw.get("series", ""))
    return [spec], phys


# --- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sweep", description=__doc__.split("\n")[0])
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=("fig2", "fig3", "figS3"))
    src.add_argument("--config", type=Path)
    p.add_argument("--engine", choices=ENGINES,
                   help="engine for an ad hoc sweep, or a filter on preset/config specs")
    p.add_argument("--sweep", action="append", default=[], metavar="AXIS:LO:HI:N[:log]")
    p.add_argument("--fixed", action="append", default=[], metavar="AXIS=VALUE",
                   help="pin an axis value (ad hoc sweeps)")
    p.add_argument("--rates", default=None, metavar="K=V,...",
                   help="rates for ad hoc sweeps, in one consistent unit")
    p.add_argument("--outputs", default=None, help="comma-separated outputs")
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--kappa-x", type=float, default=None, metavar="HZ",
                   help="x-cavity linewidth in Hz, converted to rad/s for wp_x")
    p.add_argument("--check-regime", action="store_true",
                   help="validate the strong inequalities of [physical] before running")
    p.add_argument("--fit", default=None, metavar="COLUMN[:MODEL[:X]]")
    p.add_argument("--zero-crossing", default=None, metavar="COLUMN[:X]")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _parse_kv(text: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        k, _, v = item.partition("=")
        if not _:
            raise SweepError(f"expected key=value, got {item!r}")
        out[k.strip()] = int(float(v)) if k.strip() == "N" else float(v)
    return out


def _specs_from_args(a) -> tuple[list[SweepSpec], pm.PhysicalParams | None]:
    phys = None
    if a.preset:
        specs = preset(a.preset)
    elif a.config:
        specs, phys = spec_from_config(a.config)
    else:
        if not a.engine:
            raise SweepError("give --preset, --config or --engine")
        rates = pm.EffectiveRates(**_parse_kv(a.rates or "Gamma_c=1,W=15,N=20"))
        fixed = tuple((k, float(v)) for k, v in _parse_kv(",".join(a.fixed)).items())
        specs = [SweepSpec(a.engine, (), rates, fixed)]
    if a.sweep:
        specs = [replace(s, axes=tuple(Axis.parse(t) for t in a.sweep)) for s in specs]
    if a.outputs:
        outs = tuple(o.strip() for o in a.outputs.split(","))
        specs = [replace(s, outputs=outs) for s in specs]
    if a.engine and (a.preset or a.config):
        specs = [s for s in specs if s.engine == a.engine]
        if not specs:
            raise SweepError(f"no part of the selection uses engine {a.engine}")
    if a.kappa_x is not None:
        if not a.kappa_x > 0:
            raise SweepError("--kappa-x must be positive")
        specs = [replace(s, kappa_x=2 * math.pi * a.kappa_x) for s in specs]
    return specs, phys


def main(argv: list[str] | None = None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        specs, phys = _specs_from_args(a)
        if a.check_regime:
            if phys is None:
                raise SweepError("--check-regime needs a config with a [physical] section")
            report = pm.validate_regime(phys)
            print(report.to_json(indent=1), file=sys.stderr)
            if not report.ok:
                print(f"regime check failed: {', '.join(report.failed())}", file=sys.stderr)
                return 3
        rows = run_sweep(specs, workers=max(1, a.workers))
    except (SweepError, pm.InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = emit(rows, a.format, a.out)
    if a.out is None:
        sys.stdout.write(text)
    extras = {}
    if a.fit:
        col, model, x = (a.fit.split(":") + ["thermo", "N"])[:3]
        group = "omega_rel" if x == "N" else None
        try:
            extras["fits"] = fit_command(rows, col, model, x, group)
        except SweepError as exc:
            print(f"fit failed: {exc}", file=sys.stderr)
            return 2
    if a.zero_crossing:
        col, x = (a.zero_crossing.split(":") + ["omega_rel"])[:2]
        extras["zero_crossings"] = zero_crossings(rows, col, x, "series")
    if extras:
        blob = json.dumps(extras, indent=1, sort_keys=True)
        print(blob, file=sys.stderr)
        if a.out is not None:
            Path(str(a.out) + ".analysis.json").write_text(blob + "\n")
    failed = sum(r["status"] != "ok" for r in rows)
    if failed:
        print(f"{failed} of {len(rows)} points failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
