"""Physical parameters, derived model rates and regime checks.

All rates share one angular-frequency unit chosen by the caller (the barium
defaults use s^-1).  Nothing here rescales; the engines normalise internally.
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

HBAR = 1.054571817e-34  # J s
SPEED_OF_LIGHT = 299_792_458.0  # m/s
BARIUM_CLOCK_WAVELENGTH = 1085e-9  # m

# barium clock-transition numbers, angular s^-1
BA_GAMMA_C = 0.23e-3
BA_GAMMA_D = 2.3e-3
BA_GAMMA_S = 2.3e-3
BA_W_OVER_PUMP = 10.0  # w = 10 W, i.e. W/w = 0.1
# table values are w = 34.5 mHz, gamma_p = 41.5 mHz; keep that ratio so the
# table entry is reproduced exactly at W = 15 Gamma_c
BA_GAMMA_P_OVER_W = 41.5 / 34.5

DEFAULT_MARGIN = 10.0


class InvalidParameterError(ValueError):
    """A parameter set violates a hard precondition."""


@dataclass(frozen=True)
class PhysicalParams:
    g_x: float
    g_z: float
    kappa_x: float
    kappa_z: float
    Delta_x: float = 0.0
    Delta_z: float = 0.0
    Delta_c: float = 0.0
    Omega: float = 0.0
    Omega_p: float = 0.0
    gamma_c: float = 0.0
    gamma_b: float = 0.0
    gamma_d: float = 0.0
    gamma_s: float = 0.0
    N: int = 1

    def __post_init__(self):
        if not (self.kappa_x > 0 and self.kappa_z > 0):
            raise InvalidParameterError("kappa_x and kappa_z must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameterError("N must be a positive integer")
        for name in ("gamma_c", "gamma_b", "gamma_d", "gamma_s"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be non-negative")
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise InvalidParameterError(f"{f.name} is not finite")


@dataclass(frozen=True)
class EffectiveRates:
    """Rates entering the reduced master equation.

    ``Omega`` may be left as ``None`` by parameter presets that sweep it.
    """

    Gamma_c: float
    W: float
    chi_x: float = 0.0
    chi_z: float = 0.0
    w: float = 0.0
    gamma_p: float = 0.0
    gamma_d: float = 0.0
    gamma_s: float = 0.0
    Omega: float | None = None
    N: int = 1

    def __post_init__(self):
        for name in ("Gamma_c", "W", "w", "gamma_p", "gamma_d", "gamma_s"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be finite and >= 0, got {v!r}")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameterError("N must be a positive integer")

    @property
    def has_single_particle(self) -> bool:
        return any((self.w, self.gamma_p, self.gamma_d, self.gamma_s))

    @property
    def omega_unit(self) -> float:
        """``N sqrt(W Gamma_c)``, the natural drive scale."""
        return self.N * math.sqrt(self.W * self.Gamma_c)

    def with_(self, **kw) -> "EffectiveRates":
        return replace(self, **kw)

    def scaled(self, factor: float) -> "EffectiveRates":
        """Every rate multiplied by ``factor`` (N untouched)."""
        kw = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "N"}
        kw = {k: (None if v is None else v * factor) for k, v in kw.items()}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    left: float
    right: float
    satisfied: bool
    margin: float


@dataclass(frozen=True)
class RegimeReport:
    checks: tuple[RegimeCheck, ...]
    threshold: float = DEFAULT_MARGIN

    @property
    def ok(self) -> bool:
        return all(c.satisfied for c in self.checks)

    def __getitem__(self, name: str) -> RegimeCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.satisfied]

    def to_json(self, **kw) -> str:
        def enc(x):
            return None if isinstance(x, float) and math.isinf(x) else x

        rows = [{k: enc(v) for k, v in asdict(c).items()} for c in self.checks]
        return json.dumps({"threshold": self.threshold, "ok": self.ok, "checks": rows}, **kw)


def _raman_denominator(p: PhysicalParams) -> float:
    return 4 * p.Delta_c**2 + (p.gamma_c + p.gamma_b) ** 2


def derive_effective_rates(p: PhysicalParams) -> EffectiveRates:
    if p.kappa_x <= 0 or p.kappa_z <= 0:
        raise InvalidParameterError("kappa_x and kappa_z must be positive")
    den_x = 4 * p.Delta_x**2 + p.kappa_x**2
    Gamma_c = p.kappa_x * p.g_x**2 / den_x
    chi_x = p.Delta_x * p.g_x**2 / den_x

    # z-cavity Raman coupling squared, shared by W and chi_z
    lam = (2 * p.Delta_c**2 + 0.5 * (p.gamma_c + p.gamma_b) ** 2) ** 2
    num_z = p.Delta_c**2 * p.g_z**2 * p.Omega_p**2
    den_z = lam * (4 * p.Delta_z**2 + p.kappa_z**2)
    W = p.kappa_z * num_z / den_z if num_z else 0.0
    chi_z = p.Delta_z * num_z / den_z if num_z else 0.0

    den_c = _raman_denominator(p)
    if den_c > 0:
        w = p.gamma_c * p.Omega_p**2 / den_c
        gamma_p = p.gamma_b * p.Omega_p**2 / den_c
    else:
        w = gamma_p = 0.0
    return EffectiveRates(
        Gamma_c=Gamma_c, W=W, chi_x=chi_x, chi_z=chi_z, w=w, gamma_p=gamma_p,
        gamma_d=p.gamma_d, gamma_s=p.gamma_s, Omega=p.Omega, N=int(p.N),
    )


@dataclass(frozen=True)
class Cooperativities:
    C_x: float
    C_z: float
    C_z_exact: float


def cooperativities(p: PhysicalParams) -> Cooperativities:
    if p.gamma_d <= 0 or p.gamma_c <= 0:
        raise InvalidParameterError("gamma_d and gamma_c must be positive")
    C_x = p.g_x**2 / (p.gamma_d * p.kappa_x)
    C_z = p.g_z**2 / (p.gamma_c * p.kappa_z)
    bracket = p.Delta_c**2 / (p.Delta_c**2 + 0.25 * (p.gamma_c + p.gamma_b) ** 2)
    return Cooperativities(C_x, C_z, C_z * bracket)


def rate_cooperativities(r: EffectiveRates) -> tuple[float, float]:
    """``(Gamma_c/gamma_d, W/w)``, the same ratios expressed through model rates."""
    if r.gamma_d <= 0 or r.w <= 0:
        raise InvalidParameterError("gamma_d and w must be positive")
    return r.Gamma_c / r.gamma_d, r.W / r.w


def _check(name: str, left: float, right: float, threshold: float) -> RegimeCheck:
    left, right = abs(left), abs(right)
    if right == 0:
        margin = math.inf if left > 0 else 1.0
    else:
        margin = left / right
    return RegimeCheck(name, left, right, margin > threshold, margin)


def validate_regime(p: PhysicalParams, threshold: float = DEFAULT_MARGIN) -> RegimeReport:
    """Evaluate every strong inequality the reduced model relies on.

    A check passes when ``left / right`` exceeds ``threshold``.
    """
    r = derive_effective_rates(p)
    sqrtN = math.sqrt(p.N)
    raman = sqrtN * abs(p.Delta_c) * p.g_z * p.Omega_p / (
        2 * p.Delta_c**2 + 0.5 * (p.gamma_c + p.gamma_b) ** 2
    ) if (p.Delta_c or p.gamma_c or p.gamma_b) else math.inf
    single = {"gamma_d": r.gamma_d, "gamma_s": r.gamma_s, "w": r.w, "gamma_p": r.gamma_p}
    cz_approx = p.g_z**2 / (p.gamma_c * p.kappa_z) if p.gamma_c > 0 else 0.0

    checks = [
        _check("delta_c >> sqrt(N) g_z", p.Delta_c, sqrtN * p.g_z, threshold),
        _check("delta_c >> omega_p", p.Delta_c, p.Omega_p, threshold),
        _check("kappa_x >> sqrt(N) g_x", p.kappa_x, sqrtN * p.g_x, threshold),
    ]
    checks += [_check(f"kappa_x >> {k}", p.kappa_x, v, threshold) for k, v in single.items()]
    checks.append(_check("kappa_z >> raman coupling", p.kappa_z, raman, threshold))
    checks += [_check(f"kappa_z >> {k}", p.kappa_z, v, threshold) for k, v in single.items()]
    checks.append(
        _check("delta_c >> N C_z gamma_c / 2", p.Delta_c, p.N * cz_approx * p.gamma_c / 2, threshold)
    )
    return RegimeReport(tuple(checks), threshold)


def barium_defaults(W_over_Gamma_c: float = 15.0, N: int = 1) -> EffectiveRates:
    """Barium clock-transition rates in angular s^-1; ``Omega`` is left unset."""
    if not W_over_Gamma_c > 0:
        raise InvalidParameterError("W/Gamma_c must be positive")
    W = W_over_Gamma_c * BA_GAMMA_C
    w = BA_W_OVER_PUMP * W
    return EffectiveRates(
        Gamma_c=BA_GAMMA_C, W=W, w=w, gamma_p=BA_GAMMA_P_OVER_W * w,
        gamma_d=BA_GAMMA_D, gamma_s=BA_GAMMA_S, Omega=None, N=int(N),
    )


def clock_angular_frequency(wavelength: float = BARIUM_CLOCK_WAVELENGTH) -> float:
    return 2 * math.pi * SPEED_OF_LIGHT / wavelength


def output_power(intensity: float, Gamma_c: float, wavelength: float = BARIUM_CLOCK_WAVELENGTH) -> float:
    """``hbar * omega * Gamma_c * <C+C->`` in watts (Gamma_c in s^-1)."""
    return HBAR * clock_angular_frequency(wavelength) * Gamma_c * intensity


# --- config ingestion -------------------------------------------------------

_PHYS_FIELDS = {f.name: f for f in fields(PhysicalParams)}
_RATE_FIELDS = {f.name: f for f in fields(EffectiveRates)}


def _coerce(name: str, raw: str):
    if name == "N":
        v = float(raw)
        if v != int(v):
            raise InvalidParameterError(f"N must be an integer, got {raw!r}")
        return int(v)
    return float(raw)


def load_config(path: str | Path) -> dict[str, dict[str, object]]:
    """Read an INI-style file into ``{section: {key: value}}``.

    Keys in the ``physical`` section map onto :class:`PhysicalParams`, keys in
    ``rates`` onto :class:`EffectiveRates`; other sections are returned raw.
    """
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep case: Gamma_c vs gamma_c are different fields
    with open(path) as fh:
        cp.read_file(fh)
    out: dict[str, dict[str, object]] = {}
    for sec in cp.sections():
        items = dict(cp.items(sec))
        if sec in ("physical", "rates"):
            known = _PHYS_FIELDS if sec == "physical" else _RATE_FIELDS
            unknown = set(items) - set(known)
            if unknown:
                raise InvalidParameterError(f"unknown keys in [{sec}]: {sorted(unknown)}")
            items = {k: _coerce(k, v) for k, v in items.items()}
        out[sec] = items
    return out


def physical_from_config(cfg: dict) -> PhysicalParams:
    return PhysicalParams(**cfg["physical"])


def rates_from_config(cfg: dict) -> EffectiveRates:
    if "rates" in cfg:
        return EffectiveRates(**cfg["rates"])
    return derive_effective_rates(physical_from_config(cfg))


__all__ = [
    "HBAR", "PhysicalParams", "EffectiveRates", "RegimeReport", "RegimeCheck",
    "Cooperativities", "InvalidParameterError", "derive_effective_rates",
    "cooperativities", "rate_cooperativities", "validate_regime", "barium_defaults",
    "output_power", "clock_angular_frequency", "load_config", "physical_from_config",
    "rates_from_config",
]
