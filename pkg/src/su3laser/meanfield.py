"""Single-atom mean-field engine for macroscopic N.

Levels are ordered ``(u, d, s)``.  The normalised coherences are
``c = <|d><u|> = rho[u, d]``, ``p = <|s><u|> = rho[u, s]`` and
``r = <|s><d|> = rho[d, s]``; inversions are ``c_z = rho_uu - rho_dd``,
``p_z = rho_uu - rho_ss`` and ``r_z = rho_dd - rho_ss``.

Internally every rate is divided by ``Gamma_c`` so that the nonlinear solves
see O(1) numbers; results are converted back before they are returned.
Liouville vectors are row-major flattenings of the 3x3 matrix.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as opt

from .params import EffectiveRates

U, D, S = 0, 1, 2
LASING_FLOOR = 1e-6
GOLDSTONE_TOL = 1e-8
RATIO_LIMIT = 1e6
REGULARIZATION = 1e-6
DEFAULT_SEED = (0.3, 0.3j)
# tried in order when the default seed lands on the non-lasing branch
RETRY_SEEDS = ((0.45, 0.1j), (0.4, 0.02j), (0.2, 0.05j), (0.1, 0.3j), (0.45, 0.4j))


class MeanFieldError(RuntimeError):
    pass


class ConvergenceError(MeanFieldError):
    def __init__(self, msg: str, residual: float = float("nan")):
        super().__init__(msg)
        self.residual = residual


class NonLasingError(MeanFieldError):
    """The requested quantity needs a finite dipole."""


class DegeneratePointError(MeanFieldError):
    pass


class InconsistentSolutionError(MeanFieldError):
    """No Goldstone mode at a point reported as lasing."""


def _e(a: int, b: int) -> np.ndarray:
    m = np.zeros((3, 3))
    m[a, b] = 1.0
    return m


C_OP = _e(D, U)
P_OP = _e(S, U)
R_OP = _e(S, D)
_I3 = np.eye(3)
_TRACE_ROW = _I3.ravel()


def _lindblad(H: np.ndarray, jumps) -> np.ndarray:
    L = -1j * (np.kron(H, _I3) - np.kron(_I3, H.T))
    for J in jumps:
        JdJ = J.conj().T @ J
        L = L + np.kron(J, J.conj()) - 0.5 * np.kron(JdJ, _I3) - 0.5 * np.kron(_I3, JdJ.T)
    return L


def _unpack(rates: EffectiveRates, Omega=None, N=None):
    Om = rates.Omega if Omega is None else Omega
    if Om is None:
        raise ValueError("Omega must be set on the rates or passed explicitly")
    return (float(Om), rates.Gamma_c, rates.W, rates.gamma_d, rates.gamma_s, rates.w,
            rates.gamma_p, float(rates.N if N is None else N))


def mf_generator(c: complex, p: complex, omega_shift: float, rates: EffectiveRates,
                 chi_x: float | None = None) -> np.ndarray:
    """9x9 linear generator with ``(c, p)`` frozen into the Hamiltonian.

    ``omega_shift`` is the laser detuning from the dressed transition; it
    enters as an energy offset of ``|u>`` (rotating frame).
    """
    Om, Gc, W, gd, gs, w, gp, N = _unpack(rates)
    chi = rates.chi_x if chi_x is None else chi_x
    cc, pc = np.conj(c), np.conj(p)
    H = (0.5 * Om * (R_OP + R_OP.T)
         + 0.5j * N * Gc * (cc * C_OP - c * C_OP.T)
         + 0.5j * N * W * (p * P_OP.T - pc * P_OP)
         - N * chi * (cc * C_OP + c * C_OP.T)
         + omega_shift * (C_OP.T @ C_OP))
    jumps = [math.sqrt(gd) * C_OP, math.sqrt(gs) * P_OP, math.sqrt(w) * P_OP.T,
             math.sqrt(gp) * (P_OP @ P_OP.T)]
    return _lindblad(H, [J for J in jumps if J.any()])


def kernel_density(L: np.ndarray, refine: int = 8) -> np.ndarray:
    """Unit-trace Hermitian kernel of a 9x9 generator.

    One equation is traded for the trace condition.  Iterative refinement
    with residuals in extended precision keeps the result accurate when tiny
    single-particle rates leave the system nearly singular; the Goldstone
    eigenvalue downstream loses precision quadratically otherwise.
    """
    scale = float(np.abs(L).max()) or 1.0
    A = L.astype(complex)
    A[0] = _TRACE_ROW * scale
    b = np.zeros(9, complex)
    b[0] = scale
    x = np.linalg.solve(A, b).astype(np.clongdouble)
    A_ext = A.astype(np.clongdouble)
    for _ in range(refine):
        dx = np.linalg.solve(A, (b - A_ext @ x).astype(complex))
        x = x + dx
        if not np.abs(dx).max() > 1e-19 * np.abs(x).max():
            break
    x = x.astype(complex)
    rho = x.reshape(3, 3)
    rho = 0.5 * (rho + rho.conj().T)
    # root finders probe wild trial points; NaN propagates into their residual
    with np.errstate(invalid="ignore", divide="ignore"):
        return rho / np.trace(rho).real


@dataclass(frozen=True)
class MeanFieldState:
    c: complex
    p: complex
    r: complex
    c_z: float
    p_z: float
    r_z: float
    rho: np.ndarray = field(repr=False)
    rates: EffectiveRates
    chi_x: float = 0.0
    omega_shift: float = 0.0
    lasing: bool = True
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_rho(cls, rho: np.ndarray, rates: EffectiveRates, **kw) -> "MeanFieldState":
        rho = np.asarray(rho, dtype=complex)
        d = rho.diagonal().real
        return cls(complex(rho[U, D]), complex(rho[U, S]), complex(rho[D, S]),
                   float(d[U] - d[D]), float(d[U] - d[S]), float(d[D] - d[S]), rho, rates, **kw)

    @property
    def N(self) -> int:
        return self.rates.N

    @property
    def populations(self) -> tuple[float, float, float]:
        d = self.rho.diagonal().real
        return float(d[U]), float(d[D]), float(d[S])

    @property
    def intensity_per_N2(self) -> float:
        return abs(self.c) ** 2

    @property
    def intensity(self) -> float:
        """``<C+ C->`` at mean-field order, ``N^2 |c|^2``."""
        return self.N**2 * abs(self.c) ** 2

    def to_dict(self) -> dict:
        n_u, n_d, n_s = self.populations
        return {
            "intensity_per_N2": self.intensity_per_N2, "c": abs(self.c), "c_z": self.c_z,
            "p_z": self.p_z, "r_z": self.r_z, "n_u": n_u, "n_d": n_d, "n_s": n_s,
            "omega_shift": self.omega_shift, "lasing": self.lasing,
        }


# --- equations of motion -----------------------------------------------------


@dataclass(frozen=True)
class BlochDerivative:
    """Time derivatives of the six mean-field components."""

    c: complex
    p: complex
    r: complex
    c_z: float
    p_z: float
    r_z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c, self.p, self.r, self.c_z, self.p_z, self.r_z], dtype=complex)


def mf_rhs(s: MeanFieldState | np.ndarray, rates: EffectiveRates | None = None,
           chi_x: float | None = None, omega_shift: float | None = None) -> BlochDerivative:
    """Closed-form mean-field equations of motion.

    ``s`` may be a :class:`MeanFieldState` or a bare 3x3 density matrix (then
    ``rates`` is required).
    """
    if isinstance(s, MeanFieldState):
        rho = s.rho
        rates = rates or s.rates
        chi = s.chi_x if chi_x is None else chi_x
        dw = s.omega_shift if omega_shift is None else omega_shift
    else:
        rho = np.asarray(s, dtype=complex)
        chi = rates.chi_x if chi_x is None else chi_x
        dw = 0.0 if omega_shift is None else omega_shift
    Om, Gc, W, gd, gs, w, gp, N = _unpack(rates)
    c, p, r = rho[U, D], rho[U, S], rho[D, S]
    n_u, n_d, n_s = rho.diagonal().real
    cz, pz, rz = n_u - n_d, n_u - n_s, n_d - n_s
    cc, rc = np.conj(c), np.conj(r)

    dc = (-1j * N * chi * cz * c + 0.5j * Om * p + 0.5 * N * W * p * rc
          + (0.5 * N * Gc * cz - 0.5 * (gd + gs)) * c - 1j * dw * c)
    dp = (1j * N * chi * r * c + 0.5j * Om * c - 0.5 * N * W * p * pz - 0.5 * N * Gc * r * c
          - 0.5 * (gd + gs + w + gp) * p - 1j * dw * p)
    dr = (1j * N * chi * cc * p + 0.5j * Om * rz - 0.5 * N * W * p * cc + 0.5 * N * Gc * cc * p
          - 0.5 * (w + gp) * r)

    emit = N * Gc * abs(c) ** 2
    pump = N * W * abs(p) ** 2
    rabi = Om * r.imag
    dnu = -emit + pump - (gd + gs) * n_u + w * n_s
    dnd = emit - rabi + gd * n_u
    dns = -pump + rabi + gs * n_u - w * n_s
    return BlochDerivative(complex(dc), complex(dp), complex(dr),
                           float(dnu - dnd), float(dnu - dns), float(dnd - dns))


def mf_master_rhs(rho: np.ndarray, rates: EffectiveRates, chi_x: float | None = None,
                  omega_shift: float = 0.0) -> BlochDerivative:
    """Same derivatives obtained from the generator with ``(c, p)`` read off ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    L = mf_generator(rho[U, D], rho[U, S], omega_shift, rates, chi_x)
    drho = (L @ rho.ravel()).reshape(3, 3)
    d = drho.diagonal().real
    return BlochDerivative(complex(drho[U, D]), complex(drho[U, S]), complex(drho[D, S]),
                           float(d[U] - d[D]), float(d[U] - d[S]), float(d[D] - d[S]))


def mf_master_step(rho: np.ndarray, rates: EffectiveRates, dt: float,
                   chi_x: float | None = None, omega_shift: float = 0.0) -> np.ndarray:
    """One RK4 step of the nonlinear mean-field master equation."""
    def f(x):
        L = mf_generator(x[U, D], x[U, S], omega_shift, rates, chi_x)
        return (L @ x.ravel()).reshape(3, 3)

    rho = np.asarray(rho, dtype=complex)
    k1 = f(rho)
    k2 = f(rho + 0.5 * dt * k1)
    k3 = f(rho + 0.5 * dt * k2)
    k4 = f(rho + dt * k3)
    return rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


# --- self-consistent steady state ------------------------------------------


def regularized_rates(rates: EffectiveRates, eps: float = REGULARIZATION) -> EffectiveRates:
    """Add a weak incoherent repump ``w = eps N Gamma_c`` so the kernel is unique.

    Without any single-particle process the 3x3 generator has a degenerate
    kernel and the self-consistency map is ill-defined.
    """
    if rates.has_single_particle:
        return rates
    return rates.with_(w=eps * rates.N * rates.Gamma_c)


def _normalized(rates: EffectiveRates, chi: float) -> tuple[EffectiveRates, float, float]:
    scale = rates.Gamma_c if rates.Gamma_c > 0 else max(rates.W, 1.0)
    return rates.scaled(1.0 / scale), chi / scale, scale


def _polish(F, x, res, steps=3):
    """Extra Newton steps towards round-off.

    The Goldstone eigenvalue of ``M`` degrades like the square root of the
    residual when a slow population mode sits next to it, so tolerance-level
    convergence is not enough there.
    """
    for _ in range(steps):
        h = 1e-7 * np.maximum(1.0, np.abs(x))
        J = np.empty((x.size, x.size))
        for i in range(x.size):
            e = np.zeros(x.size)
            e[i] = h[i]
            J[:, i] = (F(x + e) - F(x - e)) / (2 * h[i])
        try:
            x_new = x - np.linalg.solve(J, F(x))
        except np.linalg.LinAlgError:
            break
        r_new = float(np.max(np.abs(F(x_new))))
        if not r_new < res:
            break
        x, res = x_new, r_new
    return x, res


def _solve_map(F, x0, tol, max_iter, damping, fp_map):
    sol = opt.root(F, x0, method="hybr", options={"xtol": 1e-14, "maxfev": 200 * (len(x0) + 1)})
    res = float(np.max(np.abs(F(sol.x))))
    if res < tol:
        return (*_polish(F, sol.x, res), "newton")
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        x = (1 - damping) * x + damping * fp_map(x)
    sol = opt.root(F, x, method="hybr", options={"xtol": 1e-14})
    res = float(np.max(np.abs(F(sol.x))))
    if res < tol:
        return (*_polish(F, sol.x, res), "fixed-point+newton")
    raise ConvergenceError(f"mean-field self-consistency did not converge (residual {res:.2e})", res)


def mf_steady_state(rates: EffectiveRates, chi_x: float | None = None, *,
                    seed: tuple[float, complex] | None = None, omega_seed: float | None = None,
                    tol: float = 1e-10, max_iter: int = 500, damping: float = 0.5,
                    regularize: bool = True) -> MeanFieldState:
    """Self-consistent mean-field steady state.

    With ``chi_x = 0`` the unknowns are ``c`` (real) and ``Im p``.  Otherwise
    the laser frequency is unknown too and the solve runs in the frame
    rotating with it; ``omega_shift`` of the result is ``omega - omega_d``.
    A solution with ``|c|`` below the lasing floor is reported with
    ``lasing=False``.

    The lasing and non-lasing branches can both be stable.  Without an
    explicit ``seed`` a non-lasing result triggers retries from
    ``RETRY_SEEDS``; a lasing root found that way is returned with
    ``diagnostics['bistable'] = True``.
    """
    chi = rates.chi_x if chi_x is None else float(chi_x)
    used = regularized_rates(rates) if regularize else rates
    nr, nchi, scale = _normalized(used, chi)

    def rho_of(c, p, dw=0.0, ch=0.0):
        return kernel_density(mf_generator(c, p, dw, nr, ch))

    def F0(x):
        rho = rho_of(x[0], 1j * x[1])
        return np.array([rho[U, D].real - x[0], rho[U, S].imag - x[1]])

    def G0(x):
        rho = rho_of(x[0], 1j * x[1])
        return np.array([rho[U, D].real, rho[U, S].imag])

    seeds = [seed] if seed is not None else [DEFAULT_SEED, *RETRY_SEEDS]
    found, first_err, bistable = None, None, False
    for sd in seeds:
        try:
            x, res, method = _solve_map(F0, [float(abs(sd[0])), abs(complex(sd[1]))], tol,
                                        max_iter, damping, G0)
        except ConvergenceError as exc:
            first_err = first_err or exc
            continue
        if abs(x[0]) >= LASING_FLOOR:
            bistable = found is not None
            found = (x, res, method)
            break
        found = found or (x, res, method)
    if found is None:
        raise first_err
    x, res, method = found
    c_sol, p_sol = x[0], 1j * x[1]
    if abs(c_sol) < LASING_FLOOR:
        c_sol, p_sol = 0.0, 0.0j
    diag = {"method": method, "residual": res, "scale": scale,
            "regularized_w": used.w if used is not rates else None, "bistable": bistable}

    if nchi == 0.0 or c_sol == 0.0:
        if c_sol < 0:
            c_sol, p_sol = -c_sol, -p_sol
        rho = rho_of(c_sol, p_sol)
        return MeanFieldState.from_rho(rho, used, chi_x=chi, omega_shift=0.0,
                                       lasing=abs(c_sol) >= LASING_FLOOR, diagnostics=diag)

    rho0 = rho_of(c_sol, p_sol)
    cz0 = (rho0[U, U] - rho0[D, D]).real
    dw0 = -nr.N * nchi * cz0 if omega_seed is None else omega_seed / scale

    def F1(x):
        rho = rho_of(x[0], x[1] + 1j * x[2], x[3], nchi)
        return np.array([rho[U, D].real - x[0], rho[U, D].imag,
                         rho[U, S].real - x[1], rho[U, S].imag - x[2]])

    def G1(x):
        rho = rho_of(x[0], x[1] + 1j * x[2], x[3], nchi)
        # frequency update from the phase drift of c
        return np.array([abs(rho[U, D]), rho[U, S].real, rho[U, S].imag,
                         x[3] + np.angle(rho[U, D]) if rho[U, D] != 0 else x[3]])

    x, res, method = _solve_map(F1, [c_sol, p_sol.real, p_sol.imag, dw0], tol, max_iter,
                                damping, G1)
    c1, p1, dw = x[0], x[1] + 1j * x[2], x[3]
    if c1 < 0:
        c1, p1 = -c1, -p1
    diag.update(method=method, residual=res)
    rho = rho_of(c1, p1, dw, nchi)
    return MeanFieldState.from_rho(rho, used, chi_x=chi, omega_shift=float(dw * scale),
                                   lasing=abs(c1) >= LASING_FLOOR, diagnostics=diag)


def frequency_decomposition(s: MeanFieldState) -> float:
    """Laser detuning predicted from the steady-state moments.

    Imaginary part of ``dc/dt / c`` without the frame term; at a true
    oscillatory steady state it equals ``s.omega_shift``.
    """
    if abs(s.c) < LASING_FLOOR:
        raise NonLasingError("frequency is undefined without a dipole")
    Om, Gc, W, *_rest, N = _unpack(s.rates)
    return float(-N * s.chi_x * s.c_z + 0.5 * Om * (s.p / s.c).real
                 + 0.5 * N * W * (s.p * np.conj(s.r) / s.c).imag)


# --- cavity pulling ---------------------------------------------------------


@dataclass(frozen=True)
class MFPulling:
    Omega: float
    slope: float
    chi_grid: np.ndarray
    shifts: np.ndarray
    c_z: float
    kappa_x: float | None = None
    decomposition_error: float = 0.0
    Gamma_c: float = 1.0

    @property
    def wp(self) -> float | None:
        """Pulling coefficient; ``chi_x = Gamma_c Delta_x / kappa_x`` links slope and detuning."""
        if self.kappa_x is None:
            return None
        return -self.slope * self.Gamma_c / self.kappa_x


def mf_pulling(rates: EffectiveRates, chi_grid=None, kappa_x: float | None = None,
               **solver_kw) -> MFPulling:
    """Linear fit of the laser detuning against ``chi_x`` at fixed drive."""
    base = mf_steady_state(rates, 0.0, **solver_kw)
    if not base.lasing:
        raise NonLasingError(f"no lasing at Omega={rates.Omega!r}; pulling undefined")
    if chi_grid is None:
        chi_grid = np.linspace(-1e-2, 1e-2, 5) * rates.Gamma_c / rates.N
    chi_grid = np.asarray(chi_grid, dtype=float)
    shifts, err = [], 0.0
    seed = (abs(base.c), base.p)
    for chi in chi_grid:
        st = mf_steady_state(rates, chi, seed=seed, **solver_kw)
        if not st.lasing:
            raise NonLasingError(f"lasing lost at chi_x={chi!r}")
        shifts.append(st.omega_shift)
        err = max(err, abs(frequency_decomposition(st) - st.omega_shift))
    shifts = np.array(shifts)
    err /= max(np.abs(shifts).max(), rates.Gamma_c * 1e-12)
    slope = float(np.polyfit(chi_grid, shifts, 1)[0]) if chi_grid.size > 1 else float("nan")
    return MFPulling(float(rates.Omega), slope, chi_grid, shifts, base.c_z, kappa_x, err,
                     Gamma_c=rates.Gamma_c)


# --- phase diffusion ------------------------------------------------------


@dataclass(frozen=True)
class PhaseDiffusion:
    M: np.ndarray
    D: np.ndarray
    eigenvalues: np.ndarray
    V: np.ndarray
    v0: np.ndarray
    linewidth: float

    @property
    def goldstone(self) -> complex:
        return complex(self.eigenvalues[0])


def _gauge_fixed(s: MeanFieldState):
    phase = np.exp(-1j * np.angle(s.c))
    return abs(s.c), s.p * phase, s.r


def coupling_matrices(s: MeanFieldState, rates: EffectiveRates | None = None):
    """Fluctuation coupling ``M`` and diffusion ``D`` in the fixed gauge."""
    rates = rates or s.rates
    Om, Gc, W, gd, gs, w, gp, N = _unpack(rates)
    c, p, r = _gauge_fixed(s)
    cz, pz = s.c_z, s.p_z
    cc = np.conj(c)
    rc = np.conj(r)
    M = 0.5 * np.array([
        [N * Gc * cz - gd - gs, 1j * Om * p / c + N * W * p * rc / c, -N * W * p * rc / c],
        [1j * Om * c / p - N * Gc * r * c / p, -N * W * pz - gd - gs - w - gp, -N * Gc * r * c / p],
        [p * cc / r * (N * W - N * Gc), p * cc / r * (N * Gc - N * W), -w - gp],
    ])
    Dm = -0.125 * np.array([
        [W * r**2 / c**2 - Gc * cz**2 / c**2, W * r * pz / (c * p) + Gc * cz * r / (c * p),
         W + Gc * cz * p / (c * r)],
        [W * pz * r / (p * c) + Gc * r * cz / (p * c), W * pz**2 / p**2 - Gc * r**2 / p**2,
         W * pz * c / (p * r) - Gc],
        [W + Gc * p * cz / (r * c), W * c * pz / (r * p) - Gc, W * c**2 / r**2 - Gc * p**2 / r**2],
    ])
    return M, Dm


def phase_diffusion_linewidth(s: MeanFieldState, rates: EffectiveRates | None = None, *,
                              floor: float = LASING_FLOOR, goldstone_tol: float = GOLDSTONE_TOL,
                              ratio_limit: float = RATIO_LIMIT) -> PhaseDiffusion:
    """Linewidth from diffusion projected on the zero-eigenvalue phase mode."""
    rates = rates or s.rates
    mags = np.array([abs(s.c), abs(s.p), abs(s.r)])
    if mags[0] < floor:
        raise NonLasingError(f"|c| = {mags[0]:.3e} below floor {floor:g}")
    if mags.min() == 0 or mags.max() / mags.min() > ratio_limit:
        raise DegeneratePointError(f"coherence ratio too large: |c|,|p|,|r| = {mags}")
    M, Dm = coupling_matrices(s, rates)
    lam, V = np.linalg.eig(M)
    order = np.argsort(np.abs(lam))
    lam, V = lam[order], V[:, order]
    NGc = rates.N * rates.Gamma_c
    if abs(lam[0]) > goldstone_tol * NGc:
        raise InconsistentSolutionError(
            f"no Goldstone mode: smallest |lambda| = {abs(lam[0]) / NGc:.2e} N Gamma_c")
    Vi = np.linalg.inv(V)
    dnu = 2 * abs(V[0, 0]) ** 2 * (Vi @ Dm @ Vi.conj().T)[0, 0]
    return PhaseDiffusion(M, Dm, lam, V, V[:, 0], float(dnu.real))


# --- linear stability of the non-lasing states ---------------------------


@dataclass(frozen=True)
class StabilityReport:
    case: int
    threshold: float
    eig_A: tuple[complex, complex]
    eig_B: tuple[complex, complex]
    lasing: bool

    def to_dict(self) -> dict:
        return {"case": self.case, "threshold_W": self.threshold, "lasing": self.lasing,
                "eig_A": [str(x) for x in self.eig_A], "eig_B": [str(x) for x in self.eig_B]}


def stability_thresholds(N: float, W: float, Gamma_c: float, Omega: float) -> StabilityReport:
    """Classify the drive regime and the pump rate ``W`` needed for lasing.

    Case 1 is ``Omega < N Gamma_c / 2``, case 2 up to ``N Gamma_c``, case 3
    beyond; thresholds are continuous across the boundaries.  ``eig_A`` are
    the fluctuation eigenvalues around the ground mixture, ``eig_B`` those
    around full inversion.
    """
    if min(N, W, Gamma_c, Omega) < 0:
        raise ValueError("N, W, Gamma_c and Omega must be non-negative")
    if Gamma_c <= 0:
        raise ValueError("Gamma_c must be positive")
    a = np.sqrt(complex((N * Gamma_c + N * W) ** 2 - 16 * Omega**2))
    b = np.sqrt(complex((N * Gamma_c + N * W) ** 2 - 4 * Omega**2))
    eig_A = (N * (W - Gamma_c) / 8 + a / 8, N * (W - Gamma_c) / 8 - a / 8)
    eig_B = (N * (Gamma_c - W) / 4 + b / 4, N * (Gamma_c - W) / 4 - b / 4)
    if Omega < N * Gamma_c / 2:
        case, thr = 1, 4 * Omega**2 / (N**2 * Gamma_c)
    elif Omega < N * Gamma_c:
        case, thr = 2, Gamma_c
    else:
        case, thr = 3, Omega**2 / (N**2 * Gamma_c)
    return StabilityReport(case, float(thr), eig_A, eig_B, bool(W > thr))


def critical_drive(N: float, W: float, Gamma_c: float) -> float:
    """Largest drive that still lases when ``W > Gamma_c``."""
    if W <= Gamma_c:
        warnings.warn("W <= Gamma_c: the upper drive boundary does not exist", stacklevel=2)
        return float("nan")
    return N * math.sqrt(W * Gamma_c)


__all__ = [
    "MeanFieldState", "BlochDerivative", "PhaseDiffusion", "StabilityReport", "MFPulling",
    "mf_generator", "kernel_density", "mf_rhs", "mf_master_rhs", "mf_master_step",
    "mf_steady_state", "mf_pulling", "phase_diffusion_linewidth", "coupling_matrices",
    "stability_thresholds", "critical_drive", "regularized_rates", "frequency_decomposition",
    "MeanFieldError", "ConvergenceError", "NonLasingError", "DegeneratePointError",
    "InconsistentSolutionError",
]
