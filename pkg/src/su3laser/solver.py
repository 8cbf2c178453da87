"""Steady states, observables, spectra, correlations and pulling for the exact model."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.optimize as so
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import su3basis as sb
from .liouvillian import (
    SparseGenerator, Su2Generator, assemble_su3, dispersive_diagonal, reduce_symmetric,
)
from .params import output_power

KERNEL_TOL = 1e-10
G2_FLOOR = 1e-12
DENSE_LIMIT = 400


class SolverError(RuntimeError):
    def __init__(self, msg: str, residual: float | None = None):
        super().__init__(msg if residual is None else f"{msg} (residual {residual:.3e})")
        self.residual = residual


class MultiplicityError(SolverError):
    """The kernel is more than one-dimensional."""


class NoSignChangeError(ValueError):
    pass


class FitError(ValueError):
    pass


# --- sparse LU with a lattice ordering --------------------------------------


def nested_dissection(coords: np.ndarray, leaf: int = 64) -> np.ndarray:
    """Fill-reducing ordering for generators whose couplings are lattice-local.

    Every coupling changes each coordinate by at most one, so a single
    coordinate plane is a vertex separator.  The recursion splits at the median
    of the longest axis and orders ``[left, right, plane]``.
    """
    coords = np.asarray(coords)
    out: list[np.ndarray] = []
    stack = [(np.arange(coords.shape[0]), False)]
    # explicit stack instead of recursion; entries flagged True are emitted as-is
    while stack:
        ids, done = stack.pop()
        if done or ids.size <= leaf:
            out.append(ids)
            continue
        P = coords[ids]
        lo, hi = P.min(axis=0), P.max(axis=0)
        ax = int(np.argmax(hi - lo))
        if hi[ax] - lo[ax] < 2:
            out.append(ids)
            continue
        cut = int(np.median(P[:, ax]))
        cut = min(max(cut, lo[ax] + 1), hi[ax] - 1)
        col = P[:, ax]
        # pushed in reverse so the pop order is left, right, separator
        stack.append((ids[col == cut], True))
        stack.append((ids[col > cut], False))
        stack.append((ids[col < cut], False))
    return np.concatenate(out)


@dataclass
class Factorization:
    lu: spla.SuperLU
    perm: np.ndarray | None
    complex: bool

    def solve(self, b: np.ndarray, trans: str = "N") -> np.ndarray:
        if not self.complex and np.iscomplexobj(b):
            return self.solve(b.real, trans) + 1j * self.solve(b.imag, trans)
        if self.perm is None:
            return self.lu.solve(b, trans=trans)
        y = self.lu.solve(np.ascontiguousarray(b[self.perm]), trans=trans)
        x = np.empty_like(y)
        x[self.perm] = y
        return x

    @property
    def fill(self) -> int:
        return int(self.lu.L.nnz + self.lu.U.nnz)


def factorize(A: sp.spmatrix, coords: np.ndarray | None = None) -> Factorization:
    A = sp.csc_matrix(A)
    if coords is None:
        return Factorization(spla.splu(A), None, np.iscomplexobj(A.data))
    perm = nested_dissection(coords)
    Ap = A[perm][:, perm].tocsc()
    lu = spla.splu(Ap, permc_spec="NATURAL", diag_pivot_thresh=0.1,
                   options=dict(SymmetricMode=True))
    return Factorization(lu, perm, np.iscomplexobj(A.data))


# --- steady state -----------------------------------------------------------


@dataclass
class StateVector:
    """Coefficients over a k=0 sector (or the SU(2) Liouville space)."""

    coeffs: np.ndarray
    N: int
    k: int = 0
    model: str = "su3"
    diagnostics: dict = field(default_factory=dict)

    def trace(self) -> float:
        if self.model == "su2":
            return float(np.real(np.trace(self.coeffs.reshape(self.N + 1, self.N + 1))))
        return float(np.real(sb.identity_dual(self.N) @ self.coeffs))


def _default_shift(N: int, Gamma_c: float, norm: float) -> float:
    scale = Gamma_c * N if Gamma_c > 0 else norm
    return -1e-8 * (scale if scale > 0 else 1.0)


def steady_state(L: SparseGenerator | Su2Generator, *, sigma: float | None = None,
                 reduce: bool = True, tol: float = KERNEL_TOL, check_unique: bool = True,
                 max_iter: int = 4) -> StateVector:
    """Kernel of ``L`` normalised to unit trace.

    Inverse iteration with a tiny negative shift on a sparse LU; when that
    misses the residual target a bordered least-squares system with the trace
    row pinned is tried before giving up.
    """
    su2 = isinstance(L, Su2Generator)
    if not su2 and L.k != 0:
        raise ValueError("steady states live in the k=0 sector")
    dual = L.trace_dual
    full = L.matrix
    norm = L.norm_inf
    if norm == 0.0:
        raise MultiplicityError("generator is identically zero; every state is stationary")

    red = None
    if not su2 and reduce and L.is_real:
        red = reduce_symmetric(L)
        M, coords = red.matrix, red.coords
    else:
        M, coords = full, L.coords
    n = M.shape[0]
    if sigma is None:
        sigma = _default_shift(L.N, L.Gamma_c, norm)
    dtype = M.dtype
    fac = factorize(M - sigma * sp.identity(n, dtype=dtype, format="csc"), coords)

    def lift(y):
        return red.expand @ y if red is not None else y

    def iterate(seed):
        rng = np.random.default_rng(seed)
        y = rng.random(n) + 0.5
        its = 0
        for its in range(1, max_iter + 1):
            y_new = fac.solve(y)
            y_new /= np.abs(y_new).max()
            done = np.abs(y_new - y).max() < 1e-14
            y = y_new
            if done:
                break
        x = lift(y)
        tr = dual @ x
        return x, tr, its

    x, tr, its = iterate(0)
    diag = {"method": "inverse-iteration", "shift": sigma, "iterations": its,
            "dim": n, "lu_fill": fac.fill, "reduced": red is not None}
    if abs(tr) < 1e-300:
        raise MultiplicityError("kernel vector has vanishing trace")
    x = x / tr
    if check_unique:
        x2, tr2, _ = iterate(1)
        if abs(tr2) < 1e-300 or np.abs(x2 / tr2 - x).max() > 1e-6 * np.abs(x).max():
            raise MultiplicityError("steady state is not unique (two starts disagree)")
    resid = float(np.abs(full @ x).max())
    if resid > tol * norm:
        x, resid = _bordered(full, dual, tol, norm)
        diag["method"] = "bordered-lsqr"
        if resid > tol * norm:
            raise SolverError("steady state did not converge", resid / norm)
    if not np.iscomplexobj(full.data):
        x = np.real(x)
    diag["residual"] = resid
    diag["relative_residual"] = resid / norm
    return StateVector(x, L.N, 0, "su2" if su2 else "su3", diag)


def _bordered(M, dual, tol, norm):
    n = M.shape[0]
    A = sp.vstack([M, sp.csr_matrix(dual.reshape(1, -1) * norm)]).tocsr()
    b = np.zeros(n + 1, dtype=M.dtype)
    b[-1] = norm
    x = spla.lsqr(A, b, atol=tol * 1e-3, btol=tol * 1e-3, iter_lim=50 * n)[0]
    x = x / (dual @ x)
    return x, float(np.abs(M @ x).max())


# --- observables --------------------------------------------------------------


@dataclass
class Observables:
    intensity: float
    g2: float | None
    cz: float
    pz: float
    rz: float
    n_u: float
    n_d: float
    n_s: float
    linewidth: float | None = None
    frequency: float | None = None
    power: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _diag_parts(state: StateVector):
    b = sb.basis_index(state.N, 0)
    mask = b.two_r3 == b.two_r3p
    x = np.real(state.coeffs[mask])
    tr, t3 = b.two_r[mask], b.two_r3[mask]
    return x, tr, t3


def observables(state: StateVector, N: int | None = None, *, g2_floor: float = G2_FLOOR,
                Gamma_c_si: float | None = None) -> Observables:
    """Steady-state expectation values.

    ``g2`` is ``None`` when the intensity is below ``g2_floor * N**2``.  When
    ``Gamma_c_si`` (s^-1) is given the output power in watts is filled in.
    """
    N = state.N if N is None else N
    if state.model == "su2":
        return _su2_observables(state, g2_floor, Gamma_c_si)
    x, tr, t3 = _diag_parts(state)
    n_u = N - tr
    n_d = (tr + t3) // 2
    n_s = (tr - t3) // 2
    lcc = n_u * (n_d + 1.0)
    # C-|r,r3> followed by another C-: weights n_u (n_d+1) and (n_u-1)(n_d+2)
    lcc2 = lcc * (n_u - 1.0) * (n_d + 2.0)
    inten = float(x @ lcc)
    num = float(x @ lcc2)
    g2 = num / inten**2 if inten > g2_floor * N**2 else None
    pu, pd, ps = float(x @ n_u), float(x @ n_d), float(x @ n_s)
    obs = Observables(inten, g2, 0.5 * (pu - pd), 0.5 * (pu - ps), 0.5 * (pd - ps), pu, pd, ps)
    if Gamma_c_si is not None:
        obs.power = output_power(inten, Gamma_c_si)
    return obs


def _su2_observables(state, g2_floor, Gamma_c_si):
    N = state.N
    j = N / 2
    p = np.real(np.diag(state.coeffs.reshape(N + 1, N + 1)))
    m = np.arange(N + 1) - j
    a1 = (j + m) * (j - m + 1)
    a2 = a1 * (j + m - 1) * (j - m + 2)
    inten = float(p @ a1)
    num = float(p @ a2)
    g2 = num / inten**2 if inten > g2_floor * N**2 else None
    n_u = float(p @ (j + m))
    n_d = float(p @ (j - m))
    obs = Observables(inten, g2, float(p @ m), 0.5 * n_u, 0.0, n_u, n_d, 0.0)
    if Gamma_c_si is not None:
        obs.power = output_power(inten, Gamma_c_si)
    return obs


def density_blocks(state: StateVector) -> list[np.ndarray]:
    """Reconstruct the density matrix, one Hermitian block per value of ``r``.

    The U(1) symmetry forbids coherences between different ``r`` in the
    steady state, so the blocks are the whole matrix.
    """
    b = sb.basis_index(state.N, 0)
    phase = 1j ** (b.gauge_exponent() % 4)
    vals = phase * state.coeffs
    out = []
    for tr in range(state.N + 1):
        lo, hi = b.offsets[tr], b.offsets[tr + 1]
        out.append(vals[lo:hi].reshape(tr + 1, tr + 1))
    return out


def min_eigenvalue(state: StateVector) -> float:
    return min(float(np.linalg.eigvalsh(0.5 * (B + B.conj().T)).min()) for B in density_blocks(state))


def check_positivity(state: StateVector, tol: float = 1e-8) -> bool:
    return min_eigenvalue(state) >= -tol


# --- slowest coherence eigenvalue -------------------------------------------


@dataclass
class EigenResult:
    value: complex
    right: np.ndarray
    left: np.ndarray | None
    stable: bool
    diagnostics: dict

    @property
    def linewidth(self) -> float:
        return -2.0 * self.value.real

    @property
    def frequency(self) -> float:
        return self.value.imag


def slowest_decay_eigenvalue(L: SparseGenerator, *, nev: int = 6, sigma: float = 0.0,
                             want_left: bool = False, tol: float = 1e-12,
                             instability_tol: float = 1e-9) -> EigenResult:
    """Eigenvalue of largest real part on a k=1 sector, via shift-invert Arnoldi."""
    if L.k != 1:
        warnings.warn("slowest_decay_eigenvalue is meant for the k=1 sector", stacklevel=2)
    n = L.dim
    M = L.matrix
    scale = L.norm_inf or 1.0
    if n <= DENSE_LIMIT:
        import scipy.linalg as sla

        A = M.toarray()
        w, vl, vr = sla.eig(A, left=True, right=True)
        i = int(np.argmax(w.real))
        lam, right, left = w[i], vr[:, i], vl[:, i].conj()
        diag = {"method": "dense"}
    else:
        dtype = np.result_type(M.dtype, np.asarray(sigma).dtype)
        fac = factorize(M - sigma * sp.identity(n, dtype=dtype, format="csc"), L.coords)
        op = spla.LinearOperator((n, n), matvec=fac.solve, dtype=dtype)
        k = min(nev, n - 2)
        w, v = spla.eigs(M, k=k, sigma=sigma, OPinv=op, tol=tol, maxiter=5000)
        i = int(np.argmax(w.real))
        lam, right = w[i], v[:, i]
        left = None
        if want_left:
            opT = spla.LinearOperator((n, n), matvec=lambda y: fac.solve(y, trans="T"), dtype=dtype)
            wl, vl = spla.eigs(M.T.tocsc(), k=k, sigma=sigma, OPinv=opT, tol=tol, maxiter=5000)
            j = int(np.argmin(np.abs(wl - lam)))
            left = vl[:, j]
        diag = {"method": "shift-invert-arnoldi", "shift": sigma, "nev": k, "lu_fill": fac.fill,
                "candidates": [complex(z) for z in w]}
    if want_left and left is None:
        raise SolverError("left eigenvector unavailable")
    if lam.imag < 0 and not np.iscomplexobj(M.data):
        # real generator: the conjugate is an eigenvalue too; report Im >= 0
        lam, right = np.conj(lam), right.conj()
        left = None if left is None else left.conj()
    res = float(np.abs(M @ right - lam * right).max() / np.abs(right).max())
    diag["residual"] = res
    if res > 1e-8 * scale:
        raise SolverError("eigenvector residual too large", res)
    stable = lam.real <= instability_tol * scale
    if not stable:
        warnings.warn(f"Re(lambda_1) = {lam.real:.3e} > 0: unstable generator", RuntimeWarning,
                      stacklevel=2)
    return EigenResult(complex(lam), right, left, bool(stable), diag)


def linewidth(N: int, Omega: float, W: float, Gamma_c: float, chi_x: float = 0.0) -> EigenResult:
    return slowest_decay_eigenvalue(assemble_su3(N, Omega, Gamma_c, W, chi_x, k=1))


# --- first-order coherence ---------------------------------------------------


def lowering_into_k1(state: StateVector) -> np.ndarray:
    """Coefficients of ``C- rho`` on the k=1 sector (gauge phases cancel)."""
    N = state.N
    b0 = sb.basis_index(N, 0)
    b1 = sb.basis_index(N, 1)
    tr, t3, t3p = b0.two_r, b0.two_r3, b0.two_r3p
    amp = np.sqrt((N - tr) * (tr + t3 + 2) / 2.0)
    ok = amp > 0
    tgt = sb.state_index(b1.offsets, 1, tr[ok] + 1, t3[ok] + 1, t3p[ok])
    out = np.zeros(b1.dim, dtype=np.result_type(state.coeffs.dtype, float))
    out[tgt] = amp[ok] * state.coeffs[ok]
    return out


def raising_trace_k1(N: int) -> np.ndarray:
    """Functional ``X -> tr(C+ X)`` on the k=1 sector."""
    b = sb.basis_index(N, 1)
    tr, t3, t3p = b.two_r, b.two_r3, b.two_r3p
    w = np.where(t3p == t3 - 1, np.sqrt(np.clip((N - tr + 1) * (tr + t3) / 2.0, 0, None)), 0.0)
    return w


@dataclass
class G1Result:
    taus: np.ndarray
    values: np.ndarray
    rate: complex  # fitted exponent: g1 ~ exp(rate * tau)
    fit_start: float

    @property
    def linewidth(self) -> float:
        return -2.0 * self.rate.real

    @property
    def frequency(self) -> float:
        return self.rate.imag


def g1_correlation(L1: SparseGenerator, state: StateVector, taus: Sequence[float],
                   fit_from: float | None = None) -> G1Result:
    """``<C+(tau) C-(0)>`` by the quantum regression theorem.

    The exponent is fitted on ``tau >= fit_from`` (default: the second half of
    the grid) from ``log|g1|`` and the unwrapped phase.
    """
    if L1.k != 1 or L1.N != state.N:
        raise ValueError("need the k=1 generator of the same N")
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size < 4 or np.any(np.diff(taus) <= 0) or taus[0] < 0:
        raise ValueError("taus must be an increasing grid of at least 4 non-negative points")
    seed = lowering_into_k1(state).astype(complex)
    close = raising_trace_k1(state.N)
    M = L1.matrix.astype(complex)
    d = np.diff(taus)
    uniform = np.allclose(d, d[0], rtol=1e-9, atol=0)
    vals = np.empty(taus.size, dtype=complex)
    if uniform:
        X = spla.expm_multiply(M, seed, start=taus[0], stop=taus[-1], num=taus.size, endpoint=True)
        vals[:] = X @ close
    else:
        v = spla.expm_multiply(M * taus[0], seed) if taus[0] > 0 else seed
        vals[0] = close @ v
        for i in range(1, taus.size):
            v = spla.expm_multiply(M * (taus[i] - taus[i - 1]), v)
            vals[i] = close @ v
    if fit_from is None:
        fit_from = taus[taus.size // 2]
    sel = taus >= fit_from
    if sel.sum() < 3:
        raise FitError("fewer than three points in the fit window")
    mag = np.abs(vals[sel])
    if np.any(mag <= 0) or not np.all(np.isfinite(mag)):
        raise FitError("g1 vanished inside the fit window; shorten the grid")
    logm = np.log(mag)
    if abs(logm[-1] - logm[0]) < 1e-3:
        raise FitError("tau grid too short to resolve the decay")
    phase = np.unwrap(np.angle(vals[sel]))
    t = taus[sel]
    re = np.polyfit(t, logm, 1)[0]
    im = np.polyfit(t, phase, 1)[0]
    return G1Result(taus, vals, complex(re, im), float(fit_from))


# --- cavity pulling -----------------------------------------------------------


@dataclass
class PullingResult:
    slope: float  # d Im(lambda_1) / d chi_x
    kappa_x: float | None
    method: str
    chi_grid: np.ndarray | None = None
    frequencies: np.ndarray | None = None
    quadratic_share: float | None = None

    @property
    def normalized(self) -> float:
        """Pulling in units of ``Gamma_c / kappa_x``."""
        return -self.slope

    def wp(self, Gamma_c: float, kappa_x: float | None = None) -> float:
        kx = kappa_x if kappa_x is not None else self.kappa_x
        if kx is None:
            raise ValueError("kappa_x required")
        return -self.slope * Gamma_c / kx


def cavity_pulling(N: int, Omega: float, W: float, Gamma_c: float,
                   chi_grid: Sequence[float] | None = None, *, kappa_x: float | None = None,
                   method: str = "grid", max_quadratic_share: float = 0.05) -> PullingResult:
    """Slope of the laser frequency against ``chi_x``.

    ``method='grid'`` fits ``Im(lambda_1)`` over a small symmetric grid (default
    five points spanning +-1e-2 Gamma_c) and rejects visibly curved responses.
    ``method='perturbative'`` evaluates the same derivative at ``chi_x = 0``
    from the left and right eigenvectors.
    """
    if method == "perturbative":
        res = slowest_decay_eigenvalue(assemble_su3(N, Omega, Gamma_c, W, 0.0, k=1), want_left=True)
        dd = dispersive_diagonal(N, 1)
        r, l = res.right, res.left
        deriv = 1j * (l @ (dd * r)) / (l @ r)
        return PullingResult(float(deriv.imag), kappa_x, "perturbative")
    if method != "grid":
        raise ValueError(f"unknown method {method!r}")
    if chi_grid is None:
        chi_grid = np.linspace(-1e-2, 1e-2, 5) * Gamma_c
    chi = np.asarray(chi_grid, dtype=float)
    if chi.size < 3 or not np.allclose(np.sort(chi), -np.sort(chi)[::-1], atol=1e-15 * np.abs(chi).max()):
        raise ValueError("chi grid must be symmetric about zero with at least 3 points")
    freqs = np.array([
        slowest_decay_eigenvalue(assemble_su3(N, Omega, Gamma_c, W, c, k=1)).value.imag for c in chi
    ])
    quad, lin, _ = np.polyfit(chi, freqs, 2)
    h = np.abs(chi).max()
    share = abs(quad) * h / max(abs(lin), 1e-300)
    if share > max_quadratic_share:
        raise FitError(f"nonlinear frequency response (quadratic share {share:.3f}); narrow the grid")
    slope = float(np.polyfit(chi, freqs, 1)[0])
    return PullingResult(slope, kappa_x, "grid", chi, freqs, float(share))


# --- fits and roots -------------------------------------------------------------


@dataclass
class FitResult:
    X: float
    Y: float
    Z: float
    residual: float
    Ns: tuple

    def __call__(self, N):
        N = np.asarray(N, dtype=float)
        return self.X + self.Y / N + self.Z / N**2


def thermo_fit(values: Mapping[int, float]) -> FitResult:
    """Least-squares ``f(N) = X + Y/N + Z/N^2``."""
    Ns = np.array(sorted(values), dtype=float)
    if np.unique(Ns).size < 3:
        raise FitError("need at least three distinct N")
    y = np.array([values[int(n)] if int(n) in values else values[n] for n in Ns], dtype=float)
    A = np.stack([np.ones_like(Ns), 1 / Ns, 1 / Ns**2], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < 3:
        raise FitError("rank-deficient design matrix")
    resid = float(np.linalg.norm(A @ coef - y))
    return FitResult(float(coef[0]), float(coef[1]), float(coef[2]), resid, tuple(int(n) for n in Ns))


def zero_crossing(f: Callable[[float], float], lo: float, hi: float, rtol: float = 1e-6) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NoSignChangeError(f"no sign change on [{lo}, {hi}] (f = {flo:.3e}, {fhi:.3e})")
    return float(so.brentq(f, lo, hi, rtol=rtol, xtol=rtol * max(abs(lo), abs(hi)) * 1e-3))


# --- convenience -----------------------------------------------------------------


def solve_point(N: int, Omega: float, W: float, Gamma_c: float, *, linewidth: bool = False,
                pulling: bool = False, kappa_x: float | None = None) -> dict:
    """One exact SU(3) evaluation as a JSON-ready record."""
    L0 = assemble_su3(N, Omega, Gamma_c, W, 0.0, k=0)
    st = steady_state(L0)
    obs = observables(st)
    diag = {"steady_state": st.diagnostics}
    if linewidth:
        ev = slowest_decay_eigenvalue(assemble_su3(N, Omega, Gamma_c, W, 0.0, k=1))
        obs.linewidth = ev.linewidth
        obs.frequency = ev.frequency
        diag["eigen"] = {k: v for k, v in ev.diagnostics.items() if k != "candidates"}
    rec = {"params": {"N": N, "Omega": Omega, "W": W, "Gamma_c": Gamma_c},
           "observables": obs.to_dict(), "diagnostics": diag}
    if pulling:
        pr = cavity_pulling(N, Omega, W, Gamma_c, method="perturbative", kappa_x=kappa_x)
        rec["observables"]["pulling_normalized"] = pr.normalized
        if kappa_x:
            rec["observables"]["wp_x"] = pr.wp(Gamma_c)
    return rec


__all__ = [
    "SolverError", "MultiplicityError", "NoSignChangeError", "FitError", "StateVector",
    "Observables", "EigenResult", "G1Result", "PullingResult", "FitResult",
    "nested_dissection", "factorize", "steady_state", "observables", "density_blocks",
    "check_positivity", "min_eigenvalue", "slowest_decay_eigenvalue", "g1_correlation",
    "cavity_pulling", "thermo_fit", "zero_crossing", "solve_point", "lowering_into_k1",
    "raising_trace_k1",
]
