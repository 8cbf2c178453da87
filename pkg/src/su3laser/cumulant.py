"""Second-order cumulant engine.

The state is the one-atom marginal ``rho1`` (3x3) and the two-atom marginal
``rho12`` (9x9, symmetric under exchange).  Their equations follow from
tracing the full master equation over the remaining atoms; collective
channels couple each marginal to the next larger one, which is closed by
dropping the third-order cumulant.

For a collective jump ``A = sum_j a_j`` with rate ``G`` the contribution of
the ``N - |S|`` outside atoms to ``rho_S`` is

    G (N - |S|) sum_{j in S} 1/2 ([a_j, sigma] + [sigma^dag, a_j^dag]),
    sigma = Tr_out(a_out^dag rho_{S + out}),

and the dispersive term ``-chi C+ C-`` adds
``i chi (N - |S|) sum_j ([c_j^dag, tau] + [c_j, tau^dag])`` with
``tau = Tr_out(c_out rho_{S + out})``.

Time is measured in ``1/Gamma_c`` internally.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.optimize as opt
from scipy.integrate import solve_ivp

from .params import EffectiveRates

U, D, S = 0, 1, 2
LEVELS = "uds"
CHARGE = (1, 0, 0)  # phase charge of each level under the |u> rotation
GROWTH_TOL = 1e-8  # relative to the fastest rate


class CumulantError(RuntimeError):
    pass


class IntegrationError(CumulantError):
    pass


class NonStationaryError(CumulantError):
    """No stable stationary point, e.g. a limit cycle.

    ``result`` holds the unstable stationary point when one was found.
    """

    def __init__(self, msg: str, result: "CumulantResult | None" = None):
        super().__init__(msg)
        self.result = result


def _e(a: int, b: int) -> np.ndarray:
    m = np.zeros((3, 3), dtype=complex)
    m[a, b] = 1.0
    return m


C_OP = _e(D, U)
P_OP = _e(S, U)
R_OP = _e(S, D)
I3 = np.eye(3)


# --- moment bookkeeping ------------------------------------------------------


def _charge(a: int, b: int) -> int:
    return CHARGE[a] - CHARGE[b]


def moment_orbits(u1: bool = True) -> tuple[list, list]:
    """Independent first and second moments.

    A first moment ``<s_ab>`` is identified with its conjugate ``<s_ba>``; a
    second moment ``<s_ab^(1) s_cd^(2)>`` with its exchange and conjugate
    partners.  With ``u1=True`` only phase-neutral moments are kept.
    Returns canonical representatives as tuples of level pairs.
    """
    first, second = set(), set()
    for a, b in itertools.product(range(3), repeat=2):
        if u1 and _charge(a, b):
            continue
        first.add(min((a, b), (b, a)))
    for a, b, c, d in itertools.product(range(3), repeat=4):
        if u1 and _charge(a, b) + _charge(c, d):
            continue
        orbit = {((a, b), (c, d)), ((c, d), (a, b)), ((b, a), (d, c)), ((d, c), (b, a))}
        second.add(min(orbit))
    return sorted(first), sorted(second)


def moment_count(u1: bool = True) -> int:
    f, s = moment_orbits(u1)
    return len(f) + len(s)


def moment_label(m) -> str:
    if isinstance(m[0], int):
        return f"s_{LEVELS[m[0]]}{LEVELS[m[1]]}"
    (a, b), (c, d) = m
    return f"s_{LEVELS[a]}{LEVELS[b]}*s_{LEVELS[c]}{LEVELS[d]}"


# --- marginals ----------------------------------------------------------------


def _ptr2(Z: np.ndarray, rho12: np.ndarray) -> np.ndarray:
    """``Tr_2[(1 x Z) rho12]`` as an operator on atom 1."""
    R = rho12.reshape(3, 3, 3, 3)
    return np.einsum("xy,aybx->ab", Z, R)


def _closed_sigma(Z: np.ndarray, rho1: np.ndarray, rho12: np.ndarray) -> np.ndarray:
    """``Tr_3[Z_3 rho123]`` with vanishing third-order cumulants."""
    z = np.trace(Z @ rho1)
    s = _ptr2(Z, rho12)
    return z * rho12 + np.kron(s, rho1) + np.kron(rho1, s) - 2 * z * np.kron(rho1, rho1)


def _comm(A, B):
    return A @ B - B @ A


def _diss(J, rho):
    JdJ = J.conj().T @ J
    return J @ rho @ J.conj().T - 0.5 * (JdJ @ rho + rho @ JdJ)


@dataclass(frozen=True)
class _Model:
    N: float
    Omega: float
    Gamma_c: float
    W: float
    chi: float
    local_jumps: tuple
    collective: tuple  # (rate, a) pairs

    @classmethod
    def from_rates(cls, rates: EffectiveRates, scale: float = 1.0, Omega=None):
        Om = rates.Omega if Omega is None else Omega
        if Om is None:
            raise ValueError("Omega must be set")
        f = 1.0 / scale
        loc = tuple(math.sqrt(g * f) * J for g, J in (
            (rates.gamma_d, C_OP), (rates.gamma_s, P_OP), (rates.w, P_OP.T),
            (rates.gamma_p, P_OP @ P_OP.T)) if g > 0)
        col = tuple((g * f, a) for g, a in ((rates.Gamma_c, C_OP), (rates.W, P_OP.T)) if g > 0)
        return cls(float(rates.N), Om * f, rates.Gamma_c * f, rates.W * f, rates.chi_x * f, loc, col)


def _rhs1(m: _Model, rho1, rho12):
    h = 0.5 * m.Omega * (R_OP + R_OP.T) - m.chi * (C_OP.T @ C_OP)
    out = -1j * _comm(h, rho1)
    for J in m.local_jumps:
        out += _diss(J, rho1)
    n_out = m.N - 1
    for G, a in m.collective:
        out += G * _diss(a, rho1)
        if n_out:
            sig = _ptr2(a.conj().T, rho12)
            out += 0.5 * G * n_out * (_comm(a, sig) + _comm(sig.conj().T, a.conj().T))
    if m.chi and n_out:
        tau = _ptr2(C_OP, rho12)
        out += 1j * m.chi * n_out * (_comm(C_OP.T, tau) + _comm(C_OP, tau.conj().T))
    return out


def _two(op):
    return np.kron(op, I3) + np.kron(I3, op)


_C2 = _two(C_OP)


def _rhs2(m: _Model, rho1, rho12):
    h = _two(0.5 * m.Omega * (R_OP + R_OP.T)) - m.chi * (_C2.conj().T @ _C2)
    out = -1j * _comm(h, rho12)
    for J in m.local_jumps:
        out += _diss(np.kron(J, I3), rho12) + _diss(np.kron(I3, J), rho12)
    n_out = m.N - 2
    for G, a in m.collective:
        A = _two(a)
        out += G * _diss(A, rho12)
        if n_out > 0:
            sig = _closed_sigma(a.conj().T, rho1, rho12)
            out += 0.5 * G * n_out * (_comm(A, sig) + _comm(sig.conj().T, A.conj().T))
    if m.chi and n_out > 0:
        tau = _closed_sigma(C_OP, rho1, rho12)
        out += 1j * m.chi * n_out * (_comm(_C2.conj().T, tau) + _comm(_C2, tau.conj().T))
    return out


def cumulant_rhs(rho1: np.ndarray, rho12: np.ndarray, rates: EffectiveRates,
                 N: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives of the one- and two-atom marginals (physical time units)."""
    if N is not None:
        rates = rates.with_(N=N)
    m = _Model.from_rates(rates)
    rho1 = np.asarray(rho1, dtype=complex)
    rho12 = np.asarray(rho12, dtype=complex)
    return _rhs1(m, rho1, rho12), _rhs2(m, rho1, rho12)


# --- real coordinates on the invariant subspace ------------------------------


_SWAP = np.zeros((9, 9))
for _a, _b in itertools.product(range(3), repeat=2):
    _SWAP[3 * _b + _a, 3 * _a + _b] = 1.0


def _project(rho1, rho12, u1):
    r1 = 0.5 * (rho1 + rho1.conj().T)
    r2 = 0.5 * (rho12 + rho12.conj().T)
    r2 = 0.5 * (r2 + _SWAP @ r2 @ _SWAP)
    if u1:
        q1 = np.array(CHARGE)
        r1 = r1 * (q1[:, None] == q1[None, :])
        q2 = (q1[:, None] + q1[None, :]).ravel()
        r2 = r2 * (q2[:, None] == q2[None, :])
    return r1, r2


def _to_real(rho1, rho12):
    return np.concatenate([rho1.ravel().real, rho1.ravel().imag, rho12.ravel().real, rho12.ravel().imag])


def _from_real(v):
    r1 = (v[:9] + 1j * v[9:18]).reshape(3, 3)
    r2 = (v[18:99] + 1j * v[99:180]).reshape(9, 9)
    return r1, r2


@lru_cache(maxsize=2)
def _basis(u1: bool) -> np.ndarray:
    """Orthonormal real basis of Hermitian, exchange-symmetric (and phase-neutral) marginals."""
    n = 180
    P = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        P[:, i] = _to_real(*_project(*_from_real(e), u1))
    w, V = np.linalg.eigh(0.5 * (P + P.T))
    return V[:, w > 0.5]


@lru_cache(maxsize=2)
def _traceless_basis(u1: bool) -> np.ndarray:
    """Sub-basis orthogonal to the two trace directions."""
    B = _basis(u1)
    t = np.stack([_to_real(I3 / 3 ** 0.5, np.zeros((9, 9))),
                  _to_real(np.zeros((3, 3)), np.eye(9) / 3.0)], axis=1)
    Q = B - t @ (t.T @ B)
    u, s, _ = np.linalg.svd(Q, full_matrices=False)
    return u[:, s > 1e-8]


# --- steady state ----------------------------------------------------------------


@dataclass(frozen=True)
class MomentVector:
    rho1: np.ndarray = field(repr=False)
    rho12: np.ndarray = field(repr=False)
    N: int

    @property
    def populations(self) -> tuple[float, float, float]:
        d = self.rho1.diagonal().real
        return float(d[U]), float(d[D]), float(d[S])

    @property
    def inversions(self) -> tuple[float, float, float]:
        n_u, n_d, n_s = self.populations
        return n_u - n_d, n_u - n_s, n_d - n_s

    def pair(self, a: int, b: int, c: int, d: int) -> complex:
        """``<s_ab^(1) s_cd^(2)>`` where ``s_ab = |a><b|``."""
        return complex(np.trace(np.kron(_e(a, b), _e(c, d)) @ self.rho12))

    def first(self, a: int, b: int) -> complex:
        return complex(np.trace(_e(a, b) @ self.rho1))

    @property
    def intensity(self) -> float:
        """``<C+ C-> = N <s_uu> + N (N-1) <s_ud^(1) s_du^(2)>``."""
        n_u = self.populations[0]
        return float(self.N * n_u + self.N * (self.N - 1) * self.pair(U, D, D, U).real)

    def values(self, u1: bool = True) -> dict[str, complex]:
        f, s = moment_orbits(u1)
        out = {moment_label(m): self.first(*m) for m in f}
        out.update({moment_label(m): self.pair(*m[0], *m[1]) for m in s})
        return out

    def to_dict(self) -> dict:
        cz, pz, rz = self.inversions
        n_u, n_d, n_s = self.populations
        return {"intensity_per_N2": self.intensity / self.N**2, "c_z": cz, "p_z": pz, "r_z": rz,
                "n_u": n_u, "n_d": n_d, "n_s": n_s}


@dataclass(frozen=True)
class CumulantResult:
    moments: MomentVector
    rates: EffectiveRates
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def intensity(self) -> float:
        return self.moments.intensity

    @property
    def intensity_per_N2(self) -> float:
        return self.moments.intensity / self.moments.N**2

    def to_dict(self) -> dict:
        return self.moments.to_dict()


def ground_product(N: int) -> MomentVector:
    """All atoms in ``|d>``."""
    r1 = _e(D, D)
    return MomentVector(r1, np.kron(r1, r1), N)


def _jacobian(f, y, fy=None):
    """Finite-difference Jacobian; central differences when ``fy`` is omitted."""
    n = y.size
    J = np.empty((n, n))
    h = (1e-7 if fy is not None else 1e-5) * max(1.0, float(np.max(np.abs(y))))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        if fy is None:
            J[:, i] = (f(y + e) - f(y - e)) / (2 * h)
        else:
            J[:, i] = (f(y + e) - fy) / h
    return J


# (initial step in units of 1/fastest, max step growth, residual growth accepted, step cap)
SCHEDULES = ((1.0, 10.0, 10.0, 150), (0.3, 4.0, 2.0, None))


def _continuation(f, y, target, max_steps, dt0, clip=10.0, accept=10.0, guard=5.0):
    """Implicit-Euler pseudo-time stepping with residual-driven step growth.

    Small early steps follow the physical transient from the initial state;
    the step grows as the residual falls so the final iterations are Newton.
    A step is rejected if it raises the residual more than ``accept``-fold or
    carries the state beyond ``guard`` times its initial size.
    """
    fy = f(y)
    norm = float(np.max(np.abs(fy)))
    dt, history = dt0, [(0.0, norm)]
    t = 0.0
    y_cap = guard * max(1.0, float(np.max(np.abs(y))))
    for _ in range(max_steps):
        if norm < target:
            return y, norm, t, history
        J = _jacobian(f, y, fy)
        I = np.eye(y.size)
        while True:
            step = np.linalg.solve(I / dt - J, fy)
            y_new = y + step
            f_new = f(y_new)
            n_new = float(np.max(np.abs(f_new)))
            if np.isfinite(n_new) and n_new < accept * norm and np.max(np.abs(y_new)) < y_cap:
                break
            dt *= 0.25
            if dt < 1e-6 * dt0:
                raise IntegrationError("pseudo-time step collapsed")
        t += dt
        dt *= float(np.clip(norm / max(n_new, 1e-300), 0.5, clip))
        y, fy, norm = y_new, f_new, n_new
        history.append((t, norm))
    raise NonStationaryError(f"no steady state after {max_steps} steps (residual {norm:.2e})")


def _integrate(f, y, target, t_max, method, atol, rtol, dt0):
    t, chunk, history = 0.0, dt0 * 100, []
    while True:
        norm = float(np.max(np.abs(f(y))))
        history.append((t, norm))
        if norm < target:
            return y, norm, t, history
        if t >= t_max:
            raise NonStationaryError(f"derivative norm {norm:.2e} above {target:.2e} at t = {t:g}")
        if len(history) > 12:
            recent = [h[1] for h in history[-6:]]
            if min(recent) > 0.5 * max(recent) and min(recent) > 1e3 * target:
                raise NonStationaryError(f"derivative norm stalls near {norm:.2e}; possible limit cycle")
        sol = solve_ivp(lambda _t, v: f(v), (t, t + chunk), y, method=method, atol=atol, rtol=rtol)
        if not sol.success:
            raise IntegrationError(sol.message)
        y = sol.y[:, -1]
        t += chunk
        chunk = min(chunk * 2.0, t_max)


_P_ANTI = 0.5 * (np.eye(9) - _SWAP)


def _meanfield_seed(rates: EffectiveRates, u1: bool):
    """Phase-averaged product of the mean-field state, or None when that solve fails.

    Collective channels conserve the antisymmetric two-atom weight, which is
    zero for the physical initial state; the seed is projected onto the
    symmetric pair subspace in that case so Newton stays on the right family.
    """
    from .meanfield import MeanFieldError, mf_steady_state

    try:
        rho = mf_steady_state(rates).rho
    except MeanFieldError:
        return None
    rho12 = np.kron(rho, rho)
    if not rates.has_single_particle:
        Ps = np.eye(9) - _P_ANTI
        rho12 = Ps @ rho12 @ Ps
        rho12 /= np.trace(rho12).real
        rho = np.einsum("aibi->ab", rho12.reshape(3, 3, 3, 3))
    return _project(rho, rho12, u1)


def _newton(f, y0, T, target):
    """Root of ``f`` on the affine slice through ``y0`` spanned by ``T``."""
    sol = opt.root(lambda z: T.T @ f(y0 + T @ z), np.zeros(T.shape[1]), method="hybr",
                   options={"xtol": 1e-13})
    y = y0 + T @ sol.x
    norm = float(np.max(np.abs(f(y))))
    if not np.isfinite(norm) or norm >= target:
        raise IntegrationError(f"Newton from the mean-field seed stalled (residual {norm:.2e})")
    return y, norm, 0.0, [(0.0, norm)]


def _without(T, a):
    """Columns of ``T`` spanning the part orthogonal to the functional ``a``."""
    c = T.T @ a
    if np.linalg.norm(c) < 1e-12:
        return T
    Q, _ = np.linalg.qr(np.column_stack([c / np.linalg.norm(c), np.eye(T.shape[1])]))
    return T @ Q[:, 1:T.shape[1]]


def _growth(f, y, T) -> float:
    """Largest real part of the linearisation restricted to traceless directions."""
    return float(np.max(np.linalg.eigvals(T.T @ _jacobian(f, y) @ T).real))


def cumulant_steady_state(rates: EffectiveRates, N: int | None = None, *,
                          initial: MomentVector | None = None, tol: float = 1e-10,
                          t_max: float = 1e5, atol: float = 1e-12, rtol: float = 1e-9,
                          method: str = "auto", max_steps: int = 2000) -> CumulantResult:
    """Relax the closed moment equations to a stationary point.

    ``tol`` is in units of ``N Gamma_c`` and ``t_max`` in ``1/Gamma_c``.
    ``method="continuation"`` takes implicit pseudo-time steps from the
    initial state.  The default ``"auto"`` first runs Newton from the
    phase-averaged mean-field product and falls back to continuation if that
    fails or lands on an unstable root.  Any :func:`scipy.integrate.solve_ivp` method name (``"LSODA"``,
    ``"Radau"``, ``"BDF"``) integrates the true trajectory instead, which is
    only affordable when the collective rate ``N Gamma_c`` is modest.  The
    stationary point is rejected if the linearisation there has a growing mode.
    """
    if N is not None:
        rates = rates.with_(N=N)
    N = rates.N
    scale = rates.Gamma_c if rates.Gamma_c > 0 else max(rates.W, 1.0)
    m = _Model.from_rates(rates, scale)
    u1 = initial is None
    B = _basis(u1)
    start = initial or ground_product(N)

    def f(y):
        r1, r2 = _from_real(B @ y)
        return B.T @ _to_real(_rhs1(m, r1, r2), _rhs2(m, r1, r2))

    y = B.T @ _to_real(start.rho1.astype(complex), start.rho12.astype(complex))
    fastest = N * (m.Gamma_c + m.W) + abs(m.Omega) + 1.0
    target = tol * N * m.Gamma_c
    T = B.T @ _traceless_basis(u1)
    solved = False
    if method == "auto" and initial is None:
        seed = _meanfield_seed(rates, u1)
        if seed is not None:
            try:
                Tn = T
                if not rates.has_single_particle:
                    anti = B.T @ _to_real(np.zeros((3, 3)), _P_ANTI)
                    Tn = _without(T, anti)
                y_n, norm, t, history = _newton(f, B.T @ _to_real(*seed), Tn, target)
                solved = _growth(f, y_n, T) <= GROWTH_TOL * fastest
                if solved:
                    y = y_n
            except CumulantError:
                pass
    if solved:
        pass
    elif method in ("auto", "continuation"):
        # a fast schedule first; the cautious one recovers the points where it wanders
        y0 = y
        for i, (fac, clip, accept, cap) in enumerate(SCHEDULES):
            steps = max_steps if cap is None else min(cap, max_steps)
            try:
                y, norm, t, history = _continuation(f, y0, target, steps, fac / fastest, clip, accept)
            except CumulantError:
                if i == len(SCHEDULES) - 1:
                    raise
                continue
            if i == len(SCHEDULES) - 1 or _growth(f, y, T) <= GROWTH_TOL * fastest:
                break
    else:
        y, norm, t, history = _integrate(f, y, target, t_max, method, atol, rtol, 0.1 / fastest)

    growth = _growth(f, y, T)
    r1, r2 = _from_real(B @ y)
    r1, r2 = _project(r1, r2, u1)
    mom = MomentVector(r1 / np.trace(r1).real, r2 / np.trace(r2).real, N)
    used = "newton" if solved else ("continuation" if method == "auto" else method)
    result = CumulantResult(mom, rates, {"method": used, "t_final": t,
                                         "residual": norm / (N * m.Gamma_c),
                                         "max_growth": growth, "history": history})
    if growth > GROWTH_TOL * fastest:
        raise NonStationaryError(
            f"stationary point is unstable (growth rate {growth:.3e} Gamma_c)", result)
    return result


__all__ = [
    "MomentVector", "CumulantResult", "cumulant_rhs", "cumulant_steady_state", "ground_product",
    "moment_orbits", "moment_count", "moment_label", "CumulantError", "IntegrationError",
    "NonStationaryError",
]
