"""Dense tensor-product reference model for N <= 3 atoms.

Built directly from single-atom operators with no symmetry assumptions, so it
serves as an independent check of the reduced-basis code.  Level order is
``(u, d, s)``; Liouville vectors are row-major flattenings of ``rho``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import su3basis as sb
from .liouvillian import gauge_phase

U, D, S = 0, 1, 2
MAX_N = 3


def _e(a: int, b: int) -> np.ndarray:
    m = np.zeros((3, 3))
    m[a, b] = 1.0
    return m


def sigma(a: int, b: int) -> np.ndarray:
    """``|a><b|`` on one atom."""
    return _e(a, b)


def local(op: np.ndarray, j: int, N: int) -> np.ndarray:
    out = np.ones((1, 1))
    for i in range(N):
        out = np.kron(out, op if i == j else np.eye(3))
    return out


def collective(a: int, b: int, N: int) -> np.ndarray:
    return sum(local(sigma(a, b), j, N) for j in range(N))


def _dissipator(J: np.ndarray) -> np.ndarray:
    n = J.shape[0]
    I = np.eye(n)
    JdJ = J.conj().T @ J
    return np.kron(J, J.conj()) - 0.5 * np.kron(JdJ, I) - 0.5 * np.kron(I, JdJ.T)


def _check_N(N: int) -> None:
    if not 1 <= N <= MAX_N:
        raise ValueError(f"brute-force model supports 1 <= N <= {MAX_N}, got {N}")


def brute_force_liouvillian(N: int, Omega: float = 0.0, Gamma_c: float = 0.0, W: float = 0.0,
                            chi_x: float = 0.0, gamma_d: float = 0.0, gamma_s: float = 0.0,
                            w: float = 0.0, gamma_p: float = 0.0) -> np.ndarray:
    """Full ``3^{2N}``-dimensional generator including single-particle terms."""
    _check_N(N)
    Cm = collective(D, U, N)
    Pp = collective(U, S, N)
    Rp = collective(D, S, N)
    H = 0.5 * Omega * (Rp + Rp.T) - chi_x * (Cm.T @ Cm)
    n = 3**N
    I = np.eye(n)
    L = -1j * (np.kron(H, I) - np.kron(I, H.T))
    L = L + Gamma_c * _dissipator(Cm) + W * _dissipator(Pp)
    for rate, (a, b) in ((gamma_d, (D, U)), (gamma_s, (S, U)), (w, (U, S)), (gamma_p, (S, S))):
        if rate:
            for j in range(N):
                L = L + rate * _dissipator(local(sigma(a, b), j, N))
    if not chi_x and not Omega:
        return L.real.copy()
    return L


# --- symmetric subspace -----------------------------------------------------


def occupations(N: int) -> list[tuple[int, int, int]]:
    """All ``(n_u, n_d, n_s)`` with sum N."""
    return [(N - a - b, a, b) for a in range(N + 1) for b in range(N + 1 - a)]


def symmetric_state(n: tuple[int, int, int]) -> np.ndarray:
    """Normalised symmetrised product state with the given occupations."""
    N = sum(n)
    levels = [U] * n[0] + [D] * n[1] + [S] * n[2]
    vec = np.zeros(3**N)
    for perm in set(itertools.permutations(levels)):
        idx = 0
        for lv in perm:
            idx = idx * 3 + lv
        vec[idx] = 1.0
    return vec / np.linalg.norm(vec)


def occupations_of(two_r: int, two_r3: int, N: int) -> tuple[int, int, int]:
    return (N - two_r, (two_r + two_r3) // 2, (two_r - two_r3) // 2)


def sector_embedding(N: int, k: int) -> np.ndarray:
    """Columns are the full Liouville vectors of the gauged basis states.

    A reduced coefficient vector ``x`` corresponds to the full vector
    ``T @ x``; because the columns are orthonormal, ``T^H L T`` is the
    reduced-basis form of a full generator ``L``.
    """
    _check_N(N)
    b = sb.basis_index(N, k)
    phase = gauge_phase(b)
    cache: dict[tuple[int, int, int], np.ndarray] = {}

    def ket(n):
        if n not in cache:
            cache[n] = symmetric_state(n)
        return cache[n]

    T = np.zeros((9**N, b.dim), dtype=complex)
    for i in range(b.dim):
        tr, t3, t3p = int(b.two_r[i]), int(b.two_r3[i]), int(b.two_r3p[i])
        left = ket(occupations_of(tr, t3, N))
        right = ket(occupations_of(tr - k, t3p, N))
        T[:, i] = phase[i] * np.kron(left, right)
    return T


def restrict(L: np.ndarray, N: int, k: int) -> np.ndarray:
    T = sector_embedding(N, k)
    return T.conj().T @ L @ T


# --- steady state and observables -------------------------------------------


def symmetric_isometry(N: int) -> np.ndarray:
    """Columns are the normalised symmetric states, one per occupation tuple."""
    return np.array([symmetric_state(n) for n in occupations(N)]).T


def _kernel(L: np.ndarray) -> np.ndarray:
    _, s, vh = np.linalg.svd(L)
    if s.size > 1 and s[-2] < 1e-9 * s[0]:
        raise np.linalg.LinAlgError("degenerate kernel in brute-force model")
    return vh[-1].conj()


def steady_state(L: np.ndarray, N: int | None = None, symmetric: bool = False) -> np.ndarray:
    """Unit-trace density matrix spanning the kernel of ``L``.

    Without single-particle terms the full space has one stationary state per
    permutation-symmetry sector; ``symmetric=True`` restricts to operators on
    the symmetric subspace first, where the kernel is one-dimensional.
    """
    n = int(round(math.sqrt(L.shape[0])))
    if symmetric:
        if N is None:
            N = int(round(math.log(n, 3)))
        B = symmetric_isometry(N)
        T = np.kron(B, B)
        X = _kernel(T.T @ L @ T).reshape(B.shape[1], B.shape[1])
        rho = B @ X @ B.T
    else:
        rho = _kernel(L).reshape(n, n)
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


def observables(rho: np.ndarray, N: int) -> dict[str, float]:
    Cm = collective(D, U, N)
    Cp = Cm.T
    n_u = sum(local(sigma(U, U), j, N) for j in range(N))
    n_d = sum(local(sigma(D, D), j, N) for j in range(N))
    n_s = sum(local(sigma(S, S), j, N) for j in range(N))
    ev = lambda op: float(np.real(np.trace(op @ rho)))
    inten = ev(Cp @ Cm)
    num = ev(Cp @ Cp @ Cm @ Cm)
    return {
        "intensity": inten,
        "g2": num / inten**2 if inten > 0 else float("nan"),
        "cz": 0.5 * (ev(n_u) - ev(n_d)),
        "n_u": ev(n_u),
        "n_d": ev(n_d),
        "n_s": ev(n_s),
    }


def coherence_sector(L: np.ndarray, N: int) -> np.ndarray:
    """Block of ``L`` on symmetric ket x symmetric bra with one fewer u on the bra side."""
    _check_N(N)
    states = {n: symmetric_state(n) for n in occupations(N)}
    cols = [np.kron(states[a], states[b]) for a in states for b in states if a[0] - b[0] == 1]
    T = np.array(cols).T
    return T.T @ L @ T


__all__ = [
    "brute_force_liouvillian", "sector_embedding", "restrict", "steady_state",
    "observables", "coherence_sector", "symmetric_isometry", "symmetric_state", "occupations",
    "collective", "local", "sigma",
]
