"""Permutation-symmetric, U(1)-reduced Liouville basis of the three-level model.

States are labelled ``|k, r, r3, r3'>>`` which stands for the operator
``|r, r3><r - k/2, r3'|`` on the symmetric subspace.  ``r`` and ``r3`` are the
SU(2) quantum numbers of the d <-> s transition, so that a symmetric state with
``n_u`` atoms in u, ``n_d`` in d and ``n_s`` in s has ``r = (N - n_u)/2`` and
``r3 = (n_d - n_s)/2``.

All quantum numbers are stored doubled (``two_r = 2 r`` and so on) to keep them
integral.  Ordering inside a sector is lexicographic in
``(two_r, two_r3, two_r3p)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

SECTORS = (0, 1)

#: superoperator identifiers; ``L_``/``R_`` act from the left/right,
#: ``B_C`` is ``C- rho C+`` and ``B_P`` is ``P+ rho P-``.
SUPEROPS = (
    "L_R+",
    "R_R+",
    "L_R-",
    "R_R-",
    "B_C",
    "L_CC",
    "R_CC",
    "B_P",
    "L_PP",
    "R_PP",
)


class BasisState(NamedTuple):
    k: int
    two_r: int
    two_r3: int
    two_r3p: int


class SuperOpTerm(NamedTuple):
    target: BasisState
    amplitude: float


def _check_sector(k: int) -> None:
    if k not in SECTORS:
        raise ValueError(f"sector k must be 0 or 1, got {k!r}")


def dim_k0(N: int) -> int:
    """Size of the k=0 sector, ``sum_{j=0}^{N} (j+1)^2``."""
    # N^3/3 + 3N^2/2 + 13N/6 + 1 written over a common denominator
    return (2 * N**3 + 9 * N**2 + 13 * N + 6) // 6


def dim_k1(N: int) -> int:
    """Size of the k=1 sector, ``sum_{j=0}^{N} j (j+1) = N(N+1)(N+2)/3``."""
    return N * (N + 1) * (N + 2) // 3


def dim_total(N: int) -> int:
    """Combined size of both sectors, ``2N^3/3 + 5N^2/2 + 17N/6 + 1``."""
    return (4 * N**3 + 15 * N**2 + 17 * N + 6) // 6


def sector_dim(N: int, k: int) -> int:
    _check_sector(k)
    return dim_k0(N) if k == 0 else dim_k1(N)


def is_valid(s: BasisState, N: int) -> bool:
    k, tr, t3, t3p = s
    if k not in SECTORS or tr < 0 or tr > N or tr - k < 0:
        return False
    if abs(t3) > tr or abs(t3p) > tr - k:
        return False
    return (t3 - tr) % 2 == 0 and (t3p - tr + k) % 2 == 0


def enumerate_basis(N: int, k: int) -> list[BasisState]:
    """Every valid ``(k, 2r, 2r3, 2r3')`` tuple once, in index order."""
    _check_sector(k)
    if N < 1:
        raise ValueError("N must be >= 1")
    out = []
    for tr in range(N + 1):
        for t3 in range(-tr, tr + 1, 2):
            for t3p in range(-(tr - k), tr - k + 1, 2):
                out.append(BasisState(k, tr, t3, t3p))
    return out


@dataclass(frozen=True)
class BasisIndex:
    """Bidirectional map between basis states of one sector and integers.

    The index of a state is computed in closed form from block offsets, so the
    lookup arrays are only materialised once per ``(N, k)``.
    """

    N: int
    k: int
    two_r: np.ndarray
    two_r3: np.ndarray
    two_r3p: np.ndarray
    offsets: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.two_r.size)

    def index(self, s: BasisState) -> int:
        if s.k != self.k or not is_valid(s, self.N):
            raise KeyError(s)
        return state_index(self.offsets, self.k, s.two_r, s.two_r3, s.two_r3p)

    def state(self, i: int) -> BasisState:
        return BasisState(self.k, int(self.two_r[i]), int(self.two_r3[i]), int(self.two_r3p[i]))

    def populations(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Left-index occupation numbers ``(n_u, n_d, n_s)`` per state."""
        n_u = self.N - self.two_r
        n_d = (self.two_r + self.two_r3) // 2
        n_s = (self.two_r - self.two_r3) // 2
        return n_u, n_d, n_s

    def gauge_exponent(self) -> np.ndarray:
        """Integer ``m`` with ``rho_element = i**m * coefficient`` (see liouvillian)."""
        return (self.two_r3 - self.two_r3p - self.k) // 2


def block_offsets(N: int, k: int) -> np.ndarray:
    sizes = [(j + 1) * (j + 1 - k) for j in range(N + 1)]
    return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)


def state_index(offsets, k, two_r, two_r3, two_r3p):
    """Closed-form index; works elementwise on integer arrays too."""
    i3 = (two_r3 + two_r) // 2
    i3p = (two_r3p + two_r - k) // 2
    return offsets[two_r] + i3 * (two_r + 1 - k) + i3p


@lru_cache(maxsize=32)
def basis_index(N: int, k: int) -> BasisIndex:
    _check_sector(k)
    if N < 1:
        raise ValueError("N must be >= 1")
    tr_list, t3_list, t3p_list = [], [], []
    for tr in range(N + 1):
        n3p = tr + 1 - k
        if n3p <= 0:
            continue
        t3 = np.arange(-tr, tr + 1, 2)
        t3p = np.arange(-(tr - k), tr - k + 1, 2)
        g3, g3p = np.meshgrid(t3, t3p, indexing="ij")
        tr_list.append(np.full(g3.size, tr))
        t3_list.append(g3.ravel())
        t3p_list.append(g3p.ravel())
    arr = [np.concatenate(a).astype(np.int64) for a in (tr_list, t3_list, t3p_list)]
    for a in arr:
        a.setflags(write=False)
    offs = block_offsets(N, k)
    offs.setflags(write=False)
    return BasisIndex(N, k, arr[0], arr[1], arr[2], offs)


def _amplitudes(op: str, N: int, k: int, tr: int, t3: int, t3p: int):
    """(target, amplitude) pairs for one superoperator, in doubled units.

    Products are formed from integers and scaled by the power of two coming
    from the halved quantum numbers, so every amplitude is exact up to the
    final square root.
    """
    # doubled "r - k/2"
    trp = tr - k
    if op == "L_R+":
        return [((tr, t3 + 2, t3p), np.sqrt((tr - t3) * (tr + t3 + 2) / 4))]
    if op == "R_R+":
        return [((tr, t3, t3p - 2), np.sqrt((trp + t3p) * (trp - t3p + 2) / 4))]
    if op == "L_R-":
        return [((tr, t3 - 2, t3p), np.sqrt((tr + t3) * (tr - t3 + 2) / 4))]
    if op == "R_R-":
        return [((tr, t3, t3p + 2), np.sqrt((trp - t3p) * (trp + t3p + 2) / 4))]
    if op == "B_C":
        val = (N - tr) * (tr + t3 + 2) * (N - tr + k) * (trp + t3p + 2) / 4
        return [((tr + 1, t3 + 1, t3p + 1), np.sqrt(val))]
    if op == "L_CC":
        return [((tr, t3, t3p), (N - tr) * (tr + t3 + 2) / 2)]
    if op == "R_CC":
        return [((tr, t3, t3p), (N - tr + k) * (trp + t3p + 2) / 2)]
    if op == "B_P":
        val = (tr - t3) * (N - tr + 1) * (trp - t3p) * (N - tr + k + 1) / 4
        return [((tr - 1, t3 + 1, t3p + 1), np.sqrt(val))]
    if op == "L_PP":
        return [((tr, t3, t3p), (tr - t3) * (N - tr + 1) / 2)]
    if op == "R_PP":
        return [((tr, t3, t3p), (trp - t3p) * (N - tr + k + 1) / 2)]
    raise ValueError(f"unknown superoperator {op!r}")


def apply_superop(op: str, s: BasisState, N: int) -> list[SuperOpTerm]:
    """Action of one of the ten collective superoperators on a basis state.

    Zero amplitudes are dropped; any target outside the sector bounds carries a
    zero amplitude by construction and is dropped with it.
    """
    if op not in SUPEROPS:
        raise ValueError(f"unknown superoperator {op!r}")
    if not is_valid(s, N):
        raise ValueError(f"{s} is not a valid state for N={N}")
    out = []
    for (tr, t3, t3p), amp in _amplitudes(op, N, s.k, s.two_r, s.two_r3, s.two_r3p):
        if amp == 0.0:
            continue
        target = BasisState(s.k, tr, t3, t3p)
        assert is_valid(target, N), (op, s, target, amp)
        out.append(SuperOpTerm(target, float(amp)))
    return out


def population_weights(s: BasisState, N: int) -> tuple[int, int, int]:
    """Occupations ``(n_u, n_d, n_s)`` of the left (ket) index."""
    n_u = N - s.two_r
    n_d = (s.two_r + s.two_r3) // 2
    n_s = (s.two_r - s.two_r3) // 2
    return n_u, n_d, n_s


def identity_dual(N: int) -> np.ndarray:
    """Trace functional on the k=0 sector: 1 where ``r3' == r3``, else 0."""
    b = basis_index(N, 0)
    return (b.two_r3 == b.two_r3p).astype(float)
