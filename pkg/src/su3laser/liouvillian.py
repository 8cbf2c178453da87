"""Sparse Liouvillian generators on the reduced basis, plus the SU(2) model.

Gauge convention
----------------
For the SU(3) model a density-matrix element in the state ``|k, r, r3, r3'>>``
is stored as ``rho = i**m * x`` with ``m = (2 r3 - 2 r3' - k) / 2``.  In this
gauge the drive ``i Omega [rho, R_x]`` has real matrix elements and, together
with the purely real dissipators, the whole generator is real.  The dispersive
term ``i chi_x (L[C+C-] - R[C+C-])`` is diagonal and contributes the only
imaginary entries.  Every function that turns coefficients back into density
matrix elements applies the phase; see :func:`gauge_phase`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import su3basis as sb
from ._kernels import su3_triplets


class SectorError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparseGenerator:
    """Immutable sparse generator over one k-sector of the reduced basis."""

    matrix: sp.csc_matrix
    N: int
    k: int
    Omega: float
    Gamma_c: float
    W: float
    chi_x: float
    basis: sb.BasisIndex = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix.data)

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    @property
    def rates(self) -> dict:
        return dict(N=self.N, Omega=self.Omega, Gamma_c=self.Gamma_c, W=self.W, chi_x=self.chi_x)

    @cached_property
    def coords(self) -> np.ndarray:
        """Integer lattice coordinates ``(2r, i3, i3')`` used for orderings."""
        return lattice_coords(self.basis)

    @cached_property
    def trace_dual(self) -> np.ndarray:
        if self.k != 0:
            raise SectorError("the trace functional lives on the k=0 sector")
        return sb.identity_dual(self.N)

    @cached_property
    def norm_inf(self) -> float:
        return float(abs(self.matrix).sum(axis=1).max()) if self.nnz else 0.0

    def export_matrix_market(self, path) -> None:
        scipy.io.mmwrite(
            str(path), self.matrix,
            comment=f"SU(3) generator N={self.N} k={self.k} Omega={self.Omega!r} "
            f"Gamma_c={self.Gamma_c!r} W={self.W!r} chi_x={self.chi_x!r}",
        )


def lattice_coords(b: sb.BasisIndex) -> np.ndarray:
    i3 = (b.two_r3 + b.two_r) // 2
    i3p = (b.two_r3p + b.two_r - b.k) // 2
    return np.stack([b.two_r, i3, i3p], axis=1)


def gauge_phase(b: sb.BasisIndex) -> np.ndarray:
    """``i**m`` per basis state (complex array)."""
    return 1j ** (b.gauge_exponent() % 4)


def _check_rates(Omega, Gamma_c, W, chi_x):
    for name, v in (("Omega", Omega), ("Gamma_c", Gamma_c), ("W", W), ("chi_x", chi_x)):
        if not np.isfinite(v):
            raise ValueError(f"{name} must be finite")
    if Gamma_c < 0 or W < 0:
        raise ValueError("Gamma_c and W must be non-negative")


def assemble_su3(N: int, Omega: float, Gamma_c: float, W: float, chi_x: float = 0.0,
                 k: int = 0, *, use_numba: bool | None = None) -> SparseGenerator:
    """Collective SU(3) generator on sector ``k``.

    Only the collective channels are accepted; single-particle processes leave
    the symmetric subspace and are handled by the mean-field and cumulant
    engines instead.
    """
    if k not in sb.SECTORS:
        raise SectorError(f"sector k must be 0 or 1, got {k!r}")
    _check_rates(Omega, Gamma_c, W, chi_x)
    b = sb.basis_index(N, k)
    rows, cols, vals, diag_im = su3_triplets(
        N, k, b.offsets, b.two_r, b.two_r3, b.two_r3p, Omega, Gamma_c, W, chi_x,
        use_numba=use_numba,
    )
    n = b.dim
    M = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    if chi_x != 0.0:
        M = (M + sp.diags(1j * diag_im, format="csc")).tocsc()
    M.eliminate_zeros()
    M.sort_indices()
    return SparseGenerator(M, N, k, float(Omega), float(Gamma_c), float(W), float(chi_x), b)


def dispersive_diagonal(N: int, k: int) -> np.ndarray:
    """Diagonal of ``L[C+C-] - R[C+C-]``; ``d L / d chi_x = i * diag(this)``."""
    b = sb.basis_index(N, k)
    tr, t3, t3p = b.two_r, b.two_r3, b.two_r3p
    lcc = (N - tr) * (tr + t3 + 2) / 2.0
    rcc = (N - tr + k) * (tr - k + t3p + 2) / 2.0
    return lcc - rcc


# --- swap symmetry of the k=0 sector ---------------------------------------


@dataclass(frozen=True, eq=False)
class SymmetricReduction:
    """Restriction of a real k=0 generator to swap-even vectors.

    Hermiticity of ``rho`` together with the gauge above means the real
    coefficients satisfy ``x[r, r3, r3'] = x[r, r3', r3]``.  ``reps`` holds one
    index per orbit (``r3 <= r3'``) and ``expand`` maps orbit coefficients back
    to the full sector.
    """

    matrix: sp.csc_matrix
    reps: np.ndarray
    expand: sp.csr_matrix
    coords: np.ndarray
    parent: SparseGenerator = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def swap_partner(b: sb.BasisIndex) -> np.ndarray:
    if b.k != 0:
        raise SectorError("swap symmetry is defined on k=0 only")
    return sb.state_index(b.offsets, 0, b.two_r, b.two_r3p, b.two_r3)


def reduce_symmetric(L: SparseGenerator) -> SymmetricReduction:
    if L.k != 0:
        raise SectorError("swap reduction needs the k=0 sector")
    if not L.is_real:
        raise ValueError("swap reduction needs a real generator (chi_x = 0)")
    b = L.basis
    partner = swap_partner(b)
    reps = np.flatnonzero(b.two_r3 <= b.two_r3p)
    orbit = np.empty(b.dim, dtype=np.int64)
    orbit[reps] = np.arange(reps.size)
    orbit[partner[reps]] = np.arange(reps.size)
    E = sp.csr_matrix((np.ones(b.dim), (np.arange(b.dim), orbit)), shape=(b.dim, reps.size))
    Lr = (L.matrix.tocsr()[reps] @ E).tocsc()
    Lr.sort_indices()
    return SymmetricReduction(Lr, reps, E, L.coords[reps], L)


# --- SU(2) comparison model --------------------------------------------------


@dataclass(frozen=True, eq=False)
class Su2Generator:
    """Generator on the ``(N+1)^2`` Liouville space of the ``j = N/2`` manifold.

    Vectorisation is row-major: ``rho[a, b]`` sits at ``a * (N+1) + b`` with
    ``a = m + j``.
    """

    matrix: sp.csc_matrix
    N: int
    W: float
    Gamma_c: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def trace_dual(self) -> np.ndarray:
        return np.eye(self.N + 1).ravel()

    @cached_property
    def norm_inf(self) -> float:
        return float(abs(self.matrix).sum(axis=1).max()) if self.matrix.nnz else 0.0

    @cached_property
    def coords(self) -> np.ndarray:
        a, b = np.divmod(np.arange(self.dim), self.N + 1)
        return np.stack([a, b], axis=1)

    def lowering(self) -> sp.csr_matrix:
        return su2_lowering(self.N)


def su2_lowering(N: int) -> sp.csr_matrix:
    j = N / 2
    m = np.arange(N + 1) - j  # index a <-> m = a - j
    # J- |m> = sqrt((j + m)(j - m + 1)) |m - 1>
    amp = np.sqrt((j + m[1:]) * (j - m[1:] + 1))
    return sp.csr_matrix((amp, (np.arange(N), np.arange(1, N + 1))), shape=(N + 1, N + 1))


def _dissipator(J: sp.spmatrix) -> sp.spmatrix:
    n = J.shape[0]
    I = sp.identity(n, format="csr")
    JdJ = (J.conj().T @ J).tocsr()
    return sp.kron(J, J.conj()) - 0.5 * sp.kron(JdJ, I) - 0.5 * sp.kron(I, JdJ.T)


def assemble_su2(N: int, W: float, Gamma_c: float) -> Su2Generator:
    if W < 0 or Gamma_c < 0:
        raise ValueError("W and Gamma_c must be non-negative")
    if N < 1:
        raise ValueError("N must be >= 1")
    Jm = su2_lowering(N)
    M = Gamma_c * _dissipator(Jm) + W * _dissipator(Jm.T.tocsr())
    M = sp.csc_matrix(M)
    M.eliminate_zeros()
    M.sort_indices()
    return Su2Generator(M, N, float(W), float(Gamma_c))


__all__ = [
    "SparseGenerator", "SymmetricReduction", "Su2Generator", "SectorError",
    "assemble_su3", "assemble_su2", "reduce_symmetric", "swap_partner",
    "gauge_phase", "lattice_coords", "dispersive_diagonal", "su2_lowering",
]
