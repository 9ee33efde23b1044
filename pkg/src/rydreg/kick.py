"""Impulsive half-cycle-pulse operator exp(iQz) on an m = 0 basis.

The plane wave is expanded in partial waves,

    exp(iQz) = sum_L i^L (2L+1) j_L(Qr) P_L(cos theta),

so each matrix element is a sum of angular factors times radial integrals of
spherical Bessel functions. The identity part is split off exactly, which
keeps K(Q=0) = I even though the radial functions are only orthonormal to
quadrature accuracy.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import spherical_jn

from .basis import BasisSet, GridSpec, RadialFunction, basis_radial_functions


class KickConvergenceError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def angular_coupling(l: int, lp: int, L: int) -> float:
    """<lp 0| P_L(cos theta) |l 0> for normalized m = 0 spherical harmonics."""
    if min(l, lp, L) < 0:
        return 0.0
    if not abs(l - lp) <= L <= l + lp or (l + lp + L) % 2:
        return 0.0
    return math.sqrt((2 * l + 1) * (2 * lp + 1)) * _three_j_zero(l, L, lp) ** 2


def _three_j_zero(a: int, b: int, c: int) -> float:
    # (a b c; 0 0 0) for a + b + c = 2g even, via log-factorials
    g = (a + b + c) // 2
    lf = math.lgamma
    log_val = 0.5 * (
        lf(2 * g - 2 * a + 1) + lf(2 * g - 2 * b + 1) + lf(2 * g - 2 * c + 1) - lf(2 * g + 2)
    ) + lf(g + 1) - lf(g - a + 1) - lf(g - b + 1) - lf(g - c + 1)
    return (-1) ** g * math.exp(log_val)


def _coupling_matrix(ls: np.ndarray, L: int) -> np.ndarray:
    # A[a, b] = <l_a| P_L |l_b>
    top = int(ls.max()) + 1
    table = np.array([[angular_coupling(lb, la, L) for lb in range(top)] for la in range(top)])
    return table[np.ix_(ls, ls)]


@dataclass(frozen=True)
class KickOperator:
    Q: float
    matrix: np.ndarray
    l_max: int  # highest partial wave kept
    residual: float  # largest element of the last term kept
    basis_key: str = ""

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def shape(self):
        return self.matrix.shape

    def conj(self) -> "KickOperator":
        return KickOperator(-self.Q, self.matrix.conj(), self.l_max, self.residual, self.basis_key)

    def inverse(self) -> "KickOperator":
        """Exact matrix inverse, for diagnostics (undoing a kick)."""
        inv = np.linalg.inv(self.matrix)
        return KickOperator(-self.Q, inv, self.l_max, self.residual, self.basis_key)


def basis_key(basis: BasisSet) -> str:
    return hashlib.sha256(basis.fingerprint().encode()).hexdigest()[:16]


def _radial_setup(basis, grid, radial):
    if radial is None:
        radial = basis_radial_functions(basis, grid)
    V = np.array([rf.values for rf in radial])
    r = radial[0].r
    w = radial[0].weights * r**2
    return V, r, w


def kick_matrix(
    basis: BasisSet,
    Q: float,
    l_max: int | None = None,
    grid: GridSpec = GridSpec(),
    radial: list[RadialFunction] | None = None,
    tol: float = 1e-10,
    l_cap: int = 40,
    cache_dir: str | Path | None = None,
) -> KickOperator:
    """Matrix of <a| exp(iQz) |b>.

    With ``l_max=None`` partial waves are added until two consecutive terms
    change no element by more than ``tol`` (odd and even L alternate between
    zero and non-zero for a given pair), up to ``l_cap``.
    """
    key = basis_key(basis)
    cache_file = None
    if cache_dir is not None:
        text = f"{key}|{grid!r}|{Q!r}|{l_max}|{tol}|{l_cap}"
        tag = hashlib.sha256(text.encode()).hexdigest()[:20]
        cache_file = Path(cache_dir) / f"kick_{tag}.npz"
        if cache_file.exists():
            with np.load(cache_file) as z:
                return KickOperator(float(z["Q"]), z["matrix"].copy(), int(z["l_max"]),
                                    float(z["residual"]), key)

    n = len(basis)
    K = np.eye(n, dtype=complex)
    if Q == 0:
        return KickOperator(0.0, K, 0, 0.0, key)

    V, r, w = _radial_setup(basis, grid, radial)
    ls = basis.ls
    cap = l_cap if l_max is None else l_max
    small = 0
    residual = math.inf
    L = 0
    worst = (0, 0, math.inf)
    for L in range(cap + 1):
        A = _coupling_matrix(ls, L)
        if not A.any():
            # L > 2 l_max: every higher partial wave vanishes on this basis
            L -= 1
            break
        jl = spherical_jn(L, Q * r)
        if L == 0:
            jl = jl - 1.0  # identity handled exactly
        M = (V * (w * jl)) @ V.T
        term = (1j**L) * (2 * L + 1) * A * M
        K += term
        residual = float(np.abs(term).max())
        if l_max is None:
            small = small + 1 if residual < tol else 0
            if small >= 2:
                break
            idx = np.unravel_index(np.argmax(np.abs(term)), term.shape)
            worst = (int(idx[0]), int(idx[1]), residual)
    else:
        if l_max is None:
            a, b, res = worst
            raise KickConvergenceError(
                f"partial waves not converged at L={cap}: "
                f"worst element {basis.labels[a]},{basis.labels[b]} term {res:.2e}"
            )

    op = KickOperator(float(Q), K, L, residual, key)
    if cache_file is not None:
        cache_file.parent.mkdir(parents=True, exist_ok=True)
        np.savez(cache_file, Q=op.Q, matrix=K, l_max=L, residual=residual)
    return op


def dipole_matrix(
    basis: BasisSet, grid: GridSpec = GridSpec(), radial: list[RadialFunction] | None = None
) -> np.ndarray:
    """Z[a, b] = <a| z |b>; non-zero only for l_a = l_b +- 1."""
    V, r, w = _radial_setup(basis, grid, radial)
    A = _coupling_matrix(basis.ls, 1)
    return A * ((V * (w * r)) @ V.T)


def first_order_kick(
    basis: BasisSet,
    Q: float,
    grid: GridSpec = GridSpec(),
    radial: list[RadialFunction] | None = None,
) -> np.ndarray:
    """Small-kick limit I + iQZ."""
    Z = dipole_matrix(basis, grid, radial)
    return np.eye(len(basis)) + 1j * Q * Z


def unitarity_defect(K: KickOperator | np.ndarray, subset=None) -> float:
    """max |(K^dagger K - I)| over the rows/columns in ``subset``."""
    M = K.matrix if isinstance(K, KickOperator) else np.asarray(K)
    G = M.conj().T @ M - np.eye(M.shape[0])
    if subset is not None:
        idx = np.asarray(list(subset), dtype=int)
        G = G[np.ix_(idx, idx)]
    return float(np.abs(G).max()) if G.size else 0.0
