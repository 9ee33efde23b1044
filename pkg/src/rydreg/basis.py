"""Quantum-defect level structure and Coulomb-approximation radial functions.

Energies follow E = -1/(2 n_eff^2) with n_eff = n - delta_l. Radial functions
are obtained by inward Numerov integration of the pure Coulomb radial equation
at that energy on a mesh uniform in x = sqrt(r). Everything is in atomic units
unless a name says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

AU_TIME_PS = 2.4188843265857e-5  # one atomic unit of time in ps

L_LETTERS = "spdfghiklmnoqrtuv"


class ConfigurationError(ValueError):
    """Invalid physical or numerical configuration."""


class IntegrationError(RuntimeError):
    """Radial integration produced a solution that is not a bound state."""


def level_label(n: int, l: int) -> str:
    return f"{n}{L_LETTERS[l]}" if l < len(L_LETTERS) else f"{n}[l={l}]"


@dataclass(frozen=True)
class QuantumDefects:
    """Per-l quantum defects. l beyond the stored list uses ``default``."""

    values: tuple[float, ...]
    atom: str = "Cs"
    default: float = 0.0

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v < 0 for v in vals) or self.default < 0:
            raise ConfigurationError("quantum defects must be non-negative")
        object.__setattr__(self, "values", vals)

    def __call__(self, l: int) -> float:
        return self.values[l] if l < len(self.values) else self.default

    @classmethod
    def hydrogen(cls) -> "QuantumDefects":
        return cls((), atom="H")

    @classmethod
    def cesium(cls) -> "QuantumDefects":
        return cls((4.049, 3.59, 2.475, 0.033), atom="Cs")


def effective_n(n: int, l: int, defects: QuantumDefects) -> float:
    if not (isinstance(n, (int, np.integer)) and n >= 1 and 0 <= l < n):
        raise ConfigurationError(f"invalid quantum numbers n={n}, l={l}")
    n_eff = n - defects(l)
    if n_eff <= 0:
        raise ConfigurationError(f"n_eff={n_eff} <= 0 for n={n}, l={l}")
    return n_eff


def level_energy(n: int, l: int, defects: QuantumDefects) -> float:
    """Binding energy in Hartree."""
    n_eff = effective_n(n, l, defects)
    return -0.5 / (n_eff * n_eff)


def kepler_period(n_eff: float) -> float:
    """Classical orbit period 2 pi n_eff^3, in ps."""
    if n_eff <= 0:
        raise ConfigurationError("n_eff must be positive")
    return 2.0 * math.pi * n_eff**3 * AU_TIME_PS


@dataclass(frozen=True)
class RydbergLevel:
    n: int
    l: int
    n_eff: float
    energy: float
    omega: float = 0.0  # |E - E_launch|, a.u.

    @property
    def label(self) -> str:
        return level_label(self.n, self.l)

    @property
    def kepler_ps(self) -> float:
        return kepler_period(self.n_eff)


@dataclass(frozen=True)
class BasisSet:
    """Ordered m = 0 levels (ascending l, then n) with register/interior flags."""

    levels: tuple[RydbergLevel, ...]
    defects: QuantumDefects
    register: tuple[int, ...] = ()
    interior: tuple[int, ...] = ()
    launch_energy: float = 0.0
    _index: Mapping[tuple[int, int], int] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        index = {(lv.n, lv.l): i for i, lv in enumerate(self.levels)}
        if len(index) != len(self.levels):
            raise ConfigurationError("duplicate (n, l) in basis")
        if not set(self.register) <= set(self.interior):
            raise ConfigurationError("register states must lie in the interior set")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.levels)

    def index(self, n: int, l: int) -> int:
        try:
            return self._index[(n, l)]
        except KeyError:
            raise KeyError(f"{level_label(n, l)} not in basis") from None

    def find(self, label: str | tuple[int, int]) -> int:
        if isinstance(label, str):
            n = int(label[:-1])
            l = L_LETTERS.index(label[-1])
            return self.index(n, l)
        return self.index(*label)

    def __contains__(self, key) -> bool:
        return tuple(key) in self._index

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels])

    @property
    def omegas(self) -> np.ndarray:
        return np.array([lv.omega for lv in self.levels])

    @property
    def ls(self) -> np.ndarray:
        return np.array([lv.l for lv in self.levels])

    @property
    def ns(self) -> np.ndarray:
        return np.array([lv.n for lv in self.levels])

    @property
    def labels(self) -> list[str]:
        return [lv.label for lv in self.levels]

    def fingerprint(self) -> str:
        """Stable text digest input used for caching."""
        parts = [f"{lv.n},{lv.l},{lv.energy:.17g},{lv.omega:.17g}" for lv in self.levels]
        parts.append(f"reg={self.register};int={self.interior}")
        return "|".join(parts)


def build_basis(
    n_range: Sequence[int],
    l_max: int,
    defects: QuantumDefects,
    register_n: Iterable[int] = (),
    register_l: int = 1,
    padding: int = 3,
    edge: int = 2,
    launch: tuple[int, int] | None = None,
    interior_n: Sequence[int] | None = None,
    interior_l_max: int | None = None,
) -> BasisSet:
    """Build the truncated basis n_range[0]..n_range[1] (inclusive), l <= l_max.

    Levels with l >= n are skipped. ``register_n`` selects the l = register_l
    states that carry data; each needs ``padding`` n-values of headroom on
    either side. By default the interior set drops the outermost ``edge``
    n-values at each end and l = l_max; ``interior_n`` (inclusive range) and
    ``interior_l_max`` narrow it explicitly. ``launch`` sets the zero of the
    fringe frequencies.
    """
    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    if n_lo < 1 or n_hi < n_lo:
        raise ConfigurationError(f"empty n range {n_range}")
    if l_max < 0 or l_max >= n_hi:
        raise ConfigurationError(f"l_max={l_max} incompatible with n range {n_range}")
    register_n = sorted(set(int(n) for n in register_n))
    for n in register_n:
        if n - padding < n_lo or n + padding > n_hi:
            raise ConfigurationError(
                f"register n={n} needs {padding} levels of padding inside {n_lo}..{n_hi}"
            )
        if register_l > l_max or register_l >= n:
            raise ConfigurationError(f"register level {level_label(n, register_l)} outside basis")

    e_launch = level_energy(*launch, defects) if launch is not None else 0.0
    levels = []
    for l in range(l_max + 1):
        for n in range(max(n_lo, l + 1), n_hi + 1):
            e = level_energy(n, l, defects)
            levels.append(RydbergLevel(n, l, n - defects(l), e, abs(e - e_launch)))
    levels = tuple(levels)

    in_lo, in_hi = (n_lo + edge, n_hi - edge) if interior_n is None else interior_n
    in_lo, in_hi = max(in_lo, n_lo + edge), min(in_hi, n_hi - edge)
    in_l = l_max - 1 if interior_l_max is None else min(interior_l_max, l_max - 1)
    interior = tuple(
        i for i, lv in enumerate(levels) if in_lo <= lv.n <= in_hi and lv.l <= in_l
    )
    reg = tuple(i for i, lv in enumerate(levels) if lv.l == register_l and lv.n in register_n)
    return BasisSet(levels, defects, reg, interior, e_launch)


# --- radial functions -------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Mesh uniform in x = sqrt(r).

    ``step`` is the x spacing; the default resolves the Coulomb de Broglie
    wavelength (2 pi / sqrt(8) in x) with ``points_per_wavelength`` points.
    The outer edge is max(outer_factor * n_eff^2, 2 n_eff (n_eff + outer_pad)).
    """

    points_per_wavelength: float = 20.0
    step: float | None = None
    r_min: float = 2.5e-3
    outer_factor: float = 2.5
    outer_pad: float = 20.0
    r_max: float | None = None
    inner_tolerance: float = 0.5

    @property
    def h(self) -> float:
        if self.step is not None:
            return self.step
        return 2.0 * math.pi / math.sqrt(8.0) / self.points_per_wavelength

    def outer_radius(self, n_eff: float) -> float:
        return max(self.outer_factor * n_eff**2, 2.0 * n_eff * (n_eff + self.outer_pad))

    def mesh(self, r_outer: float) -> np.ndarray:
        """x points from x_min to at least sqrt(r_outer)."""
        h = self.h
        x_min = max(h, math.sqrt(self.r_min))
        n_pts = int(math.ceil((math.sqrt(r_outer) - x_min) / h)) + 1
        return x_min + h * np.arange(n_pts)


@dataclass(frozen=True)
class RadialFunction:
    """Samples of R_{nl}(r) on a sqrt mesh, with trapezoid weights dr."""

    r: np.ndarray
    values: np.ndarray
    level: RydbergLevel
    h: float

    @property
    def x(self) -> np.ndarray:
        return np.sqrt(self.r)

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights w such that sum(w f) ~ int f(r) dr."""
        return _trapezoid_weights(self.x, self.h)

    def norm(self) -> float:
        return float(np.sum(self.weights * self.values**2 * self.r**2))


def _trapezoid_weights(x: np.ndarray, h: float) -> np.ndarray:
    # dr = 2x dx; end points of the x trapezoid rule get half weight
    w = 2.0 * x * h
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _numerov_inward(g: np.ndarray, h: float, start: int) -> np.ndarray:
    """Solve y'' = g y inward from index ``start`` down to 0."""
    y = np.zeros_like(g)
    f = 1.0 - h * h * g / 12.0
    y[start] = 1e-30
    y[start - 1] = 1e-30 * math.exp(math.sqrt(max(g[start], 0.0)) * h)
    for i in range(start - 1, 0, -1):
        y[i - 1] = ((12.0 - 10.0 * f[i]) * y[i] - f[i + 1] * y[i + 1]) / f[i - 1]
        if abs(y[i - 1]) > 1e250:
            y[i - 1 :] *= 1e-250
    return y


def radial_wavefunction(
    level: RydbergLevel, grid: GridSpec = GridSpec(), x: np.ndarray | None = None
) -> RadialFunction:
    """Coulomb-approximation R_{nl}(r) at the level's quantum-defect energy.

    Works with chi(x) = x^{3/2} R(x^2), which obeys
    chi'' = [(2l + 1/2)(2l + 3/2)/x^2 - 8 - 8 E x^2] chi for V = -1/r.
    Passing ``x`` forces a shared mesh; its spacing must be uniform.
    """
    n_eff, l, energy = level.n_eff, level.l, level.energy
    r_outer = grid.r_max if grid.r_max is not None else grid.outer_radius(n_eff)
    if x is None:
        x = grid.mesh(r_outer)
        h = grid.h
    else:
        x = np.asarray(x, dtype=float)
        h = float(x[1] - x[0])
    if x[-1] ** 2 < grid.outer_factor * n_eff**2 * (1 - 1e-12):
        raise ConfigurationError(
            f"mesh ends at r={x[-1]**2:.1f} < {grid.outer_factor} n_eff^2 for {level.label}"
        )
    start = min(len(x) - 1, int(np.searchsorted(x, math.sqrt(r_outer))))

    g = (2 * l + 0.5) * (2 * l + 1.5) / x**2 - 8.0 - 8.0 * energy * x**2
    chi = _numerov_inward(g, h, start)
    if not np.all(np.isfinite(chi)):
        raise IntegrationError(f"non-finite solution for {level.label}")

    r = x**2
    u = chi * np.sqrt(x)  # u = r R
    cut = _inner_cut(u, r, l)
    u[:cut] = 0.0
    peak = np.max(np.abs(u))
    if cut > 0 and abs(u[cut]) > grid.inner_tolerance * peak:
        raise IntegrationError(
            f"{level.label}: solution still large at inner cut r={r[cut]:.3g} "
            f"({abs(u[cut]) / peak:.2g} of peak)"
        )

    R = np.zeros_like(u)
    R[cut:] = u[cut:] / r[cut:]
    w = _trapezoid_weights(x, h)
    norm = np.sum(w * R**2 * r**2)
    if cut == 0:
        # mesh starts above r = 0; R ~ r^l below the first point
        norm += R[0] ** 2 * r[0] ** 3 / (2 * l + 3)
    R /= math.sqrt(norm)
    R *= _sign_convention(u)
    return RadialFunction(r, R, level, h)


def _inner_cut(u: np.ndarray, r: np.ndarray, l: int) -> int:
    """First index kept: below the inner turning point, stop where |u| turns up."""
    r_turn = max(l * (l + 1) / 2.0, 0.5)
    i = int(np.searchsorted(r, r_turn))
    a = np.abs(u)
    while i > 0 and a[i - 1] <= a[i]:
        i -= 1
    return i if i > 0 and a[i - 1] > a[i] else 0


def _sign_convention(u: np.ndarray) -> float:
    # positive on the innermost significant lobe, as for hydrogen R_nl(r -> 0)
    a = np.abs(u)
    thresh = 1e-3 * a.max()
    for i in range(1, len(u) - 1):
        if a[i] > thresh and a[i] >= a[i - 1] and a[i] >= a[i + 1]:
            return 1.0 if u[i] > 0 else -1.0
    return 1.0


def basis_radial_functions(
    basis: BasisSet, grid: GridSpec = GridSpec(), orthonormalize: bool = True
) -> list[RadialFunction]:
    """Radial functions for every level on one shared mesh.

    Cutting the core region leaves same-l overlaps of order 1e-4; with
    ``orthonormalize`` each l block is symmetrically (Loewdin) orthonormalized,
    which changes each function by the same small amount.
    """
    r_outer = max(
        grid.r_max if grid.r_max is not None else grid.outer_radius(lv.n_eff)
        for lv in basis.levels
    )
    x = grid.mesh(r_outer)
    rfs = [radial_wavefunction(lv, grid, x=x) for lv in basis.levels]
    if not orthonormalize:
        return rfs
    w = rfs[0].weights * rfs[0].r ** 2
    ls = basis.ls
    for l in np.unique(ls):
        idx = np.flatnonzero(ls == l)
        V = np.array([rfs[i].values for i in idx])
        S = (V * w) @ V.T
        evals, evecs = np.linalg.eigh(S)
        V = (evecs @ np.diag(evals**-0.5) @ evecs.T) @ V
        for row, i in zip(V, idx):
            rfs[i] = RadialFunction(rfs[i].r, row, rfs[i].level, rfs[i].h)
    return rfs


def radial_integral(
    f: RadialFunction,
    g: RadialFunction,
    kernel: Callable[[np.ndarray], np.ndarray] | None = None,
    resample: bool = False,
) -> float:
    """int f(r) kernel(r) g(r) r^2 dr with the mesh's trapezoid rule."""
    if f.r.shape != g.r.shape or not np.array_equal(f.r, g.r):
        if not resample:
            raise ValueError(
                f"{f.level.label} and {g.level.label} live on different meshes; "
                "pass resample=True"
            )
        g = _resample(g, f)
    k = 1.0 if kernel is None else kernel(f.r)
    return float(np.sum(f.weights * f.values * k * g.values * f.r**2))


def _resample(g: RadialFunction, onto: RadialFunction) -> RadialFunction:
    vals = np.interp(onto.r, g.r, g.values, left=0.0, right=0.0)
    return RadialFunction(onto.r, vals, g.level, onto.h)


def hydrogen_radial(n: int, l: int, r: np.ndarray) -> np.ndarray:
    """Closed-form hydrogen R_{nl}(r), standard sign (positive near r = 0)."""
    from scipy.special import genlaguerre

    rho = 2.0 * r / n
    norm = math.sqrt((2.0 / n) ** 3 * math.factorial(n - l - 1) / (2 * n * math.factorial(n + l)))
    return norm * np.exp(-rho / 2) * rho**l * genlaguerre(n - l - 1, 2 * l + 1)(rho)
