"""SSFI binning, additive shot noise and reference-delay scans."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import AU_TIME_PS, BasisSet, ConfigurationError, level_label
from .kick import KickOperator
from .register import PulseSequence, WavePacket, holographic_populations, run_sequence


@dataclass(frozen=True)
class Bin:
    name: str
    members: tuple[int, ...]  # basis indices
    sigma: float = 0.0  # per-shot noise std, population units
    register: bool = False  # used by the correlation stage
    omega: float = 0.0  # fringe frequency of the register member, a.u.


@dataclass(frozen=True)
class SsfiModel:
    bins: tuple[Bin, ...]
    merge_window: float | None = None  # energy window (a.u.) used to build the bins

    def __post_init__(self):
        seen = {}
        for b in self.bins:
            for m in b.members:
                if m in seen:
                    raise ConfigurationError(f"level index {m} in bins {seen[m]} and {b.name}")
                seen[m] = b.name

    @property
    def names(self) -> list[str]:
        return [b.name for b in self.bins]

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([b.sigma for b in self.bins])

    @property
    def members(self) -> list[int]:
        return [m for b in self.bins for m in b.members]

    def register_bins(self) -> list[int]:
        return [i for i, b in enumerate(self.bins) if b.register]

    def with_sigma(self, sigma: float | Sequence[float]) -> "SsfiModel":
        s = np.broadcast_to(np.asarray(sigma, dtype=float), (len(self.bins),))
        bins = tuple(Bin(b.name, b.members, float(x), b.register, b.omega) for b, x in zip(self.bins, s))
        return SsfiModel(bins, self.merge_window)


def default_ssfi_model(
    basis: BasisSet,
    register_n: Sequence[int],
    sigma: float = 0.0,
    register_l: int = 1,
    partner_l: int = 2,
    include_s: bool = True,
) -> SsfiModel:
    """One bin per register np level that also holds the unresolved (n-1)d.

    With ``include_s`` every ns with n in the register range gets its own bin,
    which the correlation stage ignores.
    """
    bins = []
    for n in sorted(register_n):
        j = basis.index(n, register_l)
        members = [j]
        if (n - 1, partner_l) in basis:
            members.append(basis.index(n - 1, partner_l))
        bins.append(Bin(level_label(n, register_l), tuple(members), sigma, True, basis.levels[j].omega))
    if include_s:
        for n in sorted(register_n):
            if (n, 0) in basis:
                i = basis.index(n, 0)
                bins.append(Bin(level_label(n, 0), (i,), sigma, False, basis.levels[i].omega))
    return SsfiModel(tuple(bins))


def merged_ssfi_model(
    basis: BasisSet, levels: Sequence[int], window: float, sigma: float = 0.0
) -> SsfiModel:
    """Bins formed by merging levels whose energies lie within ``window`` (a.u.)."""
    order = sorted(levels, key=lambda i: basis.levels[i].energy)
    groups: list[list[int]] = []
    for i in order:
        if groups and basis.levels[i].energy - basis.levels[groups[-1][0]].energy <= window:
            groups[-1].append(i)
        else:
            groups.append([i])
    reg = set(basis.register)
    bins = []
    for g in groups:
        regs = [i for i in g if i in reg]
        name = "+".join(basis.labels[i] for i in g)
        omega = basis.levels[regs[0]].omega if regs else 0.0
        bins.append(Bin(name, tuple(g), sigma, len(regs) == 1, omega))
    return SsfiModel(tuple(bins), window)


@dataclass
class BinnedPopulations:
    values: np.ndarray  # (..., n_bins)
    lost: np.ndarray  # (...) population outside every bin
    lost_levels: list[str] = field(default_factory=list)


def ssfi_bin(P: np.ndarray, model: SsfiModel, basis: BasisSet | None = None,
             tol: float = 1e-12) -> BinnedPopulations:
    """Sum per-level populations into bins; unbinned population goes to ``lost``."""
    P = np.asarray(P, dtype=float)
    out = np.stack([P[..., list(b.members)].sum(axis=-1) for b in model.bins], axis=-1)
    lost = P.sum(axis=-1) - out.sum(axis=-1)
    binned = set(model.members)
    spill = [i for i in range(P.shape[-1]) if i not in binned and np.any(P[..., i] > tol)]
    names = [basis.labels[i] for i in spill] if basis is not None else [str(i) for i in spill]
    return BinnedPopulations(out, lost, names)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def add_noise(values: np.ndarray, sigma, seed, shots: int | None = None) -> np.ndarray:
    """Add independent zero-mean Gaussian noise, one draw per bin and shot.

    ``values`` has bins on the last axis; ``sigma`` is scalar or per bin. With
    ``shots`` the result gains a leading shot axis.
    """
    values = np.asarray(values, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    shape = values.shape if shots is None else (shots,) + values.shape
    if not np.any(sigma > 0):
        return np.broadcast_to(values, shape).copy()
    return values + sigma * _rng(seed).standard_normal(shape)


@dataclass(frozen=True)
class TauGrid:
    """Fine reference-delay windows centred on a coarse grid (all ps)."""

    coarse_start: float = 0.06
    coarse_stop: float = 25.0
    coarse_step: float = 0.25
    window: float = 0.120
    step: float = 0.0004

    def centers(self) -> np.ndarray:
        n = int(math.floor((self.coarse_stop - self.coarse_start) / self.coarse_step + 1e-9)) + 1
        return self.coarse_start + self.coarse_step * np.arange(n)

    def offsets(self) -> np.ndarray:
        half = int(round(self.window / self.step / 2))
        return self.step * np.arange(-half, half + 1)

    def fine(self) -> tuple[np.ndarray, np.ndarray]:
        """All fine delays and the coarse-window index of each."""
        c, o = self.centers(), self.offsets()
        tau = np.round((c[:, None] + o[None, :]).ravel(), 12)
        return tau, np.repeat(np.arange(len(c)), len(o))


@dataclass
class ScanDataset:
    tau: np.ndarray  # fine delays, ps
    window_index: np.ndarray  # coarse window of each fine delay
    centers: np.ndarray  # coarse window centres, ps
    bin_names: list[str]
    bin_omegas: np.ndarray  # a.u.
    register_bins: list[int]
    mean: np.ndarray  # (n_tau, n_bins) shot-averaged populations
    shots: int
    sigma: np.ndarray  # per-shot noise per bin
    seed: int
    clip: bool = False
    lost: float = 0.0
    samples: np.ndarray | None = None  # (n_tau, shots, n_bins) when kept
    clean: np.ndarray | None = None  # noise-free binned populations
    meta: dict = field(default_factory=dict)

    @property
    def window(self) -> float:
        w0 = self.tau[self.window_index == 0]
        return float(w0.max() - w0.min())

    def bin_index(self, name: str | int) -> int:
        return name if isinstance(name, (int, np.integer)) else self.bin_names.index(name)

    def effective_sigma(self) -> np.ndarray:
        """Noise std of the shot-averaged series."""
        return self.sigma / math.sqrt(self.shots)


def carrier_period(omega_au: float) -> float:
    return 2 * math.pi / omega_au * AU_TIME_PS


def tau_scan(
    seq: PulseSequence,
    basis: BasisSet,
    kicks: Sequence[KickOperator | None],
    model: SsfiModel,
    grid: TauGrid = TauGrid(),
    shots: int = 200,
    seed: int = 0,
    clip: bool = False,
    keep_shots: bool = False,
    data: WavePacket | None = None,
) -> ScanDataset:
    """Simulate the reference-delay scan for one pulse sequence.

    Noise is drawn per coarse window from a stream derived from (seed, window
    index), so windows are independent and the result does not depend on
    evaluation order. Without clipping or kept shots the shot mean is drawn
    directly from N(P, sigma^2 / shots), which has the same distribution as
    averaging the shots.
    """
    reg_bins = model.register_bins()
    omegas = np.array([model.bins[i].omega for i in reg_bins])
    if len(omegas):
        need = carrier_period(omegas.max()) / 6
        if grid.step > need * (1 + 1e-9):
            raise ConfigurationError(
                f"tau step {grid.step * 1e3:.3f} fs under-samples the carrier; need <= {need * 1e3:.3f} fs"
            )
    if data is None:
        data = run_sequence(seq, basis, kicks)
    ref = seq.reference_spec.vector(basis)
    members = model.members
    col = {m: i for i, m in enumerate(members)}
    groups = [[col[m] for m in b.members] for b in model.bins]

    tau, widx = grid.fine()
    P = holographic_populations(data, ref, tau, levels=members)
    clean = np.stack([P[:, g].sum(axis=1) for g in groups], axis=1)
    lost = float(data.norm - data.populations[members].sum())

    sig = model.sigmas
    mean = np.empty_like(clean)
    samples = np.empty((len(tau), shots, len(groups))) if keep_shots else None
    root = np.random.SeedSequence(seed)
    per_shot = keep_shots or clip
    for w, ss in enumerate(root.spawn(len(grid.centers()))):
        rows = np.flatnonzero(widx == w)
        rng = np.random.default_rng(ss)
        if not per_shot:
            # the mean of `shots` Gaussian draws is itself Gaussian: draw it directly
            mean[rows] = add_noise(clean[rows], sig / math.sqrt(shots), rng)
            continue
        noisy = add_noise(clean[rows], sig, rng, shots=shots)
        if clip:
            np.clip(noisy, 0.0, None, out=noisy)
        mean[rows] = noisy.mean(axis=0)
        if keep_shots:
            samples[rows] = np.moveaxis(noisy, 0, 1)

    return ScanDataset(
        tau=tau,
        window_index=widx,
        centers=grid.centers(),
        bin_names=model.names,
        bin_omegas=np.array([b.omega for b in model.bins]),
        register_bins=reg_bins,
        mean=mean,
        shots=shots,
        sigma=sig,
        seed=seed,
        clip=clip,
        lost=lost,
        samples=samples,
        clean=clean,
        meta={"sequence": seq.describe(), "clip": clip, "shots": shots, "seed": seed},
    )
