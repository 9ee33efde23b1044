"""Pairwise correlation readout and phase-information metrics.

For two register bins the Pearson coefficient of their shot-averaged
populations over a short reference-delay window traces
r_jk(tau) = A cos(Phi_jk - omega_jk tau). Fitting A and Phi_jk over many
windows, and bootstrapping the windows, gives the phase uncertainty that
feeds the capacity i_k = log2(2 pi / dphi_k).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .basis import AU_TIME_PS, ConfigurationError
from .measurement import ScanDataset, carrier_period

TWO_PI = 2 * math.pi
MIN_DPHI = 1e-6  # floor for noise-free fits, rad


@dataclass
class CorrelationSamples:
    j: str
    k: str
    tau: np.ndarray  # window centres, ps
    r: np.ndarray
    window: float  # ps


@dataclass
class CorrelationFit:
    j: str
    k: str
    omega: float  # a.u.
    amplitude: float
    phase: float  # rad, [0, 2 pi)
    dphi: float  # rad, (0, 2 pi]
    amplitude_std: float = 0.0
    vanished: bool = False
    converged: bool = True
    samples: CorrelationSamples | None = field(default=None, repr=False)


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson coefficient; 0 when either series is constant."""
    dx = x - x.mean()
    dy = y - y.mean()
    den = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if den == 0.0:
        return 0.0
    return float(np.clip((dx @ dy) / den, -1.0, 1.0))


def _pearson_rows(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    dx = x - x.mean(axis=1, keepdims=True)
    dy = y - y.mean(axis=1, keepdims=True)
    den = np.sqrt(np.sum(dx * dx, axis=1) * np.sum(dy * dy, axis=1))
    num = np.sum(dx * dy, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return np.clip(r, -1.0, 1.0)


def _pair_window(ds: ScanDataset, j: int, k: int, window: float | None) -> float:
    wj, wk = ds.bin_omegas[j], ds.bin_omegas[k]
    min_w = 20 * carrier_period(min(wj, wk))
    beat = abs(wj - wk)
    max_w = 0.15 * TWO_PI / beat * AU_TIME_PS if beat > 0 else math.inf
    if window is None:
        window = min(ds.window, max_w)
    pair = f"({ds.bin_names[j]}, {ds.bin_names[k]})"
    if window < min_w * (1 - 1e-9):
        raise ConfigurationError(
            f"window {window * 1e3:.1f} fs for pair {pair} holds fewer than 20 carrier periods "
            f"({min_w * 1e3:.1f} fs)"
        )
    if window > max_w * (1 + 1e-9):
        raise ConfigurationError(
            f"window {window * 1e3:.1f} fs for pair {pair} exceeds 0.15 beat period "
            f"({max_w * 1e3:.1f} fs)"
        )
    return window


def windowed_correlation(
    ds: ScanDataset, j: str | int, k: str | int, window: float | None = None
) -> CorrelationSamples:
    """Pearson r of bins j and k inside each coarse window.

    ``window`` (ps) trims every window symmetrically about its centre; the
    default is the scan window shortened to 0.15 beat periods if needed.
    """
    j, k = ds.bin_index(j), ds.bin_index(k)
    window = _pair_window(ds, j, k, window)
    keep = np.abs(ds.tau - ds.centers[ds.window_index]) <= window / 2 + 1e-12
    widx = ds.window_index[keep]
    counts = np.bincount(widx, minlength=len(ds.centers))
    if np.all(counts == counts[0]) and np.all(np.diff(widx) >= 0):
        x = ds.mean[keep, j].reshape(len(counts), -1)
        y = ds.mean[keep, k].reshape(len(counts), -1)
        r = _pearson_rows(x, y)
    else:
        r = np.array([pearson(ds.mean[keep, j][widx == w], ds.mean[keep, k][widx == w])
                      for w in range(len(ds.centers))])
    return CorrelationSamples(ds.bin_names[j], ds.bin_names[k], ds.centers.copy(), r, window)


def _lsq_cos(tau_au: np.ndarray, r: np.ndarray, omega: float) -> tuple[float, float, bool]:
    X = np.column_stack([np.cos(omega * tau_au), np.sin(omega * tau_au)])
    coef, _, rank, _ = np.linalg.lstsq(X, r, rcond=None)
    a, b = coef
    return math.hypot(a, b), math.atan2(b, a) % TWO_PI, rank == 2


def circular_std(angles: np.ndarray) -> float:
    R = abs(np.mean(np.exp(1j * np.asarray(angles))))
    if R <= 0:
        return math.inf
    return math.sqrt(max(-2.0 * math.log(min(R, 1.0)), 0.0))


def fit_correlation(
    samples: CorrelationSamples | tuple[np.ndarray, np.ndarray],
    omega: float,
    bootstrap: int = 100,
    seed: int = 0,
) -> CorrelationFit:
    """Least-squares fit of A cos(Phi - omega tau) with bootstrap errors.

    ``omega`` is in atomic units and tau in ps. The phase uncertainty is the
    circular standard deviation of Phi over window resamples; if A is below
    twice its own bootstrap spread the correlation counts as vanished and
    dphi = 2 pi. A degenerate fit is flagged, never raised.
    """
    if isinstance(samples, CorrelationSamples):
        tau, r, names = samples.tau, samples.r, (samples.j, samples.k)
    else:
        (tau, r), names, samples = samples, ("j", "k"), None
    tau = np.asarray(tau, float)
    r = np.asarray(r, float)
    tau_au = tau / AU_TIME_PS
    if len(r) < 8 or not np.all(np.isfinite(r)):
        return CorrelationFit(*names, omega, 0.0, 0.0, TWO_PI, 0.0, True, False, samples)
    A, phi, ok = _lsq_cos(tau_au, r, omega)
    if not ok:
        return CorrelationFit(*names, omega, A, phi, TWO_PI, 0.0, True, False, samples)

    rng = np.random.default_rng(seed)
    amps, phis = [], []
    for _ in range(bootstrap):
        pick = rng.integers(0, len(r), len(r))
        a_b, p_b, ok_b = _lsq_cos(tau_au[pick], r[pick], omega)
        if ok_b:
            amps.append(a_b)
            phis.append(p_b)
    if len(amps) < max(2, bootstrap // 2):
        return CorrelationFit(*names, omega, A, phi, TWO_PI, 0.0, True, False, samples)
    a_std = float(np.std(amps, ddof=1))
    dphi = min(max(circular_std(np.array(phis)), MIN_DPHI), TWO_PI)
    vanished = A <= 2 * a_std
    if vanished:
        dphi = TWO_PI
    return CorrelationFit(*names, omega, A, phi, dphi, a_std, vanished, True, samples)


def predicted_amplitude(sn_j: float, sm_j: float, sn_k: float, sm_k: float, r: float = 1.0) -> float:
    """Correlation amplitude after additive noise of std sn on series of std sm."""
    if sm_j <= 0 or sm_k <= 0:
        raise ValueError("measured standard deviation must be positive")
    fj = max(1.0 - (sn_j / sm_j) ** 2, 0.0)
    fk = max(1.0 - (sn_k / sm_k) ** 2, 0.0)
    return math.sqrt(fj * fk) * r


def phase_uncertainty(dphis: Sequence[float]) -> float:
    """Inverse-uncertainty weighted mean: (N - 1) / sum_j 1/dPhi_jk."""
    d = np.asarray(dphis, float)
    if d.size == 0:
        raise ValueError("need at least one pairwise uncertainty")
    return float(d.size / np.sum(1.0 / d))


def info_bits(dphi: float) -> float:
    """Capacity in bits of a phase known to within dphi radians."""
    if not 0 < dphi <= TWO_PI * (1 + 1e-12):
        raise ValueError(f"phase uncertainty {dphi} outside (0, 2 pi]")
    return max(math.log2(TWO_PI / dphi), 0.0)


def total_info(dphi: Mapping[str, float] | Sequence[float], states: Sequence[str] | None = None) -> float:
    if isinstance(dphi, Mapping):
        if states is not None:
            missing = [s for s in states if s not in dphi]
            if missing:
                raise KeyError(f"no phase uncertainty for register states {missing}")
        values = list(dphi.values()) if states is None else [dphi[s] for s in states]
    else:
        values = list(dphi)
        if states is not None and len(values) != len(states):
            raise KeyError("phase uncertainties do not cover every register state")
    return float(sum(info_bits(v) for v in values))


@dataclass
class InfoReport:
    fits: list[CorrelationFit]
    states: list[str]
    dphi: dict[str, float]
    bits: dict[str, float]
    total: float
    phases: dict[str, float]  # per-state phase relative to the reference state
    reference: str
    settings: dict = field(default_factory=dict)

    def fit(self, j: str, k: str) -> CorrelationFit:
        for f in self.fits:
            if {f.j, f.k} == {j, k}:
                return f
        raise KeyError((j, k))

    def pairs_with(self, state: str) -> list[CorrelationFit]:
        return [f for f in self.fits if state in (f.j, f.k)]


def analyze(
    ds: ScanDataset,
    bins: Sequence[str] | None = None,
    reference: str | None = None,
    bootstrap: int = 100,
    seed: int = 0,
    window: float | None = None,
) -> InfoReport:
    """All-pairs correlation fits and per-state capacity for register bins."""
    idx = [ds.bin_index(b) for b in bins] if bins is not None else list(ds.register_bins)
    names = [ds.bin_names[i] for i in idx]
    if len(idx) < 2:
        raise ConfigurationError("need at least two register bins")
    fits = []
    for p, (a, b) in enumerate(combinations(idx, 2)):
        s = windowed_correlation(ds, a, b, window)
        omega = float(ds.bin_omegas[a] - ds.bin_omegas[b])
        fits.append(fit_correlation(s, omega, bootstrap, seed=seed + p))
    dphi, bits = {}, {}
    for name in names:
        d = phase_uncertainty([f.dphi for f in fits if name in (f.j, f.k)])
        dphi[name] = d
        bits[name] = info_bits(d)
    ref = reference or names[0]
    phases = {ref: 0.0}
    for f in fits:
        if f.j == ref:
            phases[f.k] = (-f.phase) % TWO_PI
        elif f.k == ref:
            phases[f.j] = f.phase % TWO_PI
    return InfoReport(
        fits, names, dphi, bits, float(sum(bits.values())), phases, ref,
        {"bootstrap": bootstrap, "seed": seed, "window": window},
    )


def bin_noise_ratio(ds: ScanDataset, name: str | int) -> float:
    """sigma_N / sigma_meas of a bin's shot-averaged series, averaged over windows."""
    i = ds.bin_index(name)
    sn = ds.effective_sigma()[i]
    sm = np.array([ds.mean[ds.window_index == w, i].std() for w in range(len(ds.centers))])
    return float(sn / np.sqrt(np.mean(sm**2)))
