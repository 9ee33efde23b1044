"""Phase-encoded p-state registers: preparation, free evolution, kicks, readout.

Amplitudes are kept in the Schroedinger picture, c_a(t), together with the
time stamp t. Holographic readout works with the interaction-picture
amplitudes c_a(t) exp(iE_a t), which no longer depend on t once the last
kick has acted.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .basis import AU_TIME_PS, BasisSet
from .kick import KickOperator, basis_key

Level = "str | tuple[int, int] | int"


def _resolve(basis: BasisSet, levels) -> list[int]:
    out = []
    for lv in levels:
        if isinstance(lv, (int, np.integer)):
            out.append(int(lv))
        else:
            out.append(basis.find(lv))
    return out


@dataclass(frozen=True)
class WavePacket:
    basis: BasisSet
    amplitudes: np.ndarray
    t: float = 0.0  # ps

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (len(self.basis),):
            raise ValueError(f"expected {len(self.basis)} amplitudes, got {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def interaction_amplitudes(self) -> np.ndarray:
        """c_a(t) exp(iE_a t): constant under free evolution."""
        return self.amplitudes * np.exp(1j * self.basis.energies * self.t / AU_TIME_PS)

    def __getitem__(self, label) -> complex:
        return complex(self.amplitudes[_resolve(self.basis, [label])[0]])


def encode_register(
    basis: BasisSet,
    levels: Sequence,
    amplitudes: Sequence[float] | None = None,
    phases: Sequence[float] | None = None,
) -> WavePacket:
    """Register state at t = 0 with c_j = a_j exp(i phi_j) on ``levels``.

    Default amplitudes are equal; default phases are zero.
    """
    idx = _resolve(basis, levels)
    reg = set(basis.register)
    bad = [basis.labels[i] for i in idx if i not in reg]
    if bad:
        raise ValueError(f"levels {bad} are not register states")
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate register level")
    a = np.full(len(idx), 1 / np.sqrt(len(idx))) if amplitudes is None else np.asarray(amplitudes, float)
    phi = np.zeros(len(idx)) if phases is None else np.asarray(phases, float)
    if a.shape != (len(idx),) or phi.shape != (len(idx),):
        raise ValueError("levels, amplitudes and phases must have equal length")
    if abs(np.sum(a**2) - 1) > 1e-9:
        raise ValueError(f"amplitudes must satisfy sum a^2 = 1, got {np.sum(a**2):.6g}")
    c = np.zeros(len(basis), dtype=complex)
    c[idx] = a * np.exp(1j * phi)
    return WavePacket(basis, c, 0.0)


def free_evolve(psi: WavePacket, dt: float) -> WavePacket:
    """Evolve by dt picoseconds under the diagonal level Hamiltonian."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0:
        return psi
    phase = np.exp(-1j * psi.basis.energies * (dt / AU_TIME_PS))
    return WavePacket(psi.basis, psi.amplitudes * phase, psi.t + dt)


def apply_kick(psi: WavePacket, K: KickOperator) -> WavePacket:
    if K.matrix.shape[0] != len(psi.basis) or (K.basis_key and K.basis_key != basis_key(psi.basis)):
        raise ValueError("kick operator was built on a different basis")
    return WavePacket(psi.basis, K.matrix @ psi.amplitudes, psi.t)


@dataclass(frozen=True)
class ReferenceSpec:
    """Reference excitation b_j exp(i phi_j2) on register levels, global phase theta."""

    levels: tuple = ()
    amplitudes: tuple[float, ...] = ()
    phases: tuple[float, ...] = ()
    theta: float = 0.0

    def vector(self, basis: BasisSet) -> np.ndarray:
        idx = _resolve(basis, self.levels)
        reg = set(basis.register)
        if any(i not in reg for i in idx):
            raise ValueError("reference amplitudes must sit on register levels")
        b = np.zeros(len(basis), dtype=complex)
        if idx:
            b[idx] = np.asarray(self.amplitudes) * np.exp(1j * (np.asarray(self.phases) + self.theta))
        return b

    @classmethod
    def none(cls) -> "ReferenceSpec":
        return cls()


@dataclass(frozen=True)
class EncodeSpec:
    levels: tuple
    amplitudes: tuple[float, ...] | None = None
    phases: tuple[float, ...] | None = None

    def resolved_amplitudes(self) -> tuple[float, ...]:
        if self.amplitudes is not None:
            return tuple(self.amplitudes)
        return tuple([1 / np.sqrt(len(self.levels))] * len(self.levels))

    def resolved_phases(self) -> tuple[float, ...]:
        return tuple(self.phases) if self.phases is not None else (0.0,) * len(self.levels)

    def identical_reference(self, theta: float = 0.0) -> ReferenceSpec:
        """Reference pulse identical to the data pulse."""
        return ReferenceSpec(
            tuple(self.levels), self.resolved_amplitudes(), self.resolved_phases(), theta
        )


@dataclass(frozen=True)
class PulseSequence:
    """Encode at t = 0, kick at t1 (and t2), read out after t_meas (ps)."""

    encode: EncodeSpec
    t1: float | None = None
    t2: float | None = None
    q1: float = 0.0017
    q2: float = 0.0017
    reference: ReferenceSpec | None = None
    t_meas: float | None = None

    def __post_init__(self):
        if self.t2 is not None and self.t1 is None:
            raise ValueError("t2 given without t1")
        if self.t1 is not None and self.t1 < 0:
            raise ValueError("t1 must be non-negative")
        if self.t2 is not None and not self.t2 > self.t1:
            raise ValueError("need t1 < t2")
        if self.t_meas is not None and self.t_meas < self.last_kick:
            raise ValueError("t_meas precedes a kick")

    @property
    def last_kick(self) -> float:
        return max([t for t in (self.t1, self.t2) if t is not None], default=0.0)

    @property
    def measure_time(self) -> float:
        return self.t_meas if self.t_meas is not None else self.last_kick + 1.0

    @property
    def reference_spec(self) -> ReferenceSpec:
        return self.reference if self.reference is not None else self.encode.identical_reference()

    def describe(self) -> str:
        return (
            f"levels={list(self.encode.levels)} phases={list(self.encode.resolved_phases())} "
            f"t1={self.t1} t2={self.t2} q1={self.q1} q2={self.q2} t_meas={self.measure_time}"
        )


def run_sequence(
    seq: PulseSequence,
    basis: BasisSet,
    kicks: Sequence[KickOperator | None] = (),
) -> WavePacket:
    """encode -> evolve to t1 -> kick -> evolve to t2 -> kick -> evolve to t_meas.

    ``kicks`` holds the operators for the first and second kick in order.
    """
    kicks = list(kicks) + [None, None]
    psi = encode_register(
        basis, seq.encode.levels, seq.encode.resolved_amplitudes(), seq.encode.resolved_phases()
    )
    for t_kick, K in ((seq.t1, kicks[0]), (seq.t2, kicks[1])):
        if t_kick is None:
            continue
        if K is None:
            raise ValueError(f"no kick operator supplied for t={t_kick}")
        psi = free_evolve(psi, t_kick - psi.t)
        psi = apply_kick(psi, K)
    return free_evolve(psi, seq.measure_time - psi.t)


def holographic_populations(
    data: WavePacket, ref: ReferenceSpec | np.ndarray, tau, levels=None
) -> np.ndarray:
    """Per-level populations with the reference packet launched at delay tau (ps).

    Returns an array of shape (len(tau), n_levels) (or (n_levels,) for scalar
    tau); ``levels`` restricts the columns to those basis indices. Levels
    without reference amplitude give |c|^2.
    """
    b = ref if isinstance(ref, np.ndarray) else ref.vector(data.basis)
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau_arr < 0):
        raise ValueError("tau must be non-negative")
    c = data.interaction_amplitudes()
    omega = data.basis.omegas
    if levels is not None:
        idx = np.asarray(levels, dtype=int)
        c, omega, b = c[idx], omega[idx], b[idx]
    phase = np.exp(-1j * np.outer(tau_arr / AU_TIME_PS, omega))
    P = np.abs(c * phase + b) ** 2
    return P[0] if np.ndim(tau) == 0 else P
