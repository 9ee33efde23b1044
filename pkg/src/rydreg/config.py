"""Dataclass configuration tree and TOML loading.

Every scenario parameter lives in one file; ``configs/reference.toml``
holds the reference values. Unknown keys are configuration errors so that
typos never fall back silently to defaults.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

import tomli

from .basis import BasisSet, ConfigurationError, GridSpec, QuantumDefects, build_basis
from .measurement import TauGrid

__version__ = "0.1.0"


@dataclass
class AtomConfig:
    name: str = "Cs"
    defects: list[float] = field(default_factory=lambda: [4.049, 3.59, 2.475, 0.033])
    default_defect: float = 0.0
    launch: list[int] = field(default_factory=lambda: [7, 0])

    def quantum_defects(self) -> QuantumDefects:
        return QuantumDefects(tuple(self.defects), self.name, self.default_defect)


@dataclass
class BasisConfig:
    n_range: list[int] = field(default_factory=lambda: [12, 64])
    l_max: int = 14
    register_n: list[int] = field(default_factory=lambda: [27, 28, 29, 30, 31, 32])
    register_l: int = 1
    padding: int = 3
    edge: int = 2
    interior_n: list[int] | None = field(default_factory=lambda: [24, 35])
    interior_l_max: int | None = 5


@dataclass
class GridConfig:
    points_per_wavelength: float = 20.0
    step: float | None = None
    r_min: float = 2.5e-3
    outer_factor: float = 2.5
    outer_pad: float = 20.0

    def spec(self) -> GridSpec:
        return GridSpec(self.points_per_wavelength, self.step, self.r_min, self.outer_factor,
                        self.outer_pad)


@dataclass
class KickConfig:
    q1: float = 0.0017
    q2: float = 0.0017
    sign: int = 1  # +1: exp(+iQz); -1 flips the field direction (K -> K*)
    l_cap: int = 40
    tol: float = 1e-10
    cache_dir: str | None = None


@dataclass
class RegisterConfig:
    levels: list[str] = field(default_factory=lambda: ["27p", "28p", "29p", "30p", "31p", "32p"])
    amplitudes: list[float] | None = None
    phases: list[float] | None = None
    theta: float = 0.0


@dataclass
class MeasurementConfig:
    sigma: float = 4.0  # per-shot noise, population units
    shots: int = 200
    clip: bool = False
    partner_l: int = 2
    include_s: bool = True
    coarse_start: float = 0.06
    coarse_stop: float = 25.0
    coarse_step: float = 0.25
    window: float = 0.120
    step: float = 0.0004

    def tau_grid(self) -> TauGrid:
        return TauGrid(self.coarse_start, self.coarse_stop, self.coarse_step, self.window, self.step)


@dataclass
class AnalysisConfig:
    bootstrap: int = 100
    window: float | None = None
    reference: str | None = None


@dataclass
class HideConfig:
    target: str = "31p"
    t1: float = 5.0
    search: list[float] | None = field(default_factory=lambda: [3.0, 7.0])
    search_step: float = 0.025


@dataclass
class RecoverConfig:
    t2: float = 6.3
    inverse_check: bool = True


@dataclass
class TwoStateConfig:
    levels: list[str] = field(default_factory=lambda: ["27p", "32p"])
    target: str = "32p"
    t1: float = 7.0
    t2: float = 14.2
    search: list[float] | None = field(default_factory=lambda: [5.0, 9.0])


@dataclass
class SweepConfig:
    t1: float | None = 4.1  # None: use the hiding-delay search
    t2_start: float = 0.2  # offsets after t1, ps
    t2_stop: float = 12.0
    t2_step: float = 0.2


@dataclass
class RydregConfig:
    atom: AtomConfig = field(default_factory=AtomConfig)
    basis: BasisConfig = field(default_factory=BasisConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    kick: KickConfig = field(default_factory=KickConfig)
    register: RegisterConfig = field(default_factory=RegisterConfig)
    measurement: MeasurementConfig = field(default_factory=MeasurementConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    hide: HideConfig = field(default_factory=HideConfig)
    recover: RecoverConfig = field(default_factory=RecoverConfig)
    two_state: TwoStateConfig = field(default_factory=TwoStateConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seed: int = 0
    source: str = field(default="<defaults>", compare=False)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("source")
        return d

    def hash(self) -> str:
        text = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def build_basis(self) -> BasisSet:
        b = self.basis
        launch = tuple(self.atom.launch) if self.atom.launch else None
        return build_basis(
            b.n_range, b.l_max, self.atom.quantum_defects(), b.register_n, b.register_l,
            b.padding, b.edge, launch, b.interior_n, b.interior_l_max,
        )

    def meta(self, **extra) -> dict:
        return {"config_hash": self.hash(), "version": __version__, "atom": self.atom.name,
                "defects": self.atom.defects, "kick_sign": self.kick.sign, **extra}


def _fill(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigurationError(f"[{path}] must be a table")
    known = {f.name: f for f in fields(cls) if f.name != "source"}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(f"unknown key(s) in [{path or 'root'}]: {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = getattr(cls(), name)
        sub = f"{path}.{name}" if path else name
        if is_dataclass(default):
            kwargs[name] = _fill(type(default), value, sub)
        else:
            kwargs[name] = _check_scalar(default, value, sub)
    return cls(**kwargs)


def _check_scalar(default: Any, value: Any, path: str):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{path}: expected true/false, got {value!r}")
        return value
    if isinstance(default, (int, float)) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{path}: expected a number, got {value!r}")
        if isinstance(default, int) and value != int(value):
            raise ConfigurationError(f"{path}: expected an integer, got {value!r}")
        return type(default)(value)
    if isinstance(default, list) and not isinstance(value, list):
        raise ConfigurationError(f"{path}: expected a list, got {value!r}")
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigurationError(f"{path}: expected a string, got {value!r}")
    return value


def config_from_dict(data: dict, source: str = "<dict>") -> RydregConfig:
    cfg = _fill(RydregConfig, dict(data), "")
    cfg.source = source
    validate(cfg)
    return cfg


def load_config(path: str | os.PathLike | None) -> RydregConfig:
    """Read a TOML config; ``None`` gives the built-in defaults."""
    if path is None:
        return RydregConfig()
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {p}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"{p}: {exc}") from None
    data.pop("meta", None)  # free-form provenance notes
    return config_from_dict(data, str(p))


def validate(cfg: RydregConfig) -> None:
    if cfg.kick.sign not in (1, -1):
        raise ConfigurationError("kick.sign must be +1 or -1")
    if cfg.kick.q1 < 0 or cfg.kick.q2 < 0:
        raise ConfigurationError("kick impulses must be non-negative")
    if cfg.measurement.shots < 1:
        raise ConfigurationError("measurement.shots must be >= 1")
    if cfg.measurement.sigma < 0:
        raise ConfigurationError("measurement.sigma must be >= 0")
    if cfg.hide.search_step > 0.05:
        raise ConfigurationError("hide.search_step must be <= 0.05 ps")
    if cfg.sweep.t2_step <= 0 or cfg.sweep.t2_stop < cfg.sweep.t2_start:
        raise ConfigurationError("bad sweep grid")
    if cfg.seed < 0:
        raise ConfigurationError("seed must be non-negative")


def threads() -> int:
    """Worker cap from RYDREG_THREADS (default 1)."""
    raw = os.environ.get("RYDREG_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"RYDREG_THREADS={raw!r} is not an integer") from None
    if n < 1:
        raise ConfigurationError("RYDREG_THREADS must be >= 1")
    return n
