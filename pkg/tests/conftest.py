from __future__ import annotations

from pathlib import Path

import pytest

from rydreg.basis import GridSpec, QuantumDefects, build_basis
from rydreg.config import load_config
from rydreg.scenarios import Workspace

ROOT = Path(__file__).resolve().parents[1]
DEFAULTS = ROOT / "configs" / "reference.toml"
H_GRID = GridSpec(step=0.0025)  # fine enough for < 1e-6 on hydrogen n <= 3

_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    print(line)
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def kick_cache(tmp_path_factory):
    return tmp_path_factory.mktemp("kick-cache")


@pytest.fixture(scope="session")
def ref_config(kick_cache):
    cfg = load_config(DEFAULTS)
    cfg.kick.cache_dir = str(kick_cache)
    return cfg


@pytest.fixture(scope="session")
def workspace(ref_config):
    return Workspace(ref_config)


@pytest.fixture(scope="session")
def cs_basis(workspace):
    return workspace.basis


@pytest.fixture(scope="session")
def cs_kick(workspace, ref_config):
    return workspace.kick(ref_config.kick.q1)


@pytest.fixture(scope="session")
def h_basis():
    return build_basis((1, 3), 2, QuantumDefects.hydrogen())


@pytest.fixture(scope="session")
def small_cs_basis():
    """Cheap cesium basis for tests that do not need the converged kick."""
    return build_basis((24, 35), 4, QuantumDefects.cesium(), register_n=range(27, 33), launch=(7, 0))
