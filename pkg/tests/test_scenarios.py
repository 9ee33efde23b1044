import copy
import json
import math
import subprocess
import sys
import warnings

import numpy as np
import pytest

from rydreg.basis import ConfigurationError
from rydreg.cli import main
from rydreg.config import config_from_dict, load_config, threads
from rydreg.output import META_PREFIX, read_binary, read_csv, read_dataset, write_binary, write_dataset
from rydreg.register import EncodeSpec, PulseSequence
from rydreg.scenarios import (
    HidingWarning, Workspace, find_hiding_delay, info_sweep, scenario_hide, scenario_recover,
)

from conftest import DEFAULTS

SIX = ("27p", "28p", "29p", "30p", "31p", "32p")


def cheap(cfg, **measure):
    """Shorter scans and fewer bootstrap draws; physics unchanged."""
    c = copy.deepcopy(cfg)
    c.measurement.coarse_stop = measure.get("stop", 6.06)
    c.analysis.bootstrap = 30
    c.sweep.t2_start, c.sweep.t2_stop, c.sweep.t2_step = 0.5, 2.5, 1.0
    return c


@pytest.fixture(scope="module")
def cheap_ws(ref_config):
    return Workspace(cheap(ref_config))


# --- hiding-delay search --------------------------------------------------------

def test_hiding_delay_default_register(cs_basis, cs_kick):
    hr = find_hiding_delay(cs_basis, cs_kick, EncodeSpec(SIX), "31p", (3, 7), 0.025)
    assert hr.residual < 0.3 and hr.depletable
    assert abs(hr.t1 - 5.0) <= 2.0


def test_hiding_delay_two_state(cs_basis, cs_kick):
    hr = find_hiding_delay(cs_basis, cs_kick, EncodeSpec(("27p", "32p")), "32p", (5, 9), 0.025)
    assert abs(hr.t1 - 7.0) < 1.0


def test_hiding_delay_without_kick(workspace):
    hr = find_hiding_delay(workspace.basis, workspace.kick(0.0), EncodeSpec(SIX), "31p")
    assert not hr.depletable and hr.warning == "no depletion possible"
    assert np.allclose(hr.residuals, 1.0)


def test_hiding_delay_short_interval_warns(cs_basis, cs_kick):
    with pytest.warns(HidingWarning):
        find_hiding_delay(cs_basis, cs_kick, EncodeSpec(SIX), "31p", (4.0, 5.0))


def test_hiding_delay_step_limit(cs_basis, cs_kick):
    with pytest.raises(ConfigurationError):
        find_hiding_delay(cs_basis, cs_kick, EncodeSpec(SIX), "31p", (3, 7), 0.1)


# --- scenario properties --------------------------------------------------------

def test_hide_without_kick_keeps_every_pair(ref_config, tmp_path):
    cfg = cheap(ref_config)
    cfg.kick.q1 = 0.0
    res = scenario_hide(cfg, tmp_path)
    assert res.ok and not any(f.vanished for f in res.values["report"].fits)


def test_recover_with_zero_second_kick_matches_hide(ref_config, tmp_path):
    cfg = cheap(ref_config)
    cfg.kick.q2 = 0.0
    cfg.recover.inverse_check = False
    ws = Workspace(cfg)
    rec = scenario_recover(cfg, tmp_path / "r", ws)
    hide = scenario_hide(cfg, tmp_path / "h", ws)
    r1, r2 = rec.values["report_t2"], hide.values["report"]
    assert r1.total == pytest.approx(r2.total, rel=1e-12)
    assert r1.dphi == pytest.approx(r2.dphi, rel=1e-12)


def test_recover_inverse_diagnostic(ref_config, tmp_path):
    res = scenario_recover(cheap(ref_config), tmp_path)
    assert res.values["inverse_error"] < 1e-6


def test_sweep_flat_without_second_kick(ref_config):
    cfg = cheap(ref_config)
    cfg.kick.q2 = 0.0
    ws = Workspace(cfg)
    points, base0, base1 = info_sweep(ws, 4.1, [4.6, 5.6, 6.6], "31p", seed=3)
    for p in points:
        assert p.total == pytest.approx(base1.total, rel=1e-12)


def test_baseline_ordering_over_seeds(cheap_ws):
    worse = 0
    for seed in range(10):
        _, base0, base1 = info_sweep(cheap_ws, 4.1, [], "31p", seed=seed)
        worse += base1.total <= base0.total
    assert worse == 10


def test_sweep_workers_do_not_change_results(cheap_ws):
    a, *_ = info_sweep(cheap_ws, 4.1, [4.6, 5.6], "31p", seed=1, workers=1)
    b, *_ = info_sweep(cheap_ws, 4.1, [4.6, 5.6], "31p", seed=1, workers=2)
    assert [p.total for p in a] == [p.total for p in b]


# --- configuration --------------------------------------------------------------

def test_defaults_file_matches_builtin_defaults():
    from rydreg.config import RydregConfig
    assert load_config(DEFAULTS).hash() == RydregConfig().hash()


@pytest.mark.parametrize("data,match", [
    ({"kick": {"q3": 1.0}}, "unknown key"),
    ({"bogus": {}}, "unknown key"),
    ({"kick": {"q1": "big"}}, "expected a number"),
    ({"measurement": {"shots": 2.5}}, "integer"),
    ({"measurement": {"clip": 1}}, "true/false"),
    ({"kick": {"sign": 2}}, "sign"),
    ({"kick": "x"}, "table"),
])
def test_config_errors(data, match):
    with pytest.raises(ConfigurationError, match=match):
        config_from_dict(data)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_config(tmp_path / "nope.toml")


def test_threads_env(monkeypatch):
    monkeypatch.setenv("RYDREG_THREADS", "3")
    assert threads() == 3
    monkeypatch.setenv("RYDREG_THREADS", "zero")
    with pytest.raises(ConfigurationError):
        threads()


# --- persistence ----------------------------------------------------------------

def test_dataset_round_trip(cheap_ws, tmp_path):
    cfg = cheap_ws.cfg
    seq = PulseSequence(cheap_ws.encode(), t1=5.0)
    ds = cheap_ws.scan(seq, [cheap_ws.kick(cfg.kick.q1)], seed=2)
    path = write_dataset(tmp_path / "ds.csv", ds, cfg.measurement.tau_grid(), cfg.meta())
    back = read_dataset(path)
    assert np.array_equal(back.mean, ds.mean)
    assert np.array_equal(back.tau, ds.tau)
    assert back.bin_names == ds.bin_names and back.meta["config_hash"] == cfg.hash()


def test_binary_round_trip(tmp_path):
    a = np.random.default_rng(0).random((7, 3))
    p = write_binary(tmp_path / "a.f64", a, {"note": "x"})
    assert p.stat().st_size == a.size * 8
    assert np.array_equal(read_binary(p), a)
    assert np.array_equal(read_binary(p, (21,)), a.ravel())


def test_csv_requires_meta_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigurationError):
        read_csv(p)


# --- command line ---------------------------------------------------------------

@pytest.fixture
def cheap_toml(tmp_path, kick_cache):
    text = DEFAULTS.read_text()
    text = text.replace("coarse_stop = 25.0", "coarse_stop = 6.06")
    text = text.replace("bootstrap = 100", "bootstrap = 30")
    text = text.replace("t2_stop = 12.0", "t2_stop = 1.0").replace("t2_step = 0.2", "t2_step = 0.4")
    text = text.replace("tol = 1e-10", f"tol = 1e-10\ncache_dir = \"{kick_cache}\"")
    p = tmp_path / "cheap.toml"
    p.write_text(text)
    return p


def test_cli_basis(tmp_path):
    out = tmp_path / "basis.csv"
    assert main(["basis", "--out", str(out)]) == 0
    meta, header, rows = read_csv(out)
    assert header == ["n", "l", "n_eff", "energy_au", "kepler_ps"]
    assert meta["atom"] == "Cs" and len(rows) == meta["levels"]


def test_cli_kick_register_subset(cheap_toml, tmp_path):
    out = tmp_path / "k.csv"
    assert main(["kick", "--config", str(cheap_toml), "--subset", "register", "--out", str(out)]) == 0
    meta, header, rows = read_csv(out)
    assert len(rows) == 36 and meta["interior_defect"] < 1e-3


def test_cli_run_and_analyze(cheap_toml, tmp_path):
    amp, ds, rep = tmp_path / "amp.csv", tmp_path / "ds.csv", tmp_path / "rep.csv"
    assert main(["run", "--config", str(cheap_toml), "--t1", "5", "--out", str(amp),
                 "--dataset", str(ds)]) == 0
    meta, header, rows = read_csv(amp)
    assert header == ["n", "l", "re", "im", "population"]
    assert meta["norm"] == pytest.approx(1.0, abs=2e-3)
    assert main(["analyze", "--data", str(ds), "--out", str(rep), "--bootstrap", "20"]) == 0
    lines = rep.read_text().splitlines()
    assert lines[0].startswith(META_PREFIX)
    assert lines[1] == "j,k,omega_au,amplitude,phi_rad,dphi_rad"
    assert lines[17] == "k,dphi_k_rad,bits"
    assert lines[-1].startswith("TOTAL,")
    assert json.loads(lines[0][len(META_PREFIX):])["dataset_config_hash"] == meta["config_hash"]


def test_cli_scenario_writes_meta_headers(cheap_toml, tmp_path):
    code = main(["scenario", "recover", "--config", str(cheap_toml), "--seed", "1", "--out", str(tmp_path)])
    assert code in (0, 2)
    csvs = list(tmp_path.glob("*.csv"))
    assert csvs
    for p in csvs:
        assert p.read_text().startswith(META_PREFIX)


def test_cli_failed_check_exits_2(cheap_toml, tmp_path):
    # the two-state counterfactual check fails at the reference delays
    assert main(["scenario", "two-state", "--config", str(cheap_toml), "--out", str(tmp_path)]) == 2
    assert (tmp_path / "summary.txt").exists()


def test_cli_config_errors_exit_3(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[kick]\nq9 = 1\n")
    assert main(["basis", "--config", str(bad), "--out", str(tmp_path / "b.csv")]) == 3
    assert main(["basis", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path / "b.csv")]) == 3
    assert main(["run", "--t1", "5", "--t2", "4", "--out", str(tmp_path / "r.csv")]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["scenario", "nonsense", "--out", str(tmp_path)])
    assert exc.value.code == 3


def test_cli_bad_threads_exit_3(tmp_path, monkeypatch):
    monkeypatch.setenv("RYDREG_THREADS", "-2")
    assert main(["basis", "--out", str(tmp_path / "b.csv")]) == 3


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "rydreg.cli", "basis", "--out", str(tmp_path / "b.csv")],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
