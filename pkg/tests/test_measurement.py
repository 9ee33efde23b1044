import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rydreg.basis import AU_TIME_PS, ConfigurationError
from rydreg.measurement import (
    Bin, SsfiModel, TauGrid, add_noise, carrier_period, default_ssfi_model, merged_ssfi_model,
    ssfi_bin, tau_scan,
)
from rydreg.register import EncodeSpec, PulseSequence, ReferenceSpec, encode_register

SIX = ("27p", "28p", "29p", "30p", "31p", "32p")
SHORT = TauGrid(0.06, 2.06, 0.25, 0.06, 0.0004)


@pytest.fixture(scope="module")
def model(small_cs_basis):
    return default_ssfi_model(small_cs_basis, range(27, 33))


def test_default_model_layout(small_cs_basis, model):
    b = small_cs_basis
    assert model.names[:6] == list(SIX)
    assert model.bins[5].members == (b.find("32p"), b.find("31d"))
    assert model.register_bins() == list(range(6))
    assert all(not model.bins[i].register for i in range(6, len(model.bins)))


def test_pair_bin_sums(small_cs_basis, model):
    b = small_cs_basis
    P = np.zeros(len(b))
    P[b.find("32p")], P[b.find("31d")] = 0.3, 0.1
    out = ssfi_bin(P, model, b)
    assert out.values[model.names.index("32p")] == pytest.approx(0.4)
    assert out.lost == pytest.approx(0.0)


def test_singleton_bins_are_identity(small_cs_basis):
    b = small_cs_basis
    idx = list(range(len(b)))
    m = SsfiModel(tuple(Bin(b.labels[i], (i,)) for i in idx))
    P = np.random.default_rng(1).random(len(b))
    assert np.array_equal(ssfi_bin(P, m).values, P)


def test_lost_population_channel(small_cs_basis, model):
    b = small_cs_basis
    P = np.zeros(len(b))
    P[b.find("33s")] = 0.2
    P[b.find("30p")] = 0.5
    out = ssfi_bin(P, model, b)
    assert out.lost == pytest.approx(0.2)
    assert out.lost_levels == ["33s"]


def test_overlapping_bins_rejected():
    with pytest.raises(ConfigurationError):
        SsfiModel((Bin("a", (0, 1)), Bin("b", (1,))))


def test_merged_model_groups_degenerate_levels(small_cs_basis):
    b = small_cs_basis
    levels = [b.find(x) for x in ("32p", "31d", "30p")]
    gap = abs(b.energies[levels[0]] - b.energies[levels[1]])
    m = merged_ssfi_model(b, levels, window=gap * 1.01)
    assert sorted(len(x.members) for x in m.bins) == [1, 2]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), lead=st.integers(1, 4))
def test_binning_conserves_population(seed, lead, small_cs_basis, model):
    rng = np.random.default_rng(seed)
    P = rng.random((lead, len(small_cs_basis)))
    out = ssfi_bin(P, model)
    assert np.allclose(out.values.sum(axis=-1) + out.lost, P.sum(axis=-1))
    assert np.all(out.values >= 0)


# --- noise ---------------------------------------------------------------------

def test_zero_sigma_is_identity():
    v = np.arange(6.0)
    assert np.array_equal(add_noise(v, 0.0, 3), v)


def test_noise_std_large_sample():
    noise = add_noise(np.zeros(3), 0.05, seed=11, shots=10_000) - 0.0
    assert np.std(noise) == pytest.approx(0.05, rel=0.02)
    assert abs(np.mean(noise)) < 4 * 0.05 / math.sqrt(noise.size)


def test_noise_deterministic():
    a = add_noise(np.ones(4), [0.1, 0.2, 0.3, 0.4], seed=5, shots=7)
    b = add_noise(np.ones(4), [0.1, 0.2, 0.3, 0.4], seed=5, shots=7)
    assert np.array_equal(a, b)


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        add_noise(np.ones(2), -1.0, 0)


# --- tau scans -----------------------------------------------------------------

def test_tau_grid_shape():
    tau, widx = SHORT.fine()
    assert len(SHORT.centers()) == 9
    assert len(tau) == 9 * len(SHORT.offsets())
    assert tau.min() >= 0 and np.all(np.bincount(widx) == len(SHORT.offsets()))


def test_flat_scan_without_reference(small_cs_basis, model):
    b = small_cs_basis
    seq = PulseSequence(EncodeSpec(SIX), reference=ReferenceSpec.none())
    ds = tau_scan(seq, b, [], model, SHORT, shots=1, seed=0)
    psi = encode_register(b, SIX)
    assert np.allclose(ds.mean[:, :6], psi.populations[list(b.register)][None, :], atol=1e-14)


def test_unit_visibility_fringes(small_cs_basis, model):
    b = small_cs_basis
    seq = PulseSequence(EncodeSpec(SIX))
    ds = tau_scan(seq, b, [], model, SHORT, shots=1, seed=0)
    c2 = 1 / 6
    for i, name in enumerate(SIX):
        w = b.omegas[b.find(name)]
        expect = 2 * c2 * (1 + np.cos(w * ds.tau / AU_TIME_PS))
        assert np.allclose(ds.mean[:, i], expect, atol=1e-9)
        assert ds.mean[:, i].max() == pytest.approx(4 * c2, rel=1e-3)
        assert ds.mean[:, i].min() == pytest.approx(0.0, abs=1e-3)


def test_under_sampled_grid_reports_step(small_cs_basis, model):
    seq = PulseSequence(EncodeSpec(SIX))
    with pytest.raises(ConfigurationError, match="need <="):
        tau_scan(seq, small_cs_basis, [], model, TauGrid(0.06, 1.0, 0.25, 0.06, 0.005))


def test_scan_periodic_in_carrier(small_cs_basis, model):
    b = small_cs_basis
    seq = PulseSequence(EncodeSpec(SIX))
    w = b.omegas[b.find("30p")]
    T = carrier_period(w)
    grid = TauGrid(0.5, 0.5, 1.0, 0.02, 0.0002)
    shifted = TauGrid(0.5 + 40 * T, 0.5 + 40 * T, 1.0, 0.02, 0.0002)
    single = default_ssfi_model(b, [30])
    a = tau_scan(seq, b, [], single, grid, shots=1)
    c = tau_scan(seq, b, [], single, shifted, shots=1)
    assert np.allclose(a.clean[:, 0], c.clean[:, 0], atol=1e-8)


def test_scan_deterministic(small_cs_basis, model):
    seq = PulseSequence(EncodeSpec(SIX))
    m = model.with_sigma(0.3)
    a = tau_scan(seq, small_cs_basis, [], m, SHORT, shots=50, seed=9)
    b = tau_scan(seq, small_cs_basis, [], m, SHORT, shots=50, seed=9)
    c = tau_scan(seq, small_cs_basis, [], m, SHORT, shots=50, seed=10)
    assert np.array_equal(a.mean, b.mean)
    assert not np.array_equal(a.mean, c.mean)


def test_variance_is_fringe_plus_noise(small_cs_basis, model):
    seq = PulseSequence(EncodeSpec(SIX))
    sigma = 0.2
    grid = TauGrid(0.06, 0.06 + 0.25 * 39, 0.25, 0.1, 0.0004)
    ds = tau_scan(seq, small_cs_basis, [], model.with_sigma(sigma), grid, shots=1, seed=4)
    i = 2
    noise_var = np.var(ds.mean[:, i] - ds.clean[:, i])
    assert noise_var == pytest.approx(sigma**2, rel=0.03)
    total = np.var(ds.mean[:, i])
    assert total == pytest.approx(np.var(ds.clean[:, i]) + sigma**2, rel=0.03)


def test_noise_only_when_reference_absent(small_cs_basis, model):
    seq = PulseSequence(EncodeSpec(SIX), reference=ReferenceSpec.none())
    ds = tau_scan(seq, small_cs_basis, [], model.with_sigma(0.1), SHORT, shots=1, seed=2)
    assert np.std(ds.mean[:, 0]) == pytest.approx(0.1, rel=0.03)


def test_shot_mean_paths_agree_in_distribution(small_cs_basis, model):
    # direct mean draw vs averaging kept shots: same mean and spread
    seq = PulseSequence(EncodeSpec(SIX))
    m = model.with_sigma(1.0)
    fast = tau_scan(seq, small_cs_basis, [], m, SHORT, shots=25, seed=1)
    slow = tau_scan(seq, small_cs_basis, [], m, SHORT, shots=25, seed=1, keep_shots=True)
    assert np.allclose(slow.samples.mean(axis=1), slow.mean)
    rf = (fast.mean - fast.clean).ravel()
    rs = (slow.mean - slow.clean).ravel()
    assert np.std(rf) == pytest.approx(0.2, rel=0.05)
    assert np.std(rs) == pytest.approx(0.2, rel=0.05)


def test_clipping_keeps_populations_non_negative(small_cs_basis, model):
    seq = PulseSequence(EncodeSpec(SIX))
    ds = tau_scan(seq, small_cs_basis, [], model.with_sigma(0.5), SHORT, shots=3, seed=0,
                  clip=True, keep_shots=True)
    assert ds.samples.min() >= 0.0 and ds.clip
