import math

import numpy as np
import pytest
from scipy import stats

from clsc import IqBuffer, LoraConfig, PowerModel, SuperposConfig, awgn, compose_tx, gen_high_segment, gen_symbol
from clsc.channel import bit_to_symbol, complex_gaussian

LO = LoraConfig(7, oversample=16)
HI = LoraConfig(12, oversample=16)


def _layers(s=11):
    return gen_symbol(LO, s), gen_high_segment(HI, LO, 1984)


def test_superpos_config_defaults_and_errors():
    sp = SuperposConfig()
    assert (sp.sf_low, sp.sf_high, sp.n_s, sp.kappa) == (7, 12, 1984, math.inf)
    assert sp.high_amplitude == 0.0
    assert SuperposConfig(kappa=4).high_amplitude == 0.5
    for kw in (dict(sf_low=7, sf_high=7), dict(n_s=3969), dict(n_s=-1), dict(kappa=0), dict(kappa=-1)):
        with pytest.raises(ValueError):
            SuperposConfig(**kw)


def test_power_model():
    pm = PowerModel.from_ratios(4.0, 0.5)
    assert (pm.p_low, pm.p_high, pm.p_noise) == (1.0, 0.25, 2.0)
    pm = PowerModel.from_ratios(math.inf, math.inf)
    assert pm.p_high == 0 and pm.p_noise == 0
    with pytest.raises(ValueError):
        PowerModel.from_ratios(0, 1)


def test_bit_mapping():
    assert bit_to_symbol(0) == 1 and bit_to_symbol(1) == -1
    with pytest.raises(ValueError):
        bit_to_symbol(2)


def test_compose_infinite_kappa_is_low_symbol():
    low, seg = _layers()
    out = compose_tx(low, seg, 1, SuperposConfig())
    np.testing.assert_array_equal(out.samples, low.samples)
    assert out.samples is not low.samples


def test_compose_mean_power():
    # a single (s, c) pair carries a cross term 2 Re(c a <seg, low>) / L that
    # reaches several percent; it cancels exactly across the two BPSK symbols
    sp = SuperposConfig(kappa=4)
    _, seg = _layers()
    powers = []
    for s in range(128):
        low = gen_symbol(LO, s)
        pair = [np.mean(np.abs(compose_tx(low, seg, b, sp).samples) ** 2) for b in (0, 1)]
        cross = 2 * sp.high_amplitude * np.vdot(seg.samples, low.samples).real / len(low)
        assert pair[0] - 1.25 == pytest.approx(cross, abs=1e-12)
        assert np.mean(pair) == pytest.approx(1.25, abs=1e-12)
        powers += pair
    assert np.mean(powers) == pytest.approx(1.25, rel=0.01)


def test_compose_bit_one_unit_kappa():
    low, seg = _layers()
    out = compose_tx(low, seg, 1, SuperposConfig(kappa=1))
    np.testing.assert_array_equal(out.samples, low.samples - seg.samples)


@pytest.mark.parametrize("kappa", [1.0, 2.0, 10.0])
@pytest.mark.parametrize("bit", [0, 1])
def test_superposition_linearity(kappa, bit):
    low, seg = _layers()
    sp = SuperposConfig(kappa=kappa)
    zero = IqBuffer(np.zeros_like(seg.samples), seg.oversample)
    diff = compose_tx(low, seg, bit, sp).samples - compose_tx(low, zero, bit, sp).samples
    np.testing.assert_allclose(diff, math.sqrt(1 / kappa) * (1 - 2 * bit) * seg.samples, atol=1e-15, rtol=0)


def test_compose_rejects_mismatch():
    low, seg = _layers()
    with pytest.raises(ValueError):
        compose_tx(low, IqBuffer(seg.samples[:100], 16), 0, SuperposConfig(kappa=2))
    with pytest.raises(ValueError):
        compose_tx(low, IqBuffer(seg.samples, 8), 0, SuperposConfig(kappa=2))


def test_awgn_infinite_snr_is_identity():
    low, _ = _layers()
    out = awgn(low, math.inf, np.random.default_rng(0))
    np.testing.assert_array_equal(out.samples, low.samples)


@pytest.mark.parametrize("gamma", [0.0, -1.0, float("nan")])
def test_awgn_rejects_bad_snr(gamma):
    with pytest.raises(ValueError):
        awgn(_layers()[0], gamma, np.random.default_rng(0))


def test_awgn_deterministic_for_fixed_seed():
    low, _ = _layers()
    a = awgn(low, 0.3, np.random.default_rng(42))
    b = awgn(low, 0.3, np.random.default_rng(42))
    np.testing.assert_array_equal(a.samples, b.samples)


def test_awgn_variance_one_million_samples():
    buf = IqBuffer(np.zeros(1_000_000, complex))
    w = awgn(buf, 1.0, np.random.default_rng(2024)).samples
    assert np.mean(np.abs(w) ** 2) == pytest.approx(1.0, rel=0.005)


def test_complex_gaussian_is_circular_normal():
    w = complex_gaussian(np.random.default_rng(9), 200_000, 2.0)
    # each quadrature is N(0, power/2), independent of the other
    for comp in (w.real, w.imag):
        assert stats.kstest(comp, "norm").pvalue > 1e-3
    assert abs(np.mean(w.real * w.imag)) < 5 * 1.0 / math.sqrt(len(w))
    assert abs(np.mean(w * w)) < 5 * 2.0 / math.sqrt(len(w))


def test_noise_whiteness_per_bin():
    # pure-noise buffers through the unitary DFT keep power P_n in every bin
    rng = np.random.default_rng(5)
    n, reps, p_n = 128, 10_000, 0.7
    w = complex_gaussian(rng, n * reps, p_n).reshape(reps, n)
    power = np.abs(np.fft.fft(w, axis=1, norm="ortho")) ** 2
    mean = power.mean(axis=0)
    sigma = p_n / math.sqrt(reps)  # exponential: std equals mean
    assert np.all(np.abs(mean - p_n) < 3.5 * sigma)
    assert abs(mean.mean() - p_n) < 3 * sigma / math.sqrt(n)
