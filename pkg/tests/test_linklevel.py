import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muran.linklevel import (
    ChannelRealization,
    LinkLevelParams,
    awgn_parallel_se,
    draw_channel,
    draw_channels,
    spectral_efficiency,
    sweep_snr,
    throughput,
)

P = LinkLevelParams()


def k_moment_estimate(h):
    """Rician K from the first two moments of |h|^2."""
    p = np.abs(h) ** 2
    gamma = p.var() / p.mean() ** 2
    r = math.sqrt(1.0 - gamma)
    return r / (1.0 - r)


def test_defaults():
    assert (P.k_factor_db, P.carrier_hz, P.code_rate, P.n_tx, P.n_rx, P.xpd_db) == \
        (20.0, 26e9, 0.8, 2, 2, 50.0)
    assert P.cc_bandwidth_hz == 125e6 and P.max_bits_per_symbol == 8
    assert P.se_cap == pytest.approx(12.8)


@pytest.mark.parametrize("bad", [dict(n_cc=0), dict(n_cc=9), dict(code_rate=0.0),
                                 dict(code_rate=1.1), dict(xpd_db=-1.0),
                                 dict(overhead_factor=0.0), dict(n_rx=3)])
def test_param_invariants(bad):
    with pytest.raises(ValueError):
        LinkLevelParams(**bad)


def test_pure_los_limit_is_identity():
    h = draw_channel(LinkLevelParams(k_factor_db=math.inf, xpd_db=math.inf), 3).h
    assert np.array_equal(h, np.eye(2, dtype=complex))


def test_draw_is_deterministic():
    a, b = draw_channel(P, 17), draw_channel(P, 17)
    assert np.array_equal(a.h, b.h) and not np.array_equal(a.h, draw_channel(P, 18).h)


def test_cross_to_co_polar_power_ratio():
    h = draw_channels(P, 100_000, np.random.default_rng(1))
    co = np.mean(np.abs(h[:, 0, 0]) ** 2)
    cross = np.mean(np.abs(h[:, 0, 1]) ** 2)
    assert cross / co == pytest.approx(10 ** -5.0, rel=0.05)
    assert co == pytest.approx(1.0, abs=0.01)


def test_k_factor_recovered():
    h = draw_channels(P, 100_000, np.random.default_rng(2))
    k_db = 10 * math.log10(k_moment_estimate(h[:, 0, 0]))
    assert abs(k_db - 20.0) < 0.5


def test_se_identity_examples():
    eye = ChannelRealization(np.eye(2, dtype=complex))
    assert spectral_efficiency(eye, 0.0, P) == pytest.approx(0.8 * 2 * math.log2(1.5))
    assert spectral_efficiency(eye, 0.0, P) == pytest.approx(0.936, abs=5e-4)
    assert spectral_efficiency(eye, 300.0, P) == pytest.approx(12.8)


@settings(max_examples=200)
@given(st.integers(0, 2**32), st.floats(-30, 200))
def test_se_never_exceeds_cap(seed, snr):
    h = draw_channels(P, 8, np.random.default_rng(seed)) * 10.0
    for m in h:
        se = spectral_efficiency(m, snr, P)
        assert 0.0 <= se <= 12.8 + 1e-12


def test_se_at_30db_and_crossing_10():
    res = sweep_snr(P, range(-10, 42, 2), 10_000, 5)
    at30 = res.mean_se_bps_hz[res.snr_grid_db.index(30.0)]
    assert 9.0 <= at30 <= 12.8
    assert any(s >= 10.0 for s in res.mean_se_bps_hz)
    assert min(res.mean_se_bps_hz) < 10.0


def test_throughput_examples():
    assert throughput(10.0, LinkLevelParams(n_cc=8, overhead_factor=0.5)) == 5.0e9
    assert throughput(10.0, LinkLevelParams(n_cc=1, overhead_factor=1.0)) == 1.25e9
    for se in (0.3, 7.7, 12.8):
        assert throughput(se, LinkLevelParams(n_cc=8)) == pytest.approx(
            8 * throughput(se, LinkLevelParams(n_cc=1)), rel=1e-15)


def test_sweep_single_draw_reproducible():
    a = sweep_snr(P, [0.0, 10.0], 1, 9)
    assert a == sweep_snr(P, [0.0, 10.0], 1, 9)
    assert a.ci95 == (0.0, 0.0)


def test_sweep_errors():
    with pytest.raises(ValueError):
        sweep_snr(P, [], 10, 1)
    with pytest.raises(ValueError):
        sweep_snr(P, [0.0], 0, 1)


def test_ci_shrinks_with_sqrt_n():
    grid = [0.0, 10.0, 20.0]
    small = sweep_snr(P, grid, 100, 4)
    big = sweep_snr(P, grid, 10_000, 4)
    for a, b in zip(small.ci95, big.ci95):
        assert 5.0 <= a / b <= 20.0


def test_curve_monotone_after_averaging():
    res = sweep_snr(P, np.arange(-10, 42, 1.0), 10_000, 6)
    m = res.mean_se_bps_hz
    assert all(b - a > -0.05 for a, b in zip(m, m[1:]))
    assert max(m) <= P.se_cap


@pytest.mark.parametrize("snr", [0.0, 10.0, 20.0])
def test_los_limit_matches_awgn_closed_form(snr):
    q = LinkLevelParams(k_factor_db=60.0, xpd_db=90.0)
    mean = sweep_snr(q, [snr], 2000, 1).mean_se_bps_hz[0]
    assert mean == pytest.approx(awgn_parallel_se(snr, q), rel=0.01)


@pytest.mark.parametrize("snr", [0.0, 15.0, 30.0])
def test_mean_se_nondecreasing_in_xpd(snr):
    # same seed, so the three curves share their fading draws
    means = [sweep_snr(LinkLevelParams(xpd_db=x), [snr], 10_000, 11).mean_se_bps_hz[0]
             for x in (10.0, 20.0, 50.0)]
    assert means[0] <= means[1] <= means[2]


def test_csv_output():
    text = sweep_snr(P, [0.0, 5.0], 50, 1).to_csv()
    rows = text.split("\r\n")
    assert rows[0] == "snr_db,mean_se,ci95"
    assert rows[1].startswith("0.000000,") and rows[2].startswith("5.000000,")
    assert rows[-1] == ""
