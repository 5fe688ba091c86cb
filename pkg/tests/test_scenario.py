import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2_contingency

from muran.scenario import (
    MACRO,
    SCBS,
    Hotspot,
    Scenario,
    ScenarioConfig,
    TrafficProfile,
    TrafficSnapshot,
    diurnal_default,
    generate_scenario,
    sample_traffic,
    spatial_weights,
    uniform_profile,
)

SMALL = ScenarioConfig(n_scbs=20, n_users=1000)


def test_default_config_has_90_scbs_and_one_macro():
    sc = generate_scenario(ScenarioConfig(), 7)
    kinds = [s.kind for s in sc.sites]
    assert kinds.count(MACRO) == 1 and kinds.count(SCBS) == 90
    m = sc.macro
    assert m.is_gateway and m.height_m == 25.0 and m.position == sc.area.center
    assert all(s.height_m == 4.0 and s.n_sectors in (3, 4) and not s.is_gateway for s in sc.scbs)


def test_zero_scbs_gives_macro_only():
    sc = generate_scenario(ScenarioConfig(n_scbs=0, n_users=10), 3)
    assert len(sc.sites) == 1 and sc.scbs == ()


def test_generation_is_byte_deterministic():
    a = generate_scenario(ScenarioConfig(), 11).to_json()
    b = generate_scenario(ScenarioConfig(), 11).to_json()
    assert a == b
    assert a != generate_scenario(ScenarioConfig(), 12).to_json()


def test_json_roundtrip():
    sc = generate_scenario(SMALL, 5)
    import json
    assert Scenario.from_dict(json.loads(sc.to_json())) == sc


@pytest.mark.parametrize("placement", ["uniform", "grid"])
def test_sites_inside_cell_and_separated(placement):
    cfg = ScenarioConfig(n_scbs=90, n_users=500, placement=placement)
    sc = generate_scenario(cfg, 2)
    xy = np.array([s.position for s in sc.sites])
    assert sc.area.in_cell(xy[1:]).all()
    d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    np.fill_diagonal(d, np.inf)
    assert d.min() >= cfg.min_separation_m
    uxy = np.array([u.position for u in sc.users])
    assert sc.area.contains(uxy).all()


@pytest.mark.parametrize("placement", ["uniform", "grid"])
def test_unplaceable_count_rejected(placement):
    with pytest.raises(ValueError):
        generate_scenario(ScenarioConfig(n_scbs=300, min_separation_m=60.0, placement=placement), 1)


def test_area_must_hold_the_cell():
    with pytest.raises(ValueError):
        generate_scenario(ScenarioConfig(area_side_m=400.0), 1)


def test_diurnal_default_shape():
    m = diurnal_default().hourly_multiplier
    assert len(m) == 24
    assert m[15] == 1.0
    assert m[3] <= 0.1
    assert int(np.argmin(m)) == 3 and int(np.argmax(m)) == 15
    assert all(0.0 <= v <= 1.0 for v in m)
    assert min(m) / max(m) <= 0.1


def test_default_hotspots_carry_sixty_percent():
    assert sum(h.weight for h in diurnal_default().hotspots) == pytest.approx(0.6)


@pytest.mark.parametrize("bad", [
    dict(hourly_multiplier=(1.0,) * 23),
    dict(hourly_multiplier=(0.5,) * 24),
    dict(hourly_multiplier=(1.0,) * 23 + (-0.1,)),
    dict(hourly_multiplier=(1.0,) * 24, hotspots=(Hotspot((0, 0), 10, 0.7),) * 2),
])
def test_profile_invariants(bad):
    with pytest.raises(ValueError):
        TrafficProfile(**bad)


def test_hour_out_of_range():
    sc = generate_scenario(SMALL, 1)
    for h in (-1, 24, 3.5):
        with pytest.raises(ValueError):
            sample_traffic(sc, diurnal_default(), h, 1)


def test_peak_total_close_to_scaled_area_peak():
    # 1000 users, mean 62 kbps, scale 1000 -> 44 Gbps expected at the peak
    sc = generate_scenario(ScenarioConfig(n_users=1000), 4)
    prof = diurnal_default()
    totals = [sample_traffic(sc, prof, prof.peak_hour, s).total_bps for s in range(100)]
    assert np.mean(totals) == pytest.approx(44e9, rel=0.10)


@pytest.mark.parametrize("hour", [15, 9, 3])
def test_total_matches_expectation_over_seeds(hour):
    sc = generate_scenario(ScenarioConfig(n_users=4000), 6)
    prof = diurnal_default()
    expected = prof.hourly_multiplier[hour] * prof.scale_factor * prof.area_peak_bps
    totals = [sample_traffic(sc, prof, hour, s).total_bps for s in range(200)]
    tol = 1e-2 if hour != 3 else 3e-2   # the trough has ~3 % of users, so more noise
    assert np.mean(totals) / expected == pytest.approx(1.0, abs=tol)


def test_zero_multiplier_gives_zero_demand():
    sc = generate_scenario(SMALL, 1)
    prof = TrafficProfile(hourly_multiplier=(0.0,) + (1.0,) * 23)
    snap = sample_traffic(sc, prof, 0, 9)
    assert all(snap.demand(u.id) == 0.0 for u in sc.users)
    assert snap.total_bps == 0.0


def test_sampling_deterministic_and_nonnegative():
    sc = generate_scenario(SMALL, 1)
    a = sample_traffic(sc, diurnal_default(), 12, 5)
    b = sample_traffic(sc, diurnal_default(), 12, 5)
    assert a == b and a.to_dict() == b.to_dict()
    assert all(v >= 0 for v in a.demands.values())
    assert TrafficSnapshot.from_dict(a.to_dict()) == a


@pytest.mark.parametrize("c", [2.0, 0.5, 4.0])
def test_scale_factor_scales_exactly(c):
    sc = generate_scenario(SMALL, 1)
    base = diurnal_default()
    scaled = TrafficProfile(base.hourly_multiplier, base.hotspots, base.scale_factor * c)
    a = sample_traffic(sc, base, 15, 3)
    b = sample_traffic(sc, scaled, 15, 3)
    assert a.demands.keys() == b.demands.keys()
    assert all(b.demands[k] == c * a.demands[k] for k in a.demands)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(0, 2**32))
def test_scale_factor_scales_any_c(c, seed):
    sc = generate_scenario(SMALL, 1)
    base = diurnal_default()
    scaled = TrafficProfile(base.hourly_multiplier, base.hotspots, base.scale_factor * c)
    a = sample_traffic(sc, base, 10, seed)
    b = sample_traffic(sc, scaled, 10, seed)
    for k, v in a.demands.items():
        assert b.demands[k] == pytest.approx(c * v, rel=1e-12)


def test_uniform_profile_demand_independent_of_position():
    sc = generate_scenario(ScenarioConfig(n_users=8000), 8)
    snap = sample_traffic(sc, uniform_profile(), 0, 21)
    assert np.allclose(spatial_weights(sc, uniform_profile()), 1.0)
    cx, cy = sc.area.center
    d = np.array([snap.demand(u.id) for u in sc.users])
    quad = np.array([(u.position[0] >= cx) * 2 + (u.position[1] >= cy) for u in sc.users])
    high = d > np.median(d)
    table = [[np.sum(high & (quad == q)) for q in range(4)],
             [np.sum(~high & (quad == q)) for q in range(4)]]
    assert chi2_contingency(table)[1] > 0.01


def test_hotspots_raise_local_weight():
    sc = generate_scenario(ScenarioConfig(n_users=8000), 8)
    prof = diurnal_default()
    w = spatial_weights(sc, prof)
    cx, cy = sc.area.center
    hs = prof.hotspots[0]
    xy = np.array([u.position for u in sc.users])
    near = np.hypot(xy[:, 0] - cx - hs.offset_m[0], xy[:, 1] - cy - hs.offset_m[1]) < hs.radius_m
    assert w[near].mean() > 10 * w[~near].mean()
    assert w.mean() == pytest.approx(1.0, rel=0.1)
