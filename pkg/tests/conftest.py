import functools

import pytest

from muran.scenario import (
    MACRO,
    SCBS,
    Area,
    Scenario,
    ScenarioConfig,
    Site,
    User,
    generate_scenario,
)

BIG_SIDE = 4000.0
BIG_ISD = 2000.0
CENTER = (BIG_SIDE / 2, BIG_SIDE / 2)


def handmade(offsets, users=(), n_sectors=3):
    """Scenario with SC-BSs at ``offsets`` (metres from the macro) in a wide cell."""
    cfg = ScenarioConfig(area_side_m=BIG_SIDE, macro_isd_m=BIG_ISD, n_scbs=len(offsets),
                         n_users=len(users))
    cx, cy = CENTER
    sites = [Site(0, MACRO, CENTER, cfg.macro_height_m, 3, True)]
    for i, (dx, dy) in enumerate(offsets, start=1):
        sites.append(Site(i, SCBS, (cx + dx, cy + dy), cfg.scbs_height_m, n_sectors, False))
    us = tuple(User(i, (cx + dx, cy + dy), 62e3) for i, (dx, dy) in enumerate(users))
    return Scenario(cfg, Area(BIG_SIDE, BIG_ISD), tuple(sites), us)


@functools.lru_cache(maxsize=None)
def default_scenario(seed: int = 1) -> Scenario:
    from muran.seeding import derive_seed
    return generate_scenario(ScenarioConfig(), derive_seed(seed, "scenario"))


@pytest.fixture(scope="session")
def scenario():
    return default_scenario(1)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
