"""Link budgets and achievable rates for LTE access and 60 GHz mmWave links.

Every constant lives in :class:`RadioParams` and can be overridden from the
experiment config (``"radio"`` key).  Distances are 3-D (antenna heights
included).  No fading or blockage at system level: links are LOS and
deterministic.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# IEEE 802.11ad single-carrier MCS1..MCS12 PHY rates (Gbps per 2.16 GHz
# channel), used as spectral efficiency per Hz of channel bandwidth.
DEFAULT_MCS_TABLE: tuple[tuple[float, float], ...] = tuple(
    (-1.0 + 2.0 * i, se)
    for i, se in enumerate(
        (0.385, 0.770, 0.9625, 1.155, 1.25125, 1.540,
         1.925, 2.310, 2.5025, 3.080, 3.850, 4.620)
    )
)


class LinkKind(str, enum.Enum):
    LTE_ACCESS = "LteAccess"
    MMW_LINK = "MmwLink"


class PatternKind(str, enum.Enum):
    THREE_GPP_SECTOR = "ThreeGppSector"
    MMW_BEAM = "MmwBeam"


@dataclass(frozen=True)
class AntennaPattern:
    kind: PatternKind
    peak_gain_dbi: float
    beamwidth_deg: float
    front_to_back_db: float

    def __post_init__(self):
        if self.beamwidth_deg <= 0 or self.beamwidth_deg > 360:
            raise ValueError("beamwidth_deg must be in (0, 360]")
        if self.front_to_back_db < 0:
            raise ValueError("front_to_back_db must be >= 0")


def antenna_gain(pattern: AntennaPattern, offset_deg: float) -> float:
    """Gain in dBi at ``offset_deg`` from boresight.

    Parabolic main lobe, ``peak - 12 (theta / beamwidth)^2``, so the gain is
    exactly 3 dB down at half the beamwidth, clamped at the front-to-back
    floor.  Both pattern kinds share the shape; they differ in defaults.
    """
    theta = (float(offset_deg) + 180.0) % 360.0 - 180.0
    atten = 12.0 * (theta / pattern.beamwidth_deg) ** 2
    return pattern.peak_gain_dbi - min(atten, pattern.front_to_back_db)


@dataclass(frozen=True)
class RadioParams:
    lte_bandwidth_hz: float = 10e6
    lte_carrier_hz: float = 2.0e9
    lte_antenna_gain_dbi: float = 17.0
    lte_tx_power_dbm: float = 46.0
    lte_max_se_bps_hz: float = 6.0
    lte_beamwidth_deg: float = 70.0
    lte_front_to_back_db: float = 25.0
    lte_n_sectors: int = 3
    mmw_channel_bandwidth_hz: float = 2.16e9
    mmw_n_channels: int = 2
    mmw_carrier_hz: float = 60e9
    mmw_antenna_gain_dbi: float = 26.0
    mmw_tx_power_dbm: float = 10.0
    mmw_beamwidth_deg: float = 6.0
    mmw_front_to_back_db: float = 25.0
    mmw_user_gain_dbi: float = 0.0
    ue_gain_dbi: float = 0.0
    noise_density_dbm_hz: float = -174.0
    # LTE macro model: a + b log10(d_km)
    lte_pl_intercept_db: float = 128.1
    lte_pl_slope_db: float = 37.6
    # mmWave model: free space up to the breakpoint, exponent beyond, plus O2
    mmw_pl_breakpoint_m: float = 5.0
    mmw_pl_exponent: float = 2.36
    mmw_oxygen_db_per_km: float = 15.0
    mcs_table: tuple[tuple[float, float], ...] = field(default=DEFAULT_MCS_TABLE)

    def __post_init__(self):
        for name in ("lte_bandwidth_hz", "mmw_channel_bandwidth_hz", "lte_carrier_hz",
                     "mmw_carrier_hz", "mmw_pl_breakpoint_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.mmw_n_channels < 1:
            raise ValueError("mmw_n_channels must be >= 1")
        if not self.mcs_table:
            raise ValueError("mcs_table must not be empty")
        thresholds = [t for t, _ in self.mcs_table]
        ses = [s for _, s in self.mcs_table]
        if thresholds != sorted(thresholds) or ses != sorted(ses) or min(ses) <= 0:
            raise ValueError("mcs_table must be sorted with positive spectral efficiencies")

    @property
    def lte_pattern(self) -> AntennaPattern:
        return AntennaPattern(PatternKind.THREE_GPP_SECTOR, self.lte_antenna_gain_dbi,
                              self.lte_beamwidth_deg, self.lte_front_to_back_db)

    @property
    def mmw_pattern(self) -> AntennaPattern:
        return AntennaPattern(PatternKind.MMW_BEAM, self.mmw_antenna_gain_dbi,
                              self.mmw_beamwidth_deg, self.mmw_front_to_back_db)

    def bandwidth(self, kind: LinkKind) -> float:
        if LinkKind(kind) is LinkKind.LTE_ACCESS:
            return self.lte_bandwidth_hz
        return self.mmw_channel_bandwidth_hz

    def tx_power(self, kind: LinkKind) -> float:
        if LinkKind(kind) is LinkKind.LTE_ACCESS:
            return self.lte_tx_power_dbm
        return self.mmw_tx_power_dbm

    def with_overrides(self, **kw) -> "RadioParams":
        return replace(self, **kw)


def load_mcs_table(path: str | Path) -> tuple[tuple[float, float], ...]:
    """Read an MCS table CSV with columns ``snr_threshold_db,se_bps_hz``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(float(r["snr_threshold_db"]), float(r["se_bps_hz"]))
                for r in csv.DictReader(fh)]
    return tuple(sorted(rows))


def path_loss(kind: LinkKind, distance_m: float, params: RadioParams = RadioParams()) -> float:
    """Path loss in dB for a LOS link of ``distance_m`` metres."""
    if not distance_m > 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return float(path_loss_array(kind, np.asarray(distance_m, dtype=float), params))


def path_loss_array(kind: LinkKind, distance_m: np.ndarray, params: RadioParams) -> np.ndarray:
    d = np.asarray(distance_m, dtype=float)
    if LinkKind(kind) is LinkKind.LTE_ACCESS:
        return params.lte_pl_intercept_db + params.lte_pl_slope_db * np.log10(d / 1000.0)
    lam = SPEED_OF_LIGHT / params.mmw_carrier_hz
    d0 = params.mmw_pl_breakpoint_m
    fspl = lambda x: 20.0 * np.log10(4.0 * math.pi * x / lam)
    near = fspl(d)
    far = fspl(d0) + 10.0 * params.mmw_pl_exponent * np.log10(np.maximum(d, d0) / d0)
    return np.where(d <= d0, near, far) + params.mmw_oxygen_db_per_km * d / 1000.0


def noise_floor_dbm(bandwidth_hz: float, density_dbm_hz: float = -174.0) -> float:
    return density_dbm_hz + 10.0 * math.log10(bandwidth_hz)


def snr_db(tx_power_dbm, tx_gain_dbi, rx_gain_dbi, path_loss_db, bandwidth_hz,
           noise_density_dbm_hz=-174.0):
    """Plain budget: P_tx + G_tx + G_rx - PL - N0 - 10 log10(B). Works on arrays."""
    return (tx_power_dbm + tx_gain_dbi + rx_gain_dbi - path_loss_db
            - (noise_density_dbm_hz + 10.0 * np.log10(bandwidth_hz)))


def distance_3d(a_xy: Sequence[float], a_h: float, b_xy: Sequence[float], b_h: float) -> float:
    return math.sqrt((a_xy[0] - b_xy[0]) ** 2 + (a_xy[1] - b_xy[1]) ** 2 + (a_h - b_h) ** 2)


@dataclass(frozen=True)
class LinkBudget:
    tx_site: int
    rx_site: int
    kind: LinkKind
    distance_m: float
    path_loss_db: float
    tx_power_dbm: float
    tx_gain_dbi: float
    rx_gain_dbi: float
    bandwidth_hz: float
    noise_density_dbm_hz: float
    snr_db: float
    rate_bps: float

    def recompute_snr(self) -> float:
        return float(snr_db(self.tx_power_dbm, self.tx_gain_dbi, self.rx_gain_dbi,
                            self.path_loss_db, self.bandwidth_hz, self.noise_density_dbm_hz))


def link_budget(tx, rx, params: RadioParams = RadioParams(),
                kind: LinkKind = LinkKind.MMW_LINK) -> LinkBudget:
    """Boresight-aligned budget between two sites (beam steering is ideal)."""
    kind = LinkKind(kind)
    if tx.position == rx.position:
        raise ValueError(f"sites {tx.id} and {rx.id} are co-located")
    d = distance_3d(tx.position, tx.height_m, rx.position, rx.height_m)
    pl = path_loss(kind, d, params)
    if kind is LinkKind.LTE_ACCESS:
        g_tx, g_rx = params.lte_antenna_gain_dbi, params.ue_gain_dbi
    else:
        g_tx = g_rx = params.mmw_antenna_gain_dbi
    bw = params.bandwidth(kind)
    snr = float(snr_db(params.tx_power(kind), g_tx, g_rx, pl, bw, params.noise_density_dbm_hz))
    return LinkBudget(tx.id, rx.id, kind, d, pl, params.tx_power(kind), g_tx, g_rx, bw,
                      params.noise_density_dbm_hz, snr, link_rate(snr, kind, params))


def link_snr(tx, rx, params: RadioParams = RadioParams(),
             kind: LinkKind = LinkKind.MMW_LINK) -> float:
    return link_budget(tx, rx, params, kind).snr_db


def link_rate(snr: float, kind: LinkKind, params: RadioParams = RadioParams()) -> float:
    """Achievable rate in bps for a given SNR in dB."""
    return float(link_rate_array(np.asarray(snr, dtype=float), kind, params))


def link_rate_array(snr: np.ndarray, kind: LinkKind, params: RadioParams) -> np.ndarray:
    snr = np.asarray(snr, dtype=float)
    if LinkKind(kind) is LinkKind.LTE_ACCESS:
        with np.errstate(over="ignore"):
            se = np.log2(1.0 + np.power(10.0, snr / 10.0))
        return params.lte_bandwidth_hz * np.minimum(se, params.lte_max_se_bps_hz)
    thresholds = np.array([t for t, _ in params.mcs_table])
    ses = np.concatenate(([0.0], [s for _, s in params.mcs_table]))
    idx = np.searchsorted(thresholds, snr, side="right")
    return ses[idx] * params.mmw_channel_bandwidth_hz * params.mmw_n_channels


def sector_of(azimuth_deg: float | np.ndarray, n_sectors: int):
    """Index of the sector whose boresight (k * 360/n, starting at 0 deg) is nearest."""
    width = 360.0 / n_sectors
    return (np.floor((np.asarray(azimuth_deg) % 360.0 + width / 2.0) / width) % n_sectors).astype(int)


def boresight_offset(azimuth_deg, n_sectors: int):
    width = 360.0 / n_sectors
    k = sector_of(azimuth_deg, n_sectors)
    return (np.asarray(azimuth_deg) - k * width + 180.0) % 360.0 - 180.0


def azimuth_deg(src: Iterable[float], dst: Iterable[float]) -> float:
    (x0, y0), (x1, y1) = src, dst
    return math.degrees(math.atan2(y1 - y0, x1 - x0)) % 360.0
