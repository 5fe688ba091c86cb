"""Experiment configuration: JSON loading, validation and resolution.

A config is a JSON object with the optional sections ``scenario``,
``traffic``, ``radio``, ``power``, ``linklevel`` and the scalar keys
``seed``, ``policies``, ``hours`` and ``output_dir``.  Missing keys fall back
to the package defaults.  Validation never raises on malformed content; it
returns diagnostics carrying a dotted key path.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .energy import HOURS, PowerModel
from .linklevel import MAX_CC, LinkLevelParams
from .mesh import Policy
from .radio import RadioParams, load_mcs_table
from .scenario import ScenarioConfig, TrafficProfile, diurnal_default, generate_scenario
from .seeding import derive_seed

MAX_SEED = 2 ** 63 - 1
MAX_SCBS = 500
MAX_USERS = 200_000
MAX_DRAWS = 1_000_000
DEFAULT_SNR_GRID = tuple(float(s) for s in range(-10, 42, 2))


@dataclass(frozen=True)
class Diagnostic:
    key: str
    message: str

    def __str__(self) -> str:
        return f"{self.key}: {self.message}"


class ConfigError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class LinkLevelSweep:
    params: LinkLevelParams = LinkLevelParams()
    snr_db: tuple[float, ...] = DEFAULT_SNR_GRID
    n_draws: int = 10_000
    enabled: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    traffic: TrafficProfile = field(default_factory=diurnal_default)
    radio: RadioParams = RadioParams()
    power: PowerModel = PowerModel()
    policies: tuple[Policy, ...] = tuple(Policy)
    hours: tuple[int, ...] = HOURS
    seed: int = 1
    linklevel: LinkLevelSweep = LinkLevelSweep()
    output_dir: Path | None = None

    def to_dict(self) -> dict:
        """Canonical resolved form; ``output_dir`` is not part of it."""
        ll = self.linklevel
        return {
            "scenario": dataclasses.asdict(self.scenario),
            "traffic": self.traffic.to_dict(),
            "radio": {k: ([list(r) for r in v] if k == "mcs_table" else v)
                      for k, v in dataclasses.asdict(self.radio).items()},
            "power": {"p_on": self.power.p_on_w, "p_off": self.power.p_off_w},
            "policies": [p.value for p in self.policies],
            "hours": list(self.hours),
            "seed": self.seed,
            "linklevel": {**dataclasses.asdict(ll.params), "snr_db": list(ll.snr_db),
                          "n_draws": ll.n_draws, "enabled": ll.enabled},
        }

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def scenario_seed(self) -> int:
        return derive_seed(self.seed, "scenario")

    def traffic_seed(self, hour: int) -> int:
        return derive_seed(self.seed, hour, "traffic")

    def linklevel_seed(self) -> int:
        return derive_seed(self.seed, "linklevel")


def default_config_path() -> Path:
    return Path(str(resources.files("muran") / "data" / "default_config.json"))


# ---------------------------------------------------------------- checking

_TOP_KEYS = {"scenario", "traffic", "radio", "power", "policies", "hours", "seed",
             "linklevel", "output_dir"}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return (_is_int(v) or isinstance(v, float)) and math.isfinite(v)


class _Checker:
    def __init__(self):
        self.diags: list[Diagnostic] = []

    def err(self, key: str, message: str):
        self.diags.append(Diagnostic(key, message))

    def section(self, raw: Mapping, name: str) -> dict | None:
        v = raw.get(name, {})
        if not isinstance(v, dict):
            self.err(name, "must be a JSON object")
            return None
        return v

    def scalar_fields(self, sec: dict, prefix: str, cls, skip=()) -> dict:
        """Type-check the flat scalar fields of dataclass ``cls`` found in ``sec``."""
        kinds = {f.name: f.type for f in dataclasses.fields(cls)}
        out = {}
        for k, v in sec.items():
            if k in skip:
                continue
            key = f"{prefix}.{k}"
            kind = kinds.get(k)
            if kind is None:
                self.err(key, "unknown key")
            elif kind == "int" and not _is_int(v):
                self.err(key, "must be an integer")
            elif kind == "float" and not _is_real(v):
                self.err(key, "must be a finite number")
            elif kind == "str" and not isinstance(v, str):
                self.err(key, "must be a string")
            elif kind not in ("int", "float", "str"):
                self.err(key, "cannot be set here")
            else:
                out[k] = float(v) if kind == "float" else v
        return out

    def build(self, key: str, factory, **kw):
        try:
            return factory(**kw)
        except (ValueError, TypeError, OverflowError) as exc:
            self.err(key, str(exc))
            return None


def _check_scenario(c: _Checker, raw: Mapping) -> ScenarioConfig | None:
    sec = c.section(raw, "scenario")
    if sec is None:
        return None
    n0 = len(c.diags)
    kw = c.scalar_fields(sec, "scenario", ScenarioConfig)
    if "n_scbs" in kw and not 0 <= kw["n_scbs"] <= MAX_SCBS:
        c.err("scenario.n_scbs", f"must be in 0..{MAX_SCBS}")
    if "n_users" in kw and not 0 <= kw["n_users"] <= MAX_USERS:
        c.err("scenario.n_users", f"must be in 0..{MAX_USERS}")
    if "placement" in kw and kw["placement"] not in ("uniform", "grid"):
        c.err("scenario.placement", "must be 'uniform' or 'grid'")
    if "sectors_per_scbs" in kw and kw["sectors_per_scbs"] not in (3, 4):
        c.err("scenario.sectors_per_scbs", "must be 3 or 4")
    for k in ("area_side_m", "macro_isd_m"):
        if k in kw and not kw[k] > 0:
            c.err(f"scenario.{k}", "must be > 0")
    for k in ("min_separation_m", "user_mean_demand_bps", "macro_height_m", "scbs_height_m",
              "user_height_m"):
        if k in kw and kw[k] < 0:
            c.err(f"scenario.{k}", "must be >= 0")
    if "area_side_m" in kw and kw["area_side_m"] > 1e6:
        c.err("scenario.area_side_m", "must be <= 1e6 m")
    if len(c.diags) > n0:
        return None
    return c.build("scenario", ScenarioConfig, **kw)


def _check_traffic(c: _Checker, raw: Mapping) -> TrafficProfile | None:
    sec = c.section(raw, "traffic")
    if sec is None:
        return None
    n0 = len(c.diags)
    base = diurnal_default()
    kw = c.scalar_fields(sec, "traffic", TrafficProfile, skip=("hourly_multiplier", "hotspots"))
    mult = base.hourly_multiplier
    if "hourly_multiplier" in sec:
        v = sec["hourly_multiplier"]
        if not (isinstance(v, list) and len(v) == 24 and all(_is_real(x) for x in v)):
            c.err("traffic.hourly_multiplier", "must be a list of 24 finite numbers")
        else:
            mult = tuple(float(x) for x in v)
    hotspots = base.to_dict()["hotspots"]
    if "hotspots" in sec:
        v = sec["hotspots"]
        if not isinstance(v, list):
            c.err("traffic.hotspots", "must be a list")
        else:
            parsed = []
            for i, h in enumerate(v):
                key = f"traffic.hotspots[{i}]"
                ok = (isinstance(h, dict) and set(h) == {"offset_m", "radius_m", "weight"}
                      and isinstance(h["offset_m"], list) and len(h["offset_m"]) == 2
                      and all(_is_real(x) for x in h["offset_m"])
                      and _is_real(h["radius_m"]) and _is_real(h["weight"]))
                if not ok:
                    c.err(key, "needs offset_m [x, y], radius_m and weight")
                    continue
                parsed.append(h)
            hotspots = parsed
    if len(c.diags) > n0:
        return None
    d = {**base.to_dict(), **kw, "hourly_multiplier": list(mult), "hotspots": hotspots}
    return c.build("traffic", TrafficProfile.from_dict, d=d)


def _check_radio(c: _Checker, raw: Mapping, base_dir: Path) -> RadioParams | None:
    sec = c.section(raw, "radio")
    if sec is None:
        return None
    n0 = len(c.diags)
    kw = c.scalar_fields(sec, "radio", RadioParams, skip=("mcs_table_csv",))
    if "mcs_table_csv" in sec:
        v = sec["mcs_table_csv"]
        if not isinstance(v, str) or not v:
            c.err("radio.mcs_table_csv", "must be a file path")
        else:
            path = Path(v) if Path(v).is_absolute() else base_dir / v
            try:
                kw["mcs_table"] = load_mcs_table(path)
            except (OSError, UnicodeDecodeError) as exc:
                c.err("radio.mcs_table_csv", f"cannot read {path}: {exc.__class__.__name__}")
            except (KeyError, ValueError, TypeError):
                c.err("radio.mcs_table_csv",
                      "needs numeric columns snr_threshold_db,se_bps_hz")
    for k in ("mmw_n_channels", "lte_n_sectors"):
        if k in kw and not 1 <= kw[k] <= 64:
            c.err(f"radio.{k}", "must be in 1..64")
    for k in ("lte_beamwidth_deg", "mmw_beamwidth_deg"):
        if k in kw and not 0 < kw[k] <= 360:
            c.err(f"radio.{k}", "must be in (0, 360]")
    if len(c.diags) > n0:
        return None
    return c.build("radio", RadioParams, **kw)


def _check_power(c: _Checker, raw: Mapping) -> PowerModel | None:
    sec = c.section(raw, "power")
    if sec is None:
        return None
    base = PowerModel()
    vals = {"p_on": base.p_on_w, "p_off": base.p_off_w}
    ok = True
    for k, v in sec.items():
        if k not in vals:
            c.err(f"power.{k}", "unknown key")
            ok = False
        elif not _is_real(v) or v < 0:
            c.err(f"power.{k}", "must be a finite number >= 0")
            ok = False
        else:
            vals[k] = float(v)
    if not ok:
        return None
    if not vals["p_off"] < vals["p_on"]:
        c.err("power.p_off", f"must be below power.p_on ({vals['p_on']} W)")
        return None
    return PowerModel(vals["p_on"], vals["p_off"])


def _check_linklevel(c: _Checker, raw: Mapping) -> LinkLevelSweep | None:
    sec = c.section(raw, "linklevel")
    if sec is None:
        return None
    n0 = len(c.diags)
    extra = ("snr_db", "n_draws", "enabled")
    kw = c.scalar_fields(sec, "linklevel", LinkLevelParams, skip=extra)
    if "n_cc" in kw and not 1 <= kw["n_cc"] <= MAX_CC:
        c.err("linklevel.n_cc", f"must be in 1..{MAX_CC}; carrier aggregation allows at most "
                                f"{MAX_CC} component carriers")
    for k in ("n_tx", "n_rx"):
        if k in kw and not 1 <= kw[k] <= 16:
            c.err(f"linklevel.{k}", "must be in 1..16")
    if "max_bits_per_symbol" in kw and not 1 <= kw["max_bits_per_symbol"] <= 64:
        c.err("linklevel.max_bits_per_symbol", "must be in 1..64")
    snr = DEFAULT_SNR_GRID
    if "snr_db" in sec:
        v = sec["snr_db"]
        if not (isinstance(v, list) and v and all(_is_real(x) and abs(x) <= 300 for x in v)):
            c.err("linklevel.snr_db", "must be a nonempty list of numbers in [-300, 300]")
        else:
            snr = tuple(float(x) for x in v)
    n_draws = sec.get("n_draws", LinkLevelSweep.n_draws)
    if not _is_int(n_draws) or not 1 <= n_draws <= MAX_DRAWS:
        c.err("linklevel.n_draws", f"must be an integer in 1..{MAX_DRAWS}")
    enabled = sec.get("enabled", False)
    if not isinstance(enabled, bool):
        c.err("linklevel.enabled", "must be true or false")
    if len(c.diags) > n0:
        return None
    params = c.build("linklevel", LinkLevelParams, **kw)
    return None if params is None else LinkLevelSweep(params, snr, n_draws, enabled)


def _check_lists(c: _Checker, raw: Mapping):
    policies = tuple(Policy)
    if "policies" in raw:
        v = raw["policies"]
        names = [p.value for p in Policy]
        if not isinstance(v, list) or not v:
            c.err("policies", "must be a nonempty list")
            policies = None
        elif not all(isinstance(p, str) and p in names for p in v):
            c.err("policies", f"entries must be among {names}")
            policies = None
        elif len(set(v)) != len(v):
            c.err("policies", "contains duplicates")
            policies = None
        else:
            policies = tuple(Policy(p) for p in v)
    hours = HOURS
    if "hours" in raw:
        v = raw["hours"]
        if not (isinstance(v, list) and v and all(_is_int(h) and 0 <= h <= 23 for h in v)):
            c.err("hours", "must be a nonempty list of integers in 0..23")
            hours = None
        elif len(set(v)) != len(v):
            c.err("hours", "contains duplicates")
            hours = None
        else:
            hours = tuple(sorted(v))
    seed = raw.get("seed", 1)
    if not _is_int(seed) or not 0 <= seed <= MAX_SEED:
        c.err("seed", "must be an integer in 0..2^63-1")
        seed = None
    out = raw.get("output_dir")
    if out is not None and not (isinstance(out, str) and out):
        c.err("output_dir", "must be a nonempty path string")
    return policies, hours, seed, (Path(out) if isinstance(out, str) and out else None)


def check_config(raw: Any, base_dir: Path | str = ".") -> tuple[ExperimentConfig | None,
                                                                 list[Diagnostic]]:
    """Resolve a parsed JSON document; returns (config or None, diagnostics)."""
    c = _Checker()
    if not isinstance(raw, dict):
        c.err("(root)", "config must be a JSON object")
        return None, c.diags
    for k in raw:
        if k not in _TOP_KEYS:
            c.err(str(k) or repr(k), "unknown key")
    base_dir = Path(base_dir)
    scenario = _check_scenario(c, raw)
    traffic = _check_traffic(c, raw)
    radio = _check_radio(c, raw, base_dir)
    power = _check_power(c, raw)
    linklevel = _check_linklevel(c, raw)
    policies, hours, seed, out = _check_lists(c, raw)
    if scenario is not None and seed is not None and not c.diags:
        # placement feasibility is only known once the sites are drawn
        try:
            generate_scenario(scenario, derive_seed(seed, "scenario"))
        except ValueError as exc:
            c.err("scenario", str(exc))
    if c.diags:
        return None, c.diags
    return ExperimentConfig(scenario, traffic, radio, power, policies, hours, seed,
                            linklevel, out), []


def _read(path: Path | str) -> tuple[Any, list[Diagnostic]]:
    """Parse ``path``; an unreadable file raises ``OSError``."""
    data = Path(path).read_bytes()
    try:
        return json.loads(data.decode("utf-8")), []
    except (UnicodeDecodeError, ValueError) as exc:
        return None, [Diagnostic("(root)", f"not valid UTF-8 JSON: {exc}")]
    except RecursionError:
        return None, [Diagnostic("(root)", "JSON nesting too deep")]


def validate_config(path: Path | str) -> list[Diagnostic]:
    raw, diags = _read(path)
    if diags:
        return diags
    return check_config(raw, Path(path).parent)[1]


def load_config(path: Path | str, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    """Load and resolve ``path``; top-level ``overrides`` replace file values."""
    raw, diags = _read(path)
    if diags:
        raise ConfigError(diags)
    if overrides and isinstance(raw, dict):
        raw = {**raw, **overrides}
    cfg, diags = check_config(raw, Path(path).parent)
    if diags:
        raise ConfigError(diags)
    return cfg
