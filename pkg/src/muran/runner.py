"""Experiment driver and command-line interface.

``run_experiment`` evaluates every (hour, policy) cell of the configured
matrix on one scenario and writes::

    energy.csv                    hour,policy,active_sectors,watts,satisfied_fraction
    summary.csv                   policy,daily_wh,reduction_vs_always_on,hours,p_on_w,p_off_w
    topology/<policy>_hHH.json    per-hour ON/OFF state and backhaul flows
    linklevel.csv                 snr_db,mean_se,ci95 (only when the sweep is enabled)
    manifest.json                 config hash, version, sha256 per output, timings

Every file is written once, to a temporary name first and then renamed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import (
    ConfigError,
    ExperimentConfig,
    default_config_path,
    load_config,
    validate_config,
)
from .energy import energy_over_hours, sector_map
from .linklevel import sweep_snr
from .mesh import MeshState, Policy, run_policy
from .scenario import Scenario, generate_scenario, sample_traffic

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_OUTPUT = 3
LOG_ENV = "MURAN_LOG_LEVEL"


class OutputError(OSError):
    """The output directory cannot be created or written."""


@dataclass(frozen=True)
class RunManifest:
    config_hash: str
    version: str
    seed: int
    outputs: dict[str, str]        # relative path -> sha256
    timings_s: dict[str, float]

    def to_json(self) -> str:
        return json.dumps({
            "config_hash": self.config_hash, "version": self.version, "seed": self.seed,
            "outputs": self.outputs, "timings_s": self.timings_s,
        }, sort_keys=True, indent=2) + "\n"


def _atomic_write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _hour_cell(cfg: ExperimentConfig, scenario: Scenario, hour: int) -> list[MeshState]:
    snapshot = sample_traffic(scenario, cfg.traffic, hour, cfg.traffic_seed(hour))
    return [run_policy(p, scenario, snapshot, cfg.radio) for p in cfg.policies]


def _worker_cell(args):
    cfg, scenario, hour = args
    return _hour_cell(cfg, scenario, hour)


def topology_name(policy: Policy, hour: int) -> str:
    return f"topology/{policy.value}_h{hour:02d}.json"


def run_experiment(config: ExperimentConfig, out_dir: Path | str | None = None,
                   workers: int = 1) -> RunManifest:
    """Run the hour x policy matrix (and the optional link-level sweep) into ``out_dir``.

    All hours share one scenario; every policy sees the same traffic snapshot
    for a given hour.  ``workers > 1`` evaluates hours in separate processes
    and produces the same bytes as a serial run.
    """
    out = Path(out_dir if out_dir is not None else config.output_dir or "")
    if not str(out):
        raise OutputError("no output directory given")
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = tempfile.NamedTemporaryFile(dir=out, prefix=".probe.", delete=True)
        probe.close()
    except OSError as exc:
        raise OutputError(f"cannot write to {out}: {exc}") from exc

    t0 = time.perf_counter()
    timings: dict[str, float] = {}
    scenario = generate_scenario(config.scenario, config.scenario_seed())
    timings["scenario"] = time.perf_counter() - t0

    t = time.perf_counter()
    hours = list(config.hours)
    if workers > 1 and len(hours) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(hours))) as pool:
            cells = list(pool.map(_worker_cell, [(config, scenario, h) for h in hours]))
    else:
        cells = [_hour_cell(config, scenario, h) for h in hours]
    timings["matrix"] = time.perf_counter() - t
    log.info("matrix of %d hours x %d policies done in %.2f s", len(hours),
             len(config.policies), timings["matrix"])

    states = {p: [cell[i] for cell in cells] for i, p in enumerate(config.policies)}
    report = energy_over_hours(states, sector_map(scenario), config.power, hours)

    files: dict[str, bytes] = {
        "energy.csv": report.per_hour_csv().encode("utf-8"),
        "summary.csv": report.summary_csv().encode("utf-8"),
    }
    for p, seq in states.items():
        for s in seq:
            doc = json.dumps(s.to_dict(scenario), sort_keys=True, separators=(",", ":"))
            files[topology_name(p, s.hour)] = (doc + "\n").encode("utf-8")

    ll = config.linklevel
    if ll.enabled:
        t = time.perf_counter()
        res = sweep_snr(ll.params, ll.snr_db, ll.n_draws, config.linklevel_seed())
        files["linklevel.csv"] = res.to_csv().encode("utf-8")
        timings["linklevel"] = time.perf_counter() - t

    try:
        for rel, data in files.items():
            _atomic_write(out / rel, data)
        timings["total"] = time.perf_counter() - t0
        manifest = RunManifest(
            config.config_hash(), __version__, config.seed,
            {rel: hashlib.sha256(data).hexdigest() for rel, data in sorted(files.items())},
            {k: round(v, 6) for k, v in timings.items()})
        _atomic_write(out / "manifest.json", manifest.to_json().encode("utf-8"))
    except OSError as exc:
        raise OutputError(f"cannot write to {out}: {exc}") from exc
    return manifest


# --------------------------------------------------------------------- CLI

def _parse_list(text: str, conv):
    return [conv(x.strip()) for x in text.split(",") if x.strip()]


def _overrides(args) -> dict:
    ov = {}
    if args.seed is not None:
        ov["seed"] = args.seed
    if args.policies is not None:
        ov["policies"] = _parse_list(args.policies, str)
    if args.hours is not None:
        ov["hours"] = _parse_list(args.hours, int)
    return ov


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="muran", description="mmWave micro-RAN ON/OFF experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment matrix")
    run.add_argument("--config", default=None, help="JSON config (default: bundled)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--policies", default=None, help="comma list, e.g. NetworkCentric,AlwaysOn")
    run.add_argument("--hours", default=None, help="comma list of hours, e.g. 3,15")
    run.add_argument("--linklevel", action="store_true", help="also run the link-level sweep")
    run.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("--config", required=True)
    sub.add_parser("version", help="print the tool version")
    return ap


def _setup_logging():
    level = getattr(logging, os.environ.get(LOG_ENV, "WARNING").upper(), logging.WARNING)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    # set on the package logger so it applies even when logging is already configured
    logging.getLogger("muran").setLevel(level)


def _report(diags) -> None:
    for d in diags:
        print(f"config error: {d}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_OK

    if args.command == "validate":
        try:
            diags = validate_config(args.config)
        except OSError as exc:
            print(f"config error: (file): cannot read {args.config}: {exc.strerror}",
                  file=sys.stderr)
            return EXIT_CONFIG
        _report(diags)
        return EXIT_CONFIG if diags else EXIT_OK

    path = args.config or default_config_path()
    try:
        ov = _overrides(args)
    except ValueError:
        print("config error: hours: --hours must be a comma list of integers", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(path, ov)
    except OSError as exc:
        print(f"config error: (file): cannot read {path}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        _report(exc.diagnostics)
        return EXIT_CONFIG
    if args.linklevel:
        cfg = replace(cfg, linklevel=replace(cfg.linklevel, enabled=True))
    if args.workers < 1:
        print("config error: workers: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run_experiment(cfg, args.out, workers=args.workers)
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    print(f"wrote {len(manifest.outputs) + 1} files to {args.out} (config {manifest.config_hash[:12]})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
