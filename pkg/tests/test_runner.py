import csv
import hashlib
import io
import json
import logging

import pytest

from muran import __version__
from muran.config import default_config_path, load_config
from muran.runner import main, run_experiment

SMALL = {
    "seed": 3,
    "scenario": {"n_scbs": 20, "n_users": 1500},
    "policies": ["NetworkCentric", "UserCentric", "AlwaysOn"],
    "hours": [3, 15],
    "linklevel": {"enabled": True, "n_draws": 200, "snr_db": [0, 10, 20]},
}


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL))
    return p


def read_tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_artifact_set_and_manifest(small_cfg, tmp_path):
    out = tmp_path / "out"
    m = run_experiment(load_config(small_cfg), out)
    files = read_tree(out)
    expected = {"energy.csv", "summary.csv", "linklevel.csv", "manifest.json"} | {
        f"topology/{p}_h{h:02d}.json" for p in SMALL["policies"] for h in (3, 15)}
    assert set(files) == expected
    man = json.loads(files["manifest.json"])
    assert man["version"] == __version__ and man["config_hash"] == m.config_hash
    for rel, digest in man["outputs"].items():
        assert hashlib.sha256(files[rel]).hexdigest() == digest
    assert set(man["timings_s"]) >= {"scenario", "matrix", "linklevel", "total"}
    rows = list(csv.DictReader(io.StringIO(files["energy.csv"].decode())))
    assert len(rows) == 6
    summary = list(csv.DictReader(io.StringIO(files["summary.csv"].decode())))
    assert [r["policy"] for r in summary] == SMALL["policies"]


def test_rerun_and_parallel_are_byte_identical(small_cfg, tmp_path):
    cfg = load_config(small_cfg)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    run_experiment(cfg, tmp_path / "c", workers=2)
    a, b, c = (read_tree(tmp_path / x) for x in "abc")
    for t in (a, b, c):
        man = json.loads(t.pop("manifest.json"))
        man.pop("timings_s")
        t["manifest"] = json.dumps(man, sort_keys=True).encode()
    assert a == b == c


def test_always_on_only(tmp_path, small_cfg):
    cfg = load_config(small_cfg, {"policies": ["AlwaysOn"], "hours": list(range(24))})
    run_experiment(cfg, tmp_path / "o")
    rows = list(csv.DictReader(io.StringIO((tmp_path / "o" / "energy.csv").read_text())))
    assert len(rows) == 24
    assert {r["active_sectors"] for r in rows} == {"60"}


def test_cli_run_hours_subset(small_cfg, tmp_path, capsys):
    out = tmp_path / "cli"
    assert main(["run", "--config", str(small_cfg), "--out", str(out), "--hours", "3,15",
                 "--policies", "NetworkCentric,AlwaysOn", "--seed", "5"]) == 0
    topo = sorted(p.name for p in (out / "topology").iterdir())
    assert topo == ["AlwaysOn_h03.json", "AlwaysOn_h15.json",
                    "NetworkCentric_h03.json", "NetworkCentric_h15.json"]
    assert json.loads((out / "manifest.json").read_text())["seed"] == 5
    assert "wrote" in capsys.readouterr().out


def test_cli_linklevel_flag(tmp_path, small_cfg):
    doc = {**SMALL, "linklevel": {**SMALL["linklevel"], "enabled": False}}
    p = tmp_path / "nolink.json"
    p.write_text(json.dumps(doc))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "x")]) == 0
    assert not (tmp_path / "x" / "linklevel.csv").exists()
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "y"), "--linklevel"]) == 0
    assert (tmp_path / "y" / "linklevel.csv").read_text().startswith("snr_db,mean_se,ci95")


def test_cli_exit_codes(tmp_path, small_cfg, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"power": {"p_on": 1, "p_off": 2}}))
    assert main(["validate", "--config", str(bad)]) == 2
    assert "power.p_off" in capsys.readouterr().err
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["run", "--config", str(small_cfg), "--out", str(tmp_path / "o"),
                 "--hours", "3,x"]) == 2
    assert main(["run", "--config", str(small_cfg), "--out", str(tmp_path / "o"),
                 "--policies", "Never"]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--config", str(small_cfg), "--out", str(blocker / "sub")]) == 3
    assert "output error" in capsys.readouterr().err
    assert main(["validate", "--config", str(default_config_path())]) == 0


def test_cli_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == __version__


def test_log_level_from_env(monkeypatch, small_cfg, tmp_path, caplog):
    monkeypatch.setenv("MURAN_LOG_LEVEL", "info")
    with caplog.at_level(logging.DEBUG):
        assert main(["run", "--config", str(small_cfg), "--out", str(tmp_path / "o"),
                     "--hours", "3"]) == 0
    assert any("matrix" in r.message for r in caplog.records)
    assert logging.getLogger("muran").level == logging.INFO


def test_log_level_defaults_to_warning(monkeypatch, small_cfg, tmp_path, caplog):
    monkeypatch.setenv("MURAN_LOG_LEVEL", "nonsense")
    with caplog.at_level(logging.DEBUG):
        assert main(["run", "--config", str(small_cfg), "--out", str(tmp_path / "o"),
                     "--hours", "3"]) == 0
    assert not [r for r in caplog.records if r.name.startswith("muran") and r.levelno < logging.WARNING]
