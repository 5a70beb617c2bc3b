import csv
import json
from pathlib import Path

import pytest

from livsic.cli import main
from livsic.config import ConfigError, apply_overrides, build, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(cmd, config, out, *extra):
    return main([cmd, "--config", str(config), "--out", str(out), *extra])


def report(out):
    return json.loads((Path(out) / "report.json").read_text())


def small(tmp_path, name, **analysis):
    cfg = json.loads((CONFIGS / name).read_text())
    cfg.setdefault("analysis", {}).update(analysis)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_obstructions_exit_codes(tmp_path):
    assert run("obstructions", CONFIGS / "identity_sft.json", tmp_path / "a") == 0
    assert report(tmp_path / "a")["results"]["obstructions"]["max_deviation"] == 0.0
    assert run("obstructions", small(tmp_path, "coboundary_sft.json"), tmp_path / "b") == 0
    assert report(tmp_path / "b")["results"]["obstructions"]["max_deviation"] <= 1e-8
    assert run("obstructions", CONFIGS / "scaled_coboundary_sft.json", tmp_path / "c") == 1
    res = report(tmp_path / "c")["results"]["obstructions"]
    assert res["min_deviation"] >= 0.105 - 1e-3
    rows = list(csv.reader((tmp_path / "c" / "series.csv").open()))
    assert rows[0] == ["period", "point_id", "deviation"] and len(rows) == res["points"] + 1


def test_growth_reports(tmp_path):
    cfg = small(tmp_path, "two_thirds_scalar.json", n_max=30, period_bound=8)
    assert run("growth", cfg, tmp_path / "g") == 0
    res = report(tmp_path / "g")["results"]
    assert res["inequality"]["passed"]
    assert abs(res["growth"]["r_hat"] - res["periodic_spectrum"]["sup_rp"]) < 1e-12
    for key in ("growth", "periodic_spectrum", "subexponential", "distortion"):
        assert key in res
    header = next(csv.reader((tmp_path / "g" / "series.csv").open()))
    assert header[:3] == ["n", "s_hat", "s_hat_over_n"]


def test_growth_diag_flags_hypothesis(tmp_path):
    assert run("growth", small(tmp_path, "diag_hyperbolic.json", n_max=30, period_bound=6), tmp_path / "d") == 0
    dist = report(tmp_path / "d")["results"]["distortion"]
    assert dist["margin"] < 0 and dist["status"] == "violated"


def test_shadow(tmp_path):
    cfg = small(tmp_path, "cat_map_coboundary.json", returns=20)
    assert run("shadow", cfg, tmp_path / "s") == 0
    res = report(tmp_path / "s")["results"]["shadow"]
    assert res["certificates"] == 20 and res["all_bound_ok"]
    assert res["measured"]["C"] <= res["configured"]["C"]


def test_solve_exit_codes(tmp_path):
    assert run("solve", CONFIGS / "identity_sft.json", tmp_path / "i") == 0
    assert (tmp_path / "i" / "transfer.json").exists()
    assert run("solve", small(tmp_path, "coboundary_sft.json", orbit_length=4096), tmp_path / "c") == 0
    assert report(tmp_path / "c")["results"]["solve"]["compare_known_transfer"]["passed"]
    assert run("solve", CONFIGS / "constant_two.json", tmp_path / "k") == 1
    worst = report(tmp_path / "k")["results"]["solve"]["consistency"]["worst_pair"]
    assert worst["gap"] > 10 * worst["bound"]


def test_verify_end_to_end(tmp_path):
    cfg = small(tmp_path, "coboundary_sft.json", orbit_length=4096, period_bound=8, n_max=30, returns=10)
    assert run("verify", cfg, tmp_path / "v") == 0
    summary = report(tmp_path / "v")["results"]["summary"]
    assert all(summary.values())
    cfg = small(tmp_path, "constant_two.json", period_bound=6, n_max=20, returns=10)
    assert run("verify", cfg, tmp_path / "w") == 1


def test_determinism(tmp_path):
    cfg = small(tmp_path, "coboundary_sft.json", orbit_length=2048, period_bound=6, n_max=20)
    for cmd in ("growth", "solve"):
        assert run(cmd, cfg, tmp_path / "r1") == run(cmd, cfg, tmp_path / "r2")
        one, two = report(tmp_path / "r1"), report(tmp_path / "r2")
        one.pop("metadata"), two.pop("metadata")
        assert json.dumps(one, sort_keys=True) == json.dumps(two, sort_keys=True)
        for name in ("series.csv",) + (("transfer.json",) if cmd == "solve" else ()):
            assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()


def test_config_echoed_and_metadata_separate(tmp_path):
    run("obstructions", CONFIGS / "identity_sft.json", tmp_path / "e")
    rep = report(tmp_path / "e")
    assert rep["config"] == json.loads((CONFIGS / "identity_sft.json").read_text())
    assert "timestamp" in rep["metadata"] and "timestamp" not in json.dumps(rep["results"])


def test_usage_errors(tmp_path, capsys):
    assert main(["bogus", "--config", "x"]) == 2
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "system": {"type": "sft", "alphabet": 2},\n  "ring": \n}')
    assert main(["solve", "--config", str(bad)]) == 2
    assert "line 4" in capsys.readouterr().err
    assert run("solve", CONFIGS / "identity_sft.json", tmp_path / "o", "--override", "analysis.n_max=-1") == 2
    assert run("solve", CONFIGS / "identity_sft.json", tmp_path / "o", "--override", "nonsense") == 2


def test_overrides_and_seed(tmp_path):
    cfg = parse_config((CONFIGS / "coboundary_sft.json").read_text())
    out = apply_overrides(cfg, ["n_max=12", "analysis.eps=0.5", "seed=9"])
    assert out.analysis["n_max"] == 12 and out.analysis["eps"] == 0.5 and out.seed == 9
    assert cfg.analysis["n_max"] == 60


@pytest.mark.parametrize("text, field", [
    ('{"system": {"type": "sft", "alphabet": 2}, "ring": {"type": "scalar"}}', "generator"),
    ('{"system": {"type": "cube"}, "ring": {"type": "scalar"}, "generator": {"type": "identity"}}', "system"),
    ('{"system": {"type": "sft", "alphabet": 2}, "ring": {"type": "scalar"},'
     ' "generator": {"type": "window", "radius": 0}}', "generator"),
    ('{"system": {"type": "sft", "alphabet": 2}, "ring": {"type": "scalar"},'
     ' "generator": {"type": "constant", "value": 0}}', "generator"),
    ('{"system": {"type": "sft", "alphabet": 2}, "ring": {"type": "scalar"},'
     ' "generator": {"type": "identity"}, "analysis": {"nmax": 3}}', "analysis"),
])
def test_config_errors_name_field(text, field):
    with pytest.raises(ConfigError, match=field):
        build(parse_config(text))


def test_shipped_configs_build():
    for path in sorted(CONFIGS.glob("*.json")):
        setup = build(parse_config(path.read_text()))
        assert setup.generator.system is setup.system
