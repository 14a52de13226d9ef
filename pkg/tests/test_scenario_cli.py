import copy
import json
import re

import numpy as np
import pytest

from foliation_lab.cli import main
from foliation_lab.errors import ConfigError, SamplerError
from foliation_lab.leaves import LeafSample
from foliation_lab.scenario import builtin_names, config_from_dict, load_config
from foliation_lab.svg import emit_leaf_plot

from conftest import builtin


def raw(name):
    return copy.deepcopy(builtin(name).data)


@pytest.mark.parametrize("name", builtin_names())
def test_builtins_load(name):
    cfg = builtin(name)
    assert cfg.name == name
    assert len(cfg.hash) == 64


def test_hash_ignores_key_order():
    d = raw("circle_quarter")
    shuffled = dict(reversed(list(d.items())))
    assert config_from_dict(shuffled).hash == config_from_dict(d).hash


@pytest.mark.parametrize("edit, pointer", [
    (lambda d: d["matrices"].update(J=[[0, 1], [1, 0]]), "/connection/terms/0/0/matrix"),
    (lambda d: d["run"].update(step="x"), "/run/step"),
    (lambda d: d["fields"][0].update(base_part=["1+"]), "/fields/0"),
    (lambda d: d["run"]["seed_point"].update(v=[1.0]), "/run/seed_point/v"),
])
def test_config_errors_carry_pointers(edit, pointer):
    d = raw("circle_quarter")
    edit(d)
    with pytest.raises(ConfigError) as err:
        config_from_dict(d)
    assert err.value.pointer == pointer


def test_closure_must_contain_algebra():
    d = raw("closure_torus")
    d["fiber"]["closure"] = ["T1"]
    with pytest.raises(ConfigError) as err:
        config_from_dict(d)
    assert err.value.pointer == "/fiber/closure"


def test_missing_file_and_bad_json(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="line 1"):
        load_config(bad)


def test_cli_config_error_exit_code(tmp_path, capsys):
    d = raw("circle_quarter")
    d["matrices"]["J"] = [[0, 1], [1, 0]]
    path = tmp_path / "c.json"
    path.write_text(json.dumps(d), encoding="utf-8")
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "config error at /connection/terms/0/0/matrix" in capsys.readouterr().err
    assert main(["validate", "--config", str(path)]) == 2
    assert main(["validate", "--config", "builtin:circle_quarter"]) == 0


def test_cli_run_outputs_and_pass(tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", "builtin:circle_quarter", "--suite", "linearize", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["summary"]["failed"] == 0
    assert {c["id"] for c in report["checks"]} >= {"linearize.killing", "linearize.linear_part"}
    header = (out / "defects.csv").read_text().splitlines()[0]
    assert header == "check_id,anchor,defect,tol,pass"
    assert "wall" not in json.dumps(report) and (out / "timings.json").exists()


def test_cli_mutation_is_reported_as_failure(tmp_path):
    out = tmp_path / "mut"
    assert main(["run", "--config", "builtin:wrong_quotient", "--suite", "axioms", "--out", str(out)]) == 1
    rows = {c["id"]: c for c in json.loads((out / "report.json").read_text())["checks"]}
    bad = rows["axioms.quotient_frames"]
    assert bad["status"] == "fail" and "inputs" in bad and "seed" in bad["inputs"]


def test_report_independent_of_thread_count(tmp_path):
    texts = []
    for threads in ("1", "3"):
        out = tmp_path / threads
        main(["run", "--config", "builtin:circle_third", "--suite", "transport", "--threads", threads,
              "--out", str(out)])
        texts.append({f: (out / f).read_bytes() for f in ("report.json", "defects.csv", "summary.txt")})
    assert texts[0] == texts[1]


def test_bad_threads_is_config_error(tmp_path):
    assert main(["run", "--config", "builtin:flat_circle", "--threads", "0", "--out", str(tmp_path)]) == 2


def _sample(points, b_dim=1, n=2):
    pts = np.asarray(points, dtype=float).reshape(-1, b_dim + n)
    seed = (np.zeros(b_dim), np.eye(n)[0])
    return LeafSample(kind="F_ell", seed_point=seed, points=pts, eps=0.1, periods=(), generation={}, partial=False)


def test_svg_single_point_is_centered():
    svg = emit_leaf_plot(_sample([[0.0, 0.3, -0.2]]))
    assert re.findall(r'<circle cx="([\d.]+)" cy="([\d.]+)"', svg) == [("400.00", "400.00")]


def test_svg_empty_sample_and_bad_projection():
    with pytest.raises(SamplerError):
        emit_leaf_plot(_sample(np.zeros((0, 3))))
    with pytest.raises(ConfigError) as err:
        emit_leaf_plot(_sample([[0.0, 1.0, 0.0]]), "v0,v7")
    assert err.value.pointer == "/proj"


def test_svg_is_deterministic_and_inside_canvas(rng):
    pts = np.column_stack([np.zeros(50), rng.normal(size=(50, 2))])
    a = emit_leaf_plot(_sample(pts), "x0,v0,v1", "abc", 5)
    assert a == emit_leaf_plot(_sample(pts), "x0,v0,v1", "abc", 5)
    coords = np.array(re.findall(r'<circle cx="([\d.]+)" cy="([\d.]+)"', a), dtype=float)
    assert len(coords) == 50 and coords.min() >= 60 - 1e-9 and coords.max() <= 740 + 1e-9
    assert "config_hash=abc seed=5" in a


def test_plot_command(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"config_hash": "h", "seed": 1, "sample": _sample([[0, 1, 0], [0, 0, 1]]).to_json()}))
    assert main(["plot", "--sample", str(path), "--out", str(tmp_path / "p.svg")]) == 0
    assert (tmp_path / "p.svg").read_text().startswith("<?xml")
    assert main(["plot", "--sample", str(tmp_path / "missing.json")]) == 2
