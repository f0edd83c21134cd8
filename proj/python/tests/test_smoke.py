import json
import pathlib

import pytest

import perfmap

ROOT = pathlib.Path(__file__).resolve().parents[2]


def toy_config(tmp_path, extra=None):
    rows = ["a,b,label"]
    for i in range(40):
        rows.append(f"{i % 7},{(i * 3) % 5},{'yes' if i % 7 > 2 else 'no'}")
    (tmp_path / "toy.csv").write_text("\n".join(rows) + "\n")
    cfg = {
        "dataset": {
            "name": "toy",
            "path": "toy.csv",
            "task": "classification",
            "schema": {
                "target": "label",
                "columns": [{"name": "a", "kind": "integer"}, {"name": "b", "kind": "integer"}],
            },
        },
        "learner": "DT",
        "space": [
            {"name": "min_impurity", "values": [0.0, 0.1]},
            {"name": "min_samples", "values": [2, 12]},
            {"name": "max_depth", "values": [1, 2, 3, 4, 5]},
        ],
        "folds": 4,
        "seed": 3,
    }
    cfg.update(extra or {})
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(cfg))
    return path


def test_run_grid_map(tmp_path):
    pmap = perfmap.run(toy_config(tmp_path))
    assert pmap["evaluated_points"] == 20
    assert len(pmap["entries"]) == 20
    assert pmap["wall_time_seconds"] is None
    top = perfmap.best(pmap)
    assert 0.0 < top["mean"] <= 1.0
    assert all(0.0 < v <= 1.0 for v in perfmap.hp_profile(pmap))


def test_run_is_deterministic(tmp_path):
    cfg = toy_config(tmp_path, {"optimizer": "SGA", "sga": {"population_size": 6, "max_generations": 3}})
    assert perfmap.run(cfg) == perfmap.run(cfg)


def test_hp_and_compare():
    assert perfmap.hp([1.0, 0.92, 0.85], 0.10) == pytest.approx(2 / 3)
    with pytest.raises(perfmap.HpUndefinedError):
        perfmap.hp([-0.2, 0.0], 0.1)


def test_compare_identical_maps(tmp_path):
    pmap = perfmap.run(toy_config(tmp_path))
    assert perfmap.compare(pmap, pmap) == "equivalent"
    svg = perfmap.render_svg(pmap)
    assert svg.startswith("<svg")
    assert perfmap.to_csv(pmap).count("\n") == 21


def test_builtin_spaces():
    dt = perfmap.builtin_space("DT")
    svm = perfmap.builtin_space("SVM")
    assert [d["name"] for d in dt] == ["min_impurity", "min_samples", "max_depth"]
    assert [d["name"] for d in svm] == ["gamma", "kernel", "C"]
    sizes = [len(d["values"]) for d in dt]
    assert sizes[0] * sizes[1] * sizes[2] == 1680
    with pytest.raises(ValueError):
        perfmap.builtin_space("KNN")


def test_config_errors(tmp_path):
    bad = toy_config(tmp_path, {"learner": "KNN"})
    with pytest.raises(perfmap.ConfigError):
        perfmap.run(bad)
    code, _, err = perfmap.cli("run", "--config", bad, "--out", tmp_path / "never.json")
    assert code == 1
    assert "KNN" in err
    assert not (tmp_path / "never.json").exists()


def test_cli_spaces():
    code, out, _ = perfmap.cli("spaces")
    assert code == 0
    assert "1680" in out and "160" in out


@pytest.mark.skipif(not (ROOT / "data" / "manifest.json").exists(), reason="bundled data absent")
def test_bundled_voting_svm_grid():
    pmap = perfmap.run(ROOT / "configs" / "voting_svm_grid.json")
    assert pmap["evaluated_points"] == 160
    assert perfmap.best(pmap)["mean"] >= 0.9
