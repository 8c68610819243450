import json
import math

import numpy as np
import pytest

import fibsh.cache as cache
from fibsh.cli import main
from fibsh.grids import gen_fibonacci
from fibsh.shapes import make_star_spec, sample_cloud


def run(tmp_path, *argv):
    return main(["--cache-dir", str(tmp_path / "cache"), *argv])


def test_grid_command(tmp_path):
    out = tmp_path / "g.json"
    assert run(tmp_path, "grid", "--kind", "fibonacci", "--n", "100",
               "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["kind"] == "fibonacci"
    assert len(doc["points"]) == 100


def test_grid_missing_param_exits_one(tmp_path, capsys):
    rc = run(tmp_path, "grid", "--kind", "fibonacci",
             "--out", str(tmp_path / "g.json"))
    assert rc == 1


def test_weights_sht_isht_pipeline(tmp_path):
    g = tmp_path / "g.json"
    w = tmp_path / "w.json"
    f = tmp_path / "f.json"
    c = tmp_path / "c.json"
    f2 = tmp_path / "f2.json"
    assert run(tmp_path, "grid", "--kind", "fibonacci", "--n", "68",
               "--out", str(g)) == 0
    assert run(tmp_path, "weights", "--grid", str(g), "--b", "4",
               "--method", "analytic", "--out", str(w)) == 0
    wdoc = json.loads(w.read_text())
    assert wdoc["residual"] <= 1e-10
    assert sum(wdoc["weights"]) == pytest.approx(math.sqrt(2), abs=1e-10)

    grid = gen_fibonacci(68)
    field = {"grid": json.loads(g.read_text()),
             "values": [1.0] * grid.n_points}
    f.write_text(json.dumps(field))
    assert run(tmp_path, "sht", "--field", str(f), "--weights", str(w),
               "--b", "4", "--out", str(c)) == 0
    cdoc = json.loads(c.read_text())
    assert cdoc["bandwidth"] == 4
    assert cdoc["values"][0][0] == pytest.approx(math.sqrt(4 * math.pi), abs=1e-9)

    assert run(tmp_path, "isht", "--coeffs", str(c), "--targets", str(g),
               "--out", str(f2)) == 0
    back = json.loads(f2.read_text())
    assert np.allclose(back["values"], 1.0, atol=1e-9)


def test_solver_failure_exit_code(tmp_path):
    bad = {"kind": "fibonacci", "params": {"n": 17},
           "points": [[1.0, 2.0]] * 17}
    g = tmp_path / "bad.json"
    g.write_text(json.dumps(bad))
    rc = run(tmp_path, "weights", "--grid", str(g), "--b", "2",
             "--method", "analytic", "--out", str(tmp_path / "w.json"))
    assert rc == 3


def test_bench_roundtrip_csv(tmp_path):
    out = tmp_path / "bench.csv"
    rc = run(tmp_path, "bench", "roundtrip", "--b", "4", "--grids", "fib,equi",
             "--trials", "3", "--seed", "1", "--out", str(out))
    assert rc == 0
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "grid,method,trial,rmse,mae"
    # fib + equi + the fibonacci-equal baseline, 3 trials each
    assert len(lines) == 1 + 3 * 3


def test_suite_fig4_deterministic_and_asserted(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert run(tmp_path, "suite", "fig4", "--b", "4", "--assert",
               "--out", str(out1)) == 0
    assert run(tmp_path, "suite", "fig4", "--b", "4", "--assert",
               "--out", str(out2)) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_suite_json_format(tmp_path):
    out = tmp_path / "fig4.json"
    assert run(tmp_path, "suite", "fig4", "--b", "2", "--format", "json",
               "--out", str(out)) == 0
    doc = json.loads(out.read_text())
    assert doc["suite"] == "fig4"
    assert doc["gates"][0]["passed"] is True
    assert "config" in doc and doc["config"]["b"] == 2


def test_assert_flag_propagates_gate_failure(tmp_path, monkeypatch):
    from fibsh import experiments

    def fake_fig4(b=8, cache_dir=None, use_cache=True, workers=1):
        return experiments.SuiteResult(
            "fig4", {"b": b}, ["x"], [{"x": 1}], {},
            gates=[("fig4.forced", False, "forced failure for the exit-code test")])

    monkeypatch.setitem(experiments.SUITES, "fig4", fake_fig4)
    monkeypatch.setattr("fibsh.cli.SUITES", experiments.SUITES)
    rc = run(tmp_path, "suite", "fig4", "--assert", "--out",
             str(tmp_path / "x.csv"))
    assert rc == 2
    assert run(tmp_path, "suite", "fig4", "--out", str(tmp_path / "y.csv")) == 0


def test_reconstruct_and_descriptor_commands(tmp_path, rng):
    spec = make_star_spec("smooth", rng, bandwidth=8)
    cloud = sample_cloud(spec, 4000, seed=1)
    xyz = tmp_path / "cloud.xyz"
    np.savetxt(xyz, cloud.points, fmt="%.10g")
    obj = tmp_path / "mesh.obj"
    report = tmp_path / "row.csv"
    dev = tmp_path / "dev.txt"
    rc = run(tmp_path, "reconstruct", "--cloud", str(xyz), "--grid", "fib",
             "--b", "8", "--mesh-frequency", "16", "--out", str(obj),
             "--report", str(report), "--deviation-out", str(dev))
    assert rc == 0
    header = report.read_text().splitlines()[0]
    assert header == "shape_id,grid,b,rmse,mae,ve,hausdorff_max,clamped_fraction"
    obj_lines = obj.read_text().splitlines()
    n_verts = sum(1 for ln in obj_lines if ln.startswith("v "))
    assert n_verts == 10 * 16 * 16 + 2
    assert len(dev.read_text().splitlines()) == n_verts

    d = tmp_path / "d.json"
    rc = run(tmp_path, "descriptor", "--cloud", str(xyz), "--shells", "4",
             "--b", "8", "--grid", "fib", "--out", str(d))
    assert rc == 0
    doc = json.loads(d.read_text())
    assert doc["shells"] == 4 and doc["bandwidth"] == 8
    assert len(doc["energies"]) == 32


def test_cache_hit_identical_bytes(tmp_path, monkeypatch):
    monkeypatch.setenv("FIBSH_CACHE_DIR", str(tmp_path / "envcache"))
    grid = gen_fibonacci(68)
    w1 = cache.cached_analytic_weights(grid, 4)
    path = cache.entry_path(grid, 4)
    first = path.read_bytes()
    w2 = cache.cached_analytic_weights(grid, 4)
    assert path.read_bytes() == first
    assert np.array_equal(w1.weights, w2.weights)
    # different bandwidth gets a distinct entry
    cache.cached_analytic_weights(grid, 2)
    assert len(cache.list_entries()) == 2


def test_cache_corrupt_entry_resolves(tmp_path, monkeypatch):
    monkeypatch.setenv("FIBSH_CACHE_DIR", str(tmp_path / "envcache"))
    grid = gen_fibonacci(68)
    cache.cached_analytic_weights(grid, 4)
    path = cache.entry_path(grid, 4)
    path.write_text("{broken json")
    assert cache.load(path) is None
    w = cache.cached_analytic_weights(grid, 4)
    assert w.residual <= 1e-10
    assert cache.load(path) is not None


def test_cache_disabled_still_deterministic():
    grid = gen_fibonacci(68)
    a = cache.cached_analytic_weights(grid, 4, enabled=False)
    b = cache.cached_analytic_weights(grid, 4, enabled=False)
    assert np.array_equal(a.weights, b.weights)


def test_cache_cli_ls_and_clear(tmp_path, capsys):
    g = tmp_path / "g.json"
    assert run(tmp_path, "grid", "--kind", "fibonacci", "--n", "68",
               "--out", str(g)) == 0
    assert run(tmp_path, "weights", "--grid", str(g), "--b", "2",
               "--method", "analytic", "--out", str(tmp_path / "w.json")) == 0
    capsys.readouterr()
    assert run(tmp_path, "cache", "ls") == 0
    assert "fibonacci(n=68) b=2" in capsys.readouterr().out
    assert run(tmp_path, "cache", "clear") == 0
    capsys.readouterr()
    assert run(tmp_path, "cache", "ls") == 0
    assert "cache is empty" in capsys.readouterr().out


def test_workers_flag_does_not_change_results(tmp_path):
    out1 = tmp_path / "w1.csv"
    out2 = tmp_path / "w2.csv"
    assert main(["--cache-dir", str(tmp_path / "c1"), "--workers", "1",
                 "suite", "fig4", "--b", "4", "--out", str(out1)]) == 0
    assert main(["--cache-dir", str(tmp_path / "c2"), "--workers", "4",
                 "suite", "fig4", "--b", "4", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_invalid_corpus_spec(tmp_path):
    rc = run(tmp_path, "bench", "rotation", "--corpus", "nonsense",
             "--out", str(tmp_path / "x.csv"))
    assert rc == 1
