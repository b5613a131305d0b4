from __future__ import annotations

import json

import numpy as np
import pytest

from indexlab import cli, reports
from indexlab import scenario as scn
from indexlab import topology as tp
from indexlab.errors import InvalidScenario, MissingData


@pytest.fixture(autouse=True)
def cache_env(tmp_path, monkeypatch):
    monkeypatch.setenv("INDEXLAB_CACHE_DIR", str(tmp_path / "cache"))
    return tmp_path / "cache"


def write_scenario(path, **kw):
    data = {"schema_version": 1, "name": "small-winding", "family": {"builtin": "winding"},
            "grid": "8x8", "lattice": "16x16", "n_params": 24}
    data.update(kw)
    path.write_text(json.dumps(data))
    return str(path)


def strip_time(text: str) -> dict:
    d = json.loads(text)
    d.pop("created", None)
    return d


# ---------------------------------------------------------------- scenarios

def test_builtin_defaults():
    sc = scn.load("winding")
    assert (sc.grid.n_t, sc.grid.n_theta, sc.lattice, sc.window, sc.n_params) == (16, 16, (32, 32), 1.0, 40)
    assert sc.content_hash() == scn.load("winding").content_hash()
    assert sc.content_hash() != scn.builtin_scenario("winding", k_s=2).content_hash()


def test_canonical_hash_ignores_key_order(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text('{"schema_version": 1, "family": {"builtin": "dir-plus"}, "grid": "8x8"}')
    b.write_text('{"grid": "8x8", "family": {"builtin": "dir-plus"}, "schema_version": 1}')
    assert scn.load(str(a)).content_hash() == scn.load(str(b)).content_hash()


@pytest.mark.parametrize("data", [
    {"family": {"builtin": "winding"}},  # no schema version
    {"schema_version": 2, "family": {"builtin": "winding"}},
    {"schema_version": 1},
    {"schema_version": 1, "family": {"builtin": "nope"}},
    {"schema_version": 1, "family": {"builtin": "winding", "mass": 2.0}},
    {"schema_version": 1, "family": {"builtin": "winding", "k_theta": 7}},
    {"schema_version": 1, "family": {"builtin": "dir-plus", "mass": 1.0}},
    {"schema_version": 1, "family": {"builtin": "winding"}, "grid": "2x2"},
    {"schema_version": 1, "family": {"builtin": "winding"}, "window": -1},
    {"schema_version": 1, "family": {"builtin": "winding"}, "seed": -3},
    {"schema_version": 1, "family": {"builtin": "winding"}, "colour": "red"},
    {"schema_version": 1, "family": {"realize": {"t0": {"model": "empty"}}}},
    {"schema_version": 1, "family": {"realize": {"t0": {"model": "empty"}, "t1": {"model": "x"}}}},
    {"schema_version": 1, "family": {"inline": {"t0": {"n_theta": 2}, "t1": {}}}},
])
def test_invalid_scenarios(data):
    with pytest.raises(InvalidScenario):
        scn.from_dict(data)


def test_unknown_reference():
    with pytest.raises(InvalidScenario):
        scn.load("no-such-file-or-builtin")


def test_realize_scenario_matches_winding():
    sc = scn.from_dict({"schema_version": 1, "family": {"realize": {
        "t0": {"model": "empty"}, "t1": {"model": "lower-band", "k_theta": 2, "k_s": 1}}}})
    assert tp.topological_index(sc.build(), 16, 16) == tp.topological_index(tp.winding_family(1.0, 2, 1), 16, 16)


def test_inline_scenario_interpolates_lattice_values():
    a, b = 4, 4
    th = 2 * np.pi * np.arange(a) / a
    s = 2 * np.pi * np.arange(b) / b
    vals = np.zeros((a, b, 2, 2), complex)
    vals[..., 0, 0] = 1 + 0.5 * np.cos(th)[:, None]
    vals[..., 1, 1] = -1 + 0.0 * s[None, :]
    vals[..., 0, 1] = 0.3 * np.exp(1j * s)[None, :]
    vals[..., 1, 0] = np.conj(vals[..., 0, 1])
    field = {"n_theta": a, "n_s": b, "real": vals.real.tolist(), "imag": vals.imag.tolist()}
    eye = np.broadcast_to(np.eye(2), (a, b, 2, 2))
    plus = {"n_theta": a, "n_s": b, "real": eye.tolist(), "imag": np.zeros_like(eye).tolist()}
    sc = scn.from_dict({"schema_version": 1, "family": {"inline": {"t0": plus, "t1": field}}})
    T = sc.build().component("t1").T
    assert np.allclose(T(th[1], s[2]), vals[1, 2], atol=1e-12)
    mid = T(0.3, 1.1)
    assert np.allclose(mid, mid.conj().T)
    assert np.isclose(mid[0, 1], 0.3 * np.exp(1.1j))
    bad = dict(field, imag=(vals.imag + 0.1).tolist())
    with pytest.raises(InvalidScenario):
        scn.from_dict({"schema_version": 1, "family": {"inline": {"t0": plus, "t1": bad}}})


# ---------------------------------------------------------------- reports

def test_eigen_csv_round_trip():
    rows = [(0.0, [-0.5, 0.25]), (0.5, [0.125])]
    text = reports.eigen_csv(rows)
    assert text.splitlines()[0] == "s,lambda_1,lambda_2"
    back = reports.read_eigen_csv(text)
    assert back[0][1] == [-0.5, 0.25] and np.isclose(back[1][0], np.pi)
    with pytest.raises(MissingData):
        reports.read_eigen_csv("")


def test_svg_is_deterministic():
    rows = [(0.1 * k, [np.sin(k) * 0.5]) for k in range(10)]
    assert reports.flow_svg(rows, 1.0, [0.3], "t") == reports.flow_svg(rows, 1.0, [0.3], "t")
    assert reports.flow_svg(rows, 1.0, [0.3], "t").startswith("<svg")
    flux = reports.read_flux_csv(reports.flux_csv(tp.flux_rows(tp.winding_family(), 8, 8)))
    assert reports.flux_svg(flux) == reports.flux_svg(flux)


def test_dumps_is_canonical():
    assert reports.dumps({"b": 1, "a": [1.5, 2]}) == reports.dumps({"a": [1.5, 2], "b": 1})


# ---------------------------------------------------------------- verbs and exit codes

def test_verify_match_and_cache_hit(tmp_path, capsys, cache_env):
    ref = write_scenario(tmp_path / "w.json")
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert cli.main(["verify", "--scenario", ref, "--out", str(out1)]) == cli.EXIT_OK
    rec = json.loads(capsys.readouterr().out)
    assert rec["status"] == "MATCH"
    assert rec["ind_t"]["total"] == rec["ind_a"] == rec["cayley_flow"] == -1
    assert rec["flow"]["whole_spectrum"] == 0
    assert len(list(cache_env.iterdir())) == 1
    assert cli.main(["verify", "--scenario", ref, "--out", str(out2)]) == cli.EXIT_OK
    for name in ("record.json", "eigenvalues.csv", "flux.csv", "flow.svg", "flux.svg"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_runs_are_deterministic_without_cache(tmp_path, capsys):
    ref = write_scenario(tmp_path / "w.json")
    texts = []
    for out in ("a", "b"):
        assert cli.main(["sf", "--scenario", ref, "--no-cache", "--out", str(tmp_path / out)]) == 0
        texts.append(capsys.readouterr().out)
    assert strip_time(texts[0]) == strip_time(texts[1])
    assert (tmp_path / "a" / "eigenvalues.csv").read_bytes() == (tmp_path / "b" / "eigenvalues.csv").read_bytes()
    assert (tmp_path / "a" / "flow.svg").read_bytes() == (tmp_path / "b" / "flow.svg").read_bytes()


def test_overrides_change_the_key(tmp_path, capsys, cache_env):
    ref = write_scenario(tmp_path / "w.json")
    cli.main(["chern", "--scenario", ref])
    cli.main(["chern", "--scenario", ref, "--lattice", "8x8"])
    assert len(list(cache_env.iterdir())) == 2


def test_plot_reproduces_svgs(tmp_path, capsys):
    ref = write_scenario(tmp_path / "w.json")
    run = tmp_path / "run"
    assert cli.main(["chern", "--scenario", ref, "--out", str(run)]) == 0
    original = (run / "flux.svg").read_bytes()
    assert cli.main(["plot", str(run), "--out", str(tmp_path / "re")]) == 0
    assert (tmp_path / "re" / "flux.svg").read_bytes() == original
    (tmp_path / "empty").mkdir()
    assert cli.main(["plot", str(tmp_path / "empty")]) == cli.EXIT_INVALID
    assert cli.main(["plot", str(tmp_path / "missing")]) == cli.EXIT_INVALID


def test_gap_verb(tmp_path, capsys):
    ref = write_scenario(tmp_path / "d.json", family={"builtin": "dir-minus"})
    assert cli.main(["gap", "--scenario", ref]) == 0
    assert json.loads(capsys.readouterr().out)["gap"] > 1.0


def test_invalid_inputs_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["verify", "--scenario", str(bad)]) == cli.EXIT_INVALID
    assert cli.main(["verify", "--scenario", "nothing-here"]) == cli.EXIT_INVALID
    ref = write_scenario(tmp_path / "w.json")
    assert cli.main(["sf", "--scenario", ref, "--grid", "8"]) == cli.EXIT_INVALID
    assert cli.main(["properties", "--suites", "bogus"]) == cli.EXIT_INVALID
    with pytest.raises(SystemExit):
        cli.main(["sf", "--scenario", ref, "--seed", "-1"])


def test_numerical_failure_exit_4(tmp_path, capsys):
    # k_theta = 4 is a valid family but under-resolved on an 8x8 grid
    ref = write_scenario(tmp_path / "w.json", family={"builtin": "winding", "k_theta": 4})
    assert cli.main(["sf", "--scenario", ref]) == cli.EXIT_NUMERICAL
    assert "NyquistViolation" in capsys.readouterr().err


def test_ktheory_verb(tmp_path, capsys):
    assert cli.main(["ktheory", "--n-max", "4", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "ktheory.json").read_text())
    assert rep["all_passed"] and not rep["errors"]
    assert cli.main(["ktheory", "--n-max", "6"]) == cli.EXIT_INVALID


def test_properties_verb(tmp_path, capsys):
    args = ["properties", "--seed", "7", "--suites", "round_trip,ring_map"]
    assert cli.main(args) == 0
    first = capsys.readouterr().out
    assert cli.main(args) == 0
    assert capsys.readouterr().out == first
    assert set(json.loads(first)["suites"]) == {"round_trip", "ring_map"}
