import json
from pathlib import Path

import numpy as np
import pytest

import corrsched as cs
from corrsched import fileio, fixtures
from corrsched.problem import penalty_tables

from specgen import random_spec

FIXDIR = Path(__file__).resolve().parent.parent / "fixtures"


def _specs_equal(a, b):
    if (a.action_sizes, a.event_sizes, a.constraints) != (
        b.action_sizes,
        b.event_sizes,
        b.constraints,
    ):
        return False
    pa = cs.problem.flat_event_probabilities(a.distribution, a.event_sizes)
    pb = cs.problem.flat_event_probabilities(b.distribution, b.event_sizes)
    return np.array_equal(pa, pb) and np.array_equal(penalty_tables(a), penalty_tables(b))


@pytest.mark.parametrize(
    "builder", [fixtures.two_sensor_spec, fixtures.three_sensor_spec, fixtures.counterexample_spec]
)
def test_spec_round_trip(tmp_path, builder):
    spec = builder()
    path = tmp_path / "spec.json"
    fileio.save_spec(spec, path)
    assert _specs_equal(fileio.load_spec(path), spec)


def test_random_spec_round_trip(tmp_path, rng):
    spec = random_spec(rng)
    path = tmp_path / "spec.json"
    fileio.save_spec(spec, path)
    assert _specs_equal(fileio.load_spec(path), spec)


@pytest.mark.parametrize(
    "name,builder",
    [
        ("two_sensor.json", fixtures.two_sensor_spec),
        ("three_sensor.json", fixtures.three_sensor_spec),
        ("counterexample.json", fixtures.counterexample_spec),
    ],
)
def test_shipped_fixture_files_match_builders(name, builder):
    spec = fileio.load_spec(FIXDIR / name)
    assert _specs_equal(spec, builder())
    assert cs.validate_spec(spec).ok


def test_shipped_phases_file():
    spec = fileio.load_spec(FIXDIR / "three_sensor.json")
    phases = fileio.load_phases(FIXDIR / "adaptation_phases.json", spec)
    assert [(p.start, p.end) for p in phases] == [(0, 4000), (4000, 8000), (8000, 12000)]
    built = fixtures.adaptation_phases()
    for got, want in zip(phases, built):
        pa = cs.problem.flat_event_probabilities(got.distribution, spec.event_sizes)
        pb = cs.problem.flat_event_probabilities(want.distribution, spec.event_sizes)
        assert np.allclose(pa, pb, atol=1e-15)


def test_users_field_mismatch_rejected(tmp_path):
    obj = fileio.spec_to_dict(fixtures.two_sensor_spec())
    obj["users"] = 3
    with pytest.raises(ValueError):
        fileio.spec_from_dict(obj)


def test_unknown_penalty_kind_rejected():
    obj = fileio.spec_to_dict(fixtures.two_sensor_spec())
    obj["penalties"][0]["kind"] = "mystery"
    with pytest.raises(ValueError):
        fileio.spec_from_dict(obj)


def test_policy_file(tmp_path, two_sensor):
    spec, strategies = two_sensor
    policy = cs.solve_distributed_lp(spec, strategies)
    path = tmp_path / "policy.json"
    fileio.save_policy(policy, path)
    obj = json.loads(path.read_text())
    assert obj["utility"] == pytest.approx(23 / 48, abs=1e-9)
    assert len(obj["support"]) <= 3
    assert sum(s["theta"] for s in obj["support"]) == pytest.approx(1.0, abs=1e-9)


def test_metrics_file_carries_config(tmp_path, two_sensor):
    spec, strategies = two_sensor
    cfg = cs.SimConfig(
        spec=spec,
        dpp=cs.DppConfig(v=5.0, delay=2, mode="exact"),
        horizon=50,
        seed=1,
        strategies=strategies,
    )
    metrics, _ = cs.run_episode(cfg)
    path = tmp_path / "run.metrics"
    fileio.save_metrics(metrics, path, config={"v": 5.0, "delay": 2})
    loaded = fileio.load_run_config(path)
    assert loaded == {"v": 5.0, "delay": 2}


def test_cli_solve_and_compare(tmp_path, capsys):
    from corrsched.cli import main

    out = tmp_path / "policy.json"
    assert main(["solve", "--spec", str(FIXDIR / "two_sensor.json"), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "utility: 0.479166666667" in text
    assert out.exists()

    assert main(["compare", "--spec", str(FIXDIR / "two_sensor.json")]) == 0
    text = capsys.readouterr().out
    assert "0.444444" in text and "0.479167" in text and "0.500000" in text

    assert main(["counterexample"]) == 0
    text = capsys.readouterr().out
    assert "1.0" in text and "0.5" in text


def test_cli_simulate_and_analyze(tmp_path, capsys):
    from corrsched.cli import main

    prefix = tmp_path / "run"
    rc = main(
        [
            "simulate",
            "--spec", str(FIXDIR / "two_sensor.json"),
            "--v", "50",
            "--delay", "0",
            "--slots", "5000",
            "--seed", "3",
            "--mode", "exact",
            "--stride", "1",
            "--out", str(prefix),
        ]
    )
    assert rc == 0
    capsys.readouterr()
    assert (tmp_path / "run.metrics").exists()
    assert (tmp_path / "run.trace.csv").exists()

    rc = main(
        [
            "analyze",
            "--trace", str(tmp_path / "run.trace.csv"),
            "--spec", str(FIXDIR / "two_sensor.json"),
            "--config", str(tmp_path / "run.metrics"),
        ]
    )
    text = capsys.readouterr().out
    assert rc == 0
    assert "performance bound: ok" in text
    assert "queue bound residual" in text


def test_cli_solve_prune_modes(tmp_path, capsys):
    from corrsched.cli import main

    # pruning on, off, or forced must not change the optimum here
    for prune in ("auto", "off", "force"):
        out = tmp_path / f"policy_{prune}.json"
        rc = main(
            ["solve", "--spec", str(FIXDIR / "two_sensor.json"),
             "--prune", prune, "--out", str(out)]
        )
        text = capsys.readouterr().out
        assert rc == 0
        assert "utility: 0.479166666667" in text
        expected = {"auto": 9, "off": 16, "force": 9}[prune]
        assert f"strategies considered: {expected}" in text


def test_cli_simulate_ensemble_with_phases(tmp_path, capsys):
    from corrsched.cli import main

    spec = fixtures.two_sensor_spec()
    flipped = cs.ProductDistribution((np.array([0.75, 0.25]), np.array([0.5, 0.5])))
    phases = [cs.Phase(0, 300, spec.distribution), cs.Phase(300, 600, flipped)]
    fileio.save_phases(phases, tmp_path / "phases.json")
    prefix = tmp_path / "ens"
    rc = main(
        [
            "simulate",
            "--spec", str(FIXDIR / "two_sensor.json"),
            "--v", "10",
            "--slots", "600",
            "--seed", "2",
            "--runs", "5",
            "--phases", str(tmp_path / "phases.json"),
            "--out", str(prefix),
        ]
    )
    capsys.readouterr()
    assert rc == 0
    assert (tmp_path / "ens.metrics").exists()
    trace = np.loadtxt(tmp_path / "ens.trace.csv", delimiter=",", skiprows=1)
    assert trace.shape == (600, 1 + 1 + 2 + 1)  # t, mean_u, mean_p x2, mean_qnorm
    obj = json.loads((tmp_path / "ens.metrics").read_text())
    assert obj["runs"] == 5
    assert len(obj["per_run_utility"]) == 5


def test_cli_simulate_separable_mode(tmp_path, capsys, rng):
    from corrsched.cli import main
    from specgen import random_separable_spec

    spec = random_separable_spec(rng, anchor="pure")
    fileio.save_spec(spec, tmp_path / "sep.json")
    rc = main(
        [
            "simulate",
            "--spec", str(tmp_path / "sep.json"),
            "--v", "3",
            "--slots", "500",
            "--seed", "9",
            "--mode", "separable",
            "--out", str(tmp_path / "sep"),
        ]
    )
    capsys.readouterr()
    assert rc == 0
    back = cs.read_trace(tmp_path / "sep.trace.csv")
    assert np.all(back.strategy == -1)


def test_read_trace_missing_file(tmp_path):
    with pytest.raises(OSError, match="nothere"):
        cs.read_trace(tmp_path / "nothere.csv")


def test_cli_invalid_spec(tmp_path):
    from corrsched.cli import main

    obj = fileio.spec_to_dict(fixtures.two_sensor_spec())
    obj["distribution"] = {"product": [[0.0, 1.0], [0.5, 0.5]]}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    with pytest.raises(SystemExit):
        main(["solve", "--spec", str(bad), "--out", str(tmp_path / "x.json")])
