import json
import os

import numpy as np
import pytest

from wavess.cli import (
    ExperimentSpec,
    SpecError,
    child_seed,
    load_result_csv,
    load_spec,
    main,
    parallel_map,
)


def _write_spec(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_child_seed_is_stable_and_spread():
    a = child_seed(1, 1024, 0)
    assert a == child_seed(1, 1024, 0)
    assert a != child_seed(1, 1024, 1)
    assert a != child_seed(1, 2048, 0)
    assert a != child_seed(2, 1024, 0)
    assert 0 <= a < 2 ** 64


def test_parallel_map_order_independent():
    def sq(k):
        return k, k * k

    keys = list(range(20))
    assert parallel_map(sq, keys, 1) == parallel_map(sq, keys, 4)
    assert parallel_map(sq, keys, 4)[7] == 49


def test_load_spec_defaults_echoed(tmp_path):
    path = _write_spec(tmp_path, "s.json", {"mode": "rates"})
    spec = load_spec(path)
    assert spec.replicates == 4
    assert spec.family == "haar"
    echoed = json.loads(spec.canonical_json())
    assert echoed["prior"]["weight_lambda"] == 10.0
    assert echoed["gibbs"]["iters"] == 1000


def test_load_spec_rejects_unknown_keys(tmp_path):
    path = _write_spec(tmp_path, "s.json", {"mode": "rates", "bogus": 1})
    with pytest.raises(SpecError):
        load_spec(path)
    path = _write_spec(tmp_path, "s2.json",
                       {"mode": "rates", "prior": {"nope": 2}})
    with pytest.raises(SpecError):
        load_spec(path)


def test_load_spec_rejects_bad_values(tmp_path):
    with pytest.raises(SpecError):
        load_spec(_write_spec(tmp_path, "a.json", {"mode": "warp"}))
    with pytest.raises(SpecError):
        load_spec(_write_spec(tmp_path, "b.json",
                              {"mode": "rates", "n_grid": [1024, 512]}))
    with pytest.raises(SpecError):
        load_spec(_write_spec(tmp_path, "c.json",
                              {"mode": "rates", "family": "haar",
                               "r": [1]}))
    bad = tmp_path / "d.json"
    bad.write_text("{not json")
    with pytest.raises(SpecError):
        load_spec(str(bad))


def test_spec_hash_stable(tmp_path):
    p1 = _write_spec(tmp_path, "s1.json", {"mode": "rates", "seed": 3})
    p2 = _write_spec(tmp_path, "s2.json", {"seed": 3, "mode": "rates"})
    assert load_spec(p1).spec_hash() == load_spec(p2).spec_hash()
    p3 = _write_spec(tmp_path, "s3.json", {"mode": "rates", "seed": 4})
    assert load_spec(p1).spec_hash() != load_spec(p3).spec_hash()


def test_main_exit_codes(tmp_path):
    # spec error -> 2
    bad = _write_spec(tmp_path, "bad.json", {"mode": "rates", "zzz": 1})
    assert main(["rates", "--spec", bad]) == 2
    # check-mode success -> 0
    ok = _write_spec(tmp_path, "ok.json",
                     {"mode": "basis-check", "family": "haar",
                      "base_level": [1]})
    out = tmp_path / "out"
    assert main(["basis-check", "--spec", ok, "--out", str(out)]) == 0
    header, rows, h = load_result_csv(str(out / "results.csv"))
    assert header == ["check", "deviation"]
    assert float(rows[0][1]) < 1e-9


def test_result_csv_hash_validation(tmp_path):
    ok = _write_spec(tmp_path, "ok.json",
                     {"mode": "basis-check", "family": "haar",
                      "base_level": [1]})
    out = tmp_path / "out"
    main(["basis-check", "--spec", ok, "--out", str(out)])
    spec = load_spec(ok)
    load_result_csv(str(out / "results.csv"), spec.spec_hash())
    with pytest.raises(ValueError):
        load_result_csv(str(out / "results.csv"), "0000000000000000")


def test_rates_mode_outputs_and_determinism(tmp_path):
    spec = _write_spec(tmp_path, "r.json", {
        "mode": "rates", "family": "haar", "base_level": [1],
        "n_grid": [256, 512], "replicates": 2, "seed": 9,
        "gibbs": {"iters": 60, "burnin": 20},
    })
    outs = []
    for threads, tag in ((1, "t1"), (3, "t3")):
        out = tmp_path / tag
        assert main(["rates", "--spec", spec, "--out", str(out),
                     "--threads", str(threads)]) == 0
        outs.append((out / "results.csv").read_bytes())
        assert (out / "aggregate.csv").exists()
        assert (out / "summary.json").exists()
        assert (out / "rates.svg").exists()
    assert outs[0] == outs[1]


def test_seed_override_changes_results(tmp_path):
    spec = _write_spec(tmp_path, "r.json", {
        "mode": "rates", "family": "haar", "base_level": [1],
        "n_grid": [256], "replicates": 1, "seed": 9,
        "gibbs": {"iters": 30, "burnin": 10},
    })
    o1, o2 = tmp_path / "a", tmp_path / "b"
    main(["rates", "--spec", spec, "--out", str(o1)])
    main(["rates", "--spec", spec, "--out", str(o2), "--seed", "10"])
    assert ((o1 / "results.csv").read_bytes()
            != (o2 / "results.csv").read_bytes())


def test_threads_env_fallback(tmp_path, monkeypatch):
    spec = _write_spec(tmp_path, "r.json", {
        "mode": "rates", "family": "haar", "base_level": [1],
        "n_grid": [256], "replicates": 2, "seed": 1,
        "gibbs": {"iters": 30, "burnin": 10},
    })
    monkeypatch.setenv("WAVESS_THREADS", "2")
    out = tmp_path / "env"
    assert main(["rates", "--spec", spec, "--out", str(out)]) == 0
    monkeypatch.delenv("WAVESS_THREADS")
    out2 = tmp_path / "noenv"
    assert main(["rates", "--spec", spec, "--out", str(out2)]) == 0
    assert ((out / "results.csv").read_bytes()
            == (out2 / "results.csv").read_bytes())


def test_qwn_check_mode(tmp_path):
    spec = _write_spec(tmp_path, "q.json", {"mode": "qwn-check", "seed": 7})
    out = tmp_path / "out"
    assert main(["qwn-check", "--spec", spec, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["max_gap"] < 1e-6


def test_events_mode(tmp_path):
    spec = _write_spec(tmp_path, "e.json", {
        "mode": "events", "family": "haar", "base_level": [1],
        "n_grid": [256, 512], "replicates": 2, "seed": 2,
        "gibbs": {"iters": 60, "burnin": 20},
    })
    out = tmp_path / "out"
    assert main(["events", "--spec", spec, "--out", str(out)]) == 0
    header, rows, _ = load_result_csv(str(out / "results.csv"))
    assert header == ["n", "event", "frequency"]
    assert len(rows) == 6
    assert (out / "events.svg").exists()


def test_tests_mode(tmp_path):
    spec = _write_spec(tmp_path, "t.json", {
        "mode": "tests", "family": "haar", "base_level": [1],
        "n_grid": [256, 512], "replicates": 10, "seed": 3, "sigma0": 1.0,
    })
    out = tmp_path / "out"
    assert main(["tests", "--spec", spec, "--out", str(out)]) == 0
    assert (out / "type2.csv").exists()
