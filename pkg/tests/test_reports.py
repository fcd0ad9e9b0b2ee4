import json
import math

import numpy as np
import pytest

from kakeya_lab.errors import PreconditionError
from kakeya_lab.reports import (ExperimentReport, RunManifest, check, dumps, plain,
                                reports_json, summary_csv, write_run)


def test_plain_converts_numpy_and_nonfinite():
    obj = {1: np.int64(3), "a": np.array([1.5, 2.0]), "b": (np.bool_(True), {2, 1}),
           "c": float("inf"), "d": np.float32(0.5)}
    out = plain(obj)
    assert out == {"1": 3, "a": [1.5, 2.0], "b": [True, [1, 2]], "c": "inf", "d": 0.5}
    json.dumps(out, allow_nan=False)


def test_check_relations():
    assert check("x", 1.0, "<=", 1.0).passed
    assert not check("x", 1.1, "<=", 1.0).passed
    assert check("x", 1.1, "<=", 1.0, tol=0.2).passed
    assert check("x", 3, ">=", 2).passed
    assert check("x", 0.3, "==", 0.1 + 0.2, tol=1e-12).passed
    with pytest.raises(PreconditionError):
        check("x", 1, "<", 2)


def test_every_verdict_names_threshold_and_measurement():
    v = check("ratio", 2.5, ">=", 2.0).to_json()
    assert set(v) == {"name", "pass", "measured", "threshold", "relation"}


def _report():
    return ExperimentReport("demo", 7, {"delta": "1/2^4"}, {"n": 3, "vec": [1, 2]},
                            [check("a", 1, "<=", 2), check("b", 5, "<=", 2)])


def test_report_pass_and_lookup():
    r = _report()
    assert not r.passed
    assert r.verdict("a").passed and not r.verdict("b").passed
    assert json.loads(reports_json([r]))["reports"][0]["pass"] is False


def test_summary_csv_rows():
    rows = summary_csv([_report()]).splitlines()
    assert rows[0] == "experiment,kind,name,value,threshold,pass"
    assert "demo,measurement,n,3,," in rows
    assert "demo,verdict,b,5,<= 2,FAIL" in rows
    assert not any(",vec," in r for r in rows)


def test_dumps_is_deterministic():
    a = dumps({"b": 1, "a": np.float64(math.pi)})
    assert a == dumps({"a": math.pi, "b": 1}) and a.endswith("\n")


def test_manifest_round_trip_and_write_run(tmp_path):
    man = RunManifest(argv=["x"], subcommand="tubes", config={}, seed=3, params={"k": 1})
    text = reports_json([_report()])
    run = write_run(tmp_path, man, text, {"profile.csv": "a,b\n"})
    again = write_run(tmp_path, RunManifest(["x"], "tubes", {}, 3, {"k": 1}), text)
    assert run != again and run.name.endswith(man.run_hash())
    assert sorted(p.name for p in run.iterdir()) == ["manifest.json", "profile.csv", "report.json"]
    back = RunManifest.read(run / "manifest.json")
    assert back.params == {"k": 1} and back.seed == 3 and back.outputs == ["profile.csv", "report.json"]
    assert back.run_hash() == man.run_hash()
    assert (run / "report.json").read_text() == text


def test_manifest_errors(tmp_path):
    with pytest.raises(PreconditionError):
        RunManifest.from_json({"argv": []})
    bad = tmp_path / "m.json"
    bad.write_text("{not json")
    with pytest.raises(PreconditionError):
        RunManifest.read(bad)
