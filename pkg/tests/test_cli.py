import json
import os

import pytest

from kakeya_lab.cli import main, parse_bytes, parse_delta
from kakeya_lab.errors import PreconditionError
from kakeya_lab.seeding import SEED_ENV


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def reports(out):
    return {r["experiment"]: r for r in json.loads(out)["reports"]}


def test_parse_delta():
    assert parse_delta("1/2^8") == (8, 2 ** -8)
    assert parse_delta("1/256") == (8, 2 ** -8)
    assert parse_delta("2^-3") == (3, 0.125)
    for bad in ("1/3", "0.01", "1/2^2", "1/2^11"):
        with pytest.raises(PreconditionError):
            parse_delta(bad)


def test_parse_bytes():
    assert parse_bytes("4G") == 4 << 30
    assert parse_bytes("512MiB") == 512 << 20
    assert parse_bytes(1000) == 1000
    with pytest.raises(PreconditionError):
        parse_bytes("lots")


def test_sl2_ring_not_prime(capsys, tmp_path):
    code, _, err = run(capsys, "sl2-ring", "--p", "4", "--out", str(tmp_path))
    assert code == 2 and "prime" in err


def test_sl2_ring_p2_all(capsys, tmp_path):
    code, out, _ = run(capsys, "sl2-ring", "--p", "2", "--out", str(tmp_path))
    m = reports(out)["sl2-ring"]["measurements"]
    assert code == 0 and m["X"] == 32 and m["L"] == 12


def test_sl2_ring_union_line(capsys, tmp_path):
    code, out, _ = run(capsys, "sl2-ring", "--p", "3", "--checks", "union", "--no-record")
    assert code == 0
    assert reports(out)["sl2-ring"]["measurements"]["union"] == 216


def test_sl2_ring_p3_reports_triangle_failure(capsys, tmp_path):
    # the triangle axiom has a witness at p = 3, so the verdict exit is 1
    code, out, _ = run(capsys, "sl2-ring", "--p", "3", "--out", str(tmp_path))
    r = reports(out)["sl2-ring"]
    assert r["measurements"]["X"] == 243
    failed = [v["name"] for v in r["verdicts"] if not v["pass"]]
    assert code == 1 and failed == ["triangle_unique_plane"]


def test_sl2_ring_plane_refusal(capsys):
    code, _, err = run(capsys, "sl2-ring", "--p", "11", "--no-record")
    assert code == 3 and "plane" in err


def test_regulus_canonical(capsys, tmp_path):
    code, out, _ = run(capsys, "regulus", "--canonical", "--out", str(tmp_path))
    r = reports(out)["regulus"]
    q = r["measurements"]["per_record"][0]["quadric"]
    assert code == 0
    assert q["xy"] == pytest.approx(1) and q["xz"] == pytest.approx(-1)
    assert q["yz"] == pytest.approx(-1) and q["z"] == pytest.approx(1)
    assert all(abs(q[k]) < 1e-10 for k in q if k not in ("xy", "xz", "yz", "z"))


def test_regulus_coplanar_is_flagged_data(capsys, tmp_path):
    f = tmp_path / "lines.txt"
    f.write_text("# x axis, y axis, a skew line\n"
                 "0 0 0 1 0 0  0 0 0 0 1 0  0 0 1 1 1 0\n")
    code, out, _ = run(capsys, "regulus", "--lines", str(f), "--no-record")
    rec = reports(out)["regulus"]["measurements"]["per_record"][0]
    assert code == 0 and "coplanar_12" in rec["flags"] and rec["source"] == "line 2"


def test_regulus_parse_error_names_line(capsys, tmp_path):
    f = tmp_path / "lines.txt"
    f.write_text("0 0 0 1 0 0 0 1 0 0 1 1 1 0 0 0 1 1\n1 2 3\n")
    code, _, err = run(capsys, "regulus", "--lines", str(f), "--no-record")
    assert code == 2 and ":2:" in err


def test_regulus_generated_corpus(capsys, tmp_path):
    code, out, _ = run(capsys, "regulus", "--generate", "20", "--seed", "1", "--out", str(tmp_path))
    m = reports(out)["regulus"]["measurements"]
    assert code == 0 and m["records"] == 20 and m["max_identity_residual"] <= 1e-8
    (run_dir,) = tmp_path.iterdir()
    assert (run_dir / "triples.txt").exists()


def test_tubes_missing_delta(capsys):
    code, _, err = run(capsys, "tubes", "--family", "dirsep", "--no-record")
    assert code == 2 and "delta" in err


def test_tubes_non_dyadic_delta(capsys):
    assert run(capsys, "tubes", "--delta", "1/100", "--no-record")[0] == 2


def test_tubes_resource_refusal(capsys, tmp_path):
    code, _, err = run(capsys, "tubes", "--family", "dirsep", "--delta", "1/2^10",
                       "--max-memory", "1M", "--out", str(tmp_path))
    assert code == 3 and "budget" in err
    assert not tmp_path.exists() or not any(tmp_path.iterdir())


def test_dry_run_prints_estimate(capsys):
    code, out, _ = run(capsys, "tubes", "--family", "dirsep", "--delta", "1/2^10",
                       "--max-memory", "1M", "--dry-run")
    est = json.loads(out)["estimate"]
    assert code == 0 and est["fits"] is False and est["memory_bytes"] > 1 << 20


def test_tubes_wolff_dirsep(capsys, tmp_path):
    code, out, _ = run(capsys, "tubes", "--family", "dirsep", "--delta", "1/16",
                       "--experiments", "wolff", "--wolff-samples", "500", "--out", str(tmp_path))
    v = reports(out)["tubes/wolff"]["verdicts"][0]
    assert code == 0 and v["pass"] and v["threshold"] == 1.5


def test_tubes_profile_writes_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "tubes", "--family", "sl2", "--delta", "1/32",
                       "--experiments", "profile", "--out", str(tmp_path))
    (run_dir,) = tmp_path.iterdir()
    csvs = [p.name for p in run_dir.glob("*.csv")]
    assert csvs and code in (0, 1)
    assert "tubes/profile" in reports(out)


def test_format_csv(capsys):
    code, out, _ = run(capsys, "sl2-ring", "--p", "2", "--checks", "X", "--format", "csv", "--no-record")
    assert code == 0
    assert out.startswith("experiment,kind,name,value,threshold,pass")
    assert "sl2-ring,verdict,cardinality_X,32,== 32,pass" in out


def test_seed_precedence(capsys, monkeypatch, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 11}))
    args = ("regulus", "--generate", "1", "--no-record", "--config", str(cfg))
    seed = lambda out: reports(out)["regulus"]["seed"]
    assert seed(run(capsys, *args)[1]) == 11
    monkeypatch.setenv(SEED_ENV, "5")
    assert seed(run(capsys, *args)[1]) == 5
    assert seed(run(capsys, *args, "--seed", "2")[1]) == 2
    monkeypatch.setenv(SEED_ENV, "x")
    assert run(capsys, *args)[0] == 2


def test_config_section_merges_under_flags(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"sl2-ring": {"p": 2, "checks": "X"}}))
    code, out, _ = run(capsys, "sl2-ring", "--config", str(cfg), "--no-record")
    assert code == 0 and reports(out)["sl2-ring"]["params"] == {"p": 2, "checks": ["X"]}
    code, out, _ = run(capsys, "sl2-ring", "--config", str(cfg), "--checks", "L", "--no-record")
    assert reports(out)["sl2-ring"]["params"]["checks"] == ["L"]


def test_incidence_empty_points(capsys, tmp_path):
    pts, cur = tmp_path / "p.csv", tmp_path / "c.csv"
    pts.write_text("")
    cur.write_text("-1,0,0,1,0,1\n")
    code, out, _ = run(capsys, "incidence", "--points", str(pts), "--curves", str(cur),
                       "--r", "0.01", "--oracle", "--no-record")
    m = reports(out)["incidence"]["measurements"]
    assert code == 0 and m["incidences_brute"] == 0 and m["incidences_partition"] == 0


def test_incidence_bad_file(capsys, tmp_path):
    pts, cur = tmp_path / "p.csv", tmp_path / "c.csv"
    pts.write_text("0.1,abc\n")
    cur.write_text("-1,0,0,1,0,1\n")
    code, _, _ = run(capsys, "incidence", "--points", str(pts), "--curves", str(cur),
                     "--r", "0.01", "--no-record")
    assert code == 2


def test_incidence_oracle_on_files(capsys, tmp_path):
    import numpy as np
    rng = np.random.default_rng(0)
    th = rng.uniform(0, 2 * np.pi, 60)
    p = np.column_stack([np.cos(th), np.sin(th)]) * (1 + rng.normal(0, 0.01, 60)[:, None])
    (tmp_path / "p.csv").write_text("".join(f"{x!r},{y!r}\n" for x, y in p.tolist()))
    # the unit circle and the ellipse x^2 + 2y^2 = 1, in the order (1, x, y, x^2, xy, y^2)
    (tmp_path / "c.csv").write_text("-1,0,0,1,0,1\n-1,0,0,1,0,2\n")
    code, out, err = run(capsys, "incidence", "--points", str(tmp_path / "p.csv"),
                       "--curves", str(tmp_path / "c.csv"), "--r", "0.02", "--D", "2",
                       "--oracle", "--no-record")
    assert code == 0, err
    r = reports(out)["incidence"]
    assert r["measurements"]["incidences_brute"] == r["measurements"]["incidences_partition"] > 0


def test_replay_is_byte_identical(capsys, tmp_path):
    code, _, _ = run(capsys, "regulus", "--generate", "3", "--seed", "4", "--out", str(tmp_path))
    (run_dir,) = tmp_path.iterdir()
    code, out, _ = run(capsys, "replay", str(run_dir / "manifest.json"))
    assert code == 0 and json.loads(out)["identical"] is True


def test_replay_detects_changed_report(capsys, tmp_path):
    run(capsys, "sl2-ring", "--p", "2", "--checks", "X", "--out", str(tmp_path))
    (run_dir,) = tmp_path.iterdir()
    rep = run_dir / "report.json"
    rep.write_text(rep.read_text().replace('"seed": 0', '"seed": 9'))
    code, out, _ = run(capsys, "replay", str(run_dir / "manifest.json"))
    assert code == 1 and json.loads(out)["identical"] is False


def test_replay_refuses_changed_input(capsys, tmp_path):
    f = tmp_path / "lines.txt"
    f.write_text("0 0 0 1 0 0  0 0 1 0 1 0  0 0 -1 1 1 0\n")
    run(capsys, "regulus", "--lines", str(f), "--out", str(tmp_path / "runs"))
    (run_dir,) = (tmp_path / "runs").iterdir()
    f.write_text(f.read_text() + "\n")
    assert run(capsys, "replay", str(run_dir / "manifest.json"))[0] == 2


def test_help_and_unknown(capsys):
    assert run(capsys, "--help")[0] == 0
    assert run(capsys, "nope")[0] == 2
