"""Command line behaviour: verbs, artifacts, exit codes."""

import json

from damtsim.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, main
from damtsim.scenario import CSV_COLUMNS, read_csv


def _write_cfg(tmp_path, name="cfg.json", **over):
    cfg = {"name": "clitest", "method": ["damt", "dflooding"], "vo_count": 3,
           "peers_per_vo": 8, "query_count": 3, "seed": 7}
    cfg.update(over)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    rc = main(["run", "--config", _write_cfg(tmp_path), "--out", str(out)])
    assert rc == EXIT_OK
    assert "wrote 2 rows" in capsys.readouterr().out
    rows = read_csv(str(out))
    assert {r["method"] for r in rows} == {"damt", "dflooding"}


def test_run_reps_offset_rows(tmp_path):
    out = tmp_path / "r.csv"
    rc = main(["run", "--config", _write_cfg(tmp_path, method="damt"),
               "--out", str(out), "--reps", "2"])
    assert rc == EXIT_OK
    rows = read_csv(str(out))
    assert [r["rep"] for r in rows] == [0, 1]
    assert rows[0]["fingerprint"] == rows[1]["fingerprint"]


def test_run_missing_config_is_config_error(tmp_path, capsys):
    rc = main(["run", "--config", str(tmp_path / "nope.json"),
               "--out", str(tmp_path / "r.csv")])
    assert rc == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_bad_usage_is_config_error(capsys):
    assert main(["sweep", "--figure", "fig99", "--out", "/tmp/x.csv"]) == EXIT_CONFIG
    capsys.readouterr()


def test_check_passes_and_fails(tmp_path, capsys):
    out = tmp_path / "r.csv"
    main(["run", "--config", _write_cfg(tmp_path), "--out", str(out)])
    assert main(["check", "--csv", str(out)]) == EXIT_OK
    assert "PASS" in capsys.readouterr().out

    # doctor the damt mean so dflooding comes out slower
    rows = out.read_text().splitlines()
    header = rows[0].split(",")
    mean_i = header.index("mean_ms")
    method_i = header.index("method")
    doctored = [rows[0]]
    for line in rows[1:]:
        cells = line.split(",")
        cells[mean_i] = "0.001" if cells[method_i] == "damt" else "9999.000"
        doctored.append(",".join(cells))
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(doctored) + "\n")
    assert main(["check", "--csv", str(bad)]) == EXIT_CHECK_FAILED
    assert "FAIL" in capsys.readouterr().out


def test_check_rejects_foreign_schema(tmp_path, capsys):
    alien = tmp_path / "alien.csv"
    alien.write_text("whatever,columns\n1,2\n")
    assert main(["check", "--csv", str(alien)]) == EXIT_CONFIG
    capsys.readouterr()


def test_trace_dump_writes_ndjson(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, method="damt", query_count=2)
    out = tmp_path / "t.ndjson"
    assert main(["trace-dump", "--config", cfg, "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    lines = out.read_text().splitlines()
    assert lines
    recs = [json.loads(line) for line in lines]
    assert all({"t", "kind", "category", "n", "src", "dst", "detail"} <= set(r)
               for r in recs)
    times = [r["t"] for r in recs]
    assert times == sorted(times)


def test_trace_dump_rejects_grids(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)  # expands to two points
    rc = main(["trace-dump", "--config", cfg, "--out", str(tmp_path / "t.ndjson")])
    assert rc == EXIT_CONFIG
    capsys.readouterr()


def test_seed_override_changes_rows(tmp_path):
    cfg = _write_cfg(tmp_path, method="damt")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["run", "--config", cfg, "--out", str(a)])
    main(["run", "--config", cfg, "--out", str(b), "--seed", "99"])
    ra, rb = read_csv(str(a)), read_csv(str(b))
    assert ra[0]["seed"] == 7 and rb[0]["seed"] == 99
    assert ra[0]["fingerprint"] != rb[0]["fingerprint"]
