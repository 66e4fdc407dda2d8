import csv
import io
import json

import pytest

from nematic_lro.cli import build_parser, main, make_config, run
from nematic_lro.report import payload_bytes, write_atomic


def config(*argv):
    return make_config(build_parser().parse_args(list(argv)))


def test_verify_identities_report(tmp_path):
    out = tmp_path / "ids.json"
    code = main(["verify-identities", "--d", "1", "--L", "4", "--beta", "1", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"config", "version", "header", "checks", "summary", "data"}
    assert doc["summary"]["pass"] and doc["summary"]["n_failed"] == 0
    for check in doc["checks"]:
        assert set(check) >= {"name", "paper_ref", "value", "tolerance", "pass"}
    values = {c["name"]: c["value"] for c in doc["checks"]}
    assert max(v for k, v in values.items() if k != "ground_energy_below_neel") < 1e-8
    assert doc["config"]["tolerances"]["identity"] == 1e-10


@pytest.mark.parametrize(
    "argv",
    [
        ["verify-identities", "--L", "3"],
        ["verify-identities", "--beta", "-1"],
        ["inequalities", "--J1", "0.2"],
        ["correlations", "--tol-override", "nonsense=1"],
        ["correlations", "--tol-override", "margin=abc"],
        ["verify-identities", "--d", "2", "--L", "4"],
        ["irb-table", "--dims", "2..4"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "config error" in capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["loop-mc", "--sweeps", "abc"])
    assert exc.value.code == 2


def test_check_failure_exit_1(capsys):
    # an impossible tolerance makes the identity checks fail
    code = main(["verify-identities", "--tol-override", "identity=0", "--beta", "1"])
    assert code == 1
    assert "FAILED: su2_spin_one" in capsys.readouterr().err


def test_tolerance_override_recorded():
    cfg = config("inequalities", "--tol-override", "margin=1e-6")
    assert cfg["tolerances"]["margin"] == 1e-6


def test_sweeps_accept_scientific():
    cfg = config("loop-mc", "--sweeps", "1e4", "--seeds", "3")
    assert cfg["mc"]["sweeps"] == 10000 and cfg["mc"]["seeds"] == [0, 1, 2]
    cfg = config("loop-mc", "--seed-list", "5,7")
    assert cfg["mc"]["seeds"] == [5, 7]


def test_irb_table_csv(capsys):
    code = main(["irb-table", "--dims", "3..6", "--format", "csv"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["d"] for r in rows] == ["3", "4", "5", "6"]
    assert set(rows[0]) >= {"d", "I_d", "err", "bound", "positive"}
    first = next(r["d"] for r in rows if r["positive"] == "True")
    assert first == "6"


def test_irb_table_without_positive_row_fails():
    rep, _, _ = run(config("irb-table", "--dims", "3..4"))
    assert "threshold_dimension" in rep.failed


def test_loop_mc_payload_reproducible():
    cfg = config("loop-mc", "--beta", "0.5", "--sweeps", "2000", "--seeds", "2")
    _, _, a = run(cfg, threads=1, timestamp="t0")
    _, _, b = run(cfg, threads=2, timestamp="t1")
    assert a != b
    assert payload_bytes(a) == payload_bytes(b)
    doc = json.loads(a)
    assert doc["data"]["time_scale"] == 2.0
    assert {c["name"] for c in doc["checks"]} == {"z_rho[beta=0.5]", "z_cross[beta=0.5]", "z_energy[beta=0.5]"}


def test_correlations_and_j1_scan():
    rep, rows, _ = run(config("correlations", "--beta", "1", "2"))
    assert not rep.failed and len(rows) == 8
    rep, rows, _ = run(config("j1-scan", "--J1", "-0.05", "-0.1"))
    assert not rep.failed
    zero = [r for r in rows if r["J1"] == 0.0]
    assert zero and zero[0]["shift"] == 0.0


def test_inequalities_command():
    rep, rows, _ = run(config("inequalities", "--draws", "10", "--J1", "0", "-0.05", "--beta", "1"))
    assert not rep.failed and len(rows) == 2


def test_dimer_lattice_option():
    rep, _, _ = run(config("loop-mc", "--lattice", "dimer", "--beta", "1", "--sweeps", "4000"))
    assert not rep.failed


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "sub" / "r.json"
    write_atomic(target, "first")
    write_atomic(target, "second")
    assert target.read_text() == "second"
    assert [p.name for p in target.parent.iterdir()] == ["r.json"]
