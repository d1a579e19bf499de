import json
import subprocess
import sys

import pytest

from swinghedge.cli import main
from swinghedge.pwl import PwlFn
from swinghedge.shortfall import build_risk_stack
from swinghedge.contract import load_contract

SPEC = {
    "model": {"S0": "1", "a": "-1/2", "b": "1", "p": "1/2", "N": 2},
    "claims": [
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "constant", "value": "1/10"}},
        {"exercise": {"kind": "call", "strike": "1"},
         "penalty": {"kind": "infinite-proxy"}},
    ],
}


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "contract.json"
    path.write_text(json.dumps(SPEC))
    return str(path)


def test_price_output_shape(spec_file, capsys):
    assert main(["price", spec_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"price", "root_values"}
    assert len(doc["root_values"]) == 2
    assert doc["root_values"][-1] == doc["price"]


def test_runs_are_byte_identical(spec_file, capsys):
    main(["strategies", spec_file])
    first = capsys.readouterr().out
    main(["strategies", spec_file])
    assert capsys.readouterr().out == first
    cmd = [sys.executable, "-m", "swinghedge.cli", "risk", spec_file,
           "--capital", "1/5"]
    runs = {subprocess.run(cmd, capture_output=True).stdout for _ in range(2)}
    assert len(runs) == 1


def test_decimal_adds_float_rendering(spec_file, capsys):
    from fractions import Fraction

    main(["price", spec_file, "--decimal"])
    doc = json.loads(capsys.readouterr().out)
    assert set(doc["price"]) == {"exact", "decimal"}
    assert doc["price"]["decimal"] == float(Fraction(doc["price"]["exact"]))


def test_risk_and_curve_round_trip(spec_file, capsys):
    main(["risk-curve", spec_file])
    doc = json.loads(capsys.readouterr().out)
    curve = build_risk_stack(load_contract(spec_file)).curve()
    assert PwlFn.from_wire(doc["wire"]) == curve
    assert main(["risk", spec_file, "--capital", doc["breakpoints"][0]["capital"]]) == 0
    risk_doc = json.loads(capsys.readouterr().out)
    assert risk_doc["risk"] == doc["breakpoints"][0]["risk"]


def test_curve_csv_written(spec_file, tmp_path, capsys):
    out = tmp_path / "curve.csv"
    assert main(["risk-curve", spec_file, "--csv", str(out)]) == 0
    capsys.readouterr()
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "capital,risk"
    assert len(lines) > 2


def test_hedge_simulate(spec_file, capsys):
    assert main(["hedge-simulate", spec_file, "--path", "ud"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["wealth_after"]) == 3
    assert doc["events"]  # both claims settle somewhere


def test_exit_codes(spec_file, tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert main(["price", missing]) == 1
    assert main(["hedge-simulate", spec_file, "--path", "xyz"]) == 1
    assert main(["risk", spec_file, "--capital", "-1"]) == 1
    capsys.readouterr()
    with pytest.raises(SystemExit):
        main(["risk", spec_file])  # argparse insists on --capital


def test_verify_passes_on_bundled_contracts(capsys):
    assert main(["verify"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["ok"] is True
    assert set(doc["contracts"]) == {
        "american_call_proxy",
        "one_right_small_penalty",
        "two_rights_uncancellable",
    }
    for entry in doc["contracts"].values():
        assert all(entry["checks"].values())
