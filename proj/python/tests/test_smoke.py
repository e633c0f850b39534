import json
import os
from pathlib import Path

import pytest

import farkas

DATA = Path(os.environ.get("FARKAS_TEST_DATA", Path(__file__).resolve().parents[2] / "tests" / "data"))


def read(name):
    return (DATA / name).read_text()


def test_fig2_forall_or_holds():
    res = farkas.certify(read("fig2.mdp"), read("fig2_forall_or.json"))
    assert res.holds
    assert res.variant == "forall-or"
    cert = json.loads(res.certificate)
    assert cert["queryEcho"]["quantifier"] == "forall"


def test_violated_query_on_m1():
    query = {
        "quantifier": "exists",
        "connective": "and",
        "predicates": [{"kind": "reach", "target": "t", "op": ">=", "bound": "0.8"}],
    }
    res = farkas.certify(read("m1.mdp"), json.dumps(query))
    assert not res.holds


def test_witness_subsystem_sizes():
    quotient = farkas.witness_subsystem(read("fig2.mdp"), read("fig2_forall_or.json"))
    assert len(quotient["kept"]) == 5
    assert quotient["total"] == 7
    assert "mec:s3|0|1" not in quotient["kept"]
    original = farkas.witness_subsystem(read("fig2.mdp"), read("fig2_forall_or.json"), original=True)
    assert sorted(original["kept"]) == ["s0", "s1", "s2"]


def test_exit_rates_reach_target_distribution():
    P = [[0.0, 1.0], [0.5, 0.5]]
    delta = [1.0, 0.0]
    mu = [0.3, 0.7]
    lam = farkas.solve_exit_rates(P, delta, mu)
    assert all(0.0 <= x <= 1.0 for x in lam)
    reached = farkas.exit_distribution(P, delta, lam)
    assert reached == pytest.approx(mu, abs=1e-8)


def test_errors_surface_as_exceptions():
    with pytest.raises(farkas.FarkasError):
        farkas.model_states("@initial s0\ns0 a t 0.5\n")


def test_cli_in_process():
    code, out, err = farkas.run_cli(["certify", str(DATA / "fig2.mdp"), str(DATA / "fig2_forall_or.json")])
    assert code == 0
    assert "Build:" in err
    assert json.loads(out)["holds"] is True
