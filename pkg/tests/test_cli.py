import csv
import io
import json

import pytest

from holoqc import ft
from holoqc.cli import EXIT_FT, EXIT_OK, EXIT_USAGE, SWEEP_COLUMNS, main
from holoqc.pauli import PauliString, bacon_shor_9

REPORT_KEYS = {
    "gate",
    "th_factor",
    "delta_spectral",
    "delta_fidelity",
    "leakage",
    "equal_phase_residual",
    "oracle_distance",
    "steps_used",
}


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_synth_x_bench(capsys):
    code, out = _run(capsys, "synth", "x-bench", "--th-factor", "17")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert set(doc) == REPORT_KEYS
    assert doc["delta_spectral"] <= 1e-5


def test_synth_rz_long_and_short(capsys):
    assert _run(capsys, "synth", "rz", "--th-factor", "50", "--tolerance", "1e-4")[0] == EXIT_OK
    assert _run(capsys, "synth", "rz", "--th-factor", "0.5", "--tolerance", "1e-4")[0] != EXIT_OK


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["synth", "toffoli"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["synth", "rz", "--th-factor", "-1"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["synth", "rz", "--tolerance", "2"])
    assert info.value.code == EXIT_USAGE
    assert _run(capsys, "sweep", "rz", "")[0] == EXIT_USAGE
    assert _run(capsys, "sweep", "rz", "4,-2")[0] == EXIT_USAGE
    assert _run(capsys, "ftcheck", "--when", "1.5")[0] == EXIT_USAGE
    assert _run(capsys, "ftcheck", "--inject-extra", "XX")[0] == EXIT_USAGE


def test_sweep_matches_synth(capsys):
    _, out = _run(capsys, "sweep", "rz", "50")
    rows = _rows(out)
    assert list(rows[0]) == SWEEP_COLUMNS
    _, synth = _run(capsys, "synth", "rz", "--th-factor", "50")
    doc = json.loads(synth)
    for col in ("delta_spectral", "delta_fidelity", "leakage", "oracle_distance"):
        assert float(rows[0][col]) == pytest.approx(doc[col], abs=1e-10)


def test_sweep_x_bench_decreasing(capsys):
    _, out = _run(capsys, "sweep", "x-bench", "4,8,16,32")
    deltas = [float(r["delta_spectral"]) for r in _rows(out)]
    assert len(deltas) == 4
    assert all(b < a for a, b in zip(deltas, deltas[1:]))


def test_sweep_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "xs", "3,6", "-o", str(a)]) == EXIT_OK
    assert main(["sweep", "xs", "3,6", "-o", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_ftcheck_rz_step(capsys):
    code, out = _run(capsys, "ftcheck", "--gate", "rz-step", "--th-factor", "17", "--when", "0.5")
    rows = _rows(out)
    assert code == EXIT_OK
    assert len(rows) == 9 * 9 * 3
    assert all(r["correctable"] == "true" for r in rows)
    assert set(rows[0]) >= {"qubit", "pauli", "when", "segment", "correctable", "block_weights", "dominance"}


@pytest.mark.parametrize("label", ["XXIIIIIII", "XIIIXIIII"])
def test_ftcheck_detects_injected_weight_two(capsys, label):
    code, out = _run(capsys, "ftcheck", "--when", "0.5", "--inject-extra", label)
    assert code == EXIT_FT
    flags = [r["flag"] for r in _rows(out)]
    # events that cancel part of the extra Pauli leave a correctable residual
    assert flags.count("violation") > len(flags) // 2


def test_ftcheck_when_zero_matches_pre_gate_error(capsys):
    _, out = _run(capsys, "ftcheck", "--when", "0")
    rows = [r for r in _rows(out) if r["segment"] == "0"]
    code = bacon_shor_9()
    plan = ft.transversal_rz(code)
    psi = ft.bell_input(code, 0)
    runner = ft.BlockRunner(plan, n_ref=1)
    ctx = ft.VerdictContext(plan.final_code, runner.ideal(psi), 1)
    for r in rows[:6]:
        err = PauliString.single(10, int(r["qubit"]), r["pauli"])
        v = ft.verdict(ctx, runner.run(ft.apply_pauli(psi, err)))
        assert float(r["dominance"]) == pytest.approx(v.dominance, abs=1e-10)
        assert r["block_weights"] == "|".join(map(str, v.residual_weight_per_block))


def test_catprep_and_parity(capsys):
    code, out = _run(capsys, "catprep", "--n", "2", "--th-factor", "50", "--parity")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["infidelity"] < 1e-9
    assert doc["parity_outcome_probabilities"][0] > 1 - 1e-8


def test_schedule_report(capsys):
    code, out = _run(capsys, "schedule")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["best_slowdown"] == "3/2"
    assert doc["conflict_free"] and doc["within_reference_band"]
    _, out = _run(capsys, "schedule", "--model", "overlap")
    assert json.loads(out)["single_gate_rounds"] == 3


def test_codereport(capsys):
    code, out = _run(capsys, "codereport")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["single_errors_corrected"] == 27
    assert len(doc["stabilizers"]) == 4
    assert all(len(g.strip("+").replace("I", "")) == 2 for g in doc["gauge_generators"])
