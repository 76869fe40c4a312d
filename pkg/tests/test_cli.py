import csv
import io
import json

import pytest

from bounded_laplace import OutputDomain, PrivacyBudget, calibrate
from bounded_laplace.cli import main


BASE = ["--epsilon", "1", "--delta", "0", "--lower", "0", "--upper", "1"]


def run_cli(argv, capsys):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


# ------------------------------------------------------------------ calibrate


def test_calibrate_degenerate_text(capsys):
    code, out, _ = run_cli(["calibrate", *BASE, "--sensitivity", "1"], capsys)
    assert code == 0
    lines = dict(line.split(" = ") for line in out.strip().splitlines())
    assert float(lines["b_star"]) == 1.0
    assert float(lines["b0"]) == 1.0
    assert lines["iterations"] == "0"


def test_calibrate_json_matches_library(capsys):
    code, out, _ = run_cli(
        ["calibrate", *BASE, "--sensitivity", "0.5", "--format", "json"], capsys)
    assert code == 0
    payload = json.loads(out)
    report = calibrate(OutputDomain(0.0, 1.0, 0.5), PrivacyBudget(1.0, 0.0))
    assert payload["b_star"] == pytest.approx(report.b_star, abs=1e-12)
    assert payload["effective_epsilon"] == pytest.approx(
        report.effective_epsilon, abs=1e-12)
    # parsed output re-validates the report invariants
    assert payload["b0"] <= payload["b_star"] <= payload["f_b0"]
    assert payload["residual"] <= 1e-12


def test_calibrate_csv_format(capsys):
    code, out, _ = run_cli(
        ["calibrate", *BASE, "--sensitivity", "0.5", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["b0", "f_b0", "b_star", "residual", "iterations",
                       "effective_epsilon"]
    assert float(rows[1][2]) == pytest.approx(0.7066713488689365, abs=1e-12)


def test_calibrate_rejects_zero_budget(capsys):
    code, out, err = run_cli(
        ["calibrate", "--epsilon", "0", "--delta", "0", "--lower", "0",
         "--upper", "1", "--sensitivity", "0.5"], capsys)
    assert code == 2
    assert out == ""
    assert "epsilon and delta cannot both be zero" in err


def test_calibrate_convergence_failure_exits_one(capsys):
    code, _, err = run_cli(
        ["calibrate", *BASE, "--sensitivity", "0.5", "--max-iter", "2"], capsys)
    assert code == 1
    assert "bracket" in err


def test_calibrate_rejects_oversized_sensitivity(capsys):
    code, _, err = run_cli(["calibrate", *BASE, "--sensitivity", "2"], capsys)
    assert code == 2
    assert "sensitivity" in err


# --------------------------------------------------------------------- sample


def test_sample_values_inside_domain(capsys):
    code, out, _ = run_cli(
        ["sample", *BASE, "--sensitivity", "0.5", "--q", "0.2", "--n", "200",
         "--seed", "7"], capsys)
    assert code == 0
    values = [float(v) for v in out.split()]
    assert len(values) == 200
    assert all(0.0 <= v <= 1.0 for v in values)


def test_sample_deterministic_given_seed(capsys):
    argv = ["sample", *BASE, "--sensitivity", "0.5", "--q", "0.2", "--n", "64",
            "--seed", "123", "--sampler", "rejection"]
    code1, out1, _ = run_cli(argv, capsys)
    code2, out2, _ = run_cli(argv, capsys)
    assert code1 == code2 == 0
    assert out1 == out2


def test_sample_auto_seed_reported_on_stderr(capsys):
    argv = ["sample", *BASE, "--sensitivity", "0.5", "--q", "0.2", "--n", "3"]
    code, out, err = run_cli(argv, capsys)
    assert code == 0
    assert err.startswith("seed: ")
    seed = err.split()[1]
    code2, out2, err2 = run_cli([*argv, "--seed", seed], capsys)
    assert code2 == 0
    assert out2 == out
    assert err2 == ""


def test_sample_rejects_query_outside_domain(capsys):
    code, _, err = run_cli(
        ["sample", *BASE, "--sensitivity", "0.5", "--q", "1.5", "--seed", "1"],
        capsys)
    assert code == 2
    assert "outside" in err


def test_sample_truncated_emits_exact_bound_values(capsys):
    code, out, _ = run_cli(
        ["sample", *BASE, "--sensitivity", "0.5", "--q", "0.05", "--n", "500",
         "--seed", "3", "--sampler", "truncated"], capsys)
    assert code == 0
    values = [float(v) for v in out.split()]
    assert values.count(0.0) > 0
    assert all(0.0 <= v <= 1.0 for v in values)


def test_sample_scale_override_and_json(capsys):
    code, out, _ = run_cli(
        ["sample", *BASE, "--sensitivity", "0.5", "--q", "0.5", "--n", "10",
         "--seed", "5", "--b", "0.9", "--format", "json"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["scale"] == 0.9
    assert len(payload["values"]) == 10


# --------------------------------------------------------------------- verify


VERIFY_FAST = ["--q-grid", "60", "--set-grid", "60", "--samples", "50000",
               "--seed", "11"]


def test_verify_passes_at_calibrated_scale(capsys):
    code, out, _ = run_cli(
        ["verify", *BASE, "--sensitivity", "0.5", *VERIFY_FAST], capsys)
    assert code == 0
    assert "overall: PASS" in out


def test_verify_fails_at_baseline_scale(capsys):
    code, out, _ = run_cli(
        ["verify", *BASE, "--sensitivity", "0.5", "--b", "0.5", *VERIFY_FAST],
        capsys)
    assert code == 1
    assert "privacy_inequality: FAIL" in out


def test_verify_baseline_passes_when_sensitivity_spans_domain(capsys):
    code, _, _ = run_cli(
        ["verify", *BASE, "--sensitivity", "1", "--b", "1.0", *VERIFY_FAST],
        capsys)
    assert code == 0


def test_verify_json_report(capsys):
    code, out, _ = run_cli(
        ["verify", *BASE, "--sensitivity", "0.5", "--format", "json",
         *VERIFY_FAST], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["all_passed"] is True
    names = [c["name"] for c in payload["checks"]]
    assert "privacy_inequality" in names and "empirical_privacy" in names
    for check in payload["checks"]:
        assert "worst_margin" in check and "witness" in check


def test_verify_csv_report(capsys):
    code, out, _ = run_cli(
        ["verify", *BASE, "--sensitivity", "0.5", "--format", "csv",
         "--samples", "0", "--q-grid", "40", "--set-grid", "40"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["name", "passed", "worst_margin", "witness"]
    assert all(row[1] == "true" for row in rows[1:])


# ---------------------------------------------------------------------- sweep


def test_sweep_header_sorting_and_ratios(capsys):
    code, out, _ = run_cli(
        ["sweep", "--dq-steps", "3", "--eps-steps", "3"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["sensitivity", "epsilon", "b_star", "effective_epsilon",
                       "ratio"]
    data = [(float(r[0]), float(r[1]), float(r[4])) for r in rows[1:]]
    assert data == sorted(data, key=lambda t: (t[0], t[1]))
    for dq, eps, ratio in data:
        assert 1.0 <= ratio < 2.0
        if dq == 1.0:
            assert ratio == 1.0


def test_sweep_rows_match_library(capsys):
    code, out, _ = run_cli(
        ["sweep", "--dq-steps", "2", "--eps-steps", "2"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))[1:]
    for row in rows:
        dq, eps = float(row[0]), float(row[1])
        report = calibrate(OutputDomain(0.0, 1.0, dq), PrivacyBudget(eps, 0.0))
        assert float(row[2]) == pytest.approx(report.b_star, rel=1e-12)
        assert float(row[4]) == pytest.approx(
            eps / report.effective_epsilon, rel=1e-12)


def test_sweep_ratio_monotone_in_epsilon(capsys):
    code, out, _ = run_cli(
        ["sweep", "--dq-steps", "2", "--eps-steps", "6"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))[1:]
    by_dq = {}
    for row in rows:
        by_dq.setdefault(row[0], []).append(float(row[4]))
    for ratios in by_dq.values():  # rows are epsilon-sorted within a dq block
        assert all(a >= b - 1e-12 for a, b in zip(ratios, ratios[1:]))


def test_sweep_emits_na_and_fails_on_bad_cells(capsys):
    code, out, _ = run_cli(
        ["sweep", "--width", "1", "--dq-min", "0.5", "--dq-max", "2",
         "--dq-steps", "2", "--eps-steps", "2"], capsys)
    assert code == 1
    rows = list(csv.reader(io.StringIO(out)))[1:]
    na_rows = [r for r in rows if r[4] == "NA"]
    ok_rows = [r for r in rows if r[4] != "NA"]
    assert len(na_rows) == 2 and len(ok_rows) == 2
    assert all(r[2] == "NA" and r[3] == "NA" for r in na_rows)


def test_sweep_deterministic(capsys):
    argv = ["sweep", "--dq-steps", "3", "--eps-steps", "2"]
    _, out1, _ = run_cli(argv, capsys)
    _, out2, _ = run_cli(argv, capsys)
    assert out1 == out2


# ---------------------------------------------------------------------- usage


def test_unknown_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_missing_required_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["calibrate", "--epsilon", "1"])
    assert info.value.code == 2
