"""Command-line behavior: determinism, formats, error paths, threading."""

from __future__ import annotations

import json

import pytest

from squareperm.cli import main

SIZE = 2048  # smallest size the rejection sampler accepts


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_enumerate_plain_payload(capsys):
    code, out, err = run(capsys, "enumerate", "--size", "5", "--format", "plain")
    assert code == 0 and err == ""
    assert out == "104\n"


def test_enumerate_json_cross_checks_both_counts(capsys):
    code, out, _ = run(capsys, "enumerate", "--size", "6")
    body = json.loads(out)
    assert code == 0
    assert body["schema"] == "squareperm-report/1"
    assert body["formula"] == 464 and body["exhaustive"] == 464 and body["match"]
    assert body["config"]["command"] == "enumerate"


def test_reports_are_byte_identical_for_equal_configs(capsys):
    args = ("sample", "--size", str(SIZE), "--count", "2", "--seed", "7")
    first = run(capsys, *args)
    again = run(capsys, *args)
    assert first == again and first[0] == 0
    other = run(capsys, "sample", "--size", str(SIZE), "--count", "2", "--seed", "8")
    assert other[1] != first[1]


def test_sample_plain_lines_are_permutations(capsys):
    code, out, _ = run(
        capsys, "sample", "--size", "6", "--mode", "exact", "--count", "3",
        "--seed", "3", "--format", "plain",
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert len(lines) == 3
    for line in lines:
        assert sorted(int(v) for v in line.split()) == [1, 2, 3, 4, 5, 6]


def test_encode_decode_round_trip(capsys):
    code, out, _ = run(capsys, "encode", "--perm", "2413")
    assert code == 0
    pair = json.loads(out)["pair"]
    assert (pair["x"], pair["y"], pair["z0"]) == ("DUDD", "LLRL", 3)
    code, out, _ = run(
        capsys, "decode", "--x", pair["x"], "--y", pair["y"],
        "--z0", str(pair["z0"]), "--format", "plain",
    )
    assert code == 0 and out == "2 4 1 3\n"


def test_decode_failure_is_a_single_error_line(capsys):
    code, out, err = run(capsys, "decode", "--x", "DDDD", "--y", "LLLL", "--z0", "1")
    assert code == 1 and out == ""
    assert err.startswith("error: ") and err.count("\n") == 1


def test_encode_rejects_non_squares(capsys):
    code, _, err = run(capsys, "encode", "--perm", "25314")
    assert code == 1 and err.startswith("error: ")


def test_invalid_anchor_fraction_is_rejected(capsys):
    code, _, err = run(
        capsys, "fluctuations", "--size", "50000", "--anchor-fraction", "0.4",
        "--replicates", "2",
    )
    assert code == 1 and err.startswith("error: ")


def test_permuton_distance_emits_the_documented_csv(capsys):
    code, out, _ = run(
        capsys, "permuton-distance", "--size", str(SIZE), "--samples", "2",
        "--grid", "8", "--seed", "5", "--format", "csv",
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "n,sample_id,z0_over_n,d_grid"
    assert len(lines) == 3
    for line in lines[1:]:
        n, sample_id, z_frac, d = line.split(",")
        assert int(n) == SIZE
        assert 0.0 < float(z_frac) < 1.0
        assert 0.0 <= float(d) <= 1.0


def test_pattern_limit_reports_estimate_and_stderr(capsys):
    code, out, _ = run(
        capsys, "pattern-limit", "--pattern", "12", "--z", "0.0",
        "--trials", "300", "--seed", "4",
    )
    body = json.loads(out)
    assert code == 0
    assert body["estimate"] == 1.0 and body["stderr"] == 0.0


def test_local_stats_compares_against_theory(capsys):
    code, out, _ = run(
        capsys, "local-stats", "--size", str(SIZE), "--radius", "1", "--seed", "6",
    )
    body = json.loads(out)
    assert code == 0
    freqs = body["frequencies"]
    assert abs(sum(freqs.values()) - 1.0) < 1e-9
    # rationals are serialized as p/q strings
    assert body["theory"]["123"] == "1/4"
    assert set(body["z_scores"]) == set(freqs)


def test_pattern_stats_keeps_the_exact_complement(capsys):
    code, out, _ = run(
        capsys, "pattern-stats", "--size", str(SIZE), "--count", "3", "--seed", "9",
    )
    body = json.loads(out)
    assert code == 0
    assert body["complement_exact"] is True
    assert 0.3 < body["mean"] < 0.7
    # the exact per-sample proportions survive as p/q strings
    assert all("/" in v for v in body["per_sample"])


def test_consecutive_pattern_stats(capsys):
    code, out, _ = run(
        capsys, "pattern-stats", "--size", str(SIZE), "--count", "2",
        "--pattern", "21", "--consecutive", "--seed", "9",
    )
    assert code == 0
    assert json.loads(out)["config"]["consecutive"] is True


def test_env_seed_is_honored_and_flag_wins(capsys, monkeypatch):
    flagged = run(capsys, "sample", "--size", "6", "--mode", "exact",
                  "--seed", "12", "--format", "plain")
    monkeypatch.setenv("SQUAREPERM_SEED", "12")
    from_env = run(capsys, "sample", "--size", "6", "--mode", "exact",
                   "--format", "plain")
    overridden = run(capsys, "sample", "--size", "6", "--mode", "exact",
                     "--seed", "13", "--format", "plain")
    assert from_env == flagged
    assert overridden != flagged


def test_output_flag_redirects_the_payload(capsys, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run(
        capsys, "enumerate", "--size", "4", "--output", str(target),
    )
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["formula"] == 24


def test_threading_does_not_change_the_report(capsys):
    args = (
        "fluctuations", "--size", "50000", "--anchor-fraction", "0.65",
        "--replicates", "4", "--times", "0.5,1.0", "--seed", "14",
    )
    serial = run(capsys, *args, "--threads", "1")
    threaded = run(capsys, *args, "--threads", "2")
    assert serial[0] == 0
    assert serial == threaded
    body = json.loads(serial[1])
    assert "P_DR" in body["variances"]
    assert "P_DR:P_DL" in body["covariances"]


def test_verify_battery_passes(capsys):
    code, out, _ = run(capsys, "verify", "--format", "plain")
    assert code == 0
    assert "all checks passed" in out
    assert "[FAIL]" not in out
