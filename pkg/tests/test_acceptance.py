"""Acceptance gate: every committed criterion at its stated tolerance.

Each test runs one criterion at the full sample counts and prints a
pass/fail line; stated runtime caps are asserted where the criterion
carries one.
"""
import json

import pytest

from rorrlab.verify import (
    CheckResult,
    VerifyConfig,
    build_manifest,
    manifest_to_json,
    run_all,
    run_check,
    strip_timing,
)

FULL = VerifyConfig()


def report(number: int, result: CheckResult) -> None:
    status = "PASS" if result.passed else "FAIL"
    print(f"[{status}] criterion {number:02d} {result.name} "
          f"({result.runtime_seconds:.2f}s)")


def test_criterion_01_quantum_identity():
    result = run_check("quantum_identity", FULL)
    report(1, result)
    assert result.details["trials"] == 200
    assert result.details["worst_abs_error"] <= 1e-10
    assert result.runtime_seconds < 10.0
    assert result.passed


def test_criterion_02_sign_correlation():
    result = run_check("sign_correlation", FULL)
    report(2, result)
    assert len(result.details["rows"]) == 7
    assert result.runtime_seconds < 30.0
    assert result.passed


def test_criterion_03_expected_phi():
    result = run_check("expected_phi", FULL)
    report(3, result)
    assert result.details["floor_satisfied"]
    assert all(row["passed"] for row in result.details["monte_carlo"])
    assert result.runtime_seconds < 300.0
    assert result.passed


def test_criterion_04_uniform_variance():
    result = run_check("uniform_variance", FULL)
    report(4, result)
    assert result.details["worst_exact_error"] <= 1e-9
    assert result.details["empirical_passed"]
    assert result.passed


def test_criterion_05_moment_structure():
    result = run_check("moment_structure", FULL)
    report(5, result)
    assert result.details["small_sets_exactly_zero"]
    assert result.details["odd_parity_exactly_zero"]
    assert all(row["violations"] == 0 for row in result.details["audits"])
    assert result.passed


def test_criterion_06_fourier_decomposition():
    result = run_check("fourier_decomposition", FULL)
    report(6, result)
    assert result.details["trees"] == 100
    assert result.details["worst_abs_gap"] <= 1e-9
    assert result.runtime_seconds < 60.0
    assert result.passed


def test_criterion_07_level_bounds():
    result = run_check("level_bounds", FULL)
    report(7, result)
    assert result.details["binom_bound_ok"]
    assert result.details["level1_ok"]
    assert result.details["level_ell_ok"]
    assert result.details["max_binom_ratio"] <= 1.0
    assert result.passed


def test_criterion_08_address_exactness():
    result = run_check("address_exactness", FULL)
    report(8, result)
    assert result.details["exact_equalities"]
    assert result.details["mismatches"] == []
    assert result.details["composition_best_ratio"] >= 1.2
    assert result.passed


def test_criterion_09_goodness():
    result = run_check("goodness", FULL)
    report(9, result)
    for row in result.details["haar"]:
        assert row["violations"] == 0
    assert result.details["hadamard_norm"] == 1.0
    assert result.details["hadamard_bound"] == pytest.approx(0.663, abs=0.001)
    assert result.details["identity_flagged"]
    assert result.passed


def test_criterion_10_tail_bounds():
    result = run_check("tail_bounds", FULL)
    report(10, result)
    assert result.details["trials"] == 10_000
    for row in result.details["rows"]:
        assert row["gaussian_passed"] and row["subgaussian_passed"]
    assert result.passed


def test_criterion_11_distinguishing_sanity():
    result = run_check("distinguishing_sanity", FULL)
    report(11, result)
    for row in result.details["null_trees"]:
        assert row["const_ok"] and row["dictator_ok"]
    for row in result.details["arcsine_tree"]:
        assert row["passed"]
    for row in result.details["envelope"]:
        assert row["passed"], row
    assert result.passed


def test_criterion_12_determinism():
    # Two full manifest builds from one config are byte-identical once
    # timing is excluded.
    cfg = VerifyConfig.reduced()
    names = ["quantum_identity", "sign_correlation", "moment_structure",
             "distinguishing_sanity", "determinism"]
    first = manifest_to_json(strip_timing(build_manifest(cfg, run_all(cfg, names))))
    second = manifest_to_json(strip_timing(build_manifest(cfg, run_all(cfg, names))))
    passed = first == second
    print(f"[{'PASS' if passed else 'FAIL'}] criterion 12 determinism")
    assert first.encode() == second.encode()
    in_process = run_check("determinism", cfg)
    report(12, in_process)
    assert in_process.passed
