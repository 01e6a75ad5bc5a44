"""Acceptance suite: one test per criterion, printed as pass/fail lines.

Runs the same named checks as ``waveop-lab all`` at the default
configuration (full grids and sample counts) and asserts each
criterion at its stated tolerance, plus the stated runtime caps.

Run with ``pytest tests/test_acceptance.py -s`` to see one line per
criterion as it completes.
"""

import json

import pytest

from waveop_lab import experiments as xp
from waveop_lab.cli import main
from waveop_lab.config import default_config


@pytest.fixture(scope="module")
def ctx():
    return xp.SuiteContext(default_config())


def _finish(res, cap_seconds):
    print()
    print(res.line(), f"({res.runtime_s:.1f}s)")
    for f in res.failures:
        print("   failure:", f)
    assert res.runtime_s < cap_seconds, f"runtime {res.runtime_s}s exceeds {cap_seconds}s"
    assert res.passed, "; ".join(res.failures)


def test_criterion_01_identities(ctx):
    _finish(xp.check_identities(ctx), 5.0)


def test_criterion_02_specfun_envelopes(ctx):
    _finish(xp.check_specfun_envelopes(ctx), 10.0)


def test_criterion_03_resolvent_expansion(ctx):
    _finish(xp.check_resolvent_expansion(ctx), 300.0)


def test_criterion_04_projection_gain(ctx):
    _finish(xp.check_projection_gain(ctx), 120.0)


def test_criterion_05_kernel_envelopes(ctx):
    _finish(xp.check_kernel_bounds(ctx), 600.0)


def test_criterion_06_kp_leading_agreement(ctx):
    _finish(xp.check_kp_compare(ctx), 600.0)


def test_criterion_07_k3_envelope(ctx):
    _finish(xp.check_k3_bound(ctx), 900.0)


def test_criterion_08a_weak11(ctx):
    _finish(xp.check_weak11(ctx), 120.0)


def test_criterion_08b_hormander(ctx):
    _finish(xp.check_hormander(ctx), 120.0)


@pytest.fixture(scope="module")
def linf_result(ctx):
    return xp.check_counterexample_linf(ctx)


def test_criterion_09_counterexample_linf(linf_result):
    _finish(linf_result, 180.0)


@pytest.mark.xfail(strict=True, reason=(
    "the logarithmic lower bound is asymptotic in R: at R=10 the exact "
    "value at the band midpoint is ~9% below it (the uniformity "
    "precondition fails there, as the in_regime flag records)"))
def test_criterion_09_bound_at_R10(linf_result):
    m = linf_result.measured
    assert m["values"][0] >= m["bounds"][0]


def test_criterion_10_counterexample_l1_and_schur(ctx):
    res_l1 = xp.check_counterexample_l1(ctx)
    res_schur = xp.check_schur(ctx)
    print()
    print(res_l1.line(), f"({res_l1.runtime_s:.1f}s)")
    print(res_schur.line(), f"({res_schur.runtime_s:.1f}s)")
    assert res_l1.runtime_s + res_schur.runtime_s < 180.0
    assert res_l1.passed, "; ".join(res_l1.failures)
    assert res_schur.passed, "; ".join(res_schur.failures)


TRIMMED = {
    "grid": [6, 4, 8],
    "rep_grid": [5, 4, 6],
    "lambda_window": {"count": 6},
    "k3": {"n_lambda": 8, "n_pairs": 6, "n_spot": 2},
    "sweeps": {"g11_pairs": 36, "ktp_pairs": 18, "psi2_pairs": 18, "kp_pairs": 18,
               "radius_max": 200.0, "kp_radius_max": 100.0},
    "weak11": {"centers": [3.0, 5.0], "widths": [0.5, 0.25], "n_thresholds": 12,
               "decades": 3.0},
    "hormander": {"n_triples": 12},
    "schur": {"radii": [500.0, 1000.0], "n_samples": 4},
    "counterexample": {"R_list": [10.0, 30.0], "mc_samples": 20000,
                       "l1_R_max": 1000.0},
}


def test_criterion_11_determinism(tmp_path):
    """`all --seed 7` twice produces byte-identical CSV bodies.

    Every check runs end to end through the CLI on a scaled-down
    configuration (the determinism machinery is size-independent).
    """
    cfg_path = tmp_path / "trimmed.json"
    cfg_path.write_text(json.dumps(TRIMMED))
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        rc = main(["all", "--seed", "7", "--config", str(cfg_path), "--out", str(out)])
        assert rc == 0
        outs.append(out)
    csvs = sorted(p.name for p in outs[0].glob("*.csv"))
    assert len(csvs) >= 10
    for name in csvs:
        b1 = (outs[0] / name).read_bytes()
        b2 = (outs[1] / name).read_bytes()
        assert b1 == b2, f"CSV body differs between runs: {name}"
    r1 = json.loads((outs[0] / "report.json").read_text())
    r2 = json.loads((outs[1] / "report.json").read_text())
    assert r1 == r2
    print("\n[criterion 11] PASS determinism: byte-identical CSV bodies across runs")
