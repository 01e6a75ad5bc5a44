import json
import os

import numpy as np
import pytest

from waveop_lab import experiments as xp
from waveop_lab.config import default_config
from waveop_lab.errors import InvalidInputError
from waveop_lab.potential import PotentialSpec, build_potential


def test_phi_closed_form_oracle():
    # u2 = 0, gate inactive: Phi = pi log((a+R)/(a-R)) - 2 pi arctan(R/a)
    a0, R = 13.5, 10.0
    exact = np.pi * np.log((a0 + R) / (a0 - R)) - 2 * np.pi * np.arctan(R / a0)
    assert xp.phi_radial(a0, 0.0, R) == pytest.approx(exact, rel=1e-8)
    # point-based wrapper agrees
    x = np.array([13.5, 0.0, 0.0])
    assert xp.phi_integral(np.zeros(3), np.zeros(3), x, R) == pytest.approx(exact, rel=1e-8)


def test_phi_dominates_chain_bound():
    R, R0 = 100.0, 1.0
    for a0 in (103.0, 103.5, 104.5):
        chain = xp.phi_lower_bound_chain(a0, R, R0)
        assert xp.phi_radial(a0, 0.6, R) >= chain
    # in the asymptotic regime the uniform band bound holds pointwise
    assert xp.phi_radial(104.5, 0.0, R) >= xp.phi_log_bound(R, R0)


def test_counterexample_operator_requires_compact():
    pot = build_potential(PotentialSpec(shape="polynomial_decay", amplitude=-0.01,
                                        mu=12.0), grid_shape=(6, 4, 8))
    with pytest.raises(InvalidInputError):
        xp.CounterexampleOperator(pot)


def test_counterexample_linf_run(small_pot):
    run = xp.counterexample_linf(small_pot, [10.0, 30.0])
    assert np.all(np.diff(run.values) > 0)
    # degenerate bound at R ~ R0 stays trivially satisfied
    tiny = xp.counterexample_linf(small_pot, [1.0])
    assert tiny.lower_bounds[0] == pytest.approx(0.0, abs=1e-12)
    assert np.isfinite(tiny.values[0])
    # at R = 30 the asymptotic bound already holds
    assert run.asymptotic_regime[1]
    assert run.values[1] >= run.lower_bounds[1]


def test_counterexample_mc_consistency(small_pot, rng):
    op = xp.CounterexampleOperator(small_pot)
    R = 10.0
    s = R + 2 * small_pot.radius + 1.5
    quad = op.tg_abs(s, R)
    mc, se = op.mc_estimate(s, R, 150000, rng)
    assert abs(quad - mc) <= 3.0 * se


def test_counterexample_l1_growth(small_pot):
    rep = xp.counterexample_l1(small_pot, R_max=1e3, n_panels=14)
    assert rep.fit.slope > 0
    assert rep.fit.r_squared >= 0.98
    assert np.all(np.diff(rep.masses) > 0)
    # pointwise scaled integrand on the shell stays positive and tame
    assert 0 < rep.shell_scaled_min <= rep.shell_scaled_max < 10.0


def test_sampler_covers_three_regimes(rng):
    pairs = xp.sample_three_regime_pairs(rng, 60, 0.05, 100.0)
    assert len(pairs) == 60
    ratios = np.array([np.linalg.norm(y) / np.linalg.norm(x) for x, y in pairs])
    assert (ratios < 0.5).any() and (ratios > 2.0).any()
    assert ((ratios >= 0.5) & (ratios <= 2.0)).any()


def test_run_suite_writes_reports(tmp_path):
    cfg = default_config()
    cfg.out_dir = str(tmp_path)
    rep = xp.run_suite(cfg, names=["identities", "hormander"])
    assert rep.all_pass
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["all_pass"] is True
    assert data["checks"]["identities"]["criterion"] == 1
    assert (tmp_path / "hormander.csv").exists()
    assert (tmp_path / "run_meta.json").exists()
    with pytest.raises(InvalidInputError):
        xp.run_suite(cfg, names=["bogus"])
    assert os.path.exists(tmp_path / "report.json")
