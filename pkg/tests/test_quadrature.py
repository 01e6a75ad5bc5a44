import numpy as np
import pytest

from waveop_lab.errors import AccuracyError, InvalidInputError
from waveop_lab.quadrature import (HomogeneousMeasure, ball_grid, cap_area,
                                   gauss_rule, integrate_adaptive, unit_direction)


def test_polynomial():
    val, err = integrate_adaptive(lambda s: s ** 3, 0.0, 1.0)
    assert abs(val - 0.25) < 1e-14


def test_cutoff_plateau_moment():
    # the chi == 1 envelope case for the smallest kernel value
    val, _ = integrate_adaptive(lambda s: s ** 3, 0.0, 0.1)
    assert abs(val - 2.5e-5) < 1e-18


@pytest.mark.parametrize("omega", [50.0, 200.0, 1000.0])
def test_oscillatory_closed_form(omega):
    val, _ = integrate_adaptive(lambda s: np.exp(1j * omega * s), 0.0, 10.0,
                                rel_tol=1e-11, freq=omega)
    exact = (np.exp(10j * omega) - 1.0) / (1j * omega)
    assert abs(val - exact) <= 1e-9


def test_exponential():
    val, _ = integrate_adaptive(lambda s: np.exp(-s), 0.0, 30.0)
    assert abs(val - (1.0 - np.exp(-30.0))) < 1e-12


def test_accuracy_error_carries_best_estimate():
    with pytest.raises(AccuracyError) as exc:
        integrate_adaptive(lambda s: np.exp(1j * 5e4 * s), 0.0, 10.0,
                           rel_tol=1e-12, freq=0.0, max_panels=8)
    assert exc.value.best is not None
    assert exc.value.err_est > 0


def test_empty_interval_rejected():
    with pytest.raises(InvalidInputError):
        integrate_adaptive(lambda s: s, 1.0, 1.0)


def test_gauss_rule_unit_density():
    rule = gauss_rule(12, -0.5, 2.5)
    assert abs(rule.weights.sum() - 3.0) < 1e-12
    assert np.all(rule.nodes > -0.5) and np.all(rule.nodes < 2.5)


def test_ball_grid_volume_and_moments():
    g = ball_grid(1.0, 8, 6, 12)
    assert g.size == 8 * 6 * 12
    assert abs(g.weights.sum() - 4 * np.pi / 3) < 1e-10
    assert abs(g.integrate(np.sum(g.nodes ** 2, axis=1)) - 4 * np.pi / 5) < 1e-10
    assert abs(g.integrate(g.nodes[:, 0])) < 1e-12
    # degree <= 2 polynomial exactness
    f = 1.0 + g.nodes[:, 0] - 2 * g.nodes[:, 1] * g.nodes[:, 2] + g.nodes[:, 2] ** 2
    assert abs(g.integrate(f) - (4 * np.pi / 3 + 4 * np.pi / 15)) < 1e-10


def test_ball_grid_radial_consistency():
    g = ball_grid(2.0, 12, 8, 16)
    f = lambda r: np.exp(-r ** 2) * np.cos(3 * r)
    rule = gauss_rule(60, 0.0, 2.0)
    i1 = 4 * np.pi * np.sum(rule.weights * rule.nodes ** 2 * f(rule.nodes))
    i3 = g.integrate(f(np.linalg.norm(g.nodes, axis=1)))
    assert abs(i3 - i1) / abs(i1) < 1e-9


def test_ball_grid_min_counts():
    with pytest.raises(InvalidInputError):
        ball_grid(1.0, 1, 6, 12)


def test_unit_direction_zero():
    assert np.all(unit_direction(np.zeros(3)) == 0.0)
    v = unit_direction(np.array([3.0, 4.0, 0.0]))
    assert np.allclose(v, [0.6, 0.8, 0.0])


def test_cap_area_values():
    assert abs(cap_area(1.0, 0.0, 2.0) - 4 * np.pi) < 1e-14
    assert cap_area(3.0, 0.0, 2.0) == 0.0
    assert abs(cap_area(1.0, 1.0, 1.0) - np.pi) < 1e-14


def test_cap_area_properties():
    rho = np.linspace(0.01, 6.0, 800)
    h = rho[1] - rho[0]
    a = cap_area(rho, 1.3, 2.0)
    assert np.all(a <= 4 * np.pi * rho ** 2 + 1e-12)
    # continuity: increments bounded by slope * step (no jumps)
    assert np.max(np.abs(np.diff(a))) < 8 * np.pi * rho.max() * h * 1.5
    assert np.all(cap_area(rho, 1.3, 2.2) >= a - 1e-12)   # monotone in R


def test_homogeneous_measure():
    assert HomogeneousMeasure.interval(1.0, 2.0) == pytest.approx(7.0 / 3.0)
    assert HomogeneousMeasure.union([(0, 1), (0.5, 2), (3, 4)]) == pytest.approx(
        HomogeneousMeasure.interval(0, 2) + HomogeneousMeasure.interval(3, 4))
    # doubling with ratio <= 8 for centered dilates
    rng = np.random.default_rng(0)
    for _ in range(50):
        c = rng.uniform(0.5, 50.0)
        h = rng.uniform(0.01, c)
        m1 = HomogeneousMeasure.interval(c - h, c + h)
        m2 = HomogeneousMeasure.interval(c - 2 * h, c + 2 * h)
        assert m2 <= 8.0 * m1 + 1e-12
