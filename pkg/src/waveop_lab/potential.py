"""The perturbation V and its derived objects.

Carries v = sqrt|V|, U = sgn V, the L^1 norm of V, the rank-one
projection P onto span{v} (with Q = I - P and the rescaled Ptilde), and
the Newtonian-potential weight

    G(x) = |x| / ||V||_1 * integral of |V|(u)/|x-u| du.

Potentials are radial: a compactly supported smooth bump or a
polynomially decaying profile truncated where it falls below 1e-12 of
its amplitude.  All grid work happens on a product ball grid over the
(truncated) support.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateInputError, HypothesisViolationWarning, InvalidInputError
from .quadrature import BallGrid, ball_grid, gauss_rule

_PROFILE_RULE_N = 80


@dataclass(frozen=True)
class PotentialSpec:
    """Shape parameters of the perturbation.

    amplitude is the signed multiplier of the unit profile; the stock
    counterexample potential is amplitude=-0.01, R0=1 (a negative bump).
    For the decaying shape the hypothesis needs mu > 11; smaller mu is
    accepted with a warning and flagged in reports.
    """

    shape: str = "smooth_bump_compact"
    amplitude: float = -0.01
    R0: float = 1.0
    mu: float = 12.0

    def __post_init__(self):
        if self.shape not in ("smooth_bump_compact", "polynomial_decay"):
            raise InvalidInputError(f"unknown potential shape {self.shape!r}")
        if self.R0 <= 0:
            raise InvalidInputError("R0 must be positive")


class Potential:
    """A built potential on its ball grid, with radial profile access."""

    def __init__(self, spec: PotentialSpec, grid: BallGrid, hypothesis_ok: bool,
                 truncation_error: float):
        self.spec = spec
        self.grid = grid
        self.hypothesis_ok = hypothesis_ok
        self.truncation_error = truncation_error
        self.radius = grid.radius
        self.V = self.profile(grid.radii())
        self.v = np.sqrt(np.abs(self.V))
        self.U = np.where(self.V >= 0.0, 1.0, -1.0)
        rule = gauss_rule(_PROFILE_RULE_N, 0.0, self.radius)
        self._rule = rule
        self.normV_L1 = float(4.0 * np.pi * np.sum(
            rule.weights * rule.nodes ** 2 * np.abs(self.profile(rule.nodes))))
        # grid inner product <v, v>, used by the projections so that the
        # projection algebra P^2 = P holds to machine precision
        self.normV_grid = float(np.sum(grid.weights * self.v ** 2))

    def profile(self, r):
        """Signed radial profile V(r)."""
        r = np.asarray(r, dtype=float)
        s = self.spec
        if s.shape == "smooth_bump_compact":
            t = r / s.R0
            inside = t < 1.0
            tt = np.where(inside, t, 0.0)
            val = np.exp(1.0 - 1.0 / (1.0 - tt ** 2))
            return s.amplitude * np.where(inside, val, 0.0)
        return s.amplitude * (1.0 + r ** 2) ** (-s.mu / 2.0)

    def abs_profile(self, r):
        return np.abs(self.profile(r))

    def v2_profile(self, r):
        """|V|(r), the square of v's radial profile."""
        return np.abs(self.profile(r))

    @cached_property
    def projections(self) -> "ProjectionSet":
        return ProjectionSet(self)

    def weight_G(self, x):
        """G(x) = |x|/||V||_1 * int |V|(u)/|x-u| du.

        For the radial |V| the angular integral collapses to
        (4 pi / ||V||_1) * int_0^R min(|x|, r) r |V|(r) dr, which is
        exactly 1 outside the support.  x may be a point (..., 3).
        """
        s = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        return self.weight_G_radial(s)

    def weight_G_radial(self, s):
        """Same as weight_G but takes radii |x| directly (vectorized)."""
        s = np.asarray(s, dtype=float)
        rn, rw = self._rule.nodes, self._rule.weights
        core = rn * self.abs_profile(rn) * rw
        out = 4.0 * np.pi * (np.minimum(s[..., None], rn) * core).sum(axis=-1) / self.normV_L1
        return out if out.ndim else float(out)


def build_potential(spec: PotentialSpec, grid_shape=(12, 8, 16)) -> Potential:
    """Build the potential and its quadrature grid.

    grid_shape is (n_r, n_theta, n_phi).  For the decay shape the grid
    radius is the truncation radius where the profile drops below 1e-12
    of the amplitude.
    """
    if spec.amplitude == 0.0:
        raise DegenerateInputError("amplitude 0: potential vanishes identically")
    hypothesis_ok = True
    trunc_err = 0.0
    if spec.shape == "polynomial_decay":
        if spec.mu <= 11.0:
            warnings.warn(
                f"decay exponent mu={spec.mu} <= 11 violates the standing hypothesis",
                HypothesisViolationWarning)
            hypothesis_ok = False
        r_eff = float(np.sqrt(max(1e12 ** (2.0 / spec.mu) - 1.0, 1.0)))
        # L1 mass of the discarded tail relative to the kept part
        mu = spec.mu
        rule = gauss_rule(_PROFILE_RULE_N, 0.0, r_eff)
        kept = float(np.sum(rule.weights * rule.nodes ** 2 *
                            (1.0 + rule.nodes ** 2) ** (-mu / 2.0)))
        tail = r_eff ** (3.0 - mu) / (mu - 3.0)
        trunc_err = float(tail / kept)
        radius = r_eff
    else:
        radius = spec.R0
    grid = ball_grid(radius, *grid_shape)
    return Potential(spec, grid, hypothesis_ok, trunc_err)


class ProjectionSet:
    """Actions of P, Q = I - P and Ptilde on grid functions.

    P f = <f, v> v / ||V||_1 with the weighted grid inner product;
    Ptilde = 8 pi / ((1+i) ||V||_1) * P.
    """

    def __init__(self, pot: Potential):
        self.pot = pot
        self.v = pot.v
        self.w = pot.grid.weights
        self.norm = pot.normV_grid
        self.a = (1.0 + 1j) * pot.normV_grid / (8.0 * np.pi)

    def apply(self, kind: str, f):
        f = np.asarray(f)
        if f.shape[-1] != self.v.shape[0]:
            raise InvalidInputError("grid function has wrong length for this potential")
        coef = (f * (self.w * self.v)).sum(axis=-1) / self.norm
        pf = np.multiply.outer(coef, self.v) if f.ndim > 1 else coef * self.v
        if kind == "P":
            return pf
        if kind == "Q":
            return f - pf
        if kind == "Ptilde":
            return pf / self.a
        raise InvalidInputError(f"unknown projection kind {kind!r}")


def project(pot: Potential, kind: str, f):
    """P, Q or Ptilde applied to a grid function."""
    return pot.projections.apply(kind, f)


def weight_G(pot: Potential, x):
    return pot.weight_G(x)
