"""Model singular kernel, 1D reduction and weak-(1,1) probes.

The model kernel s/(s^4 - r^4) (s = |x|, r = |y|), truncated to
|s - r| >= 1, splits exactly into

    1/(2s(s^2+r^2)) + 1/(4s^2(s+r)) + 1/(4s^2(s-r)),

whose first two pieces are pointwise dominated by |x|^-3 while the
third reduces, in polar coordinates, to the weighted 1D singular
integral

    W(g0)(s) = integral of g0(r) r^2 / (4 s^2 (s - r)) over |s-r| >= 1

on the homogeneous line (R, r^2 dr).  This module provides that
reduction, distribution-function (weak-type) profiles with level-set
measures, the smoothness (Hormander-type) modulus of the 1D kernel,
truncated Hilbert transforms and the centered maximal function with
dyadic parameter sets, and Schur row/column integrals with growth
diagnostics in the domain radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInputError, SingularityError
from .quadrature import _leggauss, cap_area, integrate_adaptive

# ----------------------------------------------------------------------
# Exact kernel decompositions
# ----------------------------------------------------------------------

def model_kernel_decomp(s, r):
    """K = s/(s^4-r^4) and its three exact pieces (K1, K2, K3).

    Vectorized; raises if any s == r (callers apply the |s-r| >= 1
    truncation) or s <= 0.
    """
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(s <= 0.0):
        raise InvalidInputError("s must be positive")
    if np.any(s == r):
        raise SingularityError("model kernel evaluated on the diagonal s = r")
    # factored quartic difference: conditioned like the pieces themselves
    K = s / ((s - r) * (s + r) * (s ** 2 + r ** 2))
    K1 = 1.0 / (2.0 * s * (s ** 2 + r ** 2))
    K2 = 1.0 / (4.0 * s ** 2 * (s + r))
    K3 = 1.0 / (4.0 * s ** 2 * (s - r))
    return K, K1, K2, K3


def adjoint_kernel_decomp(s, r):
    """Kernel of the adjoint, K*(s, r) = r/(r^4 - s^4), with its pieces.

    The exact identity is K* = -r/(2s^2(s^2+r^2)) + 1/(4s^2(s+r))
    - 1/(4s^2(s-r)); the last two pieces match K2 and K3 up to sign.
    """
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(s <= 0.0):
        raise InvalidInputError("s must be positive")
    if np.any(s == r):
        raise SingularityError("adjoint kernel evaluated on the diagonal s = r")
    Kadj = r / ((r - s) * (r + s) * (r ** 2 + s ** 2))
    J1 = -r / (2.0 * s ** 2 * (s ** 2 + r ** 2))
    J2 = 1.0 / (4.0 * s ** 2 * (s + r))
    J3 = -1.0 / (4.0 * s ** 2 * (s - r))
    return Kadj, J1, J2, J3


# ----------------------------------------------------------------------
# Radial profiles
# ----------------------------------------------------------------------

@dataclass
class RadialProfile:
    """A function of the radius with known support, g(r) on (r0, r1)."""

    fn: Callable
    support: tuple
    label: str = ""

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.support
        inside = (r >= lo) & (r <= hi)
        out = np.zeros_like(r, dtype=float)
        if np.any(inside):
            out[inside] = self.fn(r[inside])
        return out

    def mass_omega(self) -> float:
        """Integral of |g| r^2 dr over the support (omega-measure mass)."""
        lo, hi = self.support
        val, _ = integrate_adaptive(lambda r: np.abs(self.fn(r)) * r ** 2,
                                    lo, hi, rel_tol=1e-11)
        return float(val.real)


def smooth_bump_profile(center: float, width: float, normalize: bool = True) -> RadialProfile:
    """C-infinity bump at the given center/width, unit omega-mass by default."""

    def raw(r):
        t = (np.asarray(r, dtype=float) - center) / width
        inside = np.abs(t) < 1.0
        tt = np.where(inside, t, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - tt ** 2)), 0.0)

    prof = RadialProfile(raw, (max(center - width, 0.0), center + width),
                         label=f"bump(c={center},h={width})")
    if normalize:
        m = prof.mass_omega()
        prof = RadialProfile(lambda r, m=m: raw(r) / m, prof.support,
                             label=prof.label + "/mass")
    return prof


def polar_reduce(f3d: Callable, r_grid, n_mu: int = 24, n_phi: int = 48) -> RadialProfile:
    """g(r) = integral of f(r omega) over the unit sphere, sampled on r_grid.

    Returns a linearly interpolated profile supported on the grid range.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    mu, wmu = _leggauss(n_mu)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(np.maximum(0.0, 1.0 - mu ** 2))
    dirs = np.stack([
        np.outer(st, np.cos(phi)).ravel(),
        np.outer(st, np.sin(phi)).ravel(),
        np.outer(mu, np.ones(n_phi)).ravel(),
    ], axis=-1)
    wdir = (np.outer(wmu, np.full(n_phi, 2.0 * np.pi / n_phi))).ravel()
    vals = np.empty(r_grid.size)
    for i, r in enumerate(r_grid):
        vals[i] = float(np.dot(wdir, f3d(r * dirs)))
    fn = lambda r: np.interp(np.asarray(r, dtype=float), r_grid, vals)
    return RadialProfile(fn, (float(r_grid[0]), float(r_grid[-1])), label="polar_reduce")


# ----------------------------------------------------------------------
# The 1D operator W and weak-(1,1) profiles
# ----------------------------------------------------------------------

def apply_W(profile: RadialProfile, s_values, rel_tol: float = 1e-10):
    """W(g0)(s): the gated 1D singular integral against r^2 dr."""
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    lo, hi = profile.support
    out = np.zeros(s_values.shape)
    for i, s in enumerate(s_values):
        if s <= 0.0:
            raise InvalidInputError("W is probed on s > 0")
        total = 0.0
        segments = [(lo, min(hi, s - 1.0)), (max(lo, s + 1.0), hi)]
        for a, b in segments:
            if b > a:
                val, _ = integrate_adaptive(
                    lambda r: profile.fn(r) * r ** 2 / (4.0 * s ** 2 * (s - r)),
                    a, b, rel_tol=rel_tol, abs_tol=1e-16)
                total += float(val.real)
        out[i] = total
    return out if out.size > 1 else float(out[0])


@dataclass
class DistributionProfile:
    """lambda -> measure{|Tf| > lambda} over a threshold ladder."""

    thresholds: np.ndarray
    masses: np.ndarray
    quasi_norm: float
    input_mass: float
    label: str = ""

    @property
    def ratio(self) -> float:
        return self.quasi_norm / self.input_mass if self.input_mass > 0 else np.inf


def _cell_measures(edges: np.ndarray, measure: str) -> np.ndarray:
    vol = (edges[1:] ** 3 - edges[:-1] ** 3) / 3.0
    if measure == "omega":
        return vol
    if measure == "lebesgue3d":
        return 4.0 * np.pi * vol
    raise InvalidInputError(f"unknown measure {measure!r}")


def level_set_masses(op_abs: Callable, thresholds, s_min: float, s_max: float,
                     n_cells: int = 4096, measure: str = "omega",
                     refine_boundary: bool = True) -> np.ndarray:
    """measure{s : |T|(s) > lambda} for each threshold.

    Cell-counting on a log grid with one refinement level at the cells
    where the indicator switches.
    """
    edges = np.geomspace(s_min, s_max, n_cells + 1)
    mids = np.sqrt(edges[:-1] * edges[1:])
    vals = np.abs(op_abs(mids))
    cellm = _cell_measures(edges, measure)
    thresholds = np.asarray(thresholds, dtype=float)
    masses = np.empty(thresholds.size)
    for k, lam in enumerate(thresholds):
        above = vals > lam
        m = float(cellm[above].sum())
        if refine_boundary:
            switch = np.nonzero(above[:-1] != above[1:])[0]
            cells = np.unique(np.concatenate([switch, switch + 1]))
            for c in cells:
                sub = np.geomspace(edges[c], edges[c + 1], 9)
                subm = np.sqrt(sub[:-1] * sub[1:])
                subv = np.abs(op_abs(subm)) > lam
                m += float(_cell_measures(sub, measure)[subv].sum())
                if above[c]:
                    m -= float(cellm[c])
        masses[k] = m
    return masses


def weak11_profile(op_abs: Callable, input_mass: float, s_max: float,
                   measure: str = "omega", n_thresholds: int = 24,
                   decades: float = 4.0, s_min: float = 1e-3,
                   n_cells: int = 4096, label: str = "") -> DistributionProfile:
    """Distribution profile of |T|(s) with automatic threshold ladder.

    Thresholds span the requested number of decades below the observed
    maximum; the quasi-norm is sup lambda * measure{|T| > lambda}.
    """
    probe = np.geomspace(s_min, s_max, 2048)
    vmax = float(np.max(np.abs(op_abs(probe))))
    if vmax <= 0.0:
        return DistributionProfile(np.array([]), np.array([]), 0.0, input_mass, label)
    thresholds = np.geomspace(vmax * 0.95, vmax * 10.0 ** (-decades), n_thresholds)
    masses = level_set_masses(op_abs, thresholds, s_min, s_max, n_cells, measure)
    quasi = float(np.max(thresholds * masses))
    return DistributionProfile(thresholds, masses, quasi, input_mass, label)


def lq_norm_probe(profile: RadialProfile, q: float = 1.25, s_max: float = 400.0,
                  s_min: float = 1e-3, n: int = 3000) -> float:
    """Finite-sample ||W g||_{L^q(mu)} / ||g||_{L^q(mu)} with mu = r^2 dr.

    The 1D operator is L^q-bounded on the homogeneous line for
    1 < q < 3/2; this probes the ratio at one exponent on a log grid
    (evidence, not a proof).
    """
    if not 1.0 < q < 1.5:
        raise InvalidInputError("the weighted probe needs 1 < q < 3/2")
    s = np.geomspace(s_min, s_max, n)
    w = np.abs(apply_W(profile, s))
    cells = np.diff(np.geomspace(s_min, s_max, n + 1))
    mu = s ** 2 * cells
    num = float(np.sum(mu * w ** q) ** (1.0 / q))
    lo, hi = profile.support
    den, _ = integrate_adaptive(lambda r: np.abs(profile.fn(r)) ** q * r ** 2,
                                lo, hi, rel_tol=1e-10)
    return num / float(den.real) ** (1.0 / q)


def model_operator_abs(profile: RadialProfile, rel_tol: float = 1e-9):
    """|T f|(s) for the gated model kernel s/(s^4 - rho^4), radial f.

    The full model operator is the three-piece sum; in polar form it is
    4 pi times the rho-integral of the gated kernel against f rho^2.
    """

    def op(s_values):
        s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
        lo, hi = profile.support
        out = np.empty(s_values.shape)
        for i, s in enumerate(s_values):
            total = 0.0
            for a, b in ((lo, min(hi, s - 1.0)), (max(lo, s + 1.0), hi)):
                if b > a:
                    val, _ = integrate_adaptive(
                        lambda r: profile.fn(r) * r ** 2 * s /
                        ((s - r) * (s + r) * (s ** 2 + r ** 2)),
                        a, b, rel_tol=rel_tol, abs_tol=1e-16)
                    total += float(val.real)
            out[i] = abs(4.0 * np.pi * total)
        return out if out.size > 1 else float(out[0])

    return op


def kp_leading_operator_abs(pot, profile: RadialProfile, rel_tol: float = 1e-9):
    """|T f|(s) for the closed-form leading kernel of K_P, radial f.

    The kernel factorizes through the Newtonian weight G, so this is
    |G(s)| times the gated model transform of G * f (up to the constant
    sqrt(2)/(4 pi) modulus of the prefactor).
    """
    weighted = RadialProfile(
        lambda r: pot.weight_G_radial(r) * profile.fn(r), profile.support,
        label=profile.label + "*G")
    inner = model_operator_abs(weighted, rel_tol)

    def op(s_values):
        s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
        g = pot.weight_G_radial(s_values)
        vals = np.atleast_1d(inner(s_values))
        out = np.sqrt(2.0) / (4.0 * np.pi) * g * vals
        return out if out.size > 1 else float(out[0])

    return op


# ----------------------------------------------------------------------
# Kernel smoothness modulus (Hormander-type)
# ----------------------------------------------------------------------

def hormander_check(r: float, r_bar: float, delta: float,
                    rel_tol: float = 1e-8) -> float:
    """Integral of |K(s,r) - K(s,r_bar)| d(mu) over |s - r| >= 2 delta.

    K(s, r) = gate(|s-r| >= 1) / (4 s^2 (s - r)); the measure weight
    4 s^2 cancels the kernel prefactor exactly, and the tail beyond a
    wide window is dropped (it is O(delta / width)).
    """
    if delta <= 0.0:
        raise InvalidInputError("delta must be positive")
    if not abs(r - r_bar) < delta:
        raise InvalidInputError("need |r - r_bar| < delta")
    if r == r_bar:
        return 0.0
    width = max(1e4, 1e5 * delta)

    def integrand(s):
        t1 = np.where(np.abs(s - r) >= 1.0, 1.0 / (s - r), 0.0)
        t2 = np.where(np.abs(s - r_bar) >= 1.0, 1.0 / (s - r_bar), 0.0)
        return np.abs(t1 - t2)

    pieces = [(r - width, r - 2.0 * delta), (r + 2.0 * delta, r + width)]
    brk = [r - 1.0, r + 1.0, r_bar - 1.0, r_bar + 1.0]
    total = 0.0
    for a, b in pieces:
        if b <= a:
            continue
        val, _ = integrate_adaptive(integrand, a, b, rel_tol=rel_tol,
                                    abs_tol=1e-13,
                                    breakpoints=[p for p in brk if a < p < b])
        total += float(val.real)
    return total


# ----------------------------------------------------------------------
# Truncated Hilbert transform and maximal function (dyadic parameters)
# ----------------------------------------------------------------------

_DYADIC = 2.0 ** np.arange(-10, 11)


def hilbert_truncated(profile: RadialProfile, s: float, eps: float,
                      rel_tol: float = 1e-9) -> float:
    """integral of g(r)/(s - r) over the support minus (s-eps, s+eps)."""
    lo, hi = profile.support
    total = 0.0
    for a, b in ((lo, min(hi, s - eps)), (max(lo, s + eps), hi)):
        if b > a:
            val, _ = integrate_adaptive(lambda r: profile.fn(r) / (s - r),
                                        a, b, rel_tol=rel_tol, abs_tol=1e-15)
            total += float(val.real)
    return total


def hilbert_star(profile: RadialProfile, s: float, eps_set=_DYADIC) -> float:
    return max(abs(hilbert_truncated(profile, s, float(e))) for e in eps_set)


def maximal_fn(profile: RadialProfile, s: float, radii=_DYADIC) -> float:
    """Centered Hardy-Littlewood maximal function over dyadic radii."""
    lo, hi = profile.support
    best = 0.0
    for rho in radii:
        a, b = max(lo, s - rho), min(hi, s + rho)
        if b <= a:
            continue
        val, _ = integrate_adaptive(lambda r: np.abs(profile.fn(r)), a, b,
                                    rel_tol=1e-9, abs_tol=1e-15)
        best = max(best, float(val.real) / (2.0 * rho))
    return best


def quartic_profile(profile: RadialProfile) -> RadialProfile:
    """g~(rho) = rho^{-1/4} g(rho^{1/4}), the quartic-substitution profile."""
    lo, hi = profile.support

    def fn(rho):
        rho = np.asarray(rho, dtype=float)
        q = rho ** 0.25
        return np.where(rho > 0, rho ** -0.25, 0.0) * profile(q)

    return RadialProfile(fn, (lo ** 4, hi ** 4), label=profile.label + "~quartic")


def quartic_gate_transform(profile: RadialProfile, sigma: float,
                           rel_tol: float = 1e-9) -> float:
    """G(sigma): Hilbert-type transform of g~ with the quartic-root gate
    |sigma^(1/4) - rho^(1/4)| >= 1."""
    gp = quartic_profile(profile)
    lo, hi = gp.support
    q = sigma ** 0.25
    cut_lo = (q - 1.0) ** 4 if q >= 1.0 else lo - 1.0
    cut_hi = (q + 1.0) ** 4
    total = 0.0
    for a, b in ((lo, min(hi, cut_lo)), (max(lo, cut_hi), hi)):
        if b > a:
            val, _ = integrate_adaptive(lambda rho: gp.fn(rho) / (sigma - rho),
                                        a, b, rel_tol=rel_tol, abs_tol=1e-15)
            total += float(val.real)
    return total


# ----------------------------------------------------------------------
# Schur row/column integrals
# ----------------------------------------------------------------------

@dataclass
class SchurReport:
    domain_radius: float
    row_sup: float
    col_sup: float
    row_samples: np.ndarray = field(repr=False, default=None)
    col_samples: np.ndarray = field(repr=False, default=None)
    s_samples: np.ndarray = field(repr=False, default=None)


def _radial_l1(batch_eval: Callable, s: float, R: float, breakpoints=(),
               max_width: float = 8.0, n_gl: int = 16) -> float:
    """4 pi * integral of |K(s, rho)| rho^2 d rho over (0, R), composite GL."""
    edges = [0.0] + [b for b in sorted(breakpoints) if 0.0 < b < R] + [R]
    x, w = _leggauss(n_gl)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        n_pan = max(2, int(np.ceil((b - a) / max_width)))
        sub = np.linspace(a, b, n_pan + 1)
        mid = 0.5 * (sub[:-1] + sub[1:])
        half = 0.5 * np.diff(sub)
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wts = (half[:, None] * w[None, :]).ravel()
        vals = np.abs(batch_eval(s, nodes))
        total += float(np.sum(wts * vals * nodes ** 2))
    return 4.0 * np.pi * total


def schur_admissibility(row_eval: Callable, R_dom: float, n_samples: int = 16,
                        s_min: float = 0.05, gate_breaks: bool = True,
                        col_eval: Callable | None = None,
                        s_samples=None) -> SchurReport:
    """Row and column L1 sups of a bi-radial kernel over the ball |.| <= R_dom.

    row_eval(s, rho_array) returns K(s, rho) for a fixed first radius;
    col_eval(s, rho_array) returns K(rho, s) (defaults to row_eval for
    symmetric kernels).
    """
    col_eval = col_eval or row_eval
    if s_samples is None:
        s_samples = np.geomspace(s_min, R_dom * 0.98, n_samples)
    s_samples = np.asarray(s_samples, dtype=float)
    rows = np.empty(s_samples.size)
    cols = np.empty(s_samples.size)
    for i, s in enumerate(s_samples):
        brk = (s - 1.0, s + 1.0) if gate_breaks else ()
        rows[i] = _radial_l1(row_eval, s, R_dom, breakpoints=brk)
        cols[i] = _radial_l1(col_eval, s, R_dom, breakpoints=brk)
    return SchurReport(domain_radius=R_dom, row_sup=float(rows.max()),
                       col_sup=float(cols.max()), row_samples=rows,
                       col_samples=cols, s_samples=s_samples)


def schur_growth(row_eval: Callable, R_list, n_samples: int = 16,
                 col_eval: Callable | None = None) -> list:
    """Schur reports across growing domain radii (stabilization diagnostic).

    The outer-radius sample set is shared across domain radii so the
    sups are directly comparable.
    """
    R_list = [float(R) for R in R_list]
    s_samples = np.geomspace(0.05, max(R_list) * 0.98, n_samples)
    return [schur_admissibility(row_eval, R, n_samples, col_eval=col_eval,
                                s_samples=s_samples)
            for R in R_list]


def model_row_integral(s: float, R: float, eps: float) -> float:
    """Row L1 integral of the *untruncated* model kernel with an inner
    cutoff |s - rho| >= eps; diverges like log(1/eps) as eps -> 0."""
    def integrand(rho):
        return np.abs(s / (s ** 4 - rho ** 4)) * 4.0 * np.pi * rho ** 2

    total = 0.0
    for a, b in ((0.0, s - eps), (s + eps, R)):
        if b > a:
            val, _ = integrate_adaptive(integrand, a, b, rel_tol=1e-8,
                                        abs_tol=1e-14, breakpoints=(s * 0.5,))
            total += float(val.real)
    return total


def convolution_row_integral(kfn_of_distance: Callable, s: float, R: float,
                             tail: float = 60.0) -> float:
    """integral over |y| <= R of |k(|x - y|)| dy for |x| = s.

    Reduced through the sphere/ball intersection area; ``tail`` caps the
    distance range for kernels with their own decay.
    """
    top = s + R if tail is None else min(s + R, max(tail, 1.0))

    def integrand(rho):
        return np.abs(kfn_of_distance(rho)) * cap_area(rho, s, R)

    val, _ = integrate_adaptive(integrand, 0.0, top, rel_tol=1e-9, abs_tol=1e-14,
                                breakpoints=[b for b in (abs(R - s),) if 0 < b < top])
    return float(val.real)


def model_kernel_batch(s, rho):
    """Gated model kernel values for Schur probes (vectorized in rho)."""
    s_arr = np.full_like(np.asarray(rho, dtype=float), float(s))
    rho = np.asarray(rho, dtype=float)
    gate = np.abs(s_arr - rho) >= 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = s_arr / (s_arr ** 4 - rho ** 4)
    return np.where(gate, val, 0.0)
