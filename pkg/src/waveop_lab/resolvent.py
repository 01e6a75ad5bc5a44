"""Discretized Birman-Schwinger operator and its low-energy expansion.

The central object is M(lambda) = U + v R0(lambda^4) v on the potential
grid, where R0 is the outgoing free resolvent of the bilaplacian,

    R0(lambda^4, x, y) = F(lambda |x-y|) / (8 pi lambda),

with F from :mod:`waveop_lab.specfun`.  Expanding F at zero gives

    M(lambda) = (a/lambda) P + T + a1 lambda v|x-y|^2 v + O(lambda^3),
    a = (1+i) ||V||_1 / (8 pi),  a1 = (1-i) / (48 pi),
    T = U + v G0 v,  G0 = -|x-y| / (8 pi).

When QTQ is invertible on the complement of span{v} (zero is a regular
point), a Neumann/Feshbach computation produces lambda-independent
operators D0, C1, A2 with

    M(lambda)^{-1} = D0 + lambda C1 + lambda^2 A2 + Gamma3(lambda),

and Gamma3 decaying like lambda^3.  This module materializes all of
those matrices on the grid and measures the decay.

Matrix conventions: public OperatorMatrix objects act on grid value
vectors with quadrature weights baked into the columns.  Internally the
algebra runs in the similarity-transformed "tilde" frame
A~ = S A S^{-1}, S = diag(sqrt(w)), where kernel operators are symmetric
and the weighted L^2 norm is the plain Euclidean one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, RegularityError
from .potential import Potential
from .quadrature import BallGrid
from .reports import SlopeFit, fit_loglog
from .specfun import Branch, eval_F

# ----------------------------------------------------------------------
# Free resolvent kernels
# ----------------------------------------------------------------------

def r0_kernel_r(branch: Branch, lam: float, r):
    """R0(lambda^4) kernel as a function of the distance r = |x - y|."""
    if lam <= 0.0:
        raise InvalidInputError("lambda must be positive")
    return eval_F(branch, lam * np.asarray(r, dtype=float)) / (8.0 * np.pi * lam)


def r0_kernel(branch: Branch, lam: float, x, y):
    """Pointwise free-resolvent kernel; x, y are points in R^3."""
    r = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), axis=-1)
    return r0_kernel_r(branch, lam, r)


def r0_diff_r(lam: float, r):
    """(R0+ - R0-)(lambda^4) at distance r: i sin(lambda r)/(4 pi lambda^2 r)."""
    if lam <= 0.0:
        raise InvalidInputError("lambda must be positive")
    r = np.asarray(r, dtype=float)
    return 1j * np.sinc(lam * r / np.pi) / (4.0 * np.pi * lam)


# ----------------------------------------------------------------------
# Operator matrices
# ----------------------------------------------------------------------

@dataclass
class OperatorMatrix:
    """Dense matrix realization of an integral operator on a ball grid.

    ``mat`` acts on vectors of point values; quadrature weights are
    baked into the columns (weights_baked is kept for clarity).
    """

    mat: np.ndarray
    grid: BallGrid
    weights_baked: bool = True
    name: str = ""

    def tilde(self) -> np.ndarray:
        s = np.sqrt(self.grid.weights)
        return (s[:, None] / s[None, :]) * self.mat

    def norm(self) -> float:
        """Weighted-L2 operator norm (power iteration on A*A)."""
        return spectral_norm(self.tilde())

    def kernel_values(self) -> np.ndarray:
        """Raw kernel values K(x_i, x_j) (weights divided out)."""
        return self.mat / self.grid.weights[None, :]


def spectral_norm(tilde_mat: np.ndarray, iters: int = 20, tol: float = 1e-6) -> float:
    """Largest singular value by power iteration on A^H A."""
    n = tilde_mat.shape[0]
    x = 1.0 + 0.5 * np.sin(np.arange(n, dtype=float))
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(iters):
        y = tilde_mat @ x
        sig_new = np.linalg.norm(y)
        z = tilde_mat.conj().T @ y
        zn = np.linalg.norm(z)
        if zn == 0.0:
            return 0.0
        x = z / zn
        if abs(sig_new - sigma) <= tol * max(sig_new, 1e-300):
            return float(sig_new)
        sigma = sig_new
    return float(sigma)


def _sqw(pot: Potential) -> np.ndarray:
    return np.sqrt(pot.grid.weights)


def _pair_distances(grid: BallGrid) -> np.ndarray:
    x = grid.nodes
    d = x[:, None, :] - x[None, :, :]
    return np.linalg.norm(d, axis=-1)


def m_tilde(pot: Potential, lam: float) -> np.ndarray:
    """U + v R0+(lambda^4) v in the tilde frame (symmetric kernel part)."""
    r = pot.pair_r if hasattr(pot, "pair_r") else _cache_pair_r(pot)
    vt = _sqw(pot) * pot.v
    mat = np.diag(pot.U.astype(complex))
    mat += vt[:, None] * r0_kernel_r(Branch.plus, lam, r) * vt[None, :]
    return mat


def _cache_pair_r(pot: Potential) -> np.ndarray:
    pot.pair_r = _pair_distances(pot.grid)
    return pot.pair_r


def _to_operator(pot: Potential, tilde: np.ndarray, name: str = "") -> OperatorMatrix:
    s = _sqw(pot)
    mat = (1.0 / s[:, None]) * tilde * s[None, :]
    return OperatorMatrix(mat=mat, grid=pot.grid, name=name)


def assemble_M(lam: float, pot: Potential) -> OperatorMatrix:
    """Matrix of U delta + v(x_i) R0+(lambda^4, x_i, x_j) v(x_j) w_j."""
    return _to_operator(pot, m_tilde(pot, lam), name=f"M(lambda={lam:g})")


def t_tilde(pot: Potential) -> np.ndarray:
    """T = U + v G0 v with G0 = -|x-y|/(8 pi), tilde frame."""
    r = _cache_pair_r(pot) if not hasattr(pot, "pair_r") else pot.pair_r
    vt = _sqw(pot) * pot.v
    mat = np.diag(pot.U.astype(complex))
    mat += vt[:, None] * (-r / (8.0 * np.pi)) * vt[None, :]
    return mat


def vg1v_tilde(pot: Potential) -> np.ndarray:
    """v |x-y|^2 v, tilde frame."""
    r = _cache_pair_r(pot) if not hasattr(pot, "pair_r") else pot.pair_r
    vt = _sqw(pot) * pot.v
    return (vt[:, None] * (r ** 2) * vt[None, :]).astype(complex)


# ----------------------------------------------------------------------
# Q-subspace machinery
# ----------------------------------------------------------------------

class QSplit:
    """Orthonormal complement of v in the weighted inner product.

    Built from a single Householder reflection in the tilde frame, so
    restriction to the Q-subspace is numerically stable.
    """

    def __init__(self, pot: Potential):
        vt = _sqw(pot) * pot.v
        u = vt / np.linalg.norm(vt)
        h = u.copy()
        h[0] += 1.0 if u[0] >= 0 else -1.0
        h /= np.linalg.norm(h)
        H = np.eye(u.size) - 2.0 * np.outer(h, h)
        self.u = u
        self.basis = H[:, 1:]          # (n, n-1), columns orthonormal, span u-perp
        self.P = np.outer(u, u)
        self.Q = np.eye(u.size) - self.P

    def restrict(self, tilde_mat: np.ndarray) -> np.ndarray:
        return self.basis.T @ tilde_mat @ self.basis

    def extend(self, small: np.ndarray) -> np.ndarray:
        return self.basis @ small @ self.basis.T


@dataclass
class RegularityReport:
    condition_number: float
    invertible: bool
    sigma_max: float
    sigma_min: float
    grid_size: int


def zero_regularity_check(pot: Potential, qsplit: QSplit | None = None,
                          cond_limit: float = 1e12) -> RegularityReport:
    """Conditioning of QTQ on the Q-subspace (regular-point test)."""
    qs = qsplit or QSplit(pot)
    tq = qs.restrict(t_tilde(pot))
    smax = spectral_norm(tq)
    try:
        inv = np.linalg.inv(tq)
        inv_norm = spectral_norm(inv)
        smin = 1.0 / inv_norm if inv_norm > 0 else 0.0
    except np.linalg.LinAlgError:
        smin = 0.0
    cond = smax / smin if smin > 0 else np.inf
    return RegularityReport(condition_number=float(cond),
                            invertible=bool(np.isfinite(cond) and cond < cond_limit),
                            sigma_max=float(smax), sigma_min=float(smin),
                            grid_size=pot.grid.size)


# ----------------------------------------------------------------------
# Expansion of M(lambda)^{-1}
# ----------------------------------------------------------------------

@dataclass
class ExpansionTerms:
    """lambda-independent matrices of the inverse expansion (tilde frame)."""

    pot: Potential
    a: complex
    a1: complex
    T: np.ndarray = field(repr=False)
    G1: np.ndarray = field(repr=False)          # v |x-y|^2 v
    D0: np.ndarray = field(repr=False)          # (QTQ)^{-1} extended by zero
    C1: np.ndarray = field(repr=False)          # full lambda^1 coefficient
    A2: np.ndarray = field(repr=False)          # lambda^2 coefficient
    qa10: np.ndarray = field(repr=False)        # Q A_{1,0} part of C1
    a01q: np.ndarray = field(repr=False)        # A_{0,1} Q part of C1
    ptilde: np.ndarray = field(repr=False)      # (1/a) P part of C1
    B1: np.ndarray = field(repr=False)
    B2: np.ndarray = field(repr=False)
    B3: np.ndarray = field(repr=False)
    qsplit: QSplit = field(repr=False, default=None)
    regularity: RegularityReport = None

    @property
    def A0(self) -> np.ndarray:
        """The lambda^0 term Q A0 Q, which equals D0."""
        return self.D0

    def as_operator(self, which: str) -> OperatorMatrix:
        return _to_operator(self.pot, getattr(self, which), name=which)

    def expansion_value(self, lam: float, drop=()) -> np.ndarray:
        """D0 + lambda C1 + lambda^2 A2 with optional dropped terms."""
        c1 = self.C1
        if "ptilde" in drop:
            c1 = c1 - self.ptilde
        out = self.D0 + lam * c1
        if "a2" not in drop:
            out = out + lam ** 2 * self.A2
        return out

    def gamma3_tilde(self, lam: float) -> np.ndarray:
        """Gamma3(lambda) = M^{-1}(lambda) - [D0 + lambda C1 + lambda^2 A2]."""
        minv = np.linalg.inv(m_tilde(self.pot, lam))
        return minv - self.expansion_value(lam)

    def gamma3_value_frame(self, lam: float) -> np.ndarray:
        """Gamma3 in the value frame (weights baked), for kernel contractions."""
        s = _sqw(self.pot)
        g = self.gamma3_tilde(lam)
        return (1.0 / s[:, None]) * g * s[None, :]


def expansion_terms(pot: Potential, regularity: RegularityReport | None = None) -> ExpansionTerms:
    """Materialize D0, C1 (= QA10 + A01Q + Ptilde/a) and A2 on the grid."""
    qs = QSplit(pot)
    reg = regularity or zero_regularity_check(pot, qs)
    if not reg.invertible:
        raise RegularityError(
            f"QTQ is numerically singular (cond ~ {reg.condition_number:.3e}); "
            "zero is not a regular point on this grid")
    T = t_tilde(pot)
    G1 = vg1v_tilde(pot)
    sigma = pot.normV_grid
    a = (1.0 + 1j) * sigma / (8.0 * np.pi)
    a1 = (1.0 - 1j) / (48.0 * np.pi)

    B1 = T / a
    T2 = T @ T
    B2 = (a1 / a) * G1 - T2 / a ** 2
    B3 = -(a1 / a ** 2) * (T @ G1 + G1 @ T) + (T2 @ T) / a ** 3

    D0 = qs.extend(np.linalg.inv(qs.restrict(T)))

    # expansion of (lambda/a) * Mtilde(lambda)^{-1} through the block
    # inversion, written in x = lambda/a with c = a1 * a:
    #   E  = I + x E1 + x^2 E2 + ...,  E1 = -T, E2 = T^2 - c G1
    #   W  = x^{-1} D0 + W0 + x W1    (Q-subspace inverse, extended by 0)
    c = a1 * a
    TD0 = T @ D0
    D0T = D0 @ T
    GD0 = G1 @ D0
    D0G = D0 @ G1
    D0T2D0 = D0 @ T2 @ D0
    D0GD0 = D0 @ GD0

    qa10 = (qs.Q - D0T + D0T2D0) / a - a1 * D0GD0
    a01q = -TD0 / a
    ptilde = qs.P.astype(complex) / a
    C1 = qa10 + a01q + ptilde

    W1 = (c * c * (D0GD0 @ GD0)
          - c * (D0G @ D0T2D0)
          - c * (D0T2D0 @ GD0)
          + D0T2D0 @ T2 @ D0
          - D0 @ T2 @ TD0
          + c * (D0 @ (T @ G1) @ D0)
          + c * (D0 @ (G1 @ T) @ D0))
    A2 = (-T + W1
          + c * (TD0 @ GD0) - TD0 @ T2 @ D0
          + c * (D0GD0 @ T) - D0T2D0 @ T
          + TD0 @ T
          + T2 @ D0 - c * GD0
          + D0 @ T2 - c * D0G) / a ** 2
    return ExpansionTerms(pot=pot, a=a, a1=a1, T=T, G1=G1, D0=D0, C1=C1, A2=A2,
                          qa10=qa10, a01q=a01q, ptilde=ptilde,
                          B1=B1, B2=B2, B3=B3, qsplit=qs, regularity=reg)


@dataclass
class ExpansionResidualReport:
    lambdas: np.ndarray
    norms: np.ndarray
    fit: SlopeFit
    solve_residuals: np.ndarray
    dropped: tuple


def expansion_residual(terms: ExpansionTerms, lambda_list, drop=()) -> ExpansionResidualReport:
    """||Gamma3(lambda)|| over a lambda list plus its log-log slope fit.

    drop may contain "a2" and/or "ptilde" for the ablation runs (the
    dropped expansion term then dominates the residual and the slope
    degrades accordingly).
    """
    lams = np.asarray(lambda_list, dtype=float)

    def one(lam):
        mt = m_tilde(terms.pot, lam)
        minv = np.linalg.inv(mt)
        res = spectral_norm(mt @ minv - np.eye(mt.shape[0]))
        return spectral_norm(minv - terms.expansion_value(lam, drop=drop)), res

    from .parallel import pmap
    out = pmap(one, lams)
    norms = np.array([o[0] for o in out])
    solve_res = np.array([o[1] for o in out])
    return ExpansionResidualReport(lambdas=lams, norms=norms,
                                   fit=fit_loglog(lams, norms),
                                   solve_residuals=solve_res, dropped=tuple(drop))


def feshbach_consistency(terms: ExpansionTerms, lam: float) -> float:
    """Relative gap between the block-inversion route and direct inversion.

    Inverts Mtime = (lambda/a) M(lambda) via E = (Mtime + Q)^{-1} and the
    Q-subspace operator Q - Q E Q, then compares with a direct dense
    inverse (Frobenius, relative).
    """
    qs = terms.qsplit
    mt = (lam / terms.a) * m_tilde(terms.pot, lam)
    E = np.linalg.inv(mt + qs.Q)
    small = np.eye(qs.basis.shape[1]) - qs.basis.T @ E @ qs.basis
    inv_small = np.linalg.inv(small)
    route = E + E @ qs.basis @ inv_small @ qs.basis.T @ E
    direct = np.linalg.inv(mt)
    return float(np.linalg.norm(route - direct) / np.linalg.norm(direct))


# ----------------------------------------------------------------------
# Projection gain
# ----------------------------------------------------------------------

def _weighted_norm(pot: Potential, f) -> float:
    return float(np.sqrt(np.sum(pot.grid.weights * np.abs(f) ** 2)))


def vr0_apply(pot: Potential, lam: float, f, branch: Branch = Branch.plus) -> np.ndarray:
    """v(x) * (R0(lambda^4) f)(x) on the grid."""
    r = _cache_pair_r(pot) if not hasattr(pot, "pair_r") else pot.pair_r
    K = r0_kernel_r(branch, lam, r) * pot.grid.weights[None, :]
    return pot.v * (K @ np.asarray(f, dtype=complex))


@dataclass
class ProjectionGainReport:
    lambdas: np.ndarray
    norm_plain: np.ndarray
    norm_projected: np.ndarray
    fit_plain: SlopeFit
    fit_projected: SlopeFit
    representation_errors: dict


def projection_gain(pot: Potential, lambda_list, f=None, rep_lambdas=(),
                    rep_pot: Potential | None = None) -> ProjectionGainReport:
    """Decay of ||v R0 f|| versus ||Q v R0 f|| as lambda -> 0.

    Also cross-validates Q v R0 f against its line-integral
    representation (first-order Taylor form along the segment) by
    explicit theta-quadrature at the given spot lambdas.
    """
    lams = np.asarray(lambda_list, dtype=float)
    if f is None:
        f = np.ones(pot.grid.size)
    plain = np.empty(lams.size)
    proj = np.empty(lams.size)
    for k, lam in enumerate(lams):
        g = vr0_apply(pot, lam, f)
        plain[k] = _weighted_norm(pot, g)
        proj[k] = _weighted_norm(pot, pot.projections.apply("Q", g))
    rep_errors = {}
    rpot = rep_pot or pot
    rf = np.ones(rpot.grid.size) if (rep_pot is not None or f is None) else f
    for lam in rep_lambdas:
        rep_errors[float(lam)] = representation_check(rpot, float(lam), rf)
    return ProjectionGainReport(lambdas=lams, norm_plain=plain, norm_projected=proj,
                                fit_plain=fit_loglog(lams, plain),
                                fit_projected=fit_loglog(lams, proj),
                                representation_errors=rep_errors)


def _graded_theta_nodes(levels: int, n_gl: int):
    """Unit-interval panel pattern graded geometrically toward 0."""
    from .quadrature import _leggauss
    breaks = np.concatenate([[0.0], 2.0 ** np.arange(-levels, 1, dtype=float)])
    x, w = _leggauss(n_gl)
    lo = breaks[:-1]
    hi = breaks[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def representation_check(pot: Potential, lam: float, f, branch: Branch = Branch.plus,
                         levels: int = 12, n_gl: int = 8, chunk: int = 24) -> float:
    """Relative gap between Q v R0 f and its theta-quadrature representation.

    The representation integrates <x, w(y - theta x)> F'(lambda|y - theta x|)
    over theta in [0, 1] with panels graded toward the closest-approach
    parameter of the segment, then applies Q(v * integral).
    """
    f = np.asarray(f, dtype=complex)
    direct = pot.projections.apply("Q", vr0_apply(pot, lam, f, branch))

    nodes_u, weights_u = _graded_theta_nodes(levels, n_gl)
    n_nodes = nodes_u.size
    x = pot.grid.nodes
    w = pot.grid.weights
    n = x.shape[0]
    y2 = np.sum(x ** 2, axis=1)
    out = np.empty(n, dtype=complex)
    wf = w * f
    for i0 in range(0, n, chunk):
        i1 = min(i0 + chunk, n)
        xi = x[i0:i1]
        x2 = np.sum(xi ** 2, axis=1)[:, None]
        xdot = xi @ x.T
        tstar = np.clip(xdot / np.maximum(x2, 1e-300), 0.0, 1.0)
        # left side: theta = tstar * (1 - u); right side: theta = tstar + (1 - tstar) * u
        acc = np.zeros((i1 - i0, n), dtype=complex)
        for side in (0, 1):
            if side == 0:
                theta = tstar[..., None] * (1.0 - nodes_u)
                pw = tstar[..., None] * weights_u
            else:
                theta = tstar[..., None] + (1.0 - tstar[..., None]) * nodes_u
                pw = (1.0 - tstar[..., None]) * weights_u
            u2 = y2[None, :, None] - 2.0 * theta * xdot[..., None] + theta ** 2 * x2[..., None]
            unorm = np.sqrt(np.maximum(u2, 0.0))
            dot = xdot[..., None] - theta * x2[..., None]
            fp = eval_F(branch, lam * unorm, 1)
            integ = np.where(unorm > 1e-14, dot / np.where(unorm > 0, unorm, 1.0), 0.0) * fp
            acc += (integ * pw).sum(axis=-1)
        out[i0:i1] = acc @ wf
    rep = pot.projections.apply("Q", -pot.v * out / (8.0 * np.pi))
    return float(_weighted_norm(pot, direct - rep) / _weighted_norm(pot, direct))
