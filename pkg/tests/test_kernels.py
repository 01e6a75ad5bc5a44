import numpy as np
import pytest

from waveop_lab import kernels as kn
from waveop_lab.errors import InvalidInputError
from waveop_lab.quadrature import ball_grid, integrate_adaptive
from waveop_lab.specfun import Branch, DyadicPartition

X0 = np.zeros(3)


def test_g11_at_origin(cutoff):
    got = kn.eval_G(1, 1, Branch.plus, X0, X0, cutoff)
    oracle, _ = integrate_adaptive(lambda lam: lam ** 3 * cutoff(lam), 0.0, 0.1,
                                   rel_tol=1e-13)
    assert got == pytest.approx(oracle, rel=1e-10)
    assert 0.05 ** 4 / 4 < got.real < 0.1 ** 4 / 4
    assert abs(got.imag) < 1e-18


def test_g_invalid_orders(cutoff):
    with pytest.raises(InvalidInputError):
        kn.eval_G(2, 0, Branch.plus, X0, X0, cutoff)


def test_dyadic_band_partition(cutoff):
    part = DyadicPartition()
    X = np.array([3.0, 1.0, -2.0])
    Y = np.array([-1.0, 4.0, 0.5])
    for (a, b, br) in ((1, 1, Branch.plus), (1, 0, Branch.minus), (0, 0, Branch.plus)):
        g = kn.eval_G(a, b, br, X, Y, cutoff)
        s = sum(kn.eval_EN(N, a, b, br, X, Y, cutoff, part)
                for N in kn.dyadic_band_range(0.1, 16))
        assert abs(g - s) / abs(g) < 1e-9


def test_band_magnitude_bound(cutoff):
    part = DyadicPartition()
    X = np.array([4.0, 0.0, 0.0])
    Y = np.array([0.0, 7.0, 0.0])
    jb = np.sqrt(1 + 16.0) * np.sqrt(1 + 49.0)
    for N in kn.dyadic_band_range(0.1, 6):
        v = abs(kn.eval_EN(N, 1, 1, Branch.plus, X, Y, cutoff, part))
        assert v <= 20.0 * 2.0 ** (2 * N) / jb


def test_band_decay_far_field(cutoff):
    part = DyadicPartition()
    X = np.array([100.0, 0.0, 0.0])
    Y = np.array([0.0, 80.0, 0.0])
    vals = [abs(kn.eval_EN(N, 1, 1, Branch.plus, X, Y, cutoff, part))
            for N in kn.dyadic_band_range(0.1, 6)]
    assert vals[-1] < vals[-3]       # top bands shrink at large radii


def test_minus_branch_conjugation(cutoff):
    X = np.array([2.0, -1.0, 0.5])
    Y = np.array([0.3, 1.0, -2.0])
    for (a, b) in ((1, 1), (1, 0), (0, 1)):
        lhs = np.conj(kn.eval_G(a, b, Branch.minus, X, Y, cutoff))
        rhs = kn.eval_G(b, a, Branch.minus, Y, X, cutoff)
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_cancellation_identity():
    got = kn.cancellation_identity_lhs(2.0, 1.0)
    assert got == pytest.approx(-8j / 15, abs=1e-15)
    sz, sw = 7.3, 2.1
    rhs = -4j * sz / (sz ** 4 - sw ** 4)
    assert kn.cancellation_identity_lhs(sz, sw) == pytest.approx(rhs, rel=1e-13)


def test_ktilde_bound(cutoff):
    env = kn.EnvelopeSpec("ktp_envelope")
    for sz, sw in ((0.0, 0.0), (5.0, 0.2), (0.2, 5.0), (30.0, 40.0), (200.0, 10.0)):
        v = abs(kn.ktilde_radial(sz, sw, cutoff))
        assert v <= 0.5 * env.radial(sz, sw)


def test_psi2_cases(cutoff):
    env = kn.EnvelopeSpec("psi2_envelope", n=2)
    # far field with |w| <= 1/2: decay at least like <z>^-2
    for sz in (10.0, 100.0, 1000.0):
        v = abs(kn.psi2_radial(sz, 0.3, cutoff))
        assert v <= 10.0 * env.radial(sz, 0.3)
    # vanishes off the gate
    assert kn.psi2_radial(3.0, 2.5, cutoff) == 0.0
    # Psi equals KtildeP inside the band and Psi2 on the gate
    assert kn.psi_radial(3.0, 2.5, cutoff) == kn.ktilde_radial(3.0, 2.5, cutoff)
    assert kn.psi_radial(9.0, 2.0, cutoff) == kn.psi2_radial(9.0, 2.0, cutoff)


def test_psi_batch_matches_scalar(cutoff):
    batch = kn.make_psi_batch(cutoff)
    batch_t = kn.make_psi_batch(cutoff, transpose=True)
    rho = np.array([0.3, 2.0, 19.5, 21.0, 60.0])
    s = 20.0
    vb = batch(s, rho)
    vs = np.array([kn.psi_radial(s, float(t), cutoff) for t in rho])
    assert np.max(np.abs(vb - vs) / np.maximum(np.abs(vs), 1e-18)) < 1e-9
    vt = batch_t(s, rho)
    vst = np.array([kn.psi_radial(float(t), s, cutoff) for t in rho])
    assert np.max(np.abs(vt - vst) / np.maximum(np.abs(vst), 1e-18)) < 1e-9


def test_kp_direct_split_consistency(small_pot, cutoff):
    kp = kn.KPDirect(small_pot, cutoff)
    coarse = ball_grid(1.0, 8, 6, 10)
    for x, y in (([3.0, 0, 0], [0, 5.0, 0]), ([10.0, 0, 0], [2.0, 1.0, 0])):
        d = kp.direct(np.array(x), np.array(y))
        sm = kn.kp_smeared_reference(small_pot, cutoff, coarse, np.array(x), np.array(y))
        assert abs(d - sm) / abs(d) < 1e-2
    # and the smeared route converges to the factorized one with the grid
    fine = ball_grid(1.0, 14, 10, 16)
    x, y = np.array([3.0, 0, 0]), np.array([0, 5.0, 0])
    d = kp.direct(x, y)
    err_c = abs(d - kn.kp_smeared_reference(small_pot, cutoff, coarse, x, y))
    err_f = abs(d - kn.kp_smeared_reference(small_pot, cutoff, fine, x, y))
    assert err_f < 0.3 * err_c


def test_kp_four_piece_combination(small_pot, cutoff):
    kp = kn.KPDirect(small_pot, cutoff)
    x, y = np.array([2.0, 1.0, 0.0]), np.array([0.0, 3.0, 1.0])
    k1, k2, k3, k4 = kp.pieces(x, y)
    combo = kp.prefactor * (k1 - k2 - k3 + k4)
    assert combo == pytest.approx(kp.direct(x, y), rel=1e-6)


def test_kp_finite_at_origin(small_pot, cutoff):
    kp = kn.KPDirect(small_pot, cutoff)
    v = kp.direct(X0, X0)
    assert np.isfinite(v.real) and np.isfinite(v.imag)
    # |K_P| <x><y> stays bounded on a small sweep
    for s, t in ((1.0, 1.0), (10.0, 9.5), (50.0, 50.0), (100.0, 3.0)):
        v = kp.direct_radial(s, t)
        assert abs(v) * np.hypot(1, s) * np.hypot(1, t) < 0.1


def test_kp_leading(small_pot, cutoff):
    kp = kn.KPDirect(small_pot, cutoff)
    lead, env = kp.leading_radial(5.0, 4.5)
    assert lead == 0.0                      # truncated near the diagonal
    lead, env = kp.leading_radial(50.0, 10.0)
    gx = small_pot.weight_G_radial(50.0)
    gy = small_pot.weight_G_radial(10.0)
    expect = -(1 + 1j) / (4 * np.pi) * gx * (50.0 / (50.0 ** 4 - 10.0 ** 4)) * gy
    assert lead == pytest.approx(expect, rel=1e-12)
    assert env == pytest.approx(1.0 / (np.hypot(1, 50) * np.hypot(1, 10) * (1 + 40.0 ** 2)),
                                rel=1e-12)


def test_kp_leading_agreement_sweep(small_pot, cutoff, rng):
    kp = kn.KPDirect(small_pot, cutoff)
    ratios = []
    for _ in range(30):
        sx = np.exp(rng.uniform(np.log(0.5), np.log(300.0)))
        sy = np.exp(rng.uniform(np.log(0.5), np.log(300.0)))
        d = kp.direct_radial(sx, sy)
        lead, env = kp.leading_radial(sx, sy)
        ratios.append(abs(d - lead) / env)
    assert np.isfinite(max(ratios))
    assert max(ratios) < 50.0


def test_k3_zero_gamma_gives_zero(strong_terms, cutoff):
    k3 = kn.K3Evaluator(strong_terms, cutoff, n_lambda=6)
    n = strong_terms.pot.grid.size

    class ZeroTerms:
        pot = strong_terms.pot

        @staticmethod
        def gamma3_value_frame(lam):
            return np.zeros((n, n), dtype=complex)

    k3.terms = ZeroTerms()
    pairs = np.array([[[1.0, 0, 0], [0, 2.0, 0]]])
    vals, _ = k3.eval_pairs(pairs)
    assert vals[0] == 0.0


def test_k3_envelope_and_slope(strong_terms, cutoff, rng):
    k3 = kn.K3Evaluator(strong_terms, cutoff, n_lambda=24)
    env = kn.EnvelopeSpec("k3_envelope")
    pairs = []
    for _ in range(8):
        sx = np.exp(rng.uniform(np.log(0.5), np.log(100.0)))
        sy = np.exp(rng.uniform(np.log(0.5), np.log(100.0)))
        u = rng.standard_normal((2, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        pairs.append(np.stack([sx * u[0], sy * u[1]]))
    vals, profs = k3.eval_pairs(np.array(pairs))
    ratios = [abs(v) / float(env(p[0], p[1])) for v, p in zip(vals, np.array(pairs))]
    assert np.all(np.isfinite(ratios))
    # spot integrand slope at small radii
    spots = np.array([[[1.2, 0, 0], [0, 0.9, 0]], [[0, 2.0, 0], [1.5, 0, 0]]])
    _, sp = k3.eval_pairs(spots)
    for prof in sp:
        fit = k3.integrand_slope(prof)
        assert abs(fit.slope - 4.0) <= 0.3


def test_bound_ratio_sweep_zero_field():
    fieldk = kn.KernelField("zero", radial=lambda s, t, refine=0: 0.0)
    env = kn.EnvelopeSpec("prop22_base")
    rep = kn.bound_ratio_sweep(fieldk, env, [(np.ones(3), np.zeros(3))],
                               refine_check=False)
    assert rep.sup_ratio == 0.0
    with pytest.raises(InvalidInputError):
        kn.bound_ratio_sweep(fieldk, env, [])


def test_spec_level_wrappers(small_pot, strong_terms, cutoff):
    x, y = np.array([3.0, 0.0, 0.0]), np.array([0.0, 5.0, 0.0])
    kp = kn._kp_for(small_pot, cutoff)
    assert kn.eval_KP_direct(x, y, small_pot, cutoff) == kp.direct(x, y)
    lead, env = kn.eval_KP_leading(x, y, small_pot, cutoff)
    assert (lead, env) == kp.leading(x, y)
    k3 = kn.K3Evaluator(strong_terms, cutoff, n_lambda=6)
    v = kn.eval_K3(x, y, k3)
    assert np.isfinite(v.real) and np.isfinite(v.imag)
