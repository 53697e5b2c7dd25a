import math

import numpy as np
import pytest
from scipy.linalg import expm

from hypoflow.model import ModelError, Moments
from hypoflow.modes import (
    EvolutionError,
    ModeState,
    certify,
    evolve_mode,
    global_rate,
    lyapunov,
    mode_decay_check,
)
from hypoflow.operators import (
    OperatorMatrix,
    assemble_auxiliary,
    assemble_collision,
    assemble_transport,
)


def test_certificate_gaussian_case_a(moments_fp):
    cert = certify(moments_fp, 1.0)
    # Lambda = (1/3) min{1, 1/(3+1)} = 1/12, evaluated by hand
    assert cert.Lambda == pytest.approx(1.0 / 12.0, rel=1e-13)
    assert cert.lambda_M == pytest.approx(1.0, rel=1e-13)
    assert cert.C_M == pytest.approx((1.0 + math.sqrt(3.0)) / 2.0, rel=1e-12)
    assert cert.mu == pytest.approx(1.0 / 24.0, rel=1e-12)


def test_certificate_bgk(moments_bgk):
    # kappa = 2: Lambda = (1/3) min{1, 1/(3+4)} = 1/21
    cert = certify(moments_bgk, 1.0)
    assert cert.Lambda == pytest.approx(1.0 / 21.0, rel=1e-12)


def test_certificate_limits(moments_fp):
    assert certify(moments_fp, 0.0).mu == 0.0
    big = certify(moments_fp, 1e6)
    assert big.mu == pytest.approx(big.Lambda, rel=1e-9)


def test_mu_monotone_and_bounded(moments_fp):
    xis = np.linspace(0.0, 20.0, 200)
    mus = [certify(moments_fp, x).mu for x in xis]
    assert all(b >= a for a, b in zip(mus, mus[1:]))
    Lam = global_rate(moments_fp)
    assert all(m <= Lam for m in mus)
    assert Lam < min(1.0, moments_fp.Theta) / 3.0


def test_delta_and_lambda_relations(moments_fp, moments_bgk):
    for m in (moments_fp, moments_bgk):
        for xi in (0.1, 0.7, 2.0, 9.0):
            cert = certify(m, xi)
            assert 0 < cert.delta <= 0.5
            assert cert.delta <= m.lambda_m / 2.0 + 1e-15
            assert cert.lam >= cert.mu - 1e-15  # envelope is the weaker bound


def test_certificate_rejects_bad_moments():
    bad = Moments(Theta=1.0, K=3.0, theta=1.0, kappa=1.0, lambda_m=1.0)
    object.__setattr__(bad, "kappa", -1.0)
    with pytest.raises(ModelError):
        certify(bad, 1.0)


def test_zero_mode_equilibrium_stationary(spec_bgk, hermite64):
    L = assemble_collision(spec_bgk, hermite64)
    T = assemble_transport(0.0, hermite64)
    e0 = hermite64.equilibrium_coeffs()
    traj = evolve_mode(ModeState(np.array([0.0]), e0, 0.0), L, T, 5.0, 50)
    for s in traj:
        assert hermite64.norm(s.coeffs - e0) < 1e-13


def test_zero_mode_microscopic_closed_form(spec_bgk, hermite64, rng):
    """At xi = 0 a zero-density datum relaxes exactly like exp(-t)."""
    L = assemble_collision(spec_bgk, hermite64)
    T = assemble_transport(0.0, hermite64)
    f0 = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    f0[0] = 0.0  # zero density
    traj = evolve_mode(ModeState(np.array([0.0]), f0, 0.0), L, T, 8.0, 80)
    n0 = hermite64.norm(f0)
    for s in traj:
        assert hermite64.norm(s.coeffs) == pytest.approx(n0 * math.exp(-s.t), rel=1e-12)


def test_zero_mode_bound_is_flat_constant(spec_bgk, moments_bgk, hermite64, rng):
    # mu_0 = 0 makes the envelope the constant 3; microscopic decay beats it
    L = assemble_collision(spec_bgk, hermite64)
    T = assemble_transport(0.0, hermite64)
    f0 = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    f0[0] = 0.0
    rep = mode_decay_check(0.0, f0, 20.0, math.inf, moments=moments_bgk,
                           basis=hermite64, L=L, T=T)
    assert rep.passed
    assert np.allclose(rep.norms["bound"], 3.0 * rep.primary_series()[0])


def test_propagator_semigroup(spec_fp, hermite64):
    L = assemble_collision(spec_fp, hermite64)
    T = assemble_transport(1.3, hermite64)
    G = L.mat - T.mat
    P_full = expm(G * 1.0)
    P_half = expm(G * 0.5)
    assert np.linalg.norm(P_full - P_half @ P_half) < 1e-10 * np.linalg.norm(P_full)


def test_continuity_identity(spec_fp, hermite64, rng):
    """d/dt rho + i xi j = 0, checked with a fourth-order time stencil."""
    xi = 1.0
    L = assemble_collision(spec_fp, hermite64)
    T = assemble_transport(xi, hermite64)
    f0 = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    traj = evolve_mode(ModeState(np.array([xi]), f0, 0.0), L, T, 2.0, 400)
    rho = np.array([hermite64.rho(s.coeffs) for s in traj])
    cur = np.array([hermite64.current(s.coeffs)[0] for s in traj])
    dt = traj[1].t
    drho = (rho[:-4] - 8 * rho[1:-3] + 8 * rho[3:-1] - rho[4:]) / (12 * dt)
    resid = np.abs(drho + 1j * xi * cur[2:-2]).max()
    assert resid < 1e-8


def test_blowup_detection(hermite64):
    bad = OperatorMatrix(np.diag(np.full(64, 5.0)), "collision")
    T = assemble_transport(0.0, hermite64)
    f0 = np.ones(64, dtype=complex)
    with pytest.raises(EvolutionError):
        evolve_mode(ModeState(np.array([0.0]), f0, 0.0), bad, T, 5.0, 50)


def test_lyapunov_equivalence_and_dissipation(spec_bgk, moments_bgk, hermite64, rng):
    xi = 1.0
    L = assemble_collision(spec_bgk, hermite64)
    T = assemble_transport(xi, hermite64)
    A = assemble_auxiliary(xi, moments_bgk, hermite64)
    cert = certify(moments_bgk, xi)
    f0 = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    traj = evolve_mode(ModeState(np.array([xi]), f0, 0.0), L, T, 10.0, 100)
    H, D = lyapunov(traj, A, cert.delta, hermite64, L, T)
    norms_sq = np.array([hermite64.norm(s.coeffs) ** 2 for s in traj])
    assert np.all(H >= 0.5 * (1 - cert.delta) * norms_sq - 1e-12)
    assert np.all(H <= 0.5 * (1 + cert.delta) * norms_sq + 1e-12)
    # dissipation controls the functional at the certified abstract rate
    assert np.all(D - cert.lam * H >= -1e-8 * H[0])


def test_lyapunov_equilibrium_flat(spec_bgk, moments_bgk, hermite64):
    L = assemble_collision(spec_bgk, hermite64)
    T = assemble_transport(0.0, hermite64)
    A = assemble_auxiliary(0.0, moments_bgk, hermite64)
    e0 = hermite64.equilibrium_coeffs()
    traj = evolve_mode(ModeState(np.array([0.0]), e0, 0.0), L, T, 2.0, 20)
    H, D = lyapunov(traj, A, 0.1, hermite64, L, T)
    assert np.allclose(H, 0.5, atol=1e-13)
    assert np.abs(D).max() < 1e-10


def test_mode_decay_bound_exponential_weight(spec_fp, moments_fp, hermite64, rng):
    L = assemble_collision(spec_fp, hermite64)
    for xi in (0.5, 2.0):
        T = assemble_transport(xi, hermite64)
        for _ in range(3):
            f0 = rng.standard_normal(64) + 1j * rng.standard_normal(64)
            rep = mode_decay_check(xi, f0, 50.0, math.inf, moments=moments_fp,
                                   basis=hermite64, L=L, T=T)
            assert rep.passed and not rep.violations


def test_mode_decay_equilibrium_datum(spec_bgk, moments_bgk, hermite64):
    """Full-trajectory check with the equilibrium datum at xi = 1."""
    L = assemble_collision(spec_bgk, hermite64)
    T = assemble_transport(1.0, hermite64)
    rep = mode_decay_check(1.0, hermite64.equilibrium_coeffs(), 80.0, math.inf,
                           moments=moments_bgk, basis=hermite64, L=L, T=T)
    assert rep.passed
    # beyond t = ln(3)/mu the envelope dips below the initial value, so the
    # trajectory itself must carry the bound there
    t_star = math.log(3.0) / rep.meta["certificate"]["mu"]
    assert rep.times[-1] > t_star


def test_mode_decay_finite_weight_rate(spec_bgk, moments_bgk, hermite64, rng):
    L = assemble_collision(spec_bgk, hermite64)
    T = assemble_transport(1.0, hermite64)
    f0 = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    rep = mode_decay_check(1.0, f0, 40.0, 2.0, moments=moments_bgk,
                           basis=hermite64, L=L, T=T)
    assert rep.fitted_rate >= rep.certified_rate * 0.98
    assert rep.passed


def test_d2_mode_envelope(rng):
    from hypoflow.model import ModelSpec, compute_moments
    from hypoflow.operators import HermiteBasis

    spec = ModelSpec(case="fokker-planck", d=2)
    moments = compute_moments(spec)
    basis = HermiteBasis(16, d=2)
    L = assemble_collision(spec, basis)
    xi = np.array([1.0, 0.5])
    T = assemble_transport(xi, basis)
    f0 = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
    rep = mode_decay_check(xi, f0, 30.0, math.inf, moments=moments,
                           basis=basis, L=L, T=T)
    assert rep.passed and not rep.violations
    # Gaussian moment constants are dimension-free, so Lambda stays 1/12
    assert rep.meta["certificate"]["Lambda"] == pytest.approx(1.0 / 12.0, rel=1e-12)


def test_fitted_rate_stable_under_basis_refinement(spec_bgk, moments_bgk):
    from hypoflow.operators import HermiteBasis

    rates = []
    for n in (64, 128):
        basis = HermiteBasis(n)
        L = assemble_collision(spec_bgk, basis)
        T = assemble_transport(1.0, basis)
        f0 = np.zeros(n, dtype=complex)
        f0[0] = 1.0
        f0[2] = 0.5
        rep = mode_decay_check(1.0, f0, 40.0, 2.0, moments=moments_bgk,
                               basis=basis, L=L, T=T)
        rates.append(rep.fitted_rate)
    assert abs(rates[0] - rates[1]) <= 0.01 * abs(rates[1])
