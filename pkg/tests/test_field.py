import numpy as np
import pytest

from hypoflow.field import (
    SeparableDatum,
    WholeSpaceGeometry,
    WholespaceTrajectory,
    XProfile,
    build_cancelling_datum,
    datum_moments,
    improved_decay_check,
    moment_ledger_evolution,
    reconstruct_on_grid,
    telescoping_residual,
    torus_solve,
    wholespace_solve,
    _hermite_v_coeffs,
)
from hypoflow.model import build_equilibrium
from hypoflow.modes import EvolutionError


def _plain_datum(basis, order=0):
    return SeparableDatum(terms=((XProfile(order), _hermite_v_coeffs(basis, 0)),))


def test_xprofile_moments_match_quadrature():
    x = np.linspace(-14, 14, 8001)
    h = x[1] - x[0]
    for order in range(4):
        prof = XProfile(order)
        vals = prof.values(x)
        for a in range(4):
            quad = float(np.sum(vals * x**a) * h)
            assert quad == pytest.approx(prof.moment(a), abs=1e-10)


def test_torus_equilibrium_datum_stationary(spec_bgk, moments_bgk, hermite64):
    e0 = hermite64.equilibrium_coeffs()
    rep = torus_solve(spec_bgk, hermite64, {0: e0}, 5.0, moments=moments_bgk)
    assert rep.norms["gamma_inf"].max() < 1e-26
    mass = rep.norms["mass"]
    assert np.abs(mass - mass[0]).max() < 1e-12


def test_torus_relaxation_rate(spec_bgk, moments_bgk, hermite64):
    e0 = hermite64.equilibrium_coeffs()
    rep = torus_solve(spec_bgk, hermite64, {0: e0, 1: 0.5 * e0, -1: 0.5 * e0},
                      30.0, moments=moments_bgk)
    assert rep.passed
    assert rep.fitted_rate >= rep.certified_rate
    mass = rep.norms["mass"]
    assert np.abs(mass - mass[0]).max() < 1e-12


def test_torus_mass_conserved_generic(spec_fp, moments_fp, hermite64, rng):
    modes = {0: rng.standard_normal(64) + 0j, 1: rng.standard_normal(64) + 0j,
             -1: rng.standard_normal(64) + 0j, 2: rng.standard_normal(64) + 0j,
             -2: rng.standard_normal(64) + 0j}
    rep = torus_solve(spec_fp, hermite64, modes, 10.0, moments=moments_fp)
    mass = rep.norms["mass"]
    assert np.abs(mass - mass[0]).max() < 1e-12 * max(1.0, abs(mass[0]))


def test_wholespace_zero_datum(spec_bgk, hermite64):
    datum = SeparableDatum(terms=((XProfile(0), np.zeros(64, dtype=complex)),))
    traj = WholespaceTrajectory(spec_bgk, hermite64, WholeSpaceGeometry(n=64),
                                datum, 1.0, num_samples=4)
    for _t, modes in traj:
        assert np.abs(modes).max() == 0.0


@pytest.mark.slow
def test_wholespace_heat_exponent_both_cases(spec_fp, spec_bgk, hermite64):
    for spec in (spec_fp, spec_bgk):
        rep = wholespace_solve(spec, hermite64, _plain_datum(hermite64), 200.0,
                               weight_k=2.0)
        assert rep.passed
        assert rep.fitted_exponent == pytest.approx(-0.5, rel=0.10)


@pytest.mark.slow
def test_wholespace_exponent_stable_under_refinement(spec_bgk, hermite64):
    from hypoflow.operators import HermiteBasis

    base = wholespace_solve(spec_bgk, hermite64, _plain_datum(hermite64), 200.0,
                            weight_k=2.0)
    fine = WholeSpaceGeometry(16.0, 1024)
    fine_geom = wholespace_solve(spec_bgk, hermite64, _plain_datum(hermite64), 200.0,
                                 weight_k=2.0, geometry=fine)
    basis96 = HermiteBasis(96)
    fine_basis = wholespace_solve(spec_bgk, basis96, _plain_datum(basis96), 200.0,
                                  weight_k=2.0)
    for other in (fine_geom, fine_basis):
        assert abs(other.fitted_exponent - base.fitted_exponent) \
            <= 0.03 * abs(base.fitted_exponent)
    # horizon refinement on the grid that stays adequate for the longer run
    longer = wholespace_solve(spec_bgk, hermite64, _plain_datum(hermite64), 280.0,
                              weight_k=2.0, geometry=fine)
    assert abs(longer.fitted_exponent - fine_geom.fitted_exponent) \
        <= 0.03 * abs(fine_geom.fitted_exponent)


def test_wholespace_refine_check_runs(spec_bgk, hermite64):
    rep = wholespace_solve(spec_bgk, hermite64, _plain_datum(hermite64), 50.0,
                           weight_k=2.0, num_samples=50, refine_check=True)
    assert rep.fitted_exponent is not None


def test_underresolved_grid_raises(spec_bgk, hermite64):
    coarse = WholeSpaceGeometry(xi_max=16.0, n=24)
    with pytest.raises(EvolutionError):
        wholespace_solve(spec_bgk, hermite64, _plain_datum(hermite64), 200.0,
                         weight_k=2.0, geometry=coarse, refine_check=True)


@pytest.mark.parametrize("ell", [0, 1, 2])
def test_cancelling_datum_moments(ell, hermite64):
    datum = build_cancelling_datum(ell, hermite64)
    moments = datum_moments(datum, hermite64, ell)
    assert max(abs(v) for v in moments.values()) < 1e-10
    # moments of order ell + 1 do not all vanish (the datum is not trivial)
    higher = datum_moments(datum, hermite64, ell + 1)
    assert max(abs(v) for v in higher.values()) > 1e-6


def test_cancelling_datum_rejects_bad_coefficients(hermite64):
    # a constant-in-x term reinstates the mass moment
    bad = SeparableDatum(terms=((XProfile(0), _hermite_v_coeffs(hermite64, 0)),))
    moments = datum_moments(bad, hermite64, 0)
    assert abs(moments[(0, 0)]) > 0.9


def test_plancherel_consistency(spec_bgk, hermite64):
    """Mode-sum norm against direct (x, v) quadrature for band-limited data."""
    eq = build_equilibrium(spec_bgk)
    geom = WholeSpaceGeometry(xi_max=12.0, n=512)
    datum = _plain_datum(hermite64)
    traj = WholespaceTrajectory(spec_bgk, hermite64, geom, datum, 1.0, num_samples=1)
    for t, modes in traj:
        if t == 0.0:
            x = np.linspace(-30.0, 30.0, 3001)
            v = np.linspace(-9.0, 9.0, 1201)
            f = reconstruct_on_grid(modes, traj.xi_grid, traj.weights,
                                    hermite64, eq, x, v)
            hx, hv = x[1] - x[0], v[1] - v[0]
            gamma = (1.0 + v**2)
            direct = float(np.sum(f**2 * gamma[None, :]) * hx * hv)
            plancherel = traj.squared_norm(modes, 2.0)
            assert direct == pytest.approx(plancherel, rel=1e-6)


@pytest.mark.slow
def test_improved_rates_and_control(spec_fp, hermite64):
    rep0 = improved_decay_check(spec_fp, hermite64, 0, 200.0)
    assert rep0.passed and rep0.fitted_exponent == pytest.approx(-1.5, rel=0.10)
    rep1 = improved_decay_check(spec_fp, hermite64, 1, 200.0)
    assert rep1.passed and rep1.fitted_exponent == pytest.approx(-2.5, rel=0.10)
    ctrl = improved_decay_check(spec_fp, hermite64, 0, 200.0, cancelling=False)
    assert ctrl.passed and ctrl.fitted_exponent == pytest.approx(-0.5, rel=0.10)
    # moment gate: cancellation buys at least one extra unit of decay
    assert rep0.fitted_exponent < ctrl.fitted_exponent - 0.8


@pytest.mark.slow
def test_improved_rate_second_order(spec_fp, hermite64):
    # xi^6-weighted tails need the doubled frequency grid at this horizon
    rep = improved_decay_check(spec_fp, hermite64, 2, 200.0,
                               geometry=WholeSpaceGeometry(16.0, 1024))
    assert rep.passed and rep.fitted_exponent == pytest.approx(-3.5, rel=0.10)


@pytest.mark.slow
def test_improved_rates_bgk(spec_bgk, hermite64):
    rep0 = improved_decay_check(spec_bgk, hermite64, 0, 200.0)
    assert rep0.passed and rep0.fitted_exponent == pytest.approx(-1.5, rel=0.10)


def test_norm_monotone_after_transient(spec_bgk, hermite64):
    rep = wholespace_solve(spec_bgk, hermite64, _plain_datum(hermite64), 50.0,
                           weight_k=2.0, num_samples=100)
    series = rep.primary_series()
    after = rep.times >= 1.0
    diffs = np.diff(series[after])
    assert np.all(diffs <= 1e-12 * series[0])


def test_moment_ledger_conservation(spec_fp, hermite64):
    datum = build_cancelling_datum(1, hermite64)
    ledger = moment_ledger_evolution(spec_fp, hermite64, datum, ell=1, horizon=10.0)
    assert ledger.max_scalar_drift(1) <= 1e-8
    assert not ledger.violations
    # the moment profiles decay hard by t = 10
    for a, series in ledger.profiles.items():
        n0 = np.linalg.norm(series[0])
        if n0 > 0:
            assert np.linalg.norm(series[-1]) <= 1e-3 * n0


def test_moment_ledger_detects_drift(spec_fp, hermite64):
    # a non-cancelling datum keeps its mass, which the ledger reports
    datum = _plain_datum(hermite64)
    ledger = moment_ledger_evolution(spec_fp, hermite64, datum, ell=0, horizon=5.0)
    assert abs(ledger.scalars[(0, 0)][0]) > 0.9
    assert np.abs(ledger.scalars[(0, 0)] - ledger.scalars[(0, 0)][0]).max() < 1e-10


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("ell", [0, 1, 2])
def test_telescoping_identity(ell, d):
    assert telescoping_residual(ell, d) == 0
