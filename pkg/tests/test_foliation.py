"""Tests for the profile-curve ODE: radicand values, the first-integral
identity, RK4 convergence order, termination handling, and the round trip
through a table-backed model space (leaf criterion and bitension).

Numeric bounds on drift and leafwise criteria were frozen from measured
runs with generous headroom; the convergence-order assertions (>= 8x per
step halving for a fourth-order scheme) are the real teeth.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kappamu import foliation as fo
from kappamu.biharmonic import AntiInvariantSurface, surface_bitension
from kappamu.jets import ConstantFamily, DomainError
from kappamu.manifold import ModelSpace, Sign

PLUS, MINUS = Sign.PLUS, Sign.MINUS


def params(beta, sign, branch="decreasing", span=0.3, step=1e-3, lam0=1.0, **kw):
    return fo.FoliationParams(beta, sign, lam0, step=step, span=span, branch=branch, **kw)


# --- radicand -------------------------------------------------------------


def test_radicand_at_unit_profile():
    # log term vanishes at lambda = 1, leaving beta -+ 32 - 8
    assert fo.foliation_rhs(1.0, params(3.5, MINUS)) == pytest.approx(3.5 + 24.0)
    assert fo.foliation_rhs(1.0, params(3.5, PLUS)) == pytest.approx(3.5 - 40.0)


def test_radicand_negative_near_zero():
    # the -8 lam^2 term dominates both quartic terms and the cubic one
    for beta in (-50.0, 0.0, 50.0):
        for sign in (PLUS, MINUS):
            assert fo.foliation_rhs(1e-3, params(beta, sign)) < 0.0


def test_radicand_rejects_nonpositive_profile():
    p = params(10.0, MINUS)
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            fo.foliation_rhs(bad, p)
        with pytest.raises(DomainError):
            fo.rhs_derivative(bad, p)


def test_params_validation():
    with pytest.raises(ValueError):
        params(1.0, MINUS, step=0.0)
    with pytest.raises(ValueError):
        params(1.0, MINUS, span=-1.0)
    with pytest.raises(ValueError):
        params(1.0, MINUS, branch="sideways")
    with pytest.raises(DomainError):
        params(1.0, MINUS, lam0=0.0)


@settings(max_examples=60, deadline=None)
@given(
    lam=st.floats(0.2, 3.0),
    beta=st.floats(-30.0, 50.0),
    sign=st.sampled_from([PLUS, MINUS]),
)
def test_radicand_derivative_matches_finite_difference(lam, beta, sign):
    p = params(beta, sign)
    h = 1e-6
    fd = (fo.foliation_rhs(lam + h, p) - fo.foliation_rhs(lam - h, p)) / (2.0 * h)
    exact = fo.rhs_derivative(lam, p)
    assert abs(exact - fd) <= 1e-7 * max(1.0, abs(exact))


def test_first_integral_identity_vanishes():
    # substituting lam'' = G'/2 and lam'^2 = G into the leaf criterion
    # cancels everything; the float residual is pure rounding
    for beta in (-23.0, 0.0, 25.0, 100.0):
        for sign in (PLUS, MINUS):
            p = params(beta, sign)
            s = sign.s
            for k in range(81):
                lam = 0.05 + 4.95 * k / 80.0
                g = fo.foliation_rhs(lam, p)
                half_lam_gp = 0.5 * lam * fo.rhs_derivative(lam, p)
                resid = half_lam_gp - 2.0 * g - 8.0 * lam**2 * (1.0 + s * lam) ** 2
                scale = max(1.0, abs(half_lam_gp), 2.0 * abs(g))
                assert abs(resid) <= 1e-9 * scale


# --- integration ----------------------------------------------------------


def test_empty_solution_when_radicand_nonpositive_at_start():
    for beta in (-100.0, -24.0):  # G(1) = beta + 24 for the minus choice
        sol = fo.integrate_foliation(params(beta, MINUS, span=1.0))
        assert sol.empty
        assert sol.termination == "rhs_nonpositive"
        assert sol.invariant_drift() == 0.0
        assert sol.csv_rows() == []


def test_initial_sample_and_branch_direction():
    # beta = 25, minus: G(1) = 49, so the slope starts at exactly +-7
    for branch, sgn in (("increasing", 1.0), ("decreasing", -1.0)):
        sol = fo.integrate_foliation(
            fo.FoliationParams(25.0, MINUS, 1.0, z0=2.0, step=1e-3, span=0.05, branch=branch)
        )
        z0, lam0, v0 = sol.samples[0]
        assert (z0, lam0) == (2.0, 1.0)
        assert v0 == pytest.approx(sgn * 7.0, abs=1e-14)
        lams = [s.lam for s in sol.samples]
        assert all(b > 0.0 for b in lams)
        deltas = [b - a for a, b in zip(lams, lams[1:])]
        assert all(sgn * d > 0.0 for d in deltas)
        zs = [s.z for s in sol.samples]
        assert all(b > a for a, b in zip(zs, zs[1:]))


def test_termination_span_exhausted():
    sol = fo.integrate_foliation(params(25.0, MINUS, span=0.15))
    assert sol.termination == "span_exhausted"
    assert len(sol.samples) == 151
    assert sol.samples[-1].z == pytest.approx(0.15)


def test_termination_at_turning_point():
    # decreasing branch runs into the radicand's zero near lam ~ 0.245
    # and must stop there instead of switching branch
    sol = fo.integrate_foliation(params(25.0, MINUS, span=2.0))
    assert sol.termination == "rhs_nonpositive"
    last = sol.samples[-1]
    assert 0.24 < last.lam < 0.25
    g_last = fo.foliation_rhs(last.lam, sol.params)
    assert 0.0 < g_last < 1e-4  # stopped essentially on the turning point


def test_termination_lambda_nonpositive_on_coarse_step():
    # a giant step drives the profile through zero inside one RK4 stage
    sol = fo.integrate_foliation(params(25.0, MINUS, span=3.0, step=1.0))
    assert sol.termination == "lambda_nonpositive"
    assert len(sol.samples) == 1  # only the initial sample survives


def test_termination_cap_guard_on_blowup():
    # increasing branch with beta = -23 blows up in finite z; the guard
    # stops the run instead of chasing it toward float overflow
    sol = fo.integrate_foliation(
        params(-23.0, MINUS, branch="increasing", span=0.8, lambda_cap=50.0)
    )
    assert sol.termination == "lambda_cap_reached"
    assert all(s.lam < 50.0 for s in sol.samples)
    assert not sol.empty


def test_drift_is_small_and_fourth_order():
    sol = fo.integrate_foliation(params(25.0, MINUS, span=0.15))
    drift = sol.invariant_drift()
    assert drift < 1e-7
    half = fo.integrate_foliation(params(25.0, MINUS, span=0.15, step=5e-4))
    assert drift / half.invariant_drift() > 8.0  # measured ~16x


def test_drift_budget_on_tame_run():
    # the headline budget: < 1e-8 drift per unit z at the default step
    sol = fo.integrate_foliation(params(-10.0, MINUS, span=0.6))
    zspan = sol.samples[-1].z - sol.samples[0].z
    assert sol.invariant_drift() / zspan < 1e-8


def test_criterion_along_is_twice_the_signed_drift():
    sol = fo.integrate_foliation(params(25.0, MINUS, span=0.15))
    crit = sol.criterion_along()
    for f, sample in zip(crit, sol.samples):
        g = fo.foliation_rhs(sample.lam, sol.params)
        gap = sample.lam_prime**2 - g
        scale = max(1.0, abs(g))
        assert abs(f + 2.0 * gap) <= 1e-9 * scale
    assert max(abs(f) for f in crit) <= 2.0 * sol.invariant_drift() + 1e-12


def test_csv_rows_schema():
    sol = fo.integrate_foliation(params(25.0, MINUS, span=0.05))
    rows = sol.csv_rows()
    assert len(rows) == len(sol.samples)
    z0, lam0, v0, g0, f0 = rows[0]
    assert (z0, lam0, v0) == (0.0, 1.0, -7.0)
    assert g0 == pytest.approx(49.0)
    assert abs(f0) <= 1e-10
    assert all(len(r) == 5 and r[3] > 0.0 for r in rows)


# --- round trip through the verification pipeline --------------------------


def test_solution_family_tracks_samples():
    sol = fo.integrate_foliation(params(25.0, MINUS, span=0.1))
    fam = fo.solution_family(sol)
    assert fam.domain == (sol.samples[0].z, sol.samples[-1].z)
    mid = sol.samples[len(sol.samples) // 2]
    jet = fam.jet(mid.z)
    assert jet.v0 == pytest.approx(mid.lam, abs=1e-10)
    assert jet.v1 == pytest.approx(mid.lam_prime, abs=1e-6)
    space = fo.space_from_solution(sol)
    assert space.sign is MINUS


def test_solution_family_needs_enough_samples():
    sol = fo.integrate_foliation(params(25.0, MINUS, span=4e-3))
    assert len(sol.samples) < 6
    with pytest.raises(ValueError):
        fo.solution_family(sol)
    with pytest.raises(ValueError):
        fo.interior_samples(sol)


@pytest.mark.parametrize(
    "beta,sign,span",
    [(-10.0, MINUS, 0.6), (41.0, PLUS, 0.2), (40.5, PLUS, 0.3)],
)
def test_first_integral_verified_through_table_family(beta, sign, span):
    sol = fo.integrate_foliation(params(beta, sign, span=span))
    space = fo.space_from_solution(sol)
    cs = fo.interior_samples(sol)
    max_f = fo.verify_first_integral(space, cs)
    assert max_f < 5e-7

    half = fo.integrate_foliation(params(beta, sign, span=span, step=5e-4))
    max_f_half = fo.verify_first_integral(
        fo.space_from_solution(half), fo.interior_samples(half)
    )
    assert max_f / max_f_half >= 8.0  # measured ~14x


def test_fake_constant_profile_is_flagged():
    # a constant profile is *not* a solution unless the criterion happens
    # to vanish; the verifier must see |F| = 8 lam^2 (1 + s lam)^2
    space = ModelSpace(ConstantFamily(1.0), PLUS)
    assert fo.verify_first_integral(space, [0.1, 0.5, 0.9]) == pytest.approx(32.0)
    space = ModelSpace(ConstantFamily(1.5), MINUS)
    assert fo.verify_first_integral(space, [0.3]) == pytest.approx(4.5)


def test_bitension_spot_checks_on_integrated_leaves():
    sol = fo.integrate_foliation(params(41.0, PLUS, span=0.2))
    space = fo.space_from_solution(sol)
    cs = fo.interior_samples(sol)
    picks = [cs[int(i * (len(cs) - 1) / 4)] for i in range(5)]
    for c in picks:
        norm = surface_bitension(space, AntiInvariantSurface(c)).norm()
        assert norm < 1e-6
