import numpy as np
import pytest

from retropath import DomainError, ModelParameters, SolverError, solve_steady_state
from retropath.steady_state import stationary_residuals

P = ModelParameters()


def _state_vector(ss):
    a = ss.allocation
    return np.array([a.c, a.k_Y, a.k_F, a.k_N, a.k_H, a.k_E,
                     a.E_Y, a.e, a.res, a.Res_F / P.n])


def test_rental_rate_euler_identity(steady, calibrated):
    assert steady.prices.R == pytest.approx(calibrated.rho + calibrated.delta_Y, abs=1e-10)
    assert steady.prices.R == pytest.approx(0.12, abs=1e-10)


def test_sector_rental_rates_equal(steady):
    assert steady.prices.R_F == pytest.approx(steady.prices.R, abs=1e-10)
    assert steady.prices.R_N == pytest.approx(steady.prices.R, abs=1e-10)


def test_residuals_below_tolerance(steady, calibrated):
    a = steady.allocation
    z = np.array([a.c, a.k_Y, a.k_F, a.k_N, a.k_H, a.k_E,
                  a.E_Y, a.e, a.res, a.Res_F / calibrated.n])
    r = stationary_residuals(z, calibrated)
    assert np.max(np.abs(r)) < 1e-10


def test_steady_state_at_default_parameters():
    ss = solve_steady_state(P)
    assert ss.residual_norm < 1e-10
    a = ss.allocation
    assert a.h > P.h_bar
    assert min(a.c, a.k_Y, a.k_F, a.k_N, a.k_H, a.k_E, a.e, a.res) > 0


def test_stationary_investment_positive(steady, calibrated):
    a = steady.allocation
    assert a.i_Y == pytest.approx(calibrated.delta_Y * a.k_Y, rel=1e-12)
    assert a.i_H == pytest.approx(calibrated.delta_H * a.k_H, rel=1e-12)
    assert min(a.i_Y, a.i_F, a.i_N, a.i_H, a.i_E) > 0


def test_local_uniqueness(steady):
    # stationary Jacobian is nonsingular at the solution
    assert steady.jacobian_min_singular_value > 1e-6


def test_household_budget_walras(steady, calibrated):
    # budget not part of the solved stack; must hold by Walras' law
    a, pr = steady.allocation, steady.prices
    p = calibrated
    spending = (a.c + a.i_Y + a.i_F + a.i_N + a.i_H + a.i_E
                + p.delta_H * p.k_bar + pr.p_E * a.e + p.p_R * a.res)
    income = pr.w * p.labor + pr.R * a.k_Y + pr.R_F * a.k_F + pr.R_N * a.k_N
    assert spending == pytest.approx(income, abs=1e-10)


def test_energy_expenditure_duality(steady):
    a, pr = steady.allocation, steady.prices
    assert pr.p_E * a.e + ModelParameters().p_R * a.res == pytest.approx(
        pr.p_ene * a.ene, rel=1e-10)


def test_infeasible_subsistence_raises():
    with pytest.raises((SolverError, DomainError)):
        solve_steady_state(P.replace(h_bar=1e4))
