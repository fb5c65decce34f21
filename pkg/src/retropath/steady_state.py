"""No-policy stationary equilibrium.

The stationary system reduces almost entirely to closed forms: the Euler
equations pin the rental rates, unit-cost conditions pin all prices, and the
remaining unknowns collapse to a single equation in housing capital. The
reduction supplies the starting point for a damped Newton polish on the full
ten-equation stationary block, so the returned point satisfies every
first-order condition and market-clearing equation to near machine precision.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, SolverError
from .functions import (ces_gradient, composite_energy_price, energy_split,
                        evaluate_ces, housing_energy_requirement,
                        housing_services, utility)
from .params import ModelParameters
from .structures import MultiplierSet, PeriodAllocation, PriceSystem, SteadyState

_VAR_NAMES = ("c", "k_Y", "k_F", "k_N", "k_H", "k_E", "E_Y", "e", "res", "res_F")


def _dual_price(share, p1, p2, sigma):
    """Unit cost of a CES aggregate at input prices (p1, p2)."""
    return (share ** sigma * p1 ** (1.0 - sigma)
            + (1.0 - share) ** sigma * p2 ** (1.0 - sigma)) ** (1.0 / (1.0 - sigma))


def stationary_prices(params: ModelParameters, A_N: float | None = None) -> PriceSystem:
    """Prices implied by stationarity: rental rates from the Euler equations,
    output prices from zero-profit unit-cost conditions."""
    p = params
    A_N = p.A_N0 if A_N is None else A_N
    R = p.rho + p.delta_Y
    R_F = p.rho + p.delta_F
    R_N = p.rho + p.delta_N
    p_F = _dual_price(p.a_F, R_F, p.p_R, p.sigma_F)
    p_N = R_N / A_N
    p_E = _dual_price(p.a_E, p_F, p_N, p.sigma_E)
    p_ene = composite_energy_price(p_E, p.p_R, p)
    # final-good unit cost = 1 pins the composite cost, hence the wage
    c_Z = ((1.0 - (1.0 - p.a) ** p.sigma * p_E ** (1.0 - p.sigma))
           / p.a ** p.sigma) ** (1.0 / (1.0 - p.sigma))
    w = (1.0 - p.a_Z) * p.A_Y0 * (c_Z / (R / p.a_Z) ** p.a_Z) ** (1.0 / (1.0 - p.a_Z))
    return PriceSystem(p_E=p_E, p_F=p_F, p_N=p_N, p_ene=p_ene,
                       R=R, R_F=R_F, R_N=R_N, w=w), c_Z


def _reduction(params: ModelParameters):
    """Closed-form chain down to a single equation in housing capital."""
    p = params
    prices, c_Z = stationary_prices(p)
    labor = p.labor
    land = p.land
    # production side pinned by labor
    Z = prices.w * labor / ((1.0 - p.a_Z) * c_Z)
    Y = Z / (p.a ** p.sigma * c_Z ** (-p.sigma))
    k_Y = p.a_Z * c_Z * Z / prices.R
    e_Y = Y * (1.0 - p.a) ** p.sigma * prices.p_E ** (-p.sigma)
    # retrofit stock from its Euler equation
    k_E = np.sqrt(prices.p_ene * p.kappa_bar * p.k_bar / (p.rho + p.delta_E))
    # demand and supply ratios at stationary prices
    se = p.a_ene ** p.sigma_ene * (prices.p_ene / prices.p_E) ** p.sigma_ene
    sr = (1.0 - p.a_ene) ** p.sigma_ene * (prices.p_ene / p.p_R) ** p.sigma_ene
    fE = p.a_E ** p.sigma_E * (prices.p_E / prices.p_F) ** p.sigma_E
    nE = (1.0 - p.a_E) ** p.sigma_E * (prices.p_E / prices.p_N) ** p.sigma_E
    rf_per_eF = ((1.0 - p.a_F) * prices.p_F / p.p_R) ** p.sigma_F
    kf_per_eF = (p.a_F * prices.p_F / prices.R_F) ** p.sigma_F

    def point(k_H):
        ene = housing_energy_requirement(k_E, k_H, p)
        e, res = se * ene, sr * ene
        E = e_Y + e
        e_F, e_N = fE * E, nE * E
        res_F, k_F = rf_per_eF * e_F, kf_per_eF * e_F
        k_N = e_N / p.A_N0
        h = housing_services(land, k_H, p)
        c = (Y - p.delta_Y * k_Y - p.delta_F * k_F - p.delta_N * k_N
             - p.delta_H * k_H - p.delta_E * k_E - p.delta_H * p.k_bar
             - p.p_R * (res + res_F))
        return dict(ene=ene, e=e, res=res, E=E, e_F=e_F, e_N=e_N, res_F=res_F,
                    k_F=k_F, k_N=k_N, h=h, c=c)

    def housing_foc(k_H):
        q = point(k_H)
        if q["c"] <= 0 or q["h"] <= p.h_bar:
            return 1e8  # infeasible side; large finite value keeps brentq usable
        chi_over_lam = ((1.0 - p.phi) / p.phi) * q["c"] / (q["h"] - p.h_bar)
        marginal_value = chi_over_lam * (1.0 - p.a_h) * q["h"] / (p.k_bar + k_H)
        return (p.rho + p.delta_H) + prices.p_ene * p.kappa_N - marginal_value

    lo, hi = 1e-8 * p.k_bar, 100.0 * p.k_bar
    flo = housing_foc(lo)
    fhi = housing_foc(hi)
    for _ in range(20):  # expand until the marginal value falls below the cost
        if fhi > 0:
            break
        hi *= 4.0
        fhi = housing_foc(hi)
    if flo >= 0 or fhi <= 0:
        raise SolverError("stationary housing FOC has no admissible root; "
                          "check parameter values", residual_norm=np.inf)
    k_H = brentq(housing_foc, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    q = point(k_H)
    z = np.array([q["c"], k_Y, q["k_F"], q["k_N"], k_H, k_E,
                  e_Y, q["e"], q["res"], q["res_F"]])
    return z, prices


def stationary_residuals(z: np.ndarray, params: ModelParameters) -> np.ndarray:
    """Ten stationary equilibrium conditions at quantities ``z``.

    z = (c, k_Y, k_F, k_N, k_H, k_E, E_Y, e, res, res_F), per household.
    """
    p = params
    c, k_Y, k_F, k_N, k_H, k_E, e_Y, e, res, res_F = z
    beta = p.beta
    labor, land = p.labor, p.land

    h = housing_services(land, k_H, p)
    ene_req = housing_energy_requirement(k_E, k_H, p)
    Z = k_Y ** p.a_Z * (p.A_Y0 * labor) ** (1.0 - p.a_Z)
    Y = evaluate_ces(p.a, Z, e_Y, p.sigma)
    dY_dZ, p_E = ces_gradient(p.a, Z, e_Y, p.sigma)
    R = dY_dZ * p.a_Z * Z / k_Y
    e_F = evaluate_ces(p.a_F, k_F, res_F, p.sigma_F)
    e_N = p.A_N0 * k_N
    E = evaluate_ces(p.a_E, e_F, e_N, p.sigma_E)
    dE_dEF, dE_dEN = ces_gradient(p.a_E, e_F, e_N, p.sigma_E)
    p_F, p_N = p_E * dE_dEF, p_E * dE_dEN
    dEF_dKF, dEF_dRF = ces_gradient(p.a_F, k_F, res_F, p.sigma_F)
    R_F = p_F * dEF_dKF
    R_N = p_N * p.A_N0
    _, lam, chi = utility(c, h, p)
    q_e, q_r = ces_gradient(p.a_ene, e, res, p.sigma_ene)
    nu = lam * p_E / q_e

    return np.array([
        Y - c
        - p.delta_Y * k_Y - p.delta_F * k_F - p.delta_N * k_N
        - p.delta_H * k_H - p.delta_E * k_E - p.delta_H * p.k_bar
        - p.p_R * (res + res_F),                          # resource constraint
        evaluate_ces(p.a_ene, e, res, p.sigma_ene) - ene_req,
        p_E * q_r - p.p_R * q_e,                          # household e/res mix
        p_F * dEF_dRF - p.p_R,                            # fossil-firm resource FOC
        e_Y + e - E,                                      # electricity clearing
        1.0 - beta * (R + 1.0 - p.delta_Y),               # Euler k_Y
        1.0 - beta * (R_F + 1.0 - p.delta_F),             # Euler k_F
        1.0 - beta * (R_N + 1.0 - p.delta_N),             # Euler k_N
        lam * (p.rho + p.delta_H)
        - (chi * (1.0 - p.a_h) * h / (p.k_bar + k_H) - nu * p.kappa_N),
        lam * (p.rho + p.delta_E)
        - nu * p.kappa_bar * p.k_bar / k_E ** 2,
    ])


def _fd_jacobian(fun, z, f0):
    J = np.empty((len(f0), len(z)))
    for j in range(len(z)):
        step = 1e-7 * max(abs(z[j]), 1e-3)
        zp = z.copy()
        zp[j] += step
        J[:, j] = (fun(zp) - f0) / step
    return J


def solve_steady_state(params: ModelParameters, tol: float = 1e-12,
                       max_iter: int = 60) -> SteadyState:
    """Solve the stationary no-policy equilibrium.

    Raises SolverError on Newton failure (carrying the final residual norm)
    and DomainError if the stationary point violates the housing subsistence
    level.
    """
    z, _ = _reduction(params)
    fun = lambda zz: stationary_residuals(zz, params)
    f = fun(z)
    norm = np.max(np.abs(f))
    for _ in range(max_iter):
        if norm <= tol:
            break
        J = _fd_jacobian(fun, z, f)
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular stationary Jacobian: {exc}",
                              residual_norm=norm) from exc
        lam_ls = 1.0
        for _ in range(40):
            z_new = z + lam_ls * step
            if np.all(z_new > 0):
                try:
                    f_new = fun(z_new)
                except DomainError:
                    f_new = None
                if f_new is not None and np.max(np.abs(f_new)) < norm:
                    break
            lam_ls *= 0.5
        else:
            raise SolverError("stationary Newton line search stalled",
                              residual_norm=norm)
        z, f = z_new, f_new
        norm = np.max(np.abs(f))
    else:
        raise SolverError(
            f"stationary Newton did not reach tolerance {tol}",
            residual_norm=norm)

    c, k_Y, k_F, k_N, k_H, k_E, e_Y, e, res, res_F = z
    p = params
    h = housing_services(p.land, k_H, p)
    if h <= p.h_bar:
        raise DomainError("stationary point violates the housing subsistence level")

    prices, _ = stationary_prices(p)
    ene = housing_energy_requirement(k_E, k_H, p)
    _, lam, chi = utility(c, h, p)
    q_e, _ = ces_gradient(p.a_ene, e, res, p.sigma_ene)
    nu = lam * prices.p_E / q_e
    e_F = evaluate_ces(p.a_F, k_F, res_F, p.sigma_F)
    e_N = p.A_N0 * k_N
    E = evaluate_ces(p.a_E, e_F, e_N, p.sigma_E)
    Z = k_Y ** p.a_Z * (p.A_Y0 * p.labor) ** (1.0 - p.a_Z)
    Y = evaluate_ces(p.a, Z, e_Y, p.sigma)

    land_rent = (chi / lam) * p.a_h * h          # imputed, per household
    land_price = land_rent / (p.rho * p.land)    # asset price per land unit

    alloc = PeriodAllocation(
        c=c, h=h, ene=ene, e=e, res=res,
        i_Y=p.delta_Y * k_Y, i_F=p.delta_F * k_F, i_N=p.delta_N * k_N,
        i_H=p.delta_H * k_H, i_E=p.delta_E * k_E,
        k_Y=k_Y, k_F=k_F, k_N=k_N, k_H=k_H, k_E=k_E, land=p.land,
        Y=Y, Z=Z, L=p.labor, E=E, E_Y=e_Y, E_F=e_F, E_N=e_N,
        K_Y=p.n * k_Y, K_F=p.n * k_F, K_N=p.n * k_N, Res_F=p.n * res_F,
    )
    mult = MultiplierSet(
        lam=lam, chi=chi, nu_e=nu, nu_ene=nu,
        psi=lam, psi_F=lam, psi_N=lam, psi_H=lam, psi_E=lam,
        phi_H=0.0, phi_E=0.0, mu_R=0.0, mu=0.0,
        chi_Y=lam * prices.p_E, chi_E=lam * prices.p_E,
        chi_F=lam * prices.p_F, chi_N=lam * prices.p_N,
    )
    J = _fd_jacobian(fun, z, fun(z))
    min_sv = float(np.linalg.svd(J, compute_uv=False)[-1])

    income = prices.w * p.labor + prices.R * k_Y + prices.R_F * k_F + prices.R_N * k_N
    housing_energy = (chi / lam) * h + prices.p_ene * ene

    return SteadyState(
        allocation=alloc, prices=prices, multipliers=mult,
        land_price=land_price, residual_norm=float(norm),
        jacobian_min_singular_value=min_sv,
        disposable_income=income, housing_energy_expenditure=housing_energy,
        diagnostics={"iterations": max_iter, "residual_norm": float(norm)},
    )
