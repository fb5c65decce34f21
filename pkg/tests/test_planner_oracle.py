"""Small-horizon planner verification against a direct NLP oracle.

The transition solver (Newton on stacked first-order conditions, exact-KKT
terminal closure) must agree with a generic constrained maximizer applied to
the same finite program over every decision variable.
"""
import math

import numpy as np
import pytest
from scipy.optimize import NonlinearConstraint, minimize

from retropath import technology_paths
from retropath.functions import evaluate_ces, housing_services, utility
from retropath.policies import PolicyInstruments
from retropath.transition import SolverOptions, TransitionProblem, solve_transition

T = 3
NPER = 10  # c, E_Y, e, res, res_F, i_Y, i_F, i_N, i_H, i_E


def _stocks(steady):
    a = steady.allocation
    return {"k_Y": a.k_Y, "k_F": a.k_F, "k_N": a.k_N, "k_H": a.k_H, "k_E": a.k_E}


def _unpack(z, k0):
    per = z[: NPER * (T + 1)].reshape(T + 1, NPER).copy()
    ks = z[NPER * (T + 1):].reshape(T, 5)
    K = np.vstack([np.array(k0)[None, :], ks])  # K[t, j], t = 0..T
    # finite-difference probes may step below the bounds; clamp the
    # quantities that enter CES aggregates and utility
    per[:, :5] = np.maximum(per[:, :5], 1e-10)
    K = np.maximum(K, 1e-10)
    return per, K


def _oracle(problem, steady):
    """Direct maximization of discounted utility subject to all constraints."""
    p = problem.params
    tech = problem.tech
    beta = p.beta
    k0 = [problem.initial_stocks[k] for k in ("k_Y", "k_F", "k_N", "k_H", "k_E")]
    deltas = np.array([p.delta_Y, p.delta_F, p.delta_N, p.delta_H, p.delta_E])
    M0_hh = problem.M0 / p.n

    def neg_welfare(z):
        per, K = _unpack(z, k0)
        total = 0.0
        for t in range(T + 1):
            h = housing_services(p.land, K[t, 3], p)
            u, _, _ = utility(per[t, 0], h, p)
            total += beta ** t * u
        return -total

    def constraints(z):
        per, K = _unpack(z, k0)
        out = []
        for t in range(T + 1):
            c, eY, e, res, resF = per[t, :5]
            inv = per[t, 5:]
            Z = K[t, 0] ** p.a_Z * (tech.A_Y[t] * p.labor) ** (1.0 - p.a_Z)
            Y = evaluate_ces(p.a, Z, eY, p.sigma)
            eF = evaluate_ces(p.a_F, K[t, 1], resF, p.sigma_F)
            eN = tech.A_N[t] * K[t, 2]
            E = evaluate_ces(p.a_E, eF, eN, p.sigma_E)
            ene_req = (p.kappa_bar / K[t, 4] + p.kappa_N) * p.k_bar + p.kappa_N * K[t, 3]
            out.append(Y - c - inv.sum() - p.delta_H * p.k_bar - p.p_R * (res + resF))
            out.append(eY + e - E)
            out.append(evaluate_ces(p.a_ene, e, res, p.sigma_ene) - ene_req)
        for t in range(T):
            for j in range(5):
                out.append(per[t, 5 + j] + (1.0 - deltas[j]) * K[t, j] - K[t + 1, j])
        for j in range(5):  # terminal stationarity
            out.append(per[T, 5 + j] - deltas[j] * K[T, j])
        per_all, _ = per, None
        emissions = per[:, 3].sum() + per[:, 4].sum()
        out.append(emissions - M0_hh)
        return np.array(out)

    a = steady.allocation
    z0 = np.empty(NPER * (T + 1) + 5 * T)
    per0 = np.array([a.c, a.E_Y, a.e, a.res, a.Res_F / problem.params.n,
                     a.i_Y, a.i_F, a.i_N, a.i_H, a.i_E])
    for t in range(T + 1):
        z0[t * NPER:(t + 1) * NPER] = per0
    for t in range(T):
        z0[NPER * (T + 1) + 5 * t: NPER * (T + 1) + 5 * (t + 1)] = \
            [a.k_Y, a.k_F, a.k_N, a.k_H, a.k_E]

    lb = np.full(z0.size, -np.inf)
    ub = np.full(z0.size, np.inf)
    for t in range(T + 1):
        lb[t * NPER + 0] = 1e-6          # consumption
        lb[t * NPER + 1: t * NPER + 5] = 1e-9   # flows
        lb[t * NPER + 8] = 0.0           # irreversible housing investment
        lb[t * NPER + 9] = 0.0           # irreversible retrofit investment
    lb[NPER * (T + 1):] = 1e-6           # stocks

    ncon = NonlinearConstraint(constraints, 0.0, 0.0)
    sol = minimize(neg_welfare, z0, method="trust-constr",
                   constraints=[ncon], bounds=list(zip(lb, ub)),
                   options={"gtol": 1e-12, "xtol": 1e-14, "maxiter": 3000,
                            "initial_constr_penalty": 10.0})
    assert sol.constr_violation < 1e-9, f"oracle infeasible: {sol.constr_violation:.2e}"
    per, K = _unpack(sol.x, k0)
    return per, K, -sol.fun


@pytest.fixture(scope="module")
def tiny_problem(calibrated, steady):
    tech = technology_paths(calibrated, horizon=T)
    a = steady.allocation
    # budget tight enough to bind over four periods
    free = 4 * (a.res + a.Res_F / calibrated.n)
    return TransitionProblem(
        params=calibrated, tech=tech, policy=PolicyInstruments.none(T),
        initial_stocks=_stocks(steady), M0=0.9 * free * calibrated.n,
        mode="uniform_tax", terminal="nlp_kkt")


def test_small_horizon_matches_brute_force(tiny_problem, steady):
    import time
    t0 = time.time()
    traj, diag = solve_transition(tiny_problem)
    per, K, welfare = _oracle(tiny_problem, steady)
    elapsed = time.time() - t0
    assert elapsed < 60.0

    assert diag.converged
    # allocations agree to 1e-5 (relative, scaled by each series' magnitude)
    series = {
        "c": per[:, 0], "E_Y": per[:, 1], "e": per[:, 2],
        "res": per[:, 3], "i_Y": per[:, 5], "i_H": per[:, 8], "i_E": per[:, 9],
    }
    for name, oracle_vals in series.items():
        mine = traj[name]
        scale = max(1.0, float(np.max(np.abs(oracle_vals))))
        worst = float(np.max(np.abs(mine - oracle_vals))) / scale
        assert worst < 1e-5, f"{name}: |solver - oracle| = {worst:.2e}"
    for j, name in enumerate(("k_Y", "k_F", "k_N", "k_H", "k_E")):
        mine = traj[name][1:]
        oracle_vals = K[1:, j]
        scale = max(1.0, float(np.max(np.abs(oracle_vals))))
        worst = float(np.max(np.abs(mine - oracle_vals))) / scale
        assert worst < 1e-5, f"{name}: {worst:.2e}"
    # resource budget binds in both
    assert traj["emissions"].sum() / tiny_problem.params.n == pytest.approx(
        tiny_problem.M0 / tiny_problem.params.n, rel=1e-10)


def test_oracle_welfare_not_exceeded(tiny_problem, steady):
    """The KKT path cannot beat the direct maximizer by more than round-off."""
    from retropath.functions import utility as u_fn

    traj, _ = solve_transition(tiny_problem)
    p = tiny_problem.params
    w_solver = sum(p.beta ** t * u_fn(traj["c"][t], traj["h"][t], p)[0]
                   for t in range(T + 1))
    _, _, w_oracle = _oracle(tiny_problem, steady)
    assert w_solver <= w_oracle + 1e-7
    assert w_solver == pytest.approx(w_oracle, abs=1e-7)
