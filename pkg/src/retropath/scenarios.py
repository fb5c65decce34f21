"""The four policy experiments and their budget plumbing.

All scenarios share one carbon-budget level: the first-best total is chosen
so that cumulative emissions over the first thirty reporting periods fall to
a configured share (default one half) of the no-policy level over the same
window (``cumulative30`` rule; a flow-at-t=30 alternative is provided).
Second-best scenarios keep the industry on the first-best carbon-price path
and split the budget by the first-best sectoral burdens.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigurationError, InfeasiblePolicyError, SolverError
from .params import ModelParameters, technology_paths
from .policies import PolicyInstruments
from .rootfind import bracketed_root
from .steady_state import solve_steady_state
from .transition import (Diagnostics, SolverOptions, TransitionProblem,
                         Trajectory, decentralize, solve_budget_continuation,
                         solve_transition, solve_transition_homotopy)

SCENARIOS = ("no-policy", "first-best", "phased-in", "subsidy")


@dataclass
class ScenarioConfig:
    """Run-level knobs shared by every scenario."""

    sim_horizon: int = 150            # solver horizon
    budget_rule: str = "cumulative30"  # or "flow30"
    cut_share: float = 0.5            # emission reduction within the window
    budget_window: int = 30
    cap_markup: float = 0.25          # phased-in price as share of p_R
    cap_window: int = 10              # capped periods ("first decade")
    subsidy_decay_grid: tuple = (0.0, 0.05, 0.1, 0.2, 0.4)
    subsidy_window: int = 60          # active periods of the subsidy basis
    subsidy_max_rate: float = 0.95
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.budget_rule not in ("cumulative30", "flow30"):
            raise ConfigurationError(f"unknown budget rule {self.budget_rule!r}")
        if not 0.0 < self.cut_share < 1.0:
            raise ConfigurationError("cut share must lie in (0,1)")
        if self.cap_window < 1 or self.cap_window > self.sim_horizon:
            raise ConfigurationError("cap window outside the horizon")


@dataclass
class ScenarioResult:
    name: str
    trajectory: Trajectory
    instruments: PolicyInstruments
    diagnostics: Diagnostics
    emissions_industry: float        # aggregate, cumulative over the horizon
    emissions_housing: float
    budgets: dict
    meta: dict = field(default_factory=dict)

    @property
    def emissions_total(self) -> float:
        return self.emissions_industry + self.emissions_housing


def _initial_stocks(params: ModelParameters) -> dict:
    ss = solve_steady_state(params)
    a = ss.allocation
    return {"k_Y": a.k_Y, "k_F": a.k_F, "k_N": a.k_N, "k_H": a.k_H, "k_E": a.k_E}


def _result(name, traj, diag, params, budgets, meta=None) -> ScenarioResult:
    instruments = PolicyInstruments(
        p_C=traj["p_C"].copy(), p_HC=traj["p_HC"].copy(),
        tau_INVE=traj["tau_INVE"].copy(), Gamma=traj["Gamma"].copy())
    return ScenarioResult(
        name=name, trajectory=traj, instruments=instruments, diagnostics=diag,
        emissions_industry=float(traj["Res_F"].sum()),
        emissions_housing=float(params.n * traj["res"].sum()),
        budgets=budgets, meta=meta or {})


# ---------------------------------------------------------------- no policy
def run_no_policy(params: ModelParameters,
                  config: ScenarioConfig | None = None) -> ScenarioResult:
    """Laissez-faire benchmark: technological progress, no instruments."""
    cfg = config or ScenarioConfig()
    t0 = time.time()
    tech = technology_paths(params, horizon=cfg.sim_horizon)
    problem = TransitionProblem(
        params=params, tech=tech, policy=PolicyInstruments.none(cfg.sim_horizon),
        initial_stocks=_initial_stocks(params))
    traj, diag = solve_transition_homotopy(problem, cfg.options)
    return _result("no-policy", traj, diag, params, budgets={},
                   meta={"wall_time": time.time() - t0, "M0": math.inf})


# ---------------------------------------------------------------- first best
def carbon_budget(no_policy: ScenarioResult, params: ModelParameters,
                  config: ScenarioConfig | None = None) -> float:
    """Aggregate budget delivering the configured cut under the chosen rule."""
    cfg = config or ScenarioConfig()
    W = cfg.budget_window
    base = no_policy.trajectory
    if cfg.budget_rule == "cumulative30":
        target = cfg.cut_share * float(base["emissions"][:W].sum())
    else:
        target = cfg.cut_share * float(base["emissions"][W])

    tech = technology_paths(params, horizon=cfg.sim_horizon)
    stocks = {k: base[k][0] for k in ("k_Y", "k_F", "k_N", "k_H", "k_E")}
    total_free = float(base["emissions"].sum())
    state = {"guess": base, "first": True}

    def gap(log_frac):
        M0 = math.exp(log_frac) * total_free
        problem = TransitionProblem(
            params=params, tech=tech, policy=PolicyInstruments.none(cfg.sim_horizon),
            initial_stocks=stocks, M0=M0, mode="uniform_tax")
        if state["first"]:
            traj, _ = solve_budget_continuation(problem, base, cfg.options)
            state["first"] = False
        else:
            traj, _ = solve_transition(problem, cfg.options, state["guess"])
        state["guess"] = traj
        if cfg.budget_rule == "cumulative30":
            value = float(traj["emissions"][:W].sum())
        else:
            value = float(traj["emissions"][W])
        return value - target

    root = bracketed_root(gap, math.log(5e-3), math.log(0.2), n_scan=10,
                          xtol=1e-13, rtol=1e-13, label="carbon budget level")
    return math.exp(root) * total_free


def run_first_best(params: ModelParameters, M0: float,
                   config: ScenarioConfig | None = None,
                   warm: ScenarioResult | None = None) -> ScenarioResult:
    """Uniform carbon pricing against the aggregate budget (planner optimum)."""
    cfg = config or ScenarioConfig()
    t0 = time.time()
    tech = technology_paths(params, horizon=cfg.sim_horizon)
    if warm is not None:
        stocks = {k: warm.trajectory[k][0] for k in ("k_Y", "k_F", "k_N", "k_H", "k_E")}
    else:
        stocks = _initial_stocks(params)
    problem = TransitionProblem(
        params=params, tech=tech, policy=PolicyInstruments.none(cfg.sim_horizon),
        initial_stocks=stocks, M0=M0, mode="uniform_tax")
    if warm is not None:
        try:
            traj, diag = solve_transition(problem, cfg.options, warm.trajectory)
        except SolverError:
            traj, diag = solve_budget_continuation(problem, warm.trajectory, cfg.options)
    else:
        base = run_no_policy(params, cfg)
        traj, diag = solve_budget_continuation(problem, base.trajectory, cfg.options)
    return _result("first-best", traj, diag, params, budgets={"total": M0},
                   meta={"wall_time": time.time() - t0, "M0": M0})


def split_carbon_budget(first_best: ScenarioResult) -> tuple:
    """Sectoral budgets at the first-best burdens; they sum to the total."""
    return first_best.emissions_industry, first_best.emissions_housing


# ---------------------------------------------------------------- phased in
def run_phased_in(params: ModelParameters, first_best: ScenarioResult,
                  config: ScenarioConfig | None = None) -> ScenarioResult:
    """Housing carbon price fixed at a markup on the resource price for the
    cap window, optimal (housing-budget constrained) afterwards; the industry
    keeps the first-best price path against its budget."""
    cfg = config or ScenarioConfig()
    t0 = time.time()
    budget_Y, budget_H = split_carbon_budget(first_best)
    fb = first_best.trajectory
    T = cfg.sim_horizon
    tech = technology_paths(params, horizon=T)
    stocks = {k: fb[k][0] for k in ("k_Y", "k_F", "k_N", "k_H", "k_E")}

    p_HC = np.zeros(T + 1)
    p_HC[: cfg.cap_window] = cfg.cap_markup * params.p_R
    policy = PolicyInstruments(p_C=fb["p_C"].copy(), p_HC=p_HC,
                               tau_INVE=np.zeros(T + 1))
    problem = TransitionProblem(
        params=params, tech=tech, policy=policy, initial_stocks=stocks,
        M0=first_best.meta.get("M0", math.inf), mode="housing_tax",
        budget_split=(budget_Y, budget_H), cap_window=cfg.cap_window)

    guess = Trajectory({k: np.array(v) for k, v in fb.items()})
    guess.meta = dict(fb.meta)
    # shadow value of the housing budget at the end of the cap window,
    # started from the first-best uniform path
    mu_fb = float(fb["mu_R"][min(cfg.cap_window, T)])
    guess.meta["border_values"] = [max(mu_fb, 1e-12)]
    try:
        traj, diag = solve_transition(problem, cfg.options, guess)
    except SolverError as exc:
        slack = _housing_budget_slack(problem, guess, cfg)
        raise SolverError(
            f"phased-in level search failed ({exc}); housing budget slack at "
            f"bracket ends: {slack}") from exc
    return _result("phased-in", traj, diag, params,
                   budgets={"industry": budget_Y, "housing": budget_H},
                   meta={"wall_time": time.time() - t0,
                         "M0": first_best.meta.get("M0"),
                         "cap_markup": cfg.cap_markup,
                         "cap_window": cfg.cap_window})


def _housing_budget_slack(problem, guess, cfg):
    """Diagnostic: budget slack at a tiny and a large post-cap price level."""
    out = {}
    for label, mu in (("low", 1e-10), ("high", 1.0)):
        g = Trajectory({k: np.array(v) for k, v in guess.items()})
        g.meta = dict(guess.meta)
        g.meta["border_values"] = [mu]
        try:
            traj, _ = solve_transition(problem, cfg.options, g)
            out[label] = float(problem.budget_split[1]
                               - problem.params.n * traj["res"].sum())
        except SolverError:
            out[label] = math.nan
    return out


# ---------------------------------------------------------------- subsidy
def _subsidy_path(level, decay, window, horizon):
    t = np.arange(horizon + 1, dtype=float)
    tau = level * np.exp(-decay * t)
    tau[window:] = 0.0
    return tau


def run_subsidy(params: ModelParameters, first_best: ScenarioResult,
                config: ScenarioConfig | None = None) -> ScenarioResult:
    """No housing carbon price; retrofit investment subsidies financed by
    lump-sum taxes, chosen to maximize discounted utility subject to the
    housing carbon budget.

    The subsidy path is restricted to a level-times-exponential-decay basis
    over an active window; for each decay the level is pinned by making the
    housing budget bind, and the decay maximizes welfare on that surface.
    """
    cfg = config or ScenarioConfig()
    t0 = time.time()
    budget_Y, budget_H = split_carbon_budget(first_best)
    budget_H_hh = budget_H / params.n
    fb = first_best.trajectory
    T = cfg.sim_horizon
    tech = technology_paths(params, horizon=T)
    stocks = {k: fb[k][0] for k in ("k_Y", "k_F", "k_N", "k_H", "k_E")}
    beta = params.beta

    state = {"guess": fb, "evals": 0}

    def equilibrium(tau_path):
        policy = PolicyInstruments(p_C=fb["p_C"].copy(),
                                   p_HC=np.zeros(T + 1), tau_INVE=tau_path)
        problem = TransitionProblem(
            params=params, tech=tech, policy=policy, initial_stocks=stocks,
            mode="fixed")
        traj, diag = solve_transition(problem, cfg.options, state["guess"])
        state["guess"] = traj
        state["evals"] += 1
        return traj, diag

    def housing_gap(level, decay):
        traj, _ = equilibrium(_subsidy_path(level, decay, cfg.subsidy_window, T))
        return float(traj["res"].sum()) - budget_H_hh

    # infeasibility / interior-optimum guards
    gap0 = housing_gap(0.0, 0.0)
    if gap0 <= 0.0:
        traj, diag = equilibrium(np.zeros(T + 1))
        return _result("subsidy", traj, diag, params,
                       budgets={"industry": budget_Y, "housing": budget_H},
                       meta={"wall_time": time.time() - t0, "binding": False,
                             "basis": "level*exp(-decay*t)", "level": 0.0,
                             "decay": 0.0, "window": cfg.subsidy_window})
    gap_max = housing_gap(cfg.subsidy_max_rate, 0.0)
    if gap_max > 0.0:
        raise InfeasiblePolicyError(
            "housing budget unattainable: even the maximal retrofit subsidy "
            f"leaves cumulative housing emissions {gap_max:.4f} above budget")

    def level_for(decay):
        return bracketed_root(lambda lv: housing_gap(lv, decay),
                              0.0, cfg.subsidy_max_rate, n_scan=8,
                              xtol=1e-10, rtol=1e-10,
                              label="subsidy level search")

    def welfare_at(decay):
        level = level_for(decay)
        traj, _ = equilibrium(_subsidy_path(level, decay, cfg.subsidy_window, T))
        disc = beta ** np.arange(T + 1)
        phi, hbar = params.phi, params.h_bar
        u = phi * np.log(traj["c"]) + (1 - phi) * np.log(traj["h"] - hbar) \
            if params.eta == 1.0 else \
            (traj["c"] ** phi * (traj["h"] - hbar) ** (1 - phi)) ** (1 - params.eta) / (1 - params.eta)
        return float(np.sum(disc * u)), level

    best = None
    for decay in cfg.subsidy_decay_grid:
        w, level = welfare_at(decay)
        if best is None or w > best[0]:
            best = (w, decay, level)
    lo = max(0.0, best[1] - 0.1)
    hi = best[1] + 0.1
    refine = minimize_scalar(lambda d: -welfare_at(d)[0], bounds=(lo, hi),
                             method="bounded", options={"xatol": 1e-3})
    if -refine.fun > best[0]:
        best = (-refine.fun, float(refine.x), level_for(float(refine.x)))

    w, decay, level = best
    tau = _subsidy_path(level, decay, cfg.subsidy_window, T)
    traj, diag = equilibrium(tau)
    return _result("subsidy", traj, diag, params,
                   budgets={"industry": budget_Y, "housing": budget_H},
                   meta={"wall_time": time.time() - t0, "binding": True,
                         "basis": "level*exp(-decay*t)", "level": level,
                         "decay": decay, "window": cfg.subsidy_window,
                         "objective": w, "equilibrium_solves": state["evals"],
                         "M0": first_best.meta.get("M0")})


# ---------------------------------------------------------------- orchestration
def run_pipeline(params: ModelParameters, config: ScenarioConfig | None = None,
                 names: tuple = SCENARIOS) -> dict:
    """Run scenarios in dependency order; returns {name: ScenarioResult}."""
    cfg = config or ScenarioConfig()
    out = {}
    need_fb = any(n in names for n in ("first-best", "phased-in", "subsidy"))
    base = run_no_policy(params, cfg)
    out["no-policy"] = base
    if need_fb:
        M0 = carbon_budget(base, params, cfg)
        fb = run_first_best(params, M0, cfg, warm=base)
        out["first-best"] = fb
        if "phased-in" in names:
            out["phased-in"] = run_phased_in(params, fb, cfg)
        if "subsidy" in names:
            out["subsidy"] = run_subsidy(params, fb, cfg)
    return {k: v for k, v in out.items() if k in names or k == "no-policy"}
