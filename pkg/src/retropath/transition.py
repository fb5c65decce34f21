"""Finite-horizon perfect-foresight equilibrium solver.

The full intertemporal system — household optimality with irreversible
housing-related investment, firm first-order conditions, market clearing,
the resource constraint, and (in planner modes) the carbon-budget block —
is stacked over time and solved by damped Newton with an analytic
block-tridiagonal Jacobian. Irreversibility is handled by a smoothed
Fischer-Burmeister reformulation with a decreasing-epsilon continuation and
an exact active-set polish at the end.

Time-t unknowns (all but the multipliers in logs):
    c, k_Y', k_F', k_N', k_H', k_E', phi_H, phi_E, E_Y, e, res, res_F
where primes denote next-period stocks. Carbon-budget modes append one
scalar unknown per budget (the log of the initial shadow value; the
shadow value grows at the rate of time preference while the budget is
unexhausted) and one aggregate budget equation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigurationError, DomainError, SolverError
from .kernels import columns as KC
from .kernels import compute_values, pack_params
from .params import ModelParameters, TechnologyPaths
from .policies import PolicyInstruments
from .steady_state import solve_steady_state

# unknown layout within one period
IC, IKY, IKF, IKN, IKH, IKE, IPH, IPE, IEY, IEH, IRS, IRF = range(12)
NVAR = 12
_STOCK_COLS = (IKY, IKF, IKN, IKH, IKE)
_LOG_COLS = (IC, IKY, IKF, IKN, IKH, IKE, IEY, IEH, IRS, IRF)

#: residual row layout within one period
R_BOP, R_ENE, R_RES, R_FFOC, R_CLR, R_EULY, R_EULF, R_EULN, R_EULH, R_EULE, R_FBH, R_FBE = range(12)


@dataclass
class SolverOptions:
    """Newton and complementarity-continuation controls."""

    tol: float = 1e-10                 # residual infinity-norm target
    max_iter: int = 120                # Newton iterations per continuation stage
    backtrack: float = 0.5             # line-search shrink factor
    fb_eps_schedule: tuple = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
    check_jacobian: bool = False       # directional FD check of the Jacobian
    polish: bool = True                # exact active-set pass after continuation
    min_step: float = 1e-10

    def __post_init__(self):
        if self.tol <= 0:
            raise ConfigurationError("tolerance must be positive")
        eps = np.asarray(self.fb_eps_schedule, dtype=float)
        if np.any(np.diff(eps) >= 0) or eps[-1] < 1e-10:
            raise ConfigurationError(
                "epsilon schedule must decrease strictly to a floor >= 1e-10")


@dataclass
class TransitionProblem:
    """One equilibrium computation: parameters, technology, policy, budgets.

    mode:
      ``fixed``        all instrument paths given (includes no-policy);
      ``uniform_tax``  one carbon budget, a common tax on both sectors;
      ``split_tax``    separate industry and housing budgets, two taxes;
      ``housing_tax``  industry price path given; housing price capped for
                       ``cap_window`` periods, optimal (budget-constrained)
                       afterwards.
    terminal:
      ``stationary``   stocks repeat after the final period (default);
      ``nlp_kkt``      exact KKT closure of the truncated finite program
                       (used by the small-horizon verification oracle).
    """

    params: ModelParameters
    tech: TechnologyPaths
    policy: PolicyInstruments
    initial_stocks: dict
    M0: float = math.inf               # aggregate carbon budget
    mode: str = "fixed"
    terminal: str = "stationary"
    budget_split: tuple | None = None  # (industry, housing), aggregate units
    cap_window: int = 10

    def __post_init__(self):
        if self.mode not in ("fixed", "uniform_tax", "split_tax", "housing_tax"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.terminal not in ("stationary", "nlp_kkt"):
            raise ConfigurationError(f"unknown terminal condition {self.terminal!r}")
        if len(self.policy) != len(self.tech):
            raise ConfigurationError("policy and technology horizons differ")
        for k in ("k_Y", "k_F", "k_N", "k_H", "k_E"):
            if self.initial_stocks.get(k, 0.0) <= 0:
                raise ConfigurationError(f"initial stock {k} must be positive")
        if self.M0 < 0:
            raise ConfigurationError("carbon budget must be non-negative")
        if self.mode == "uniform_tax" and not math.isfinite(self.M0):
            raise ConfigurationError("uniform_tax mode needs a finite budget")
        if self.mode in ("split_tax", "housing_tax") and self.budget_split is None:
            raise ConfigurationError(f"mode {self.mode!r} needs budget_split")

    @property
    def horizon(self) -> int:
        return len(self.tech) - 1


class Trajectory(dict):
    """Time-indexed record of quantities, prices, multipliers, and policy.

    A thin dict of equally long arrays (index = period). Scalar metadata
    lives in ``meta``.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.meta: dict = {}

    @property
    def horizon(self) -> int:
        return len(self["c"]) - 1

    def window(self, T: int) -> "Trajectory":
        """First T+1 periods of every series."""
        out = Trajectory({k: np.array(v[: T + 1]) for k, v in self.items()})
        out.meta = dict(self.meta)
        return out


@dataclass
class Diagnostics:
    converged: bool = False
    iterations: int = 0
    final_norm: float = math.inf
    complementarity_max: float = math.inf
    budget_slack: dict = field(default_factory=dict)
    binding_H: np.ndarray | None = None
    binding_E: np.ndarray | None = None
    walras_max: float = math.inf
    government_max: float = math.inf
    norm_history: list = field(default_factory=list)
    message: str = ""


# --------------------------------------------------------------------------
# workspace: pre-compiled arrays describing one problem instance
# --------------------------------------------------------------------------
class _Workspace:
    def __init__(self, problem: TransitionProblem):
        p = problem.params
        self.problem = problem
        self.T = problem.horizon
        self.par = pack_params(p)
        self.beta = p.beta
        self.p_R = p.p_R
        self.deltas = np.array([p.delta_Y, p.delta_F, p.delta_N, p.delta_H, p.delta_E])
        self.AY = np.asarray(problem.tech.A_Y, dtype=float)
        self.AN = np.asarray(problem.tech.A_N, dtype=float)
        self.k0 = np.array([problem.initial_stocks[k]
                            for k in ("k_Y", "k_F", "k_N", "k_H", "k_E")])
        self.tau = np.asarray(problem.policy.tau_INVE, dtype=float)
        self.pC_fix = np.asarray(problem.policy.p_C, dtype=float).copy()
        self.pHC_fix = np.asarray(problem.policy.p_HC, dtype=float).copy()
        T = self.T
        n = p.n

        # carbon-budget borders: (growth path g, applies to pC, applies to pHC,
        # budget row kind, aggregate budget level)
        self.borders: list[dict] = []
        grow = self.beta ** (-np.arange(T + 1, dtype=float))
        if problem.mode == "uniform_tax":
            self.borders.append(dict(g=grow, on_pC=True, on_pHC=True,
                                     kind="total", level=problem.M0 / n))
        elif problem.mode == "split_tax":
            bY, bH = problem.budget_split
            self.borders.append(dict(g=grow, on_pC=True, on_pHC=False,
                                     kind="resF", level=bY / n))
            self.borders.append(dict(g=grow.copy(), on_pC=False, on_pHC=True,
                                     kind="res", level=bH / n))
        elif problem.mode == "housing_tax":
            _, bH = problem.budget_split
            t0 = problem.cap_window
            g = np.zeros(T + 1)
            g[t0:] = self.beta ** (-(np.arange(t0, T + 1, dtype=float) - t0))
            self.borders.append(dict(g=g, on_pC=False, on_pHC=True,
                                     kind="res", level=bH / n))
            self.pHC_fix[t0:] = 0.0  # optimal beyond the cap window
        self.nb = len(self.borders)
        self.N = NVAR * (T + 1) + self.nb

    # -- unknown vector handling ------------------------------------------
    def decode(self, x):
        """Split the flat unknown vector into period matrices and stocks."""
        T = self.T
        xm = x[: NVAR * (T + 1)].reshape(T + 1, NVAR)
        C = np.exp(xm[:, IC])
        flows = np.exp(xm[:, [IEY, IEH, IRS, IRF]])
        phiH, phiE = xm[:, IPH], xm[:, IPE]
        K = np.empty((5, T + 2))
        K[:, 0] = self.k0
        K[:, 1:] = np.exp(xm[:, [IKY, IKF, IKN, IKH, IKE]]).T
        m = np.exp(x[NVAR * (T + 1):]) if self.nb else np.empty(0)
        return C, K, phiH, phiE, flows[:, 0], flows[:, 1], flows[:, 2], flows[:, 3], m

    def values(self, x):
        C, K, phiH, phiE, eY, eh, res, resF, m = self.decode(x)
        h = (self.par[KC.P_LAND] ** self.par[KC.P_A_H]
             * (self.par[KC.P_K_BAR] + K[3, :-1]) ** (1.0 - self.par[KC.P_A_H]))
        bad = np.nonzero(h <= self.par[KC.P_H_BAR])[0]
        if bad.size:
            raise DomainError(f"housing services at or below subsistence in period {bad[0]}")
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            V = compute_values(self.par, self.AY, self.AN, C,
                               K[0, :-1], K[1, :-1], K[2, :-1], K[3, :-1], K[4, :-1],
                               eY, eh, res, resF)
        return V, (C, K, phiH, phiE, eY, eh, res, resF, m)

    def taxes(self, V, m):
        """Effective carbon price paths given border shadow values."""
        lam = V[:, KC.LAM]
        pC = self.pC_fix.copy()
        pHC = self.pHC_fix.copy()
        muC = np.zeros(self.T + 1)   # shadow value paths entering each price
        muH = np.zeros(self.T + 1)
        for b, mv in zip(self.borders, m):
            mu = mv * b["g"]
            if b["on_pC"]:
                pC = pC + mu / lam
                muC += mu
            if b["on_pHC"]:
                pHC = pHC + mu / lam
                muH += mu
        return pC, pHC, muC, muH


def _fb(a, b, eps):
    s = np.sqrt(a * a + b * b + eps * eps)
    return a + b - s, 1.0 - a / s, 1.0 - b / s


# --------------------------------------------------------------------------
# residual + Jacobian assembly
# --------------------------------------------------------------------------
def _assemble(ws: _Workspace, x, eps, active_H=None, active_E=None, want_jac=True):
    T = ws.T
    beta = ws.beta
    dY, dF, dN, dH, dE = ws.deltas
    p_R = ws.p_R
    V, (Cv, K, phiH, phiE, eY, eh, res, resF, m) = ws.values(x)
    pC, pHC, muC, muH = ws.taxes(V, m)
    tau = ws.tau

    inv = K[:, 1:] - (1.0 - ws.deltas[:, None]) * K[:, :-1]   # (5, T+1)
    lam = V[:, KC.LAM]
    psiH = lam - phiH
    psiE = lam * (1.0 - tau) - phiE

    r = np.zeros(ws.N)
    rows = lambda q: q + NVAR * np.arange(T + 1)

    # periodwise blocks
    r[rows(R_BOP)] = (V[:, KC.Y] - Cv - inv.sum(axis=0)
                      - dH * ws.par[KC.P_K_BAR] - p_R * (res + resF))
    r[rows(R_ENE)] = V[:, KC.PURCH] - V[:, KC.REQ]
    pres = p_R + pHC
    r[rows(R_RES)] = V[:, KC.PE] * V[:, KC.QR] - pres * V[:, KC.QE]
    r[rows(R_FFOC)] = V[:, KC.MPRF] - (p_R + pC)
    r[rows(R_CLR)] = eY + eh - V[:, KC.EE]

    # Euler rows for t = 0..T-1; the variant closure only changes the
    # survival coefficient in the last intertemporal link
    coef = np.ones(T) if T else np.empty(0)
    cY, cF, cN, cH, cE = (1.0 - dY) * coef, (1.0 - dF) * coef, (1.0 - dN) * coef, \
        (1.0 - dH) * coef, (1.0 - dE) * coef
    if ws.problem.terminal == "nlp_kkt" and T >= 1:
        cY[-1], cF[-1], cN[-1], cH[-1], cE[-1] = -dY, -dF, -dN, -dH, -dE

    t0, t1 = np.arange(T), np.arange(1, T + 1)
    r[R_EULY + NVAR * t0] = lam[t0] - beta * lam[t1] * (V[t1, KC.R] + cY)
    r[R_EULF + NVAR * t0] = lam[t0] - beta * lam[t1] * (V[t1, KC.RF] + cF)
    r[R_EULN + NVAR * t0] = lam[t0] - beta * lam[t1] * (V[t1, KC.RN] + cN)
    r[R_EULH + NVAR * t0] = psiH[t0] - beta * (
        V[t1, KC.CHI] * V[t1, KC.H_KH] - V[t1, KC.NU] * ws.par[KC.P_KAPPA_N]
        + cH * psiH[t1])
    g_next = -V[t1, KC.REQ_KE]
    r[R_EULE + NVAR * t0] = psiE[t0] - beta * (V[t1, KC.NU] * g_next + cE * psiE[t1])

    # terminal block: stocks repeat
    for j, col in enumerate(_STOCK_COLS):
        r[R_EULY + j + NVAR * T] = math.log(K[j, T + 1]) - math.log(K[j, T])

    # complementarity rows
    aH = np.full(T + 1, -1, dtype=int) if active_H is None else active_H
    aE = np.full(T + 1, -1, dtype=int) if active_E is None else active_E
    fbH, dHa, dHb = _fb(inv[3], phiH, eps)
    fbE, dEa, dEb = _fb(inv[4], phiE, eps)
    rH = np.where(aH == -1, fbH, np.where(aH == 1, inv[3], phiH))
    rE = np.where(aE == -1, fbE, np.where(aE == 1, inv[4], phiE))
    r[rows(R_FBH)] = rH
    r[rows(R_FBE)] = rE
    jHa = np.where(aH == -1, dHa, np.where(aH == 1, 1.0, 0.0))
    jHb = np.where(aH == -1, dHb, np.where(aH == 1, 0.0, 1.0))
    jEa = np.where(aE == -1, dEa, np.where(aE == 1, 1.0, 0.0))
    jEb = np.where(aE == -1, dEb, np.where(aE == 1, 0.0, 1.0))

    # budget rows
    for bi, b in enumerate(ws.borders):
        em = {"total": res + resF, "res": res, "resF": resF}[b["kind"]]
        r[NVAR * (T + 1) + bi] = em.sum() - b["level"]

    if not want_jac:
        return r, None

    # ---------------- Jacobian ------------------------------------------
    ri, ci, vv = [], [], []

    def add(q, v, lag, ts, vals):
        ri.append(q + NVAR * ts)
        ci.append(v + NVAR * (ts + lag))
        vv.append(vals)

    allt = np.arange(T + 1)
    later = np.arange(1, T + 1)   # rows whose lag -1 column exists

    # r0: resource constraint
    add(R_BOP, IC, 0, allt, -Cv)
    for j, col in enumerate(_STOCK_COLS):
        add(R_BOP, col, 0, allt, -K[j, 1:])
    add(R_BOP, IKY, -1, later, ((1.0 - dY) + V[later, KC.R]) * K[0, later])
    add(R_BOP, IKF, -1, later, (1.0 - dF) * K[1, later])
    add(R_BOP, IKN, -1, later, (1.0 - dN) * K[2, later])
    add(R_BOP, IKH, -1, later, (1.0 - dH) * K[3, later])
    add(R_BOP, IKE, -1, later, (1.0 - dE) * K[4, later])
    add(R_BOP, IEY, 0, allt, V[:, KC.PE] * eY)
    add(R_BOP, IRS, 0, allt, -p_R * res)
    add(R_BOP, IRF, 0, allt, -p_R * resF)

    # r1: energy requirement
    add(R_ENE, IEH, 0, allt, V[:, KC.QE] * eh)
    add(R_ENE, IRS, 0, allt, V[:, KC.QR] * res)
    add(R_ENE, IKH, -1, later, -ws.par[KC.P_KAPPA_N] * K[3, later])
    add(R_ENE, IKE, -1, later, -V[later, KC.REQ_KE] * K[4, later])

    # r2: household resource optimality
    add(R_RES, IKY, -1, later, V[later, KC.PE_KY] * V[later, KC.QR] * K[0, later])
    add(R_RES, IEY, 0, allt, V[:, KC.PE_EY] * V[:, KC.QR] * eY)
    add(R_RES, IEH, 0, allt,
        (V[:, KC.PE] * V[:, KC.QR_E] - pres * V[:, KC.QE_E]) * eh)
    add(R_RES, IRS, 0, allt,
        (V[:, KC.PE] * V[:, KC.QR_R] - pres * V[:, KC.QE_R]) * res)
    if np.any(muH):
        w = muH / lam ** 2 * V[:, KC.QE]
        add(R_RES, IC, 0, allt, w * V[:, KC.LAM_C] * Cv)
        add(R_RES, IKH, -1, later, w[later] * V[later, KC.LAM_KH] * K[3, later])

    # r3: fossil generator resource optimality
    add(R_FFOC, IKY, -1, later, V[later, KC.MPRF_KY] * K[0, later])
    add(R_FFOC, IEY, 0, allt, V[:, KC.MPRF_EY] * eY)
    add(R_FFOC, IKF, -1, later, V[later, KC.MPRF_KF] * K[1, later])
    add(R_FFOC, IRF, 0, allt, V[:, KC.MPRF_RF] * resF)
    add(R_FFOC, IKN, -1, later, V[later, KC.MPRF_KN] * K[2, later])
    if np.any(muC):
        w = muC / lam ** 2
        add(R_FFOC, IC, 0, allt, w * V[:, KC.LAM_C] * Cv)
        add(R_FFOC, IKH, -1, later, w[later] * V[later, KC.LAM_KH] * K[3, later])

    # r4: electricity clearing
    add(R_CLR, IEY, 0, allt, eY)
    add(R_CLR, IEH, 0, allt, eh)
    add(R_CLR, IKF, -1, later, -V[later, KC.EE_KF] * K[1, later])
    add(R_CLR, IRF, 0, allt, -V[:, KC.EE_RF] * resF)
    add(R_CLR, IKN, -1, later, -V[later, KC.EE_KN] * K[2, later])

    if T >= 1:
        lamC1, lamKH1 = V[t1, KC.LAM_C], V[t1, KC.LAM_KH]
        lam1 = lam[t1]
        t0g1 = t0[t0 >= 1]   # rows with an existing lag -1 column

        def euler_industry(q, rate_col, extra):
            rate1 = V[t1, rate_col[0]] + rate_col[1]
            add(q, IC, 0, t0, V[t0, KC.LAM_C] * Cv[t0])
            add(q, IKH, -1, t0g1, V[t0g1, KC.LAM_KH] * K[3, t0g1])
            add(q, IC, 1, t0, -beta * rate1 * lamC1 * Cv[t1])
            add(q, IKH, 0, t0, -beta * rate1 * lamKH1 * K[3, t1])
            for col, vcol in extra:
                lagged = col in (IKY, IKF, IKN)   # next-period stocks sit in x_t
                add(q, col, 0 if lagged else 1, t0,
                    -beta * lam1 * V[t1, vcol]
                    * (K[{IKY: 0, IKF: 1, IKN: 2}[col], t1] if lagged
                       else {IEY: eY, IRF: resF}[col][t1]))

        euler_industry(R_EULY, (KC.R, cY), [(IKY, KC.R_KY), (IEY, KC.R_EY)])
        euler_industry(R_EULF, (KC.RF, cF),
                       [(IKY, KC.RF_KY), (IEY, KC.RF_EY), (IKF, KC.RF_KF),
                        (IRF, KC.RF_RF), (IKN, KC.RF_KN)])
        euler_industry(R_EULN, (KC.RN, cN),
                       [(IKY, KC.RN_KY), (IEY, KC.RN_EY), (IKF, KC.RN_KF),
                        (IRF, KC.RN_RF), (IKN, KC.RN_KN)])

        kapN = ws.par[KC.P_KAPPA_N]
        # housing Euler
        add(R_EULH, IC, 0, t0, V[t0, KC.LAM_C] * Cv[t0])
        add(R_EULH, IKH, -1, t0g1, V[t0g1, KC.LAM_KH] * K[3, t0g1])
        add(R_EULH, IPH, 0, t0, -np.ones(T))
        add(R_EULH, IC, 1, t0,
            -beta * (V[t1, KC.H_KH] * V[t1, KC.CHI_C] - kapN * V[t1, KC.NU_C]
                     + cH * lamC1) * Cv[t1])
        add(R_EULH, IKH, 0, t0,
            -beta * (V[t1, KC.CHI_KH] * V[t1, KC.H_KH]
                     + V[t1, KC.CHI] * V[t1, KC.H_KHKH]
                     - kapN * V[t1, KC.NU_KH] + cH * lamKH1) * K[3, t1])
        add(R_EULH, IKY, 0, t0, beta * kapN * V[t1, KC.NU_KY] * K[0, t1])
        add(R_EULH, IEY, 1, t0, beta * kapN * V[t1, KC.NU_EY] * eY[t1])
        add(R_EULH, IEH, 1, t0, beta * kapN * V[t1, KC.NU_E] * eh[t1])
        add(R_EULH, IRS, 1, t0, beta * kapN * V[t1, KC.NU_RES] * res[t1])
        add(R_EULH, IPH, 1, t0, beta * cH)

        # retrofit Euler
        tau0, tau1 = tau[t0], tau[t1]
        add(R_EULE, IC, 0, t0, (1.0 - tau0) * V[t0, KC.LAM_C] * Cv[t0])
        add(R_EULE, IKH, -1, t0g1, (1.0 - tau[t0g1]) * V[t0g1, KC.LAM_KH] * K[3, t0g1])
        add(R_EULE, IPE, 0, t0, -np.ones(T))
        add(R_EULE, IC, 1, t0,
            -beta * (g_next * V[t1, KC.NU_C] + cE * (1.0 - tau1) * lamC1) * Cv[t1])
        add(R_EULE, IKH, 0, t0,
            -beta * (g_next * V[t1, KC.NU_KH] + cE * (1.0 - tau1) * lamKH1) * K[3, t1])
        add(R_EULE, IKY, 0, t0, -beta * g_next * V[t1, KC.NU_KY] * K[0, t1])
        add(R_EULE, IEY, 1, t0, -beta * g_next * V[t1, KC.NU_EY] * eY[t1])
        add(R_EULE, IEH, 1, t0, -beta * g_next * V[t1, KC.NU_E] * eh[t1])
        add(R_EULE, IRS, 1, t0, -beta * g_next * V[t1, KC.NU_RES] * res[t1])
        add(R_EULE, IKE, 0, t0, beta * V[t1, KC.NU] * V[t1, KC.REQ_KEKE] * K[4, t1])
        add(R_EULE, IPE, 1, t0, beta * cE)

    # terminal stationarity rows
    tT = np.array([T])
    for j, col in enumerate(_STOCK_COLS):
        add(R_EULY + j, col, 0, tT, np.array([1.0]))
        if T >= 1:
            add(R_EULY + j, col, -1, tT, np.array([-1.0]))

    # complementarity rows
    add(R_FBH, IKH, 0, allt, jHa * K[3, 1:])
    add(R_FBH, IKH, -1, later, -jHa[later] * (1.0 - dH) * K[3, later])
    add(R_FBH, IPH, 0, allt, jHb)
    add(R_FBE, IKE, 0, allt, jEa * K[4, 1:])
    add(R_FBE, IKE, -1, later, -jEa[later] * (1.0 - dE) * K[4, later])
    add(R_FBE, IPE, 0, allt, jEb)

    rows_arr = np.concatenate(ri)
    cols_arr = np.concatenate(ci)
    vals_arr = np.concatenate(vv)

    # border columns and budget rows
    if ws.nb:
        extra_r, extra_c, extra_v = [], [], []
        base = NVAR * (T + 1)
        for bi, b in enumerate(ws.borders):
            mu = m[bi] * b["g"]
            mask = mu != 0.0
            ts = allt[mask]
            if b["on_pHC"]:
                extra_r.append(R_RES + NVAR * ts)
                extra_c.append(np.full(ts.size, base + bi))
                extra_v.append(-(mu[mask] / lam[mask]) * V[mask, KC.QE])
            if b["on_pC"]:
                extra_r.append(R_FFOC + NVAR * ts)
                extra_c.append(np.full(ts.size, base + bi))
                extra_v.append(-mu[mask] / lam[mask])
            kind = b["kind"]
            if kind in ("total", "res"):
                extra_r.append(np.full(T + 1, base + bi))
                extra_c.append(IRS + NVAR * allt)
                extra_v.append(res)
            if kind in ("total", "resF"):
                extra_r.append(np.full(T + 1, base + bi))
                extra_c.append(IRF + NVAR * allt)
                extra_v.append(resF)
        rows_arr = np.concatenate([rows_arr] + extra_r)
        cols_arr = np.concatenate([cols_arr] + extra_c)
        vals_arr = np.concatenate([vals_arr] + extra_v)

    J = sp.coo_matrix((vals_arr, (rows_arr, cols_arr)), shape=(ws.N, ws.N)).tocsc()
    return r, J


# --------------------------------------------------------------------------
# public assembly and encoding helpers
# --------------------------------------------------------------------------
def x_from_trajectory(traj: Trajectory, problem: TransitionProblem) -> np.ndarray:
    """Flatten a trajectory into the solver's unknown vector."""
    T = problem.horizon
    x = np.empty(NVAR * (T + 1) + _Workspace(problem).nb)
    xm = x[: NVAR * (T + 1)].reshape(T + 1, NVAR)
    xm[:, IC] = np.log(traj["c"])
    nxt = {"k_Y": IKY, "k_F": IKF, "k_N": IKN, "k_H": IKH, "k_E": IKE}
    for key, col in nxt.items():
        stocks = traj[key]
        term = traj.meta.get("terminal_stocks", {}).get(key, stocks[-1])
        xm[:-1, col] = np.log(stocks[1:])
        xm[-1, col] = math.log(term)
    xm[:, IPH] = traj.get("phi_H", np.zeros(T + 1))
    xm[:, IPE] = traj.get("phi_E", np.zeros(T + 1))
    xm[:, IEY] = np.log(traj["E_Y"])
    xm[:, IEH] = np.log(traj["e"])
    xm[:, IRS] = np.log(traj["res"])
    xm[:, IRF] = np.log(traj["Res_F"] / problem.params.n)
    mb = traj.meta.get("border_values", [])
    for i, v in enumerate(mb[: _Workspace(problem).nb]):
        x[NVAR * (T + 1) + i] = math.log(v)
    if _Workspace(problem).nb and len(mb) < _Workspace(problem).nb:
        raise ConfigurationError("initial guess lacks border shadow values")
    return x


def assemble_residuals(traj: Trajectory, problem: TransitionProblem,
                       eps: float = 1e-8) -> np.ndarray:
    """Stacked residual vector of the full system at a candidate trajectory."""
    ws = _Workspace(problem)
    x = x_from_trajectory(traj, problem)
    r, _ = _assemble(ws, x, eps, want_jac=False)
    return r


def trajectory_from_x(ws: _Workspace, x: np.ndarray) -> Trajectory:
    V, (Cv, K, phiH, phiE, eY, eh, res, resF, m) = ws.values(x)
    pC, pHC, muC, muH = ws.taxes(V, m)
    p = ws.problem.params
    T = ws.T
    inv = K[:, 1:] - (1.0 - ws.deltas[:, None]) * K[:, :-1]
    lam = V[:, KC.LAM]
    p_ene = (p.a_ene ** p.sigma_ene * V[:, KC.PE] ** (1.0 - p.sigma_ene)
             + (1.0 - p.a_ene) ** p.sigma_ene
             * (p.p_R + pHC) ** (1.0 - p.sigma_ene)) ** (1.0 / (1.0 - p.sigma_ene))
    gamma = pC * resF + pHC * res - ws.tau * inv[4]
    M = np.empty(T + 2)
    M[0] = ws.problem.M0
    em = p.n * (res + resF)
    M[1:] = ws.problem.M0 - np.cumsum(em) if math.isfinite(ws.problem.M0) else math.inf

    traj = Trajectory({
        "c": Cv, "h": V[:, KC.H], "ene": V[:, KC.REQ], "e": eh, "res": res,
        "i_Y": inv[0], "i_F": inv[1], "i_N": inv[2], "i_H": inv[3], "i_E": inv[4],
        "k_Y": K[0, :-1], "k_F": K[1, :-1], "k_N": K[2, :-1],
        "k_H": K[3, :-1], "k_E": K[4, :-1],
        "land": np.full(T + 1, p.land), "L": np.full(T + 1, p.labor),
        "Y": V[:, KC.Y], "Z": V[:, KC.Z], "E": V[:, KC.EE],
        "E_Y": eY, "E_F": V[:, KC.EF], "E_N": V[:, KC.EN],
        "Res_F": p.n * resF,
        "p_E": V[:, KC.PE], "p_F": V[:, KC.PF], "p_N": V[:, KC.PN],
        "p_ene": p_ene, "R": V[:, KC.R], "R_F": V[:, KC.RF], "R_N": V[:, KC.RN],
        "w": V[:, KC.W],
        "lam": lam, "chi": V[:, KC.CHI], "nu": V[:, KC.NU],
        "phi_H": phiH, "phi_E": phiE,
        "psi_H": lam - phiH, "psi_E": lam * (1.0 - ws.tau) - phiE,
        "p_C": pC, "p_HC": pHC, "tau_INVE": ws.tau.copy(), "Gamma": gamma,
        "mu_R": muC if ws.problem.mode in ("uniform_tax", "split_tax") else muH,
        "mu_R_Y": muC, "mu_R_H": muH,
        "M": M[:-1], "emissions": em,
    })
    traj.meta["terminal_stocks"] = {k: K[j, T + 1] for j, k in
                                    enumerate(("k_Y", "k_F", "k_N", "k_H", "k_E"))}
    traj.meta["border_values"] = list(m)
    traj.meta["M_final"] = float(M[-1]) if math.isfinite(ws.problem.M0) else math.inf
    return traj


# --------------------------------------------------------------------------
# initial guesses
# --------------------------------------------------------------------------
def growth_guess(problem: TransitionProblem) -> Trajectory:
    """Period-by-period pseudo-stationary allocation along the technology path.

    Each period is solved as if its productivity level were permanent; the
    result tracks the growth trend and serves as a Newton starting point.
    """
    from .steady_state import _reduction

    p = problem.params
    T = problem.horizon
    series = {k: np.empty(T + 1) for k in
              ("c", "k_Y", "k_F", "k_N", "k_H", "k_E", "E_Y", "e", "res", "Res_F")}
    for t in range(T + 1):
        pt = p.replace(A_Y0=problem.tech.A_Y[t], A_N0=problem.tech.A_N[t])
        z, _ = _reduction(pt)
        for k, v in zip(("c", "k_Y", "k_F", "k_N", "k_H", "k_E",
                         "E_Y", "e", "res"), z[:9]):
            series[k][t] = v
        series["Res_F"][t] = p.n * z[9]
    traj = Trajectory(series)
    traj["phi_H"] = np.zeros(T + 1)
    traj["phi_E"] = np.zeros(T + 1)
    # stocks are predetermined: k(0) is given, later periods follow the trend
    for key in ("k_Y", "k_F", "k_N", "k_H", "k_E"):
        series[key][0] = problem.initial_stocks[key]
    traj.meta["terminal_stocks"] = {k: series[k][-1] for k in
                                    ("k_Y", "k_F", "k_N", "k_H", "k_E")}
    traj.meta["border_values"] = _default_border_guess(problem)
    return traj


def _default_border_guess(problem: TransitionProblem) -> list:
    ws_nb = _Workspace(problem).nb
    if not ws_nb:
        return []
    lam0 = 1.0
    return [0.05 * problem.params.p_R * lam0] * ws_nb


def steady_guess(problem: TransitionProblem, steady) -> Trajectory:
    """Steady state replicated over the horizon."""
    T = problem.horizon
    a = steady.allocation
    series = {}
    for key, val in (("c", a.c), ("k_Y", a.k_Y), ("k_F", a.k_F), ("k_N", a.k_N),
                     ("k_H", a.k_H), ("k_E", a.k_E), ("E_Y", a.E_Y), ("e", a.e),
                     ("res", a.res), ("Res_F", a.Res_F)):
        series[key] = np.full(T + 1, val)
    traj = Trajectory(series)
    traj["phi_H"] = np.zeros(T + 1)
    traj["phi_E"] = np.zeros(T + 1)
    traj.meta["terminal_stocks"] = {k: series[k][-1] for k in
                                    ("k_Y", "k_F", "k_N", "k_H", "k_E")}
    traj.meta["border_values"] = _default_border_guess(problem)
    return traj


# --------------------------------------------------------------------------
# Newton driver
# --------------------------------------------------------------------------
def _newton(ws, x, eps, opts, active_H=None, active_E=None, diag=None):
    r, J = _assemble(ws, x, eps, active_H, active_E)
    norm = float(np.max(np.abs(r)))
    for it in range(opts.max_iter):
        if diag is not None:
            diag.norm_history.append(norm)
        if norm <= opts.tol:
            return x, norm
        if opts.check_jacobian:
            _directional_check(ws, x, eps, r, J, active_H, active_E)
        try:
            step = splu(J).solve(-r)
        except RuntimeError as exc:
            raise SolverError(
                "singular Newton step; try a smaller smoothing epsilon or a "
                f"better initial guess ({exc})", residual_norm=norm,
                history=diag.norm_history if diag else []) from exc
        two0 = float(np.linalg.norm(r))
        alpha = 1.0
        while True:
            x_try = x + alpha * step
            try:
                r_try, J_try = _assemble(ws, x_try, eps, active_H, active_E)
            except (DomainError, FloatingPointError, OverflowError):
                r_try = None
            if r_try is not None and np.all(np.isfinite(r_try)) \
                    and float(np.linalg.norm(r_try)) < two0 * (1.0 - 1e-4 * alpha):
                break
            alpha *= opts.backtrack
            if alpha < opts.min_step:
                raise SolverError(
                    "Newton line search stalled", residual_norm=norm,
                    history=diag.norm_history if diag else [],
                    best=x)
        x, r, J = x_try, r_try, J_try
        norm = float(np.max(np.abs(r)))
    if norm <= opts.tol:
        return x, norm
    raise SolverError(
        f"Newton did not converge within {opts.max_iter} iterations "
        f"(residual {norm:.3e})", residual_norm=norm,
        history=diag.norm_history if diag else [], best=x)


def _directional_check(ws, x, eps, r, J, aH, aE, n_dirs=3, tol=1e-4):
    rng = np.random.default_rng(0)
    for _ in range(n_dirs):
        v = rng.standard_normal(ws.N)
        v /= np.linalg.norm(v)
        h = 1e-7
        rp, _ = _assemble(ws, x + h * v, eps, aH, aE, want_jac=False)
        rm, _ = _assemble(ws, x - h * v, eps, aH, aE, want_jac=False)
        fd = (rp - rm) / (2 * h)
        an = J @ v
        scale = max(1.0, float(np.max(np.abs(an))))
        worst = float(np.max(np.abs(an - fd))) / scale
        if worst > tol:
            raise SolverError(f"analytic Jacobian fails directional check: {worst:.2e}")


def solve_transition(problem: TransitionProblem, options: SolverOptions | None = None,
                     initial_guess: Trajectory | None = None):
    """Solve the stacked equilibrium system; returns (Trajectory, Diagnostics)."""
    opts = options or SolverOptions()
    ws = _Workspace(problem)
    if initial_guess is None:
        initial_guess = growth_guess(problem)
    x = x_from_trajectory(initial_guess, problem)
    diag = Diagnostics()

    norm = math.inf
    for eps in opts.fb_eps_schedule:
        x, norm = _newton(ws, x, eps, opts, diag=diag)
    eps_floor = opts.fb_eps_schedule[-1]

    active_H = active_E = None
    if opts.polish:
        for _ in range(4):
            _, (Cv, K, phiH, phiE, *_rest) = ws.values(x)
            invH = K[3, 1:] - (1.0 - problem.params.delta_H) * K[3, :-1]
            invE = K[4, 1:] - (1.0 - problem.params.delta_E) * K[4, :-1]
            new_H = np.where(invH < phiH, 1, 0)
            new_E = np.where(invE < phiE, 1, 0)
            if active_H is not None and np.array_equal(new_H, active_H) \
                    and np.array_equal(new_E, active_E):
                break
            active_H, active_E = new_H, new_E
            x, norm = _newton(ws, x, eps_floor, opts, active_H, active_E, diag)
        # sign sanity after the exact pass
        _, (Cv, K, phiH, phiE, *_rest) = ws.values(x)
        invH = K[3, 1:] - (1.0 - problem.params.delta_H) * K[3, :-1]
        invE = K[4, 1:] - (1.0 - problem.params.delta_E) * K[4, :-1]
        if (np.min(invH) < -1e-9 or np.min(invE) < -1e-9
                or np.min(phiH) < -1e-9 or np.min(phiE) < -1e-9):
            raise SolverError("active-set polish produced inconsistent signs",
                              residual_norm=norm, best=x)

    traj = trajectory_from_x(ws, x)
    diag.converged = True
    diag.iterations = len(diag.norm_history)
    diag.final_norm = norm
    diag.complementarity_max = float(max(np.max(np.abs(traj["i_H"] * traj["phi_H"])),
                                         np.max(np.abs(traj["i_E"] * traj["phi_E"]))))
    diag.binding_H = traj["i_H"] <= 1e-12
    diag.binding_E = traj["i_E"] <= 1e-12
    for bi, b in enumerate(ws.borders):
        em = {"total": traj["res"] + traj["Res_F"] / problem.params.n,
              "res": traj["res"],
              "resF": traj["Res_F"] / problem.params.n}[b["kind"]]
        diag.budget_slack[b["kind"]] = float(b["level"] - em.sum())
    _walras_government(traj, problem, diag)
    return traj, diag


def _walras_government(traj, problem, diag):
    """Household budget (not part of the solved stack) and government budget."""
    p = problem.params
    resF_hh = traj["Res_F"] / p.n
    spend = (traj["c"] + traj["i_Y"] + traj["i_F"] + traj["i_N"] + traj["i_H"]
             + (1.0 - traj["tau_INVE"]) * traj["i_E"] + p.delta_H * p.k_bar
             + traj["p_E"] * traj["e"] + (p.p_R + traj["p_HC"]) * traj["res"])
    income = (traj["w"] * p.labor + traj["R"] * traj["k_Y"]
              + traj["R_F"] * traj["k_F"] + traj["R_N"] * traj["k_N"]
              + traj["Gamma"])
    diag.walras_max = float(np.max(np.abs(spend - income)))
    gov = (traj["Gamma"] + traj["tau_INVE"] * traj["i_E"]
           - traj["p_C"] * resF_hh - traj["p_HC"] * traj["res"])
    diag.government_max = float(np.max(np.abs(gov)))


def _interpolated_problem(problem: TransitionProblem, s: float) -> TransitionProblem:
    """Problem with technology growth geometrically scaled by s in [0, 1]."""
    from .params import _FrozenTechnologyPaths

    tech = problem.tech
    AY = tech.A_Y[0] * (tech.A_Y / tech.A_Y[0]) ** s
    AN = tech.A_N[0] * (tech.A_N / tech.A_N[0]) ** s
    tech_s = _FrozenTechnologyPaths(A_Y=AY, A_N=AN)
    return TransitionProblem(
        params=problem.params, tech=tech_s, policy=problem.policy,
        initial_stocks=problem.initial_stocks, M0=problem.M0, mode=problem.mode,
        terminal=problem.terminal, budget_split=problem.budget_split,
        cap_window=problem.cap_window)


def solve_transition_homotopy(problem: TransitionProblem,
                              options: SolverOptions | None = None,
                              initial_guess: Trajectory | None = None,
                              min_step: float = 1.0 / 64.0):
    """Solve with adaptive continuation in the technology-growth scale.

    Tries the full problem first; on failure it walks the growth scale up
    from the last solvable point, warm-starting each stage.
    """
    try:
        return solve_transition(problem, options, initial_guess)
    except SolverError:
        pass
    s_done, step, guess = 0.0, 0.5, initial_guess
    while True:
        s_target = min(1.0, s_done + step)
        sub = _interpolated_problem(problem, s_target)
        try:
            traj, diag = solve_transition(sub, options, guess)
        except SolverError as exc:
            step *= 0.5
            if step < min_step:
                raise SolverError(
                    f"growth continuation stalled at scale {s_done:.3f}",
                    residual_norm=exc.residual_norm) from exc
            continue
        guess, s_done = traj, s_target
        if s_done >= 1.0:
            return traj, diag
        step *= 2.0


def _scaled_budget_problem(problem: TransitionProblem, scale: float,
                           reference: dict) -> TransitionProblem:
    """Problem with every active budget relaxed toward its laissez-faire level.

    ``scale`` = 1 reproduces the target budgets; smaller values interpolate
    geometrically toward the unconstrained emission totals in ``reference``.
    """
    def mix(target, free):
        return free * (target / free) ** scale

    M0 = problem.M0
    split = problem.budget_split
    if problem.mode == "uniform_tax":
        M0 = mix(problem.M0, reference["total"])
    elif problem.mode == "split_tax":
        split = (mix(split[0], reference["resF"]), mix(split[1], reference["res"]))
    elif problem.mode == "housing_tax":
        split = (split[0], mix(split[1], reference["res"]))
    return TransitionProblem(
        params=problem.params, tech=problem.tech, policy=problem.policy,
        initial_stocks=problem.initial_stocks, M0=M0, mode=problem.mode,
        terminal=problem.terminal, budget_split=split,
        cap_window=problem.cap_window)


def solve_budget_continuation(problem: TransitionProblem,
                              unconstrained: Trajectory,
                              options: SolverOptions | None = None,
                              min_step: float = 1.0 / 64.0):
    """Solve a budget-constrained mode by walking budgets down from the
    laissez-faire emission totals, warm-starting each stage.

    ``unconstrained`` is a solved trajectory of the same problem without
    budgets (it provides both the first warm start and the emission totals).
    """
    n = problem.params.n
    reference = {
        "total": float(unconstrained["emissions"].sum()) / n,
        "res": float(unconstrained["res"].sum()),
        "resF": float(unconstrained["Res_F"].sum()) / n,
    }
    # reference levels are per household; budgets arrive aggregate
    reference = {k: v * n for k, v in reference.items()}

    guess = Trajectory({k: np.array(v) for k, v in unconstrained.items()})
    guess.meta = dict(unconstrained.meta)
    nb = _Workspace(problem).nb
    lam0 = float(unconstrained["lam"][0])
    guess.meta["border_values"] = [1e-3 * problem.params.p_R * lam0] * nb

    s_done, step = 0.0, 0.25
    while True:
        s_target = min(1.0, s_done + step)
        sub = _scaled_budget_problem(problem, s_target, reference)
        try:
            traj, diag = solve_transition(sub, options, guess)
        except SolverError as exc:
            step *= 0.5
            if step < min_step:
                raise SolverError(
                    f"budget continuation stalled at scale {s_done:.3f}",
                    residual_norm=exc.residual_norm) from exc
            continue
        guess, s_done = traj, s_target
        if s_done >= 1.0:
            return traj, diag
        step *= 2.0


# --------------------------------------------------------------------------
# planner-to-market mapping
# --------------------------------------------------------------------------
def decentralize(planner_traj: Trajectory, problem: TransitionProblem,
                 options: SolverOptions | None = None):
    """Recover supporting prices and instruments from a planner solution and
    verify they reproduce it as a competitive equilibrium.

    Returns (prices dict, PolicyInstruments, replay Trajectory). Raises
    SolverError if the replayed equilibrium deviates by more than 1e-7.
    """
    p = problem.params
    T = problem.horizon
    lam = planner_traj["lam"]
    mu_path = planner_traj["mu_R"]
    tax = mu_path / (lam * p.p_R)
    instruments = PolicyInstruments(
        p_C=tax * p.p_R, p_HC=tax * p.p_R, tau_INVE=np.zeros(T + 1),
        Gamma=planner_traj["Gamma"].copy())
    fixed = TransitionProblem(
        params=p, tech=problem.tech, policy=instruments,
        initial_stocks=problem.initial_stocks, M0=math.inf, mode="fixed",
        terminal=problem.terminal)
    replay, _ = solve_transition(fixed, options, initial_guess=planner_traj)
    worst = 0.0
    for key in ("c", "k_H", "k_E", "k_Y", "k_F", "k_N", "res", "e", "E_Y"):
        worst = max(worst, float(np.max(np.abs(replay[key] - planner_traj[key])
                                        / np.maximum(np.abs(planner_traj[key]), 1e-12))))
    if worst > 1e-7:
        raise SolverError(
            f"decentralized replay deviates from the planner path by {worst:.2e}; "
            "internal consistency violated")
    prices = {k: replay[k] for k in ("p_E", "p_F", "p_N", "p_ene", "R", "R_F", "R_N", "w")}
    return prices, instruments, replay
