"""Pure-NumPy implementation of the per-period value/derivative table.

Vectorized over time. The compiled Cython kernel mirrors this computation
exactly; both fill the column layout declared in ``columns``.
"""
from __future__ import annotations

import numpy as np

from . import columns as C

IMPLEMENTATION = "numpy"


def _ces_pack(s, x1, x2, sigma):
    """CES value, first, and second partials (vectorized)."""
    r = (sigma - 1.0) / sigma
    y = (s * x1 ** r + (1.0 - s) * x2 ** r) ** (1.0 / r)
    d1 = s * x1 ** (r - 1.0) * y ** (1.0 - r)
    d2 = (1.0 - s) * x2 ** (r - 1.0) * y ** (1.0 - r)
    d11 = s * (r - 1.0) * x1 ** (r - 2.0) * y ** (1.0 - r) + (1.0 - r) * d1 * d1 / y
    d22 = (1.0 - s) * (r - 1.0) * x2 ** (r - 2.0) * y ** (1.0 - r) + (1.0 - r) * d2 * d2 / y
    d12 = (1.0 - r) * d1 * d2 / y
    return y, d1, d2, d11, d12, d22


def compute_values(par, A_Y, A_N, c, kY, kF, kN, kH, kE, eY, eh, res, resF):
    """Fill the value table for every period.

    All quantity arguments are arrays of equal length (one entry per period);
    ``par`` is the packed parameter vector from ``columns.pack_params``.
    """
    a, sigma = par[C.P_A], par[C.P_SIGMA]
    a_Z = par[C.P_A_Z]
    a_E, sigma_E = par[C.P_A_E], par[C.P_SIGMA_E]
    a_F, sigma_F = par[C.P_A_F], par[C.P_SIGMA_F]
    phi, h_bar, a_h = par[C.P_PHI], par[C.P_H_BAR], par[C.P_A_H]
    a_ene, sigma_ene = par[C.P_A_ENE], par[C.P_SIGMA_ENE]
    kappa_N, kappa_bar = par[C.P_KAPPA_N], par[C.P_KAPPA_BAR]
    eta, k_bar = par[C.P_ETA], par[C.P_K_BAR]
    land, labor = par[C.P_LAND], par[C.P_LABOR]

    T1 = len(c)
    V = np.empty((T1, C.NV))

    # housing services
    kk = k_bar + kH
    h = land ** a_h * kk ** (1.0 - a_h)
    V[:, C.H] = h
    V[:, C.H_KH] = (1.0 - a_h) * h / kk
    V[:, C.H_KHKH] = -a_h * (1.0 - a_h) * h / kk ** 2

    # energy requirement of the stock
    V[:, C.REQ] = (kappa_bar / kE + kappa_N) * k_bar + kappa_N * kH
    V[:, C.REQ_KE] = -kappa_bar * k_bar / kE ** 2
    V[:, C.REQ_KEKE] = 2.0 * kappa_bar * k_bar / kE ** 3

    # utility partials
    hx = h - h_bar
    if eta == 1.0:
        lam = phi / c
        lam_c = -phi / c ** 2
        u_ch = np.zeros(T1)
        chi = (1.0 - phi) / hx
        u_hh = -(1.0 - phi) / hx ** 2
    else:
        v = c ** phi * hx ** (1.0 - phi)
        w1 = v ** (1.0 - eta)
        lam = phi * w1 / c
        lam_c = phi * w1 * (phi * (1.0 - eta) - 1.0) / c ** 2
        u_ch = phi * (1.0 - phi) * (1.0 - eta) * w1 / (c * hx)
        chi = (1.0 - phi) * w1 / hx
        u_hh = (1.0 - phi) * w1 * ((1.0 - phi) * (1.0 - eta) - 1.0) / hx ** 2
    V[:, C.LAM] = lam
    V[:, C.LAM_C] = lam_c
    V[:, C.LAM_KH] = u_ch * V[:, C.H_KH]
    V[:, C.CHI] = chi
    V[:, C.CHI_C] = u_ch
    V[:, C.CHI_KH] = u_hh * V[:, C.H_KH]

    # final good: Cobb-Douglas composite nested in a CES with electricity
    Z = kY ** a_Z * (A_Y * labor) ** (1.0 - a_Z)
    Z_kY = a_Z * Z / kY
    Z_kYkY = a_Z * (a_Z - 1.0) * Z / kY ** 2
    Y, Y1, Y2, Y11, Y12, Y22 = _ces_pack(a, Z, eY, sigma)
    V[:, C.Z] = Z
    V[:, C.Y] = Y
    V[:, C.W] = Y1 * (1.0 - a_Z) * Z / labor
    V[:, C.PE] = Y2
    V[:, C.PE_KY] = Y12 * Z_kY
    V[:, C.PE_EY] = Y22
    V[:, C.R] = Y1 * Z_kY
    V[:, C.R_KY] = Y11 * Z_kY ** 2 + Y1 * Z_kYkY
    V[:, C.R_EY] = Y12 * Z_kY

    # electricity chain
    eF, F1, F2, F11, F12, F22 = _ces_pack(a_F, kF, resF, sigma_F)
    eN = A_N * kN
    E, G1, G2, G11, G12, G22 = _ces_pack(a_E, eF, eN, sigma_E)
    V[:, C.EF] = eF
    V[:, C.EN] = eN
    V[:, C.EE] = E
    V[:, C.EE_KF] = G1 * F1
    V[:, C.EE_RF] = G1 * F2
    V[:, C.EE_KN] = G2 * A_N

    pE = V[:, C.PE]
    pF = pE * G1
    pN = pE * G2
    V[:, C.PF] = pF
    V[:, C.PF_KY] = V[:, C.PE_KY] * G1
    V[:, C.PF_EY] = V[:, C.PE_EY] * G1
    V[:, C.PF_KF] = pE * G11 * F1
    V[:, C.PF_RF] = pE * G11 * F2
    V[:, C.PF_KN] = pE * G12 * A_N
    V[:, C.PN] = pN
    V[:, C.PN_KY] = V[:, C.PE_KY] * G2
    V[:, C.PN_EY] = V[:, C.PE_EY] * G2
    V[:, C.PN_KF] = pE * G12 * F1
    V[:, C.PN_RF] = pE * G12 * F2
    V[:, C.PN_KN] = pE * G22 * A_N

    V[:, C.RF] = pF * F1
    V[:, C.RF_KY] = V[:, C.PF_KY] * F1
    V[:, C.RF_EY] = V[:, C.PF_EY] * F1
    V[:, C.RF_KF] = V[:, C.PF_KF] * F1 + pF * F11
    V[:, C.RF_RF] = V[:, C.PF_RF] * F1 + pF * F12
    V[:, C.RF_KN] = V[:, C.PF_KN] * F1

    V[:, C.MPRF] = pF * F2
    V[:, C.MPRF_KY] = V[:, C.PF_KY] * F2
    V[:, C.MPRF_EY] = V[:, C.PF_EY] * F2
    V[:, C.MPRF_KF] = V[:, C.PF_KF] * F2 + pF * F12
    V[:, C.MPRF_RF] = V[:, C.PF_RF] * F2 + pF * F22
    V[:, C.MPRF_KN] = V[:, C.PF_KN] * F2

    V[:, C.RN] = pN * A_N
    V[:, C.RN_KY] = V[:, C.PN_KY] * A_N
    V[:, C.RN_EY] = V[:, C.PN_EY] * A_N
    V[:, C.RN_KF] = V[:, C.PN_KF] * A_N
    V[:, C.RN_RF] = V[:, C.PN_RF] * A_N
    V[:, C.RN_KN] = V[:, C.PN_KN] * A_N

    # purchased household energy bundle
    Q, qe, qr, qee, qer, qrr = _ces_pack(a_ene, eh, res, sigma_ene)
    V[:, C.PURCH] = Q
    V[:, C.QE] = qe
    V[:, C.QR] = qr
    V[:, C.QE_E] = qee
    V[:, C.QE_R] = qer
    V[:, C.QR_E] = qer
    V[:, C.QR_R] = qrr

    # shadow value of the energy requirement: nu = lam * pE / (d ene / d e)
    nu = lam * pE / qe
    V[:, C.NU] = nu
    V[:, C.NU_C] = lam_c * pE / qe
    V[:, C.NU_KH] = V[:, C.LAM_KH] * pE / qe
    V[:, C.NU_KY] = lam * V[:, C.PE_KY] / qe
    V[:, C.NU_EY] = lam * V[:, C.PE_EY] / qe
    V[:, C.NU_E] = -nu * qee / qe
    V[:, C.NU_RES] = -nu * qer / qe
    return V
