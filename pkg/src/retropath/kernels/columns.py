"""Column layout of the per-period value/derivative table.

The residual and Jacobian assembly consume a (T+1, NV) array ``V`` whose
columns are the quantities below, evaluated at each period's primitives
(c, k_Y, k_F, k_N, k_H, k_E, E_Y, e, res, res_F). Suffixes name the
primitive a partial derivative is taken with respect to.
"""

_NAMES = [
    # housing services and energy requirement
    "H", "H_KH", "H_KHKH",
    "REQ", "REQ_KE", "REQ_KEKE",
    # utility multipliers
    "LAM", "LAM_C", "LAM_KH",
    "CHI", "CHI_C", "CHI_KH",
    # final good
    "Z", "Y", "W",
    "PE", "PE_KY", "PE_EY",
    "R", "R_KY", "R_EY",
    # electricity supply chain
    "EF", "EN", "EE",
    "EE_KF", "EE_RF", "EE_KN",
    "PF", "PF_KY", "PF_EY", "PF_KF", "PF_RF", "PF_KN",
    "PN", "PN_KY", "PN_EY", "PN_KF", "PN_RF", "PN_KN",
    "RF", "RF_KY", "RF_EY", "RF_KF", "RF_RF", "RF_KN",
    "MPRF", "MPRF_KY", "MPRF_EY", "MPRF_KF", "MPRF_RF", "MPRF_KN",
    "RN", "RN_KY", "RN_EY", "RN_KF", "RN_RF", "RN_KN",
    # household energy composite (purchased bundle)
    "PURCH", "QE", "QR",
    "QE_E", "QE_R", "QR_E", "QR_R",
    # shadow value of the energy requirement
    "NU", "NU_C", "NU_KH", "NU_KY", "NU_EY", "NU_E", "NU_RES",
]

globals().update({name: idx for idx, name in enumerate(_NAMES)})
NV = len(_NAMES)

# parameter pack layout shared by both kernel implementations
_PAR_NAMES = [
    "a", "sigma", "a_Z", "a_E", "sigma_E", "a_F", "sigma_F",
    "phi", "h_bar", "a_h", "a_ene", "sigma_ene",
    "kappa_N", "kappa_bar", "eta", "k_bar", "land", "labor",
]

globals().update({f"P_{name.upper()}": idx for idx, name in enumerate(_PAR_NAMES)})
NP_PACK = len(_PAR_NAMES)


def pack_params(params) -> "list[float]":
    """Flatten the fields used by the kernels into a fixed-order vector."""
    import numpy as np

    return np.array([
        params.a, params.sigma, params.a_Z, params.a_E, params.sigma_E,
        params.a_F, params.sigma_F, params.phi, params.h_bar, params.a_h,
        params.a_ene, params.sigma_ene, params.kappa_N, params.kappa_bar,
        params.eta, params.k_bar, params.land, params.labor,
    ])
