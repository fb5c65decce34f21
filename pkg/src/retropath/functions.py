"""Functional forms of the economy and their analytic derivatives.

Pure total functions of real inputs: CES aggregators, Stone-Geary utility,
housing services, the retrofit-dependent energy requirement of the housing
stock, the dual price of the household energy composite, and the four
production technologies with every marginal product. All accept scalars or
NumPy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .params import ModelParameters, TechnologyPaths, technology_paths  # noqa: F401

__all__ = [
    "evaluate_ces", "ces_gradient", "ces_second",
    "utility", "utility_second",
    "housing_services", "housing_services_gradient",
    "housing_energy_requirement", "housing_energy_requirement_gradient",
    "composite_energy_price", "energy_split",
    "production_block", "ProductionBlock", "technology_paths",
]


def _exponent(elasticity):
    if np.any(np.asarray(elasticity) == 1.0):
        raise ConfigurationError("CES elasticity of 1 is the Cobb-Douglas case; "
                                 "use the explicit Cobb-Douglas form")
    if np.any(np.asarray(elasticity) <= 0.0):
        raise DomainError(f"CES elasticity must be positive, got {elasticity}")
    return (elasticity - 1.0) / elasticity


def evaluate_ces(share, x1, x2, elasticity):
    """(share*x1^r + (1-share)*x2^r)^(1/r) with r = (sigma-1)/sigma.

    Degree-1 homogeneous and weakly increasing in both inputs. For sigma < 1
    a zero input sends the aggregate to its limit value 0.
    """
    r = _exponent(elasticity)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(x1 < 0) or np.any(x2 < 0):
        raise DomainError("CES inputs must be non-negative")
    if r < 0 and (np.any(x1 == 0) or np.any(x2 == 0)):
        # essential inputs: the limit of the aggregate is zero
        zero = (x1 == 0) | (x2 == 0)
        out = np.zeros(np.broadcast(x1, x2).shape)
        if not np.all(zero):
            x1i, x2i = np.broadcast_arrays(x1, x2)
            out[~zero] = _ces_interior(share, x1i[~zero], x2i[~zero], r)
        return out if out.ndim else float(out)
    out = _ces_interior(share, x1, x2, r)
    return out if isinstance(out, np.ndarray) and out.ndim else float(out)


def _ces_interior(s, x1, x2, r):
    return (s * x1 ** r + (1.0 - s) * x2 ** r) ** (1.0 / r)


def ces_gradient(share, x1, x2, elasticity):
    """Marginal products (d/dx1, d/dx2) of the CES aggregate."""
    r = _exponent(elasticity)
    y = _ces_interior(share, x1, x2, r)
    d1 = share * x1 ** (r - 1.0) * y ** (1.0 - r)
    d2 = (1.0 - share) * x2 ** (r - 1.0) * y ** (1.0 - r)
    return d1, d2


def ces_second(share, x1, x2, elasticity):
    """Second partials (d11, d12, d22) of the CES aggregate."""
    r = _exponent(elasticity)
    s = share
    y = _ces_interior(s, x1, x2, r)
    d1 = s * x1 ** (r - 1.0) * y ** (1.0 - r)
    d2 = (1.0 - s) * x2 ** (r - 1.0) * y ** (1.0 - r)
    d11 = s * (r - 1.0) * x1 ** (r - 2.0) * y ** (1.0 - r) + (1.0 - r) * d1 * d1 / y
    d22 = (1.0 - s) * (r - 1.0) * x2 ** (r - 2.0) * y ** (1.0 - r) + (1.0 - r) * d2 * d2 / y
    d12 = (1.0 - r) * d1 * d2 / y
    return d11, d12, d22


def utility(c, h, params: ModelParameters):
    """Period utility with gradient: returns (u, u_c, u_h).

    Stone-Geary over consumption and housing services above subsistence;
    logarithmic limit at eta = 1.
    """
    c = np.asarray(c, dtype=float)
    h = np.asarray(h, dtype=float)
    if np.any(c <= 0):
        raise DomainError("consumption must be strictly positive")
    if np.any(h <= params.h_bar):
        raise DomainError(
            f"housing services must exceed the subsistence level {params.h_bar}")
    phi, eta = params.phi, params.eta
    hx = h - params.h_bar
    if eta == 1.0:
        u = phi * np.log(c) + (1.0 - phi) * np.log(hx)
        u_c = phi / c
        u_h = (1.0 - phi) / hx
    else:
        v = c ** phi * hx ** (1.0 - phi)
        u = v ** (1.0 - eta) / (1.0 - eta)
        u_c = phi * v ** (1.0 - eta) / c
        u_h = (1.0 - phi) * v ** (1.0 - eta) / hx
    return _sq(u), _sq(u_c), _sq(u_h)


def utility_second(c, h, params: ModelParameters):
    """Second partials (u_cc, u_ch, u_hh) of period utility."""
    c = np.asarray(c, dtype=float)
    hx = np.asarray(h, dtype=float) - params.h_bar
    phi, eta = params.phi, params.eta
    if eta == 1.0:
        u_cc = -phi / c ** 2
        u_hh = -(1.0 - phi) / hx ** 2
        u_ch = np.zeros_like(c + hx)
    else:
        v = c ** phi * hx ** (1.0 - phi)
        w = v ** (1.0 - eta)
        u_cc = phi * w * (phi * (1.0 - eta) - 1.0) / c ** 2
        u_hh = (1.0 - phi) * w * ((1.0 - phi) * (1.0 - eta) - 1.0) / hx ** 2
        u_ch = phi * (1.0 - phi) * (1.0 - eta) * w / (c * hx)
    return _sq(u_cc), _sq(u_ch), _sq(u_hh)


def housing_services(land, k_H, params: ModelParameters):
    """land^a_h * (k_bar + k_H)^(1 - a_h)."""
    land = np.asarray(land, dtype=float)
    k_H = np.asarray(k_H, dtype=float)
    if np.any(land <= 0):
        raise DomainError("land input must be strictly positive")
    if np.any(k_H < 0):
        raise DomainError("housing capital must be non-negative")
    return _sq(land ** params.a_h * (params.k_bar + k_H) ** (1.0 - params.a_h))


def housing_services_gradient(land, k_H, params: ModelParameters):
    """(dh/dland, dh/dk_H)."""
    h = housing_services(land, k_H, params)
    return (_sq(params.a_h * h / land),
            _sq((1.0 - params.a_h) * h / (params.k_bar + k_H)))


def housing_energy_requirement(k_E, k_H, params: ModelParameters):
    """(kappa_bar/k_E + kappa_N) * k_bar + kappa_N * k_H.

    Strictly decreasing in retrofit capital k_E with infimum
    kappa_N * (k_bar + k_H): old buildings can approach, never beat, the new
    intensity.
    """
    k_E = np.asarray(k_E, dtype=float)
    k_H = np.asarray(k_H, dtype=float)
    if np.any(k_E <= 0):
        raise DomainError("efficiency capital must be strictly positive "
                          "(old-stock intensity diverges at zero)")
    if np.any(k_H < 0):
        raise DomainError("housing capital must be non-negative")
    return _sq((params.kappa_bar / k_E + params.kappa_N) * params.k_bar
               + params.kappa_N * k_H)


def housing_energy_requirement_gradient(k_E, k_H, params: ModelParameters):
    """(d ene/d k_E, d ene/d k_H)."""
    k_E = np.asarray(k_E, dtype=float)
    d_kE = -params.kappa_bar * params.k_bar / k_E ** 2
    d_kH = np.full_like(d_kE, params.kappa_N)
    return _sq(d_kE), _sq(d_kH)


def composite_energy_price(p_E, p_res_full, params: ModelParameters):
    """Minimum expenditure per unit of the household energy composite.

    ``p_res_full`` is the resource price inclusive of any housing carbon
    price. Dual of the e-res CES aggregator.
    """
    if params.sigma_ene == 1.0:
        raise ConfigurationError("sigma_ene = 1 is outside the calibrated regime")
    p_E = np.asarray(p_E, dtype=float)
    p_res_full = np.asarray(p_res_full, dtype=float)
    if np.any(p_E <= 0) or np.any(p_res_full <= 0):
        raise DomainError("energy prices must be strictly positive")
    s, sig = params.a_ene, params.sigma_ene
    return _sq((s ** sig * p_E ** (1.0 - sig)
                + (1.0 - s) ** sig * p_res_full ** (1.0 - sig)) ** (1.0 / (1.0 - sig)))


def energy_split(ene, p_E, p_res_full, params: ModelParameters):
    """Expenditure-minimizing (e, res) delivering the composite quantity ene."""
    p_ene = composite_energy_price(p_E, p_res_full, params)
    s, sig = params.a_ene, params.sigma_ene
    e = ene * s ** sig * (p_ene / p_E) ** sig
    res = ene * (1.0 - s) ** sig * (p_ene / p_res_full) ** sig
    return _sq(e), _sq(res)


@dataclass
class ProductionBlock:
    """All technology levels with their marginal products at one point."""

    Y: float
    Z: float
    E: float
    E_F: float
    E_N: float
    dY_dKY: float
    dY_dL: float
    dY_dEY: float
    dE_dEF: float
    dE_dEN: float
    dEF_dKF: float
    dEF_dResF: float
    dEN_dKN: float


def production_block(K_Y, L, E_Y, K_F, Res_F, K_N, A_Y, A_N,
                     params: ModelParameters) -> ProductionBlock:
    """Evaluate the four technologies and every marginal product.

    Final good: CES over the Cobb-Douglas capital-labor composite and
    electricity. Electricity: CES over fossil and renewable generation;
    fossil generation: CES over capital and the imported resource; renewable
    generation is linear in capital.
    """
    for name, v in (("K_Y", K_Y), ("L", L), ("E_Y", E_Y), ("K_F", K_F),
                    ("Res_F", Res_F), ("K_N", K_N)):
        if np.any(np.asarray(v) < 0):
            raise DomainError(f"production input {name} must be non-negative")
    p = params
    Z = K_Y ** p.a_Z * (A_Y * L) ** (1.0 - p.a_Z)
    Y = evaluate_ces(p.a, Z, E_Y, p.sigma)
    dY_dZ, dY_dEY = ces_gradient(p.a, Z, E_Y, p.sigma)
    E_F = evaluate_ces(p.a_F, K_F, Res_F, p.sigma_F)
    E_N = A_N * K_N
    E = evaluate_ces(p.a_E, E_F, E_N, p.sigma_E)
    dE_dEF, dE_dEN = ces_gradient(p.a_E, E_F, E_N, p.sigma_E)
    dEF_dKF, dEF_dResF = ces_gradient(p.a_F, K_F, Res_F, p.sigma_F)
    return ProductionBlock(
        Y=_sq(Y), Z=_sq(Z), E=_sq(E), E_F=_sq(E_F), E_N=_sq(E_N),
        dY_dKY=_sq(dY_dZ * p.a_Z * Z / K_Y),
        dY_dL=_sq(dY_dZ * (1.0 - p.a_Z) * Z / L),
        dY_dEY=_sq(dY_dEY),
        dE_dEF=_sq(dE_dEF), dE_dEN=_sq(dE_dEN),
        dEF_dKF=_sq(dEF_dKF), dEF_dResF=_sq(dEF_dResF),
        dEN_dKN=_sq(A_N if np.ndim(A_N) else float(A_N)),
    )


def _sq(x):
    """Collapse 0-d arrays to plain floats; pass arrays through."""
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x
