import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from retropath import (ConfigurationError, DomainError, ModelParameters,
                       composite_energy_price, evaluate_ces,
                       housing_energy_requirement, housing_services,
                       production_block, technology_paths, utility)
from retropath.functions import (ces_gradient, ces_second, energy_split,
                                 housing_energy_requirement_gradient,
                                 housing_services_gradient, utility_second)

P = ModelParameters()


# ---------------------------------------------------------------- CES
def test_ces_equal_inputs_identity():
    assert evaluate_ces(0.57, 1.0, 1.0, 4.7) == pytest.approx(1.0, rel=1e-14)


def test_ces_zero_input_high_elasticity():
    # direct evaluation, cross-checked by the x2 -> 0 limit
    expected = 0.57 ** (4.7 / 3.7)
    assert evaluate_ces(0.57, 1.0, 0.0, 4.7) == pytest.approx(expected, rel=1e-12)
    for eps in (1e-6, 1e-9, 1e-12):
        lim = evaluate_ces(0.57, 1.0, eps, 4.7)
        assert abs(lim - expected) < 10 * eps ** (3.7 / 4.7)


def test_ces_zero_input_low_elasticity_is_zero():
    assert evaluate_ces(0.8, 0.0, 2.0, 0.2) == 0.0
    assert evaluate_ces(0.8, 1.0, 0.0, 0.2) == 0.0


def test_ces_homogeneity_example():
    assert evaluate_ces(0.14, 2.0, 3.0, 0.89) == pytest.approx(
        2.0 * evaluate_ces(0.14, 1.0, 1.5, 0.89), rel=1e-13)


def test_ces_rejects_unit_elasticity():
    with pytest.raises(ConfigurationError):
        evaluate_ces(0.5, 1.0, 1.0, 1.0)


def test_ces_rejects_negative_inputs():
    with pytest.raises(DomainError):
        evaluate_ces(0.5, -1.0, 1.0, 0.5)


@given(share=st.floats(0.05, 0.95), x1=st.floats(0.1, 50.0),
       x2=st.floats(0.1, 50.0), sig=st.sampled_from([0.2, 0.4, 0.89, 2.0, 4.7]),
       scale=st.floats(0.5, 4.0))
@settings(max_examples=80, deadline=None)
def test_ces_degree_one_homogeneous(share, x1, x2, sig, scale):
    lhs = evaluate_ces(share, scale * x1, scale * x2, sig)
    rhs = scale * evaluate_ces(share, x1, x2, sig)
    assert lhs == pytest.approx(rhs, rel=1e-10)


@given(share=st.floats(0.05, 0.95), x1=st.floats(0.1, 20.0),
       x2=st.floats(0.1, 20.0), sig=st.sampled_from([0.2, 0.89, 4.7]))
@settings(max_examples=60, deadline=None)
def test_ces_gradient_matches_fd(share, x1, x2, sig):
    d1, d2 = ces_gradient(share, x1, x2, sig)
    h1 = 1e-6 * max(x1, 1.0)
    h2 = 1e-6 * max(x2, 1.0)
    fd1 = (evaluate_ces(share, x1 + h1, x2, sig)
           - evaluate_ces(share, x1 - h1, x2, sig)) / (2 * h1)
    fd2 = (evaluate_ces(share, x1, x2 + h2, sig)
           - evaluate_ces(share, x1, x2 - h2, sig)) / (2 * h2)
    scale = evaluate_ces(share, x1, x2, sig)
    assert d1 == pytest.approx(fd1, rel=2e-6, abs=1e-9 * scale)
    assert d2 == pytest.approx(fd2, rel=2e-6, abs=1e-9 * scale)


def test_ces_second_matches_fd(rng):
    for _ in range(25):
        s = rng.uniform(0.1, 0.9)
        x1, x2 = rng.uniform(0.2, 10.0, size=2)
        sig = rng.choice([0.2, 0.4, 0.89, 4.7])
        d11, d12, d22 = ces_second(s, x1, x2, sig)
        h = 1e-5 * max(x1, 1.0)
        fd11 = (ces_gradient(s, x1 + h, x2, sig)[0]
                - ces_gradient(s, x1 - h, x2, sig)[0]) / (2 * h)
        fd12 = (ces_gradient(s, x1, x2 + h, sig)[0]
                - ces_gradient(s, x1, x2 - h, sig)[0]) / (2 * h)
        fd22 = (ces_gradient(s, x1, x2 + h, sig)[1]
                - ces_gradient(s, x1, x2 - h, sig)[1]) / (2 * h)
        assert d11 == pytest.approx(fd11, rel=5e-5, abs=1e-10)
        assert d12 == pytest.approx(fd12, rel=5e-5, abs=1e-10)
        assert d22 == pytest.approx(fd22, rel=5e-5, abs=1e-10)


# ---------------------------------------------------------------- utility
def test_utility_log_values():
    u0, _, _ = utility(1.0, P.h_bar + 1.0, P)
    assert u0 == pytest.approx(0.0, abs=1e-14)
    u1, _, _ = utility(2.0, P.h_bar + 1.0, P)
    assert u1 == pytest.approx(0.8 * math.log(2.0), rel=1e-13)


def test_utility_gradient_matches_fd():
    c, h = 1.5, P.h_bar + 0.7
    _, u_c, u_h = utility(c, h, P)
    hc = 1e-6 * c
    hh = 1e-6 * h
    fd_c = (utility(c + hc, h, P)[0] - utility(c - hc, h, P)[0]) / (2 * hc)
    fd_h = (utility(c, h + hh, P)[0] - utility(c, h - hh, P)[0]) / (2 * hh)
    assert u_c == pytest.approx(fd_c, rel=1e-6)
    assert u_h == pytest.approx(fd_h, rel=1e-6)


@pytest.mark.parametrize("eta", [1.0, 1.5, 2.0])
def test_utility_concavity(eta, rng):
    p = P.replace(eta=eta)
    for _ in range(30):
        c = rng.uniform(0.2, 5.0)
        h = p.h_bar + rng.uniform(0.1, 5.0)
        u_cc, u_ch, u_hh = utility_second(c, h, p)
        assert u_cc < 0 and u_hh < 0
        assert u_cc * u_hh - u_ch ** 2 > 0 or eta == 1.0
        if eta == 1.0:
            assert u_cc * u_hh - u_ch ** 2 > 0


def test_utility_second_matches_fd(rng):
    for eta in (1.0, 1.7):
        p = P.replace(eta=eta)
        c = 1.3
        h = p.h_bar + 0.9
        u_cc, u_ch, u_hh = utility_second(c, h, p)
        hc, hh = 1e-6 * c, 1e-6 * h
        fd_cc = (utility(c + hc, h, p)[1] - utility(c - hc, h, p)[1]) / (2 * hc)
        fd_ch = (utility(c, h + hh, p)[1] - utility(c, h - hh, p)[1]) / (2 * hh)
        fd_hh = (utility(c, h + hh, p)[2] - utility(c, h - hh, p)[2]) / (2 * hh)
        assert u_cc == pytest.approx(fd_cc, rel=1e-5)
        assert u_ch == pytest.approx(fd_ch, rel=1e-5, abs=1e-9)
        assert u_hh == pytest.approx(fd_hh, rel=1e-5)


def test_utility_domain_errors():
    with pytest.raises(DomainError, match="subsistence"):
        utility(1.0, P.h_bar, P)
    with pytest.raises(DomainError):
        utility(0.0, P.h_bar + 1.0, P)


def test_utility_nonlog_form():
    p = P.replace(eta=2.0)
    c, h = 1.4, p.h_bar + 2.0
    v = c ** p.phi * (h - p.h_bar) ** (1 - p.phi)
    expected = v ** (1 - p.eta) / (1 - p.eta)
    assert utility(c, h, p)[0] == pytest.approx(expected, rel=1e-13)


# ---------------------------------------------------------------- housing
def test_housing_services_unit_point():
    p = P.replace(k_bar=1.0)
    assert housing_services(1.0, 0.0, p) == pytest.approx(1.0, rel=1e-14)


def test_housing_services_monotone_in_capital():
    vals = [housing_services(1.0, k, P) for k in (0.0, 1.0, 2.0)]
    assert vals[0] < vals[1] < vals[2]


def test_housing_services_homogeneous():
    p = P.replace(k_bar=1.0)
    base = housing_services(2.0, 3.0, p)
    p2 = P.replace(k_bar=2.0)
    assert housing_services(4.0, 6.0, p2) == pytest.approx(2 * base, rel=1e-13)


def test_housing_services_domain_error():
    with pytest.raises(DomainError):
        housing_services(-1.0, 1.0, P)
    with pytest.raises(DomainError):
        housing_services(1.0, -0.5, P)


def test_housing_services_gradient_fd():
    land, kH = 5.0, 1.4
    dland, dkH = housing_services_gradient(land, kH, P)
    h = 1e-6
    fd_land = (housing_services(land + h, kH, P) - housing_services(land - h, kH, P)) / (2 * h)
    fd_kH = (housing_services(land, kH + h, P) - housing_services(land, kH - h, P)) / (2 * h)
    assert dland == pytest.approx(fd_land, rel=1e-6)
    assert dkH == pytest.approx(fd_kH, rel=1e-6)


# ---------------------------------------------------------------- energy requirement
def test_energy_requirement_value():
    p = P.replace(k_bar=1.0, kappa_bar=0.005, kappa_N=0.02)
    assert housing_energy_requirement(0.08, 0.0, p) == pytest.approx(0.0825, rel=1e-13)


def test_energy_requirement_limit():
    p = P.replace(k_bar=1.0, kappa_bar=0.005, kappa_N=0.02)
    assert housing_energy_requirement(1e12, 0.0, p) == pytest.approx(0.02, rel=1e-9)


def test_energy_requirement_partials_fd():
    kE, kH = 0.23, 1.4
    d_kE, d_kH = housing_energy_requirement_gradient(kE, kH, P)
    h = 1e-6
    fd_kE = (housing_energy_requirement(kE + h, kH, P)
             - housing_energy_requirement(kE - h, kH, P)) / (2 * h)
    fd_kH = (housing_energy_requirement(kE, kH + h, P)
             - housing_energy_requirement(kE, kH - h, P)) / (2 * h)
    assert d_kE == pytest.approx(fd_kE, rel=1e-6)
    assert d_kE == pytest.approx(-P.kappa_bar * P.k_bar / kE ** 2, rel=1e-12)
    assert d_kH == pytest.approx(fd_kH, rel=1e-6)


@given(kE=st.floats(1e-3, 1e3), kH=st.floats(0.0, 50.0))
@settings(max_examples=80, deadline=None)
def test_energy_requirement_lower_bound(kE, kH):
    lo = P.kappa_N * (P.k_bar + kH)
    assert housing_energy_requirement(kE, kH, P) > lo


def test_energy_requirement_domain_error():
    with pytest.raises(DomainError):
        housing_energy_requirement(0.0, 1.0, P)


# ---------------------------------------------------------------- composite price
def _expenditure_oracle(p_E, p_res, params):
    """Min expenditure for one unit of the composite, via ratio search."""
    sig, s = params.sigma_ene, params.a_ene
    r = (sig - 1.0) / sig

    def cost(log_ratio):
        x = math.exp(log_ratio)  # e / res
        agg = (s * x ** r + (1 - s)) ** (1 / r)
        res = 1.0 / agg
        return p_E * x * res + p_res * res

    out = minimize_scalar(cost, bounds=(-25, 25), method="bounded",
                          options={"xatol": 1e-13})
    return out.fun


def test_composite_price_example():
    expected = (0.14 ** 0.89 + 0.86 ** 0.89) ** (1 / 0.11)
    got = composite_energy_price(1.0, 1.0, P)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(1.534, abs=5e-4)
    assert got == pytest.approx(_expenditure_oracle(1.0, 1.0, P), rel=1e-8)


def test_composite_price_duality(rng):
    for _ in range(15):
        p_E = rng.uniform(0.05, 5.0)
        p_res = rng.uniform(0.05, 5.0)
        assert composite_energy_price(p_E, p_res, P) == pytest.approx(
            _expenditure_oracle(p_E, p_res, P), rel=1e-8)


def test_composite_price_homogeneous():
    one = composite_energy_price(0.4, 0.1, P)
    two = composite_energy_price(0.8, 0.2, P)
    assert two == pytest.approx(2 * one, rel=1e-13)


def test_composite_price_rejects_unit_elasticity():
    with pytest.raises(ConfigurationError):
        composite_energy_price(1.0, 1.0, P.replace(sigma_ene=1.0))


def test_energy_split_consistency(rng):
    from retropath.functions import evaluate_ces as ces
    for _ in range(10):
        ene = rng.uniform(0.01, 2.0)
        p_E, p_res = rng.uniform(0.05, 2.0, size=2)
        e, res = energy_split(ene, p_E, p_res, P)
        assert ces(P.a_ene, e, res, P.sigma_ene) == pytest.approx(ene, rel=1e-12)
        p_ene = composite_energy_price(p_E, p_res, P)
        assert p_E * e + p_res * res == pytest.approx(p_ene * ene, rel=1e-12)


# ---------------------------------------------------------------- production
def test_renewable_technology_linear():
    b = production_block(1.0, 1.0, 0.5, 1.0, 1.0, 2.0, 1.0, 0.69, P)
    assert b.E_N == pytest.approx(1.38, rel=1e-14)


def test_production_constant_returns():
    b1 = production_block(2.0, 1.0, 0.4, 1.0, 0.8, 0.7, 1.3, 0.69, P)
    b2 = production_block(4.0, 2.0, 0.8, 2.0, 1.6, 1.4, 1.3, 0.69, P)
    assert b2.Y == pytest.approx(2 * b1.Y, rel=1e-12)
    assert b2.E == pytest.approx(2 * b1.E, rel=1e-12)
    assert b2.E_F == pytest.approx(2 * b1.E_F, rel=1e-12)


def test_production_marginal_products_fd(rng):
    # acceptance-grade sweep: every marginal product vs central differences
    for _ in range(100):
        K_Y, L, E_Y, K_F, Res_F, K_N = rng.uniform(0.2, 8.0, size=6)
        A_Y = rng.uniform(0.8, 3.0)
        A_N = rng.uniform(0.3, 1.5)
        b = production_block(K_Y, L, E_Y, K_F, Res_F, K_N, A_Y, A_N, P)
        pairs = [
            ("dY_dKY", lambda x: production_block(x, L, E_Y, K_F, Res_F, K_N, A_Y, A_N, P).Y, K_Y),
            ("dY_dL", lambda x: production_block(K_Y, x, E_Y, K_F, Res_F, K_N, A_Y, A_N, P).Y, L),
            ("dY_dEY", lambda x: production_block(K_Y, L, x, K_F, Res_F, K_N, A_Y, A_N, P).Y, E_Y),
            ("dE_dEF", None, None),
            ("dEF_dKF", lambda x: production_block(K_Y, L, E_Y, x, Res_F, K_N, A_Y, A_N, P).E_F, K_F),
            ("dEF_dResF", lambda x: production_block(K_Y, L, E_Y, K_F, x, K_N, A_Y, A_N, P).E_F, Res_F),
            ("dEN_dKN", lambda x: production_block(K_Y, L, E_Y, K_F, Res_F, x, A_Y, A_N, P).E_N, K_N),
        ]
        scales = {"dY_dKY": b.Y, "dY_dL": b.Y, "dY_dEY": b.Y,
                  "dEF_dKF": b.E_F, "dEF_dResF": b.E_F, "dEN_dKN": b.E_N}
        for name, f, x in pairs:
            if f is None:
                continue
            h = 1e-6 * max(x, 1.0)
            fd = (f(x + h) - f(x - h)) / (2 * h)
            assert getattr(b, name) == pytest.approx(
                fd, rel=1e-6, abs=1e-9 * scales[name]), name
        # chain for dE_dEF / dE_dEN through E(eF, eN) at fixed eN
        h = 1e-6 * max(K_F, 1.0)
        fdE = (production_block(K_Y, L, E_Y, K_F + h, Res_F, K_N, A_Y, A_N, P).E
               - production_block(K_Y, L, E_Y, K_F - h, Res_F, K_N, A_Y, A_N, P).E) / (2 * h)
        assert b.dE_dEF * b.dEF_dKF == pytest.approx(fdE, rel=1e-6, abs=1e-9 * b.E)


# ---------------------------------------------------------------- technology paths
def test_technology_paths_examples():
    tech = technology_paths(P, horizon=5)
    assert tech.A_Y[0] == 1.0
    assert tech.A_Y[1] == pytest.approx(1.0 / (1.0 - 0.0859), rel=1e-13)
    assert tech.A_N[0] == 0.69
    assert tech.A_N[1] == pytest.approx(0.69 / 0.99, rel=1e-13)


def test_technology_growth_decelerates():
    tech = technology_paths(P, horizon=40)
    growth = tech.A_Y[1:] / tech.A_Y[:-1]
    assert np.all(np.diff(growth) < 0)


def test_technology_paths_invalid_growth():
    with pytest.raises(ConfigurationError):
        technology_paths(P.replace(a_Y=1.2), horizon=3)
