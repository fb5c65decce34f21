"""Bracketed scalar root finding with multiple-root detection."""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .errors import SolverError


def bracketed_root(fun, lo: float, hi: float, n_scan: int = 12,
                   xtol: float = 1e-12, rtol: float = 1e-12,
                   label: str = "level search"):
    """Root of ``fun`` on [lo, hi] after a sign-change scan.

    Raises SolverError if the scan finds no sign change (reporting the
    function values at both bracket ends) or more than one (an explicit
    initial guess must disambiguate).
    """
    xs = np.linspace(lo, hi, n_scan)
    fs = np.array([fun(x) for x in xs])
    if np.any(fs == 0.0):
        return float(xs[np.argmax(fs == 0.0)])
    sign_changes = np.nonzero(np.diff(np.sign(fs)) != 0)[0]
    if sign_changes.size == 0:
        raise SolverError(
            f"{label}: no sign change on [{lo:.6g}, {hi:.6g}]; "
            f"f(lo)={fs[0]:.6g}, f(hi)={fs[-1]:.6g}")
    if sign_changes.size > 1:
        raise SolverError(
            f"{label}: {sign_changes.size} sign changes detected; "
            "provide an explicit initial guess to select a root")
    i = sign_changes[0]
    return float(brentq(fun, xs[i], xs[i + 1], xtol=xtol, rtol=rtol))
