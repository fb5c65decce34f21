"""Policy instrument paths."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass
class PolicyInstruments:
    """Time paths of the carbon prices, retrofit subsidy, and transfers.

    ``Gamma`` is filled in by the solver from the government budget; ``caps``
    and ``budget_split`` carry scenario constraints.
    """

    p_C: np.ndarray            # industry carbon price
    p_HC: np.ndarray           # housing carbon price
    tau_INVE: np.ndarray       # retrofit investment subsidy rate
    Gamma: np.ndarray | None = None   # lump-sum transfer (sign-free)
    caps: np.ndarray | None = None    # optional per-period bounds on p_HC
    budget_split: tuple | None = None  # (industry budget, housing budget)

    def __post_init__(self):
        self.p_C = np.asarray(self.p_C, dtype=float)
        self.p_HC = np.asarray(self.p_HC, dtype=float)
        self.tau_INVE = np.asarray(self.tau_INVE, dtype=float)
        n = len(self.p_C)
        if len(self.p_HC) != n or len(self.tau_INVE) != n:
            raise ConfigurationError("policy paths must share one horizon")
        if np.any(self.p_C < 0) or np.any(self.p_HC < 0):
            raise ConfigurationError("carbon prices must be non-negative")
        if np.any(self.tau_INVE < 0) or np.any(self.tau_INVE >= 1):
            raise ConfigurationError("subsidy rate must lie in [0, 1)")
        if self.Gamma is not None:
            self.Gamma = np.asarray(self.Gamma, dtype=float)

    @classmethod
    def none(cls, horizon: int) -> "PolicyInstruments":
        """No-policy instruments over t = 0..horizon."""
        z = np.zeros(horizon + 1)
        return cls(p_C=z.copy(), p_HC=z.copy(), tau_INVE=z.copy())

    def __len__(self) -> int:
        return len(self.p_C)
