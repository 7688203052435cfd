"""Disturbance-parameter forecasts and their error models.

The ground truth is a per-step parameter vector that maps identically to the
disturbance.  A forecast issued at time t for n steps ahead perturbs the
truth by a seeded random unit direction scaled to the model's error
magnitude, so the issued error norm equals the model magnitude exactly while
the direction carries no adversarial structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng

EXACT = "exact"
SQRT_T_DECAY = "sqrt_t_decay"
CONST_EXP = "const_exp"
CONST = "const"

_KINDS = (EXACT, SQRT_T_DECAY, CONST_EXP, CONST)


@dataclass(frozen=True)
class ParamTrajectory:
    """True parameter vectors, one per control step; the disturbance map is
    the identity, so these are the realized disturbances themselves."""

    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        for v in self.values:
            v.setflags(write=False)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ForecastModel:
    """Error-magnitude law for n-step-ahead forecasts issued at time t.

    exact         -> 0
    sqrt_t_decay  -> R * (t+1)^(-1/2) * rate^(-n/2)   (improves over time)
    const_exp     -> R * rate^(-n)                    (bounded, decays ahead)
    const         -> R                                 (flat)

    The time-decay law is undefined at t = 0 as written, so it is evaluated
    at t + 1.
    """

    kind: str
    R: float = 0.0
    rate: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown forecast kind {self.kind!r}")
        if self.R < 0:
            raise ValueError("error scale R must be non-negative")
        if self.rate <= 0:
            raise ValueError("decay base must be positive")

    def phi(self, t: int, n: int) -> float:
        """Forecast error magnitude for the (t, n) issue."""
        if self.kind == EXACT:
            return 0.0
        if self.kind == SQRT_T_DECAY:
            return self.R * (t + 1) ** -0.5 * self.rate ** (-n / 2.0)
        if self.kind == CONST_EXP:
            return self.R * self.rate ** (-float(n))
        return self.R


@dataclass
class ForecastLog:
    """Squared error norms of every issued forecast, keyed by (t, n)."""

    issued: dict[tuple[int, int], float] = field(default_factory=dict)

    def note(self, t: int, n: int, sq_err: float) -> None:
        self.issued[(t, n)] = sq_err


def _error_direction(model: ForecastModel, t: int, n: int, dim: int) -> np.ndarray:
    """Unit vector drawn deterministically from (seed, t, n)."""
    g = _rng.normal(model.rng_seed, ("forecast-direction", t, n), dim)
    norm = float(np.linalg.norm(g))
    bump = 0
    while norm == 0.0:  # probability ~0; redraw from a shifted label
        bump += 1
        g = _rng.normal(model.rng_seed, ("forecast-direction", t, n, bump), dim)
        norm = float(np.linalg.norm(g))
    return g / norm


def forecast_window(
    traj: ParamTrajectory,
    model: ForecastModel,
    t: int,
    k: int,
    log: ForecastLog | None = None,
) -> list[np.ndarray]:
    """Forecasts of the next min(k, remaining) parameters as seen at time t.

    Exact models return the truth bitwise; other models add the model's error
    magnitude along a seeded unit direction.  Issued errors are recorded.
    """
    T = len(traj)
    if not 0 <= t < T:
        raise ValueError(f"issue time {t} outside 0..{T - 1}")
    length = min(k, T - t)
    out = []
    for n in range(length):
        truth = traj.values[t + n]
        if model.kind == EXACT:
            value = truth
            err = 0.0
        else:
            err = model.phi(t, n)
            value = truth + err * _error_direction(model, t, n, truth.shape[0])
        if log is not None:
            log.note(t, n, err * err)
        out.append(value)
    return out


def cumulative_phi(log: ForecastLog, n: int) -> float:
    """Sum of squared issued n-step-ahead errors over all issue times."""
    return float(sum(v for (t, m), v in sorted(log.issued.items()) if m == n))


def phi_cumulative(model: ForecastModel, T: int, n: int) -> float:
    """The definitional cumulative squared error: issue times 0..T-n inclusive."""
    if n > T:
        raise ValueError("lookahead exceeds the horizon")
    total = 0.0
    for t in range(T - n + 1):
        e = model.phi(t, n)
        total += e * e
    return total
