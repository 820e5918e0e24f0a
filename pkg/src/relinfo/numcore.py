"""Numerical kernel shared by the dynamics modules.

Explicit Runge-Kutta integration (fixed RK4 and adaptive Dormand-Prince 5(4)),
a scaling-and-squaring matrix exponential, SVD nullspaces and a couple of
helpers for monitoring scalar channels along trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import IntegrationBudgetError, InvalidMatrixError, NumericalBlowupError, ValidationError

VectorField = Callable[[float, np.ndarray], np.ndarray]
Monitor = Callable[[np.ndarray], float]

RK4 = "rk4"
RK45 = "rk45"


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings for :func:`integrate`.

    ``step`` is the fixed step for RK4 and the initial trial step for RK45.
    ``state_floor > 0`` switches on clamping: components driven below zero by
    a step are reset to zero and counted in ``Trajectory.clamp_events``.
    ``max_step`` caps adaptive steps so that monitored channels are sampled
    on a reasonably fine grid.
    """

    method: str = RK45
    step: float = 1e-2
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 1_000_000
    state_floor: float = 0.0
    max_step: float | None = None

    def __post_init__(self):
        if self.method not in (RK4, RK45):
            raise ValidationError(f"unknown method {self.method!r}; use 'rk4' or 'rk45'")
        if not (self.step > 0 and self.rel_tol > 0 and self.abs_tol > 0):
            raise ValidationError("step, rel_tol and abs_tol must be positive")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be >= 1")
        if self.state_floor < 0:
            raise ValidationError("state_floor must be nonnegative")
        if self.max_step is not None and self.max_step <= 0:
            raise ValidationError("max_step must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Time grid, states and monitored channels of one integration run."""

    times: np.ndarray
    states: np.ndarray
    channels: Mapping[str, np.ndarray] = field(default_factory=dict)
    clamp_events: int = 0
    n_steps: int = 0
    n_rejected: int = 0

    def __post_init__(self):
        m = len(self.times)
        if self.states.shape[0] != m or any(len(v) != m for v in self.channels.values()):
            raise ValidationError("times, states and channels must have equal length")
        if m > 1 and not np.all(np.diff(self.times) > 0):
            raise ValidationError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def worst_increase(values) -> float:
    """Largest increase between consecutive samples (<= 0 if nonincreasing).

    A drop from +inf to a finite value is a decrease; inf followed by inf
    counts as no change.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    a, b = v[:-1], v[1:]
    both_inf = np.isposinf(a) & np.isposinf(b)
    with np.errstate(invalid="ignore"):
        d = np.where(both_inf, 0.0, b - a)
    return float(np.max(d))


def is_nonincreasing(values, slack: float = 1e-6) -> bool:
    return worst_increase(values) <= slack


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B5 - _DP_B4


class _Recorder:
    def __init__(self, monitors: Mapping[str, Monitor]):
        self.monitors = dict(monitors)
        self.times: list[float] = []
        self.states: list[np.ndarray] = []
        self.channels: dict[str, list[float]] = {name: [] for name in self.monitors}

    def push(self, t, x):
        self.times.append(float(t))
        self.states.append(x.copy())
        for name, fn in self.monitors.items():
            self.channels[name].append(float(fn(x)))

    def build(self, clamps, steps, rejected) -> Trajectory:
        return Trajectory(
            times=np.array(self.times),
            states=np.array(self.states),
            channels={k: np.array(v) for k, v in self.channels.items()},
            clamp_events=clamps,
            n_steps=steps,
            n_rejected=rejected,
        )


def _eval(fieldfn, t, x):
    dx = np.asarray(fieldfn(t, x), dtype=float)
    if not np.all(np.isfinite(dx)):
        raise NumericalBlowupError(t)
    return dx


def _clamp(x, config):
    if config.state_floor > 0:
        neg = x < 0
        count = int(np.count_nonzero(neg))
        if count:
            x = np.where(neg, 0.0, x)
        return x, count
    return x, 0


def integrate(
    fieldfn: VectorField,
    x0,
    t_end: float,
    config: IntegratorConfig | None = None,
    monitors: Mapping[str, Monitor] | None = None,
) -> Trajectory:
    """Integrate ``x' = fieldfn(t, x)`` from ``t = 0`` to ``t_end``.

    Every accepted step becomes a grid point of the returned trajectory;
    monitors are evaluated on each recorded state.

    Raises
    ------
    IntegrationBudgetError
        More than ``config.max_steps`` steps were attempted.
    NumericalBlowupError
        The field produced a non-finite value.
    """
    config = config or IntegratorConfig()
    x = np.array(x0, dtype=float)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise ValidationError("initial state must be a finite 1-D vector")
    if not t_end > 0:
        raise ValidationError("t_end must be positive")

    rec = _Recorder(monitors or {})
    rec.push(0.0, x)
    if config.method == RK4:
        return _integrate_rk4(fieldfn, x, float(t_end), config, rec)
    return _integrate_dp45(fieldfn, x, float(t_end), config, rec)


def _integrate_rk4(fieldfn, x, t_end, config, rec):
    t = 0.0
    h = config.step
    steps = clamps = 0
    while t < t_end:
        if steps >= config.max_steps:
            raise IntegrationBudgetError(rec.build(clamps, steps, 0), config.max_steps)
        dt = min(h, t_end - t)
        k1 = _eval(fieldfn, t, x)
        k2 = _eval(fieldfn, t + dt / 2, x + dt / 2 * k1)
        k3 = _eval(fieldfn, t + dt / 2, x + dt / 2 * k2)
        k4 = _eval(fieldfn, t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x, c = _clamp(x, config)
        clamps += c
        steps += 1
        # snap onto t_end so the last grid point is exact
        t = t_end if t_end - (t + dt) < 1e-12 * max(1.0, t_end) else t + dt
        rec.push(t, x)
    return rec.build(clamps, steps, 0)


def _integrate_dp45(fieldfn, x, t_end, config, rec):
    safety, min_factor, max_factor = 0.9, 0.2, 5.0
    hmax = config.max_step or t_end
    t = 0.0
    h = min(config.step, hmax, t_end)
    k = np.empty((7, x.size))
    k[0] = _eval(fieldfn, t, x)
    steps = rejected = clamps = 0
    while t < t_end:
        if steps + rejected >= config.max_steps:
            raise IntegrationBudgetError(rec.build(clamps, steps, rejected), config.max_steps)
        last = t + h >= t_end * (1 - 1e-14)
        if last:
            h = t_end - t
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(1, 7):
                xi = x + h * (np.dot(_DP_A[i], k[:i]))
                k[i] = fieldfn(t + _DP_C[i] * h, xi)
            x_new = xi  # stage 7 is evaluated at the 5th-order solution (FSAL)
            err = h * np.dot(_DP_E, k)
            scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(x), np.abs(x_new))
            err_norm = float(np.max(np.abs(err) / scale)) if x.size else 0.0
        if not math.isfinite(err_norm):
            # a trial step overshot into a region where the field blows up;
            # retry with a smaller step rather than giving up
            err_norm = math.inf
        if err_norm <= 1.0:
            t = t_end if last else t + h
            x, c = _clamp(x_new, config)
            clamps += c
            steps += 1
            rec.push(t, x)
            k[0] = k[6] if c == 0 else _eval(fieldfn, t, x)
            factor = max_factor if err_norm == 0 else min(max_factor, safety * err_norm ** -0.2)
            h = min(h * factor, hmax)
        else:
            rejected += 1
            h *= min_factor if err_norm == math.inf else max(min_factor, safety * err_norm ** -0.2)
            if t + h == t:
                raise NumericalBlowupError(t)
    return rec.build(clamps, steps, rejected)


# Pade coefficients and 1-norm thresholds (Higham 2005) for degrees 3..13.
_PADE = {
    3: (1.495585217958292e-2, [120.0, 60.0, 12.0, 1.0]),
    5: (2.539398330063230e-1, [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]),
    7: (
        9.504178996162932e-1,
        [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
    ),
    9: (
        2.097847961257068,
        [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
         2162160.0, 110880.0, 3960.0, 90.0, 1.0],
    ),
}
_THETA13 = 5.371920351148152
_B13 = [
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
    33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0,
]


def _pade_low(A, b):
    n = A.shape[0]
    ident = np.eye(n)
    A2 = A @ A
    powers = [ident, A2]
    while len(powers) < (len(b) + 1) // 2:
        powers.append(powers[-1] @ A2)
    U = A @ sum(b[2 * j + 1] * powers[j] for j in range(len(b) // 2))
    V = sum(b[2 * j] * powers[j] for j in range((len(b) + 1) // 2))
    return np.linalg.solve(V - U, V + U)


def _pade13(A):
    b = _B13
    ident = np.eye(A.shape[0])
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    return np.linalg.solve(V - U, V + U)


def matrix_exp(H, t: float = 1.0) -> np.ndarray:
    """Return ``exp(t H)`` by scaling and squaring around a Pade approximant.

    No eigendecomposition is used, so defective matrices are fine.
    ``t = 0`` returns the identity exactly.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidMatrixError("matrix_exp needs a square matrix")
    if not np.all(np.isfinite(H)) or not math.isfinite(t):
        raise InvalidMatrixError("matrix has non-finite entries")
    if t < 0:
        raise ValidationError("t must be nonnegative")
    n = H.shape[0]
    if t == 0 or n == 0:
        return np.eye(n)
    A = t * H
    norm = np.linalg.norm(A, 1)
    for m, (theta, b) in _PADE.items():
        if norm <= theta:
            return _pade_low(A, b)
    s = max(0, int(math.ceil(math.log2(norm / _THETA13))))
    X = _pade13(A / 2.0**s)
    for _ in range(s):
        X = X @ X
    return X


def nullspace(M, tol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of the right nullspace of ``M``, one vector per row.

    Singular values at or below ``tol`` times the largest are treated as zero.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise InvalidMatrixError("matrix has non-finite entries")
    n = M.shape[1]
    if M.shape[0] == 0 or n == 0:
        return np.eye(n)
    _, s, vh = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > tol * smax)) if smax > 0 else 0
    return vh[rank:].copy()
