"""Time-dependent protocol schedules t1(t), t2(t), delta(t).

Three families are supported: the adiabatic Rabi sweep, the three-stage
Landau-Zener (LZ) sweep and a time-independent chain. All schedules are
immutable; ``evaluate`` accepts scalars or numpy arrays of times.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Any, ClassVar

import numpy as np
from scipy import integrate

from .lattice import kappa_array


class DecouplingWarning(UserWarning):
    """delta0 is not large enough to keep the edge states apart in stages I/III."""


def _check_times(t: np.ndarray, total: float) -> None:
    if np.any(t < 0.0) or np.any(t > total):
        raise ValueError(f"time outside schedule range [0, {total}]")


@dataclass(frozen=True)
class RabiSchedule:
    epsilon: float
    T: float

    kind: ClassVar[str] = "rabi"

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")

    @property
    def duration(self) -> float:
        return self.T

    def evaluate(self, t):
        """Return (t1, t2, delta) at time(s) ``t``."""
        ta = np.asarray(t, dtype=float)
        _check_times(ta, self.T)
        t2 = 0.5 * (1.0 - self.epsilon) * (1.0 - np.cos(2.0 * np.pi * ta / self.T))
        t1 = np.ones_like(t2)
        delta = np.zeros_like(t2)
        if ta.ndim == 0:
            return 1.0, float(t2), 0.0
        return t1, t2, delta

    def bounds(self) -> tuple[float, float, float]:
        return 1.0, 1.0 - self.epsilon, 0.0

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, **asdict(self)}


@dataclass(frozen=True)
class LZSchedule:
    """Delocalize (tau), sweep delta0 -> -delta0 (tau_z), relocalize (tau)."""

    epsilon: float
    delta0: float
    tau: float
    tau_z: float

    kind: ClassVar[str] = "lz"

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if not self.delta0 > 0:
            raise ValueError(f"delta0 must be positive, got {self.delta0!r}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau!r}")
        if not self.tau_z > 0:
            raise ValueError(f"tau_z must be positive, got {self.tau_z!r}")

    @property
    def duration(self) -> float:
        return 2.0 * self.tau + self.tau_z

    T = duration

    @property
    def sweep_rate(self) -> float:
        """alpha = 4 delta0 / tau_z."""
        return 4.0 * self.delta0 / self.tau_z

    def evaluate(self, t):
        """Return (t1, t2, delta) at time(s) ``t``.

        Stage boundaries are half-open to the left: at t == tau the stage I
        formula runs, at t == tau + tau_z the stage II formula.
        """
        ta = np.asarray(t, dtype=float)
        _check_times(ta, self.duration)
        eps, d0, tau, tz = self.epsilon, self.delta0, self.tau, self.tau_z
        amp = 0.5 * (1.0 - eps)
        stage1 = ta <= tau
        stage3 = ta > tau + tz
        t2 = np.where(
            stage1,
            amp * (1.0 - np.cos(np.pi * ta / tau)),
            np.where(stage3, amp * (1.0 - np.cos(np.pi * (ta - tz) / tau)), 1.0 - eps),
        )
        delta = np.where(
            stage1, d0, np.where(stage3, -d0, d0 - self.sweep_rate * (ta - tau) / 2.0)
        )
        if ta.ndim == 0:
            return 1.0, float(t2), float(delta)
        return np.ones_like(t2), t2, delta

    def bounds(self) -> tuple[float, float, float]:
        return 1.0, 1.0 - self.epsilon, self.delta0

    def breakpoints(self) -> tuple[float, ...]:
        return (self.tau, self.tau + self.tau_z)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, **asdict(self)}


@dataclass(frozen=True)
class StaticSchedule:
    T: float
    t2: float
    t1: float = 1.0
    delta: float = 0.0

    kind: ClassVar[str] = "static"

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")
        if not self.t1 > 0:
            raise ValueError(f"t1 must be positive, got {self.t1!r}")
        if self.t2 < 0:
            raise ValueError(f"t2 must be non-negative, got {self.t2!r}")

    @property
    def duration(self) -> float:
        return self.T

    def evaluate(self, t):
        ta = np.asarray(t, dtype=float)
        _check_times(ta, self.T)
        if ta.ndim == 0:
            return self.t1, self.t2, self.delta
        return (
            np.full(ta.shape, self.t1),
            np.full(ta.shape, self.t2),
            np.full(ta.shape, self.delta),
        )

    def bounds(self) -> tuple[float, float, float]:
        return self.t1, self.t2, abs(self.delta)

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, **asdict(self)}


ProtocolSchedule = RabiSchedule | LZSchedule | StaticSchedule

_KINDS = {cls.kind: cls for cls in (RabiSchedule, LZSchedule, StaticSchedule)}


def schedule_from_dict(data: dict[str, Any]) -> ProtocolSchedule:
    """Inverse of ``to_dict``; unknown keys raise ``TypeError``."""
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in _KINDS:
        raise ValueError(f"unknown protocol kind {kind!r}; expected one of {sorted(_KINDS)}")
    return _KINDS[kind](**data)


def evaluate(schedule: ProtocolSchedule, t):
    return schedule.evaluate(t)


def kappa_of_time(schedule: ProtocolSchedule, n_dimers: int, t) -> np.ndarray:
    t1, t2, _ = schedule.evaluate(t)
    return kappa_array(np.asarray(t2) / np.asarray(t1), n_dimers, t1)


def area_integral(schedule: ProtocolSchedule, n_dimers: int) -> float:
    """Integral of kappa(t) over the whole schedule."""
    if schedule.kind == "static":
        return float(kappa_of_time(schedule, n_dimers, 0.0)) * schedule.duration
    # t2 == 0 everywhere makes kappa vanish identically
    if schedule.bounds()[1] == 0.0:
        return 0.0
    edges = (0.0, *schedule.breakpoints(), schedule.duration)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, _ = integrate.quad(
            lambda s: float(kappa_of_time(schedule, n_dimers, s)),
            a,
            b,
            epsabs=0.0,
            epsrel=1e-11,
            limit=400,
        )
        total += value
    return total


def solve_rabi_area_time(
    epsilon: float,
    n_dimers: int,
    target: float = math.pi / 2,
    lo: float = 1.0,
    hi: float = 1e5,
    tol: float = 1e-6,
) -> float:
    """Duration T* of the Rabi sweep whose kappa area equals ``target``."""

    def area(T: float) -> float:
        return area_integral(RabiSchedule(epsilon, T), n_dimers)

    f_lo, f_hi = area(lo) - target, area(hi) - target
    if f_lo > 0 or f_hi < 0:
        raise ValueError(f"area target {target} not bracketed by T in [{lo}, {hi}]")
    while True:
        mid = 0.5 * (lo + hi)
        f_mid = area(mid) - target
        if abs(f_mid) <= tol or hi - lo < 1e-12 * hi:
            return mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid


def lz_threshold_time(kappa_max: float, delta0: float) -> float:
    """Minimum sweep duration 4 delta0 / kappa^2 for efficient LZ transfer."""
    if not kappa_max > 0 or not delta0 > 0:
        raise ValueError("kappa_max and delta0 must be positive")
    return 4.0 * delta0 / kappa_max**2


def decoupling_ratio(schedule: LZSchedule, n_dimers: int) -> float:
    """delta0 / kappa_max; warns with ``DecouplingWarning`` when below 1."""
    kappa_max = float(kappa_array(1.0 - schedule.epsilon, n_dimers))
    ratio = schedule.delta0 / kappa_max
    if ratio < 1.0:
        warnings.warn(
            f"delta0/kappa_max = {ratio:.3g} < 1: edge states are not decoupled "
            "outside the sweep stage",
            DecouplingWarning,
            stacklevel=2,
        )
    return ratio
