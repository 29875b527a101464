"""Decoding-wave measurements: front position, speed, and cost functions.

The decoding wave is the moving boundary between decoded positions (x ~ 0)
and the unresolved plateau (x ~ eps). Its position is the interpolated
point where the profile crosses half the mid-chain plateau value; its speed
in positions per iteration governs windowed-decoder complexity.

All analyses canonicalize the smoothing profile so that the dominant
(faster) front enters from the left, where the front position is measured;
mirroring the profile mirrors the dynamics exactly, so this loses nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import (
    CONVERGENCE_CUTOFF,
    DEFAULT_MAX_ITERS,
    STALL_TOL,
    DensityProfile,
    _step_arrays,
)
from .ensemble import EnsembleSpec

# Front-arrival target: iterations are counted until the front passes this
# spatial position. 20 keeps the measurement clear of boundary transients.
FRONT_TARGET = 20.0

# Position watched by the cheaper sweep-out cost: iterations until it drops
# below CONVERGENCE_CUTOFF.
WATCH_POSITION = 10

# Displacement used by the displacement-based speed estimate.
DEFAULT_DISPLACEMENT = 20

# When the mid-chain plateau collapses before the front reaches its target
# (very fast waves on short chains), the run is redone on a longer chain.
MAX_CHAIN_DOUBLINGS = 3


@dataclass(frozen=True)
class WavePosition:
    value: float
    anchor: int
    defined: bool

    @classmethod
    def undefined(cls) -> "WavePosition":
        return cls(value=math.nan, anchor=0, defined=False)


@dataclass(frozen=True)
class SpeedEstimate:
    v: float
    method: str  # "td" or "t20"
    D_or_target: int
    iterations: int
    feasible: bool = True

    @classmethod
    def infeasible(cls, method: str, D_or_target: int) -> "SpeedEstimate":
        return cls(v=0.0, method=method, D_or_target=D_or_target, iterations=0, feasible=False)


@dataclass(frozen=True)
class CostReport:
    cost: float
    kind: str  # "c1" or "c2"
    iterations: int
    wave_position_at_stop: float
    feasible: bool

    @property
    def speed(self) -> float:
        """Implied speed: target distance over iterations (c1 only)."""
        if not self.feasible or self.iterations == 0:
            return 0.0
        return FRONT_TARGET / self.iterations

    @classmethod
    def infeasible(cls, kind: str) -> "CostReport":
        return cls(cost=math.inf, kind=kind, iterations=0, wave_position_at_stop=math.nan, feasible=False)


def canonical_spec(spec: EnsembleSpec) -> EnsembleSpec:
    """Orient the profile so the dominant front enters from the left.

    Offset mass concentrated on the later offsets pulls the left boundary
    harder, so profiles with mean offset below (w-1)/2 are mirrored.
    """
    if spec.profile.mean_offset() < (spec.w - 1) / 2.0:
        return spec.with_profile(spec.profile.reversed())
    return spec


def _wave_position_arrays(x: np.ndarray) -> tuple[float, int] | None:
    L = len(x)
    mid = L // 2
    plateau = x[mid - 1]
    if plateau <= 0.0:
        return None
    half = 0.5 * plateau
    left = x[: mid - 1]
    right = x[1:mid]
    crossing = (left < half) & (right >= half)
    if not crossing.any():
        return None
    a = int(np.argmax(crossing))  # 0-based index of anchor A = a+1
    frac = (half - left[a]) / (right[a] - left[a])
    return (a + 1) + frac, a + 1


def wave_position(profile: DensityProfile) -> WavePosition:
    """Interpolated front position from the half-plateau crossing.

    Finds the leftmost anchor A with x_A below half the mid-chain value and
    x_{A+1} at or above it. Undefined when the plateau has collapsed or the
    profile has no crossing (flat or fully decoded); callers must branch on
    `defined`.
    """
    res = _wave_position_arrays(np.asarray(profile.x, dtype=np.float64))
    if res is None:
        return WavePosition.undefined()
    value, anchor = res
    return WavePosition(value=value, anchor=anchor, defined=True)


def _run_until(spec: EnsembleSpec, epsilon: float, stop, max_iters: int):
    """Step DE until `stop(x, it)` returns a result, the chain decodes,
    stalls, or the cap is reached.

    Returns (result, outcome) where outcome is one of "hit", "decoded",
    "stalled", "capped"; `result` is whatever `stop` returned when hit.
    """
    nu = spec.profile.as_array()
    eps = float(epsilon)
    x = np.full(spec.L, eps)
    for it in range(1, max_iters + 1):
        x_next = _step_arrays(x, nu, spec.dv, spec.dc, eps)
        moved = np.max(np.abs(x_next - x))
        x = x_next
        hit = stop(x, it)
        if hit is not None:
            return hit, "hit"
        if x.max() < CONVERGENCE_CUTOFF:
            return None, "decoded"
        if moved < STALL_TOL:
            return None, "stalled"
    return None, "capped"


def front_arrival_cost(
    spec: EnsembleSpec,
    epsilon: float,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> CostReport:
    """Cost from the iteration count until the front passes position 20.

    Steps DE from scratch, watching the front each iteration; the count T is
    the first iteration with front position >= FRONT_TARGET and the cost is
    T - W*(2/L) with W the front position at that iteration. Infeasible when
    the chain does not decode. If the chain decodes before the front reaches
    the target (fronts met mid-chain), the run is redone on a doubled chain,
    which leaves the bulk speed unchanged.
    """
    spec = canonical_spec(spec)
    for _ in range(MAX_CHAIN_DOUBLINGS + 1):
        def stop(x, it):
            res = _wave_position_arrays(x)
            if res is not None and res[0] >= FRONT_TARGET:
                return it, res[0]
            return None

        hit, outcome = _run_until(spec, epsilon, stop, max_iters)
        if outcome == "hit":
            iterations, wp = hit
            return CostReport(
                cost=iterations - wp * (2.0 / spec.L),
                kind="c1",
                iterations=iterations,
                wave_position_at_stop=wp,
                feasible=True,
            )
        if outcome == "decoded":
            spec = spec.with_L(2 * spec.L)
            continue
        return CostReport.infeasible("c1")
    return CostReport.infeasible("c1")


def sweep_out_cost(
    spec: EnsembleSpec,
    epsilon: float,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> CostReport:
    """Cost from the iteration count until position 10 is error free.

    Single DE run; T is the first iteration with x_10 below the convergence
    cutoff and the cost is T - W*(2/L). The front-position term may be
    numerically meaningless at that point (the profile around the watch
    position has collapsed); when undefined it contributes 0, which only
    affects the sub-unit tie-break.
    """
    spec = canonical_spec(spec)

    def stop(x, it):
        if x[WATCH_POSITION - 1] < CONVERGENCE_CUTOFF:
            res = _wave_position_arrays(x)
            return it, (res[0] if res is not None else 0.0)
        return None

    hit, outcome = _run_until(spec, epsilon, stop, max_iters)
    if outcome != "hit":
        # "decoded" cannot precede x_10 < cutoff, so anything else is a
        # non-decoding chain.
        return CostReport.infeasible("c2")
    iterations, wp = hit
    return CostReport(
        cost=iterations - wp * (2.0 / spec.L),
        kind="c2",
        iterations=iterations,
        wave_position_at_stop=wp,
        feasible=True,
    )


def front_arrival_speed(
    spec: EnsembleSpec, epsilon: float, max_iters: int = DEFAULT_MAX_ITERS
) -> SpeedEstimate:
    """Speed estimate 20 / (iterations until the front passes position 20)."""
    rep = front_arrival_cost(spec, epsilon, max_iters=max_iters)
    if not rep.feasible:
        return SpeedEstimate.infeasible("t20", int(FRONT_TARGET))
    return SpeedEstimate(
        v=FRONT_TARGET / rep.iterations,
        method="t20",
        D_or_target=int(FRONT_TARGET),
        iterations=rep.iterations,
    )


def speed_displacement(
    spec: EnsembleSpec,
    epsilon: float,
    D: int = DEFAULT_DISPLACEMENT,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> SpeedEstimate:
    """Speed D/T from the minimum iteration count T that shifts the whole
    left half of the profile by at least D positions.

    The displacement condition x_z(t+T) <= x_{z-D}(t) is checked for every
    z in [D+1, L/2] over a measurement window of start times: from the first
    iteration where the front has cleared the boundary transient (front
    position >= w+2) until it reaches L/2 - D. T is the worst (largest)
    count over that window. Infeasible when the chain does not decode or no
    steady front forms.
    """
    if D < 1:
        raise ValueError("D must be >= 1")
    spec = canonical_spec(spec)
    nu = spec.profile.as_array()
    eps = float(epsilon)
    L, mid = spec.L, spec.L // 2
    if D >= mid:
        raise ValueError(f"D={D} too large for chain half-length {mid}")

    x = np.full(L, eps)
    profiles = [x.copy()]
    window: list[int] = []  # iteration indices in the measurement window
    decoded = False
    for it in range(1, max_iters + 1):
        x_next = _step_arrays(x, nu, spec.dv, spec.dc, eps)
        moved = np.max(np.abs(x_next - x))
        x = x_next
        profiles.append(x.copy())
        res = _wave_position_arrays(x)
        if res is not None:
            wp = res[0]
            if spec.w + 2 <= wp <= mid - D:
                window.append(it)
        if x.max() < CONVERGENCE_CUTOFF:
            decoded = True
            break
        if moved < STALL_TOL:
            break
    if not decoded or not window:
        return SpeedEstimate.infeasible("td", D)

    worst = 0
    for t0 in window:
        ref = profiles[t0][: mid - D]
        T = None
        for t1 in range(t0 + 1, len(profiles)):
            if np.all(profiles[t1][D:mid] <= ref):
                T = t1 - t0
                break
        if T is None:
            return SpeedEstimate.infeasible("td", D)
        worst = max(worst, T)
    return SpeedEstimate(v=D / worst, method="td", D_or_target=D, iterations=worst)
