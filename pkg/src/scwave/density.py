"""Density evolution for non-uniformly coupled ensembles on the BEC.

Tracks the per-position average erasure probability x_z of VN-to-CN
messages. One update reads, for each position z in [1, L],

    x_z' = eps * (1 - sum_i nu_i * (1 - sum_j nu_j * x_{z+i-j})^(dc-1))^(dv-1)

with x taken as 0 outside [1, L] (terminated chain). The inner sum is the
aggregate seen by the check nodes at position z+i, so the update is
evaluated in O(L*w) by computing all check-side aggregates once per sweep.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .ensemble import EnsembleSpec

# A chain counts as decoded once every position is below this value. The
# same constant defines the "virtually error free" criterion for single
# positions.
CONVERGENCE_CUTOFF = 1e-19

# Profiles that move less than this (sup-norm) in one step are treated as
# stuck at a nonzero fixed point: the run is reported as not converged.
STALL_TOL = 1e-12

# Anything this small is flushed to exact zero to avoid subnormal-arithmetic
# slowdown; applied after the convergence test so it cannot mask it.
FLUSH_TO_ZERO = 1e-300

DEFAULT_MAX_ITERS = 20000


class HistoryPolicy(enum.Enum):
    NONE = "none"
    WAVE_POSITIONS = "wave_positions"
    FULL = "full"


@dataclass
class DensityProfile:
    """Erasure-probability profile (x_1, ..., x_L) at iteration t."""

    x: np.ndarray
    t: int
    epsilon: float

    @classmethod
    def initial(cls, L: int, epsilon: float) -> "DensityProfile":
        return cls(x=np.full(L, float(epsilon)), t=0, epsilon=float(epsilon))

    @property
    def L(self) -> int:
        return len(self.x)


@dataclass
class DERunReport:
    converged: bool
    iterations_used: int
    final_profile: DensityProfile
    history: list | None = None


def _step_arrays(x: np.ndarray, nu: np.ndarray, dv: int, dc: int, eps: float) -> np.ndarray:
    """One update on raw arrays; the hot path for everything downstream."""
    # cn_in[u] = sum_j nu_j * x_{u-j}: erasure load on check position u.
    cn_in = np.convolve(x, nu)
    cn_out = (1.0 - cn_in) ** (dc - 1)
    w = len(nu)
    # vn_in[z] = sum_i nu_i * cn_out[z+i]
    vn_in = np.convolve(cn_out, nu[::-1])[w - 1 : w - 1 + len(x)]
    return eps * (1.0 - vn_in) ** (dv - 1)


def de_step(profile: DensityProfile, spec: EnsembleSpec) -> DensityProfile:
    """Advance a profile by one iteration."""
    nu = spec.profile.as_array()
    x = _step_arrays(np.asarray(profile.x, dtype=np.float64), nu, spec.dv, spec.dc, profile.epsilon)
    return DensityProfile(x=x, t=profile.t + 1, epsilon=profile.epsilon)


def de_run(
    spec: EnsembleSpec,
    epsilon: float,
    max_iters: int = DEFAULT_MAX_ITERS,
    record: HistoryPolicy = HistoryPolicy.NONE,
) -> DERunReport:
    """Iterate from the all-epsilon profile until decoded, stuck, or capped.

    Non-convergence (cap reached, or the profile stalled at a nonzero fixed
    point) is reported through the `converged` flag, never raised.
    """
    from .wave import wave_position  # local import to avoid a cycle

    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    nu = spec.profile.as_array()
    eps = float(epsilon)
    x = np.full(spec.L, eps)
    history: list | None = None
    if record is HistoryPolicy.FULL:
        history = [x.copy()]
    elif record is HistoryPolicy.WAVE_POSITIONS:
        history = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        x_next = _step_arrays(x, nu, spec.dv, spec.dc, eps)
        moved = np.max(np.abs(x_next - x))
        x = x_next
        if record is HistoryPolicy.FULL:
            history.append(x.copy())
        elif record is HistoryPolicy.WAVE_POSITIONS:
            wp = wave_position(DensityProfile(x, it, eps))
            history.append(wp.value if wp.defined else float("nan"))
        if x.max() < CONVERGENCE_CUTOFF:
            converged = True
            break
        if moved < STALL_TOL:
            break
        x[x < FLUSH_TO_ZERO] = 0.0
    return DERunReport(
        converged=converged,
        iterations_used=it,
        final_profile=DensityProfile(x=x, t=it, epsilon=eps),
        history=history,
    )


def bp_threshold(
    spec: EnsembleSpec,
    tol: float = 1e-5,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> float:
    """Largest channel erasure probability for which the chain decodes.

    Bisection on [0, 1] over the convergence predicate of `de_run`; returns
    the bracket midpoint once the bracket is narrower than `tol`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if de_run(spec, mid, max_iters=max_iters).converged:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
