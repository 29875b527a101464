"""Ensemble parameters, smoothing profiles and design-rate computation.

The central object is the 5-tuple (dv, dc, nu, L, M): a chain of L spatial
positions with M variable nodes each, degrees (dv, dc), and a smoothing
distribution nu over the w possible edge offsets.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Input profiles may deviate from sum 1 by at most this much before being
# rejected; accepted profiles are renormalized to sum exactly 1.
NORMALIZATION_TOL = 1e-9


class EnsembleError(ValueError):
    """Raised for invalid ensemble parameters or malformed ensemble files."""


@dataclass(frozen=True)
class SmoothingProfile:
    """Probability distribution (nu_0, ..., nu_{w-1}) over edge offsets.

    Entries must be nonnegative and sum to 1 (within NORMALIZATION_TOL on
    input; stored renormalized). Exact zeros are allowed.
    """

    nu: tuple[float, ...]

    def __init__(self, nu):
        nu = tuple(float(v) for v in nu)
        if len(nu) < 1:
            raise EnsembleError("smoothing profile must have at least one weight")
        if any(v < 0.0 for v in nu):
            raise EnsembleError(f"smoothing profile has negative entries: {nu}")
        total = math.fsum(nu)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise EnsembleError(f"profile sums to {total:.12g}, expected 1")
        scaled = [v / total for v in nu]
        # Fold the remaining rounding residual into the largest weight so
        # the stored profile sums to exactly 1.0.
        for _ in range(3):
            residual = 1.0 - math.fsum(scaled)
            if residual == 0.0:
                break
            scaled[scaled.index(max(scaled))] += residual
        object.__setattr__(self, "nu", tuple(scaled))

    @property
    def w(self) -> int:
        return len(self.nu)

    @classmethod
    def uniform(cls, w: int) -> "SmoothingProfile":
        if w < 1:
            raise EnsembleError("w must be >= 1")
        return cls((1.0 / w,) * w)

    def reversed(self) -> "SmoothingProfile":
        return SmoothingProfile(self.nu[::-1])

    def mean_offset(self) -> float:
        """First moment of the offset distribution, in [0, w-1]."""
        return math.fsum(i * v for i, v in enumerate(self.nu))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.nu, dtype=np.float64)


@dataclass(frozen=True)
class EnsembleSpec:
    """A (dv, dc, nu, L, M) coupled ensemble.

    L is the number of spatial positions carrying variable nodes; M is the
    number of variable nodes per position (ignored by asymptotic analyses).
    """

    dv: int
    dc: int
    profile: SmoothingProfile
    L: int
    M: int = 500

    @property
    def w(self) -> int:
        return self.profile.w

    @property
    def nu(self) -> tuple[float, ...]:
        return self.profile.nu

    def validate(self) -> "ValidationResult":
        return validate_spec(self)

    def with_profile(self, profile: SmoothingProfile) -> "EnsembleSpec":
        return EnsembleSpec(self.dv, self.dc, profile, self.L, self.M)

    def with_L(self, L: int) -> "EnsembleSpec":
        return EnsembleSpec(self.dv, self.dc, self.profile, L, self.M)


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class RateReport:
    delta: float
    design_rate: float
    asymptotic_rate: float


def validate_spec(spec: EnsembleSpec) -> ValidationResult:
    """Check every structural invariant of an ensemble; never raises.

    Profile normalization is enforced at SmoothingProfile construction, so a
    spec holding a live profile object cannot violate it here; the check is
    still performed for specs built through other paths.
    """
    v: list[str] = []
    if spec.dv < 2:
        v.append(f"dv must be >= 2, got {spec.dv}")
    if spec.dc <= spec.dv:
        v.append(f"dc must exceed dv, got dc={spec.dc} <= dv={spec.dv}")
    if spec.L < 1:
        v.append(f"L must be positive, got {spec.L}")
    if spec.M < 1:
        v.append(f"M must be positive, got {spec.M}")
    total = math.fsum(spec.profile.nu)
    if abs(total - 1.0) > NORMALIZATION_TOL:
        v.append(f"profile sums to {total:.12g}")
    if any(x < 0 for x in spec.profile.nu):
        v.append("profile has negative entries")
    if spec.w > spec.L:
        v.append(f"w > L: coupling width {spec.w} exceeds chain length {spec.L}")
    if spec.M >= 1 and spec.dc > 0 and (spec.M * spec.dv) % spec.dc != 0:
        v.append(
            f"M*dv/dc must be an integer for finite-length construction, "
            f"got {spec.M}*{spec.dv}/{spec.dc}"
        )
    return ValidationResult(ok=not v, violations=tuple(v))


def design_rate(spec: EnsembleSpec) -> RateReport:
    """Design rate 1 - dv/dc - delta/L, including the termination rate loss.

    delta = (dv/dc) * (w-1 - sum_{k=0}^{w-2} [ (sum_{i<=k} nu_i)^dc
                                              + (sum_{i>k} nu_i)^dc ])
    """
    nu = spec.profile.nu
    w = len(nu)
    dvdc = spec.dv / spec.dc
    acc = 0.0
    head = 0.0
    for k in range(w - 1):
        head += nu[k]
        tail = 1.0 - head
        acc += head**spec.dc + tail**spec.dc
    delta = dvdc * (w - 1 - acc)
    asymptotic = 1.0 - dvdc
    return RateReport(
        delta=delta,
        design_rate=asymptotic - delta / spec.L,
        asymptotic_rate=asymptotic,
    )


def spec_to_dict(spec: EnsembleSpec) -> dict:
    return {
        "dv": spec.dv,
        "dc": spec.dc,
        "L": spec.L,
        "M": spec.M,
        "nu": list(spec.profile.nu),
    }


def spec_from_dict(d: dict) -> EnsembleSpec:
    try:
        return EnsembleSpec(
            dv=int(d["dv"]),
            dc=int(d["dc"]),
            profile=SmoothingProfile(d["nu"]),
            L=int(d["L"]),
            M=int(d["M"]),
        )
    except KeyError as e:
        raise EnsembleError(f"ensemble file is missing field {e.args[0]!r}") from e


def load_spec(path: str | Path) -> EnsembleSpec:
    """Read an ensemble from its JSON file format."""
    with open(path) as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as e:
            raise EnsembleError(f"{path}: not valid JSON ({e})") from e
    return spec_from_dict(d)


def save_spec(spec: EnsembleSpec, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(json.dumps(spec_to_dict(spec), indent=2) + "\n")
    os.replace(tmp, path)
