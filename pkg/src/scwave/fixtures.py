"""Bundled reference codes: the selected optimized and uniform profiles.

These fourteen rows are the regression anchor for the rate computation and
the speed comparisons: optimized ("NU") profiles carry the channel
parameter they were optimized for, uniform references ("Ref") do not.
Profile weights are stored exactly as published (five decimal places,
exact zeros kept); uniform entries are exact 1/w.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .ensemble import EnsembleSpec, SmoothingProfile, design_rate, validate_spec

# Desk-scale default for finite-length work; every fixture degree pair
# divides M*dv/dc evenly at this M.
FIXTURE_M = 500


@dataclass(frozen=True)
class FixtureRow:
    label: str
    w: int
    dv: int
    epsilon: float | None  # optimization target; None for uniform references
    nu: tuple[float, ...]
    rate: float  # published design rate at L=100

    @property
    def dc(self) -> int:
        return 2 * self.dv

    def spec(self, L: int = 100, M: int = FIXTURE_M) -> EnsembleSpec:
        return EnsembleSpec(self.dv, self.dc, SmoothingProfile(self.nu), L, M)


def _data_path():
    return resources.files("scwave").joinpath("data/reference_codes.json")


def load_fixtures() -> tuple[FixtureRow, ...]:
    rows = json.loads(_data_path().read_text())
    return tuple(
        FixtureRow(
            label=r["label"],
            w=int(r["w"]),
            dv=int(r["dv"]),
            epsilon=r["epsilon"],
            nu=tuple(float(v) for v in r["nu"]),
            rate=float(r["rate"]),
        )
        for r in rows
    )


def fixture(label: str) -> FixtureRow:
    for row in load_fixtures():
        if row.label == label:
            return row
    raise KeyError(f"no fixture named {label!r}")


def check_fixtures(rate_tol: float = 1e-5) -> list[str]:
    """Regression gate: every row validates and reproduces its published
    rate at L=100. Returns a list of failure messages (empty = pass)."""
    failures = []
    rows = load_fixtures()
    if len(rows) != 14:
        failures.append(f"expected 14 fixture rows, found {len(rows)}")
    for row in rows:
        spec = row.spec()
        check = validate_spec(spec)
        if not check.ok:
            failures.append(f"{row.label}: invalid spec: {'; '.join(check.violations)}")
            continue
        got = design_rate(spec).design_rate
        if abs(got - row.rate) > rate_tol:
            failures.append(
                f"{row.label}: rate {got:.6f} differs from published {row.rate:.5f}"
            )
    return failures
