"""Shared independent oracles for the test suite.

These deliberately avoid the library's evaluation path (convolutions,
vectorization): plain scalar loops over the published recursions, used to
cross-check the fast implementations.
"""

import numpy as np
import pytest


def scalar_recursion_step(x: float, dv: int, dc: int, eps: float) -> float:
    """Uncoupled erasure recursion for one position."""
    return eps * (1.0 - (1.0 - x) ** (dc - 1)) ** (dv - 1)


def scalar_recursion_converges(
    dv: int, dc: int, eps: float, cutoff: float = 1e-19, cap: int = 200000
) -> bool:
    x = eps
    for _ in range(cap):
        x_next = scalar_recursion_step(x, dv, dc, eps)
        if x_next < cutoff:
            return True
        if abs(x_next - x) < 1e-15:
            return False
        x = x_next
    return False


def scalar_threshold(dv: int, dc: int, tol: float = 1e-4) -> float:
    """Bisection on the scalar recursion; the classical BP threshold."""
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if scalar_recursion_converges(dv, dc, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def coupled_step_reference(x, nu, dv, dc, eps):
    """Direct double-loop evaluation of the coupled update, positions 1..L.

    Reads x outside [1, L] as 0; no convolution, no vectorization.
    """
    L, w = len(x), len(nu)

    def get(z):  # z is 1-based
        return x[z - 1] if 1 <= z <= L else 0.0

    out = np.empty(L)
    for z in range(1, L + 1):
        outer = 0.0
        for i in range(w):
            inner = 0.0
            for j in range(w):
                inner += nu[j] * get(z + i - j)
            outer += nu[i] * (1.0 - inner) ** (dc - 1)
        out[z - 1] = eps * (1.0 - outer) ** (dv - 1)
    return out


def uniform_coupled_step_reference(x, w, dv, dc, eps):
    """Classical uniform-coupling update, coded from its own (1/w) form."""
    L = len(x)

    def get(z):
        return x[z - 1] if 1 <= z <= L else 0.0

    out = np.empty(L)
    for z in range(1, L + 1):
        outer = 0.0
        for i in range(w):
            inner = sum(get(z + i - j) for j in range(w)) / w
            outer += (1.0 - inner) ** (dc - 1) / w
        out[z - 1] = eps * (1.0 - outer) ** (dv - 1)
    return out


def uniform_coupled_step_slices(x, w, dv, dc, eps):
    """Uniform-coupling update via explicit shifted slices on a padded
    array; independent of the production convolution path but fast enough
    for large sweeps."""
    L = len(x)
    pad = np.zeros(L + 2 * (w - 1))
    pad[w - 1 : w - 1 + L] = x
    cn = np.zeros(L + w - 1)  # check positions 1..L+w-1
    for j in range(w):
        cn += pad[w - 1 - j : w - 1 - j + L + w - 1]
    cn = (1.0 - cn / w) ** (dc - 1)
    vn = np.zeros(L)
    for i in range(w):
        vn += cn[i : i + L]
    return eps * (1.0 - vn / w) ** (dv - 1)


def sorted_uniform_simplex(rng, w, size):
    """Uniform simplex samples via sorted uniforms (gap construction)."""
    u = np.sort(rng.random((size, w - 1)), axis=1)
    bounds = np.hstack([np.zeros((size, 1)), u, np.ones((size, 1))])
    return np.diff(bounds, axis=1)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
