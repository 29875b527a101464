"""Finite-length Monte-Carlo simulation under sliding windowed decoding.

The window covers W_D consecutive VN positions plus every check node
touching them. It slides in from the left edge of the chain (first covering
position 1 alone, then growing to full width) so that each position has
received the full W_D * I iterations by the time it departs and is
finalized; starting flush with W_D positions would finalize the first
positions after only a handful of updates, which is the classic
short-window failure mode. One iteration is a full check-node pass followed
by a variable-node pass over the in-window edges; messages of finalized and
not-yet-covered variable nodes stay frozen at their last value.

All-zero transmission is assumed throughout (valid under BP on the
symmetric channels simulated here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _parallel
from .density import CONVERGENCE_CUTOFF, _step_arrays
from .ensemble import EnsembleSpec
from .sampler import CodeGraph, sample_code

LLR_CLAMP = 30.0
MESSAGE_TOL = 1e-12  # early window termination when nothing moves more

# Fixed frame batch; batches run in order so adaptive stopping and counter
# totals do not depend on the worker count.
FRAME_BATCH = 256


class SetupError(ValueError):
    """Raised for decoder setups the toolkit does not define."""


@dataclass(frozen=True)
class DecoderSetup:
    window: int  # W_D, in spatial positions
    iterations: int  # I, per window position
    label: str = "custom"

    def __post_init__(self):
        if self.window < 1 or self.iterations < 1:
            raise SetupError("window and iterations must be >= 1")

    @classmethod
    def setup_a(cls, w: int) -> "DecoderSetup":
        """Single iteration per shift, window of 5w positions."""
        return cls(window=5 * w, iterations=1, label="A")

    # Known higher-complexity configurations, by coupling width.
    _SETUP_B = {3: (15, 5), 8: (40, 2)}

    @classmethod
    def setup_b(cls, w: int) -> "DecoderSetup":
        if w not in cls._SETUP_B:
            raise SetupError(
                f"setup B is defined only for w in {sorted(cls._SETUP_B)}, got w={w}"
            )
        wd, iters = cls._SETUP_B[w]
        return cls(window=wd, iterations=iters, label="B")

    @classmethod
    def from_label(cls, label: str, w: int) -> "DecoderSetup":
        if label.upper() == "A":
            return cls.setup_a(w)
        if label.upper() == "B":
            return cls.setup_b(w)
        raise SetupError(f"unknown setup label {label!r}")


@dataclass(frozen=True)
class ChannelModel:
    kind: str  # "bec" or "biawgn"
    epsilon: float = 0.0
    sigma: float = 0.0
    param: float = 0.0  # the sweep coordinate: epsilon, or Eb/N0 in dB

    @classmethod
    def bec(cls, epsilon: float) -> "ChannelModel":
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError(f"erasure probability must be in [0,1], got {epsilon}")
        return cls(kind="bec", epsilon=float(epsilon), param=float(epsilon))

    @classmethod
    def biawgn_ebn0(cls, ebn0_db: float, rate: float) -> "ChannelModel":
        if rate <= 0:
            raise ValueError("rate must be positive to convert Eb/N0")
        sigma = math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))
        return cls(kind="biawgn", sigma=sigma, param=float(ebn0_db))

    @classmethod
    def biawgn_sigma(cls, sigma: float) -> "ChannelModel":
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        return cls(kind="biawgn", sigma=float(sigma), param=float(sigma))


def transmit(graph: CodeGraph, channel: ChannelModel, rng: np.random.Generator):
    """Channel output for the all-zero codeword.

    BEC: boolean erasure flags. BI-AWGN: LLRs 2y/sigma^2 for y = 1 + noise.
    """
    n = graph.n
    if channel.kind == "bec":
        return rng.random(n) < channel.epsilon
    if channel.kind == "biawgn":
        y = 1.0 + channel.sigma * rng.standard_normal(n)
        return 2.0 * y / (channel.sigma**2)
    raise ValueError(f"unknown channel kind {channel.kind!r}")


@dataclass
class DecodeResult:
    """Per-bit outcome of one windowed decode."""

    resolved: np.ndarray  # bit value known (BEC) / always True (AWGN)
    errors: np.ndarray  # known but wrong (AWGN hard decisions)
    fully_resolved: bool
    syndrome_ok: bool | None  # checked only for fully resolved BEC frames

    @property
    def erasures(self) -> int:
        return int((~self.resolved).sum())

    @property
    def bit_errors(self) -> int:
        return int(self.errors.sum())

    @property
    def frame_error(self) -> bool:
        return bool(self.erasures or self.bit_errors)

    def decoded_bits(self) -> np.ndarray:
        """Hard-decided word under all-zero transmission: 0/1 per bit,
        -1 where the bit is still erased."""
        word = np.where(self.errors, 1, 0).astype(np.int8)
        word[~self.resolved] = -1
        return word


def _window_ranges(L: int, window: int):
    """Start positions of the sliding window, including the slide-in ramp."""
    for s in range(1 - window, L):
        yield max(0, s), min(s + window, L)


def windowed_decode(graph: CodeGraph, received, setup: DecoderSetup) -> DecodeResult:
    """Decode one received word with the sliding-window schedule."""
    if setup.window < graph.spec.w:
        raise SetupError(
            f"window of {setup.window} positions is narrower than the "
            f"coupling width {graph.spec.w}"
        )
    received = np.asarray(received)
    if received.dtype == bool:
        return _decode_bec(graph, received, setup)
    return _decode_awgn(graph, received.astype(np.float64), setup)


def _decode_bec(graph: CodeGraph, erased: np.ndarray, setup: DecoderSetup) -> DecodeResult:
    spec = graph.spec
    M, dv, L = spec.M, spec.dv, spec.L
    edge_cn = graph.edge_cn
    num_cns = graph.num_cns
    per_sp_edges = M * dv

    # Message state: v2c_known[e] is True once the VN-side message on edge e
    # carries a value. cn_unknown counts unknown inputs per CN, and
    # unknown_per_sp counts unknown outgoing messages per VN position.
    v2c_known = np.repeat(~erased, dv)
    cn_unknown = np.bincount(edge_cn[~v2c_known], minlength=num_cns)
    unknown_per_sp = np.bincount(
        np.flatnonzero(~v2c_known) // per_sp_edges, minlength=L
    )

    for lo_sp, hi_sp in _window_ranges(L, setup.window):
        for _ in range(setup.iterations):
            # Positions whose outgoing messages are all known are settled:
            # nothing in or left of them can change, so start at the first
            # position that still carries unknowns.
            a = lo_sp
            while a < hi_sp and unknown_per_sp[a] == 0:
                a += 1
            if a == hi_sp:
                break
            elo, ehi = a * per_sp_edges, hi_sp * per_sp_edges
            ecn = edge_cn[elo:ehi]
            known = v2c_known[elo:ehi]
            # CN pass: message back on edge e is known iff every other
            # input of its CN is known.
            c2v_known = (cn_unknown[ecn] - ~known) == 0
            # VN pass: an edge's outgoing message is known from the channel
            # or from any other incident CN.
            cnt = c2v_known.reshape(-1, dv).sum(axis=1)
            from_channel = ~erased[a * M : hi_sp * M].repeat(dv)
            new_known = from_channel | ((cnt.repeat(dv) - c2v_known) > 0)
            newly = new_known & ~known
            if not newly.any():
                break
            newly_idx = elo + np.flatnonzero(newly)
            cn_unknown -= np.bincount(edge_cn[newly_idx], minlength=num_cns)
            unknown_per_sp -= np.bincount(newly_idx // per_sp_edges, minlength=L)
            v2c_known[elo:ehi] = new_known

    # Final resolution status from the settled messages.
    c2v_known_all = (cn_unknown[edge_cn] - ~v2c_known) == 0
    resolved = ~erased | (c2v_known_all.reshape(-1, dv).sum(axis=1) > 0)
    fully = bool(resolved.all())
    syndrome_ok = None
    if fully:
        # Resolved values on the BEC equal the transmitted (all-zero) bits;
        # verify the output word clears every check.
        values = np.zeros(graph.n, dtype=np.int8)
        parity = np.bincount(edge_cn, weights=values.repeat(dv), minlength=num_cns)
        syndrome_ok = bool((parity.astype(np.int64) % 2 == 0).all())
    return DecodeResult(
        resolved=resolved,
        errors=np.zeros(graph.n, dtype=bool),
        fully_resolved=fully,
        syndrome_ok=syndrome_ok,
    )


def _cn_sorted(graph: CodeGraph):
    """Edge permutation grouping edges by CN, cached on the graph."""
    cache = graph.__dict__.get("_cn_sorted")
    if cache is None:
        order = np.argsort(graph.edge_cn, kind="stable")
        degs = np.bincount(graph.edge_cn, minlength=graph.num_cns)
        starts = np.concatenate(([0], np.cumsum(degs)[:-1]))
        cache = (order, starts, degs)
        graph.__dict__["_cn_sorted"] = cache
    return cache


def _decode_awgn(graph: CodeGraph, llr: np.ndarray, setup: DecoderSetup) -> DecodeResult:
    spec = graph.spec
    M, dv, L = spec.M, spec.dv, spec.L
    edge_cn = graph.edge_cn
    num_cns = graph.num_cns
    order, starts, degs = _cn_sorted(graph)
    nonzero = degs > 0

    v2c = np.clip(llr.repeat(dv), -LLR_CLAMP, LLR_CLAMP)
    c2v = np.zeros(graph.num_edges)

    for lo_sp, hi_sp in _window_ranges(L, setup.window):
        elo, ehi = lo_sp * M * dv, hi_sp * M * dv
        for _ in range(setup.iterations):
            # CN pass (tanh product rule), computed extrinsically in
            # sign/log-magnitude form to tolerate near-zero inputs.
            t = np.tanh(0.5 * v2c)
            logmag = np.log(np.abs(t) + 1e-300)
            neg = t < 0.0
            sum_log = np.zeros(num_cns)
            sum_log[nonzero] = np.add.reduceat(logmag[order], starts[nonzero])
            neg_cnt = np.bincount(edge_cn[neg], minlength=num_cns)
            excl_mag = np.exp(np.minimum(sum_log[edge_cn] - logmag, 0.0))
            excl_sign = 1.0 - 2.0 * ((neg_cnt[edge_cn] - neg) % 2)
            prod = np.clip(excl_sign * excl_mag, -1.0 + 1e-15, 1.0 - 1e-15)
            c2v_new = np.clip(2.0 * np.arctanh(prod), -LLR_CLAMP, LLR_CLAMP)
            c2v[elo:ehi] = c2v_new[elo:ehi]
            # VN pass: channel plus all other CN messages.
            tot = c2v.reshape(-1, dv).sum(axis=1) + llr
            v2c_new = np.clip(tot.repeat(dv) - c2v, -LLR_CLAMP, LLR_CLAMP)
            if np.max(np.abs(v2c_new[elo:ehi] - v2c[elo:ehi])) < MESSAGE_TOL:
                v2c[elo:ehi] = v2c_new[elo:ehi]
                break
            v2c[elo:ehi] = v2c_new[elo:ehi]

    belief = c2v.reshape(-1, dv).sum(axis=1) + llr
    errors = belief <= 0.0
    return DecodeResult(
        resolved=np.ones(graph.n, dtype=bool),
        errors=errors,
        fully_resolved=bool(not errors.any()),
        syndrome_ok=None,
    )


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return (lo, hi)


@dataclass
class SimReport:
    param: float
    frames: int
    frame_errors: int
    bit_errors: int
    erasures: int
    n_bits: int
    per_sp_errors: tuple[int, ...]
    fully_resolved_frames: int
    syndrome_failures: int

    @property
    def ber(self) -> float:
        """Errors plus half the unresolved erasures, per transmitted bit."""
        return (self.bit_errors + 0.5 * self.erasures) / (self.frames * self.n_bits)

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames

    @property
    def fer_ci(self) -> tuple[float, float]:
        return wilson_interval(self.frame_errors, self.frames)


# Per-process simulation context for forked workers.
_SIM_CTX: dict = {}


def _frame_counts(args) -> tuple[int, int, int, np.ndarray, int, int]:
    lo, hi = args
    graph = _SIM_CTX["graph"]
    channel = _SIM_CTX["channel"]
    setup = _SIM_CTX["setup"]
    seed = _SIM_CTX["seed"]
    grid_index = _SIM_CTX["grid_index"]
    L = graph.spec.L
    frame_errors = bit_errors = erasures = 0
    fully = syndrome_bad = 0
    per_sp = np.zeros(L, dtype=np.int64)
    for f in range(lo, hi):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 3, grid_index, f)))
        word = transmit(graph, channel, rng)
        res = windowed_decode(graph, word, setup)
        bad_bits = (~res.resolved) | res.errors
        if bad_bits.any():
            frame_errors += 1
            per_sp += np.bincount(graph.vn_sp[bad_bits], minlength=L)
        bit_errors += res.bit_errors
        erasures += res.erasures
        if res.fully_resolved:
            fully += 1
            if res.syndrome_ok is False:
                syndrome_bad += 1
    return frame_errors, bit_errors, erasures, per_sp, fully, syndrome_bad


def run_sweep(
    spec: EnsembleSpec,
    channels: list[ChannelModel],
    setup: DecoderSetup,
    frames: int,
    seed: int,
    min_frame_errors: int | None = None,
    workers: int | None = None,
) -> list[SimReport]:
    """Monte-Carlo sweep over channel parameters.

    One code realization is sampled per sweep (seed-derived) and reused for
    every grid point; each frame draws noise from a stream keyed by (seed,
    grid index, frame index). Frames run in fixed batches so results are
    identical for any worker count; when `min_frame_errors` is given, a grid
    point stops at the first batch boundary where the error count reaches
    it.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    graph_seed = int(np.random.default_rng(np.random.SeedSequence((seed, 7))).integers(2**63))
    graph = sample_code(spec, graph_seed)
    return run_sweep_on_graph(
        graph, channels, setup, frames, seed,
        min_frame_errors=min_frame_errors, workers=workers,
    )


def run_sweep_on_graph(
    graph: CodeGraph,
    channels: list[ChannelModel],
    setup: DecoderSetup,
    frames: int,
    seed: int,
    min_frame_errors: int | None = None,
    workers: int | None = None,
) -> list[SimReport]:
    """Sweep an already-sampled code realization; see run_sweep."""
    if workers is None:
        workers = _parallel.worker_count()
    reports = []
    for gi, channel in enumerate(channels):
        _SIM_CTX.update(
            graph=graph, channel=channel, setup=setup, seed=seed, grid_index=gi
        )
        pool = None
        if workers > 1:
            import multiprocessing
            from concurrent.futures import ProcessPoolExecutor

            pool = ProcessPoolExecutor(
                max_workers=workers, mp_context=multiprocessing.get_context("fork")
            )
        try:
            frame_errors = bit_errors = erasures = 0
            fully = syndrome_bad = 0
            per_sp = np.zeros(graph.spec.L, dtype=np.int64)
            done = 0
            while done < frames:
                batch_hi = min(done + FRAME_BATCH, frames)
                # Sub-ranges may depend on the worker count; the merged
                # counters are plain sums, so the report does not.
                step = max(1, (batch_hi - done + workers - 1) // workers)
                ranges = [(a, min(a + step, batch_hi)) for a in range(done, batch_hi, step)]
                results = pool.map(_frame_counts, ranges) if pool else map(_frame_counts, ranges)
                for fe, be, er, ps, fu, sb in results:
                    frame_errors += fe
                    bit_errors += be
                    erasures += er
                    per_sp += ps
                    fully += fu
                    syndrome_bad += sb
                done = batch_hi
                if min_frame_errors is not None and frame_errors >= min_frame_errors:
                    break
        finally:
            if pool:
                pool.shutdown()
        reports.append(
            SimReport(
                param=channel.param,
                frames=done,
                frame_errors=frame_errors,
                bit_errors=bit_errors,
                erasures=erasures,
                n_bits=graph.n,
                per_sp_errors=tuple(int(v) for v in per_sp),
                fully_resolved_frames=fully,
                syndrome_failures=syndrome_bad,
            )
        )
    return reports


def windowed_de_residual(spec: EnsembleSpec, epsilon: float, setup: DecoderSetup) -> np.ndarray:
    """Deterministic (infinite-M) model of the windowed decoder.

    Runs density evolution restricted to the sliding window with the same
    schedule as the bit-level decoder and returns the final residual
    erasure profile. Positions finalized while still erased stay erased.
    """
    nu = spec.profile.as_array()
    eps = float(epsilon)
    x = np.full(spec.L, eps)
    for lo, hi in _window_ranges(spec.L, setup.window):
        for _ in range(setup.iterations):
            x_next = _step_arrays(x, nu, spec.dv, spec.dc, eps)
            if np.max(np.abs(x_next[lo:hi] - x[lo:hi])) < MESSAGE_TOL:
                x[lo:hi] = x_next[lo:hi]
                break
            x[lo:hi] = x_next[lo:hi]
    return x


def windowed_threshold(
    spec: EnsembleSpec,
    setup: DecoderSetup,
    tol: float = 1e-3,
    residual_cutoff: float = CONVERGENCE_CUTOFF,
) -> float:
    """Largest erasure probability the windowed schedule decodes, in the
    infinite-M model; bisection to bracket width `tol`."""
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if windowed_de_residual(spec, mid, setup).max() < residual_cutoff:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
