"""Finite-length Tanner-graph sampling and alist import/export.

Construction is type-exact: per spatial position the M*dv edges are split
across the w offsets by largest-remainder apportionment of M*dv*nu, then
the edges arriving at each check-node position are matched to a uniformly
random subset of that position's M*dv sockets. Interior check positions
receive exactly M*dv edges and therefore end up dc-regular; boundary
positions may be short, including entirely unconnected check nodes.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ensemble import EnsembleError, EnsembleSpec

logger = logging.getLogger(__name__)


@dataclass
class CodeGraph:
    """Realized bipartite graph of an (dv, dc, nu, L, M) sample.

    Spatial positions are 0-based here: VNs occupy positions 0..L-1, CNs
    0..L+w-2. Edge k of VN v is edge id v*dv + k; `edge_cn[e]` is the CN it
    lands on. Multi-edges are allowed and recorded as-is.
    """

    spec: EnsembleSpec
    seed: int
    edge_cn: np.ndarray  # (n*dv,) int64
    vn_sp: np.ndarray  # (n,) int32
    cn_sp: np.ndarray  # (num_cns,) int32

    @property
    def n(self) -> int:
        return len(self.vn_sp)

    @property
    def num_cns(self) -> int:
        return len(self.cn_sp)

    @property
    def num_edges(self) -> int:
        return len(self.edge_cn)

    @property
    def edge_vn(self) -> np.ndarray:
        return np.arange(self.num_edges, dtype=np.int64) // self.spec.dv

    def adjacency(self) -> np.ndarray:
        """Per-VN CN indices, shape (n, dv)."""
        return self.edge_cn.reshape(self.n, self.spec.dv)

    def cn_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_cn, minlength=self.num_cns)

    def multi_edge_count(self) -> int:
        """Number of edges beyond the first between any VN/CN pair."""
        adj = np.sort(self.adjacency(), axis=1)
        return int((adj[:, 1:] == adj[:, :-1]).sum())


def edge_type_counts(spec: EnsembleSpec) -> np.ndarray:
    """Offsets-per-position edge counts c_i: largest-remainder split of
    M*dv*nu_i summing exactly to M*dv. Identical for every position."""
    total = spec.M * spec.dv
    ideal = total * spec.profile.as_array()
    base = np.floor(ideal).astype(np.int64)
    short = total - int(base.sum())
    order = np.argsort(-(ideal - base), kind="stable")
    base[order[:short]] += 1
    return base


def sample_code(spec: EnsembleSpec, seed: int) -> CodeGraph:
    """Draw one graph from the ensemble; deterministic for a given seed."""
    check = spec.validate()
    if not check.ok:
        raise EnsembleError("; ".join(check.violations))
    rng = np.random.default_rng(seed)
    L, M, dv, dc, w = spec.L, spec.M, spec.dv, spec.dc, spec.w
    n = L * M
    cn_per_sp = M * dv // dc
    num_cn_sps = L + w - 1
    num_cns = num_cn_sps * cn_per_sp

    counts = edge_type_counts(spec)
    offsets_template = np.repeat(np.arange(w, dtype=np.int32), counts)

    # Offset of every edge: a fresh shuffle of the per-position multiset.
    edge_offset = np.empty(n * dv, dtype=np.int32)
    for z in range(L):
        block = offsets_template.copy()
        rng.shuffle(block)
        edge_offset[z * M * dv : (z + 1) * M * dv] = block

    vn_sp = (np.arange(n, dtype=np.int32) // M).astype(np.int32)
    edge_target_sp = vn_sp.repeat(dv).astype(np.int64) + edge_offset

    # Group edges by target CN position, then hand each group a random
    # subset of that position's sockets. Socket s belongs to CN s // dc.
    order = np.argsort(edge_target_sp, kind="stable")
    sorted_sp = edge_target_sp[order]
    group_starts = np.searchsorted(sorted_sp, np.arange(num_cn_sps))
    group_ends = np.searchsorted(sorted_sp, np.arange(num_cn_sps), side="right")

    edge_cn = np.empty(n * dv, dtype=np.int64)
    for u in range(num_cn_sps):
        members = order[group_starts[u] : group_ends[u]]
        k = len(members)
        if k > M * dv:
            raise EnsembleError(
                f"check position {u} would receive {k} edges for {M * dv} sockets"
            )
        sockets = rng.permutation(M * dv)[:k]
        edge_cn[members] = u * cn_per_sp + sockets // dc

    cn_sp = (np.arange(num_cns, dtype=np.int32) // cn_per_sp).astype(np.int32)
    return CodeGraph(spec=spec, seed=seed, edge_cn=edge_cn, vn_sp=vn_sp, cn_sp=cn_sp)


def realized_rate(graph: CodeGraph) -> float:
    """1 - (connected check nodes)/n; unconnected boundary CNs impose no
    constraint and are excluded, mirroring the expectation in the rate
    formula."""
    connected = int((graph.cn_degrees() > 0).sum())
    return 1.0 - connected / graph.n


def export_alist(graph: CodeGraph, path: str | Path) -> int:
    """Write the parity-check matrix in the standard alist text format.

    Returns the number of multi-edges that had to be collapsed (the format
    cannot express them); a warning is logged when nonzero. Indices in the
    file are 1-based; degree lists are zero-padded to the maximum degree.
    """
    n, m = graph.n, graph.num_cns
    cols: list[np.ndarray] = [
        np.unique(row) for row in graph.adjacency()
    ]
    collapsed = graph.num_edges - sum(len(c) for c in cols)
    if collapsed:
        logger.warning("alist export collapsed %d multi-edges", collapsed)
    rows: list[list[int]] = [[] for _ in range(m)]
    for v, cs in enumerate(cols):
        for c in cs:
            rows[int(c)].append(v)
    col_deg = [len(c) for c in cols]
    row_deg = [len(r) for r in rows]
    max_col = max(col_deg) if col_deg else 0
    max_row = max(row_deg) if row_deg else 0

    def pad(indices, width):
        one_based = [str(i + 1) for i in indices]
        return " ".join(one_based + ["0"] * (width - len(indices)))

    lines = [
        f"{n} {m}",
        f"{max_col} {max_row}",
        " ".join(map(str, col_deg)),
        " ".join(map(str, row_deg)),
    ]
    lines += [pad(c, max_col) for c in cols]
    lines += [pad(r, max_row) for r in rows]
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)
    return collapsed


def import_alist(path: str | Path) -> tuple[int, int, list[list[int]]]:
    """Read an alist file; returns (n, m, per-column 0-based row indices)."""
    tokens_per_line = [
        [int(t) for t in line.split()]
        for line in Path(path).read_text().splitlines()
        if line.strip()
    ]
    n, m = tokens_per_line[0]
    col_deg = tokens_per_line[2]
    if len(col_deg) != n:
        raise ValueError(f"alist declares {n} columns but lists {len(col_deg)} degrees")
    cols = []
    for v in range(n):
        entries = tokens_per_line[4 + v]
        cols.append(sorted(i - 1 for i in entries[: col_deg[v]] if i > 0))
    return n, m, cols
