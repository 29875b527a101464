import numpy as np
import pytest
from scipy import stats

from scwave.ensemble import EnsembleError, EnsembleSpec, SmoothingProfile, design_rate
from scwave.sampler import (
    edge_type_counts,
    export_alist,
    import_alist,
    realized_rate,
    sample_code,
)

NU3A = SmoothingProfile((0.37124, 0.00835, 0.62041))


def uniform_spec(dv, dc, w, L, M):
    return EnsembleSpec(dv, dc, SmoothingProfile.uniform(w), L, M)


class TestEdgeTypeCounts:
    def test_sums_to_socket_budget(self, rng):
        for _ in range(100):
            w = int(rng.integers(1, 9))
            nu = rng.dirichlet(np.ones(w))
            spec = EnsembleSpec(3, 6, SmoothingProfile(nu), 20, 240)
            counts = edge_type_counts(spec)
            assert counts.sum() == spec.M * spec.dv
            assert np.all(counts >= 0)

    def test_respects_exact_zero_weights(self):
        spec = EnsembleSpec(3, 6, SmoothingProfile((0.5, 0.0, 0.5)), 20, 240)
        assert edge_type_counts(spec)[1] == 0

    def test_frequencies_converge_to_profile(self):
        spec = EnsembleSpec(3, 6, NU3A, 20, 24000)
        freq = edge_type_counts(spec) / (spec.M * spec.dv)
        assert np.max(np.abs(freq - np.asarray(spec.nu))) < 1e-4


class TestSampleCode:
    def test_dimensions_and_degrees(self):
        spec = uniform_spec(3, 6, 3, 20, 120)
        g = sample_code(spec, 7)
        assert g.n == 2400
        assert g.num_cns == (20 + 2) * 120 * 3 // 6
        assert g.num_edges == 2400 * 3
        degs = g.cn_degrees()
        assert degs.sum() == g.num_edges
        interior = degs[(g.cn_sp >= spec.w - 1) & (g.cn_sp < spec.L)]
        assert np.all(interior == 6)

    def test_boundary_cns_may_be_short(self):
        g = sample_code(uniform_spec(3, 6, 3, 20, 120), 7)
        boundary = g.cn_degrees()[g.cn_sp >= 20]
        assert boundary.min() < 6

    def test_edge_locality(self):
        spec = EnsembleSpec(4, 8, NU3A, 30, 200)
        g = sample_code(spec, 3)
        offsets = g.cn_sp[g.edge_cn] - g.vn_sp[g.edge_vn]
        assert offsets.min() >= 0
        assert offsets.max() <= spec.w - 1

    def test_w1_is_block_diagonal(self):
        spec = uniform_spec(3, 6, 1, 10, 60)
        g = sample_code(spec, 1)
        assert np.all(g.cn_sp[g.edge_cn] == g.vn_sp[g.edge_vn])
        assert np.all(g.cn_degrees() == 6)

    def test_seed_determinism(self):
        spec = uniform_spec(3, 6, 3, 20, 120)
        a = sample_code(spec, 42)
        b = sample_code(spec, 42)
        c = sample_code(spec, 43)
        assert np.array_equal(a.edge_cn, b.edge_cn)
        assert not np.array_equal(a.edge_cn, c.edge_cn)

    def test_invalid_spec_rejected(self):
        with pytest.raises(EnsembleError):
            sample_code(uniform_spec(3, 6, 3, 20, 121), 0)  # M*dv/dc not integer

    def test_offset_chi_square(self):
        spec = EnsembleSpec(3, 6, NU3A, 20, 1200)
        g = sample_code(spec, 11)
        offsets = g.cn_sp[g.edge_cn] - g.vn_sp[g.edge_vn]
        observed = np.bincount(offsets, minlength=spec.w)
        expected = np.asarray(spec.nu) * g.num_edges
        _, p = stats.chisquare(observed, expected)
        assert p > 0.01


class TestRealizedRate:
    def test_w1_exact(self):
        g = sample_code(uniform_spec(3, 6, 1, 10, 60), 5)
        assert realized_rate(g) == 0.5

    def test_concentrates_on_design_rate(self):
        spec = EnsembleSpec(3, 6, NU3A, 50, 1200)
        want = design_rate(spec).design_rate
        rates = [realized_rate(sample_code(spec, s)) for s in range(10)]
        assert abs(np.mean(rates) - want) < 2e-3

    def test_deviation_shrinks_with_M(self):
        spec_small = EnsembleSpec(3, 6, NU3A, 50, 120)
        spec_large = EnsembleSpec(3, 6, NU3A, 50, 1200)
        dev = {}
        for name, spec in (("small", spec_small), ("large", spec_large)):
            want = design_rate(spec).design_rate
            rates = [realized_rate(sample_code(spec, s)) for s in range(12)]
            dev[name] = abs(np.mean(rates) - want)
        assert dev["large"] <= dev["small"] + 5e-4


class TestAlist:
    def test_round_trip(self, tmp_path):
        spec = EnsembleSpec(3, 6, NU3A, 12, 60)
        g = sample_code(spec, 9)
        path = tmp_path / "code.alist"
        collapsed = export_alist(g, path)
        n, m, cols = import_alist(path)
        assert (n, m) == (g.n, g.num_cns)
        adj = [sorted(set(row)) for row in g.adjacency().tolist()]
        assert cols == adj
        assert collapsed == g.num_edges - sum(len(c) for c in adj)

    def test_w1_regular_structure(self, tmp_path):
        g = sample_code(uniform_spec(3, 6, 1, 1, 12), 2)
        path = tmp_path / "tiny.alist"
        export_alist(g, path)
        n, m, cols = import_alist(path)
        assert n == 12 and m == 6
        lines = path.read_text().splitlines()
        col_weights = [int(t) for t in lines[2].split()]
        assert all(wt <= 3 for wt in col_weights)
        assert g.multi_edge_count() == 12 * 3 - sum(col_weights)

    def test_header_dimensions(self, tmp_path):
        spec = EnsembleSpec(3, 6, SmoothingProfile.uniform(4), 16, 80)
        g = sample_code(spec, 4)
        path = tmp_path / "c.alist"
        export_alist(g, path)
        first = path.read_text().splitlines()[0].split()
        assert int(first[0]) == spec.L * spec.M
        assert int(first[1]) == (spec.L + spec.w - 1) * spec.M * spec.dv // spec.dc
