import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtraj import linalg
from qtraj.maps import MapKind
from qtraj.metrics import (
    accumulated_trae,
    appendixB_check,
    ensemble_reduce,
    fit_scaling,
    log_histogram,
    trae_mixed,
    trae_pure,
    trse_pure,
)
from qtraj.presets import example_setup
from qtraj.trajectory import ProtocolConfig, TrajectoryErrors, run_ensemble


def rand_state(rng, d):
    return linalg.normalize(rng.normal(size=d) + 1j * rng.normal(size=d))


seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestDistances:
    def test_identical_and_orthogonal(self):
        assert trae_pure([1, 0], [1, 0]) == 0.0
        assert trae_pure([1, 0], [0, 1]) == 1.0
        assert trse_pure([1, 0], [0, 1]) == 2.0

    def test_global_phase(self):
        v = linalg.normalize(np.array([1, 2j, 3]))
        assert trae_pure(v, 1j * v) < 1e-7

    @settings(max_examples=50, deadline=None)
    @given(seeds, st.integers(min_value=2, max_value=6))
    def test_trse_is_twice_square(self, seed, d):
        rng = np.random.default_rng(seed)
        a, b = rand_state(rng, d), rand_state(rng, d)
        assert trse_pure(a, b) == pytest.approx(2 * trae_pure(a, b) ** 2, abs=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(seeds, st.integers(min_value=2, max_value=6))
    def test_triangle_inequality(self, seed, d):
        rng = np.random.default_rng(seed)
        a, b, c = (rand_state(rng, d) for _ in range(3))
        assert trae_pure(a, c) <= trae_pure(a, b) + trae_pure(b, c) + 1e-12

    @settings(max_examples=50, deadline=None)
    @given(seeds, st.integers(min_value=2, max_value=6))
    def test_mixed_agrees_on_pure_states(self, seed, d):
        # trace distance of pure states from the eigenvalues of the difference
        rng = np.random.default_rng(seed)
        a, b = rand_state(rng, d), rand_state(rng, d)
        got = trae_mixed(linalg.projector(a), linalg.projector(b))
        assert got == pytest.approx(trae_pure(a, b), abs=1e-7)

    def test_mixed_classical(self):
        assert trae_mixed(np.diag([0.7, 0.3]), np.diag([0.4, 0.6])) == pytest.approx(0.3)


class TestHistogram:
    def test_edges_and_clipping(self):
        h = log_histogram([1e-9, 1e-5, 0.5])
        assert len(h.edges) == 51 and len(h.counts) == 50
        assert h.edges[0] == pytest.approx(1e-7) and h.edges[-1] == pytest.approx(1e-1)
        assert h.counts[0] == 1 and h.counts[-1] == 1 and h.counts.sum() == 3

    def test_log_spacing(self):
        h = log_histogram([], bins=6, value_range=(1e-6, 1.0))
        assert np.allclose(np.log10(h.edges), np.arange(-6, 1))


def fake(i, value, aborted=False):
    k = MapKind.ITO
    if aborted:
        return TrajectoryErrors(i, True, reason="x")
    return TrajectoryErrors(i, False, sigma_sq={k: value**2}, trae_mean={k: value / 2})


class TestEnsembleReduce:
    def test_constant(self):
        s = ensemble_reduce([fake(i, 1e-3) for i in range(10)])
        m = s[MapKind.ITO]
        assert m.mtrse == pytest.approx(1e-3)
        assert m.mtrae == pytest.approx(5e-4)
        assert m.histogram.counts.sum() == 10
        assert s.realizations == 10 and s.aborted_count == 0

    def test_mean_of_roots(self):
        # mean over trajectories of sqrt(time-averaged TrSE), not the root of the mean
        s = ensemble_reduce([fake(0, 1e-3), fake(1, 3e-3)])
        assert s["ito"].mtrse == pytest.approx(2e-3)

    def test_aborts_excluded(self):
        s = ensemble_reduce([fake(0, 1e-3), fake(1, 0, aborted=True), fake(2, 1e-3)])
        assert s.aborted_count == 1
        assert len(s["ito"].sigma_time_avg) == 2

    def test_all_aborted(self):
        s = ensemble_reduce([fake(0, 0, aborted=True)])
        assert s.maps == {}

    def test_empty(self):
        with pytest.raises(ValueError):
            ensemble_reduce([])

    def test_zeros(self):
        s = ensemble_reduce([fake(i, 0.0) for i in range(3)])
        assert s["ito"].mtrse == 0.0 and s["ito"].histogram.counts[0] == 3


class TestFitScaling:
    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
    def test_exact_power_law(self, p):
        grid = [4e-3, 1e-2, 2.5e-2, 6.3e-2]
        fit = fit_scaling([(g, 0.3 * g**p) for g in grid])
        assert fit.slope == pytest.approx(p, abs=1e-12)
        assert math.exp(fit.intercept) == pytest.approx(0.3, rel=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_unsorted_input(self):
        fit = fit_scaling([(1e-1, 1e-2), (1e-3, 1e-6), (1e-2, 1e-4)])
        assert fit.slope == pytest.approx(2.0)
        assert list(fit.dt_values) == [1e-3, 1e-2, 1e-1]

    def test_noisy_r2(self):
        rng = np.random.default_rng(0)
        grid = np.logspace(-3, -1, 8)
        fit = fit_scaling(zip(grid, grid**1.5 * np.exp(0.1 * rng.normal(size=8))))
        assert abs(fit.slope - 1.5) < 0.15
        assert 0.9 < fit.r_squared < 1.0

    @pytest.mark.parametrize(
        "pts",
        [
            [(1e-3, 1.0), (1e-2, 2.0)],
            [(1e-3, 1.0), (1e-3, 2.0), (1e-2, 3.0)],
            [(1e-3, 0.0), (1e-2, 2.0), (1e-1, 3.0)],
            [(1e-3, 1.0), (1e-2, math.nan), (1e-1, 3.0)],
            [(-1e-3, 1.0), (1e-2, 2.0), (1e-1, 3.0)],
        ],
    )
    def test_rejects(self, pts):
        with pytest.raises(ValueError):
            fit_scaling(pts)


class TestAccumulation:
    def test_formula(self):
        assert accumulated_trae(0.1152 * 1e-3, 100) == pytest.approx(7.68e-4, rel=1e-3)

    def test_check_edge_cases(self):
        assert appendixB_check(0.0, 100, 0.0) == 1.0
        assert appendixB_check(0.0, 100, 1e-3) == math.inf
        assert appendixB_check(1e-3, 1, 2e-3 / 3) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            appendixB_check(1e-3, 0, 1e-3)

    def test_random_walk_prefactor(self):
        # isotropic 3D walk of rms step D: E|W_j| = sqrt(8 j / 3 pi) D, so the
        # time average sits near 0.92 of the (2/3) sqrt(N) D estimate
        rng = np.random.default_rng(1)
        N, R, D = 400, 4000, 1.0
        steps = rng.normal(size=(R, N, 3)) * D / math.sqrt(3)
        walk = np.linalg.norm(np.cumsum(steps, axis=1), axis=2)
        expect = math.sqrt(8 / (3 * math.pi)) * np.mean(np.sqrt(np.arange(1, N + 1))) * D
        assert walk.mean() == pytest.approx(expect, rel=0.01)
        assert walk.mean() / accumulated_trae(D, N) == pytest.approx(0.92, abs=0.02)

    def test_ito_ensemble_ratio(self):
        s = example_setup("qubit-fluorescence")
        cfg = ProtocolConfig(realizations=100, seed=4, map_kinds=("ito",), one_step=True)
        res = ensemble_reduce(run_ensemble(s, cfg))
        m = res["ito"]
        ratio = appendixB_check(m.one_step_trae, cfg.n_bins, m.mtrae)
        assert 0.7 < ratio < 1.3
