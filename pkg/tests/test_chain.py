import math

import numpy as np
import pytest
from scipy.stats import kstest

import veinfer._kernel_py as kpy
from veinfer.chain import (
    ChainConfig,
    ChainTrace,
    build_class_table,
    convergence_check,
    init_chain,
    palindromic_sweep,
    run_chain,
    summarize_trace,
    update_conjugate,
    update_latent,
)
from veinfer.generate import (
    ObservationRegime,
    draw_cohort,
    draw_params,
    make_rng,
    observe,
)
from veinfer.kernel import available_kernels
from veinfer.model import (
    ModelParams,
    ObservationClass,
    ObservedData,
    PriorSpec,
    make_beta,
    named_prior,
)

WIDE = named_prior("wide_open")


def _simulated(seed, n=1000, prior=WIDE):
    rng = make_rng(seed)
    params = draw_params(prior, rng)
    cohort = draw_cohort(params, n, rng)
    obs = observe(cohort, ObservationRegime.spontaneous(), rng)
    return params, cohort, obs, rng


class TestChainConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ChainConfig(n_samples=5)
        with pytest.raises(ValueError):
            ChainConfig(n_samples=100, burn_in_fraction=1.0)
        with pytest.raises(ValueError):
            ChainConfig(n_samples=100, start_mode="warm")
        with pytest.raises(ValueError):
            ChainConfig(n_samples=100, thinning=0)


class TestClassTable:
    def test_groups_ordered_s_then_l_then_v(self):
        obs = ObservedData(classes=(
            ObservationClass(v=None, h=0, l=None, count=3),
            ObservationClass(v=1, h=1, l=0, count=2),
            ObservationClass(v=0, h=0, l=None, count=4),
        ))
        t = build_class_table(obs)
        assert t.class_order == (1, 2, 0)
        assert list(np.diff(t.cell_off)) == [2, 4, 8]
        assert t.n_cells == 14

    def test_cells_enumerate_latent_dims_lexicographically(self):
        obs = ObservedData(classes=(ObservationClass(v=None, h=0, l=None, count=1),))
        t = build_class_table(obs)
        cells = list(zip(t.cell_s, t.cell_l, t.cell_v))
        assert cells == [(s, l, v) for s in (0, 1) for l in (0, 1) for v in (0, 1)]


class TestInitChain:
    def test_from_truth_matches_observed_marginals(self):
        params, cohort, obs, rng = _simulated(21)
        state = init_chain(WIDE, obs, ChainConfig(n_samples=100, start_mode="from_truth"),
                           rng, truth=(params, cohort))
        assert state.latent_marginals_ok()
        assert np.array_equal(
            np.sort(state.params), np.sort(params.as_array())
        )

    def test_from_truth_requires_truth(self):
        _, _, obs, rng = _simulated(22)
        with pytest.raises(ValueError, match="from_truth"):
            init_chain(WIDE, obs, ChainConfig(n_samples=100, start_mode="from_truth"), rng)

    def test_inconsistent_truth_rejected(self):
        params, cohort, obs, rng = _simulated(23)
        other_cohort = draw_cohort(params, cohort.total + 7, rng)
        with pytest.raises(ValueError, match="inconsistent"):
            init_chain(WIDE, obs, ChainConfig(n_samples=100, start_mode="from_truth"),
                       rng, truth=(params, other_cohort))

    def test_from_prior_initial_p_uniform(self):
        # 10^4 inits under the wide-open prior: initial p is Uniform(0, 1)
        obs = ObservedData(classes=(ObservationClass(v=0, h=0, l=None, count=2),))
        cfg = ChainConfig(n_samples=100)
        rng = make_rng(3)
        draws = np.empty(10_000)
        for i in range(draws.size):
            draws[i] = init_chain(WIDE, obs, cfg, rng).params[0]
        assert kstest(draws, "uniform").pvalue > 0.001

    def test_from_prior_latents_conserve_marginals(self):
        _, _, obs, rng = _simulated(24)
        state = init_chain(WIDE, obs, ChainConfig(n_samples=100), rng)
        assert state.latent_marginals_ok()


class TestConjugateUpdate:
    def test_posterior_matches_beta_ks(self):
        # frozen latent state: repeated conjugate draws of p follow
        # Beta(alpha0 + #{s=0}, alpha1 + #{s=1})
        obs = ObservedData(classes=(
            ObservationClass(v=0, h=1, l=0, count=7),
            ObservationClass(v=1, h=1, l=1, count=3),
        ))
        cfg = ChainConfig(n_samples=100)
        rng = make_rng(5)
        state = init_chain(WIDE, obs, cfg, rng)
        state.latent[:] = np.array([7, 0, 0, 3])  # s=0 for all 7; s=1 for all 3
        draws = np.empty(100_000)
        for i in range(draws.size):
            update_conjugate(state)
            draws[i] = state.params[0]
        assert kstest(draws, "beta", args=(1 + 3, 1 + 7)).pvalue > 0.001

    def test_no_individuals_reduces_to_prior(self):
        obs = ObservedData(classes=(ObservationClass(v=0, h=0, l=None, count=0),))
        prior = named_prior("prior3")
        state = init_chain(prior, obs, ChainConfig(n_samples=100), make_rng(6))
        draws = np.empty(50_000)
        for i in range(draws.size):
            update_conjugate(state)
            draws[i] = state.params[0]
        # prior3 puts Beta(a0=1, a1=199) on the subset fraction, mean 0.995
        assert kstest(draws, "beta", args=(199, 1)).pvalue > 0.001
        assert draws.mean() == pytest.approx(0.995, abs=0.001)


class TestLatentUpdate:
    def test_unidentified_subset_is_fair_coin(self):
        # q constant, r0 = r1, p = 1/2: membership is exactly Bernoulli(1/2)
        obs = ObservedData(classes=(ObservationClass(v=1, h=1, l=1, count=10_000),))
        state = init_chain(WIDE, obs, ChainConfig(n_samples=100), make_rng(7))
        a = np.full(13, 0.37)
        a[0] = 0.5
        a[2] = a[1]
        state.params[:] = a
        counts = np.zeros(2)
        for _ in range(200):
            update_latent(state)
            counts += state.latent
        frac = counts[1] / counts.sum()
        assert frac == pytest.approx(0.5, abs=0.01)

    def test_certain_hospitalisation_forces_uninfected(self):
        # h=0 with q[s][1][v] = 1 for all s: infected would surely be in hospital
        obs = ObservedData(classes=(ObservationClass(v=0, h=0, l=None, count=500),))
        state = init_chain(WIDE, obs, ChainConfig(n_samples=100), make_rng(8))
        a = np.full(13, 0.5)
        for s in (0, 1):
            for v in (0, 1):
                a[5 + 4 * s + 2 + v] = 1.0
        state.params[:] = a
        update_latent(state)
        infected = state.latent[np.asarray(state.table.cell_l) == 1].sum()
        assert infected == 0

    def test_multinomial_cell_fractions_within_4_sigma(self):
        obs = ObservedData(classes=(ObservationClass(v=1, h=0, l=None, count=10_000),))
        state = init_chain(WIDE, obs, ChainConfig(n_samples=100), make_rng(9))
        rng_params = make_rng(10)
        a = rng_params.uniform(0.2, 0.8, 13)
        state.params[:] = a
        t = state.table
        update_latent(state)
        weights = kpy.cell_weights(state.params, t.cell_s, t.cell_l, t.cell_v, t.cell_h)
        pvals = weights / weights.sum()
        n = 10_000
        for k in range(4):
            sigma = math.sqrt(n * pvals[k] * (1 - pvals[k]))
            assert abs(state.latent[k] - n * pvals[k]) < 4 * sigma

    def test_marginal_conservation_over_sweeps(self):
        _, _, obs, rng = _simulated(25)
        state = init_chain(WIDE, obs, ChainConfig(n_samples=100), rng)
        for _ in range(1000):
            palindromic_sweep(state)
        assert state.latent_marginals_ok()


class TestRunChain:
    def test_trace_length(self):
        _, _, obs, rng = _simulated(26, n=200)
        trace = run_chain(WIDE, obs, ChainConfig(n_samples=1000), rng)
        assert trace.n_samples == 1000
        assert np.isfinite(trace.t0).all()

    def test_deterministic_per_seed(self):
        _, _, obs, _ = _simulated(27, n=300)
        cfg = ChainConfig(n_samples=200)
        a = run_chain(WIDE, obs, cfg, make_rng(55))
        b = run_chain(WIDE, obs, cfg, make_rng(55))
        assert np.array_equal(a.data, b.data)

    def test_two_sweeps_from_same_state_identical(self):
        _, _, obs, _ = _simulated(28, n=300)
        states = []
        for _ in range(2):
            state = init_chain(WIDE, obs, ChainConfig(n_samples=100), make_rng(60))
            palindromic_sweep(state)
            palindromic_sweep(state)
            states.append((state.params.copy(), state.latent.copy()))
        assert np.array_equal(states[0][0], states[1][0])
        assert np.array_equal(states[0][1], states[1][1])

    def test_degenerate_prior_concentrates_at_truth(self):
        rng = make_rng(29)
        truth = ModelParams.from_array(rng.uniform(0.2, 0.8, 13))
        tight = PriorSpec.from_flat([make_beta(m, 1e9) for m in truth.as_array()])
        cohort = draw_cohort(truth, 500, rng)
        obs = observe(cohort, ObservationRegime.spontaneous(), rng)
        trace = run_chain(tight, obs, ChainConfig(n_samples=500), rng)
        t0_true = math.log(truth.j[1] / (1 - truth.j[1])) - math.log(truth.j[0] / (1 - truth.j[0]))
        assert np.all(np.abs(trace.t0 - t0_true) < 0.05)

    def test_thinning_runs_extra_sweeps(self):
        _, _, obs, _ = _simulated(30, n=200)
        thin = run_chain(WIDE, obs, ChainConfig(n_samples=50, thinning=4), make_rng(1))
        plain = run_chain(WIDE, obs, ChainConfig(n_samples=200), make_rng(1))
        # record i of the thinned trace equals record 4i+3 of the plain trace
        assert np.array_equal(thin.data[0], plain.data[3])
        assert np.array_equal(thin.data[10], plain.data[43])

    def test_kernel_lanes_bit_identical(self):
        lanes = available_kernels()
        if "cython" not in lanes:
            pytest.skip("compiled kernel not built")
        _, _, obs, _ = _simulated(31, n=500)
        cfg = ChainConfig(n_samples=300)
        import veinfer.kernel as kernel_mod

        results = {}
        for lane in ("python", "cython"):
            old = kernel_mod.os.environ.get("VE_INFER_KERNEL")
            kernel_mod.os.environ["VE_INFER_KERNEL"] = lane
            try:
                trace = run_chain(WIDE, obs, cfg, make_rng(77))
                results[lane] = (trace.data.copy(), trace.n_clamped, trace.kernel)
            finally:
                if old is None:
                    kernel_mod.os.environ.pop("VE_INFER_KERNEL", None)
                else:
                    kernel_mod.os.environ["VE_INFER_KERNEL"] = old
        assert results["python"][2] == "python"
        assert results["cython"][2] == "cython"
        assert np.array_equal(results["python"][0], results["cython"][0])
        assert results["python"][1] == results["cython"][1]

    def test_identifiability_width_scales_as_root_n(self):
        # with hospitalisation certain, everyone is tested and t0 is identified
        certain = PriorSpec.from_flat(
            [WIDE.alpha, WIDE.beta[0], WIDE.beta[1], WIDE.gamma[0], WIDE.gamma[1]]
            + [make_beta(1 - 1e-9, 1e9)] * 8
        )
        rng = make_rng(32)
        params = draw_params(certain, rng)
        widths = {}
        for n in (100, 1000, 10_000):
            cohort = draw_cohort(params, n, rng)
            obs = observe(cohort, ObservationRegime.spontaneous(), rng)
            trace = run_chain(certain, obs, ChainConfig(n_samples=3000), rng)
            s = summarize_trace(trace)
            widths[n] = s["c97_5"] - s["c2_5"]
        assert 2.0 < widths[100] / widths[1000] < 5.0
        assert 2.0 < widths[1000] / widths[10_000] < 5.0

    def test_observables_stable_while_t0_roams(self):
        # wide-open run: the data pins P(H) while t0 stays very uncertain
        _, _, obs, rng = _simulated(33, n=1000)
        trace = run_chain(WIDE, obs, ChainConfig(n_samples=1000), rng)
        kept = trace.data[100:]
        assert kept[:, kpy.COL_PH].std() < 0.05
        assert kept[:, kpy.COL_T0].std() > 0.5


class TestSummarizeTrace:
    def test_centile_interpolation_rule(self):
        # samples 1..1000, 10% burn-in: centiles over 101..1000
        data = np.zeros((1000, kpy.N_COLS))
        data[:, kpy.COL_T0] = np.arange(1.0, 1001.0)
        trace = ChainTrace(data=data, n_clamped=0, kernel="python")
        s = summarize_trace(trace, 0.10)
        assert s["c2_5"] == pytest.approx(123.475, abs=1e-9)
        assert s["c97_5"] == pytest.approx(977.525, abs=1e-9)

    def test_constant_trace(self):
        data = np.zeros((100, kpy.N_COLS))
        data[:, kpy.COL_T0] = 3.25
        trace = ChainTrace(data=data, n_clamped=0, kernel="python")
        s = summarize_trace(trace, 0.10)
        assert s["c2_5"] == s["c97_5"] == 3.25

    def test_too_short_rejected(self):
        data = np.zeros((40, kpy.N_COLS))
        trace = ChainTrace(data=data, n_clamped=0, kernel="python")
        with pytest.raises(ValueError, match="too short"):
            summarize_trace(trace, 0.10)

    def test_mean_unvaccinated_count(self):
        data = np.zeros((100, kpy.N_COLS))
        data[:, kpy.COL_N_UNVACC] = 41.0
        trace = ChainTrace(data=data, n_clamped=0, kernel="python")
        assert summarize_trace(trace, 0.0)["mean_unvaccinated_count"] == 41.0


class TestConvergenceCheck:
    def _trace_from_t0(self, values, shift=0.0):
        data = np.zeros((len(values), kpy.N_COLS))
        data[:, kpy.COL_T0] = np.asarray(values) + shift
        data[:, kpy.COL_PV] = 0.4
        data[:, kpy.COL_PH] = 0.5
        data[:, kpy.COL_PLH] = 0.6
        return ChainTrace(data=data, n_clamped=0, kernel="python")

    def test_identical_traces_pass(self):
        rng = make_rng(1)
        values = rng.normal(size=500)
        report = convergence_check(self._trace_from_t0(values), self._trace_from_t0(values))
        assert report.passed
        assert all(d["mean_diff"] == 0.0 for d in report.quantities.values())

    def test_shifted_trace_fails(self):
        rng = make_rng(2)
        values = rng.normal(size=500)
        report = convergence_check(
            self._trace_from_t0(values), self._trace_from_t0(values, shift=1.0)
        )
        assert not report.passed
        assert report.quantities["t0"]["mean_diff"] == pytest.approx(1.0, abs=1e-9)

    def test_unequal_lengths_rejected(self):
        a = self._trace_from_t0(np.zeros(100))
        b = self._trace_from_t0(np.zeros(200))
        with pytest.raises(ValueError):
            convergence_check(a, b)


class TestClamping:
    def test_clamps_counted_and_t0_finite(self):
        # extreme prior forces Beta draws numerically to 1
        extreme = PriorSpec.from_flat([make_beta(1 - 1e-16, 1e17)] * 13)
        obs = ObservedData(classes=(ObservationClass(v=0, h=0, l=None, count=1),))
        trace = run_chain(extreme, obs, ChainConfig(n_samples=50, burn_in_fraction=0.0),
                          make_rng(4))
        assert trace.n_clamped > 0
        assert np.isfinite(trace.t0).all()
