import numpy as np
import pytest
from hypothesis import given, strategies as st

from veinfer.config import parse_prior_text, prior_to_text, PRIOR_KEYS
from veinfer.model import (
    BetaParams,
    CohortCounts,
    ModelParams,
    ObservationClass,
    ObservedData,
    PriorSpec,
    make_beta,
    named_prior,
    NAMED_PRIORS,
)


class TestMakeBeta:
    def test_symmetric(self):
        bp = make_beta(0.5, 200)
        assert (bp.a0, bp.a1) == (100, 100)

    def test_prior_table_entry(self):
        # 0.995 with pseudo-counts summing to exactly 200
        bp = make_beta(0.995, 200)
        assert bp.a0 == pytest.approx(1.0, rel=1e-12)
        assert bp.a1 == pytest.approx(199.0, rel=1e-12)
        assert bp.a0 + bp.a1 == 200.0

    def test_direct_evaluation(self):
        bp = make_beta(0.4, 200)
        assert bp.a1 == 0.4 * 200
        assert bp.a0 == 200 - 0.4 * 200
        assert (bp.a0, bp.a1) == (120, 80)

    @pytest.mark.parametrize("mean,total", [(0.0, 200), (1.0, 200), (-0.1, 200), (0.5, 0), (0.5, -3)])
    def test_invalid_arguments(self, mean, total):
        with pytest.raises(ValueError):
            make_beta(mean, total)

    @given(
        mean=st.floats(min_value=1e-6, max_value=1 - 1e-6),
        total=st.floats(min_value=1e-6, max_value=1e9),
    )
    def test_round_trip(self, mean, total):
        bp = make_beta(mean, total)
        assert bp.mean == pytest.approx(mean, rel=1e-12)
        assert bp.total == pytest.approx(total, rel=1e-12)


class TestBetaParams:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            BetaParams(0.0, 1.0)
        with pytest.raises(ValueError):
            BetaParams(1.0, -2.0)

    def test_mean_inside_unit_interval(self):
        bp = BetaParams(3.0, 7.0)
        assert 0.0 < bp.mean < 1.0
        assert bp.mean == pytest.approx(0.7)


class TestNamedPriors:
    def test_wide_open_all_uniform(self):
        prior = named_prior("wide_open")
        for entry in prior.flat():
            assert (entry.a0, entry.a1) == (1.0, 1.0)

    def test_prior1_vaccination_entries(self):
        prior = named_prior("prior1")
        assert prior.beta[0].a0 == pytest.approx(199, rel=1e-12)
        assert prior.beta[0].a1 == pytest.approx(1, rel=1e-12)
        assert prior.beta[1].a0 == pytest.approx(1, rel=1e-12)
        assert prior.beta[1].a1 == pytest.approx(199, rel=1e-12)

    def test_prior1_hospitalisation_constant_in_l_and_v(self):
        prior = named_prior("prior1")
        for l in (0, 1):
            for v in (0, 1):
                assert prior.delta[0][l][v].a0 == pytest.approx(120, rel=1e-12)
                assert prior.delta[0][l][v].a1 == pytest.approx(80, rel=1e-12)
                assert prior.delta[1][l][v].a0 == pytest.approx(1, rel=1e-12)
                assert prior.delta[1][l][v].a1 == pytest.approx(199, rel=1e-12)

    def test_prior3_delta_split(self):
        prior = named_prior("prior3")
        assert prior.delta[0][0][0].a0 == pytest.approx(180, rel=1e-12)
        assert prior.delta[0][0][0].a1 == pytest.approx(20, rel=1e-12)
        assert prior.delta[1][1][0].a0 == pytest.approx(1, rel=1e-12)
        assert prior.delta[1][1][0].a1 == pytest.approx(199, rel=1e-12)
        assert prior.delta[0][0][1].a0 == pytest.approx(1, rel=1e-12)
        assert prior.delta[0][0][1].a1 == pytest.approx(199, rel=1e-12)

    def test_prior2_only_subset_fraction_informative(self):
        prior = named_prior("prior2")
        assert prior.alpha.a0 == pytest.approx(1, rel=1e-12)
        assert prior.alpha.a1 == pytest.approx(199, rel=1e-12)
        for entry in prior.flat()[1:]:
            assert (entry.a0, entry.a1) == (1.0, 1.0)

    @pytest.mark.parametrize("name", NAMED_PRIORS)
    def test_pseudocount_sums_are_2_or_200(self, name):
        for entry in named_prior(name).flat():
            assert entry.total in (2.0, 200.0)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            named_prior("prior9")


class TestModelParams:
    def test_round_trip_array(self):
        rng = np.random.default_rng(1)
        values = rng.uniform(size=13)
        params = ModelParams.from_array(values)
        assert np.array_equal(params.as_array(), values)

    def test_q_index_order_is_slv(self):
        values = np.zeros(13)
        values[5 + 4 * 1 + 2 * 0 + 1] = 0.25   # q[s=1][l=0][v=1]
        params = ModelParams.from_array(values)
        assert params.q[1][0][1] == 0.25

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            ModelParams.from_array([1.5] + [0.5] * 12)


class TestCohortCounts:
    def test_total_and_hospitalised(self):
        n = np.zeros((2, 2, 2, 2), dtype=np.int64)
        n[0, 1, 0, 1] = 7
        n[1, 0, 1, 0] = 3
        cohort = CohortCounts(n)
        assert cohort.total == 10
        assert cohort.n_hospitalised == 7

    def test_rejects_negative(self):
        n = np.zeros((2, 2, 2, 2), dtype=np.int64)
        n[0, 0, 0, 0] = -1
        with pytest.raises(ValueError):
            CohortCounts(n)


class TestObservedData:
    def test_l_must_be_known_iff_hospitalised(self):
        with pytest.raises(ValueError):
            ObservedData(classes=(ObservationClass(v=1, h=1, l=None, count=3),))
        with pytest.raises(ValueError):
            ObservedData(classes=(ObservationClass(v=1, h=0, l=1, count=3),))

    def test_totals(self):
        obs = ObservedData(classes=(
            ObservationClass(v=1, h=1, l=0, count=2),
            ObservationClass(v=0, h=0, l=None, count=5),
            ObservationClass(v=None, h=0, l=None, count=4),
        ))
        assert obs.total == 11
        assert obs.n_hospitalised == 2
        assert obs.known_vaccination_totals() == (5, 2)
        assert obs.n_vaccination_unknown() == 4


class TestPriorConfigFormat:
    @pytest.mark.parametrize("name", NAMED_PRIORS)
    def test_round_trip_named(self, name):
        prior = named_prior(name)
        assert parse_prior_text(prior_to_text(prior)) == prior

    def test_round_trip_arbitrary(self):
        entries = [BetaParams(0.1 + i, 2.5 / (i + 1)) for i in range(13)]
        prior = PriorSpec.from_flat(entries)
        assert parse_prior_text(prior_to_text(prior)) == prior

    def test_base_with_override(self):
        text = "base = wide_open\nalpha = mean=0.995 total=200\n"
        prior = parse_prior_text(text)
        assert prior.alpha.a0 == pytest.approx(1.0)
        assert prior.alpha.a1 == pytest.approx(199.0)
        assert prior.beta[0] == BetaParams(1.0, 1.0)

    def test_comments_and_blanks(self):
        text = prior_to_text(named_prior("prior1")) + "\n# trailing comment\n\n"
        assert parse_prior_text(text) == named_prior("prior1")

    def test_missing_entries_without_base(self):
        with pytest.raises(ValueError, match="missing"):
            parse_prior_text("alpha = 1 1\n")

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown key"):
            parse_prior_text("base = wide_open\nepsilon = 1 1\n")

    def test_all_keys_cover_13_entries(self):
        assert len(PRIOR_KEYS) == 13
