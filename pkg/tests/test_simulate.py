"""Engine: determinism, oracle agreement, moment recursion, sum form."""

import itertools
import math

import numpy as np
import pytest

from perpsim.errors import (
    DomainError,
    InvalidArgumentsError,
    InvalidInputError,
    InvalidModelError,
    TooLargeError,
)
from perpsim.models import (
    DiscreteJoint,
    LogNormalPair,
    QConstant,
    QLogNormal,
    QRademacher,
    ScaledRademacher,
    SignedUnit,
)
from perpsim.scaled import to_real
from perpsim.simulate import (
    enumerate_exact,
    exact_moments_recursion,
    run_batch,
    run_sum_form,
    run_trajectory,
    trajectory_seed,
)
from perpsim.stats import dkw_bound, ks_two_sample

POINT_MASS_12 = DiscreteJoint((((1.0, 2.0), 1.0),))
FAIR_SIGN = DiscreteJoint((((1.0, 1.0), 0.5), ((1.0, -1.0), 0.5)))
CASE_II = LogNormalPair(0.5, 1.0, QConstant(1.0))


def brute_force_law(model: DiscreteJoint, n: int) -> dict[float, float]:
    """Independent enumeration oracle: walk every atom sequence."""
    law: dict[float, float] = {}
    for path in itertools.product(model.atoms, repeat=n):
        r = 0.0
        prob = 1.0
        for (q, m), p in path:
            r = q + m * r
            prob *= p
        law[r] = law.get(r, 0.0) + prob
    return law


class TestRunTrajectory:
    def test_deterministic_doubling(self):
        tr = run_trajectory(POINT_MASS_12, [1, 2, 3], seed=5)
        assert [to_real(p.r) for p in tr.points] == [1.0, 3.0, 7.0]

    def test_zero_q(self):
        model = DiscreteJoint((((0.0, 2.0), 1.0),))
        tr = run_trajectory(model, [10], seed=5)
        assert to_real(tr.points[0].r) == 0.0

    def test_pure_accumulation_long(self):
        model = DiscreteJoint((((1.0, 1.0), 1.0),))
        tr = run_trajectory(model, [1_000_000], seed=5)
        assert to_real(tr.points[0].r) == 1_000_000.0

    def test_same_seed_same_path(self):
        a = run_trajectory(CASE_II, [50], seed=11)
        b = run_trajectory(CASE_II, [50], seed=11)
        assert a.points[0].r == b.points[0].r

    def test_checkpoint_validation(self):
        with pytest.raises(InvalidInputError):
            run_trajectory(CASE_II, [], seed=1)
        with pytest.raises(InvalidInputError):
            run_trajectory(CASE_II, [5, 5], seed=1)
        with pytest.raises(InvalidInputError):
            run_trajectory(CASE_II, [0], seed=1)

    def test_track_w_needs_positive_model(self):
        with pytest.raises(InvalidArgumentsError):
            run_trajectory(FAIR_SIGN, [5], seed=1, track_w=True)


class TestRunBatch:
    def test_n1_matches_trajectory(self):
        batch = run_batch(CASE_II, [5, 25], 1, master_seed=321)
        tr = run_trajectory(CASE_II, [5, 25], trajectory_seed(321, 0))
        for j, n in enumerate((5, 25)):
            assert batch.vectors(n).take(0) == tr.points[j].r

    def test_every_index_matches_trajectory(self):
        batch = run_batch(CASE_II, [30], 10, master_seed=77)
        for i in range(10):
            tr = run_trajectory(CASE_II, [30], trajectory_seed(77, i))
            assert batch.vectors(30).take(i) == tr.points[0].r

    def test_worker_count_invariance(self):
        a = run_batch(CASE_II, [40], 4500, master_seed=13, workers=1)
        b = run_batch(CASE_II, [40], 4500, master_seed=13, workers=3)
        va, vb = a.vectors(40), b.vectors(40)
        assert np.array_equal(va.sign, vb.sign)
        assert np.array_equal(va.exponent, vb.exponent)
        assert np.array_equal(va.mantissa, vb.mantissa)

    def test_r2_law(self):
        batch = run_batch(FAIR_SIGN, [2], 100_000, master_seed=2024)
        values = batch.to_reals(2)
        assert abs((values == 0.0).mean() - 0.5) < 0.005
        assert set(np.unique(values)) == {0.0, 2.0}

    def test_w_log_nondecreasing(self):
        model = LogNormalPair(0.0, 1.0, QLogNormal(0.0, 1.0))
        cps = [1, 2, 5, 10, 50, 100]
        batch = run_batch(model, cps, 64, master_seed=5, track_w=True)
        w = np.stack([batch.w_log(n) for n in cps])
        assert np.all(np.diff(w, axis=0) >= 0.0)

    def test_samples_accessor(self):
        batch = run_batch(FAIR_SIGN, [3], 8, master_seed=1)
        values = batch.samples(3)
        assert len(values) == 8
        assert [to_real(v) for v in values] == batch.to_reals(3).tolist()


class TestEnumerateExact:
    def test_fair_sign_r2(self):
        law = enumerate_exact(FAIR_SIGN, 2)
        assert law.atoms == [(0.0, 0.5), (2.0, 0.5)]

    def test_point_mass(self):
        law = enumerate_exact(POINT_MASS_12, 3)
        assert law.atoms == [(7.0, 1.0)]

    def test_n1_is_law_of_q(self):
        model = DiscreteJoint((((1.0, 2.0), 0.25), ((-3.0, 0.5), 0.75)))
        law = enumerate_exact(model, 1)
        assert law.atoms == [(-3.0, 0.75), (1.0, 0.25)]

    def test_guard(self):
        model = DiscreteJoint(
            (((1.0, 2.0), 0.4), ((0.0, 0.5), 0.3), ((-1.0, -1.0), 0.3))
        )
        with pytest.raises(TooLargeError):
            enumerate_exact(model, 20)

    def test_requires_discrete(self):
        with pytest.raises(InvalidModelError):
            enumerate_exact(CASE_II, 3)

    @pytest.mark.parametrize(
        "model",
        [
            FAIR_SIGN,
            DiscreteJoint((((1.0, 2.0), 0.3), ((-1.0, 0.5), 0.4), ((2.0, -1.5), 0.3))),
            DiscreteJoint((((0.5, 1.0), 0.75), ((1.0, -1.0), 0.25))),
        ],
    )
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_against_brute_force(self, model, n):
        law = enumerate_exact(model, n)
        brute = brute_force_law(model, n)
        want = sorted(brute.items())
        got = law.atoms
        assert len(got) == len(want)
        for (gv, gp), (wv, wp) in zip(got, want):
            assert gv == pytest.approx(wv, abs=1e-12)
            assert gp == pytest.approx(wp, abs=1e-12)

    def test_cdf(self):
        law = enumerate_exact(FAIR_SIGN, 2)
        assert law.cdf(-0.5) == 0.0
        assert law.cdf(0.0) == 0.5
        assert law.cdf(1.99) == 0.5
        assert law.cdf(2.0) == 1.0


class TestExactMomentsRecursion:
    def test_matches_enumeration_small(self):
        assert exact_moments_recursion(FAIR_SIGN, 2) == pytest.approx((1.0, 1.0))

    def test_variance_linear_growth(self):
        mean, var = exact_moments_recursion(FAIR_SIGN, 100)
        assert (mean, var) == pytest.approx((1.0, 99.0))

    def test_n1(self):
        model = SignedUnit(0.5, QRademacher(0.3))
        mean, var = exact_moments_recursion(model, 1)
        assert mean == pytest.approx(-0.4)
        assert var == pytest.approx(1 - 0.4**2)

    @pytest.mark.parametrize(
        "model",
        [
            FAIR_SIGN,
            DiscreteJoint((((1.0, 1.0), 0.75), ((1.0, -1.0), 0.25))),
            DiscreteJoint((((0.5, 1.0), 0.3), ((2.0, -1.0), 0.7))),
            SignedUnit(0.75, QConstant(1.0)),
        ],
    )
    @pytest.mark.parametrize("n", range(1, 11))
    def test_against_enumeration(self, model, n):
        if isinstance(model, SignedUnit):
            model = DiscreteJoint(
                (((model.q_law.value, 1.0), model.p_m), ((model.q_law.value, -1.0), 1 - model.p_m))
            )
        law = enumerate_exact(model, n)
        mean, var = exact_moments_recursion(model, n)
        assert abs(mean - law.mean()) < 1e-10
        assert abs(var - law.variance()) < 1e-10

    def test_rejects_non_unit_m(self):
        with pytest.raises(DomainError):
            exact_moments_recursion(POINT_MASS_12, 5)
        with pytest.raises(DomainError):
            exact_moments_recursion(CASE_II, 5)


class TestDistributionalIdentity:
    def test_batch_matches_enumeration_dkw(self):
        n_samples = 40_000
        bound = dkw_bound(n_samples, 0.01)
        model = DiscreteJoint((((1.0, 2.0), 0.3), ((-1.0, 0.5), 0.7)))
        batch = run_batch(model, list(range(1, 8)), n_samples, master_seed=818)
        for n in range(1, 8):
            law = enumerate_exact(model, n)
            values = np.sort(batch.to_reals(n))
            cum = np.cumsum(law.probs)
            ecdf = np.searchsorted(values, law.values + 1e-9) / n_samples
            assert np.abs(ecdf - cum).max() <= bound

    def test_sum_form_same_law(self):
        sf = run_sum_form(CASE_II, 15, 20_000, master_seed=41)
        rc = run_batch(CASE_II, [15], 20_000, master_seed=42)
        a = np.log(np.abs(sf.to_reals(15)))
        b = np.log(np.abs(rc.to_reals(15)))
        assert ks_two_sample(a, b) < 0.02

    def test_sum_form_tracks_w_pathwise(self):
        model = DiscreteJoint((((2.0, 2.0), 0.5), ((1.0, 0.5), 0.5)))
        batch = run_sum_form(model, 12, 200, 77, track_w=True)
        w = batch.w_log(12)
        s = np.log(batch.to_reals(12))
        assert np.all(w <= s + 1e-12)
        assert np.all(s <= w + math.log(12.0) + 1e-12)


class TestSeedDerivation:
    def test_distinct_keys(self):
        keys = {trajectory_seed(123, i) for i in range(10_000)}
        assert len(keys) == 10_000

    def test_master_seed_sensitivity(self):
        assert trajectory_seed(1, 0) != trajectory_seed(2, 0)
