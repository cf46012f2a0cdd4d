import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oodot import (
    LabelMarginal,
    PredictionSet,
    ac_mc,
    apportion,
    cot,
    cott,
    cott_fit,
    label_marginal,
    one_hot_w_inf,
    pseudo_marginal,
    true_error,
)
from oodot.shiftlab import (
    SWEEP_HEADER,
    SweepConfig,
    dirichlet_shift,
    resample_to_marginal,
    skewed_marginal,
    sweep,
    sweep_csv,
    synth_classifier,
    tightness_family,
)

from conftest import random_marginal, random_probs


class TestDirichlet:
    def test_mean_is_base(self):
        base = LabelMarginal([0.5, 0.5])
        draws = np.array([dirichlet_shift(base, 50, s).mass for s in range(10_000)])
        np.testing.assert_allclose(draws.mean(axis=0), [0.5, 0.5], atol=0.01)

    def test_variance_formula(self):
        base = LabelMarginal([0.2, 0.3, 0.5])
        alpha = 50.0
        a = alpha * base.mass
        expected = a * (alpha - a) / (alpha**2 * (alpha + 1))
        draws = np.array([dirichlet_shift(base, alpha, s).mass for s in range(10_000)])
        np.testing.assert_allclose(draws.var(axis=0), expected, rtol=0.1)

    def test_huge_concentration(self):
        base = LabelMarginal([0.2, 0.3, 0.5])
        a0 = 1e9
        sd = np.sqrt(base.mass * (1 - base.mass) / (a0 + 1))
        assert sd.max() < 1e-4
        np.testing.assert_allclose(dirichlet_shift(base, a0, 3).mass, base.mass, atol=1e-3)

    def test_zero_mass_stays_zero(self):
        m = dirichlet_shift(LabelMarginal([0.5, 0.0, 0.5]), 5, 1)
        assert m.mass[1] == 0.0
        assert m.mass.sum() == pytest.approx(1.0, abs=1e-12)

    def test_reproducible_and_valid(self):
        base = LabelMarginal.uniform(6)
        a, b = dirichlet_shift(base, 50, 42), dirichlet_shift(base, 50, 42)
        assert np.array_equal(a.mass, b.mass)
        assert a.mass.min() >= 0
        with pytest.raises(ValueError):
            dirichlet_shift(base, 0, 1)


class TestResample:
    def make(self, rng, n=60, k=3):
        return PredictionSet(random_probs(rng, n, k), labels=np.arange(n) % k)

    def test_identity_marginal(self, rng):
        p = self.make(rng)
        out = resample_to_marginal(p, label_marginal(p), p.n, 5)
        np.testing.assert_array_equal(
            np.bincount(out.labels, minlength=3), apportion(label_marginal(p), p.n)
        )

    def test_point_mass(self, rng):
        out = resample_to_marginal(self.make(rng), LabelMarginal([1, 0, 0]), 25, 5)
        assert np.all(out.labels == 0)

    def test_counts_exact(self, rng):
        target = LabelMarginal([0.15, 0.35, 0.5])
        out = resample_to_marginal(self.make(rng), target, 77, 9)
        np.testing.assert_array_equal(label_marginal(out).mass, apportion(target, 77) / 77)

    def test_rows_come_from_matching_class(self, rng):
        p = self.make(rng)
        out = resample_to_marginal(p, LabelMarginal([0.2, 0.3, 0.5]), 40, 2)
        rows = {tuple(r): y for r, y in zip(p.scores.tolist(), p.labels.tolist())}
        assert all(rows[tuple(r)] == y for r, y in zip(out.scores.tolist(), out.labels.tolist()))

    def test_errors(self, rng):
        with pytest.raises(ValueError):
            resample_to_marginal(PredictionSet([[0.5, 0.5]]), LabelMarginal([1, 0]), 3, 0)
        p = PredictionSet([[0.5, 0.5]], labels=[0])
        with pytest.raises(ValueError):
            resample_to_marginal(p, LabelMarginal([0.5, 0.5]), 4, 0)


class TestTightness:
    def test_equal_marginals_are_one_hot(self):
        m = LabelMarginal([0.2, 0.3, 0.5])
        p = tightness_family(m, m, 0.1, 50)
        assert set(np.unique(p.scores)) == {0.0, 1.0}
        assert cot(p, m).value == 0.0

    def test_two_class_example(self):
        pseudo, target = LabelMarginal([0.75, 0.25]), LabelMarginal([0.5, 0.5])
        p = tightness_family(pseudo, target, 0.1, 8)
        np.testing.assert_allclose(p.scores[:6].max(axis=1), 1.0)
        np.testing.assert_allclose(p.scores[6:], [[0.6, 0.4], [0.6, 0.4]])
        value = cot(p, target).value
        assert 0.125 - 1e-12 <= value <= 0.15 + 1e-12
        # explicit coupling: the two-hot rows go to their 0.5 - delta class
        explicit = np.abs(p.scores - np.eye(2)[p.labels]).max(axis=1).mean()
        assert explicit == pytest.approx(0.15, abs=1e-12)

    def test_small_delta_approaches_half_shift(self):
        pseudo, target = LabelMarginal([0.75, 0.25]), LabelMarginal([0.5, 0.5])
        p = tightness_family(pseudo, target, 1e-4, 1000)
        s = one_hot_w_inf(pseudo, target)
        assert abs(cot(p, target).value - 0.5 * s) <= 1e-3

    def test_marginals_realized(self, rng):
        for _ in range(20):
            k = int(rng.integers(2, 7))
            pseudo, target = random_marginal(rng, k), random_marginal(rng, k)
            p = tightness_family(pseudo, target, 0.05, 137)
            np.testing.assert_array_equal(pseudo_marginal(p).mass, apportion(pseudo, 137) / 137)
            np.testing.assert_array_equal(label_marginal(p).mass, apportion(target, 137) / 137)

    @given(
        st.integers(2, 6).flatmap(
            lambda k: st.tuples(
                st.lists(st.integers(0, 30), min_size=k, max_size=k).filter(lambda v: sum(v) > 0),
                st.lists(st.integers(0, 30), min_size=k, max_size=k).filter(lambda v: sum(v) > 0),
            )
        ),
        st.sampled_from([0.5, 0.1, 0.01, 1e-4]),
    )
    @settings(max_examples=100, deadline=None)
    def test_bracket_on_lattice(self, pair, delta):
        n = 120
        a, b = (LabelMarginal(apportion(LabelMarginal(np.array(v) / sum(v)), n) / n) for v in pair)
        s = one_hot_w_inf(a, b)
        value = cot(tightness_family(a, b, delta, n), b).value
        assert 0.5 * s - 1e-12 <= value <= (0.5 + delta) * s + 1e-12

    def test_errors(self):
        with pytest.raises(ValueError):
            tightness_family(LabelMarginal([1, 0]), LabelMarginal([0.2, 0.3, 0.5]), 0.1, 5)
        with pytest.raises(ValueError):
            tightness_family(LabelMarginal([1, 0]), LabelMarginal([0, 1]), 0.0, 5)


class TestSynthClassifier:
    def test_perfect(self):
        scen = synth_classifier(4, 50, 0.0, 1.0, LabelMarginal.uniform(4), 0)
        assert scen.true_error == 0.0
        assert set(np.unique(scen.predictions.scores)) == {0.0, 1.0}
        th = cott_fit(scen.predictions)
        assert cott(scen.predictions, th, label_marginal(scen.predictions)).value == 0.0

    def test_exact_error_and_miscalibration(self):
        scen = synth_classifier(5, 1000, 0.3, 0.9, LabelMarginal.uniform(5), 11)
        assert scen.true_error == 0.3
        assert ac_mc(scen.predictions).value == pytest.approx(0.1, abs=1e-12)
        assert scen.true_error == true_error(scen.predictions)
        assert scen.pseudo_shift == one_hot_w_inf(
            pseudo_marginal(scen.predictions), label_marginal(scen.predictions)
        )

    def test_floor_count(self):
        assert synth_classifier(3, 100, 0.29, 0.8, LabelMarginal.uniform(3), 1).true_error == 0.29
        assert synth_classifier(3, 7, 0.5, 0.8, LabelMarginal.uniform(3), 1).true_error == 3 / 7

    def test_shift_below_error(self, rng):
        for seed in range(300):
            k = int(rng.integers(2, 8))
            scen = synth_classifier(
                k, int(rng.integers(1, 300)), float(rng.random()), 0.99, random_marginal(rng, k), seed
            )
            assert scen.pseudo_shift <= scen.true_error + 1e-12

    def test_reproducible(self):
        m = LabelMarginal([0.1, 0.2, 0.7])
        a, b = (synth_classifier(3, 100, 0.2, 0.6, m, 5) for _ in range(2))
        assert np.array_equal(a.predictions.scores, b.predictions.scores)
        assert np.array_equal(a.predictions.labels, b.predictions.labels)

    def test_errors(self):
        with pytest.raises(ValueError):
            synth_classifier(3, 10, 0.1, 0.3, LabelMarginal.uniform(3), 0)
        with pytest.raises(ValueError):
            synth_classifier(3, 10, 1.1, 0.9, LabelMarginal.uniform(3), 0)


class TestSweep:
    def test_single_cell_recomputes(self):
        rows = sweep(SweepConfig(errors=[0.2], confidences=[0.7], shifts=[0.3], k=4, n=200), 5)
        assert len(rows) == 1
        row = rows[0]
        m = skewed_marginal(4, 0.3)
        scen = synth_classifier(4, 200, 0.2, 0.7, m, row["seed"])
        p = scen.predictions
        assert row["true_error"] == scen.true_error
        assert row["pseudo_shift"] == scen.pseudo_shift
        assert row["abs_err_ac"] == abs(scen.true_error - ac_mc(p).value)
        assert row["abs_err_cot"] == abs(scen.true_error - cot(p, m).value)

    def test_calibrated_grid(self):
        errors = [0.1, 0.2, 0.4]
        rows = sweep(SweepConfig(errors=errors, confidences=[0.8], k=5, n=500), 0)
        cal = [r for r in rows if abs(r["true_error"] - 0.2) < 1e-12]
        assert cal and cal[0]["abs_err_ac"] == pytest.approx(0.0, abs=1e-12)

    def test_csv(self):
        rows = sweep(SweepConfig(errors=[0.1, 0.3], confidences=[0.9], shifts=[0.0, 0.5], k=3, n=100), 2)
        text = sweep_csv(rows)
        parsed = list(csv.DictReader(io.StringIO(text)))
        assert tuple(parsed[0].keys()) == SWEEP_HEADER
        assert len(parsed) == 4
        assert [float(r["abs_err_cot"]) for r in parsed] == [r["abs_err_cot"] for r in rows]
        assert text == sweep_csv(sweep(
            SweepConfig(errors=[0.1, 0.3], confidences=[0.9], shifts=[0.0, 0.5], k=3, n=100), 2
        ))

    def test_correlation_gap(self):
        config = SweepConfig(
            errors=np.linspace(0.05, 0.5, 6), confidences=[0.95], shifts=np.linspace(0, 0.9, 6), n=400
        )
        rows = sweep(config, 0)
        shift = np.array([r["pseudo_shift"] for r in rows])
        ac = np.corrcoef(shift, [r["abs_err_ac"] for r in rows])[0, 1]
        co = np.corrcoef(shift, [r["abs_err_cot"] for r in rows])[0, 1]
        assert ac > co
