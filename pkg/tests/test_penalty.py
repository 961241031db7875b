import math

import numpy as np
import pytest

from mixsel.basis import FOURIER, HAAR, HISTOGRAM, enumerate_models, make_model
from mixsel.blocks import BlockedSample
from mixsel.penalty import (
    WeightLaw,
    c_tilde_w,
    ideal_penalty,
    iid_law,
    multinomial_law,
    penalty_closed_form,
    penalty_monte_carlo,
)
from mixsel.processes import TrueDensity


def _mc_c_tilde(draws):
    """Inverse empirical variance of ``W_1 - Wbar``."""
    return 1.0 / np.var(draws[:, 0] - draws.mean(axis=1), ddof=1)


class TestCTilde:
    def test_multinomial_p2(self):
        assert c_tilde_w(multinomial_law(2)) == 2.0
        draws = np.random.default_rng(1).multinomial(2, [0.5, 0.5], size=10**6)
        assert _mc_c_tilde(draws) == pytest.approx(2.0, rel=0.01)

    def test_multinomial_p10(self):
        assert c_tilde_w(multinomial_law(10)) == pytest.approx(10 / 9)
        draws = np.random.default_rng(2).multinomial(10, [0.1] * 10, size=10**6)
        assert _mc_c_tilde(draws) == pytest.approx(10 / 9, rel=0.01)

    def test_iid_poisson_p10(self):
        assert c_tilde_w(iid_law(10, "poisson")) == pytest.approx(10 / 9)
        draws = np.random.default_rng(3).poisson(1.0, size=(10**6, 10))
        assert _mc_c_tilde(draws) == pytest.approx(10 / 9, rel=0.01)

    @pytest.mark.parametrize("dist,params", [("exponential", {}), ("gamma", {"shape": 4.0}), ("bernoulli", {"prob": 0.5})])
    def test_iid_laws_by_sampling(self, dist, params):
        law = iid_law(6, dist, **params)
        draws = law.sample(np.random.default_rng(4), 400_000)
        assert np.all(draws >= 0)
        assert _mc_c_tilde(draws) == pytest.approx(c_tilde_w(law), rel=0.02)

    def test_multinomial_sampler(self):
        draws = multinomial_law(5).sample(np.random.default_rng(5), 1000)
        assert draws.shape == (1000, 5)
        np.testing.assert_array_equal(draws.sum(axis=1), 5)

    def test_degenerate(self):
        with pytest.raises(ValueError, match="degenerate"):
            c_tilde_w(iid_law(4, "constant"))

    def test_p_below_two(self):
        with pytest.raises(ValueError):
            WeightLaw("multinomial", 1)


class TestClosedForm:
    def test_constant_means(self, rng):
        sample = BlockedSample.from_array(rng.random(40), 2)
        rec = penalty_closed_form(sample, make_model(HISTOGRAM, 1))
        assert rec.p_w == 0.0 and rec.pen == 0.0

    def test_hand_instance(self):
        sample = BlockedSample.from_blocks([0.2, 0.8])
        model = make_model(HISTOGRAM, 2)
        for C in (0.5, 1.0, 3.0):
            rec = penalty_closed_form(sample, model, C=C)
            assert rec.p_w == pytest.approx(1.0, rel=1e-15)
            assert rec.pen == pytest.approx(C, rel=1e-15)
        assert penalty_closed_form(sample, model).pen == pytest.approx(2.0, rel=1e-15)

    def test_scale_law(self, rng):
        sample = BlockedSample.from_blocks(rng.random((12, 3)))
        model = make_model(FOURIER, 4)
        base = penalty_closed_form(sample, model, C=1.0).pen
        assert penalty_closed_form(sample, model, C=2.5).pen == 2.5 * base

    def test_weight_law_invariance(self, rng):
        sample = BlockedSample.from_blocks(rng.random((12, 3)))
        model = make_model(HAAR, 3)
        laws = [multinomial_law(12), iid_law(12, "poisson"), iid_law(12, "exponential")]
        recs = [penalty_closed_form(sample, model, C=1.0, law=law) for law in laws]
        assert len({r.p_w for r in recs}) == 1
        for law, rec in zip(laws, recs):
            assert rec.pen == pytest.approx(2 * rec.p_w / c_tilde_w(law))

    @pytest.mark.parametrize("kind", [FOURIER, HAAR])
    def test_monotone_along_nesting(self, kind, rng):
        sample = BlockedSample.from_blocks(rng.random((20, 2)))
        pw = [penalty_closed_form(sample, mod).p_w for mod in enumerate_models(kind, 128, cap=30).models]
        assert np.all(np.diff(pw) >= 0)

    def test_law_size_mismatch(self, rng):
        sample = BlockedSample.from_blocks(rng.random(6))
        with pytest.raises(ValueError):
            penalty_closed_form(sample, make_model(HISTOGRAM, 2), law=multinomial_law(7))


class TestMonteCarlo:
    def test_hand_instance(self):
        sample = BlockedSample.from_blocks([0.2, 0.8])
        rec = penalty_monte_carlo(sample, make_model(HISTOGRAM, 2), multinomial_law(2), C=2.0, B=20000, seed=0)
        assert abs(rec.pen - 2.0) <= 4 * rec.se

    @pytest.mark.parametrize("kind", [HISTOGRAM, FOURIER, HAAR])
    def test_matches_closed_form(self, kind, rng):
        sample = BlockedSample.from_blocks(rng.beta(2, 2, size=(9, 2)))
        model = make_model(kind, 3)
        law = iid_law(9, "exponential")
        closed = penalty_closed_form(sample, model, C=1.0, law=law)
        mc = penalty_monte_carlo(sample, model, law, C=1.0, B=20000, seed=11)
        assert abs(mc.pen - closed.pen) <= 4 * mc.se

    def test_constant_data(self):
        sample = BlockedSample.from_blocks([0.3] * 5)
        rec = penalty_monte_carlo(sample, make_model(HAAR, 2), multinomial_law(5), B=500, seed=1)
        assert rec.pen == 0.0 and rec.se == 0.0

    def test_deterministic(self, rng):
        sample = BlockedSample.from_blocks(rng.random(10))
        model = make_model(FOURIER, 2)
        a = penalty_monte_carlo(sample, model, multinomial_law(10), B=300, seed=9)
        b = penalty_monte_carlo(sample, model, multinomial_law(10), B=300, seed=9)
        assert a.pen == b.pen

    def test_degenerate_rejected(self, rng):
        sample = BlockedSample.from_blocks(rng.random(4))
        with pytest.raises(ValueError):
            penalty_monte_carlo(sample, make_model(HISTOGRAM, 2), iid_law(4, "constant"), B=10)

    def test_law_size_mismatch(self, rng):
        sample = BlockedSample.from_blocks(rng.random(4))
        with pytest.raises(ValueError):
            penalty_monte_carlo(sample, make_model(HISTOGRAM, 2), multinomial_law(5), B=10)


class TestIdealPenalty:
    def test_zero_when_coefficients_exact(self):
        sample = BlockedSample.from_blocks([0.1, 0.6])
        assert ideal_penalty(sample, make_model(HISTOGRAM, 2), TrueDensity.uniform()) == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        sample = BlockedSample.from_blocks([0.1, 0.2])
        assert ideal_penalty(sample, make_model(HISTOGRAM, 2), TrueDensity.uniform()) == pytest.approx(2.0)

    def test_matches_expansion(self, rng):
        target = TrueDensity.linear()
        sample = BlockedSample.from_blocks(target.ppf(rng.random(30)))
        model = make_model(FOURIER, 3)
        a = sample.mean_matrix(model).mean(axis=0)
        c = target.coefficients(model)
        assert ideal_penalty(sample, model, target) == pytest.approx(2 * a @ a - 2 * a @ c)
        assert math.isfinite(ideal_penalty(sample, model, target))
