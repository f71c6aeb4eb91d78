import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from addfunc.phi_models import (CLASS_A, CLASS_B, DistributionModel, PhiDomainError,
                                alpha_factor, cos_power, eval_phi, exp_power, get_spec,
                                holder_check, log_phi, power_alpha, shannon_phi, theta_bounds,
                                theta_of, verify_divergence_speed)

BUILTINS = [power_alpha(0.3), power_alpha(0.5), power_alpha(0.7), cos_power(1.0, 0.5),
            exp_power(1.0, 0.5), cos_power(3.0, 0.3), shannon_phi(), log_phi()]


def _fd(f, p, m, h):
    # central finite difference of order m from np.diff-style stencil
    offsets = np.arange(-m, m + 1, 2) * h / 2
    coeffs = np.array([(-1) ** (m - j) * math.comb(m, j) for j in range(m + 1)], dtype=float)
    return sum(c * f(p + o) for c, o in zip(coeffs, offsets)) / h ** m


class TestEvalPhi:
    def test_power_values(self):
        s = power_alpha(0.5)
        assert eval_phi(s, 0.25, 0) == pytest.approx(0.5, abs=1e-15)
        assert eval_phi(s, 0.25, 1) == pytest.approx(1.0, abs=1e-14)
        assert eval_phi(s, 0.25, 4) == pytest.approx(-120.0, rel=1e-13)

    def test_zero_limit(self):
        assert eval_phi(power_alpha(0.3), 0.0) == 0.0
        assert eval_phi(shannon_phi(), 0.0) == 0.0
        np.testing.assert_array_equal(eval_phi(power_alpha(0.5), np.array([0.0, 1.0])), [0.0, 1.0])

    def test_domain_errors(self):
        s = power_alpha(0.5)
        with pytest.raises(PhiDomainError):
            eval_phi(s, 0.0, 1)
        with pytest.raises(PhiDomainError):
            eval_phi(log_phi(), 0.0, 0)
        with pytest.raises(PhiDomainError):
            eval_phi(s, -0.1, 0)
        for bad in (5, -1, 1.5):
            with pytest.raises(ValueError):
                eval_phi(s, 0.5, bad)

    @pytest.mark.parametrize("spec", BUILTINS, ids=lambda s: s.name)
    def test_derivatives_match_finite_differences(self, spec):
        grid = np.logspace(-3, 0, 25)
        for m in range(1, 5):
            f = lambda p, mm=m - 1: eval_phi(spec, p, mm)
            # difference the (m-1)th derivative once so the stencil stays well conditioned
            h = 1e-6 * grid
            lo = np.maximum(grid - h, 0.5 * grid)
            fd = (f(grid + h) - f(lo)) / (grid + h - lo)
            exact = eval_phi(spec, grid, m)
            np.testing.assert_array_less(np.abs(exact - fd) / (1 + np.abs(exact)), 1e-5)

    def test_fourth_derivative_from_values(self):
        s = cos_power(1.0, 0.5)
        p, h = 0.5, 2e-3
        fd = _fd(lambda x: eval_phi(s, x, 0), p, 4, h)
        assert fd == pytest.approx(eval_phi(s, p, 4), rel=1e-3)


class TestPhiSpec:
    def test_class_b_validation(self):
        with pytest.raises(ValueError):
            power_alpha(1.2)
        with pytest.raises(ValueError):
            power_alpha(0.5).with_certificate(W=-1.0)

    def test_catalog(self):
        assert get_spec("power:0.5").alpha == 0.5
        assert get_spec("cos_power:1.0:0.5").class_tag == CLASS_B
        assert get_spec("log").class_tag == CLASS_A
        with pytest.raises(KeyError):
            get_spec("nope")
        with pytest.raises(ValueError):
            get_spec("power")

    def test_alpha_factor(self):
        assert alpha_factor(0.5, 0) == 1.0
        assert alpha_factor(0.5, 3) == pytest.approx(0.5 * 1.5 * 2.5)


class TestThetaOf:
    def test_examples(self):
        assert theta_of(power_alpha(0.5), DistributionModel(np.full(4, 0.25))) == pytest.approx(2.0)
        assert theta_of(shannon_phi(), DistributionModel(np.full(8, 0.125))) == pytest.approx(math.log(8))
        assert theta_of(power_alpha(0.3), DistributionModel([1, 0, 0, 0, 0])) == 1.0

    def test_log_phi_blows_up_on_zero_atom(self):
        with pytest.raises(PhiDomainError):
            theta_of(log_phi(), DistributionModel([1.0, 0.0]))

    def test_distribution_validation(self):
        with pytest.raises(ValueError):
            DistributionModel([0.5, 0.6])
        with pytest.raises(ValueError):
            DistributionModel([])

    @given(st.lists(st.floats(0.0, 10.0), min_size=2, max_size=12).filter(lambda w: sum(w) > 1e-3),
           st.randoms())
    @settings(max_examples=60, deadline=None)
    def test_permutation_and_zero_atoms(self, w, rnd):
        probs = np.array(w) / np.sum(w)
        spec = power_alpha(0.4)
        perm = probs.copy()
        rnd.shuffle(perm)
        a = theta_of(spec, probs)
        assert theta_of(spec, perm) == pytest.approx(a, rel=1e-12, abs=1e-12)
        assert theta_of(spec, np.append(probs, 0.0)) == pytest.approx(a, rel=1e-12, abs=1e-12)


class TestThetaBounds:
    def test_power(self):
        assert theta_bounds(power_alpha(0.5), 9) == pytest.approx((1.0, 3.0))

    def test_power_inf_grid_oracle(self):
        # exhaustive grid on the k=3 simplex with step 1e-3
        s = power_alpha(0.5)
        t = np.arange(0, 1001) / 1000
        a, b = np.meshgrid(t, t)
        c = 1 - a - b
        ok = c >= -1e-12
        vals = (np.sqrt(a) + np.sqrt(b) + np.sqrt(np.clip(c, 0, None)))[ok]
        assert vals.min() == pytest.approx(theta_bounds(s, 3)[0], abs=1e-12)
        assert vals.max() == pytest.approx(theta_bounds(s, 3)[1], abs=1e-3)

    def test_shannon_and_single_point(self):
        assert theta_bounds(shannon_phi(), 4) == pytest.approx((0.0, math.log(4)))
        for s in BUILTINS[:-1]:
            v = eval_phi(s, 1.0)
            assert theta_bounds(s, 1) == (v, v)

    @pytest.mark.parametrize("spec", [cos_power(1.0, 0.5), exp_power(1.0, 0.5), cos_power(3.0, 0.3)],
                             ids=lambda s: s.name)
    def test_numeric_fallback_contains_random_distributions(self, spec):
        rng = np.random.default_rng(3)
        for k in (2, 5, 20):
            lo, hi = theta_bounds(spec, k)
            P = rng.dirichlet(np.full(k, 0.3), size=500)
            th = np.array([theta_of(spec, p) for p in P])
            assert th.min() >= lo - 1e-9 and th.max() <= hi + 1e-9

    def test_numeric_fallback_matches_closed_form(self):
        # the fallback path, forced on a power spec without its params tag
        base = power_alpha(0.5)
        anon = base.with_certificate(params=())
        for k in (2, 7, 50):
            np.testing.assert_allclose(theta_bounds(anon, k), theta_bounds(base, k), rtol=1e-9)


class TestDivergenceSpeed:
    def test_power_equality(self):
        rep = verify_divergence_speed(power_alpha(0.5))
        np.testing.assert_allclose(rep.upper_slack, 0.0, atol=1e-12)
        np.testing.assert_allclose(rep.lower_slack, 0.0, atol=1e-12)
        assert rep.ok()

    def test_shannon_fails_power_certificate(self):
        s = shannon_phi().with_certificate(alpha=0.5, W=0.5, c=(0,) * 4, c_prime=(0,) * 4)
        rep = verify_divergence_speed(s)
        assert rep.max_lower_violation[0] < 0

    @pytest.mark.parametrize("spec", [cos_power(1.0, 0.5), exp_power(1.0, 0.5), shannon_phi()],
                             ids=lambda s: s.name)
    def test_fitted_offsets(self, spec):
        rep = verify_divergence_speed(spec)
        assert rep.upper_slack.min() >= -1e-9
        assert rep.lower_slack.min() >= -1e-9
        assert set(rep.as_dict()) == {"m=1", "m=2", "m=3", "m=4"}

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            verify_divergence_speed(power_alpha(0.5), grid=[0.0, 0.5])


class TestHolder:
    def test_equal_pairs(self):
        p = np.linspace(0, 1, 11)
        assert holder_check(power_alpha(0.5), np.column_stack([p, p]))

    def test_random_pairs(self):
        rng = np.random.default_rng(0)
        assert holder_check(power_alpha(0.3), rng.random((10_000, 2)))
        assert holder_check(cos_power(1.0, 0.5), rng.random((10_000, 2)))

    def test_understated_W_is_caught(self):
        bad = power_alpha(0.5).with_certificate(W=0.1)
        p = np.logspace(-6, 0, 50)
        assert not holder_check(bad, np.column_stack([p, np.zeros_like(p)]))


class TestSimplexSums:
    @pytest.mark.parametrize("k", [3, 5, 10])
    def test_sum_of_powers_at_most_k_to_one_minus_alpha(self, k):
        rng = np.random.default_rng(k)
        alpha = 0.6
        P = rng.dirichlet(np.ones(k), size=1000)
        s = np.sum(P ** alpha, axis=1)
        bound = k ** (1 - alpha)
        assert np.all(s <= bound + 1e-12)
        assert np.sum(np.full(k, 1 / k) ** alpha) == pytest.approx(bound)
        near = rng.dirichlet(np.full(k, 1e4), size=50)
        assert np.sum(near ** alpha, axis=1).max() > bound * (1 - 1e-3)

    @pytest.mark.parametrize("k,alpha", [(3, -0.5), (4, -1.0), (5, -0.3)])
    def test_negative_power_with_floor(self, k, alpha):
        # maximise sum p^alpha over p_i >= d; closed form (1-(k-1)d)^alpha + (k-1) d^alpha
        d = 0.5 / k
        expected = (1 - (k - 1) * d) ** alpha + (k - 1) * d ** alpha
        best = -np.inf
        cons = {"type": "eq", "fun": lambda p: p.sum() - 1}
        rng = np.random.default_rng(1)
        for _ in range(20):
            x0 = rng.dirichlet(np.ones(k)) * (1 - k * d) + d
            res = optimize.minimize(lambda p: -np.sum(p ** alpha), x0, bounds=[(d, 1)] * k,
                                    constraints=[cons], method="SLSQP")
            best = max(best, -res.fun)
        # vertices of the constrained simplex
        for i in range(k):
            v = np.full(k, d)
            v[i] = 1 - (k - 1) * d
            best = max(best, np.sum(v ** alpha))
        assert best == pytest.approx(expected, rel=1e-6)
        grid = np.array([p for p in itertools.product(np.linspace(d, 1, 41), repeat=k - 1)
                         if 1 - sum(p) >= d - 1e-12]) if k <= 4 else None
        if grid is not None:
            last = 1 - grid.sum(axis=1)
            vals = np.sum(grid ** alpha, axis=1) + last ** alpha
            assert vals.max() <= expected * (1 + 1e-9)
