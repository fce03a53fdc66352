import numpy as np
import pytest

from scatterbench.diffusion import (
    DiffusionSchedule,
    build_interleaved_mask,
    make_schedule,
    p_step,
    q_sample,
    sample,
)


class TestMakeSchedule:
    def test_single_step_linear(self):
        sched = make_schedule(1, "linear", (0.1, 0.1))
        assert np.allclose(sched.beta, [0.1])
        assert np.allclose(sched.alpha_bar, [0.9])

    def test_linear_default_endpoint_product(self):
        sched = make_schedule(1000, "linear", (1e-4, 0.02))
        # direct product evaluation oracle
        direct = np.prod(1.0 - np.linspace(1e-4, 0.02, 1000))
        assert sched.alpha_bar[-1] == pytest.approx(direct, rel=1e-12)
        assert sched.alpha_bar[-1] < 1e-4

    def test_cosine_profile(self):
        sched = make_schedule(1000, "cosine", (1e-6, 0.999))
        abar = sched.alpha_bar
        assert np.all(np.diff(abar) < 0)
        assert abar[0] > 0.999

    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            DiffusionSchedule(np.array([0.2, 0.1]))  # decreasing
        with pytest.raises(ValueError):
            DiffusionSchedule(np.array([0.0, 0.1]))
        with pytest.raises(ValueError):
            make_schedule(10, "linear", (0.5, 0.2))
        with pytest.raises(ValueError):
            make_schedule(10, "weird")

    def test_alpha_bar_zero_is_one(self):
        sched = make_schedule(10, "linear", (0.1, 0.2))
        assert sched.alpha_bar_at(0) == 1.0


class TestQSample:
    def test_zero_noise(self):
        sched = make_schedule(100, "linear", (1e-4, 0.02))
        x0 = np.ones((3, 4))
        xt = q_sample(x0, 50, np.zeros_like(x0), sched)
        assert np.allclose(xt, np.sqrt(sched.alpha_bar_at(50)) * x0, atol=1e-15)

    def test_small_beta_limit(self):
        sched = make_schedule(10, "linear", (1e-8, 1e-8))
        x0 = np.full((4,), 2.0)
        eps = np.ones(4)
        xt = q_sample(x0, 1, eps, sched)
        assert np.abs(xt - x0).max() < np.sqrt(1e-8) * 1.01

    def test_monte_carlo_moments(self):
        sched = make_schedule(1000, "linear", (1e-4, 0.02))
        rng = np.random.default_rng(0)
        x0 = np.full(100_000, 1.3)
        t = 400
        eps = rng.standard_normal(100_000)
        xt = q_sample(x0, t, eps, sched)
        abar = sched.alpha_bar_at(t)
        assert xt.mean() == pytest.approx(np.sqrt(abar) * 1.3, abs=0.01)
        assert xt.var() == pytest.approx(1 - abar, rel=0.01)

    def test_shape_and_range_checks(self):
        sched = make_schedule(10, "linear", (0.01, 0.02))
        with pytest.raises(ValueError):
            q_sample(np.zeros(3), 1, np.zeros(4), sched)
        with pytest.raises(ValueError):
            q_sample(np.zeros(3), 0, np.zeros(3), sched)
        with pytest.raises(ValueError):
            q_sample(np.zeros(3), 11, np.zeros(3), sched)


class TestPStep:
    def test_zero_eps_hat(self):
        sched = make_schedule(100, "linear", (1e-4, 0.02))
        x = np.ones((2, 5))
        out = p_step(x, np.zeros_like(x), 30, sched)
        assert np.allclose(out, x / np.sqrt(sched.alpha[29]), atol=1e-15)

    def test_x0_reconstruction_identity_all_t(self):
        sched = make_schedule(1000, "linear", (1e-4, 0.02))
        rng = np.random.default_rng(1)
        x0 = rng.standard_normal((4, 8))
        eps = rng.standard_normal((4, 8))
        for t in range(1, 1001):
            xt = q_sample(x0, t, eps, sched)
            abar = sched.alpha_bar_at(t)
            rec = (xt - np.sqrt(1 - abar) * eps) / np.sqrt(abar)
            assert np.abs(rec - x0).max() < 1e-10, t

    def test_affine_property(self):
        sched = make_schedule(50, "linear", (1e-3, 0.02))
        rng = np.random.default_rng(2)
        x, y = rng.standard_normal((2, 6))
        e1, e2 = rng.standard_normal((2, 6))
        a, b = 1.7, -0.4
        left = p_step(a * x + b * y, a * e1 + b * e2, 20, sched)
        right = a * p_step(x, e1, 20, sched) + b * p_step(y, e2, 20, sched)
        assert np.abs(left - right).max() < 1e-12

    def test_chained_forward_matches_marginal_moments(self):
        # composing single-step forward kernels equals q_sample marginally
        sched = make_schedule(1000, "linear", (1e-4, 0.02))
        rng = np.random.default_rng(3)
        n = 200_000
        x0 = np.full(n, 0.7)
        for t in (1, 500, 1000):
            x = x0.copy()
            # chain: x_s = sqrt(alpha_s) x_{s-1} + sqrt(beta_s) eps_s
            for s in range(1, t + 1):
                x = np.sqrt(sched.alpha[s - 1]) * x + np.sqrt(
                    sched.beta[s - 1]
                ) * rng.standard_normal(n)
            abar = sched.alpha_bar_at(t)
            assert x.mean() == pytest.approx(np.sqrt(abar) * 0.7, abs=0.02)
            assert x.var() == pytest.approx(1 - abar, rel=0.02)

    def test_posterior_noise_flag(self):
        sched = make_schedule(100, "linear", (1e-4, 0.02))
        x = np.ones(8)
        eps_hat = np.zeros(8)
        det = p_step(x, eps_hat, 50, sched)
        rng = np.random.default_rng(5)
        noisy = p_step(x, eps_hat, 50, sched, posterior_noise=True, rng=rng)
        assert not np.allclose(det, noisy)
        # t=1 posterior variance is zero
        same = p_step(x, eps_hat, 1, sched, posterior_noise=True, rng=rng)
        assert np.array_equal(same, p_step(x, eps_hat, 1, sched))
        with pytest.raises(ValueError):
            p_step(x, eps_hat, 50, sched, posterior_noise=True)

    def test_full_reverse_chain_runs(self):
        sched = make_schedule(20, "linear", (1e-3, 0.05))
        rng = np.random.default_rng(6)
        out = sample(lambda x, t: np.zeros_like(x), (3, 4), sched, rng)
        assert out.shape == (3, 4)
        assert np.all(np.isfinite(out))


class TestInterleavedMask:
    def test_minimal(self):
        layout, mask = build_interleaved_mask(1)
        assert layout == [("r", 0), ("h", 0)]
        assert np.array_equal(mask, [[True, False], [True, True]])

    def test_three_levels(self):
        layout, mask = build_interleaved_mask(3)
        assert len(layout) == 6
        assert layout[5] == ("h", 2)
        assert mask[5].all()  # h_2 attends to everything before it
        # h_0 (index 1) cannot attend to r_1 (index 2)
        assert not mask[1, 2]
        # h_l attends to r_0..r_l and h_0..h_{l-1} plus itself
        assert mask[3, 2] and mask[3, 1] and mask[3, 0] and mask[3, 3]
        assert not mask[3, 4]

    def test_true_count_formula(self):
        for levels in range(1, 9):
            layout, mask = build_interleaved_mask(levels)
            assert mask.sum() == levels * (2 * levels + 1)
            positions = list(range(2 * levels))
            assert [layout.index(tok) for tok in layout] == positions

    def test_lower_triangular(self):
        _, mask = build_interleaved_mask(4)
        assert np.array_equal(mask, np.tril(np.ones_like(mask)))
