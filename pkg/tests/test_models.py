import numpy as np
import pytest

from beba import (
    BalancedEnvironmentError,
    FixedEnvironment,
    Graph,
    beba_step,
    beba_update,
    beba_weight,
    bof_step,
    degroot_step,
    fixed_env_fixed_points,
    fixed_env_step,
    fixed_env_update,
    generate_er,
)


def two_node():
    return Graph(2, [(0, 1)])


def star5():
    return Graph(5, [(0, leaf) for leaf in (1, 2, 3, 4)])


def star_opinions(center, leaves):
    return np.array([center] + [leaves] * 4)


def random_case(seed, n_lo=3, n_hi=12):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_lo, n_hi + 1))
    g = generate_er(n, 0.6, int(rng.integers(1 << 31)))
    y = rng.uniform(-1.0, 1.0, n)
    return g, y, rng


class TestDeGroot:
    def test_two_node_averages(self):
        assert degroot_step(two_node(), [0.0, 1.0]).tolist() == [0.5, 0.5]

    def test_constant_vector_is_fixed_point(self):
        for seed in range(5):
            g, _, rng = random_case(seed)
            c = float(rng.uniform(0, 1))
            out = degroot_step(g, np.full(g.n, c))
            assert np.allclose(out, c, atol=0)

    def test_star_center(self):
        out = degroot_step(star5(), star_opinions(0.0, 0.75))
        assert out[0] == pytest.approx(0.6, abs=1e-15)

    def test_respects_edge_and_self_weights(self):
        g = Graph(2, [(0, 1, 3.0)], self_weights=[1.0, 1.0])
        out = degroot_step(g, [0.0, 1.0])
        assert out[0] == pytest.approx(0.75)  # (0 + 3*1) / (1 + 3)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            degroot_step(two_node(), [0.1, 0.2, 0.3])


class TestBof:
    def test_extreme_center_never_moves(self):
        out = bof_step(star5(), star_opinions(0.0, 0.75), 1.0)
        assert out[0] == 0.0

    def test_zero_bias_recovers_degroot(self):
        x = star_opinions(0.0, 0.75)
        out = bof_step(star5(), x, 0.0)
        assert out[0] == pytest.approx(0.6, abs=1e-12)
        for seed in range(5):
            g, y, _ = random_case(seed)
            x = (y + 1.0) / 2.0
            assert np.allclose(bof_step(g, x, 0.0), degroot_step(g, x), atol=1e-12)

    def test_all_ones_fixed_for_any_bias(self):
        for bias in (0.0, 0.5, 1.0, 3.0):
            out = bof_step(star5(), np.ones(5), bias)
            assert np.all(out == 1.0)

    def test_range_validated(self):
        with pytest.raises(ValueError):
            bof_step(two_node(), [-0.1, 0.5], 1.0)

    def test_output_stays_in_unit_interval(self):
        for seed in range(10):
            g, y, rng = random_case(seed)
            x = (y + 1.0) / 2.0
            b = rng.uniform(0, 3, g.n)
            out = bof_step(g, x, b)
            assert np.all(out >= 0.0) and np.all(out <= 1.0)


class TestBebaWeight:
    def test_zero_beta_is_unit_weight(self):
        assert beba_weight(0.0, 0.9, -0.7) == 1.0

    def test_agreement_raises_weight(self):
        assert beba_weight(1.0, 0.5, 0.5) == 1.25

    def test_backfire_goes_negative(self):
        assert beba_weight(5.0, 0.5, -0.5) == -0.25


class TestBebaStep:
    def test_two_node_assimilation(self):
        out = beba_step(two_node(), [0.5, -0.5], 3.0)
        assert out.tolist() == [0.3, -0.3]

    def test_two_node_frozen_at_exact_threshold(self):
        y = np.array([0.5, -0.5])
        out = beba_step(two_node(), y, 4.0)
        assert np.array_equal(out, y)  # w_01 is exactly 0

    def test_two_node_backfire(self):
        out = beba_step(two_node(), [0.5, -0.5], 5.0)
        assert out[0] == pytest.approx(5.0 / 6.0, abs=1e-15)
        assert out[1] == pytest.approx(-5.0 / 6.0, abs=1e-15)

    def test_star_center_clips_to_extreme(self):
        y = np.array([-0.5, 0.9, 0.9, 0.9, 0.9])
        out = beba_step(star5(), y, 2.5)
        assert out[0] == -1.0  # raw quotient -1.9, clipped

    def test_guard_snaps_to_sign(self):
        # beta large enough that the dynamic weights sum below -w_ii
        y = np.array([0.5, -0.5])
        out, guard = beba_update(two_node(), y, 100.0)
        assert guard.tolist() == [True, True]
        assert out.tolist() == [1.0, -1.0]

    def test_zero_beta_equals_degroot_bitwise(self):
        for seed in range(20):
            g, y, _ = random_case(seed)
            assert np.array_equal(beba_step(g, y, 0.0), degroot_step(g, y))

    def test_zero_beta_equals_degroot_on_weighted_graphs(self):
        g = Graph(3, [(0, 1, 2.5), (1, 2, 0.5)], self_weights=[1.0, 0.5, 2.0])
        y = np.array([0.3, -0.8, 0.1])
        assert np.array_equal(beba_step(g, y, 0.0), degroot_step(g, y))

    def test_range_safety(self):
        for seed in range(10):
            g, y, rng = random_case(seed)
            beta = float(rng.uniform(0, 50))
            for _ in range(20):
                y = beba_step(g, y, beta)
                assert np.all(np.abs(y) <= 1.0)

    def test_convex_hull_containment_with_positive_weights(self):
        # beta < 1 keeps every dynamic weight positive
        for seed in range(10):
            g, y, rng = random_case(seed)
            beta = float(rng.uniform(0, 0.99))
            out = beba_step(g, y, beta)
            for i in range(g.n):
                hood = np.append(y[g.neighbors(i)], y[i])
                assert hood.min() - 1e-12 <= out[i] <= hood.max() + 1e-12

    def test_per_node_beta(self):
        out = beba_step(two_node(), [0.5, -0.5], [3.0, 0.0])
        assert out[0] == 0.3  # node 0 entrenchment 3
        assert out[1] == 0.0  # node 1 plain average

    def test_negative_beta_rejected(self):
        with pytest.raises(ValueError):
            beba_step(two_node(), [0.5, -0.5], -1.0)

    def test_range_validated(self):
        with pytest.raises(ValueError):
            beba_step(two_node(), [1.5, 0.0], 1.0)


class TestFixedEnvironment:
    def test_neutral_environment_halves(self):
        env = FixedEnvironment((0.0,), self_weight=1.0, beta=123.0)
        assert fixed_env_step(0.3, env) == 0.15

    def test_unstable_point_is_stationary(self):
        env = FixedEnvironment((-0.5,), self_weight=1.0, beta=4.0)
        assert fixed_env_step(0.5, env) == 0.5

    def test_attraction_below_unstable_point(self):
        env = FixedEnvironment((-0.5,), self_weight=1.0, beta=4.0)
        assert fixed_env_step(0.25, env) == 0.0

    def test_guard_absorbs(self):
        env = FixedEnvironment((-0.9,), self_weight=1.0, beta=10.0)
        y = 0.5  # w + beta*s*y + m = 2 - 4.5 <= 0
        val, guard = fixed_env_update(y, env)
        assert guard and val == 1.0
        for _ in range(20):
            val2, _ = fixed_env_update(val, env)
            assert val2 == val == 1.0

    def test_derived_sums(self):
        env = FixedEnvironment((-0.8, -0.2), self_weight=1.0, beta=2.0)
        assert env.m == 2
        assert env.s == pytest.approx(-1.0)
        assert env.q == pytest.approx(0.68)

    def test_sum_square_inequality(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            env = FixedEnvironment(tuple(rng.uniform(-1, 1, rng.integers(1, 8))))
            assert env.m * env.q - env.s**2 >= -1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            FixedEnvironment(())
        with pytest.raises(ValueError):
            FixedEnvironment((1.5,))
        with pytest.raises(ValueError):
            FixedEnvironment((0.5,), self_weight=-1.0)
        with pytest.raises(ValueError):
            FixedEnvironment((0.5,), beta=-0.5)
        with pytest.raises(ValueError):
            fixed_env_step(1.5, FixedEnvironment((0.5,)))


def _raw_env_map(y, env):
    """Guard-free rational map; the independent root-check oracle."""
    return (env.self_weight * y + env.beta * env.q * y + env.s) / (
        env.self_weight + env.beta * env.s * y + env.m
    )


class TestFixedPoints:
    def test_single_neighbor_closed_form(self):
        env = FixedEnvironment((-0.5,), self_weight=1.0, beta=4.0)
        y_a, y_r = fixed_env_fixed_points(env)
        assert y_a == -0.5  # p itself
        assert y_r == 0.5  # -1/(beta*p)

    def test_single_neighbor_attracts_to_p_everywhere(self):
        for p in (-0.9, -0.3, 0.2, 0.7):
            for beta in (0.5, 1.0, 3.0, 8.0):
                y_a, y_r = fixed_env_fixed_points(FixedEnvironment((p,), beta=beta))
                assert y_a == pytest.approx(p, abs=1e-12)
                assert y_r == pytest.approx(-1.0 / (beta * p), rel=1e-12)

    def test_two_neighbor_roots_satisfy_map(self):
        env = FixedEnvironment((-0.8, -0.2), self_weight=1.0, beta=2.0)
        y_a, y_r = fixed_env_fixed_points(env)
        assert abs(_raw_env_map(y_a, env) - y_a) < 1e-12
        assert abs(_raw_env_map(y_r, env) - y_r) < 1e-12

    def test_stability_derivatives(self):
        # attracting |f'| < 1, repelling |f'| > 1, by central differences
        rng = np.random.default_rng(42)
        checked = 0
        h = 1e-6
        while checked < 100:
            m = int(rng.integers(1, 6))
            env = FixedEnvironment(
                tuple(rng.uniform(-1, 1, m)),
                self_weight=float(rng.uniform(0.1, 2.0)),
                beta=float(rng.uniform(0.1, 5.0)),
            )
            if abs(env.s) < 0.05:
                continue
            y_a, y_r = fixed_env_fixed_points(env)
            # keep both points well inside the clip range and the guard-free,
            # well-conditioned region so the finite difference is meaningful
            usable = True
            for y in (y_a, y_r):
                if abs(y) > 1.0 - 1e-4:
                    usable = False
                elif env.self_weight + env.beta * env.s * y + env.m < 0.05:
                    usable = False
            if not usable:
                continue
            d_a = (fixed_env_step(y_a + h, env) - fixed_env_step(y_a - h, env)) / (2 * h)
            d_r = (fixed_env_step(y_r + h, env) - fixed_env_step(y_r - h, env)) / (2 * h)
            assert abs(d_a) < 1.0
            assert abs(d_r) > 1.0
            checked += 1

    def test_all_neutral_environment_degenerates_to_zero(self):
        assert fixed_env_fixed_points(FixedEnvironment((0.0, 0.0), beta=2.0)) == (0.0, None)

    def test_balanced_environment_has_no_closed_form(self):
        with pytest.raises(BalancedEnvironmentError):
            fixed_env_fixed_points(FixedEnvironment((0.5, -0.5), beta=2.0))

    def test_zero_beta_single_attractor(self):
        y_a, y_r = fixed_env_fixed_points(FixedEnvironment((0.4, 0.8), beta=0.0))
        assert y_a == pytest.approx(0.6)  # s/m
        assert y_r is None
