import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fairx.merit import MeritFunction
from fairx.optim import (
    BoxRegion,
    EllipsoidRegion,
    PgdConfig,
    best_box_vertex,
    beta_schedule,
    objective_and_gradient,
    optimistic_objective,
    pgd_maximize,
)
from oracles import beta_schedule_hp, central_difference, grid_max_2d, objective_direct

# beta_schedule_hp(1, 2, 1.0, 0.1)
BETA_T1_D2 = 14.382701945198239
# d ln 2 + 2 ln(pi^2 d^2 / 3) at d = 3
BETA_LIMIT_D3 = 8.855585662413656
# grid_max_2d("identity", 0, (0.2, 0.5), (0.4, 0.9))
IDENTITY_BOX_MAX = 0.7727272727272727

IDENTITY = MeritFunction.identity()
vectors = arrays(float, 3, elements=st.floats(-10, 10))


def _spd(rng, d):
    A = rng.normal(size=(d, d))
    return A @ A.T + 0.1 * np.eye(d)


class TestProjection:
    def test_box_clamp(self):
        np.testing.assert_array_equal(BoxRegion([0, 0], [1, 1]).project([2.0, -3.0]), [1.0, 0.0])

    def test_ball(self):
        e = EllipsoidRegion([0, 0], np.eye(2), 1.0)
        np.testing.assert_allclose(e.project(np.array([3.0, 4.0])), [0.6, 0.8], atol=1e-12)

    def test_interior_unchanged(self):
        x = np.array([0.1, -0.2])
        np.testing.assert_array_equal(EllipsoidRegion([0, 0], np.eye(2), 1.0).project(x), x)
        np.testing.assert_array_equal(BoxRegion([-1, -1], [1, 1]).project(x), x)

    def test_ellipsoid_is_nearest_boundary_point(self):
        rng = np.random.default_rng(0)
        V = _spd(rng, 2)
        e = EllipsoidRegion([0.5, -0.5], V, 0.3)
        y = np.array([3.0, 2.0])
        z = e.project(y)
        # brute force over a dense parametrisation of the boundary
        phi = np.linspace(0, 2 * np.pi, 200_001)
        L = np.linalg.cholesky(V)
        pts = e.center[:, None] + np.sqrt(0.3) * np.linalg.solve(L.T, np.stack([np.cos(phi), np.sin(phi)]))
        best = pts[:, np.argmin(np.linalg.norm(pts.T - y, axis=1))]
        np.testing.assert_allclose(z, best, atol=1e-4)
        np.testing.assert_allclose(e.norm_sq(z), 0.3, rtol=1e-9)

    def test_zero_radius(self):
        e = EllipsoidRegion([1.0, 2.0], np.eye(2), 0.0)
        np.testing.assert_allclose(e.project(np.array([5.0, 5.0])), [1.0, 2.0])

    def test_batched_ellipsoid(self):
        rng = np.random.default_rng(1)
        V = np.stack([_spd(rng, 3) for _ in range(4)])
        e = EllipsoidRegion(rng.normal(size=(4, 3)), V, np.array([0.5, 1.0, 0.0, 2.0]))
        y = rng.normal(size=(4, 3)) * 5
        z = e.project(y)
        for i in range(4):
            single = EllipsoidRegion(e.center[i], V[i], e.radius_sq[i]).project(y[i])
            np.testing.assert_allclose(z[i], single, atol=1e-12)

    def test_invalid_regions(self):
        with pytest.raises(ValueError):
            BoxRegion([1.0], [0.0])
        with pytest.raises(ValueError):
            EllipsoidRegion([0, 0], np.eye(2), -1.0)
        with pytest.raises(ValueError):
            EllipsoidRegion([0, 0], -np.eye(2), 1.0)

    @given(vectors)
    def test_box_idempotent_and_member(self, y):
        b = BoxRegion([-1, 0, 2], [1, 0.5, 3])
        z = b.project(y)
        assert b.contains(z)
        np.testing.assert_array_equal(b.project(z), z)

    @given(vectors, st.integers(0, 2**31), st.floats(0.0, 4.0))
    def test_ellipsoid_idempotent_and_member(self, y, seed, radius_sq):
        rng = np.random.default_rng(seed)
        e = EllipsoidRegion(rng.normal(size=3), _spd(rng, 3), radius_sq)
        z = e.project(y)
        assert e.contains(z, tol=1e-9)
        np.testing.assert_allclose(e.project(z), z, atol=1e-9)


class TestObjective:
    def test_identity_example(self):
        np.testing.assert_allclose(optimistic_objective(IDENTITY, [0.5, 1.0]), 5 / 6)
        np.testing.assert_allclose(optimistic_objective(MeritFunction.identity((1e-6, 3)), [1.0, 2.0]), 5 / 3)

    def test_equal_values(self):
        np.testing.assert_allclose(optimistic_objective(MeritFunction.exponential(3.0), np.full(4, 0.3)), 0.3)

    def test_steep_limit(self):
        theta = np.array([0.1, 0.6, 0.3])
        assert abs(optimistic_objective(MeritFunction.exponential(50.0), theta) - 0.6) <= 1e-3

    def test_matches_direct_formula(self):
        theta = np.random.default_rng(2).uniform(0.01, 1, (10, 5))
        for m in (IDENTITY, MeritFunction.exponential(3.0), MeritFunction.piecewise_linear(4.0)):
            np.testing.assert_allclose(optimistic_objective(m, theta),
                                       objective_direct(m.kind, m.param, theta), rtol=1e-13)

    def test_linear_scores(self):
        contexts = np.array([[1.0, 0.0], [0.0, 1.0]])
        m = MeritFunction.exponential(2.0)
        np.testing.assert_allclose(optimistic_objective(m, [0.2, 0.7], contexts),
                                   optimistic_objective(m, [0.2, 0.7]))

    def test_gradient_linear(self):
        rng = np.random.default_rng(3)
        m = MeritFunction.exponential(2.0)
        contexts = rng.normal(size=(4, 3)) * 0.3
        theta = rng.normal(size=3) * 0.3
        _, grad = objective_and_gradient(m, theta, contexts)
        fd = central_difference(lambda t: objective_direct("exp", 2.0, contexts @ t), theta)
        np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-9)


class TestPgd:
    def test_zero_radius_returns_centre(self):
        c = np.array([0.3, 0.6])
        np.testing.assert_array_equal(pgd_maximize(IDENTITY, BoxRegion(c, c)), c)
        e = EllipsoidRegion(c, np.eye(2), 0.0)
        np.testing.assert_allclose(pgd_maximize(IDENTITY, e), c)

    def test_identity_box_against_grid(self):
        box = BoxRegion([0.2, 0.5], [0.4, 0.9])
        val = optimistic_objective(IDENTITY, pgd_maximize(IDENTITY, box))
        assert val >= IDENTITY_BOX_MAX - 5e-2
        np.testing.assert_allclose(val, IDENTITY_BOX_MAX, atol=1e-12)

    def test_never_below_init(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            lo = rng.uniform(0.01, 0.5, 2)
            box = BoxRegion(lo, lo + rng.uniform(0, 0.5, 2))
            for compiled in (True, False):
                for vertex in (True, False):
                    cfg = PgdConfig(vertex_start=vertex)
                    out = pgd_maximize(IDENTITY, box, cfg=cfg, compiled=compiled)
                    assert box.contains(out)
                    assert optimistic_objective(IDENTITY, out) >= optimistic_objective(IDENTITY, box.center) - 1e-15

    def test_compiled_matches_numpy(self):
        rng = np.random.default_rng(5)
        for m in (IDENTITY, MeritFunction.exponential(4.0), MeritFunction.piecewise_linear(8.0)):
            lo, hi = m.eval_domain
            a = rng.uniform(lo, hi, (20, 4))
            b = np.minimum(a + rng.uniform(0, 0.7, (20, 4)), hi)
            box = BoxRegion(a, b)
            np.testing.assert_allclose(pgd_maximize(m, box, compiled=True),
                                       pgd_maximize(m, box, compiled=False), atol=1e-13)

    def test_ellipsoid_stays_inside(self):
        rng = np.random.default_rng(6)
        m = MeritFunction.exponential(3.0)
        contexts = rng.normal(size=(5, 3)) * 0.2
        e = EllipsoidRegion(rng.normal(size=3) * 0.2, _spd(rng, 3), 0.5)
        out = pgd_maximize(m, e, contexts=contexts)
        assert e.contains(out, tol=1e-9)
        assert optimistic_objective(m, out, contexts) >= optimistic_objective(m, e.center, contexts)

    def test_centre_start_can_stall(self):
        # from the centre, ten small steps do not reach the far vertex of a wide box
        m = MeritFunction.exponential(1.0)
        box = BoxRegion([-1.0, -1.0], [1.0, 1.0])
        centre_only = pgd_maximize(m, box, cfg=PgdConfig(vertex_start=False))
        assert optimistic_objective(m, centre_only) < 0.5
        np.testing.assert_allclose(optimistic_objective(m, pgd_maximize(m, box)), 1.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PgdConfig(step_size=0.0)
        with pytest.raises(ValueError):
            PgdConfig(num_steps=0)


class TestBestVertex:
    @pytest.mark.parametrize("kind,param", [("exp", 3.0), ("identity", 0.0), ("piecewise_linear", 6.0)])
    def test_against_grid(self, kind, param):
        m = MeritFunction(kind, param, (1e-6, 1.0) if kind == "identity" else (-1.0, 1.0))
        rng = np.random.default_rng(7)
        dlo, dhi = m.eval_domain
        for _ in range(10):
            lo = rng.uniform(dlo, dhi, 2)
            hi = np.minimum(lo + rng.uniform(0, 1, 2), dhi)
            v = optimistic_objective(m, best_box_vertex(m, BoxRegion(lo, hi)))
            grid = grid_max_2d(kind, param, lo, hi, step=2e-3)
            assert v >= grid - 1e-12

    def test_batched(self):
        rng = np.random.default_rng(8)
        m = MeritFunction.exponential(2.0)
        lo = rng.uniform(-1, 0, (6, 3))
        box = BoxRegion(lo, lo + 0.8)
        batched = best_box_vertex(m, box)
        for i in range(6):
            np.testing.assert_array_equal(batched[i], best_box_vertex(m, BoxRegion(box.lo[i], box.hi[i])))


class TestBetaSchedule:
    def test_value(self):
        np.testing.assert_allclose(beta_schedule(1, 2, 1.0, 0.1), BETA_T1_D2, rtol=1e-13)
        np.testing.assert_allclose(beta_schedule_hp(1, 2, 1.0, 0.1), BETA_T1_D2, rtol=1e-15)

    def test_limit(self):
        np.testing.assert_allclose(beta_schedule(3, 3, 0.0, 1 - 1e-12), BETA_LIMIT_D3, rtol=1e-10)
        np.testing.assert_allclose(3 * math.log(2) + 2 * math.log(math.pi**2 * 9 / 3), BETA_LIMIT_D3, rtol=1e-15)

    def test_monotone(self):
        values = [beta_schedule(t, 4, 1.0, 0.05) for t in range(1, 2000)]
        assert np.all(np.diff(values) >= 0)

    def test_errors(self):
        with pytest.raises(ValueError):
            beta_schedule(0, 2, 1.0, 0.1)
        with pytest.raises(ValueError):
            beta_schedule(1, 2, 1.0, 1.0)
