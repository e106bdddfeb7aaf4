import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from backend.app.core.exceptions import BadConfig, NonFiniteInput
from backend.app.core.geometry import (
    ProxProblem,
    project_primal,
    project_simplex,
    prox_kkt_residual,
    prox_simplex,
)
from backend.app.models.domain import validate_mixture
from backend.app.models.specs import PrimalDomainSpec, RegularizerSpec
from backend.app.oracle.checks import prox_objective
from backend.app.oracle.grid import grid_argmax_over_simplex
from backend.app.oracle.projection import brute_force_simplex_projection

finite_vectors = arrays(
    np.float64,
    st.integers(min_value=1, max_value=16),
    elements=st.floats(min_value=-50.0, max_value=50.0, allow_nan=False),
)

QUADRATIC_G = RegularizerSpec(kind="quadratic_to_uniform", strength=1.0)
KL_G = RegularizerSpec(kind="kl_to_uniform", strength=1.0)


# =============================================================================
# project_simplex
# =============================================================================


def test_feasible_point_is_fixed():
    out = project_simplex([0.2, 0.3, 0.5]).values
    np.testing.assert_allclose(out, [0.2, 0.3, 0.5], atol=1e-15)


def test_projection_hand_value():
    out = project_simplex([0.5, 0.5, 1.0]).values
    np.testing.assert_allclose(out, [1 / 6, 1 / 6, 2 / 3], atol=1e-15)


@pytest.mark.parametrize("x", [-1e6, -3.0, 0.0, 0.5, 42.0])
def test_one_dimensional_simplex_is_a_point(x):
    assert project_simplex([x]).to_list() == [1.0]


def test_projection_rejects_non_finite():
    with pytest.raises(NonFiniteInput):
        project_simplex([0.1, float("nan")])


@given(finite_vectors)
def test_projection_output_is_valid_mixture(v):
    validate_mixture(project_simplex(v).values)


@given(finite_vectors)
def test_projection_is_idempotent(v):
    once = project_simplex(v).values
    np.testing.assert_allclose(project_simplex(once).values, once, atol=1e-12)


def test_projection_is_nonexpansive(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 17))
        x, y = rng.normal(scale=3.0, size=n), rng.normal(scale=3.0, size=n)
        distance = np.linalg.norm(project_simplex(x).values - project_simplex(y).values)
        assert distance <= np.linalg.norm(x - y) + 1e-12


def test_projection_matches_brute_force(rng):
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 17))
        v = rng.normal(scale=2.0, size=n)
        exact = brute_force_simplex_projection(v)
        deviation = np.max(np.abs(project_simplex(v).values - exact))
        worst = max(worst, float(deviation))
    assert worst < 1e-9


def test_projection_ignores_tie_order():
    a = project_simplex([0.7, 0.7, 0.1]).values
    b = project_simplex([0.1, 0.7, 0.7]).values
    np.testing.assert_allclose(a, b[::-1], atol=1e-15)


# =============================================================================
# project_primal
# =============================================================================


def test_unconstrained_is_identity():
    np.testing.assert_array_equal(project_primal([3.0, -4.0]).values, [3.0, -4.0])


@pytest.mark.parametrize("radius, expected", [(1.0, [0.6, 0.8]), (10.0, [3.0, 4.0])])
def test_l2_ball(radius, expected):
    spec = PrimalDomainSpec(kind="l2_ball", radius=radius)
    out = project_primal([3.0, 4.0], spec).values
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_l2_ball_nonexpansive_and_idempotent(rng):
    spec = PrimalDomainSpec(kind="l2_ball", radius=1.5)
    for _ in range(1000):
        x, y = rng.normal(scale=2.0, size=3), rng.normal(scale=2.0, size=3)
        px, py = project_primal(x, spec).values, project_primal(y, spec).values
        assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12
        np.testing.assert_allclose(project_primal(px, spec).values, px, atol=1e-12)


def test_l2_ball_needs_radius():
    with pytest.raises(ValueError):
        PrimalDomainSpec(kind="l2_ball")


# =============================================================================
# prox_simplex
# =============================================================================


def test_prox_problem_validation():
    with pytest.raises(BadConfig):
        ProxProblem(anchor=np.ones(2), step=0.0, scale=1.0, regularizer=KL_G)
    with pytest.raises(NonFiniteInput):
        ProxProblem(
            anchor=np.array([np.inf, 0.0]), step=1.0, scale=1.0, regularizer=KL_G
        )


@pytest.mark.parametrize("step, scale", [(0.01, 1.0), (1.0, 8.0), (5.0, 3.0)])
def test_prox_without_regularizer_is_projection(step, scale):
    anchor = np.array([0.5, 0.5, 1.0])
    problem = ProxProblem(
        anchor=anchor, step=step, scale=scale, regularizer=RegularizerSpec()
    )
    out = prox_simplex(problem).values
    np.testing.assert_array_equal(out, project_simplex(anchor).values)
    np.testing.assert_allclose(out, [1 / 6, 1 / 6, 2 / 3], atol=1e-15)


def test_quadratic_prox_approaches_uniform_as_strength_grows():
    anchor = np.array([0.9, 0.05, 0.05])
    distances = []
    for strength in (1.0, 10.0, 100.0):
        g = RegularizerSpec(kind="quadratic_to_uniform", strength=strength)
        problem = ProxProblem(anchor=anchor, step=0.5, scale=2.0, regularizer=g)
        out = prox_simplex(problem).values
        distances.append(float(np.linalg.norm(out - 1 / 3)))
    assert distances[0] > distances[1] > distances[2]


def test_quadratic_prox_fixed_point_at_uniform():
    problem = ProxProblem(
        anchor=np.full(4, 0.25), step=0.3, scale=5.0, regularizer=QUADRATIC_G
    )
    out = prox_simplex(problem).values
    np.testing.assert_allclose(out, np.full(4, 0.25), atol=1e-14)


def test_kl_prox_two_clients_matches_grid():
    problem = ProxProblem(
        anchor=np.array([0.9, 0.3]), step=0.1, scale=1.0, regularizer=KL_G
    )
    _, best = grid_argmax_over_simplex(prox_objective(problem), 2, 1e-5)
    np.testing.assert_allclose(prox_simplex(problem).values, best, atol=1e-4)


@pytest.mark.parametrize("g", [QUADRATIC_G, KL_G])
def test_prox_matches_grid_on_random_instances(rng, g):
    for _ in range(5):
        n = int(rng.integers(2, 4))
        problem = ProxProblem(
            anchor=rng.uniform(0.0, 1.0, size=n), step=0.1, scale=1.0, regularizer=g
        )
        _, best = grid_argmax_over_simplex(prox_objective(problem), n, 1e-5)
        np.testing.assert_allclose(prox_simplex(problem).values, best, atol=1e-4)


@pytest.mark.parametrize("g", [RegularizerSpec(), QUADRATIC_G, KL_G])
def test_prox_kkt_residual_small(rng, g):
    for _ in range(200):
        n = int(rng.integers(1, 9))
        problem = ProxProblem(
            anchor=rng.normal(scale=2.0, size=n),
            step=float(rng.uniform(0.01, 2.0)),
            scale=float(rng.integers(1, 10)),
            regularizer=g,
        )
        out = prox_simplex(problem)
        validate_mixture(out.values)
        assert prox_kkt_residual(problem, out.values) < 1e-8


def test_kl_prox_is_interior_for_boundary_anchor():
    problem = ProxProblem(
        anchor=np.array([5.0, -5.0, 0.0]), step=1.0, scale=1.0, regularizer=KL_G
    )
    assert np.all(prox_simplex(problem).values > 0.0)


def test_kl_prox_warns_on_large_kkt_residual(monkeypatch, caplog):
    import logging

    from backend.app.core import geometry

    monkeypatch.setattr(geometry, "PROX_KKT_TOLERANCE", -1.0)
    problem = ProxProblem(
        anchor=np.array([0.2, 0.3, 0.5]), step=1.0, scale=1.0, regularizer=KL_G
    )
    with caplog.at_level(logging.WARNING, logger="backend.app.core.geometry"):
        prox_simplex(problem)
    assert any("KKT residual" in r.getMessage() for r in caplog.records)
