import math

import numpy as np
import pytest

from backend.app.core.exceptions import BadIndex, BoundaryKL, DimensionMismatch
from backend.app.core.objectives import (
    FULL,
    all_losses,
    eval_grad,
    eval_loss,
    eval_regularizer,
    smoothness_constant,
    strong_convexity_constant,
)
from backend.app.models.domain import MixtureWeights
from backend.app.models.federation import ClientShard, Federation
from backend.app.models.specs import ObjectiveSpec, RegularizerSpec
from backend.app.repositories import (
    make_quadratic_federation,
    make_synthetic_federation,
)


def _random_federation(kind: str, rng, **objective_kwargs) -> Federation:
    shards = []
    for i in range(3):
        x = rng.normal(size=(5, 3))
        if kind == "quadratic":
            y = np.zeros(5)
        elif objective_kwargs.get("n_classes", 2) > 2:
            y = rng.integers(0, objective_kwargs["n_classes"], size=5).astype(float)
        else:
            y = rng.integers(0, 2, size=5).astype(float)
        shards.append(ClientShard(client_id=i, features=x, labels=y))
    objective = ObjectiveSpec(kind=kind, **objective_kwargs)
    return Federation(shards=tuple(shards), objective=objective)


def _central_difference(fed, i, w, batch, h=1e-5):
    grad = np.zeros_like(w)
    for k in range(w.shape[0]):
        e = np.zeros_like(w)
        e[k] = h
        ahead = eval_loss(fed, i, w + e, batch)
        behind = eval_loss(fed, i, w - e, batch)
        grad[k] = (ahead - behind) / (2 * h)
    return grad


# =============================================================================
# 값
# =============================================================================


def test_quadratic_loss_and_grad_hand_values(two_quadratics):
    w = np.zeros(2)
    assert eval_loss(two_quadratics, 0, w) == pytest.approx(0.5)
    np.testing.assert_allclose(eval_grad(two_quadratics, 0, w), [-1.0, 0.0])


def test_quadratic_minimum_at_center(two_quadratics):
    center = np.array([1.0, 0.0])
    assert eval_loss(two_quadratics, 0, center) == 0.0
    np.testing.assert_array_equal(eval_grad(two_quadratics, 0, center), np.zeros(2))


def test_logistic_at_zero_is_log_two(logistic_fed):
    w = np.zeros(logistic_fed.param_dim)
    for i in range(logistic_fed.n_clients):
        assert eval_loss(logistic_fed, i, w) == pytest.approx(math.log(2.0), abs=1e-15)


def test_full_batch_equals_mean_of_singletons(rng):
    for kind in ("logistic_regression", "sigmoid_nonconvex", "quadratic"):
        fed = _random_federation(kind, rng)
        w = rng.normal(size=fed.param_dim)
        n = fed.shard(1).n_samples
        singles = [eval_loss(fed, 1, w, [j]) for j in range(n)]
        expected = math.fsum(singles) / n
        assert eval_loss(fed, 1, w, FULL) == pytest.approx(expected, abs=1e-12)


# =============================================================================
# gradient
# =============================================================================


@pytest.mark.parametrize(
    "kind, kwargs",
    [
        ("quadratic", {"curvature": 2.5, "l2_term": 0.1}),
        ("logistic_regression", {"l2_term": 0.05}),
        ("logistic_regression", {"n_classes": 3, "fit_intercept": True}),
        ("sigmoid_nonconvex", {}),
    ],
)
def test_gradient_matches_central_differences(rng, kind, kwargs):
    fed = _random_federation(kind, rng, **kwargs)
    for _ in range(100):
        i = int(rng.integers(0, fed.n_clients))
        w = rng.normal(size=fed.param_dim)
        batch = FULL
        if rng.random() >= 0.5:
            batch = rng.integers(0, fed.shard(i).n_samples, size=3)
        analytic = eval_grad(fed, i, w, batch)
        numeric = _central_difference(fed, i, w, batch)
        tolerance = 1e-6 * max(1.0, np.linalg.norm(analytic))
        assert np.linalg.norm(analytic - numeric) <= tolerance


def test_quadratic_strong_convexity_inequality(rng):
    fed = make_quadratic_federation(
        [[0.5, -1.0]], objective=ObjectiveSpec(kind="quadratic", curvature=3.0)
    )
    mu = strong_convexity_constant(fed)
    for _ in range(100):
        x, y = rng.normal(size=2), rng.normal(size=2)
        lower = (
            eval_loss(fed, 0, x)
            + eval_grad(fed, 0, x) @ (y - x)
            + 0.5 * mu * float((y - x) @ (y - x))
        )
        assert eval_loss(fed, 0, y) >= lower - 1e-9


def test_batch_and_dimension_errors(two_quadratics):
    with pytest.raises(BadIndex):
        eval_loss(two_quadratics, 0, np.zeros(2), [])
    with pytest.raises(BadIndex):
        eval_loss(two_quadratics, 0, np.zeros(2), [5])
    with pytest.raises(BadIndex):
        eval_loss(two_quadratics, 2, np.zeros(2))
    with pytest.raises(DimensionMismatch):
        eval_grad(two_quadratics, 0, np.zeros(3))


def test_all_losses_order(two_quadratics):
    losses = all_losses(two_quadratics, np.array([1.0, 0.0]))
    np.testing.assert_allclose(losses, [0.0, 2.0])


# =============================================================================
# regularizer
# =============================================================================


@pytest.mark.parametrize(
    "g",
    [
        RegularizerSpec(),
        RegularizerSpec(kind="quadratic_to_uniform", strength=2.0),
        RegularizerSpec(kind="kl_to_uniform", strength=0.7),
    ],
)
def test_regularizers_vanish_at_uniform(g):
    value, grad = eval_regularizer(g, MixtureWeights.uniform(4))
    assert value == pytest.approx(0.0, abs=1e-15)
    if g.kind != "kl_to_uniform":
        np.testing.assert_allclose(grad, np.zeros(4), atol=1e-15)


def test_quadratic_regularizer_hand_value():
    g = RegularizerSpec(kind="quadratic_to_uniform", strength=1.0)
    value, grad = eval_regularizer(g, MixtureWeights.vertex(2, 0))
    assert value == pytest.approx(-0.25)
    np.testing.assert_allclose(grad, [-0.5, 0.5])


def test_none_regularizer_is_zero():
    value, grad = eval_regularizer(RegularizerSpec(), MixtureWeights([0.9, 0.1]))
    assert value == 0.0
    np.testing.assert_array_equal(grad, [0.0, 0.0])


def test_kl_boundary_raises():
    g = RegularizerSpec(kind="kl_to_uniform", strength=1.0)
    with pytest.raises(BoundaryKL) as info:
        eval_regularizer(g, MixtureWeights.vertex(3, 1))
    assert info.value.index == 0


def test_kl_nonpositive_with_equality_only_at_uniform(rng):
    g = RegularizerSpec(kind="kl_to_uniform", strength=1.0)
    for _ in range(200):
        raw = rng.random(5) + 1e-3
        value, _ = eval_regularizer(g, MixtureWeights(raw / raw.sum()))
        assert value < 0.0
    value, _ = eval_regularizer(g, MixtureWeights.uniform(5))
    assert abs(value) <= 1e-12


@pytest.mark.parametrize("kind", ["quadratic_to_uniform", "kl_to_uniform"])
def test_regularizer_gradient_matches_central_differences(rng, kind):
    g = RegularizerSpec(kind=kind, strength=1.3)
    h = 1e-6
    for _ in range(100):
        raw = rng.random(4) + 0.05
        lam = raw / raw.sum()
        _, grad = eval_regularizer(g, MixtureWeights(lam))
        numeric = np.zeros(4)
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            plus, _ = eval_regularizer(g, MixtureWeights(lam + e))
            minus, _ = eval_regularizer(g, MixtureWeights(lam - e))
            numeric[k] = (plus - minus) / (2 * h)
        assert np.linalg.norm(grad - numeric) <= 1e-6 * max(1.0, np.linalg.norm(grad))


# =============================================================================
# 상수
# =============================================================================


def test_smoothness_constants(two_quadratics, logistic_fed):
    assert smoothness_constant(two_quadratics) == 1.0
    assert strong_convexity_constant(two_quadratics) == 1.0
    assert smoothness_constant(logistic_fed) > 0.01
    assert strong_convexity_constant(logistic_fed) == pytest.approx(0.01)


def test_synthetic_single_client_federation():
    fed = make_synthetic_federation(n_clients=1, dim=3, samples_per_client=10, seed=1)
    assert fed.n_clients == 1
    assert fed.param_dim == 3
