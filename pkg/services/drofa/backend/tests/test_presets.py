import math

import pytest

from backend.app.core.exceptions import BadConfig
from backend.app.services.presets import (
    apply_preset,
    largest_divisor_at_most,
    theorem1_parameters,
    theorem2_parameters,
)


@pytest.mark.parametrize(
    "total, bound, expected",
    [(12, 5, 4), (12, 12, 12), (7, 3.9, 1), (10, 0.5, 1), (256, 4.0, 4)],
)
def test_largest_divisor_at_most(total, bound, expected):
    assert largest_divisor_at_most(total, bound) == expected


def test_theorem1_parameters():
    params = theorem1_parameters(T=256, m=1, L=1.0)
    assert params["eta"] == pytest.approx(1.0 / 64.0)
    assert params["gamma"] == pytest.approx(1.0 / 32.0)
    assert params["tau"] == 4
    # √m 로 나누어 τ 가 줄어듦
    assert theorem1_parameters(T=256, m=4, L=1.0)["tau"] == 2


def test_theorem2_parameters():
    params = theorem2_parameters(T=1000, L=2.0, mu=0.5)
    assert params["eta"] == pytest.approx(4.0 * math.log(1000) / 500.0)
    assert params["gamma"] == pytest.approx(0.5)


def test_theorem_presets_reject_bad_constants():
    with pytest.raises(BadConfig):
        theorem1_parameters(T=16, m=1, L=0.0)
    with pytest.raises(BadConfig):
        theorem2_parameters(T=16, L=1.0, mu=0.0)
    with pytest.raises(BadConfig):
        theorem2_parameters(T=1, L=1.0, mu=1.0)


def test_apply_preset(two_quadratics, make_algo):
    cfg = make_algo(T=256, tau=1, m=1)
    assert apply_preset(cfg, two_quadratics, "none") is cfg

    tuned = apply_preset(cfg, two_quadratics, "theorem1")
    assert tuned.tau == 4
    assert tuned.T % tuned.tau == 0
    assert tuned.eta == pytest.approx(1.0 / 64.0)

    tuned = apply_preset(cfg, two_quadratics, "theorem2_appendix")
    assert tuned.gamma == pytest.approx(1.0)
    assert tuned.tau == 1


def test_apply_preset_needs_strong_convexity(make_algo):
    from backend.app.models.specs import ObjectiveSpec
    from backend.app.repositories import make_synthetic_federation

    fed = make_synthetic_federation(
        n_clients=2,
        dim=2,
        samples_per_client=5,
        objective=ObjectiveSpec(kind="logistic_regression"),
    )
    with pytest.raises(BadConfig):
        apply_preset(make_algo(), fed, "theorem2_appendix")


def test_unknown_preset(two_quadratics, make_algo):
    with pytest.raises(BadConfig):
        apply_preset(make_algo(), two_quadratics, "fastest")
