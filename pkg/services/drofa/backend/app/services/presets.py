"""
이론 step-size preset

- theorem1: η = 1/(4L√T), γ = T^{-5/8}, τ ≈ T^{1/4}/√m (T 의 약수로 내림)
- theorem2_appendix: η = 4 log T/(μT), γ = 1/L
"""
import logging
import math
from typing import Optional

from backend.app.core.exceptions import BadConfig
from backend.app.core.objectives import smoothness_constant, strong_convexity_constant
from backend.app.models.federation import Federation
from backend.app.schemas.config import AlgoConfig

logger = logging.getLogger(__name__)

PRESETS = ("none", "theorem1", "theorem2_appendix")


def largest_divisor_at_most(total: int, bound: float) -> int:
    """bound 이하인 total 의 가장 큰 약수 (최소 1)"""
    best = 1
    for candidate in range(1, int(math.floor(max(bound, 1.0))) + 1):
        if total % candidate == 0:
            best = candidate
    return best


def theorem1_parameters(T: int, m: int, L: float) -> dict:
    if L <= 0.0:
        raise BadConfig(f"smoothness constant must be positive, got {L}")
    return {
        "eta": 1.0 / (4.0 * L * math.sqrt(T)),
        "gamma": T ** (-5.0 / 8.0),
        "tau": largest_divisor_at_most(T, T**0.25 / math.sqrt(m)),
    }


def theorem2_parameters(T: int, L: float, mu: float) -> dict:
    if mu <= 0.0:
        raise BadConfig(
            "theorem2_appendix preset needs a strongly convex objective (mu > 0)"
        )
    if T < 2:
        raise BadConfig("theorem2_appendix preset needs T >= 2")
    return {
        "eta": 4.0 * math.log(T) / (mu * T),
        "gamma": 1.0 / L,
    }


def apply_preset(
    cfg: AlgoConfig,
    fed: Federation,
    preset: str,
    L: Optional[float] = None,
    mu: Optional[float] = None,
) -> AlgoConfig:
    """
    preset 으로 (η, γ, τ) 계산

    L, μ 미지정 시 federation 에서 추정
    """
    if preset == "none":
        return cfg
    if preset not in PRESETS:
        raise BadConfig(f"Unknown preset '{preset}'")

    L = smoothness_constant(fed) if L is None else L
    if preset == "theorem1":
        update = theorem1_parameters(cfg.T, cfg.m, L)
    else:
        mu = strong_convexity_constant(fed) if mu is None else mu
        update = theorem2_parameters(cfg.T, L, mu)

    logger.info(
        f"🎛️ Preset {preset}: L={L:.4g}, "
        + ", ".join(f"{k}={v:.4g}" for k, v in update.items())
    )
    return AlgoConfig.model_validate({**cfg.model_dump(), **update})
