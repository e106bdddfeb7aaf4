"""
quadratic federation 의 saddle point 기준 해

f_i(w) = (μ/2)‖w - c_i‖² + s_i + (l2/2)‖w‖²,  F(w, λ) = Σ λ_i f_i(w) + g(λ)

- w*(λ): 가중 중심 (닫힌 형태, W 위 projection)
- λ*: Euclidean / none g 는 dual 함수 D(λ) 의 projected gradient ascent,
      KL g 는 log-space best response (softmax) 의 감쇠 반복
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.special import softmax, xlogy

from backend.app.core.exceptions import BadConfig, NoConvergence, WrongObjectiveKind
from backend.app.models.federation import Federation
from backend.app.models.specs import PrimalDomainSpec, RegularizerSpec
from backend.app.oracle.grid import grid_max_over_simplex
from backend.app.oracle.projection import brute_force_simplex_projection

logger = logging.getLogger(__name__)

MAX_ORACLE_CLIENTS = 8
MAX_ORACLE_DIM = 4
ORACLE_TOLERANCE = 1e-12
ORACLE_MAX_ITER = 100_000
_KL_DAMPING = 0.5


@dataclass(frozen=True)
class SaddleProblem:
    """작은 (N <= 8, d <= 4) strongly convex quadratic saddle 문제"""

    centers: np.ndarray
    curvature: float
    regularizer: RegularizerSpec
    l2_term: float = 0.0
    offsets: Optional[np.ndarray] = None
    domain: PrimalDomainSpec = PrimalDomainSpec()

    def __post_init__(self):
        centers = np.array(self.centers, dtype=np.float64, copy=True)
        if centers.ndim != 2:
            raise BadConfig("centers must be an N × d matrix")
        n, d = centers.shape
        if not (1 <= n <= MAX_ORACLE_CLIENTS and 1 <= d <= MAX_ORACLE_DIM):
            raise BadConfig(
                f"oracle problems need N <= {MAX_ORACLE_CLIENTS}, "
                f"d <= {MAX_ORACLE_DIM}"
            )
        if not self.curvature > 0.0:
            raise BadConfig("curvature must be positive")
        offsets = np.zeros(n)
        if self.offsets is not None:
            offsets = np.asarray(self.offsets, dtype=np.float64)
        if offsets.shape != (n,):
            raise BadConfig("offsets must have one entry per client")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "offsets", offsets)

    @property
    def n_clients(self) -> int:
        return int(self.centers.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centers.shape[1])

    @classmethod
    def from_federation(
        cls,
        fed: Federation,
        regularizer: RegularizerSpec,
        domain: Optional[PrimalDomainSpec] = None,
    ) -> "SaddleProblem":
        """quadratic federation 의 shard 평균과 분산으로 문제 구성"""
        objective = fed.objective
        if objective.kind != "quadratic":
            raise WrongObjectiveKind("saddle oracle needs a quadratic federation")
        centers, offsets = [], []
        for shard in fed.shards:
            center = shard.features.mean(axis=0)
            spread = np.sum((shard.features - center) ** 2, axis=1).mean()
            centers.append(center)
            offsets.append(0.5 * objective.curvature * spread)
        return cls(
            centers=np.array(centers),
            curvature=objective.curvature,
            regularizer=regularizer,
            l2_term=objective.l2_term,
            offsets=np.array(offsets),
            domain=domain or PrimalDomainSpec(),
        )

    # =========================================================================
    # 목적 함수
    # =========================================================================

    def losses(self, w: np.ndarray) -> np.ndarray:
        diff = w[np.newaxis, :] - self.centers
        return (
            0.5 * self.curvature * np.sum(diff * diff, axis=1)
            + self.offsets
            + 0.5 * self.l2_term * float(w @ w)
        )

    def regularizer_value(self, lam: np.ndarray) -> float:
        g = self.regularizer
        n = lam.shape[0]
        if g.kind == "none":
            return 0.0
        if g.kind == "quadratic_to_uniform":
            return -0.5 * g.strength * float(np.sum((lam - 1.0 / n) ** 2))
        return -g.strength * float(np.sum(xlogy(lam, n * lam)))

    def regularizer_grad(self, lam: np.ndarray) -> np.ndarray:
        g = self.regularizer
        n = lam.shape[0]
        if g.kind == "none":
            return np.zeros(n)
        if g.kind == "quadratic_to_uniform":
            return -g.strength * (lam - 1.0 / n)
        return -g.strength * (np.log(n * np.maximum(lam, 1e-300)) + 1.0)

    def value(self, w: np.ndarray, lam: np.ndarray) -> float:
        return float(lam @ self.losses(w)) + self.regularizer_value(lam)

    def best_w(self, lam: np.ndarray) -> np.ndarray:
        """argmin_w F(w, λ)"""
        mu = self.curvature
        w = mu * (lam @ self.centers) / (mu + self.l2_term)
        if self.domain.kind == "l2_ball":
            norm = float(np.linalg.norm(w))
            if norm > self.domain.radius:
                w = w * (self.domain.radius / norm)
        return w

    def dual_smoothness(self) -> float:
        mu = self.curvature
        spectral = float(np.linalg.norm(self.centers, ord=2)) ** 2
        strength = 0.0 if self.regularizer.is_none else self.regularizer.strength
        return strength + mu * mu / (mu + self.l2_term) * spectral

    def primal_residual(self, w: np.ndarray, lam: np.ndarray) -> float:
        """‖w - Π_W(w - ∇_w F / (μ + l2))‖"""
        total = self.curvature + self.l2_term
        grad = self.curvature * (w - lam @ self.centers) + self.l2_term * w
        moved = w - grad / total
        if self.domain.kind == "l2_ball":
            norm = float(np.linalg.norm(moved))
            if norm > self.domain.radius:
                moved = moved * (self.domain.radius / norm)
        return float(np.linalg.norm(w - moved))

    def dual_residual(self, w: np.ndarray, lam: np.ndarray, step: float) -> float:
        grad = self.losses(w) + self.regularizer_grad(lam)
        moved = brute_force_simplex_projection(lam + step * grad)
        return float(np.linalg.norm(lam - moved))


@dataclass(frozen=True)
class SaddleSolution:
    w_star: np.ndarray
    lambda_star: np.ndarray
    phi_star: float
    residuals: Dict[str, float]
    iterations: int


def _dual_ascent_step(p: SaddleProblem, lam: np.ndarray, step: float) -> np.ndarray:
    w = p.best_w(lam)
    grad = p.losses(w) + p.regularizer_grad(lam)
    return brute_force_simplex_projection(lam + step * grad)


def _kl_best_response_step(p: SaddleProblem, lam: np.ndarray) -> np.ndarray:
    w = p.best_w(lam)
    response = softmax(p.losses(w) / p.regularizer.strength)
    return (1.0 - _KL_DAMPING) * lam + _KL_DAMPING * response


def saddle_point_oracle(
    p: SaddleProblem,
    tolerance: float = ORACLE_TOLERANCE,
    max_iter: int = ORACLE_MAX_ITER,
) -> SaddleSolution:
    """
    교대 best response 로 saddle point 계산

    Raises:
        NoConvergence: 잔차가 tolerance 이하로 내려가지 않음
    """
    n = p.n_clients
    lam = np.full(n, 1.0 / n)
    step = 1.0 / max(p.dual_smoothness(), 1e-12)
    residuals = {"primal": math.inf, "dual": math.inf}

    for iteration in range(1, max_iter + 1):
        if p.regularizer.kind == "kl_to_uniform":
            nxt = _kl_best_response_step(p, lam)
        else:
            nxt = _dual_ascent_step(p, lam, step)
        change = float(np.linalg.norm(nxt - lam))
        lam = nxt

        if change < tolerance:
            w = p.best_w(lam)
            residuals = {
                "primal": p.primal_residual(w, lam),
                "dual": p.dual_residual(w, lam, step),
            }
            if max(residuals.values()) < max(tolerance, 1e3 * np.finfo(float).eps):
                return SaddleSolution(
                    w_star=w,
                    lambda_star=lam,
                    phi_star=p.value(w, lam),
                    residuals=residuals,
                    iterations=iteration,
                )

    w = p.best_w(lam)
    residuals = {
        "primal": p.primal_residual(w, lam),
        "dual": p.dual_residual(w, lam, step),
    }
    logger.error(f"❌ Saddle oracle did not converge: {residuals}")
    raise NoConvergence(residuals, max_iter)


def oracle_gap(
    p: SaddleProblem, w: np.ndarray, lam: np.ndarray, resolution: float = 1e-6
) -> float:
    """
    max_λ F(w, λ) - min_w F(w, λ)

    min: 닫힌 형태 w*(λ), max: g = none 이면 vertex, 아니면 grid (N <= 3)
    """
    losses = p.losses(np.asarray(w, dtype=np.float64))
    if p.regularizer.is_none:
        upper = float(losses.max())
    else:
        upper, _ = grid_max_over_simplex(losses, p.regularizer, resolution)
    lam = np.asarray(lam, dtype=np.float64)
    lower = p.value(p.best_w(lam), lam)
    return upper - lower
