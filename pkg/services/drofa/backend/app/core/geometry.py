"""
W, Λ 위로의 projection 과 simplex proximal step

- project_simplex: sort-threshold Euclidean projection
- project_primal: unconstrained / l2 ball
- prox_simplex: argmax_u τ g(u) - (1/2γ)‖anchor - u‖²
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import wrightomega

from backend.app.core.exceptions import (
    BadConfig,
    EmptyVector,
    NonFiniteInput,
    SolverNoConvergence,
)
from backend.app.models.domain import (
    ArrayLike,
    MixtureWeights,
    ModelParams,
    renormalize_exact,
    validate_mixture,
)
from backend.app.models.specs import PrimalDomainSpec, RegularizerSpec

logger = logging.getLogger(__name__)

KL_FLOOR = 1e-300
PROX_MAX_ITER = 200
PROX_KKT_TOLERANCE = 1e-10


def _finite_vector(v: ArrayLike, what: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise EmptyVector(f"{what} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(what)
    return arr


# =============================================================================
# Projection
# =============================================================================


def project_simplex(v: ArrayLike) -> MixtureWeights:
    """
    Λ 위로의 Euclidean projection

    내림차순 정렬 후 threshold θ 를 구해 max(v - θ, 0)
    threshold 는 값에만 의존하므로 동률 순서와 무관

    Raises:
        NonFiniteInput
    """
    arr = _finite_vector(v, "projection input")
    n = arr.shape[0]

    desc = np.sort(arr, kind="stable")[::-1]
    cumulative = np.cumsum(desc) - 1.0
    ranks = np.arange(1, n + 1)
    support = np.flatnonzero(desc - cumulative / ranks > 0.0)
    rho = int(support[-1]) if support.size else 0
    theta = cumulative[rho] / (rho + 1)

    out = np.maximum(arr - theta, 0.0)
    return validate_mixture(renormalize_exact(out))


def project_primal(
    w: ArrayLike, spec: Optional[PrimalDomainSpec] = None
) -> ModelParams:
    """
    W 위로의 projection

    unconstrained: identity, l2_ball(r): w · min(1, r/‖w‖)
    """
    arr = _finite_vector(w, "primal iterate")
    if spec is None or spec.kind == "unconstrained":
        return ModelParams(arr)

    norm = float(np.linalg.norm(arr))
    if norm > spec.radius:
        arr = arr * (spec.radius / norm)
    return ModelParams(arr)


def dual_anchor(
    lam: MixtureWeights, v: np.ndarray, tau: int, gamma: float
) -> np.ndarray:
    """λ + τγ v (DRFA step 과 prox step 이 같은 연산 순서를 공유)"""
    return lam.values + tau * gamma * np.asarray(v, dtype=np.float64)


# =============================================================================
# Proximal step
# =============================================================================


@dataclass(frozen=True)
class ProxProblem:
    """prox_simplex 입력 (anchor = λ + γτv, step = γ, scale = τ)"""

    anchor: np.ndarray
    step: float
    scale: float
    regularizer: RegularizerSpec

    def __post_init__(self):
        anchor = _finite_vector(self.anchor, "prox anchor")
        anchor.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)
        if not (self.step > 0.0 and math.isfinite(self.step)):
            raise BadConfig(f"prox step must be positive and finite, got {self.step}")
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise BadConfig(f"prox scale must be positive and finite, got {self.scale}")

    @property
    def n(self) -> int:
        return int(self.anchor.shape[0])


def _regularizer_grad(g: RegularizerSpec, u: np.ndarray) -> np.ndarray:
    n = u.shape[0]
    if g.kind == "none":
        return np.zeros(n)
    if g.kind == "quadratic_to_uniform":
        return -g.strength * (u - 1.0 / n)
    return -g.strength * (np.log(n * np.maximum(u, KL_FLOOR)) + 1.0)


def prox_kkt_residual(p: ProxProblem, u: ArrayLike) -> float:
    """
    prox 목적 함수의 projected-gradient 잔차

    step γ 에서 u ↦ Π_Λ(u + γ ∇obj(u)) = Π_Λ(anchor + γτ ∇g(u))
    """
    point = np.asarray(u, dtype=np.float64).reshape(-1)
    moved = p.anchor + p.step * p.scale * _regularizer_grad(p.regularizer, point)
    return float(np.linalg.norm(point - project_simplex(moved).values))


def _kl_coordinates(anchor: np.ndarray, kappa: float, shift: float) -> np.ndarray:
    # 정상성 조건 u + κ ln(N u) = a - κ - s 의 좌표별 해
    n = anchor.shape[0]
    argument = (anchor - kappa - shift) / kappa - math.log(n * kappa)
    return kappa * np.real(wrightomega(argument))


def _prox_kl(p: ProxProblem) -> np.ndarray:
    kappa = p.step * p.scale * p.regularizer.strength

    def excess(shift: float) -> float:
        return math.fsum(_kl_coordinates(p.anchor, kappa, shift).tolist()) - 1.0

    # excess 는 shift 에 대해 단조 감소
    lo = hi = float(np.mean(p.anchor))
    width = 1.0
    for _ in range(PROX_MAX_ITER):
        if excess(lo) > 0.0:
            break
        lo -= width
        width *= 2.0
    else:
        raise SolverNoConvergence(abs(excess(lo)), PROX_MAX_ITER)

    width = 1.0
    for _ in range(PROX_MAX_ITER):
        if excess(hi) < 0.0:
            break
        hi += width
        width *= 2.0
    else:
        raise SolverNoConvergence(abs(excess(hi)), PROX_MAX_ITER)

    shift, info = brentq(
        excess, lo, hi, xtol=1e-15, maxiter=PROX_MAX_ITER, full_output=True, disp=False
    )
    if not info.converged:
        raise SolverNoConvergence(abs(excess(shift)), info.iterations)

    u = np.maximum(_kl_coordinates(p.anchor, kappa, shift), KL_FLOOR)
    return u / math.fsum(u.tolist())


def prox_simplex(p: ProxProblem) -> MixtureWeights:
    """
    argmax_{u∈Λ} τ g(u) - (1/2γ)‖anchor - u‖²

    - none: project_simplex(anchor)
    - quadratic_to_uniform: closed form projection
    - kl_to_uniform: normalization multiplier 에 대한 scalar root finding

    Raises:
        SolverNoConvergence, NonFiniteInput
    """
    g = p.regularizer

    if g.kind == "none":
        return project_simplex(p.anchor)

    if g.kind == "quadratic_to_uniform":
        weight = p.scale * g.strength
        uniform = np.full(p.n, 1.0 / p.n)
        center = (p.anchor / p.step + weight * uniform) / (1.0 / p.step + weight)
        return project_simplex(center)

    u = _prox_kl(p)
    result = validate_mixture(renormalize_exact(u))

    residual = prox_kkt_residual(p, result.values)
    if residual > PROX_KKT_TOLERANCE:
        logger.warning(
            f"⚠️ KL prox KKT residual {residual:.3e} above {PROX_KKT_TOLERANCE:g}"
        )
    return result
