"""
로컬 목적 함수 f_i 와 dual regularizer g(λ)

모든 평가는 순수 함수이며 Federation 은 읽기 전용으로만 사용
"""
import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit, xlogy

from backend.app.core.exceptions import (
    BadIndex,
    BoundaryKL,
    DimensionMismatch,
    NonFiniteGradient,
    NonFiniteLoss,
)
from backend.app.models.domain import MixtureWeights
from backend.app.models.federation import Federation
from backend.app.models.specs import ObjectiveSpec, RegularizerSpec

logger = logging.getLogger(__name__)

# 전체 샘플 사용 표시
FULL = None

Batch = Optional[Union[np.ndarray, Sequence[int]]]

# sup |d²/dz² (σ(z) - y)²| for y ∈ [0, 1]
_SIGMOID_SQUARED_CURVATURE = 0.32


def _batch_view(fed: Federation, i: int, batch: Batch) -> Tuple[np.ndarray, np.ndarray]:
    design = fed.design(i)
    labels = fed.shard(i).labels
    if batch is None:
        return design, labels

    idx = np.asarray(batch, dtype=np.intp).reshape(-1)
    n_i = design.shape[0]
    if idx.size == 0:
        raise BadIndex(f"Empty batch for client {i}")
    if idx.min() < 0 or idx.max() >= n_i:
        raise BadIndex(f"Batch index out of range for client {i} (n_i={n_i})")
    return design[idx], labels[idx]


def _check_params(fed: Federation, w: np.ndarray) -> np.ndarray:
    vec = np.asarray(w, dtype=np.float64).reshape(-1)
    if vec.shape[0] != fed.param_dim:
        raise DimensionMismatch(fed.param_dim, vec.shape[0])
    return vec


def _one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    classes = labels.astype(np.intp)
    out = np.zeros((classes.shape[0], n_classes))
    out[np.arange(classes.shape[0]), classes] = 1.0
    return out


def per_sample_losses(
    objective: ObjectiveSpec, w: np.ndarray, x: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """샘플별 loss (l2 항 제외)"""
    if objective.kind == "quadratic":
        diff = w[np.newaxis, :] - x
        return 0.5 * objective.curvature * np.einsum("ij,ij->i", diff, diff)

    if objective.kind == "logistic_regression":
        if objective.heads == 1:
            z = x @ w
            return np.logaddexp(0.0, z) - y * z
        weights = w.reshape(objective.heads, -1)
        z = x @ weights.T
        targets = _one_hot(y, objective.heads)
        return np.sum(np.logaddexp(0.0, z) - targets * z, axis=1)

    # sigmoid_nonconvex
    residual = expit(x @ w) - y
    return residual * residual


def scores(objective: ObjectiveSpec, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """분류용 score (binary: ⟨w,x⟩, one-vs-rest: head 별 score 행렬)"""
    if objective.heads == 1:
        return x @ w
    return x @ w.reshape(objective.heads, -1).T


def eval_loss(fed: Federation, i: int, w: np.ndarray, batch: Batch = FULL) -> float:
    """
    client i 의 batch 평균 loss

    Args:
        fed: Federation
        i: client index
        w: 모델 파라미터
        batch: 인덱스 multiset (FULL 이면 전체 n_i 샘플)

    Raises:
        BadIndex, NonFiniteLoss
    """
    vec = _check_params(fed, w)
    x, y = _batch_view(fed, i, batch)
    losses = per_sample_losses(fed.objective, vec, x, y)

    # 보상 합산: FULL 평균이 singleton 평균과 일치하도록
    value = math.fsum(losses.tolist()) / losses.shape[0]
    if fed.objective.l2_term > 0.0:
        value += 0.5 * fed.objective.l2_term * math.fsum((vec * vec).tolist())

    if not math.isfinite(value):
        raise NonFiniteLoss(i)
    return value


def eval_grad(
    fed: Federation, i: int, w: np.ndarray, batch: Batch = FULL
) -> np.ndarray:
    """
    client i 의 batch 평균 loss gradient

    Raises:
        BadIndex, NonFiniteGradient
    """
    objective = fed.objective
    vec = _check_params(fed, w)
    x, y = _batch_view(fed, i, batch)
    b = x.shape[0]

    if objective.kind == "quadratic":
        grad = objective.curvature * (vec - x.mean(axis=0))
    elif objective.kind == "logistic_regression":
        if objective.heads == 1:
            grad = x.T @ (expit(x @ vec) - y) / b
        else:
            weights = vec.reshape(objective.heads, -1)
            residual = expit(x @ weights.T) - _one_hot(y, objective.heads)
            grad = (residual.T @ x / b).reshape(-1)
    else:
        s = expit(x @ vec)
        grad = x.T @ (2.0 * (s - y) * s * (1.0 - s)) / b

    if objective.l2_term > 0.0:
        grad = grad + objective.l2_term * vec

    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient(i)
    return grad


def all_losses(fed: Federation, w: np.ndarray) -> np.ndarray:
    """모든 client 의 FULL-batch loss [f_1(w), ..., f_N(w)]"""
    return np.array([eval_loss(fed, i, w, FULL) for i in range(fed.n_clients)])


def all_grads(fed: Federation, w: np.ndarray) -> np.ndarray:
    """모든 client 의 FULL-batch gradient (N × p)"""
    return np.stack([eval_grad(fed, i, w, FULL) for i in range(fed.n_clients)])


def eval_regularizer(
    g: RegularizerSpec, lam: MixtureWeights
) -> Tuple[float, np.ndarray]:
    """
    g(λ) 값과 gradient

    - quadratic_to_uniform: -(μ_λ/2)‖λ - u‖²
    - kl_to_uniform: -ρ Σ λ_i ln(N λ_i)

    Raises:
        BoundaryKL: kl 에서 λ_i == 0
    """
    values = lam.values
    n = values.shape[0]

    if g.kind == "none":
        return 0.0, np.zeros(n)

    if g.kind == "quadratic_to_uniform":
        diff = values - 1.0 / n
        value = -0.5 * g.strength * math.fsum((diff * diff).tolist())
        return value, -g.strength * diff

    zero = np.flatnonzero(values <= 0.0)
    if zero.size:
        raise BoundaryKL(int(zero[0]))
    log_ratio = np.log(n * values)
    value = -g.strength * math.fsum(xlogy(values, n * values).tolist())
    return value, -g.strength * (log_ratio + 1.0)


def smoothness_constant(fed: Federation) -> float:
    """
    f_i 의 smoothness 상수 L 추정 (모든 client 중 최대)

    logistic: λ_max(XᵀX / n_i) / 4 + l2_term
    """
    objective = fed.objective
    if objective.kind == "quadratic":
        return objective.curvature + objective.l2_term

    factor = _SIGMOID_SQUARED_CURVATURE
    if objective.kind == "logistic_regression":
        factor = 0.25
    top = 0.0
    for i in range(fed.n_clients):
        design = fed.design(i)
        gram = design.T @ design / design.shape[0]
        top = max(top, float(np.linalg.eigvalsh(gram)[-1]))
    return factor * top + objective.l2_term


def strong_convexity_constant(fed: Federation) -> float:
    """f_i 의 strong convexity 상수 μ (logistic/sigmoid 는 l2_term 만)"""
    objective = fed.objective
    if objective.kind == "quadratic":
        return objective.curvature + objective.l2_term
    return objective.l2_term
