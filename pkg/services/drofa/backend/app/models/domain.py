"""
핵심 값 타입

- ModelParams: primal iterate w (float64 벡터)
- MixtureWeights: dual iterate λ (N-simplex 위의 점)
- IterateAverager: 반환 해(ŵ, λ̂)를 만드는 running average
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from backend.app.core.exceptions import (
    DimensionMismatch,
    EmptyVector,
    NegativeEntry,
    NonFiniteInput,
    SumOutOfTolerance,
)

SIMPLEX_SUM_TOLERANCE = 1e-12

ArrayLike = Union[np.ndarray, Sequence[float]]


def _frozen_copy(raw: ArrayLike) -> np.ndarray:
    arr = np.array(raw, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModelParams:
    """primal 파라미터 w ∈ W"""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_copy(self.values)
        if arr.size == 0:
            raise EmptyVector("ModelParams must have dimension >= 1")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput("model parameters")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def zeros(cls, dim: int) -> "ModelParams":
        return cls(np.zeros(dim))

    def to_list(self) -> list[float]:
        return [float(x) for x in self.values]


@dataclass(frozen=True)
class MixtureWeights:
    """
    mixture weights λ ∈ Λ

    직접 생성하지 말고 validate_mixture() 또는 projection 결과를 사용
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_copy(self.values))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def uniform(cls, n: int) -> "MixtureWeights":
        if n < 1:
            raise EmptyVector("Simplex dimension must be >= 1")
        return validate_mixture(np.full(n, 1.0 / n))

    @classmethod
    def vertex(cls, n: int, index: int) -> "MixtureWeights":
        e = np.zeros(n)
        e[index] = 1.0
        return validate_mixture(e)

    def to_list(self) -> list[float]:
        return [float(x) for x in self.values]


def validate_mixture(raw: ArrayLike) -> MixtureWeights:
    """
    Λ feasibility 검증

    Raises:
        EmptyVector, NegativeEntry, SumOutOfTolerance
    """
    arr = np.asarray(raw, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise EmptyVector()
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("mixture weights")

    negative = np.flatnonzero(arr < 0.0)
    if negative.size:
        idx = int(negative[0])
        raise NegativeEntry(idx, float(arr[idx]))

    total = math.fsum(arr.tolist())
    if abs(total - 1.0) > SIMPLEX_SUM_TOLERANCE:
        raise SumOutOfTolerance(total, SIMPLEX_SUM_TOLERANCE)

    return MixtureWeights(arr)


def renormalize_exact(lam: np.ndarray) -> np.ndarray:
    """
    simplex 위의 점에서 합계 잔차를 가장 큰 원소에서 보정

    반복되는 stage 에서 tolerance drift 를 막기 위함
    """
    out = np.array(lam, dtype=np.float64, copy=True)
    out[out < 0.0] = 0.0
    residual = 1.0 - math.fsum(out.tolist())
    if residual != 0.0:
        top = int(np.argmax(out))
        out[top] += residual
    return out


@dataclass
class IterateAverager:
    """
    running average 누적기

    ŵ = (1/mT) ΣΣ w_i^(t), λ̂ = (1/S) Σ λ^(s), tail average 모두 여기서 계산
    """

    running_sum: Optional[np.ndarray] = None
    count: int = 0

    @property
    def empty(self) -> bool:
        return self.count == 0

    def _check_dim(self, x: np.ndarray) -> None:
        if self.running_sum is not None and x.shape[0] != self.running_sum.shape[0]:
            raise DimensionMismatch(self.running_sum.shape[0], x.shape[0])

    def push(self, x: ArrayLike) -> "IterateAverager":
        return self.push_sum(x, 1)

    def push_sum(self, total: ArrayLike, count: int) -> "IterateAverager":
        """이미 합산된 벡터(count 개의 합)를 한 번에 누적"""
        vec = np.asarray(total, dtype=np.float64).reshape(-1)
        self._check_dim(vec)
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        if count == 0:
            return self
        if self.running_sum is None:
            self.running_sum = vec.copy()
        else:
            self.running_sum = self.running_sum + vec
        self.count += count
        return self

    def mean(self) -> np.ndarray:
        if self.count == 0 or self.running_sum is None:
            raise EmptyVector("IterateAverager has no pushed vectors")
        return self.running_sum / self.count


def averager_push(acc: IterateAverager, x: ArrayLike) -> IterateAverager:
    """누적기에 벡터 하나를 추가하고 같은 누적기를 반환"""
    return acc.push(x)


def averaged_mixture(acc: IterateAverager) -> MixtureWeights:
    """λ 누적 평균을 MixtureWeights 로 변환 (평균은 simplex 위에 있음)"""
    return validate_mixture(renormalize_exact(acc.mean()))


def stack_mean(vectors: Iterable[np.ndarray]) -> np.ndarray:
    """고정된 순서(draw 순서)로 평균"""
    stacked = np.stack([np.asarray(v, dtype=np.float64) for v in vectors])
    return stacked.sum(axis=0) / stacked.shape[0]
