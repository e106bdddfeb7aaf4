"""
Federation 데이터 모델
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from backend.app.core.exceptions import BadConfig, BadIndex
from backend.app.models.specs import ObjectiveSpec


@dataclass(frozen=True)
class ClientShard:
    """클라이언트 하나의 로컬 데이터 (n_i × d features, n_i labels)"""

    client_id: int
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64, copy=True)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.array(self.labels, dtype=np.float64, copy=True).reshape(-1)
        if x.shape[0] < 1:
            raise BadConfig(f"Client {self.client_id} has no samples")
        if y.shape[0] != x.shape[0]:
            raise BadConfig(
                f"Client {self.client_id}: "
                f"{x.shape[0]} feature rows vs {y.shape[0]} labels"
            )
        if not np.all(np.isfinite(x)):
            raise BadConfig(f"Client {self.client_id} has non-finite feature rows")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])


@dataclass(frozen=True)
class Federation:
    """N 개 client shard + 공통 목적 함수"""

    shards: tuple[ClientShard, ...]
    objective: ObjectiveSpec
    holdout: Optional[tuple[ClientShard, ...]] = None
    _design_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        shards = tuple(self.shards)
        if not shards:
            raise BadConfig("Federation needs at least one client")
        dims = {s.feature_dim for s in shards}
        if len(dims) != 1:
            raise BadConfig(
                f"All shards must share the feature dimension, got {sorted(dims)}"
            )
        object.__setattr__(self, "shards", shards)
        if self.holdout is not None:
            holdout = tuple(self.holdout)
            if len(holdout) != len(shards):
                raise BadConfig("Holdout split must have one shard per client")
            if {s.feature_dim for s in holdout} != dims:
                raise BadConfig("Holdout shards must share the feature dimension")
            object.__setattr__(self, "holdout", holdout)

    @property
    def n_clients(self) -> int:
        return len(self.shards)

    @property
    def feature_dim(self) -> int:
        return self.shards[0].feature_dim

    @property
    def param_dim(self) -> int:
        return self.objective.param_dim(self.feature_dim)

    def shard(self, i: int) -> ClientShard:
        if not 0 <= i < self.n_clients:
            raise BadIndex(f"Client index {i} out of range [0, {self.n_clients})")
        return self.shards[i]

    def design(self, i: int) -> np.ndarray:
        """목적 함수가 보는 design matrix (fit_intercept 이면 상수 열 추가)"""
        shard = self.shard(i)
        if not self.objective.fit_intercept or self.objective.kind == "quadratic":
            return shard.features
        cached = self._design_cache.get(i)
        if cached is None:
            cached = np.hstack([shard.features, np.ones((shard.n_samples, 1))])
            cached.setflags(write=False)
            self._design_cache[i] = cached
        return cached

    def with_shards(self, shards: tuple[ClientShard, ...]) -> "Federation":
        """같은 목적 함수로 다른 shard 집합 (holdout 평가용)"""
        return Federation(shards=shards, objective=self.objective)

    def holdout_federation(self) -> Optional["Federation"]:
        if self.holdout is None:
            return None
        return self.with_shards(self.holdout)
