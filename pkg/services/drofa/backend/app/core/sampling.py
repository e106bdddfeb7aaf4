"""
무작위 선택 (client 샘플링, snapshot step, minibatch)

모든 stream 은 (seed, purpose, round, client_id, slot) 의 순수 함수
실행 순서와 무관하게 같은 샘플을 재현
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np

from backend.app.core.exceptions import BadConfig
from backend.app.models.domain import MixtureWeights
from backend.app.models.federation import ClientShard

logger = logging.getLogger(__name__)


class StreamPurpose(str, Enum):
    DEVICE_SELECT = "device_select"
    UNIFORM_SELECT = "uniform_select"
    SNAPSHOT = "snapshot"
    MINIBATCH = "minibatch"
    PROBE_BATCH = "probe_batch"
    DATA_GEN = "data_gen"

    @property
    def code(self) -> int:
        return _PURPOSE_CODES[self]


_PURPOSE_CODES = {purpose: idx for idx, purpose in enumerate(StreamPurpose)}


@dataclass(frozen=True)
class RngStream:
    """counter-based random stream 식별자"""

    seed: int
    purpose: StreamPurpose
    round: int = 0
    client_id: Optional[int] = None
    slot: int = 0

    def __post_init__(self):
        if self.seed < 0:
            raise BadConfig(f"seed must be >= 0, got {self.seed}")
        if self.round < 0 or self.slot < 0:
            raise BadConfig("stream round and slot must be >= 0")

    @property
    def key(self) -> tuple:
        client = 0 if self.client_id is None else self.client_id + 1
        return (self.purpose.code, self.round, client, self.slot)

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(sequence))


@dataclass(frozen=True)
class StreamFactory:
    """한 seed 에 대한 용도별 stream 생성기"""

    seed: int

    def device_select(self, stage: int) -> RngStream:
        return RngStream(self.seed, StreamPurpose.DEVICE_SELECT, stage)

    def uniform_select(self, stage: int) -> RngStream:
        return RngStream(self.seed, StreamPurpose.UNIFORM_SELECT, stage)

    def snapshot(self, stage: int) -> RngStream:
        return RngStream(self.seed, StreamPurpose.SNAPSHOT, stage)

    def minibatch(self, stage: int, client_id: int, slot: int) -> RngStream:
        return RngStream(self.seed, StreamPurpose.MINIBATCH, stage, client_id, slot)

    def probe_batch(self, stage: int, client_id: int, slot: int) -> RngStream:
        return RngStream(self.seed, StreamPurpose.PROBE_BATCH, stage, client_id, slot)

    def data_gen(self, client_id: Optional[int] = None, slot: int = 0) -> RngStream:
        return RngStream(self.seed, StreamPurpose.DATA_GEN, 0, client_id, slot)


def _check_count(m: int) -> None:
    if m < 1:
        raise BadConfig(f"number of sampled clients must be >= 1, got {m}")


def sample_clients_weighted(lam: MixtureWeights, m: int, rng: RngStream) -> List[int]:
    """λ 에 따른 m 번의 독립 categorical draw (중복 허용, draw 순서 유지)"""
    _check_count(m)
    draws = rng.generator().choice(lam.n, size=m, replace=True, p=lam.values)
    return [int(i) for i in draws]


def sample_clients_uniform(n_clients: int, m: int, rng: RngStream) -> List[int]:
    _check_count(m)
    if n_clients < 1:
        raise BadConfig("federation has no clients")
    draws = rng.generator().integers(0, n_clients, size=m)
    return [int(i) for i in draws]


def sample_snapshot_step(tau: int, rng: RngStream) -> int:
    """{1, ..., τ} 에서 균등 추출한 local step offset k′"""
    if tau < 1:
        raise BadConfig(f"tau must be >= 1, got {tau}")
    return int(rng.generator().integers(1, tau + 1))


def draw_minibatch(shard: ClientShard, b: int, rng: RngStream) -> np.ndarray:
    """shard 인덱스 b 개 (복원 추출)"""
    if b < 1:
        raise BadConfig(f"batch size must be >= 1, got {b}")
    return rng.generator().integers(0, shard.n_samples, size=b)


def draw_minibatches(
    shard: ClientShard, b: int, steps: int, rng: RngStream
) -> np.ndarray:
    """local window 전체의 minibatch (steps × b), 한 stream 에서 순서대로"""
    if b < 1:
        raise BadConfig(f"batch size must be >= 1, got {b}")
    return rng.generator().integers(0, shard.n_samples, size=(steps, b))
