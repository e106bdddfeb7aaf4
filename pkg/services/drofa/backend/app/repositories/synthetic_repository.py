"""
합성 federation 생성

- make_synthetic_federation: client 별 Gaussian cluster (one class per client / mixed)
- make_quadratic_federation: client 중심 c_i 를 갖는 quadratic 테스트 문제
"""
import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np

from backend.app.core.exceptions import BadConfig
from backend.app.core.sampling import StreamFactory
from backend.app.models.federation import ClientShard, Federation
from backend.app.models.specs import ObjectiveSpec
from backend.app.repositories.base import FederationRepository
from backend.app.schemas.config import QuadraticFederationSpec, SyntheticFederationSpec

logger = logging.getLogger(__name__)

TRAIN_SLOT = 0
HOLDOUT_SLOT = 1


def _client_sizes(
    samples_per_client: Union[int, Sequence[int]], n_clients: int
) -> List[int]:
    if isinstance(samples_per_client, int):
        sizes = [samples_per_client] * n_clients
    else:
        sizes = [int(n) for n in samples_per_client]
    if len(sizes) != n_clients:
        raise BadConfig(f"Expected {n_clients} client sizes, got {len(sizes)}")
    if any(n < 1 for n in sizes):
        raise BadConfig("Every client needs at least one sample")
    return sizes


def cluster_means(
    n_clients: int, dim: int, radius: float, streams: StreamFactory
) -> np.ndarray:
    """
    client 별 cluster 중심 (반지름 radius 위)

    d=1: 선분 [-r, r] 위 등간격, d=2: 원 위 등각, d>=3: 무작위 방향
    """
    if dim == 1:
        return np.linspace(-radius, radius, n_clients).reshape(-1, 1)
    if dim == 2:
        angles = 2.0 * math.pi * np.arange(n_clients) / n_clients
        return radius * np.column_stack([np.cos(angles), np.sin(angles)])

    directions = streams.data_gen().generator().standard_normal((n_clients, dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    return radius * directions / norms


def _n_labels(objective: ObjectiveSpec) -> int:
    return objective.heads if objective.heads > 1 else 2


def _draw_shard(
    client_id: int,
    size: int,
    means: np.ndarray,
    std: float,
    alpha: float,
    n_labels: int,
    generator: np.random.Generator,
) -> ClientShard:
    n_clusters = means.shape[0]
    clusters = np.full(size, client_id, dtype=np.intp)
    if alpha > 0.0:
        blended = generator.random(size) < alpha
        clusters[blended] = generator.integers(0, n_clusters, size=int(blended.sum()))

    noise = generator.standard_normal((size, means.shape[1]))
    features = means[clusters] + std * noise
    labels = (clusters % n_labels).astype(np.float64)
    return ClientShard(client_id=client_id, features=features, labels=labels)


def make_synthetic_federation(
    n_clients: int,
    dim: int,
    samples_per_client: Union[int, Sequence[int]] = 100,
    heterogeneity: str = "one_class_per_client",
    alpha: float = 0.0,
    seed: int = 0,
    objective: Optional[ObjectiveSpec] = None,
    cluster_radius: float = 3.0,
    cluster_std: float = 1.0,
    holdout_per_client: int = 0,
) -> Federation:
    """
    heterogeneous 합성 federation

    one_class_per_client: client i 의 샘플은 모두 cluster i (label = i mod n_classes)
    mixed(α): 각 샘플이 확률 α 로 임의 cluster 에서 추출

    Raises:
        BadConfig
    """
    if n_clients < 1 or dim < 1:
        raise BadConfig(f"n_clients and dim must be >= 1, got {n_clients}, {dim}")
    if heterogeneity not in ("one_class_per_client", "mixed"):
        raise BadConfig(f"Unknown heterogeneity '{heterogeneity}'")
    if heterogeneity == "one_class_per_client":
        alpha = 0.0
    elif not 0.0 <= alpha <= 1.0:
        raise BadConfig(f"alpha must lie in [0, 1], got {alpha}")

    objective = objective or ObjectiveSpec(kind="logistic_regression")
    sizes = _client_sizes(samples_per_client, n_clients)
    streams = StreamFactory(seed)
    means = cluster_means(n_clients, dim, cluster_radius, streams)
    n_labels = _n_labels(objective)

    shards = tuple(
        _draw_shard(
            i, sizes[i], means, cluster_std, alpha, n_labels,
            streams.data_gen(i, TRAIN_SLOT).generator(),
        )
        for i in range(n_clients)
    )

    holdout = None
    if holdout_per_client > 0:
        holdout = tuple(
            _draw_shard(
                i, holdout_per_client, means, cluster_std, alpha, n_labels,
                streams.data_gen(i, HOLDOUT_SLOT).generator(),
            )
            for i in range(n_clients)
        )

    logger.debug(
        f"Synthetic federation: N={n_clients}, d={dim}, {heterogeneity}, "
        f"alpha={alpha}, sizes={sizes}"
    )
    return Federation(shards=shards, objective=objective, holdout=holdout)


def make_quadratic_federation(
    centers: Sequence[Sequence[float]],
    samples_per_client: int = 1,
    noise: float = 0.0,
    seed: int = 0,
    objective: Optional[ObjectiveSpec] = None,
) -> Federation:
    """
    quadratic 테스트 federation

    per-sample loss (μ/2)‖w - x‖², 샘플은 평균이 정확히 c_i 가 되도록 재중심화
    """
    objective = objective or ObjectiveSpec(kind="quadratic")
    if objective.kind != "quadratic":
        raise BadConfig("make_quadratic_federation requires a quadratic objective")
    if samples_per_client < 1:
        raise BadConfig("samples_per_client must be >= 1")

    center_array = np.asarray(centers, dtype=np.float64)
    if center_array.ndim != 2 or center_array.shape[0] < 1:
        raise BadConfig("centers must be a nonempty list of equal-length vectors")

    streams = StreamFactory(seed)
    shards = []
    for i, center in enumerate(center_array):
        offsets = np.zeros((samples_per_client, center.shape[0]))
        if noise > 0.0 and samples_per_client > 1:
            rng = streams.data_gen(i, TRAIN_SLOT).generator()
            z = rng.standard_normal(offsets.shape)
            offsets = noise * (z - z.mean(axis=0))
        shards.append(
            ClientShard(
                client_id=i,
                features=center[np.newaxis, :] + offsets,
                labels=np.zeros(samples_per_client),
            )
        )
    return Federation(shards=tuple(shards), objective=objective)


class SyntheticFederationRepository(FederationRepository):
    def __init__(self, spec: SyntheticFederationSpec):
        self.spec = spec

    def build(self, seed: int) -> Federation:
        spec = self.spec
        return make_synthetic_federation(
            n_clients=spec.n_clients,
            dim=spec.dim,
            samples_per_client=spec.samples_per_client,
            heterogeneity=spec.heterogeneity,
            alpha=spec.alpha,
            seed=seed if spec.data_seed is None else spec.data_seed,
            objective=spec.objective,
            cluster_radius=spec.cluster_radius,
            cluster_std=spec.cluster_std,
            holdout_per_client=spec.holdout_per_client,
        )

    @property
    def seed_dependent(self) -> bool:
        return self.spec.data_seed is None


class QuadraticFederationRepository(FederationRepository):
    def __init__(self, spec: QuadraticFederationSpec):
        self.spec = spec

    def build(self, seed: int) -> Federation:
        spec = self.spec
        return make_quadratic_federation(
            centers=spec.centers,
            samples_per_client=spec.samples_per_client,
            noise=spec.noise,
            seed=seed if spec.data_seed is None else spec.data_seed,
            objective=spec.objective,
        )

    @property
    def seed_dependent(self) -> bool:
        return self.spec.data_seed is None and self.spec.noise > 0.0
