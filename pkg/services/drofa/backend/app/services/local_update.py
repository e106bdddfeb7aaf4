"""
client local window: τ 번의 projected SGD step
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from backend.app.core.exceptions import NonFiniteGradient, NonFiniteIterate
from backend.app.core.geometry import project_primal
from backend.app.core.objectives import FULL, eval_grad
from backend.app.core.sampling import RngStream, draw_minibatches
from backend.app.models.domain import ModelParams
from backend.app.models.federation import Federation
from backend.app.models.specs import PrimalDomainSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocalWindowResult:
    """
    w_end: τ step 후 iterate
    w_snapshot: k′ step 후 iterate
    iterate_sum: τ 개 post-update iterate 의 합 (ŵ 누적용)
    tail_sum / tail_count: local step k >= tail_from 인 iterate 의 합과 개수
    """

    w_end: ModelParams
    w_snapshot: ModelParams
    iterate_sum: np.ndarray
    tail_sum: np.ndarray
    tail_count: int


def run_local_window(
    fed: Federation,
    i: int,
    w_start: ModelParams,
    eta: float,
    tau: int,
    k_prime: int,
    spec: Optional[PrimalDomainSpec] = None,
    rng: Optional[RngStream] = None,
    batch_size: Optional[int] = None,
    tail_from: Optional[int] = None,
) -> LocalWindowResult:
    """
    w_{k+1} = Π_W(w_k - η ∇f_i(w_k; ξ_k)),  k = 0..τ-1

    Args:
        k_prime: snapshot 을 저장할 step (1..τ)
        rng: minibatch stream (batch_size 가 None 이면 FULL batch, 미사용)
        tail_from: 이 local step 이상의 iterate 를 tail 합에 포함 (None 이면 미사용)

    Raises:
        NonFiniteIterate: iterate 가 유한하지 않음 (η 과대)
    """
    if not 1 <= k_prime <= tau:
        raise ValueError(f"snapshot step must lie in [1, {tau}], got {k_prime}")

    batches = None
    if batch_size is not None:
        if rng is None:
            raise ValueError("minibatch sampling requires an RngStream")
        batches = draw_minibatches(fed.shard(i), batch_size, tau, rng)

    w = w_start.values
    snapshot = w
    iterate_sum = np.zeros_like(w)
    tail_sum = np.zeros_like(w)
    tail_count = 0

    for k in range(1, tau + 1):
        batch = FULL if batches is None else batches[k - 1]
        try:
            grad = eval_grad(fed, i, w, batch)
        except NonFiniteGradient as e:
            raise NonFiniteIterate(k, i) from e

        candidate = w - eta * grad
        if not np.all(np.isfinite(candidate)):
            raise NonFiniteIterate(k, i)
        w = project_primal(candidate, spec).values

        iterate_sum = iterate_sum + w
        if tail_from is not None and k >= tail_from:
            tail_sum = tail_sum + w
            tail_count += 1
        if k == k_prime:
            snapshot = w

    return LocalWindowResult(
        w_end=ModelParams(w),
        w_snapshot=ModelParams(snapshot),
        iterate_sum=iterate_sum,
        tail_sum=tail_sum,
        tail_count=tail_count,
    )
