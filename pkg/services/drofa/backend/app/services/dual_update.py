"""
서버의 λ update

- build_probe_vector: snapshot 모델에서 uniform probe client 의 loss 로 만든 N 차원 벡터
- drfa_lambda_step: Π_Λ(λ + τγ v)
- drfa_prox_lambda_step: regularized prox step
- drfa_ga_lambda_step: full-batch projected gradient ascent (kl 은 prox 로)
"""
import logging
from typing import Optional, Sequence

import numpy as np

from backend.app.core.exceptions import DimensionMismatch, NonFiniteInput
from backend.app.core.geometry import (
    ProxProblem,
    dual_anchor,
    project_simplex,
    prox_simplex,
)
from backend.app.core.objectives import FULL, eval_loss, eval_regularizer
from backend.app.core.sampling import StreamFactory, draw_minibatch
from backend.app.models.domain import MixtureWeights, ModelParams
from backend.app.models.federation import Federation
from backend.app.models.specs import RegularizerSpec

logger = logging.getLogger(__name__)


def build_probe_vector(
    fed: Federation,
    probe_ids: Sequence[int],
    w_snapshot: ModelParams,
    m: int,
    batch_probe: Optional[int] = None,
    streams: Optional[StreamFactory] = None,
    stage: int = 0,
) -> np.ndarray:
    """
    v_i = (N/m) f_i(w; ξ_i), i ∈ U (중복은 누적), 나머지 0

    batch_probe 가 None 이면 FULL batch loss

    Raises:
        NonFiniteLoss
    """
    n = fed.n_clients
    if len(probe_ids) != m:
        raise ValueError(f"probe set size {len(probe_ids)} != m={m}")
    if batch_probe is not None and streams is None:
        raise ValueError("minibatch probes require a StreamFactory")

    scale = n / m
    v = np.zeros(n)
    for slot, i in enumerate(probe_ids):
        batch = FULL
        if batch_probe is not None:
            batch = draw_minibatch(
                fed.shard(i), batch_probe, streams.probe_batch(stage, i, slot)
            )
        v[i] += scale * eval_loss(fed, i, w_snapshot.values, batch)
    return v


def _check_length(lam: MixtureWeights, vec: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64).reshape(-1)
    if arr.shape[0] != lam.n:
        raise DimensionMismatch(lam.n, arr.shape[0])
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(what)
    return arr


def drfa_lambda_step(
    lam: MixtureWeights, v: np.ndarray, tau: int, gamma: float
) -> MixtureWeights:
    """λ^{(s+1)} = Π_Λ(λ^{(s)} + τγ v)"""
    v = _check_length(lam, v, "probe vector")
    return project_simplex(dual_anchor(lam, v, tau, gamma))


def drfa_prox_lambda_step(
    lam: MixtureWeights, v: np.ndarray, tau: int, gamma: float, g: RegularizerSpec
) -> MixtureWeights:
    """λ^{(s+1)} = argmax_u τ g(u) - (1/2γ)‖λ + γτv - u‖²"""
    v = _check_length(lam, v, "probe vector")
    problem = ProxProblem(
        anchor=dual_anchor(lam, v, tau, gamma), step=gamma, scale=tau, regularizer=g
    )
    return prox_simplex(problem)


def drfa_ga_lambda_step(
    lam: MixtureWeights, full_losses: np.ndarray, gamma: float, g: RegularizerSpec
) -> MixtureWeights:
    """
    λ^{(s+1)} = Π_Λ(λ^{(s)} + γ (full_losses + ∇g(λ^{(s)})))

    kl_to_uniform 은 ∇g 가 경계에서 발산하므로 g 를 prox 로 처리:
    λ^{(s+1)} = argmax_u g(u) - (1/2γ)‖λ^{(s)} + γ full_losses - u‖²
    """
    losses = _check_length(lam, full_losses, "full-batch losses")
    if g.kind == "kl_to_uniform":
        problem = ProxProblem(
            anchor=lam.values + gamma * losses, step=gamma, scale=1.0, regularizer=g
        )
        return prox_simplex(problem)
    _, reg_grad = eval_regularizer(g, lam)
    return project_simplex(lam.values + gamma * (losses + reg_grad))
