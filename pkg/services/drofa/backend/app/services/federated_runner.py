"""
Federated minimax 학습 루프

- drfa: λ 가중 client 샘플링 + snapshot 기반 λ update (AFL = tau 1)
- drfa_prox: λ update 를 regularized prox step 으로 대체
- drfa_ga: 모든 client 의 full-batch loss 로 λ gradient ascent
- fedavg: uniform 샘플링, λ 고정 (uniform)
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from backend.app.core.exceptions import (
    BadConfig,
    DimensionMismatch,
    DivergenceDetected,
    NonFiniteIterate,
    NonFiniteLoss,
)
from backend.app.core.geometry import project_primal
from backend.app.core.objectives import all_losses
from backend.app.core.sampling import (
    StreamFactory,
    sample_clients_uniform,
    sample_clients_weighted,
    sample_snapshot_step,
)
from backend.app.models.domain import (
    IterateAverager,
    MixtureWeights,
    ModelParams,
    averaged_mixture,
    stack_mean,
    validate_mixture,
)
from backend.app.models.federation import Federation
from backend.app.models.results import MetricRecord, RunResult, StageTranscript
from backend.app.schemas.config import AlgoConfig
from backend.app.services.dual_update import (
    build_probe_vector,
    drfa_ga_lambda_step,
    drfa_lambda_step,
    drfa_prox_lambda_step,
)
from backend.app.services.local_update import run_local_window

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StageState:
    """stage 경계에서 evaluator 에 전달되는 서버 상태"""

    stage: int
    iteration: int
    comm_rounds: int
    w_bar: ModelParams
    lam: MixtureWeights


Evaluator = Callable[[StageState], Optional[MetricRecord]]


@dataclass
class _LocalPhase:
    w_next: ModelParams
    w_snapshot: ModelParams
    iterate_sum: np.ndarray
    tail_sum: np.ndarray
    tail_count: int


class FederatedRunner:
    """
    한 seed 에 대한 학습 루프

    서버 상태(w̄, λ)는 stage 사이에서만 변경되며,
    client 집계는 draw 순서대로 수행
    """

    def __init__(
        self,
        fed: Federation,
        cfg: AlgoConfig,
        seed: int,
        evaluator: Optional[Evaluator] = None,
        eval_every: int = 1,
    ):
        self.fed = fed
        self.cfg = cfg
        self.seed = seed
        self.evaluator = evaluator
        self.eval_every = eval_every
        self.streams = StreamFactory(seed)
        self._validate()

    def _validate(self) -> None:
        cfg = self.cfg
        if cfg.T % cfg.tau != 0:
            raise BadConfig(f"tau={cfg.tau} must divide T={cfg.T}")
        if cfg.algorithm == "drfa_ga" and cfg.m > self.fed.n_clients:
            raise BadConfig(
                f"drfa_ga needs m <= N, got m={cfg.m}, N={self.fed.n_clients}"
            )
        if cfg.algorithm in ("drfa", "fedavg") and not cfg.regularizer.is_none:
            raise BadConfig(
                "regularized objectives need algorithm drfa_prox or drfa_ga"
            )
        if self.eval_every < 1:
            raise BadConfig("eval_every must be >= 1")

    # =========================================================================
    # 초기값
    # =========================================================================

    def _initial_lambda(self) -> MixtureWeights:
        n = self.fed.n_clients
        if self.cfg.algorithm == "fedavg" or self.cfg.lambda_init is None:
            return MixtureWeights.uniform(n)
        lam = validate_mixture(self.cfg.lambda_init)
        if lam.n != n:
            raise DimensionMismatch(n, lam.n)
        return lam

    def _initial_model(self) -> ModelParams:
        dim = self.fed.param_dim
        if self.cfg.w_init is None:
            return project_primal(np.zeros(dim), self.cfg.primal_domain)
        if len(self.cfg.w_init) != dim:
            raise DimensionMismatch(dim, len(self.cfg.w_init))
        return project_primal(self.cfg.w_init, self.cfg.primal_domain)

    # =========================================================================
    # stage 단계
    # =========================================================================

    def _select_devices(self, stage: int, lam: MixtureWeights) -> List[int]:
        if self.cfg.algorithm == "fedavg":
            return sample_clients_uniform(
                self.fed.n_clients, self.cfg.m, self.streams.uniform_select(stage)
            )
        return sample_clients_weighted(
            lam, self.cfg.m, self.streams.device_select(stage)
        )

    def _snapshot_step(self, stage: int) -> Optional[int]:
        if self.cfg.algorithm in ("drfa", "drfa_prox"):
            return sample_snapshot_step(self.cfg.tau, self.streams.snapshot(stage))
        return None

    def _tail_from(self, stage: int) -> int:
        # 전역 step t = stage·τ + k 가 T/2 이상인 첫 local step
        return max(1, math.ceil(self.cfg.T / 2) - stage * self.cfg.tau)

    def _local_phase(
        self, stage: int, devices: List[int], w_bar: ModelParams, k_prime: Optional[int]
    ) -> _LocalPhase:
        cfg = self.cfg
        ends, snapshots = [], []
        iterate_sum = np.zeros(w_bar.dim)
        tail_sum = np.zeros(w_bar.dim)
        tail_count = 0

        for slot, i in enumerate(devices):
            try:
                window = run_local_window(
                    self.fed,
                    i,
                    w_bar,
                    cfg.eta,
                    cfg.tau,
                    k_prime or cfg.tau,
                    spec=cfg.primal_domain,
                    rng=self.streams.minibatch(stage, i, slot),
                    batch_size=cfg.batch_primal,
                    tail_from=self._tail_from(stage),
                )
            except NonFiniteIterate as e:
                logger.error(
                    f"💥 Divergence at stage {stage}, step {e.step}, client {i}"
                )
                raise DivergenceDetected(stage, e.step, i) from e

            ends.append(window.w_end.values)
            snapshots.append(window.w_snapshot.values)
            iterate_sum = iterate_sum + window.iterate_sum
            tail_sum = tail_sum + window.tail_sum
            tail_count += window.tail_count

        return _LocalPhase(
            w_next=ModelParams(stack_mean(ends)),
            w_snapshot=ModelParams(stack_mean(snapshots)),
            iterate_sum=iterate_sum,
            tail_sum=tail_sum,
            tail_count=tail_count,
        )

    def _dual_phase(
        self,
        stage: int,
        lam: MixtureWeights,
        w_bar: ModelParams,
        local: _LocalPhase,
        k_prime: Optional[int],
    ) -> Tuple[MixtureWeights, Tuple[int, ...]]:
        cfg = self.cfg
        algorithm = cfg.algorithm

        if algorithm == "fedavg":
            return lam, ()

        if algorithm == "drfa_ga":
            at = w_bar if cfg.ga_grad_at == "stage_start" else local.w_next
            try:
                losses = all_losses(self.fed, at.values)
            except NonFiniteLoss as e:
                raise DivergenceDetected(stage, cfg.tau, e.client_id) from e
            return drfa_ga_lambda_step(lam, losses, cfg.gamma, cfg.regularizer), ()

        probes = sample_clients_uniform(
            self.fed.n_clients, cfg.m, self.streams.uniform_select(stage)
        )
        try:
            v = build_probe_vector(
                self.fed,
                probes,
                local.w_snapshot,
                cfg.m,
                cfg.batch_probe,
                self.streams,
                stage,
            )
        except NonFiniteLoss as e:
            raise DivergenceDetected(stage, k_prime or cfg.tau, e.client_id) from e

        if algorithm == "drfa":
            return drfa_lambda_step(lam, v, cfg.tau, cfg.gamma), tuple(probes)
        lam_next = drfa_prox_lambda_step(lam, v, cfg.tau, cfg.gamma, cfg.regularizer)
        return lam_next, tuple(probes)

    def _evaluate(
        self, stage: int, w_bar: ModelParams, lam: MixtureWeights
    ) -> Optional[MetricRecord]:
        if self.evaluator is None:
            return None
        if stage % self.eval_every != 0 and stage != self.cfg.n_stages:
            return None
        state = StageState(
            stage=stage,
            iteration=stage * self.cfg.tau,
            comm_rounds=stage * self.cfg.exchanges_per_stage,
            w_bar=w_bar,
            lam=lam,
        )
        return self.evaluator(state)

    # =========================================================================
    # 실행
    # =========================================================================

    def run(self) -> RunResult:
        cfg = self.cfg
        n_stages = cfg.n_stages
        tail_stage = math.ceil(n_stages / 2)

        lam = self._initial_lambda()
        w_bar = self._initial_model()

        w_acc, w_tail = IterateAverager(), IterateAverager()
        lam_acc, lam_tail = IterateAverager(), IterateAverager()
        transcripts: List[StageTranscript] = []
        trace = [lam]
        series: List[MetricRecord] = []

        logger.info(
            f"🚀 {cfg.algorithm}: N={self.fed.n_clients}, T={cfg.T}, tau={cfg.tau}, "
            f"m={cfg.m}, seed={self.seed}"
        )

        record = self._evaluate(0, w_bar, lam)
        if record is not None:
            series.append(record)

        for stage in range(n_stages):
            devices = self._select_devices(stage, lam)
            k_prime = self._snapshot_step(stage)

            local = self._local_phase(stage, devices, w_bar, k_prime)
            w_acc.push_sum(local.iterate_sum, cfg.m * cfg.tau)
            w_tail.push_sum(local.tail_sum, local.tail_count)

            lam_acc.push(lam.values)
            if stage >= tail_stage:
                lam_tail.push(lam.values)

            lam_next, probes = self._dual_phase(stage, lam, w_bar, local, k_prime)
            transcripts.append(
                StageTranscript(
                    stage=stage,
                    sampled_devices=tuple(devices),
                    probe_devices=probes,
                    snapshot_step=k_prime,
                    comm_exchanges=cfg.exchanges_per_stage,
                    lambda_after=lam_next,
                )
            )
            logger.debug(
                f"stage {stage}: D={devices}, k'={k_prime}, U={list(probes)}, "
                f"lambda={np.round(lam_next.values, 4).tolist()}"
            )

            lam, w_bar = lam_next, local.w_next
            trace.append(lam)

            record = self._evaluate(stage + 1, w_bar, lam)
            if record is not None:
                series.append(record)

        w_hat, lambda_hat = self._outputs(
            w_bar, lam, w_acc, w_tail, lam_acc, lam_tail
        )
        logger.info(
            f"✅ {cfg.algorithm} finished: {n_stages} stages, seed={self.seed}"
        )

        return RunResult(
            w_hat=w_hat,
            lambda_hat=lambda_hat,
            w_last=w_bar,
            lambda_last=lam,
            transcripts=transcripts,
            metric_series=series,
            config_echo=cfg.model_dump(mode="json"),
            seed=self.seed,
            lambda_trace=trace,
        )

    def _outputs(
        self,
        w_bar: ModelParams,
        lam: MixtureWeights,
        w_acc: IterateAverager,
        w_tail: IterateAverager,
        lam_acc: IterateAverager,
        lam_tail: IterateAverager,
    ) -> Tuple[ModelParams, MixtureWeights]:
        mode = self.cfg.output_mode
        if mode == "last_iterate":
            return w_bar, lam
        if mode == "tail_averaged" and not w_tail.empty:
            lambda_hat = averaged_mixture(lam_tail if not lam_tail.empty else lam_acc)
            return ModelParams(w_tail.mean()), lambda_hat
        return ModelParams(w_acc.mean()), averaged_mixture(lam_acc)


def _run_checked(
    algorithm: str,
    fed: Federation,
    cfg: AlgoConfig,
    seed: int,
    evaluator: Optional[Evaluator],
    eval_every: int,
) -> RunResult:
    if cfg.algorithm != algorithm:
        raise BadConfig(f"run_{algorithm} called with algorithm '{cfg.algorithm}'")
    return FederatedRunner(fed, cfg, seed, evaluator, eval_every).run()


def run_drfa(
    fed: Federation,
    cfg: AlgoConfig,
    seed: int,
    evaluator: Optional[Evaluator] = None,
    eval_every: int = 1,
) -> RunResult:
    return _run_checked("drfa", fed, cfg, seed, evaluator, eval_every)


def run_drfa_prox(
    fed: Federation,
    cfg: AlgoConfig,
    seed: int,
    evaluator: Optional[Evaluator] = None,
    eval_every: int = 1,
) -> RunResult:
    return _run_checked("drfa_prox", fed, cfg, seed, evaluator, eval_every)


def run_drfa_ga(
    fed: Federation,
    cfg: AlgoConfig,
    seed: int,
    evaluator: Optional[Evaluator] = None,
    eval_every: int = 1,
) -> RunResult:
    return _run_checked("drfa_ga", fed, cfg, seed, evaluator, eval_every)


def run_fedavg(
    fed: Federation,
    cfg: AlgoConfig,
    seed: int,
    evaluator: Optional[Evaluator] = None,
    eval_every: int = 1,
) -> RunResult:
    return _run_checked("fedavg", fed, cfg, seed, evaluator, eval_every)


def run_algorithm(
    fed: Federation,
    cfg: AlgoConfig,
    seed: int,
    evaluator: Optional[Evaluator] = None,
    eval_every: int = 1,
) -> RunResult:
    """cfg.algorithm 에 따라 실행"""
    return FederatedRunner(fed, cfg, seed, evaluator, eval_every).run()
