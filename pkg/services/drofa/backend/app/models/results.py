"""
실행 결과 모델

- StageTranscript: stage 별 통신/샘플링 기록
- MetricRecord: stage 경계에서의 평가 지표 (metrics.csv 한 행)
- RunResult: 한 seed 실행의 최종 결과
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from backend.app.models.domain import MixtureWeights, ModelParams


@dataclass(frozen=True)
class StageTranscript:
    stage: int
    sampled_devices: Tuple[int, ...]
    probe_devices: Tuple[int, ...]
    snapshot_step: Optional[int]
    comm_exchanges: int
    lambda_after: MixtureWeights


class MetricRecord(BaseModel):
    """stage 경계 평가 결과"""

    model_config = ConfigDict(frozen=True)

    seed: int
    stage: int
    iteration: int
    comm_rounds: int
    avg_loss: float
    worst_loss: float
    worst_client: int
    worst_acc: Optional[float] = None
    avg_acc: Optional[float] = None
    fairness_std: Optional[float] = None
    gamma_est: float = Field(
        description="pointwise gradient dissimilarity at the evaluated model"
    )

    @classmethod
    def columns(cls) -> List[str]:
        return list(cls.model_fields.keys())


@dataclass
class RunResult:
    """한 seed 의 최종 해와 기록"""

    w_hat: ModelParams
    lambda_hat: MixtureWeights
    w_last: ModelParams
    lambda_last: MixtureWeights
    transcripts: List[StageTranscript]
    metric_series: List[MetricRecord]
    config_echo: Dict[str, Any]
    seed: int
    lambda_trace: List[MixtureWeights] = field(default_factory=list)

    @property
    def n_stages(self) -> int:
        return len(self.transcripts)

    @property
    def comm_rounds(self) -> int:
        return sum(t.comm_exchanges for t in self.transcripts)
