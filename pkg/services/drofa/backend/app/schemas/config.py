"""
실험 설정 스키마 (JSON, strict)

load_config() 는 알 수 없는 키, 타입 오류를 모두 SchemaError 로 변환
"""
import difflib
import json
import logging
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from backend.app.core.config import settings
from backend.app.core.exceptions import DataIoError, ParseError, SchemaError
from backend.app.models.specs import ObjectiveSpec, PrimalDomainSpec, RegularizerSpec

logger = logging.getLogger(__name__)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# =============================================================================
# 알고리즘 설정
# =============================================================================


class AlgoConfig(_Strict):
    """최적화 루프 설정 (S = T / tau stage)"""

    algorithm: Literal["drfa", "drfa_prox", "drfa_ga", "fedavg"] = "drfa"
    T: int = Field(..., ge=1, description="전체 local iteration 수")
    tau: int = Field(..., ge=1, description="synchronization gap")
    m: int = Field(..., ge=1, description="stage 당 샘플링 client 수")
    eta: float = Field(..., gt=0.0, description="primal step size")
    gamma: float = Field(..., gt=0.0, description="dual step size")
    batch_primal: Optional[int] = Field(
        default=1, ge=1, description="None 이면 FULL batch"
    )
    batch_probe: Optional[int] = Field(
        default=1, ge=1, description="None 이면 FULL batch"
    )
    primal_domain: PrimalDomainSpec = Field(default_factory=PrimalDomainSpec)
    regularizer: RegularizerSpec = Field(default_factory=RegularizerSpec)
    output_mode: Literal["averaged", "last_iterate", "tail_averaged"] = "averaged"
    lambda_init: Optional[List[float]] = Field(
        default=None, description="기본값: uniform"
    )
    w_init: Optional[List[float]] = Field(default=None, description="기본값: zeros")
    ga_grad_at: Literal["stage_start", "stage_end"] = "stage_start"

    @field_validator("tau")
    @classmethod
    def tau_divides_T(cls, v: int, info: ValidationInfo) -> int:
        total = info.data.get("T")
        if total is not None and total % v != 0:
            raise ValueError(f"tau={v} must divide T={total}")
        return v

    @field_validator("regularizer")
    @classmethod
    def drfa_is_unregularized(
        cls, v: RegularizerSpec, info: ValidationInfo
    ) -> RegularizerSpec:
        if info.data.get("algorithm") in ("drfa", "fedavg") and not v.is_none:
            raise ValueError(
                "regularized objectives need algorithm drfa_prox or drfa_ga"
            )
        return v

    @property
    def n_stages(self) -> int:
        return self.T // self.tau

    @property
    def exchanges_per_stage(self) -> int:
        return 1 if self.algorithm == "fedavg" else 2


# =============================================================================
# Federation 소스
# =============================================================================


class SyntheticFederationSpec(_Strict):
    """Gaussian cluster 기반 heterogeneous federation"""

    source: Literal["synthetic"] = "synthetic"
    n_clients: int = Field(..., ge=1)
    dim: int = Field(..., ge=1)
    samples_per_client: Union[int, List[int]] = Field(default=100)
    heterogeneity: Literal["one_class_per_client", "mixed"] = "one_class_per_client"
    alpha: float = Field(default=0.0, ge=0.0, le=1.0, description="mixed 비율")
    cluster_radius: float = Field(default=3.0, gt=0.0)
    cluster_std: float = Field(default=1.0, gt=0.0)
    holdout_per_client: int = Field(default=0, ge=0)
    data_seed: Optional[int] = Field(
        default=None, ge=0, description="None 이면 run seed 사용"
    )
    objective: ObjectiveSpec = Field(
        default_factory=lambda: ObjectiveSpec(kind="logistic_regression")
    )

    @field_validator("samples_per_client")
    @classmethod
    def positive_sizes(cls, v):
        sizes = v if isinstance(v, list) else [v]
        if any(n < 1 for n in sizes):
            raise ValueError("every client needs at least one sample")
        return v


class QuadraticFederationSpec(_Strict):
    """client 중심 c_i 를 갖는 strongly convex quadratic federation"""

    source: Literal["quadratic"] = "quadratic"
    centers: List[List[float]] = Field(..., min_length=1)
    samples_per_client: int = Field(default=1, ge=1)
    noise: float = Field(default=0.0, ge=0.0)
    data_seed: Optional[int] = Field(default=None, ge=0)
    objective: ObjectiveSpec = Field(
        default_factory=lambda: ObjectiveSpec(kind="quadratic")
    )

    @field_validator("objective")
    @classmethod
    def quadratic_only(cls, v: ObjectiveSpec) -> ObjectiveSpec:
        if v.kind != "quadratic":
            raise ValueError("quadratic federation requires objective kind 'quadratic'")
        return v


class CsvFederationSpec(_Strict):
    """CSV 파일 기반 federation"""

    source: Literal["csv"] = "csv"
    path: str
    partition: Literal["by_label", "by_column"] = "by_label"
    column: Optional[int] = Field(default=None, description="by_column 의 그룹 열 인덱스")
    label_column: int = Field(default=-1)
    header: bool = False
    shards_per_group: int = Field(default=1, ge=1)
    objective: ObjectiveSpec = Field(
        default_factory=lambda: ObjectiveSpec(kind="logistic_regression")
    )

    @model_validator(mode="after")
    def column_for_by_column(self):
        if self.partition == "by_column" and self.column is None:
            raise ValueError("partition 'by_column' requires 'column'")
        return self


FederationSpec = Annotated[
    Union[SyntheticFederationSpec, QuadraticFederationSpec, CsvFederationSpec],
    Field(discriminator="source"),
]


# =============================================================================
# 실험 설정
# =============================================================================


def _default_seeds() -> List[int]:
    return list(range(settings.default_seed_count))


class ExperimentConfig(_Strict):
    federation: FederationSpec
    algo: AlgoConfig
    seeds: List[int] = Field(default_factory=_default_seeds, min_length=1)
    eval_every: int = Field(
        default=1, ge=1, description="평가 간격 (동기화 stage 단위, comm round 아님)"
    )
    output_dir: Optional[str] = None
    preset: Literal["none", "theorem1", "theorem2_appendix"] = "none"
    label: Optional[str] = None
    worst_acc_threshold: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    inner_budget: Optional[int] = Field(
        default=None, ge=1, description="gap inner solver step 수"
    )
    report_gap: bool = True

    @field_validator("seeds")
    @classmethod
    def nonnegative_seeds(cls, v: List[int]) -> List[int]:
        if any(s < 0 for s in v):
            raise ValueError("seeds must be >= 0")
        return v

    @property
    def display_label(self) -> str:
        if self.label:
            return self.label
        return f"{self.algo.algorithm}(tau={self.algo.tau})"


# =============================================================================
# 로딩
# =============================================================================

# 흔한 별칭 → 스키마 키
KEY_SYNONYMS = {
    "learning_rate_w": "eta",
    "learning_rate": "eta",
    "lr": "eta",
    "learning_rate_lambda": "gamma",
    "dual_lr": "gamma",
    "sync_gap": "tau",
    "local_steps": "tau",
    "iterations": "T",
    "num_iterations": "T",
    "clients_per_round": "m",
    "batch_size": "batch_primal",
    "num_clients": "n_clients",
    "seed": "seeds",
}

_CONFIG_MODELS = (
    ExperimentConfig,
    AlgoConfig,
    SyntheticFederationSpec,
    QuadraticFederationSpec,
    CsvFederationSpec,
    ObjectiveSpec,
    RegularizerSpec,
    PrimalDomainSpec,
)


def _known_keys() -> List[str]:
    keys = set()
    for model in _CONFIG_MODELS:
        keys.update(model.model_fields.keys())
    return sorted(keys)


def suggest_key(key: str) -> Optional[str]:
    """알 수 없는 키에 대한 추천"""
    if key in KEY_SYNONYMS:
        return KEY_SYNONYMS[key]
    matches = difflib.get_close_matches(key, _known_keys(), n=1, cutoff=0.6)
    return matches[0] if matches else None


def _schema_error(exc: ValidationError) -> SchemaError:
    errors = exc.errors()
    # 알 수 없는 키가 있으면 그것이 원인 (누락 필드 오류는 부수 효과)
    extra = [e for e in errors if e["type"] == "extra_forbidden"]
    first = extra[0] if extra else errors[0]
    names = [str(part) for part in first["loc"] if isinstance(part, str)]
    # discriminated union tag 는 key 가 아님
    names = [n for n in names if n not in ("synthetic", "quadratic", "csv")]
    key = names[-1] if names else "<root>"
    reason = first["msg"]
    suggestion = suggest_key(key) if extra else None
    return SchemaError(key, reason, suggestion)


def parse_config(data: dict) -> ExperimentConfig:
    """dict → ExperimentConfig (ValidationError → SchemaError)"""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        error = _schema_error(e)
        logger.error(f"❌ {error.message}")
        raise error from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    JSON 설정 파일 로딩

    Raises:
        DataIoError: 파일 없음 / 읽기 실패
        ParseError: JSON 문법 오류
        SchemaError: 스키마 위반
    """
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataIoError(f"Cannot read config {config_path}: {e}") from e

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.lineno, e.msg) from e

    if not isinstance(data, dict):
        raise SchemaError("<root>", "config must be a JSON object")

    cfg = parse_config(data)
    logger.info(
        f"📄 Loaded config {config_path} "
        f"({cfg.display_label}, {len(cfg.seeds)} seeds)"
    )
    return cfg
