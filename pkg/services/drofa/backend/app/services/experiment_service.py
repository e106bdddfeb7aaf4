"""
실험 오케스트레이션

- run_experiment: seed 별 실행
  (metrics.csv / lambda_trace.csv / summary.json / timings.json)
- compare: 여러 설정의 곡선 정렬과 threshold crossing 통계
- sweep: 한 파라미터를 바꾼 설정 목록을 compare 로 위임
"""
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from backend.app import __version__
from backend.app.core.config import settings
from backend.app.core.exceptions import (
    BadConfig,
    BaseDrofaException,
    MisalignedConfigs,
    SchemaError,
)
from backend.app.models.federation import Federation
from backend.app.models.results import MetricRecord, RunResult
from backend.app.repositories import FederationRepository, repository_for
from backend.app.schemas.config import AlgoConfig, ExperimentConfig
from backend.app.services.federated_runner import StageState, run_algorithm
from backend.app.services.metrics_service import MetricsService, series_gamma_max
from backend.app.services.presets import apply_preset

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
LAMBDA_FILE = "lambda_trace.csv"
SUMMARY_FILE = "summary.json"
TIMINGS_FILE = "timings.json"
COMPARISON_FILE = "comparison.csv"
CROSSINGS_FILE = "crossings.csv"

CURVE_METRICS = [
    "avg_loss",
    "worst_loss",
    "worst_acc",
    "avg_acc",
    "fairness_std",
    "gamma_est",
]


# =============================================================================
# 파일 출력
# =============================================================================


def dump_json(data: Any) -> str:
    """결정적 JSON 직렬화 (summary.json 형식)"""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class ResultsWriter:
    """출력 파일별 단일 writer (완성된 행만 append)"""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.metrics_path = self.output_dir / METRICS_FILE
        self.lambda_path = self.output_dir / LAMBDA_FILE

    def start(self, n_clients: int) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(columns=MetricRecord.columns()).to_csv(
            self.metrics_path, index=False, lineterminator="\n"
        )
        lambda_cols = ["seed", "stage"] + [f"lambda_{i}" for i in range(n_clients)]
        pd.DataFrame(columns=lambda_cols).to_csv(
            self.lambda_path, index=False, lineterminator="\n"
        )

    def append_metrics(self, records: Sequence[MetricRecord]) -> None:
        if not records:
            return
        frame = records_frame(records)
        frame.to_csv(
            self.metrics_path, mode="a", header=False, index=False, lineterminator="\n"
        )

    def append_lambda(self, seed: int, trace) -> None:
        rows = [[seed, stage] + lam.to_list() for stage, lam in enumerate(trace)]
        pd.DataFrame(rows).to_csv(
            self.lambda_path, mode="a", header=False, index=False, lineterminator="\n"
        )

    def write_json(self, name: str, data: Any) -> None:
        (self.output_dir / name).write_text(dump_json(data), encoding="utf-8")


def read_metrics(path: Path) -> List[MetricRecord]:
    """metrics.csv → MetricRecord 목록 (빈 칸은 None)"""
    frame = pd.read_csv(path, float_precision="round_trip")
    records = []
    for row in frame.to_dict("records"):
        clean = {}
        for key, value in row.items():
            if pd.isna(value):
                clean[key] = None
            else:
                clean[key] = value.item() if hasattr(value, "item") else value
        records.append(MetricRecord(**clean))
    return records


# =============================================================================
# seed 실행
# =============================================================================


@dataclass
class SeedOutcome:
    seed: int
    records: List[MetricRecord]
    lambda_trace: list
    summary: Dict[str, Any]
    timings: Dict[str, float]
    n_clients: int


class _StreamingEvaluator:
    def __init__(self, metrics: MetricsService, writer: Optional[ResultsWriter]):
        self.metrics = metrics
        self.writer = writer

    def __call__(self, state: StageState) -> MetricRecord:
        record = self.metrics(state)
        if self.writer is not None:
            self.writer.append_metrics([record])
        return record


def _run_summary(result: RunResult, final: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "seed": result.seed,
        "n_stages": result.n_stages,
        "comm_rounds": result.comm_rounds,
        "w_hat": result.w_hat.to_list(),
        "lambda_hat": result.lambda_hat.to_list(),
        "w_last": result.w_last.to_list(),
        "lambda_last": result.lambda_last.to_list(),
        "gamma_series_max": series_gamma_max(result.metric_series),
        "final": final,
    }


def run_seed(
    cfg: ExperimentConfig,
    seed: int,
    writer: Optional[ResultsWriter] = None,
    fed: Optional[Federation] = None,
) -> SeedOutcome:
    """
    seed 하나 실행

    writer 가 주어지면 stage 평가 결과를 즉시 metrics.csv 에 append
    fed 가 주어지면 그 federation 을 재사용
    """
    timings: Dict[str, float] = {}

    started = time.perf_counter()
    if fed is None:
        fed = repository_for(cfg.federation).build(seed)
    algo = apply_preset(cfg.algo, fed, cfg.preset)
    timings["build_s"] = time.perf_counter() - started

    started = time.perf_counter()
    metrics = MetricsService(fed, seed)
    evaluator = _StreamingEvaluator(metrics, writer)
    result = run_algorithm(fed, algo, seed, evaluator, cfg.eval_every)
    timings["train_s"] = time.perf_counter() - started

    started = time.perf_counter()
    final = metrics.final_summary(
        result.w_hat,
        result.lambda_hat,
        algo.regularizer,
        cfg.report_gap,
        cfg.inner_budget or 10 * algo.T,
        algo.primal_domain,
    )
    timings["summary_s"] = time.perf_counter() - started

    return SeedOutcome(
        seed=seed,
        records=result.metric_series,
        lambda_trace=result.lambda_trace,
        summary=_run_summary(result, final),
        timings=timings,
        n_clients=fed.n_clients,
    )


def _seed_outcomes(
    cfg: ExperimentConfig,
    writer: ResultsWriter,
    workers: int,
    repository: FederationRepository,
    first: Federation,
):
    """
    seed 순서대로 결과를 생성 (병렬이면 완료 후 seed 순서로 기록)

    seed 무관한 소스는 first 를 모든 seed 에 재사용
    """

    def reusable(seed: int) -> Optional[Federation]:
        if not repository.seed_dependent or seed == cfg.seeds[0]:
            return first
        return None

    if workers <= 1 or len(cfg.seeds) == 1:
        for seed in cfg.seeds:
            outcome = run_seed(cfg, seed, writer, reusable(seed))
            writer.append_lambda(seed, outcome.lambda_trace)
            yield outcome
        return

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(run_seed, cfg, seed, None, reusable(seed)) for seed in cfg.seeds
        ]
        for future in futures:
            outcome = future.result()
            writer.append_metrics(outcome.records)
            writer.append_lambda(outcome.seed, outcome.lambda_trace)
            yield outcome


# =============================================================================
# 집계
# =============================================================================


def records_frame(records: Sequence[MetricRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [r.model_dump() for r in records], columns=MetricRecord.columns()
    )


def aggregate_curves(records: Sequence[MetricRecord]) -> pd.DataFrame:
    """stage 별 seed 평균 ± 표준편차 (wide)"""
    frame = records_frame(records)
    keys = ["stage", "iteration", "comm_rounds"]
    values = frame[keys + CURVE_METRICS].astype({m: float for m in CURVE_METRICS})
    grouped = values.groupby(keys, sort=True)
    mean = grouped.mean().add_suffix("_mean")
    std = grouped.std(ddof=0).add_suffix("_std")
    return pd.concat([mean, std], axis=1).reset_index()


def _aggregate_final(runs: List[Dict[str, Any]]) -> Dict[str, Any]:
    keys = sorted(
        {k for run in runs for k, v in run["final"].items() if isinstance(v, float)}
    )
    out = {}
    for key in keys:
        values = [
            run["final"][key]
            for run in runs
            if isinstance(run["final"].get(key), float)
        ]
        out[key] = {"mean": float(np.mean(values)), "std": float(np.std(values))}
    return out


def _versions() -> Dict[str, str]:
    versions = {"drofa": __version__, "python": platform.python_version()}
    for package in ("numpy", "scipy", "pandas", "pydantic"):
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


@dataclass
class ResultsBundle:
    """한 실험의 결과 (seed 별 요약 + 집계 곡선)"""

    config: ExperimentConfig
    records: List[MetricRecord]
    runs: List[Dict[str, Any]]
    curves: pd.DataFrame
    summary: Dict[str, Any]
    timings: Dict[str, Any]
    output_dir: Path
    label: str = field(default="")


def run_experiment(
    cfg: ExperimentConfig, out_dir: Optional[Path] = None
) -> ResultsBundle:
    """
    모든 seed 실행 후 결과 파일 작성

    중단 시 이미 완성된 행은 metrics.csv 에 남음
    """
    if out_dir is not None:
        output_dir = Path(out_dir)
    else:
        output_dir = settings.resolve_output_dir(cfg.output_dir)
    writer = ResultsWriter(output_dir)

    # 첫 seed 의 federation 으로 CSV 헤더의 N 결정 후 재사용
    repository = repository_for(cfg.federation)
    first = repository.build(cfg.seeds[0])
    writer.start(first.n_clients)
    logger.info(
        f"🧪 Experiment {cfg.display_label}: {len(cfg.seeds)} seeds → {output_dir}"
    )

    records: List[MetricRecord] = []
    runs: List[Dict[str, Any]] = []
    timings: Dict[str, Any] = {}
    started = time.perf_counter()

    try:
        outcomes = _seed_outcomes(cfg, writer, settings.workers, repository, first)
        for outcome in outcomes:
            records.extend(outcome.records)
            runs.append(outcome.summary)
            timings[str(outcome.seed)] = outcome.timings
            train_s = outcome.timings["train_s"]
            logger.info(f"✅ seed {outcome.seed} done ({train_s:.2f}s)")
    except BaseDrofaException as e:
        logger.error(f"❌ Experiment aborted after {len(runs)} seeds: {e.message}")
        raise
    finally:
        timings["total_s"] = time.perf_counter() - started
        writer.write_json(TIMINGS_FILE, timings)

    summary = {
        "config": cfg.model_dump(mode="json"),
        "label": cfg.display_label,
        "seeds": list(cfg.seeds),
        "versions": _versions(),
        "runs": runs,
        "aggregate": _aggregate_final(runs),
    }
    writer.write_json(SUMMARY_FILE, summary)

    return ResultsBundle(
        config=cfg,
        records=records,
        runs=runs,
        curves=aggregate_curves(records),
        summary=summary,
        timings=timings,
        output_dir=output_dir,
        label=cfg.display_label,
    )


# =============================================================================
# 비교
# =============================================================================


@dataclass
class ComparisonResult:
    long_table: pd.DataFrame
    crossings: pd.DataFrame
    threshold: float
    metric: str
    bundles: List[ResultsBundle]


def long_format(bundle: ResultsBundle) -> pd.DataFrame:
    """
    plot-ready long-format

    열: label, stage, iteration, comm_rounds, metric, mean, std
    """
    curves = bundle.curves
    rows = []
    for metric in CURVE_METRICS:
        part = curves[["stage", "iteration", "comm_rounds"]].copy()
        part["metric"] = metric
        part["mean"] = curves[f"{metric}_mean"]
        part["std"] = curves[f"{metric}_std"]
        rows.append(part)
    table = pd.concat(rows, ignore_index=True)
    table.insert(0, "label", bundle.label)
    return table


def _check_aligned(cfg_list: Sequence[ExperimentConfig]) -> None:
    if not cfg_list:
        raise MisalignedConfigs("compare needs at least one config")
    reference = cfg_list[0]
    for cfg in cfg_list[1:]:
        if cfg.federation.model_dump() != reference.federation.model_dump():
            raise MisalignedConfigs(
                f"'{cfg.display_label}' uses a different federation than "
                f"'{reference.display_label}'"
            )
        if list(cfg.seeds) != list(reference.seeds):
            raise MisalignedConfigs(f"'{cfg.display_label}' uses different seeds")


def crossing_metric(bundles: Sequence[ResultsBundle]) -> str:
    """분류 문제는 worst_acc (상승), 아니면 worst_loss (하강)"""
    frame = records_frame([r for b in bundles for r in b.records])
    if frame["worst_acc"].notna().any():
        return "worst_acc"
    return "worst_loss"


def default_threshold(bundles: Sequence[ResultsBundle], metric: str) -> float:
    """모든 곡선의 seed 평균 범위의 중간점"""
    values = pd.concat([b.curves[f"{metric}_mean"] for b in bundles]).astype(float)
    return float((values.min() + values.max()) / 2.0)


def _first_int(hit: pd.DataFrame, column: str) -> Optional[int]:
    return int(hit[column].iloc[0]) if len(hit) else None


def crossing_table(
    bundles: Sequence[ResultsBundle], metric: str, threshold: float
) -> pd.DataFrame:
    """(label, seed) 별 threshold 최초 도달 지점"""
    rising = metric == "worst_acc"
    rows = []
    for bundle in bundles:
        frame = records_frame(bundle.records)
        for seed, group in frame.groupby("seed", sort=True):
            group = group.sort_values("stage")
            values = group[metric].astype(float)
            reached = values >= threshold if rising else values <= threshold
            hit = group[reached.to_numpy()]
            rows.append(
                {
                    "label": bundle.label,
                    "seed": int(seed),
                    "comm_rounds": _first_int(hit, "comm_rounds"),
                    "iteration": _first_int(hit, "iteration"),
                }
            )
    table = pd.DataFrame(rows, columns=["label", "seed", "comm_rounds", "iteration"])
    first_rows = table[table["label"] == bundles[0].label]
    baseline = first_rows.set_index("seed")["comm_rounds"]
    table["delta_vs_first"] = [
        (row.comm_rounds - baseline.get(row.seed))
        if row.comm_rounds is not None and baseline.get(row.seed) is not None
        and not pd.isna(row.comm_rounds) and not pd.isna(baseline.get(row.seed))
        else None
        for row in table.itertuples()
    ]
    return table


def compare(
    cfg_list: Sequence[ExperimentConfig],
    out_dir: Optional[Path] = None,
    threshold: Optional[float] = None,
) -> ComparisonResult:
    """
    여러 설정 실행 후 곡선 정렬

    Raises:
        MisalignedConfigs: 빈 목록, federation / seed 불일치
    """
    _check_aligned(cfg_list)
    if out_dir is not None:
        root = Path(out_dir)
    else:
        root = settings.resolve_output_dir(cfg_list[0].output_dir)

    bundles = []
    for index, cfg in enumerate(cfg_list):
        if not cfg.label:
            cfg = cfg.model_copy(update={"label": f"{cfg.display_label}#{index}"})
        bundles.append(run_experiment(cfg, root / f"run_{index:02d}"))

    metric = crossing_metric(bundles)
    if threshold is None:
        threshold = cfg_list[0].worst_acc_threshold if metric == "worst_acc" else None
    if threshold is None:
        threshold = default_threshold(bundles, metric)

    long_table = pd.concat([long_format(b) for b in bundles], ignore_index=True)
    crossings = crossing_table(bundles, metric, threshold)

    root.mkdir(parents=True, exist_ok=True)
    long_table.to_csv(root / COMPARISON_FILE, index=False, lineterminator="\n")
    crossings.to_csv(root / CROSSINGS_FILE, index=False, lineterminator="\n")
    logger.info(
        f"📊 Compared {len(bundles)} configs on {metric} (threshold {threshold:.4g})"
    )

    return ComparisonResult(
        long_table=long_table,
        crossings=crossings,
        threshold=threshold,
        metric=metric,
        bundles=bundles,
    )


def sweep_configs(
    cfg: ExperimentConfig, param: str, values: Sequence[Any]
) -> List[ExperimentConfig]:
    """param 값을 바꾼 설정 목록 (algo 필드 또는 최상위 필드)"""
    configs = []
    for value in values:
        if param in AlgoConfig.model_fields:
            try:
                raw = {**cfg.algo.model_dump(), param: value}
                algo = AlgoConfig.model_validate(raw)
            except ValidationError as e:
                raise SchemaError(param, e.errors()[0]["msg"]) from e
            update = {"algo": algo}
        elif param in ExperimentConfig.model_fields and param not in (
            "algo",
            "federation",
        ):
            update = {param: value}
        else:
            raise BadConfig(f"Cannot sweep over '{param}'")
        label = f"{cfg.algo.algorithm}({param}={value})"
        configs.append(cfg.model_copy(update={**update, "label": label}))
    return configs


def sweep(
    cfg: ExperimentConfig,
    param: str,
    values: Sequence[Any],
    out_dir: Optional[Path] = None,
) -> ComparisonResult:
    return compare(sweep_configs(cfg, param, values), out_dir)
