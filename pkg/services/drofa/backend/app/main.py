import logging
from pathlib import Path
from typing import Callable, List, Optional

import typer
from rich.console import Console
from rich.table import Table

from backend.app import __version__
from backend.app.core.config import settings
from backend.app.middleware.error_handler import handle_exception
from backend.app.schemas.config import ExperimentConfig, load_config, parse_config
from backend.app.services.experiment_service import (
    ComparisonResult,
    ResultsBundle,
    compare,
    run_experiment,
    sweep,
)
from shared.utils.logger import setup_logger

logger = logging.getLogger(__name__)

console = Console()


def _apply_overrides(
    cfg: ExperimentConfig,
    seeds: Optional[List[int]],
    eval_every: Optional[int],
    preset: Optional[str],
) -> ExperimentConfig:
    """CLI 플래그로 설정 덮어쓰기 (스키마 재검증)"""
    data = cfg.model_dump(mode="json")
    if seeds:
        data["seeds"] = list(seeds)
    if eval_every is not None:
        data["eval_every"] = eval_every
    if preset is not None:
        data["preset"] = preset
    return parse_config(data)


def _load(paths: List[Path], seeds, eval_every, preset) -> List[ExperimentConfig]:
    return [_apply_overrides(load_config(p), seeds, eval_every, preset) for p in paths]


def _guarded(action: Callable[[], None]) -> None:
    """예외 → exit code"""
    try:
        action()
    except typer.Exit:
        raise
    except Exception as e:
        raise typer.Exit(code=handle_exception(e))


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def _render_bundle(bundle: ResultsBundle) -> None:
    table = Table(title=f"📊 {bundle.label} ({len(bundle.runs)} seeds)")
    table.add_column("metric")
    table.add_column("mean", justify="right")
    table.add_column("std", justify="right")
    for key, stats in bundle.summary["aggregate"].items():
        table.add_row(key, _fmt(stats["mean"]), _fmt(stats["std"]))
    console.print(table)
    console.print(f"results → {bundle.output_dir}")


def _render_comparison(result: ComparisonResult) -> None:
    table = Table(
        title=f"🏁 First comm round with {result.metric} past {result.threshold:.4g}"
    )
    table.add_column("label")
    table.add_column("reached", justify="right")
    table.add_column("median comm_rounds", justify="right")
    table.add_column("mean delta vs first", justify="right")
    for label, group in result.crossings.groupby("label", sort=False):
        reached = group["comm_rounds"].dropna()
        deltas = group["delta_vs_first"].dropna()
        table.add_row(
            str(label),
            f"{len(reached)}/{len(group)}",
            _fmt(float(reached.median())) if len(reached) else "-",
            _fmt(float(deltas.mean())) if len(deltas) else "-",
        )
    console.print(table)


def create_app() -> typer.Typer:
    """typer 애플리케이션 팩토리"""

    app = typer.Typer(
        name="drofa",
        help="Distributionally robust federated averaging simulator",
        add_completion=False,
        no_args_is_help=True,
    )

    @app.callback()
    def main(
        log_level: Optional[str] = typer.Option(None, "--log-level", help="loguru 레벨"),
    ):
        log_file = None
        if settings.log_to_file:
            log_file = settings.resolve_output_dir(None) / "drofa.log"
        setup_logger(level=log_level or settings.log_level, log_file=log_file)
        if not settings.validate_settings():
            raise typer.Exit(code=2)
        logger.debug(f"🚀 drofa {__version__} ({settings.environment})")

    @app.command()
    def run(
        config: Path = typer.Argument(..., help="JSON 실험 설정"),
        seed: Optional[List[int]] = typer.Option(None, "--seed", help="seed (반복 가능)"),
        out: Optional[Path] = typer.Option(None, "--out", help="출력 디렉토리"),
        eval_every: Optional[int] = typer.Option(
            None, "--eval-every", help="평가 간격 (동기화 stage 단위, comm round 아님)"
        ),
        preset: Optional[str] = typer.Option(
            None, "--preset", help="theorem1 | theorem2_appendix"
        ),
    ):
        """설정 하나를 모든 seed 로 실행"""

        def action():
            (cfg,) = _load([config], seed, eval_every, preset)
            _render_bundle(run_experiment(cfg, out))

        _guarded(action)

    @app.command(name="compare")
    def compare_command(
        configs: List[Path] = typer.Argument(..., help="비교할 설정들"),
        seed: Optional[List[int]] = typer.Option(None, "--seed"),
        out: Optional[Path] = typer.Option(None, "--out"),
        eval_every: Optional[int] = typer.Option(
            None, "--eval-every", help="평가 간격 (동기화 stage 단위, comm round 아님)"
        ),
        preset: Optional[str] = typer.Option(None, "--preset"),
        threshold: Optional[float] = typer.Option(None, "--threshold"),
    ):
        """여러 설정의 곡선 비교"""

        def action():
            cfg_list = _load(configs, seed, eval_every, preset)
            _render_comparison(compare(cfg_list, out, threshold))

        _guarded(action)

    @app.command(name="sweep")
    def sweep_command(
        config: Path = typer.Argument(...),
        param: str = typer.Option(..., "--param", help="예: tau"),
        values: str = typer.Option(..., "--values", help="쉼표 구분, 예: 5,10,15"),
        seed: Optional[List[int]] = typer.Option(None, "--seed"),
        out: Optional[Path] = typer.Option(None, "--out"),
        eval_every: Optional[int] = typer.Option(
            None, "--eval-every", help="평가 간격 (동기화 stage 단위, comm round 아님)"
        ),
        preset: Optional[str] = typer.Option(None, "--preset"),
    ):
        """한 파라미터 sweep"""

        def action():
            (cfg,) = _load([config], seed, eval_every, preset)
            parsed = [_parse_value(v) for v in values.split(",") if v.strip()]
            _render_comparison(sweep(cfg, param, parsed, out))

        _guarded(action)

    @app.command(name="oracle-check")
    def oracle_check(
        seed: int = typer.Option(0, "--seed"),
        n_vectors: int = typer.Option(1000, "--n-vectors"),
    ):
        """brute-force 기준 구현과 교차 검증"""
        from backend.app.oracle.checks import run_oracle_checks

        def action():
            results = run_oracle_checks(seed, n_vectors)
            table = Table(title="🔍 Oracle checks")
            table.add_column("check")
            table.add_column("status")
            table.add_column("detail")
            for r in results:
                table.add_row(r.name, "✅" if r.passed else "❌", r.detail)
            console.print(table)
            if not all(r.passed for r in results):
                raise typer.Exit(code=1)

        _guarded(action)

    return app


def _parse_value(raw: str):
    """sweep 값: int → float → 문자열 순으로 해석"""
    raw = raw.strip()
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


# 애플리케이션 인스턴스 생성
app = create_app()


def cli() -> None:
    app()


if __name__ == "__main__":
    cli()
