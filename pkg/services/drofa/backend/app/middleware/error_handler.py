import logging
from typing import Callable, Type

from rich.console import Console

from backend.app.core.config import settings
from backend.app.core.exceptions import (
    BaseDrofaException,
    ConfigError,
    DataSourceError,
    DivergenceDetected,
    NumericalError,
    SchemaError,
)

logger = logging.getLogger(__name__)

error_console = Console(stderr=True)

UNEXPECTED_EXIT_CODE = 70


def base_exception_handler(exc: BaseDrofaException) -> int:
    """기본 예외 핸들러"""
    logger.error(f"{exc.__class__.__name__}: {exc.message}")
    error_console.print(
        f"[bold red]❌ {exc.__class__.__name__}[/bold red]: {exc.message}"
    )
    return exc.exit_code


def config_exception_handler(exc: ConfigError) -> int:
    """설정 에러 핸들러"""
    error_console.print(f"[bold yellow]⚙️ Config error[/bold yellow]: {exc.message}")
    if isinstance(exc, SchemaError) and exc.suggestion:
        error_console.print(f"   hint: use '{exc.suggestion}' instead of '{exc.key}'")
    return exc.exit_code


def data_source_exception_handler(exc: DataSourceError) -> int:
    """데이터 로딩 에러 핸들러"""
    logger.error(f"Data source error: {exc.message}")
    error_console.print(f"[bold red]📂 Data error[/bold red]: {exc.message}")
    return exc.exit_code


def divergence_exception_handler(exc: DivergenceDetected) -> int:
    """발산 에러 핸들러 (이미 기록된 metrics.csv 행은 유효)"""
    logger.critical(f"Divergence: {exc.message}")
    error_console.print(f"[bold red]💥 Diverged[/bold red]: {exc.message}")
    error_console.print("   partial metrics were flushed to the output directory")
    return exc.exit_code


def numerical_exception_handler(exc: NumericalError) -> int:
    logger.error(f"Numerical error: {exc.message}")
    error_console.print(f"[bold red]🔢 Numerical error[/bold red]: {exc.message}")
    return exc.exit_code


# 구체적인 타입이 먼저 매칭되도록 순서 유지
EXCEPTION_HANDLERS: list[tuple[Type[BaseDrofaException], Callable[..., int]]] = [
    (DivergenceDetected, divergence_exception_handler),
    (ConfigError, config_exception_handler),
    (DataSourceError, data_source_exception_handler),
    (NumericalError, numerical_exception_handler),
    (BaseDrofaException, base_exception_handler),
]


def handle_exception(exc: BaseException) -> int:
    """예외 → exit code (메시지는 stderr 로 출력)"""
    for exc_type, handler in EXCEPTION_HANDLERS:
        if isinstance(exc, exc_type):
            return handler(exc)

    # 글로벌 핸들러
    logger.exception(f"Unexpected error: {exc}")
    if settings.debug:
        error_console.print_exception()
    else:
        error_console.print(
            f"[bold red]❌ Internal error[/bold red]: {exc.__class__.__name__}"
        )
    return UNEXPECTED_EXIT_CODE
