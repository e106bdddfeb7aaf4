# shared/utils/logger.py
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Union

from loguru import logger


class InterceptHandler(logging.Handler):
    """표준 로깅을 loguru로 리다이렉트"""

    def emit(self, record):
        # 해당 로그 레벨을 loguru 레벨로 매핑
        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        # 호출자 정보 가져오기
        frame, depth = logging.currentframe(), 2
        while frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(
            level, record.getMessage()
        )


def setup_logger(
    level: Optional[str] = None,
    log_file: Optional[Union[str, Path]] = None,
    colorize: bool = True,
):
    """
    로거 설정

    Args:
        level: 로그 레벨 (없으면 LOG_LEVEL 환경 변수, 기본 INFO)
        log_file: 파일 싱크 경로 (실험 결과 디렉토리 안에 남길 때 사용)
        colorize: 콘솔 컬러 출력 여부
    """

    # 기존 핸들러 제거
    logger.remove()

    log_level = (level or os.getenv("LOG_LEVEL", "INFO")).upper()

    # 콘솔 출력 설정 (stdout은 CLI 결과 출력용이므로 stderr 사용)
    logger.add(
        sys.stderr,
        level=log_level,
        format="<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | "
        "<level>{level: <8}</level> | "
        "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
        "<level>{message}</level>",
        colorize=colorize,
    )

    # 파일 출력 설정
    if log_file is not None:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        logger.add(
            log_path,
            level=log_level,
            format=(
                "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | "
                "{name}:{function}:{line} - {message}"
            ),
            rotation="100 MB",
            retention="30 days",
            compression="zip",
        )

    # 표준 logging을 loguru로 리다이렉트
    logging.basicConfig(handlers=[InterceptHandler()], level=0, force=True)

    return logger
