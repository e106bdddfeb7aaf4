from pathlib import Path
from typing import Optional
import logging

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

    # 기본 설정
    environment: str = "dev"
    debug: bool = False
    log_level: str = "INFO"
    log_to_file: bool = False

    # 결과 출력 설정
    output_dir: str = "results"
    drofa_out: Optional[str] = Field(default=None, validation_alias="DROFA_OUT")

    # 실험 실행 설정
    default_seed_count: int = 10
    workers: int = 1  # seed 단위 병렬 실행 프로세스 수

    def resolve_output_dir(self, configured: Optional[str]) -> Path:
        """
        출력 디렉토리 결정

        우선순위: DROFA_OUT 환경 변수 > config 파일 > 기본값
        """
        if self.drofa_out:
            return Path(self.drofa_out)
        return Path(configured or self.output_dir)

    def validate_settings(self) -> bool:
        """설정 유효성 검증"""
        errors = []

        if self.workers < 1:
            errors.append(f"workers must be >= 1, got {self.workers}")
        if self.default_seed_count < 1:
            errors.append(
                f"default_seed_count must be >= 1, got {self.default_seed_count}"
            )
        if self.log_level.upper() not in {
            "TRACE",
            "DEBUG",
            "INFO",
            "SUCCESS",
            "WARNING",
            "ERROR",
            "CRITICAL",
        }:
            errors.append(f"Unknown log level: {self.log_level}")

        if errors:
            for error in errors:
                logger.error(f"Configuration error: {error}")
            return False

        return True


# 전역 설정 인스턴스
settings = Settings()
