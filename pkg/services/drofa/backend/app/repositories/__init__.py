from backend.app.core.exceptions import BadConfig
from backend.app.repositories.base import FederationRepository
from backend.app.repositories.csv_repository import (
    CsvFederationRepository,
    load_csv_federation,
)
from backend.app.repositories.synthetic_repository import (
    QuadraticFederationRepository,
    SyntheticFederationRepository,
    make_quadratic_federation,
    make_synthetic_federation,
)
from backend.app.schemas.config import (
    CsvFederationSpec,
    QuadraticFederationSpec,
    SyntheticFederationSpec,
)


def repository_for(spec) -> FederationRepository:
    """federation spec 에 맞는 repository"""
    if isinstance(spec, SyntheticFederationSpec):
        return SyntheticFederationRepository(spec)
    if isinstance(spec, QuadraticFederationSpec):
        return QuadraticFederationRepository(spec)
    if isinstance(spec, CsvFederationSpec):
        return CsvFederationRepository(spec)
    raise BadConfig(f"Unsupported federation source: {type(spec).__name__}")


__all__ = [
    "FederationRepository",
    "CsvFederationRepository",
    "QuadraticFederationRepository",
    "SyntheticFederationRepository",
    "load_csv_federation",
    "make_quadratic_federation",
    "make_synthetic_federation",
    "repository_for",
]
