"""
CSV 파일 기반 federation (pandas)

- by_label: label 값 별로 shard 구성
- by_column(col): 지정 열 값 별로 shard 구성 (그룹 열은 feature 에서 제외)
"""
import logging
import re
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from backend.app.core.exceptions import (
    BadConfig,
    DataIoError,
    EmptyPartition,
    ParseError,
)
from backend.app.models.federation import ClientShard, Federation
from backend.app.models.specs import ObjectiveSpec
from backend.app.repositories.base import FederationRepository
from backend.app.schemas.config import CsvFederationSpec

logger = logging.getLogger(__name__)

_LINE_PATTERN = re.compile(r"line (\d+)")


def _read_frame(path: Path, header: bool) -> pd.DataFrame:
    if not path.is_file():
        raise DataIoError(f"CSV file not found: {path}")
    try:
        return pd.read_csv(
            path,
            header=0 if header else None,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError as e:
        raise ParseError(1, "empty file") from e
    except pd.errors.ParserError as e:
        match = _LINE_PATTERN.search(str(e))
        raise ParseError(int(match.group(1)) if match else 0, str(e)) from e
    except OSError as e:
        raise DataIoError(f"Cannot read {path}: {e}") from e


def _to_numeric(frame: pd.DataFrame, header: bool) -> np.ndarray:
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().to_numpy()
    if bad.any():
        row = int(np.flatnonzero(bad.any(axis=1))[0])
        col = int(np.flatnonzero(bad[row])[0])
        # 파일 기준 1-based 줄 번호
        line = row + 1 + (1 if header else 0)
        raise ParseError(
            line, f"non-numeric cell {frame.iat[row, col]!r} in column {col}"
        )
    return numeric.to_numpy(dtype=np.float64)


def _resolve_column(index: int, n_cols: int, what: str) -> int:
    resolved = index if index >= 0 else n_cols + index
    if not 0 <= resolved < n_cols:
        raise BadConfig(f"{what} index {index} out of range for {n_cols} columns")
    return resolved


def _encode_labels(labels: np.ndarray, objective: ObjectiveSpec) -> np.ndarray:
    if not objective.is_classification:
        return labels
    classes, encoded = np.unique(labels, return_inverse=True)
    n_expected = objective.heads if objective.heads > 1 else 2
    if classes.shape[0] > n_expected:
        raise BadConfig(
            f"CSV has {classes.shape[0]} distinct labels "
            f"but the objective expects {n_expected}"
        )
    return encoded.astype(np.float64)


def load_csv_federation(
    path: Union[str, Path],
    partition: str = "by_label",
    column: Optional[int] = None,
    label_column: int = -1,
    header: bool = False,
    shards_per_group: int = 1,
    objective: Optional[ObjectiveSpec] = None,
) -> Federation:
    """
    CSV → Federation

    shard 순서는 그룹 값 오름차순, shards_per_group > 1 이면 그룹마다 연속 분할

    Raises:
        DataIoError, ParseError(line), EmptyPartition(label), BadConfig
    """
    objective = objective or ObjectiveSpec(kind="logistic_regression")
    if partition not in ("by_label", "by_column"):
        raise BadConfig(f"Unknown partition rule '{partition}'")
    if shards_per_group < 1:
        raise BadConfig("shards_per_group must be >= 1")

    csv_path = Path(path)
    values = _to_numeric(_read_frame(csv_path, header), header)
    n_cols = values.shape[1]

    label_idx = _resolve_column(label_column, n_cols, "label column")
    if partition == "by_column":
        if column is None:
            raise BadConfig("partition 'by_column' requires a column index")
        group_idx = _resolve_column(column, n_cols, "group column")
        if group_idx == label_idx:
            raise BadConfig("group column must differ from the label column")
        drop = {label_idx, group_idx}
    else:
        group_idx = label_idx
        drop = {label_idx}

    feature_cols = [c for c in range(n_cols) if c not in drop]
    if not feature_cols:
        raise BadConfig("CSV needs at least one feature column")

    features = values[:, feature_cols]
    labels = _encode_labels(values[:, label_idx], objective)
    groups = values[:, group_idx]

    shards = []
    for value in np.unique(groups):
        rows = np.flatnonzero(groups == value)
        for part, chunk in enumerate(np.array_split(rows, shards_per_group)):
            if chunk.size == 0:
                name = f"{value:g}" if shards_per_group == 1 else f"{value:g}#{part}"
                raise EmptyPartition(name)
            shards.append(
                ClientShard(
                    client_id=len(shards),
                    features=features[chunk],
                    labels=labels[chunk],
                )
            )

    logger.info(
        f"📥 Loaded {values.shape[0]} rows from {csv_path} "
        f"into {len(shards)} shards"
    )
    return Federation(shards=tuple(shards), objective=objective)


class CsvFederationRepository(FederationRepository):
    def __init__(self, spec: CsvFederationSpec):
        self.spec = spec

    def build(self, seed: int) -> Federation:
        spec = self.spec
        return load_csv_federation(
            path=spec.path,
            partition=spec.partition,
            column=spec.column,
            label_column=spec.label_column,
            header=spec.header,
            shards_per_group=spec.shards_per_group,
            objective=spec.objective,
        )

    @property
    def seed_dependent(self) -> bool:
        return False
