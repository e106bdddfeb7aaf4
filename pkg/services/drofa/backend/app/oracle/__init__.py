"""
brute-force 기준 구현

학습/평가 경로에서는 import 하지 않음 (테스트와 `drofa oracle-check` 전용)
"""
from backend.app.oracle.grid import grid_argmax_over_simplex, grid_max_over_simplex
from backend.app.oracle.projection import brute_force_simplex_projection
from backend.app.oracle.saddle import (
    SaddleProblem,
    SaddleSolution,
    oracle_gap,
    saddle_point_oracle,
)

__all__ = [
    "SaddleProblem",
    "SaddleSolution",
    "brute_force_simplex_projection",
    "grid_argmax_over_simplex",
    "grid_max_over_simplex",
    "oracle_gap",
    "saddle_point_oracle",
]
