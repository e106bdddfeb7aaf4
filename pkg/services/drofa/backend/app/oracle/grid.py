"""
N <= 3 simplex 위 dense grid 최대화

N = 2 는 전체 grid, N = 3 은 coarse-to-fine 재탐색 (오목 목적 함수 가정)
오차 한계 ≈ Lipschitz(objective) · resolution
"""
from typing import Callable, Tuple

import numpy as np
from scipy.special import xlogy

from backend.app.models.specs import RegularizerSpec

# points (K × N) → values (K,)
SimplexObjective = Callable[[np.ndarray], np.ndarray]

_COARSE_STEP = 1e-2
_REFINE_FACTOR = 10.0


def regularizer_on_points(g: RegularizerSpec, points: np.ndarray) -> np.ndarray:
    """g(λ) 를 점 집합 위에서 계산 (경계에서 0·ln0 = 0)"""
    n = points.shape[1]
    if g.kind == "none":
        return np.zeros(points.shape[0])
    if g.kind == "quadratic_to_uniform":
        return -0.5 * g.strength * np.sum((points - 1.0 / n) ** 2, axis=1)
    return -g.strength * np.sum(xlogy(points, n * points), axis=1)


def _line_points(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    first = np.minimum(lo + step * np.arange(count), hi)
    return np.unique(np.append(first, hi))


def _best_on_segment(objective: SimplexObjective, resolution: float) -> np.ndarray:
    first = _line_points(0.0, 1.0, resolution)
    points = np.column_stack([first, 1.0 - first])
    return points[int(np.argmax(objective(points)))]


def _triangle_points(center: np.ndarray, half_width: float, step: float) -> np.ndarray:
    lower = np.maximum(0.0, center - half_width)
    upper = np.minimum(1.0, center + half_width)
    axis0 = _line_points(lower[0], upper[0], step)
    axis1 = _line_points(lower[1], upper[1], step)
    a, b = np.meshgrid(axis0, axis1, indexing="ij")
    a, b = a.reshape(-1), b.reshape(-1)
    keep = a + b <= 1.0 + 1e-12
    a, b = a[keep], b[keep]
    return np.column_stack([a, b, np.maximum(1.0 - a - b, 0.0)])


def _best_on_triangle(objective: SimplexObjective, resolution: float) -> np.ndarray:
    step = max(_COARSE_STEP, resolution)
    points = _triangle_points(np.array([0.5, 0.5]), 0.5, step)
    best = points[int(np.argmax(objective(points)))]
    while step > resolution:
        half_width = 2.0 * step
        step = max(step / _REFINE_FACTOR, resolution)
        points = _triangle_points(best[:2], half_width, step)
        best = points[int(np.argmax(objective(points)))]
    return best


def grid_argmax_over_simplex(
    objective: SimplexObjective, n: int, resolution: float
) -> Tuple[float, np.ndarray]:
    """vectorized objective 의 simplex grid 최대점"""
    if not 1 <= n <= 3:
        raise ValueError(f"grid search supports N <= 3, got {n}")
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")

    if n == 1:
        best = np.ones(1)
    elif n == 2:
        best = _best_on_segment(objective, resolution)
    else:
        best = _best_on_triangle(objective, resolution)
    return float(objective(best[np.newaxis, :])[0]), best


def grid_max_over_simplex(
    loss_values, g: RegularizerSpec, resolution: float = 1e-5
) -> Tuple[float, np.ndarray]:
    """max_λ Σ λ_i f_i + g(λ) 의 grid 근사"""
    losses = np.asarray(loss_values, dtype=np.float64).reshape(-1)

    def objective(points: np.ndarray) -> np.ndarray:
        return points @ losses + regularizer_on_points(g, points)

    return grid_argmax_over_simplex(objective, losses.shape[0], resolution)
