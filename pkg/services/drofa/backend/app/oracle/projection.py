"""
simplex projection brute-force 기준 구현

모든 2^N - 1 active set 에 대해 등식 제약 least squares 를 풀고
feasible 한 후보 중 최소 거리를 선택
"""
from functools import lru_cache

import numpy as np

MAX_BRUTE_FORCE_DIM = 16
_FEASIBILITY_SLACK = 1e-12


@lru_cache(maxsize=MAX_BRUTE_FORCE_DIM)
def _support_masks(n: int) -> np.ndarray:
    codes = np.arange(1, 2**n, dtype=np.int64)
    bits = (codes[:, np.newaxis] >> np.arange(n)) & 1
    masks = bits.astype(bool)
    masks.setflags(write=False)
    return masks


def brute_force_simplex_projection(v) -> np.ndarray:
    """argmin_{λ∈Λ} ‖λ - v‖² (len(v) <= 16)"""
    vec = np.asarray(v, dtype=np.float64).reshape(-1)
    n = vec.shape[0]
    if not 1 <= n <= MAX_BRUTE_FORCE_DIM:
        raise ValueError(
            f"brute-force projection supports 1 <= N <= {MAX_BRUTE_FORCE_DIM}"
        )

    masks = _support_masks(n)
    counts = masks.sum(axis=1)
    # support S 위에서 λ_S = v_S - (Σ v_S - 1)/|S|
    shift = (masks @ vec - 1.0) / counts
    candidates = np.where(masks, vec[np.newaxis, :] - shift[:, np.newaxis], 0.0)

    feasible = np.all(candidates >= -_FEASIBILITY_SLACK, axis=1)
    distances = np.sum((candidates - vec[np.newaxis, :]) ** 2, axis=1)
    distances[~feasible] = np.inf

    best = int(np.argmin(distances))
    return np.maximum(candidates[best], 0.0)
