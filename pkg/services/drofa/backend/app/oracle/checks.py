"""
기준 구현 대비 교차 검증 (`drofa oracle-check`)
"""
import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from backend.app.core.geometry import ProxProblem, project_simplex, prox_simplex
from backend.app.models.specs import RegularizerSpec
from backend.app.oracle.grid import grid_argmax_over_simplex, regularizer_on_points
from backend.app.oracle.projection import brute_force_simplex_projection
from backend.app.oracle.saddle import SaddleProblem, saddle_point_oracle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_projection(rng: np.random.Generator, n_vectors: int = 1000) -> CheckResult:
    worst = 0.0
    for _ in range(n_vectors):
        n = int(rng.integers(1, 17))
        v = rng.normal(scale=2.0, size=n)
        exact = brute_force_simplex_projection(v)
        deviation = np.max(np.abs(project_simplex(v).values - exact))
        worst = max(worst, float(deviation))
    return CheckResult("simplex projection", worst < 1e-9, f"max deviation {worst:.2e}")


def check_prox_none(rng: np.random.Generator, n_vectors: int = 200) -> CheckResult:
    mismatches = 0
    for _ in range(n_vectors):
        anchor = rng.normal(size=int(rng.integers(1, 9)))
        problem = ProxProblem(
            anchor=anchor, step=0.5, scale=3.0, regularizer=RegularizerSpec()
        )
        projected = project_simplex(anchor).values
        if not np.array_equal(prox_simplex(problem).values, projected):
            mismatches += 1
    return CheckResult(
        "prox(g=none) == projection", mismatches == 0, f"{mismatches} mismatches"
    )


def prox_objective(problem: ProxProblem) -> Callable[[np.ndarray], np.ndarray]:
    """τ g(u) - (1/2γ)‖anchor - u‖² (grid 탐색용)"""

    def objective(points: np.ndarray) -> np.ndarray:
        distance = np.sum((points - problem.anchor[np.newaxis, :]) ** 2, axis=1)
        return (
            problem.scale * regularizer_on_points(problem.regularizer, points)
            - distance / (2.0 * problem.step)
        )

    return objective


def check_prox_grid(rng: np.random.Generator, n_cases: int = 10) -> CheckResult:
    worst = 0.0
    regularizers = (
        RegularizerSpec(kind="quadratic_to_uniform", strength=1.0),
        RegularizerSpec(kind="kl_to_uniform", strength=1.0),
    )
    for _ in range(n_cases):
        for g in regularizers:
            n = int(rng.integers(2, 4))
            problem = ProxProblem(
                anchor=rng.uniform(0.0, 1.0, size=n), step=0.1, scale=1.0, regularizer=g
            )
            _, grid_best = grid_argmax_over_simplex(prox_objective(problem), n, 1e-5)
            deviation = np.max(np.abs(prox_simplex(problem).values - grid_best))
            worst = max(worst, float(deviation))
    return CheckResult("prox vs dense grid", worst < 1e-4, f"max deviation {worst:.2e}")


def check_saddle_symmetry() -> CheckResult:
    problem = SaddleProblem(
        centers=np.array([[1.0, 0.5], [-1.0, -0.5]]),
        curvature=1.0,
        regularizer=RegularizerSpec(kind="quadratic_to_uniform", strength=1.0),
    )
    solution = saddle_point_oracle(problem)
    error = max(
        float(np.max(np.abs(solution.w_star))),
        float(np.max(np.abs(solution.lambda_star - 0.5))),
    )
    return CheckResult("symmetric saddle", error < 1e-10, f"max error {error:.2e}")


def run_oracle_checks(seed: int = 0, n_vectors: int = 1000) -> List[CheckResult]:
    """전체 교차 검증 실행"""
    rng = np.random.default_rng(seed)
    results = [
        check_projection(rng, n_vectors),
        check_prox_none(rng),
        check_prox_grid(rng),
        check_saddle_symmetry(),
    ]
    for result in results:
        status = "✅" if result.passed else "❌"
        logger.info(f"{status} {result.name}: {result.detail}")
    return results
