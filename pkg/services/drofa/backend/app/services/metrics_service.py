"""
평가 지표

- phi_linear / phi_regularized: worst-distribution 목적 함수 Φ(w)
- gradient_dissimilarity_at: client gradient 간 최대 제곱 거리
- primal_dual_gap: max_λ F(ŵ, λ) - min_w F(w, λ̂)
- classification_metrics: client 별 정확도, worst / 평균 / 표준편차
- moreau_grad_norm_grid: d <= 2 grid 기반 Moreau envelope gradient norm
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from backend.app.core.exceptions import (
    BadConfig,
    GridTooCoarse,
    SolverNoConvergence,
    WrongObjectiveKind,
)
from backend.app.core.geometry import ProxProblem, project_primal, prox_simplex
from backend.app.core.objectives import (
    all_grads,
    all_losses,
    eval_regularizer,
    scores,
    smoothness_constant,
    strong_convexity_constant,
)
from backend.app.models.domain import MixtureWeights, ModelParams
from backend.app.models.federation import Federation
from backend.app.models.results import MetricRecord
from backend.app.models.specs import PrimalDomainSpec, RegularizerSpec

logger = logging.getLogger(__name__)

PHI_TOLERANCE = 1e-10
PHI_MAX_ITER = 10_000
GAP_GRAD_TOLERANCE = 1e-8


def _values(w) -> np.ndarray:
    return w.values if isinstance(w, ModelParams) else np.asarray(w, dtype=np.float64)


# =============================================================================
# Φ(w)
# =============================================================================


def phi_linear(fed: Federation, w) -> Tuple[float, int]:
    """Φ(w) = max_i f_i(w), 동률은 가장 작은 client id"""
    losses = all_losses(fed, _values(w))
    worst = int(np.argmax(losses))
    return float(losses[worst]), worst


def regularized_value(
    losses: np.ndarray, lam: MixtureWeights, g: RegularizerSpec
) -> float:
    """Σ λ_i f_i + g(λ)"""
    g_value, _ = eval_regularizer(g, lam)
    return math.fsum((lam.values * losses).tolist()) + g_value


def maximize_over_simplex(
    losses: np.ndarray,
    g: RegularizerSpec,
    tolerance: float = PHI_TOLERANCE,
    max_iter: int = PHI_MAX_ITER,
) -> Tuple[float, MixtureWeights]:
    """
    max_{λ∈Λ} Σ λ_i f_i + g(λ) 를 prox fixed-point 반복으로 계산

    λ ← prox_{γ g}(λ + γ f), γ = 100 / strength
    """
    n = losses.shape[0]
    if g.is_none:
        worst = int(np.argmax(losses))
        return float(losses[worst]), MixtureWeights.vertex(n, worst)

    step = 100.0 / g.strength
    lam = MixtureWeights.uniform(n)
    residual = float("inf")
    for _ in range(max_iter):
        problem = ProxProblem(
            anchor=lam.values + step * losses, step=step, scale=1.0, regularizer=g
        )
        nxt = prox_simplex(problem)
        residual = float(np.linalg.norm(nxt.values - lam.values))
        lam = nxt
        if residual < tolerance:
            return regularized_value(losses, lam, g), lam

    logger.error(f"❌ Φ fixed-point iteration stalled at residual {residual:.3e}")
    raise SolverNoConvergence(residual, max_iter)


def phi_regularized(
    fed: Federation, w, g: RegularizerSpec
) -> Tuple[float, MixtureWeights]:
    """
    Φ(w) = max_{λ∈Λ} Σ λ_i f_i(w) + g(λ)

    g = none 이면 phi_linear 결과 (vertex λ)
    """
    if g.is_none:
        value, worst = phi_linear(fed, w)
        return value, MixtureWeights.vertex(fed.n_clients, worst)
    return maximize_over_simplex(all_losses(fed, _values(w)), g)


# =============================================================================
# Γ, gap
# =============================================================================


def gradient_dissimilarity_at(fed: Federation, w) -> float:
    """max_{i,j} ‖∇f_i(w) - ∇f_j(w)‖²"""
    if fed.n_clients == 1:
        return 0.0
    grads = all_grads(fed, _values(w))
    return float(pdist(grads, metric="sqeuclidean").max())


def weighted_grad(fed: Federation, w: np.ndarray, lam: MixtureWeights) -> np.ndarray:
    grads = all_grads(fed, w)
    return lam.values @ grads


def minimize_weighted_loss(
    fed: Federation,
    lam: MixtureWeights,
    w_start: np.ndarray,
    budget: int,
    domain: Optional[PrimalDomainSpec] = None,
) -> Tuple[np.ndarray, float]:
    """
    min_w Σ λ_i f_i(w) 를 step 1/L projected gradient descent 로 근사

    Returns:
        (최종 w, gradient mapping norm)
    """
    L = smoothness_constant(fed)
    step = 1.0 / L
    w = project_primal(w_start, domain).values
    mapping = float("inf")
    for _ in range(budget):
        nxt = project_primal(w - step * weighted_grad(fed, w, lam), domain).values
        mapping = float(np.linalg.norm(nxt - w)) / step
        w = nxt
        if mapping < 1e-12:
            break
    return w, mapping


def primal_dual_gap(
    fed: Federation,
    w_hat,
    lambda_hat: MixtureWeights,
    g: RegularizerSpec,
    inner_budget: int = 10_000,
    domain: Optional[PrimalDomainSpec] = None,
) -> float:
    """
    max_λ F(ŵ, λ) - min_w F(w, λ̂)

    inner minimizer 는 feasible 한 점을 반환하므로 min 항은 위에서 근사됨

    Raises:
        WrongObjectiveKind: 비볼록 목적 함수
        SolverNoConvergence: strongly convex 인데 gradient mapping 이 1e-8 이상
    """
    if not fed.objective.is_convex:
        raise WrongObjectiveKind(
            f"primal_dual_gap needs a convex objective, got {fed.objective.kind}"
        )

    w_vec = _values(w_hat)
    upper, _ = phi_regularized(fed, w_vec, g)

    w_min, mapping = minimize_weighted_loss(
        fed, lambda_hat, w_vec, inner_budget, domain
    )
    if strong_convexity_constant(fed) > 0.0 and mapping >= GAP_GRAD_TOLERANCE:
        logger.error(f"❌ Gap inner solver stopped at gradient mapping {mapping:.3e}")
        raise SolverNoConvergence(mapping, inner_budget)

    lower = regularized_value(all_losses(fed, w_min), lambda_hat, g)
    return upper - lower


# =============================================================================
# 분류 지표
# =============================================================================


@dataclass(frozen=True)
class ClassificationReport:
    per_client_accuracy: np.ndarray
    worst_accuracy: float
    worst_client: int
    avg_accuracy: float
    fairness_std: float


def classification_metrics(
    fed: Federation, w, use_holdout: bool = True
) -> ClassificationReport:
    """
    client 별 정확도

    binary: ⟨w,x⟩ > 0 이면 1, one-vs-rest: head score 의 argmax
    holdout split 이 있으면 그것으로 평가

    Raises:
        WrongObjectiveKind
    """
    objective = fed.objective
    if not objective.is_classification:
        raise WrongObjectiveKind(
            f"classification metrics undefined for {objective.kind}"
        )

    target = fed
    if use_holdout and fed.holdout is not None:
        target = fed.holdout_federation()
    w_vec = _values(w)

    accuracies = []
    for i in range(target.n_clients):
        s = scores(objective, w_vec, target.design(i))
        if objective.heads > 1:
            predicted = np.argmax(s, axis=1)
        else:
            predicted = (s > 0.0).astype(np.intp)
        labels = target.shard(i).labels.astype(np.intp)
        accuracies.append(float(np.mean(predicted == labels)))

    per_client = np.array(accuracies)
    worst = int(np.argmin(per_client))
    return ClassificationReport(
        per_client_accuracy=per_client,
        worst_accuracy=float(per_client[worst]),
        worst_client=worst,
        avg_accuracy=float(per_client.mean()),
        fairness_std=float(per_client.std()),
    )


# =============================================================================
# Moreau envelope 진단
# =============================================================================


@dataclass(frozen=True)
class GridSpec:
    """w 중심 정사각 grid (half_width, resolution)"""

    half_width: float = 1.0
    resolution: float = 1e-3

    def __post_init__(self):
        if not (self.half_width > 0.0 and self.resolution > 0.0):
            raise BadConfig("grid half_width and resolution must be positive")

    def axis(self) -> np.ndarray:
        steps = int(round(self.half_width / self.resolution))
        return np.arange(-steps, steps + 1) * self.resolution


def moreau_grad_norm_grid(
    fed: Federation,
    w,
    L: float,
    grid_spec: GridSpec = GridSpec(),
    g: Optional[RegularizerSpec] = None,
    domain: Optional[PrimalDomainSpec] = None,
) -> float:
    """
    ‖∇Φ_{1/2L}(w)‖ = 2L ‖w - argmin_u {Φ(u) + L‖u - w‖²}‖

    정확도는 grid 간격으로 제한됨

    Raises:
        GridTooCoarse: argmin 이 grid 경계
    """
    w_vec = _values(w)
    dim = w_vec.shape[0]
    if dim > 2:
        raise BadConfig(f"Moreau grid diagnostic supports d <= 2, got d={dim}")

    g = g or RegularizerSpec()
    axis = grid_spec.axis()
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    offsets = np.stack(mesh, axis=-1).reshape(-1, dim)
    points = w_vec[np.newaxis, :] + offsets

    feasible = np.ones(points.shape[0], dtype=bool)
    if domain is not None and domain.kind == "l2_ball":
        feasible = np.linalg.norm(points, axis=1) <= domain.radius

    values = np.full(points.shape[0], np.inf)
    for k in np.flatnonzero(feasible):
        phi, _ = phi_regularized(fed, points[k], g)
        values[k] = phi + L * float(offsets[k] @ offsets[k])

    best = int(np.argmin(values))
    edge = grid_spec.half_width - 0.5 * grid_spec.resolution
    if np.any(np.abs(offsets[best]) >= edge):
        raise GridTooCoarse(
            "Envelope argmin lies on the grid boundary "
            f"(half_width={grid_spec.half_width})"
        )
    return 2.0 * L * float(np.linalg.norm(offsets[best]))


# =============================================================================
# stage 평가
# =============================================================================


class MetricsService:
    """
    stage 경계 평가기 (FederatedRunner 의 evaluator)

    loss 는 학습 shard, 정확도는 holdout 이 있으면 holdout 에서 계산
    """

    def __init__(self, fed: Federation, seed: int):
        self.fed = fed
        self.seed = seed

    def evaluate(self, stage: int, iteration: int, comm_rounds: int, w) -> MetricRecord:
        w_vec = _values(w)
        losses = all_losses(self.fed, w_vec)
        worst_client = int(np.argmax(losses))

        worst_acc = avg_acc = fairness = None
        if self.fed.objective.is_classification:
            report = classification_metrics(self.fed, w_vec)
            worst_acc = report.worst_accuracy
            avg_acc = report.avg_accuracy
            fairness = report.fairness_std

        return MetricRecord(
            seed=self.seed,
            stage=stage,
            iteration=iteration,
            comm_rounds=comm_rounds,
            avg_loss=float(losses.mean()),
            worst_loss=float(losses[worst_client]),
            worst_client=worst_client,
            worst_acc=worst_acc,
            avg_acc=avg_acc,
            fairness_std=fairness,
            gamma_est=gradient_dissimilarity_at(self.fed, w_vec),
        )

    def __call__(self, state) -> MetricRecord:
        return self.evaluate(
            state.stage, state.iteration, state.comm_rounds, state.w_bar
        )

    def final_summary(
        self,
        w_hat,
        lambda_hat: MixtureWeights,
        g: RegularizerSpec,
        report_gap: bool,
        inner_budget: int,
        domain: Optional[PrimalDomainSpec] = None,
    ) -> dict:
        """summary.json 용 최종 해 지표"""
        w_vec = _values(w_hat)
        phi, lam_star = phi_regularized(self.fed, w_vec, g)
        summary = {
            "phi": phi,
            "phi_lambda": lam_star.to_list(),
            "gamma_est": gradient_dissimilarity_at(self.fed, w_vec),
        }
        if self.fed.objective.is_classification:
            report = classification_metrics(self.fed, w_vec)
            summary.update(
                {
                    "worst_acc": report.worst_accuracy,
                    "avg_acc": report.avg_accuracy,
                    "fairness_std": report.fairness_std,
                    "per_client_acc": report.per_client_accuracy.tolist(),
                }
            )
        if report_gap and self.fed.objective.is_convex:
            try:
                summary["gap"] = primal_dual_gap(
                    self.fed, w_vec, lambda_hat, g, inner_budget, domain
                )
            except SolverNoConvergence as e:
                logger.warning(f"⚠️ Gap not reported: {e.message}")
                summary["gap"] = None
        return summary


def series_gamma_max(records: List[MetricRecord]) -> float:
    """실행 중 관측된 Γ 추정치의 최대값 (Γ 의 하한)"""
    return max((r.gamma_est for r in records), default=0.0)
