from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PrimalDomainSpec(_Spec):
    """primal 도메인 W (제약 없음 또는 원점 중심 l2 ball)"""

    kind: Literal["unconstrained", "l2_ball"] = "unconstrained"
    radius: Optional[float] = Field(default=None, description="l2_ball 반지름")

    @model_validator(mode="after")
    def check_radius(self):
        if self.kind == "l2_ball":
            if self.radius is None or not (0.0 < self.radius < float("inf")):
                raise ValueError("l2_ball requires a finite radius > 0")
        elif self.radius is not None:
            raise ValueError("radius is only valid for kind='l2_ball'")
        return self


class ObjectiveSpec(_Spec):
    """로컬 목적 함수 f_i 의 종류"""

    kind: Literal["logistic_regression", "quadratic", "sigmoid_nonconvex"]
    l2_term: float = Field(default=0.0, ge=0.0)
    curvature: float = Field(default=1.0, description="quadratic 전용 곡률 μ")
    n_classes: int = Field(
        default=2, ge=2, description="logistic: 2=binary, >2=one-vs-rest"
    )
    fit_intercept: bool = Field(default=False, description="상수 feature 추가 여부")

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == "quadratic" and not self.curvature > 0.0:
            raise ValueError("quadratic objective requires curvature > 0")
        if self.kind != "logistic_regression" and self.n_classes != 2:
            raise ValueError("n_classes is only meaningful for logistic_regression")
        return self

    @property
    def heads(self) -> int:
        """파라미터 블록 개수 (one-vs-rest head 수)"""
        if self.kind == "logistic_regression" and self.n_classes > 2:
            return self.n_classes
        return 1

    @property
    def is_classification(self) -> bool:
        return self.kind in ("logistic_regression", "sigmoid_nonconvex")

    @property
    def is_convex(self) -> bool:
        return self.kind in ("logistic_regression", "quadratic")

    def param_dim(self, feature_dim: int) -> int:
        """feature 차원 d 로부터 모델 차원 계산"""
        intercept = self.fit_intercept and self.kind != "quadratic"
        return (feature_dim + int(intercept)) * self.heads


class RegularizerSpec(_Spec):
    """dual regularizer g(λ)"""

    kind: Literal["none", "quadratic_to_uniform", "kl_to_uniform"] = "none"
    strength: float = Field(default=0.0, ge=0.0, description="μ_λ 또는 ρ")

    @model_validator(mode="after")
    def check_strength(self):
        if self.kind != "none" and not self.strength > 0.0:
            raise ValueError(f"{self.kind} requires strength > 0")
        return self

    @property
    def is_none(self) -> bool:
        return self.kind == "none"
