from typing import Optional


class BaseDrofaException(Exception):
    """기본 예외"""

    def __init__(self, message: str, exit_code: int = 1):
        self.message = message
        self.exit_code = exit_code
        super().__init__(self.message)


# =============================================================================
# 도메인 값 검증
# =============================================================================


class DomainValidationError(BaseDrofaException):
    """도메인 타입 검증 에러"""

    def __init__(self, message: str):
        super().__init__(message, exit_code=2)


class EmptyVector(DomainValidationError):
    def __init__(self, message: str = "Vector must be nonempty"):
        super().__init__(message)


class NegativeEntry(DomainValidationError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"Negative mixture weight at index {index}: {value!r}")


class SumOutOfTolerance(DomainValidationError):
    def __init__(self, actual_sum: float, tolerance: float):
        self.actual_sum = actual_sum
        super().__init__(
            f"Mixture weights sum to {actual_sum!r} (tolerance {tolerance:g})"
        )


class DimensionMismatch(DomainValidationError):
    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Dimension mismatch: expected {expected}, got {actual}")


# =============================================================================
# 목적 함수 평가
# =============================================================================


class ObjectiveError(BaseDrofaException):
    """목적 함수 평가 에러"""

    def __init__(self, message: str):
        super().__init__(message, exit_code=3)


class BadIndex(ObjectiveError):
    pass


class NonFiniteLoss(ObjectiveError):
    def __init__(self, client_id: int):
        self.client_id = client_id
        super().__init__(f"Non-finite loss on client {client_id}")


class NonFiniteGradient(ObjectiveError):
    def __init__(self, client_id: int):
        self.client_id = client_id
        super().__init__(f"Non-finite gradient on client {client_id}")


class BoundaryKL(ObjectiveError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(
            f"KL regularizer undefined at boundary (lambda[{index}] == 0)"
        )


class WrongObjectiveKind(ObjectiveError):
    pass


# =============================================================================
# 데이터 소스
# =============================================================================


class DataSourceError(BaseDrofaException):
    """데이터 로딩 에러"""

    def __init__(self, message: str):
        super().__init__(message, exit_code=4)


class DataIoError(DataSourceError):
    pass


class ParseError(DataSourceError):
    def __init__(self, line: int, detail: str = ""):
        self.line = line
        suffix = f": {detail}" if detail else ""
        super().__init__(f"Parse error at line {line}{suffix}")


class EmptyPartition(DataSourceError):
    def __init__(self, label):
        self.label = label
        super().__init__(f"Partition '{label}' has no rows")


# =============================================================================
# 설정
# =============================================================================


class ConfigError(BaseDrofaException):
    """설정 에러"""

    def __init__(self, message: str):
        super().__init__(message, exit_code=2)


class BadConfig(ConfigError):
    pass


class SchemaError(ConfigError):
    def __init__(self, key: str, reason: str, suggestion: Optional[str] = None):
        self.key = key
        self.reason = reason
        self.suggestion = suggestion
        hint = f" (did you mean '{suggestion}'?)" if suggestion else ""
        super().__init__(f"Invalid config key '{key}': {reason}{hint}")


class MisalignedConfigs(ConfigError):
    pass


# =============================================================================
# 수치 계산
# =============================================================================


class NumericalError(BaseDrofaException):
    """수치 계산 에러"""

    def __init__(self, message: str):
        super().__init__(message, exit_code=5)


class NonFiniteInput(NumericalError):
    def __init__(self, what: str = "input"):
        super().__init__(f"Non-finite {what}")


class SolverNoConvergence(NumericalError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Solver did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )


class NoConvergence(NumericalError):
    def __init__(self, residuals: dict, iterations: int):
        self.residuals = residuals
        self.iterations = iterations
        super().__init__(
            f"Oracle did not converge after {iterations} iterations: {residuals}"
        )


class NonFiniteIterate(NumericalError):
    def __init__(self, step: int, client_id: Optional[int] = None):
        self.step = step
        self.client_id = client_id
        super().__init__(
            f"Non-finite iterate at local step {step} (client {client_id})"
        )


class DivergenceDetected(NumericalError):
    def __init__(self, stage: int, step: int, client_id: Optional[int] = None):
        self.stage = stage
        self.step = step
        self.client_id = client_id
        super().__init__(
            f"Divergence detected at stage {stage}, local step {step} "
            f"(client {client_id}); reduce eta"
        )


class GridTooCoarse(NumericalError):
    pass
