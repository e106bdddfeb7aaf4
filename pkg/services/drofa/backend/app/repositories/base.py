from abc import ABC, abstractmethod

from backend.app.models.federation import Federation


class FederationRepository(ABC):
    """
    Federation 소스 Repository

    - synthetic / quadratic: seed 로부터 결정적으로 생성
    - csv: 파일에서 로딩 (seed 무관)
    """

    @abstractmethod
    def build(self, seed: int) -> Federation:
        pass

    @property
    def seed_dependent(self) -> bool:
        return True
