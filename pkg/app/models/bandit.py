"""
Pydantic модели бандитов: политика доверительных границ, гауссовские ручки, трасса регрета.
"""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator


class PolicyKind(str, Enum):
    ucb1 = "ucb1"
    ucb1_01 = "ucb1_01"
    ucb1_normal = "ucb1_normal"
    ucb1_normal2 = "ucb1_normal2"
    # Без исследования: только среднее (GBFS на дереве)
    greedy = "greedy"


class Mode(str, Enum):
    maximize = "maximize"
    minimize = "minimize"


FIXED_C_KINDS = (PolicyKind.ucb1, PolicyKind.ucb1_01)


class BoundPolicy(BaseModel):
    """Неизменяемое описание политики; c используется только ucb1 и ucb1_01."""
    kind: PolicyKind
    c: float = Field(default=1.0, gt=0, description="Коэффициент исследования")
    mode: Mode = Mode.maximize

    class Config:
        frozen = True

    @property
    def sign(self) -> float:
        # Единственное различие режимов - знак члена исследования
        return 1.0 if self.mode is Mode.maximize else -1.0

    def minimizing(self) -> "BoundPolicy":
        return self.model_copy(update={"mode": Mode.minimize})

    def tag(self) -> str:
        if self.kind in FIXED_C_KINDS:
            return f"{self.kind.value}(c={self.c:g})"
        return self.kind.value


class GaussianArm(BaseModel):
    mu: float
    sigma: float = Field(ge=0)

    class Config:
        frozen = True

    @classmethod
    def parse(cls, spec: str) -> "GaussianArm":
        """'mu:sigma' - формат флага --arms."""
        mu, _, sigma = spec.partition(":")
        return cls(mu=float(mu), sigma=float(sigma or 1.0))


class RegretTrace(BaseModel):
    policy: str
    horizon: int = Field(ge=1)
    seed: int
    # Накопленный псевдорегрет после каждого шага t = 1..T
    cumulative_regret: List[float]
    pulls: List[int]
    optimal_fraction: float = Field(ge=0, le=1)

    @model_validator(mode="after")
    def _pulls_sum_to_horizon(self) -> "RegretTrace":
        if sum(self.pulls) != self.horizon:
            raise ValueError(f"Сумма вытягиваний {sum(self.pulls)} != T={self.horizon}")
        return self

    @property
    def final_regret(self) -> float:
        return self.cumulative_regret[-1]

    def regret_at(self, t: int) -> float:
        return self.cumulative_regret[t - 1]


class PolicySummary(BaseModel):
    """Строка сводной таблицы compare_policies."""
    policy: str
    seeds: int
    horizon: int
    mean_final_regret: float
    std_final_regret: float
    mean_optimal_fraction: float
    bound: Optional[float] = None
