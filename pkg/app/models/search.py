"""
Модели поиска: идентификаторы алгоритмов, вариант NEC, результат запуска.
"""
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from app.models.bandit import PolicyKind


class Outcome(str, Enum):
    plan = "plan"
    exhausted = "exhausted"
    budget_reached = "budget_reached"


class NecVariant(str, Enum):
    # Средний член: среднее h по листьям поддерева (GUCT) или минимум (GUCT*)
    mean = "mean"
    min = "min"


class Algorithm(str, Enum):
    gbfs = "gbfs"
    gbfs_tree = "gbfs-tree"
    guct = "guct"
    guct01 = "guct01"
    guct_normal = "guct-normal"
    guct_normal2 = "guct-normal2"
    guct_star = "guct-star"
    guct01_star = "guct01-star"
    guct_normal_star = "guct-normal-star"
    guct_normal2_star = "guct-normal2-star"

    @property
    def uses_c(self) -> bool:
        kind = self.policy_kind
        return kind in (PolicyKind.ucb1, PolicyKind.ucb1_01)

    @property
    def policy_kind(self) -> Optional[PolicyKind]:
        """Политика для MCTS-алгоритмов; None для очереди GBFS."""
        return _MCTS_SETUP.get(self, (None, None))[0]

    @property
    def variant(self) -> Optional[NecVariant]:
        return _MCTS_SETUP.get(self, (None, None))[1]


_MCTS_SETUP: Dict[Algorithm, Tuple[PolicyKind, NecVariant]] = {
    Algorithm.gbfs_tree: (PolicyKind.greedy, NecVariant.min),
    Algorithm.guct: (PolicyKind.ucb1, NecVariant.mean),
    Algorithm.guct01: (PolicyKind.ucb1_01, NecVariant.mean),
    Algorithm.guct_normal: (PolicyKind.ucb1_normal, NecVariant.mean),
    Algorithm.guct_normal2: (PolicyKind.ucb1_normal2, NecVariant.mean),
    Algorithm.guct_star: (PolicyKind.ucb1, NecVariant.min),
    Algorithm.guct01_star: (PolicyKind.ucb1_01, NecVariant.min),
    Algorithm.guct_normal_star: (PolicyKind.ucb1_normal, NecVariant.min),
    Algorithm.guct_normal2_star: (PolicyKind.ucb1_normal2, NecVariant.min),
}


class SearchResult(BaseModel):
    """Итог одного запуска поиска."""
    outcome: Outcome
    # Индексы операторов GroundTask
    plan: Optional[List[int]] = None
    plan_length: Optional[int] = None
    expansions: int = Field(ge=0)
    evaluations: int = Field(default=0, ge=0)
    generated: int = Field(default=0, ge=0)
    wall_notes: Dict[str, Any] = Field(default_factory=dict)
    # Раскрытые состояния (битсеты) по порядку, если запрошено
    trace: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _plan_matches_outcome(self) -> "SearchResult":
        if (self.outcome is Outcome.plan) != (self.plan is not None):
            raise ValueError("plan задаётся тогда и только тогда, когда outcome=plan")
        if self.plan is not None:
            self.plan_length = len(self.plan)
        return self

    @property
    def solved(self) -> bool:
        return self.outcome is Outcome.plan
