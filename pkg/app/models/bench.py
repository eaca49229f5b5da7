"""
Pydantic модели бенчмарка: запись JSONL и конфигурация запуска.
"""
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from app.models.search import Algorithm
from app.services.heuristics import HeuristicName

RecordKey = Tuple[str, str, str, str, Optional[float], int]


class BenchRecord(BaseModel):
    """Одна строка JSONL: результат алгоритма на задаче для одного зерна."""
    domain: str
    problem: str
    algorithm: str
    heuristic: str
    c: Optional[float] = None
    seed: int
    outcome: Literal["plan", "exhausted", "budget_reached", "error"]
    expansions: int = Field(ge=0)
    plan_length: Optional[int] = Field(default=None, ge=0)
    elapsed_ms: int = Field(ge=0)
    # Сообщение об ошибке разбора/граундинга для outcome=error
    error: Optional[str] = None

    @model_validator(mode="after")
    def _plan_length_iff_plan(self) -> "BenchRecord":
        if (self.outcome == "plan") != (self.plan_length is not None):
            raise ValueError("plan_length задаётся тогда и только тогда, когда outcome=plan")
        return self

    @property
    def key(self) -> RecordKey:
        """Ключ возобновления bench."""
        return (self.domain, self.problem, self.algorithm, self.heuristic, self.c, self.seed)

    @property
    def solved(self) -> bool:
        return self.outcome == "plan"


class RunConfig(BaseModel):
    """Параметры run/bench; значения по умолчанию повторяют протокол экспериментов."""
    algorithms: List[Algorithm] = Field(default_factory=lambda: [Algorithm.gbfs], min_length=1)
    heuristic: HeuristicName = HeuristicName.ff
    c: float = Field(default=1.0, gt=0)
    budget: int = Field(default=10000, ge=1)
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4], min_length=1)
    deadline_s: Optional[float] = Field(default=900.0, gt=0)
    jobs: int = Field(default=1, ge=1)
    random_tiebreak: bool = False
    check_backprop: bool = False
    keep_locked_leaves: bool = False

    def c_for(self, algorithm: Algorithm) -> Optional[float]:
        """c записывается только для алгоритмов, которые его используют."""
        return self.c if algorithm.uses_c else None
