"""
Роутер поиска - запуск планировщика и значения эвристик по PDDL тексту.
"""
from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, Field
from typing import Dict, List, Optional

from app.config import get_settings
from app.errors import ContractViolation, GroundingError, PDDLError, UnsupportedFeatureError
from app.models.bench import RunConfig
from app.models.search import Algorithm, SearchResult
from app.models.task import GroundTask, Plan
from app.services.bench_service import run_search
from app.services.grounding import ground
from app.services.heuristics import HEURISTICS, INF, HeuristicName
from app.services.pddl_parser import parse_domain, parse_problem
from app.services.strips import validate_plan

router = APIRouter(prefix="/search")

settings = get_settings()


class SearchRequest(BaseModel):
    """Задача в виде текста PDDL и параметры алгоритма."""
    domain: str
    problem: str
    algorithm: Algorithm = Algorithm.gbfs
    heuristic: HeuristicName = HeuristicName.ff
    c: float = Field(default=settings.default_c, gt=0)
    budget: int = Field(default=settings.default_budget, ge=1, le=100000)
    seed: int = 0


class SearchResponse(BaseModel):
    result: SearchResult
    # План в виде меток операторов, если найден
    plan: Optional[List[str]] = None
    valid: Optional[bool] = None


class TaskRequest(BaseModel):
    domain: str
    problem: str


class HeuristicResponse(BaseModel):
    facts: int
    operators: int
    unsolvable: bool
    # None - тупик (h = inf)
    values: Dict[str, Optional[float]]


def _ground_request(domain: str, problem: str) -> GroundTask:
    """Разбор и граундинг с преобразованием ошибок в HTTP 422."""
    try:
        return ground(parse_domain(domain), parse_problem(problem))
    except UnsupportedFeatureError as e:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail={"message": str(e), "feature": e.feature},
        )
    except (PDDLError, GroundingError) as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))


@router.post("/run", response_model=SearchResponse)
def run_endpoint(request: SearchRequest):
    """
    Запускает выбранный алгоритм на задаче.
    Дедлайн берётся из настроек сервиса.
    """
    task = _ground_request(request.domain, request.problem)
    config = RunConfig(
        algorithms=[request.algorithm],
        heuristic=request.heuristic,
        c=request.c,
        budget=request.budget,
        seeds=[request.seed],
        deadline_s=settings.deadline_s,
    )
    try:
        result = run_search(task, request.algorithm, config, request.seed)
    except ContractViolation as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))

    if result.plan is None:
        return SearchResponse(result=result)
    return SearchResponse(
        result=result,
        plan=[task.operators[op].label for op in result.plan],
        valid=validate_plan(task, Plan(tuple(result.plan))),
    )


@router.post("/heuristic", response_model=HeuristicResponse)
def heuristic_endpoint(request: TaskRequest):
    """Значения всех эвристик в начальном состоянии."""
    task = _ground_request(request.domain, request.problem)
    state = task.initial_state
    values = {}
    for name, heuristic in HEURISTICS.items():
        value = heuristic(task, state)
        values[name.value] = None if value == INF else value
    return HeuristicResponse(
        facts=task.fact_count,
        operators=len(task.operators),
        unsolvable=task.unsolvable,
        values=values,
    )
