"""
Доменно-независимые эвристики: h_max, h_add, h_FF, goal count, blind.
h_max/h_add считаются обобщённым Дейкстрой по релаксации удалений,
h_FF - обратным проходом по лучшим поставщикам h_add.
"""
import heapq
import math
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

from app.models.task import GroundTask, State

INF = math.inf

Heuristic = Callable[[GroundTask, State], float]


def _relaxed_costs(task: GroundTask, state: State, combine: Callable[[List[float]], float]) -> Tuple[List[float], List[int]]:
    """
    Стоимости фактов в релаксации и лучший поставщик каждого факта.
    Равные стоимости разрешаются в пользу меньшего индекса оператора.
    """
    n = task.fact_count
    cost = [INF] * n
    supporter = [-1] * n
    heap: List[Tuple[float, int]] = []
    for f in range(n):
        if state.bits >> f & 1:
            cost[f] = 0.0
            heap.append((0.0, f))
    heapq.heapify(heap)

    unsatisfied = [len(o.pre) for o in task.operators]
    closed = [False] * n

    def fire(index: int) -> None:
        o = task.operators[index]
        value = o.cost + (combine([cost[p] for p in o.pre]) if o.pre else 0.0)
        for f in o.add:
            if value < cost[f]:
                cost[f] = value
                supporter[f] = index
                heapq.heappush(heap, (value, f))
            elif value == cost[f] and cost[f] > 0 and index < supporter[f]:
                supporter[f] = index

    for index, o in enumerate(task.operators):
        if not o.pre:
            fire(index)

    while heap:
        value, f = heapq.heappop(heap)
        if closed[f] or value > cost[f]:
            continue
        closed[f] = True
        for index in task.pre_of[f]:
            unsatisfied[index] -= 1
            if unsatisfied[index] == 0:
                fire(index)
    return cost, supporter


def _max(values: List[float]) -> float:
    return max(values)


def _sum(values: List[float]) -> float:
    return sum(values)


def h_max(task: GroundTask, state: State) -> float:
    cost, _ = _relaxed_costs(task, state, _max)
    return max((cost[g] for g in task.goal), default=0.0)


def h_add(task: GroundTask, state: State) -> float:
    cost, _ = _relaxed_costs(task, state, _sum)
    return sum(cost[g] for g in task.goal)


def relaxed_plan(task: GroundTask, state: State) -> Optional[List[int]]:
    """
    Релаксированный план для h_FF (индексы операторов по возрастанию)
    или None, если цель недостижима даже без удалений.
    """
    cost, supporter = _relaxed_costs(task, state, _sum)
    if any(cost[g] == INF for g in task.goal):
        return None
    chosen = set()
    marked = set()
    stack = [g for g in task.goal if not state.bits >> g & 1]
    while stack:
        f = stack.pop()
        if f in marked:
            continue
        marked.add(f)
        index = supporter[f]
        if index in chosen:
            continue
        chosen.add(index)
        stack.extend(p for p in task.operators[index].pre if not state.bits >> p & 1 and p not in marked)
    return sorted(chosen)


def h_ff(task: GroundTask, state: State) -> float:
    plan = relaxed_plan(task, state)
    if plan is None:
        return INF
    return float(sum(task.operators[i].cost for i in plan))


def h_goal_count(task: GroundTask, state: State) -> float:
    return float(sum(1 for g in task.goal if not state.bits >> g & 1))


def h_blind(task: GroundTask, state: State) -> float:
    # Goal-aware: 0 на цели, иначе 1
    return 0.0 if state.bits & task.goal_mask == task.goal_mask else 1.0


class HeuristicName(str, Enum):
    ff = "ff"
    add = "add"
    hmax = "hmax"
    gc = "gc"
    blind = "blind"


HEURISTICS: Dict[HeuristicName, Heuristic] = {
    HeuristicName.ff: h_ff,
    HeuristicName.add: h_add,
    HeuristicName.hmax: h_max,
    HeuristicName.gc: h_goal_count,
    HeuristicName.blind: h_blind,
}


def get_heuristic(name: str) -> Heuristic:
    """Эвристика по идентификатору CLI: ff | add | hmax | gc | blind."""
    return HEURISTICS[HeuristicName(name)]


class CachedHeuristic:
    """
    Мемоизация значений по состоянию. Принадлежит одному запуску поиска,
    не эвристике; evaluations считает реальные вычисления.
    """

    def __init__(self, task: GroundTask, heuristic: Heuristic):
        self.task = task
        self.heuristic = heuristic
        self.cache: Dict[State, float] = {}
        self.evaluations = 0

    def __call__(self, state: State) -> float:
        value = self.cache.get(state)
        if value is None:
            value = self.heuristic(self.task, state)
            self.cache[state] = value
            self.evaluations += 1
        return value
