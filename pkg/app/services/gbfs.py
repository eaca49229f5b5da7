"""
GBFS на очереди с приоритетом (h, tie, id).
Дубликаты обрабатываются так же, как в дереве MCTS: более дорогой путь
отбрасывается, более дешёвый (или равный) получает новую запись с новым id,
а потомки старой записи переходят к ней с пересчётом g.
"""
import heapq
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.errors import ContractViolation
from app.logger import get_logger
from app.models.search import Outcome, SearchResult
from app.models.task import GroundTask, State
from app.services.heuristics import INF, CachedHeuristic, Heuristic
from app.services.strips import is_goal, successors

logger = get_logger(__name__)


@dataclass(eq=False)
class _Entry:
    id: int
    tie: float
    state: State
    g: int
    h: float
    parent: Optional["_Entry"] = None
    op: Optional[int] = None
    expanded: bool = False
    replaced: bool = False
    children: List["_Entry"] = field(default_factory=list)

    @property
    def dead(self) -> bool:
        return self.h == INF


def _path(entry: _Entry) -> List[int]:
    steps = []
    while entry.parent is not None:
        steps.append(entry.op)
        entry = entry.parent
    steps.reverse()
    return steps


def gbfs_queue(
    task: GroundTask,
    heuristic: Heuristic,
    budget: int,
    seed: int = 0,
    *,
    deadline_s: Optional[float] = None,
    random_tiebreak: bool = False,
    record_trace: bool = False,
) -> SearchResult:
    """
    Жадный поиск по первому наилучшему с ранней проверкой цели при генерации.
    Ничьи по h разрешаются ключом узла (id, т.е. FIFO).
    """
    if budget < 1:
        raise ContractViolation(f"Бюджет должен быть ≥ 1, получено {budget}")
    started = time.perf_counter()
    cached = CachedHeuristic(task, heuristic)
    notes = {"algorithm": "gbfs", "deadline_hit": False}
    trace: List[int] = []
    generated = 0

    def finish(outcome: Outcome, expansions: int, plan: Optional[List[int]] = None) -> SearchResult:
        notes["elapsed_ms"] = int((time.perf_counter() - started) * 1000)
        logger.info(f"gbfs: {outcome.value}, раскрытий {expansions}, оценок {cached.evaluations}")
        return SearchResult(
            outcome=outcome,
            plan=plan,
            expansions=expansions,
            evaluations=cached.evaluations,
            generated=generated,
            wall_notes=notes,
            trace=trace,
        )

    if is_goal(task, task.initial_state):
        return finish(Outcome.plan, 0, [])
    if task.unsolvable:
        return finish(Outcome.exhausted, 0)

    rng = np.random.default_rng(seed) if random_tiebreak else None
    entries: List[_Entry] = []
    by_state: Dict[State, _Entry] = {}
    heap: List[Tuple[float, float, int]] = []

    def add(state: State, h: float, g: int, parent: Optional[_Entry], op: Optional[int]) -> _Entry:
        entry_id = len(entries)
        tie = float(rng.random()) if rng is not None else float(entry_id)
        entry = _Entry(entry_id, tie, state, g, h, parent, op)
        entries.append(entry)
        by_state[state] = entry
        return entry

    def push(entry: _Entry) -> None:
        if not entry.expanded and not entry.dead:
            heapq.heappush(heap, (entry.h, entry.tie, entry.id))

    root = add(task.initial_state, cached(task.initial_state), 0, None, None)
    push(root)
    deadline = started + deadline_s if deadline_s is not None else None
    expansions = 0

    while True:
        while heap and (entries[heap[0][2]].expanded or entries[heap[0][2]].replaced):
            heapq.heappop(heap)
        if not heap:
            return finish(Outcome.exhausted, expansions)
        if expansions >= budget:
            return finish(Outcome.budget_reached, expansions)
        if deadline is not None and time.perf_counter() > deadline:
            notes["deadline_hit"] = True
            return finish(Outcome.budget_reached, expansions)

        current = entries[heapq.heappop(heap)[2]]
        current.expanded = True
        expansions += 1
        if record_trace:
            trace.append(current.state.bits)

        for op, state in successors(task, current.state):
            generated += 1
            if is_goal(task, state):
                return finish(Outcome.plan, expansions, _path(current) + [op])
            g = current.g + task.operators[op].cost
            old = by_state.get(state)
            if old is None:
                child = add(state, cached(state), g, current, op)
            else:
                ancestor: Optional[_Entry] = current
                while ancestor is not None and ancestor is not old:
                    ancestor = ancestor.parent
                if g > old.g or ancestor is old:
                    continue
                child = add(state, old.h, g, current, op)
                child.expanded = old.expanded
                child.children, old.children = old.children, []
                old.replaced = True
                stack = list(child.children)
                for grandchild in child.children:
                    grandchild.parent = child
                while stack:
                    node = stack.pop()
                    node.g = node.parent.g + task.operators[node.op].cost
                    stack.extend(node.children)
            current.children.append(child)
            push(child)
