"""
MCTS/THTS поиск по дереву: выбор листа по NEC, раскрытие с обнаружением
дубликатов и блокировками, обратное распространение статистик листьев.

Статистики узла считаются по его листьям L(n):
  - нераскрытый лист: {h(s_n)} (пусто для тупика с h = inf);
  - внутренний узел: слияние статистик включённых детей, для gh со сдвигом
    на стоимость ребра.
Заблокированные дети в статистику не входят (кроме keep_locked: тупики и
исчерпанные поддеревья остаются, дубликаты - никогда). min_h считается
только по незаблокированным детям.
"""
import heapq
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from app.errors import ContractViolation
from app.logger import get_logger
from app.models.bandit import BoundPolicy, PolicyKind
from app.models.search import NecVariant, Outcome, SearchResult
from app.models.task import GroundTask, State
from app.services.bandit_policies import NormContext, exploration, normalized_mean
from app.services.heuristics import INF, CachedHeuristic, Heuristic
from app.services.running_stats import RunningStats
from app.services.strips import is_goal, successors

logger = get_logger(__name__)

EMPTY = RunningStats()


class LockReason(str, Enum):
    dead_end = "dead_end"
    duplicate = "duplicate"
    exhausted = "exhausted"


@dataclass(eq=False)
class SearchNode:
    id: int
    state: State
    h: float
    g: int = 0
    parent: Optional["SearchNode"] = None
    op: Optional[int] = None
    # Ключ разрешения ничьих: id или случайное число при random_tiebreak
    tie: float = 0.0
    children: List["SearchNode"] = field(default_factory=list)
    expanded: bool = False
    locked: bool = False
    lock_reason: Optional[LockReason] = None
    stats_h: RunningStats = EMPTY
    stats_gh: RunningStats = EMPTY
    min_h: float = INF
    min_gh: float = INF
    # Ключ ничьей листа, на котором достигается min_h
    best_tie: float = INF

    def lock(self, reason: LockReason) -> None:
        self.locked = True
        self.lock_reason = reason

    def set_leaf_values(self) -> None:
        """Статистики нераскрытого листа."""
        stats = RunningStats.singleton(self.h) if self.h < INF else EMPTY
        self.stats_h = stats
        self.stats_gh = stats
        self.min_h = self.h
        self.min_gh = self.h
        self.best_tie = self.tie

    @property
    def leaf_count(self) -> int:
        return self.stats_h.count


class SearchTree:
    """Дерево одного запуска; не разделяется между потоками."""

    def __init__(
        self,
        task: GroundTask,
        heuristic: CachedHeuristic,
        *,
        keep_locked: bool = False,
        rng: Optional[np.random.Generator] = None,
    ):
        self.task = task
        self.heuristic = heuristic
        self.keep_locked = keep_locked
        self.rng = rng
        self.nodes: List[SearchNode] = []
        # Актуальный узел для каждого состояния
        self.by_state: Dict[State, SearchNode] = {}
        self.generated = 0
        self.root = self.new_node(task.initial_state, heuristic(task.initial_state))

    def new_node(
        self,
        state: State,
        h: float,
        parent: Optional[SearchNode] = None,
        op: Optional[int] = None,
        g: int = 0,
    ) -> SearchNode:
        node_id = len(self.nodes)
        tie = float(self.rng.random()) if self.rng is not None else float(node_id)
        node = SearchNode(id=node_id, state=state, h=h, g=g, parent=parent, op=op, tie=tie)
        node.set_leaf_values()
        if h == INF:
            node.lock(LockReason.dead_end)
        self.nodes.append(node)
        self.by_state[state] = node
        return node

    def edge_cost(self, node: SearchNode) -> int:
        return self.task.operators[node.op].cost

    def includes(self, child: SearchNode) -> bool:
        if not child.locked:
            return True
        return self.keep_locked and child.lock_reason is not LockReason.duplicate

    def refresh(self, node: SearchNode) -> None:
        """Пересчитать агрегаты узла по детям и правило блокировки."""
        if node.lock_reason is LockReason.duplicate:
            node.stats_h = node.stats_gh = EMPTY
            node.min_h = node.min_gh = node.best_tie = INF
            return
        if not node.expanded:
            return
        stats_h = stats_gh = EMPTY
        best: Tuple[float, float] = (INF, INF)
        min_gh = INF
        open_child = False
        for child in node.children:
            cost = self.edge_cost(child)
            if self.includes(child):
                stats_h = stats_h.merge(child.stats_h)
                stats_gh = stats_gh.merge(child.stats_gh.shift(cost))
            if not child.locked:
                open_child = True
                best = min(best, (child.min_h, child.best_tie))
                min_gh = min(min_gh, child.min_gh + cost)
        node.stats_h = stats_h
        node.stats_gh = stats_gh
        node.min_h, node.best_tie = best
        node.min_gh = min_gh
        if not open_child and not node.locked:
            node.lock(LockReason.exhausted)

    def is_ancestor_or_self(self, candidate: SearchNode, node: SearchNode) -> bool:
        current: Optional[SearchNode] = node
        while current is not None:
            if current is candidate:
                return True
            current = current.parent
        return False

    def plan_to(self, node: SearchNode) -> List[int]:
        steps: List[int] = []
        current: Optional[SearchNode] = node
        while current is not None and current.op is not None:
            steps.append(current.op)
            current = current.parent
        steps.reverse()
        return steps


def _mean_term(node: SearchNode, variant: NecVariant) -> float:
    return node.min_h if variant is NecVariant.min else node.stats_h.mean


def _tie_key(node: SearchNode, variant: NecVariant) -> float:
    return node.best_tie if variant is NecVariant.min else node.tie


def nec(
    node: SearchNode,
    parent: SearchNode,
    policy: BoundPolicy,
    variant: NecVariant = NecVariant.mean,
    ctx: Optional[NormContext] = None,
) -> float:
    """
    Критерий выбора узла (меньше - лучше): средний член минус член
    исследования с T = |L(parent)|, t = |L(node)|. σ̂ для нормальных политик
    берётся из stats_h и для вариантов со средним членом min_h.
    """
    mean = _mean_term(node, variant)
    if policy.kind is PolicyKind.ucb1_01:
        if ctx is None:
            raise ContractViolation("guct01 требует контекст нормализации (M, m)")
        mean = normalized_mean(mean, ctx)
    return mean - exploration(policy, node.stats_h, parent.leaf_count)


def select_leaf(tree: SearchTree, policy: BoundPolicy, variant: NecVariant = NecVariant.mean) -> SearchNode:
    """Спуск от корня к листу по argmin NEC среди незаблокированных детей."""
    node = tree.root
    if node.locked:
        raise ContractViolation("Корень заблокирован")
    while node.expanded:
        candidates = [c for c in node.children if not c.locked]
        if not candidates:
            raise ContractViolation(f"Все дети узла {node.id} заблокированы")
        ctx: Optional[NormContext] = None
        if policy.kind is PolicyKind.ucb1_01:
            means = [_mean_term(c, variant) for c in candidates]
            ctx = (max(means), min(means))
        node = min(candidates, key=lambda c: (nec(c, node, policy, variant, ctx), _tie_key(c, variant)))
    return node


@dataclass
class Expansion:
    created: List[SearchNode] = field(default_factory=list)
    # Узлы, чьи агрегаты нужно пересчитать
    touched: List[SearchNode] = field(default_factory=list)
    plan: Optional[List[int]] = None


def _relocate(tree: SearchTree, old: SearchNode, parent: SearchNode, op: int, g: int) -> SearchNode:
    """Перенос поддерева old под новый узел с меньшим или равным g; old блокируется."""
    new = tree.new_node(old.state, old.h, parent, op, g)
    new.expanded = old.expanded
    new.children = old.children
    old.children = []
    for child in new.children:
        child.parent = new
    if old.locked and old.lock_reason is not LockReason.duplicate:
        new.lock(old.lock_reason)
    old.lock(LockReason.duplicate)

    stack = list(new.children)
    while stack:
        child = stack.pop()
        child.g = child.parent.g + tree.edge_cost(child)
        stack.extend(child.children)
    return new


def expand(tree: SearchTree, leaf: SearchNode) -> Expansion:
    """
    Раскрыть лист: последователи в порядке индексов операторов,
    ранняя проверка цели, обработка дубликатов.
    """
    if leaf.locked or leaf.expanded:
        raise ContractViolation(f"Узел {leaf.id} нельзя раскрыть")
    task = tree.task
    result = Expansion(touched=[leaf])
    leaf.expanded = True
    for op, state in successors(task, leaf.state):
        tree.generated += 1
        if is_goal(task, state):
            result.plan = tree.plan_to(leaf) + [op]
            return result
        g = leaf.g + task.operators[op].cost
        old = tree.by_state.get(state)
        if old is not None:
            # Цикл или не лучший путь
            if g > old.g or tree.is_ancestor_or_self(old, leaf):
                continue
            node = _relocate(tree, old, leaf, op, g)
            result.touched.extend((old, node))
            if old.parent is not None:
                result.touched.append(old.parent)
        else:
            node = tree.new_node(state, tree.heuristic(state), leaf, op, g)
        leaf.children.append(node)
        result.created.append(node)
    return result


def backpropagate(tree: SearchTree, queue: Iterable[SearchNode]) -> None:
    """Пересчёт агрегатов в порядке убывания g; каждый пересчитанный узел ставит в очередь родителя."""
    heap: List[Tuple[int, int, SearchNode]] = []
    queued = set()

    def push(node: SearchNode) -> None:
        if node.id not in queued:
            queued.add(node.id)
            heapq.heappush(heap, (-node.g, node.id, node))

    for node in queue:
        push(node)
    while heap:
        _, _, node = heapq.heappop(heap)
        queued.discard(node.id)
        tree.refresh(node)
        if node.parent is not None:
            push(node.parent)


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9)


def check_backprop(tree: SearchTree) -> None:
    """Сверка всех агрегатов дерева с пересчётом с нуля по листьям; AssertionError при расхождении."""
    # Обход в обратном порядке (дети раньше родителей) без рекурсии
    order: List[SearchNode] = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(node.children)

    leaves: Dict[int, Tuple[List[float], List[float]]] = {}
    for node in reversed(order):
        if node.lock_reason is LockReason.duplicate:
            hs: List[float] = []
            ghs: List[float] = []
            best: Tuple[float, float] = (INF, INF)
            min_gh = INF
        elif not node.expanded:
            hs = [node.h] if node.h < INF else []
            ghs = list(hs)
            best = (node.h, node.tie)
            min_gh = node.h
        else:
            hs, ghs, best, min_gh = [], [], (INF, INF), INF
            for child in node.children:
                cost = tree.edge_cost(child)
                child_hs, child_ghs = leaves[child.id]
                if tree.includes(child):
                    hs.extend(child_hs)
                    ghs.extend(v + cost for v in child_ghs)
                if not child.locked:
                    best = min(best, (child.min_h, child.best_tie))
                    min_gh = min(min_gh, child.min_gh + cost)
            assert any(not c.locked for c in node.children) or node.locked, f"узел {node.id}: не заблокирован"
        leaves[node.id] = (hs, ghs)

        for name, values, stats in (("h", hs, node.stats_h), ("gh", ghs, node.stats_gh)):
            expected = RunningStats.from_samples(values)
            assert stats.count == expected.count, f"узел {node.id}: |L| для {name} {stats.count} != {expected.count}"
            assert _close(stats.mean, expected.mean), f"узел {node.id}: среднее {name} {stats.mean} != {expected.mean}"
            assert _close(stats.m2, expected.m2), f"узел {node.id}: m2 {name} {stats.m2} != {expected.m2}"
        assert (node.min_h, node.best_tie) == best, f"узел {node.id}: min_h {node.min_h} != {best[0]}"
        assert node.min_gh == min_gh, f"узел {node.id}: min_gh {node.min_gh} != {min_gh}"
        for child in node.children:
            assert child.g == node.g + tree.edge_cost(child), f"узел {child.id}: g не согласовано"


def mcts(
    task: GroundTask,
    heuristic: Heuristic,
    policy: BoundPolicy,
    budget: int,
    seed: int = 0,
    *,
    variant: NecVariant = NecVariant.mean,
    deadline_s: Optional[float] = None,
    random_tiebreak: bool = False,
    record_trace: bool = False,
    check: bool = False,
    keep_locked: bool = False,
) -> SearchResult:
    """
    Цикл {select_leaf; expand; backpropagate} до ранней цели, блокировки
    корня или исчерпания бюджета раскрытий.

    Args:
        task: граундированная задача
        heuristic: функция h(task, state)
        policy: политика границы; NEC всегда минимизируется
        budget: максимум раскрытий, ≥ 1
        seed: зерно случайного разрешения ничьих
        variant: средний член - среднее (guct) или минимум (star)
        deadline_s: кооперативный лимит времени
        check: сверять агрегаты с пересчётом после каждой итерации
        keep_locked: оставлять заблокированные листья в L(n)
    """
    if budget < 1:
        raise ContractViolation(f"Бюджет должен быть ≥ 1, получено {budget}")
    started = time.perf_counter()
    cached = CachedHeuristic(task, heuristic)
    notes = {"algorithm": policy.tag(), "variant": variant.value, "deadline_hit": False}
    trace: List[int] = []

    def finish(outcome: Outcome, expansions: int, generated: int, plan: Optional[List[int]] = None) -> SearchResult:
        notes["elapsed_ms"] = int((time.perf_counter() - started) * 1000)
        logger.info(
            f"{policy.tag()}/{variant.value}: {outcome.value}, раскрытий {expansions}, оценок {cached.evaluations}"
        )
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
        return finish(Outcome.plan, 0, 0, [])
    if task.unsolvable:
        return finish(Outcome.exhausted, 0, 0)

    rng = np.random.default_rng(seed) if random_tiebreak else None
    tree = SearchTree(task, cached, keep_locked=keep_locked, rng=rng)
    deadline = started + deadline_s if deadline_s is not None else None
    logger.debug(f"Старт {policy.tag()} на {task.problem_name}: h(init) = {tree.root.h}")

    expansions = 0
    while True:
        if tree.root.locked:
            return finish(Outcome.exhausted, expansions, tree.generated)
        if expansions >= budget:
            return finish(Outcome.budget_reached, expansions, tree.generated)
        if deadline is not None and time.perf_counter() > deadline:
            notes["deadline_hit"] = True
            return finish(Outcome.budget_reached, expansions, tree.generated)

        leaf = select_leaf(tree, policy, variant)
        if record_trace:
            trace.append(leaf.state.bits)
        expansion = expand(tree, leaf)
        expansions += 1
        if expansion.plan is not None:
            return finish(Outcome.plan, expansions, tree.generated, expansion.plan)
        backpropagate(tree, expansion.touched + expansion.created)
        if check:
            check_backprop(tree)


def gbfs_tree(task: GroundTask, heuristic: Heuristic, budget: int, seed: int = 0, **kwargs) -> SearchResult:
    """GBFS как MCTS: средний член min_h, без исследования."""
    return mcts(task, heuristic, BoundPolicy(kind=PolicyKind.greedy), budget, seed, variant=NecVariant.min, **kwargs)
