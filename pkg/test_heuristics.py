"""
Тесты эвристик: значения из manifest.json, тупики, релаксированный план, кеш.
"""
import pytest

from app.models.pddl import Atom
from app.models.task import GroundTask, Operator, State
from app.services.heuristics import (
    INF,
    CachedHeuristic,
    get_heuristic,
    h_add,
    h_blind,
    h_ff,
    h_goal_count,
    h_max,
    relaxed_plan,
)
from app.services.strips import apply


def _dead_end_task() -> GroundTask:
    # b достижим только из c, а c не достижим ничем
    return GroundTask(
        domain_name="dead",
        problem_name="inline",
        facts=(Atom("a"), Atom("b"), Atom("c")),
        operators=(Operator("o1", (), pre=(2,), add=(1,), delete=()),),
        init=frozenset({0}),
        goal=frozenset({1}),
    )


def test_chain_values(chain_task):
    s0 = chain_task.initial_state
    assert (h_max(chain_task, s0), h_add(chain_task, s0), h_ff(chain_task, s0), h_goal_count(chain_task, s0)) == (2, 3, 2, 2)


def test_manifest_values(load, instance):
    task = load(instance["domain"], instance["problem"])
    s0 = task.initial_state
    expected = instance["h"]
    assert h_max(task, s0) == expected["hmax"]
    assert h_add(task, s0) == expected["add"]
    assert h_ff(task, s0) == expected["ff"]
    assert h_goal_count(task, s0) == expected["gc"]


def test_heuristics_zero_on_goal(chain_task):
    goal = apply(chain_task, apply(chain_task, chain_task.initial_state, 0), 1)
    for name in ("hmax", "add", "ff", "gc", "blind"):
        assert get_heuristic(name)(chain_task, goal) == 0


def test_blind(chain_task):
    assert h_blind(chain_task, chain_task.initial_state) == 1
    assert h_blind(chain_task, State(0b11)) == 0


def test_dead_end():
    task = _dead_end_task()
    s0 = task.initial_state
    assert h_max(task, s0) == INF
    assert h_add(task, s0) == INF
    assert h_ff(task, s0) == INF
    assert relaxed_plan(task, s0) is None
    # goal count не распознаёт тупики
    assert h_goal_count(task, s0) == 1


def test_ordering_between_heuristics(load, instance):
    task = load(instance["domain"], instance["problem"])
    s0 = task.initial_state
    assert h_max(task, s0) <= h_ff(task, s0) <= h_add(task, s0)


def test_relaxed_plan_reaches_goal_without_deletes(load, instance):
    task = load(instance["domain"], instance["problem"])
    state = task.initial_state
    plan = relaxed_plan(task, state)
    assert plan is not None

    reached = state.bits
    changed = True
    while changed:
        changed = False
        for index in plan:
            op = task.operators[index]
            if reached & op.pre_mask == op.pre_mask and reached | op.add_mask != reached:
                reached |= op.add_mask
                changed = True
    assert reached & task.goal_mask == task.goal_mask


def test_cached_heuristic_counts_evaluations(gripper_task):
    cached = CachedHeuristic(gripper_task, h_ff)
    s0 = gripper_task.initial_state
    assert cached(s0) == 5
    assert cached(s0) == 5
    assert cached.evaluations == 1


def test_unknown_heuristic():
    with pytest.raises(ValueError):
        get_heuristic("lmcut")
