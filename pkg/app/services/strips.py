"""
STRIPS семантика: применимость, переход, последователи, цель, валидация плана.
Эффекты применяются в порядке "сначала удаления, потом добавления".
"""
from pathlib import Path
from typing import List, Tuple, Union

from app.errors import ContractViolation
from app.models.task import GroundTask, Plan, State


def applicable(task: GroundTask, state: State, op: int) -> bool:
    """Предусловие оператора op содержится в состоянии."""
    if not 0 <= op < len(task.operators):
        raise ContractViolation(f"Нет оператора с индексом {op}")
    mask = task.operators[op].pre_mask
    return state.bits & mask == mask


def apply(task: GroundTask, state: State, op: int) -> State:
    """(state \\ delete) ∪ add."""
    if not applicable(task, state, op):
        raise ContractViolation(f"Оператор {task.operators[op].label} неприменим")
    o = task.operators[op]
    return State((state.bits & ~o.del_mask) | o.add_mask)


def successors(task: GroundTask, state: State) -> List[Tuple[int, State]]:
    """Все применимые операторы по возрастанию индекса - порядок детерминирован."""
    bits = state.bits
    result = []
    for index, o in enumerate(task.operators):
        if bits & o.pre_mask == o.pre_mask:
            result.append((index, State((bits & ~o.del_mask) | o.add_mask)))
    return result


def is_goal(task: GroundTask, state: State) -> bool:
    return state.bits & task.goal_mask == task.goal_mask


def validate_plan(task: GroundTask, plan: Plan) -> bool:
    """План последовательно применим из init и приводит в целевое состояние."""
    state = task.initial_state
    for op in plan.steps:
        if not 0 <= op < len(task.operators) or not applicable(task, state, op):
            return False
        state = apply(task, state, op)
    return is_goal(task, state)


def format_plan(task: GroundTask, plan: Plan) -> str:
    lines = [task.operators[op].label for op in plan.steps]
    lines.append(f"; cost = {sum(task.operators[op].cost for op in plan.steps)} (unit cost)")
    return "\n".join(lines) + "\n"


def write_plan(task: GroundTask, plan: Plan, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(format_plan(task, plan), encoding="utf-8")
    return path


def read_plan(task: GroundTask, text: str) -> Plan:
    """Обратная к format_plan; строки-комментарии (;) пропускаются."""
    steps = []
    for line in text.splitlines():
        line = line.split(";", 1)[0].strip().lower()
        if line:
            steps.append(task.operator_index(" ".join(line.split())))
    return Plan(tuple(steps))
