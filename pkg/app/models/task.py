"""
Граундированная STRIPS задача и состояния.
Горячий путь поиска: frozen dataclass'ы с битовыми масками вместо pydantic.
"""
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Tuple

from app.models.pddl import Atom


def to_mask(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


@dataclass(frozen=True)
class Operator:
    name: str
    args: Tuple[str, ...]
    pre: Tuple[int, ...]
    add: Tuple[int, ...]
    delete: Tuple[int, ...]
    cost: int = 1
    pre_mask: int = field(init=False, repr=False, compare=False)
    add_mask: int = field(init=False, repr=False, compare=False)
    del_mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pre_mask", to_mask(self.pre))
        object.__setattr__(self, "add_mask", to_mask(self.add))
        object.__setattr__(self, "del_mask", to_mask(self.delete))

    @property
    def label(self) -> str:
        """Метка в стиле VAL: (pick ball1 rooma left)."""
        return "(" + " ".join((self.name,) + self.args) + ")"


@dataclass(frozen=True, slots=True)
class State:
    """Битсет фактов одной задачи; равенство и хеш - по значению."""
    bits: int

    def __contains__(self, fact: int) -> bool:
        return bool(self.bits >> fact & 1)

    def facts(self) -> List[int]:
        return [i for i in range(self.bits.bit_length()) if self.bits >> i & 1]


@dataclass(frozen=True)
class Plan:
    steps: Tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class GroundTask:
    """
    Граундированная задача: факты и операторы упорядочены лексикографически,
    индексы детерминированы между запусками.
    """
    domain_name: str
    problem_name: str
    facts: Tuple[Atom, ...]
    operators: Tuple[Operator, ...]
    init: FrozenSet[int]
    goal: FrozenSet[int]
    # Цель недостижима даже в релаксации удалений
    unsolvable: bool = False
    goal_mask: int = field(init=False, repr=False, compare=False)
    fact_index: Dict[Atom, int] = field(init=False, repr=False, compare=False)
    # Для каждого факта - операторы, у которых он в предусловии (для эвристик)
    pre_of: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "goal_mask", to_mask(self.goal))
        object.__setattr__(self, "fact_index", {atom: i for i, atom in enumerate(self.facts)})
        pre_of: List[List[int]] = [[] for _ in self.facts]
        for index, op in enumerate(self.operators):
            for f in op.pre:
                pre_of[f].append(index)
        object.__setattr__(self, "pre_of", tuple(tuple(ops) for ops in pre_of))

    @property
    def initial_state(self) -> State:
        return State(to_mask(self.init))

    @property
    def fact_count(self) -> int:
        return len(self.facts)

    def operator_index(self, label: str) -> int:
        for i, op in enumerate(self.operators):
            if op.label == label:
                return i
        raise KeyError(label)
