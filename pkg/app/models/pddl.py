"""
Модели PDDL: AST домена и задачи.
Неизменяемые dataclass'ы - безопасно передавать между воркерами.
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

ROOT_TYPE = "object"


class Atom(NamedTuple):
    """Атом: предикат и аргументы (переменные ?x или объекты)."""
    predicate: str
    args: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.predicate,) + self.args) + ")"

    @property
    def is_ground(self) -> bool:
        return not any(a.startswith("?") for a in self.args)


# (имя, тип) - параметр действия, параметр предиката или объект
TypedName = Tuple[str, str]


@dataclass(frozen=True)
class Predicate:
    name: str
    parameters: Tuple[TypedName, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.parameters)


@dataclass(frozen=True)
class ActionSchema:
    """Схема действия: предусловие - конъюнкция позитивных литералов."""
    name: str
    parameters: Tuple[TypedName, ...]
    precondition: Tuple[Atom, ...]
    add_effects: Tuple[Atom, ...]
    del_effects: Tuple[Atom, ...]


@dataclass(frozen=True)
class DomainAst:
    name: str
    requirements: Tuple[str, ...] = (":strips",)
    # (тип, родитель)
    types: Tuple[Tuple[str, str], ...] = ()
    constants: Tuple[TypedName, ...] = ()
    predicates: Tuple[Predicate, ...] = ()
    actions: Tuple[ActionSchema, ...] = ()

    def predicate(self, name: str) -> Predicate:
        for p in self.predicates:
            if p.name == name:
                return p
        raise KeyError(name)

    def action(self, name: str) -> ActionSchema:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)


@dataclass(frozen=True)
class ProblemAst:
    name: str
    domain_name: str
    objects: Tuple[TypedName, ...] = ()
    # Повторы удалены, порядок файла сохранён
    init: Tuple[Atom, ...] = ()
    goal: Tuple[Atom, ...] = field(default=())
