"""
Граундинг: инстанцирование схем действий с отсечением по достижимости
в релаксации удалений (итерация до неподвижной точки).
"""
from itertools import product
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from app.errors import GroundingError
from app.logger import get_logger
from app.models.pddl import ROOT_TYPE, ActionSchema, Atom, DomainAst, ProblemAst
from app.models.task import GroundTask, Operator

logger = get_logger(__name__)

Binding = Dict[str, str]


class _TypeTable:
    """Иерархия типов и объекты по типам (с учётом подтипов)."""

    def __init__(self, domain: DomainAst, problem: ProblemAst):
        self.parent: Dict[str, str] = {t: p for t, p in domain.types}
        self.declared = {ROOT_TYPE} | set(self.parent)
        self.object_type: Dict[str, str] = {}
        for name, t in domain.constants + problem.objects:
            if t not in self.declared:
                raise GroundingError(f"Объект {name}: необъявленный тип {t}")
            if name in self.object_type and self.object_type[name] != t:
                raise GroundingError(f"Объект {name} объявлен с разными типами")
            self.object_type[name] = t
        self._objects_of: Dict[str, List[str]] = {}

    def is_subtype(self, t: str, ancestor: str) -> bool:
        seen = set()
        while t not in seen:
            if t == ancestor:
                return True
            seen.add(t)
            if t == ROOT_TYPE:
                return False
            t = self.parent.get(t, ROOT_TYPE)
        raise GroundingError(f"Цикл в иерархии типов у {t}")

    def objects_of(self, t: str) -> List[str]:
        if t not in self._objects_of:
            self._objects_of[t] = sorted(o for o, ot in self.object_type.items() if self.is_subtype(ot, t))
        return self._objects_of[t]

    def check_atom(self, atom: Atom, domain: DomainAst, where: str) -> None:
        try:
            pred = domain.predicate(atom.predicate)
        except KeyError:
            raise GroundingError(f"{where}: необъявленный предикат {atom.predicate}") from None
        if pred.arity != len(atom.args):
            raise GroundingError(f"{where}: арность {atom} - ожидалось {pred.arity}, получено {len(atom.args)}")
        for arg, (_, t) in zip(atom.args, pred.parameters):
            if arg not in self.object_type:
                raise GroundingError(f"{where}: необъявленный объект {arg} в {atom}")
            if not self.is_subtype(self.object_type[arg], t):
                raise GroundingError(f"{where}: объект {arg} типа {self.object_type[arg]} не подходит под {t} в {atom}")


def _substitute(atom: Atom, binding: Mapping[str, str]) -> Atom:
    return Atom(atom.predicate, tuple(binding.get(a, a) for a in atom.args))


def _match(pattern: Atom, fact_args: Tuple[str, ...], binding: Binding) -> Optional[Binding]:
    extended = binding
    for p, v in zip(pattern.args, fact_args):
        if p.startswith("?"):
            bound = extended.get(p)
            if bound is None:
                if extended is binding:
                    extended = dict(binding)
                extended[p] = v
            elif bound != v:
                return None
        elif p != v:
            return None
    return extended


def _bindings(action: ActionSchema, reached: Mapping[str, Set[Tuple[str, ...]]], types: _TypeTable) -> Iterator[Binding]:
    """Все подстановки, при которых предусловие истинно на множестве reached."""
    param_types = dict(action.parameters)

    def join(i: int, binding: Binding) -> Iterator[Binding]:
        if i == len(action.precondition):
            yield binding
            return
        pattern = action.precondition[i]
        for args in sorted(reached.get(pattern.predicate, ())):
            extended = _match(pattern, args, binding)
            if extended is not None:
                yield from join(i + 1, extended)

    for partial in join(0, {}):
        # Типы связанных параметров
        if any(not types.is_subtype(types.object_type[v], param_types[p]) for p, v in partial.items()):
            continue
        free = [p for p, _ in action.parameters if p not in partial]
        for values in product(*(types.objects_of(param_types[p]) for p in free)):
            binding = dict(partial)
            binding.update(zip(free, values))
            yield binding


def ground(domain: DomainAst, problem: ProblemAst) -> GroundTask:
    """
    Строит GroundTask.

    Факты - атомы, достижимые в релаксации удалений из init; операторы -
    инстанцирования с релаксационно достижимым предусловием. Порядок
    фактов и операторов лексикографический (имя, затем аргументы).
    Недостижимая цель не ошибка: задача помечается unsolvable.
    """
    if problem.domain_name != domain.name:
        raise GroundingError(f"Задача {problem.name} ссылается на домен {problem.domain_name}, а не {domain.name}")
    types = _TypeTable(domain, problem)
    for atom in problem.init:
        types.check_atom(atom, domain, ":init")
    for atom in problem.goal:
        types.check_atom(atom, domain, ":goal")
    for action in domain.actions:
        for atom in action.precondition + action.add_effects + action.del_effects:
            for arg in atom.args:
                if not arg.startswith("?") and arg not in types.object_type:
                    raise GroundingError(f"Действие {action.name}: необъявленная константа {arg}")

    # Шаг 1: неподвижная точка достижимости
    reached: Dict[str, Set[Tuple[str, ...]]] = {}
    for atom in problem.init:
        reached.setdefault(atom.predicate, set()).add(atom.args)
    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        for action in domain.actions:
            for binding in list(_bindings(action, reached, types)):
                for eff in action.add_effects:
                    atom = _substitute(eff, binding)
                    bucket = reached.setdefault(atom.predicate, set())
                    if atom.args not in bucket:
                        bucket.add(atom.args)
                        changed = True

    # Шаг 2: факты и операторы в детерминированном порядке
    facts_set = {Atom(p, args) for p, bucket in reached.items() for args in bucket}
    unreachable_goal = [a for a in problem.goal if a not in facts_set]
    facts = sorted(facts_set | set(unreachable_goal))
    index = {atom: i for i, atom in enumerate(facts)}

    instances: List[Tuple[str, Tuple[str, ...], ActionSchema, Binding]] = []
    for action in domain.actions:
        for binding in _bindings(action, reached, types):
            args = tuple(binding[p] for p, _ in action.parameters)
            instances.append((action.name, args, action, binding))
    instances.sort(key=lambda inst: (inst[0], inst[1]))

    operators: List[Operator] = []
    for name, args, action, binding in instances:
        pre = sorted({index[_substitute(a, binding)] for a in action.precondition})
        add = sorted({index[_substitute(a, binding)] for a in action.add_effects})
        # Удаление никогда не истинного атома ничего не меняет
        delete = sorted({index[d] for d in (_substitute(a, binding) for a in action.del_effects) if d in index})
        operators.append(Operator(name, args, tuple(pre), tuple(add), tuple(delete)))

    task = GroundTask(
        domain_name=domain.name,
        problem_name=problem.name,
        facts=tuple(facts),
        operators=tuple(operators),
        init=frozenset(index[a] for a in problem.init),
        goal=frozenset(index[a] for a in problem.goal),
        unsolvable=bool(unreachable_goal),
    )
    logger.debug(
        "Граундинг %s/%s: %d фактов, %d операторов, %d раундов%s",
        domain.name, problem.name, len(facts), len(operators), rounds,
        ", цель недостижима" if unreachable_goal else "",
    )
    return task


def validate_lifted_plan(domain: DomainAst, problem: ProblemAst, steps: Sequence[str]) -> bool:
    """
    Проверяет план (метки вида "(pick ball1 rooma left)") прямо на AST,
    минуя граундер: связывание параметров, типы, предусловия, цель.
    """
    types = _TypeTable(domain, problem)
    state: Set[Atom] = set(problem.init)
    for label in steps:
        tokens = label.strip().strip("()").lower().split()
        if not tokens:
            return False
        try:
            action = domain.action(tokens[0])
        except KeyError:
            return False
        args = tokens[1:]
        if len(args) != len(action.parameters):
            return False
        binding: Binding = {}
        for (p, t), v in zip(action.parameters, args):
            if v not in types.object_type or not types.is_subtype(types.object_type[v], t):
                return False
            binding[p] = v
        if not all(_substitute(a, binding) in state for a in action.precondition):
            return False
        state -= {_substitute(a, binding) for a in action.del_effects}
        state |= {_substitute(a, binding) for a in action.add_effects}
    return all(a in state for a in problem.goal)
