"""
Парсер подмножества PDDL (:strips + :typing).
pyparsing строит дерево s-выражений с позициями, дальше - обход по секциям.
Всё вне подмножества - громкая ошибка UnsupportedFeatureError, без молчаливых пропусков.
"""
from dataclasses import dataclass
from typing import Dict, List, Sequence, Set, Tuple, Union

import pyparsing as pp

from app.errors import PDDLSyntaxError, UnsupportedFeatureError
from app.models.pddl import (
    ROOT_TYPE,
    ActionSchema,
    Atom,
    DomainAst,
    Predicate,
    ProblemAst,
    TypedName,
)

SUPPORTED_REQUIREMENTS = {":strips", ":typing"}

# Конструкции, которые мы узнаём, но сознательно не поддерживаем
UNSUPPORTED_CONNECTIVES = {
    "not", "or", "imply", "exists", "forall", "when", "=",
    "increase", "decrease", "assign", "scale-up", "scale-down",
}
UNSUPPORTED_SECTIONS = {
    ":functions", ":derived", ":durative-action", ":constraints", ":metric",
    ":process", ":event",
}


@dataclass(frozen=True)
class _Node:
    """Скобочное выражение и смещение открывающей скобки в тексте."""
    items: Tuple[Union[str, "_Node"], ...]
    loc: int


def _make_node(s: str, loc: int, toks: pp.ParseResults) -> _Node:
    return _Node(tuple(toks[0]), loc)


_ATOM = pp.Word(pp.printables, exclude_chars="();")
_LIST = pp.Forward()
_LIST <<= (pp.Suppress("(") + pp.Group(pp.ZeroOrMore(_ATOM | _LIST)) + pp.Suppress(")")).set_parse_action(_make_node)
_LIST.ignore(pp.Literal(";") + pp.rest_of_line)


class _Reader:
    """Общие помощники разбора; держит исходный текст ради позиций в ошибках."""

    def __init__(self, text: str):
        # Идентификаторы PDDL регистронезависимы
        self.text = text.lower()

    def parse(self) -> _Node:
        try:
            result = _LIST.parse_string(self.text, parse_all=True)
        except pp.ParseBaseException as e:
            raise PDDLSyntaxError(f"Ошибка синтаксиса PDDL: {e.msg}", e.lineno, e.col) from e
        return result[0]

    def error(self, node: _Node, message: str) -> PDDLSyntaxError:
        return PDDLSyntaxError(message, pp.lineno(node.loc, self.text), pp.col(node.loc, self.text))

    def header(self, root: _Node, kind: str) -> Tuple[str, List[Union[str, _Node]]]:
        """Проверяет (define (kind name) ...) и возвращает имя и секции."""
        items = root.items
        if not items or items[0] != "define":
            raise self.error(root, "Ожидалось (define ...)")
        if len(items) < 2 or not isinstance(items[1], _Node):
            raise self.error(root, f"Ожидалось ({kind} <имя>)")
        head = items[1]
        if len(head.items) != 2 or head.items[0] != kind or not isinstance(head.items[1], str):
            raise self.error(head, f"Ожидалось ({kind} <имя>)")
        return head.items[1], list(items[2:])

    def section(self, item: Union[str, _Node], root: _Node) -> Tuple[str, _Node]:
        if not isinstance(item, _Node) or not item.items or not isinstance(item.items[0], str):
            raise self.error(root, f"Ожидалась секция (:ключ ...), получено {item!r}")
        key = item.items[0]
        if key in UNSUPPORTED_SECTIONS:
            raise UnsupportedFeatureError(key)
        return key, item

    def requirements(self, node: _Node) -> Tuple[str, ...]:
        flags = []
        for flag in node.items[1:]:
            if not isinstance(flag, str) or not flag.startswith(":"):
                raise self.error(node, f"Некорректный флаг требований: {flag!r}")
            if flag not in SUPPORTED_REQUIREMENTS:
                raise UnsupportedFeatureError(flag, f"Требование {flag} не поддерживается (только :strips и :typing)")
            flags.append(flag)
        return tuple(flags)

    def typed_list(self, items: Sequence[Union[str, _Node]], node: _Node) -> List[TypedName]:
        """Разбирает `a b - t c` в [(a, t), (b, t), (c, object)]."""
        result: List[TypedName] = []
        pending: List[str] = []
        i = 0
        while i < len(items):
            item = items[i]
            if isinstance(item, _Node):
                if item.items and item.items[0] == "either":
                    raise UnsupportedFeatureError("either")
                raise self.error(item, "Неожиданное вложенное выражение в типизированном списке")
            if item == "-":
                if i + 1 >= len(items):
                    raise self.error(node, "После '-' ожидался тип")
                type_name = items[i + 1]
                if isinstance(type_name, _Node):
                    if type_name.items and type_name.items[0] == "either":
                        raise UnsupportedFeatureError("either")
                    raise self.error(type_name, "Ожидалось имя типа")
                if not pending:
                    raise self.error(node, "Тип без имён перед ним")
                result.extend((name, type_name) for name in pending)
                pending = []
                i += 2
                continue
            pending.append(item)
            i += 1
        result.extend((name, ROOT_TYPE) for name in pending)
        return result

    def atom(self, node: Union[str, _Node], parent: _Node) -> Atom:
        if not isinstance(node, _Node) or not node.items:
            raise self.error(parent, f"Ожидался атом, получено {node!r}")
        head = node.items[0]
        if not isinstance(head, str):
            raise self.error(node, "Ожидалось имя предиката")
        if head in UNSUPPORTED_CONNECTIVES:
            raise UnsupportedFeatureError(head)
        args = node.items[1:]
        for arg in args:
            if not isinstance(arg, str):
                raise self.error(node, "Аргументы атома должны быть именами")
        return Atom(head, tuple(args))

    def conjunction(self, node: Union[str, _Node], parent: _Node) -> Tuple[Atom, ...]:
        """Пустое выражение, один атом или (and атом...)."""
        if not isinstance(node, _Node):
            raise self.error(parent, f"Ожидалось выражение, получено {node!r}")
        if not node.items:
            return ()
        if node.items[0] == "and":
            return tuple(self.atom(child, node) for child in node.items[1:])
        return (self.atom(node, parent),)

    def effect(self, node: Union[str, _Node], parent: _Node) -> Tuple[Tuple[Atom, ...], Tuple[Atom, ...]]:
        if not isinstance(node, _Node):
            raise self.error(parent, f"Ожидался эффект, получено {node!r}")
        if not node.items:
            return (), ()
        literals = node.items[1:] if node.items[0] == "and" else (node,)
        adds: List[Atom] = []
        dels: List[Atom] = []
        for literal in literals:
            if isinstance(literal, _Node) and literal.items and literal.items[0] == "not":
                if len(literal.items) != 2:
                    raise self.error(literal, "(not ...) принимает ровно один атом")
                dels.append(self.atom(literal.items[1], literal))
            else:
                adds.append(self.atom(literal, node))
        return tuple(adds), tuple(dels)


def _check_declared(reader: _Reader, node: _Node, atoms: Sequence[Atom], predicates: Dict[str, Predicate],
                    variables: Set[str], constants: Set[str]) -> None:
    for atom in atoms:
        pred = predicates.get(atom.predicate)
        if pred is None:
            raise reader.error(node, f"Необъявленный предикат {atom.predicate}")
        if pred.arity != len(atom.args):
            raise reader.error(node, f"Арность {atom}: ожидалось {pred.arity}, получено {len(atom.args)}")
        for arg in atom.args:
            if arg.startswith("?"):
                if arg not in variables:
                    raise reader.error(node, f"Необъявленная переменная {arg} в {atom}")
            elif arg not in constants:
                raise reader.error(node, f"Необъявленная константа {arg} в {atom}")


def parse_domain(text: str) -> DomainAst:
    """
    Разбирает текст домена в DomainAst.

    Raises:
        PDDLSyntaxError: синтаксис или нарушение инвариантов AST (с позицией)
        UnsupportedFeatureError: конструкция вне :strips + :typing
    """
    reader = _Reader(text)
    root = reader.parse()
    name, sections = reader.header(root, "domain")

    requirements: Tuple[str, ...] = (":strips",)
    types: List[Tuple[str, str]] = []
    constants: List[TypedName] = []
    predicates: List[Predicate] = []
    action_nodes: List[_Node] = []

    for item in sections:
        key, node = reader.section(item, root)
        if key == ":requirements":
            requirements = reader.requirements(node)
        elif key == ":types":
            types.extend(t for t in reader.typed_list(node.items[1:], node) if t[0] != ROOT_TYPE)
        elif key == ":constants":
            constants.extend(reader.typed_list(node.items[1:], node))
        elif key == ":predicates":
            for pnode in node.items[1:]:
                if not isinstance(pnode, _Node) or not pnode.items or not isinstance(pnode.items[0], str):
                    raise reader.error(node, "Ожидалось объявление предиката (имя ?x - тип ...)")
                params = reader.typed_list(pnode.items[1:], pnode)
                predicates.append(Predicate(pnode.items[0], tuple(params)))
        elif key == ":action":
            action_nodes.append(node)
        else:
            raise reader.error(node, f"Неизвестная секция {key}")

    declared_types = {ROOT_TYPE} | {t for t, _ in types}
    for t, parent in types:
        if parent not in declared_types:
            raise reader.error(root, f"Необъявленный родительский тип {parent}")
    pred_index: Dict[str, Predicate] = {}
    for pred in predicates:
        if pred.name in pred_index:
            raise reader.error(root, f"Предикат {pred.name} объявлен дважды")
        for _, t in pred.parameters:
            if t not in declared_types:
                raise reader.error(root, f"Необъявленный тип {t} в предикате {pred.name}")
        pred_index[pred.name] = pred
    constant_names = {c for c, _ in constants}
    for c, t in constants:
        if t not in declared_types:
            raise reader.error(root, f"Необъявленный тип {t} у константы {c}")

    actions = [_parse_action(reader, node, pred_index, declared_types, constant_names) for node in action_nodes]
    if len({a.name for a in actions}) != len(actions):
        raise reader.error(root, "Имена действий должны быть уникальны")

    return DomainAst(
        name=name,
        requirements=requirements,
        types=tuple(types),
        constants=tuple(constants),
        predicates=tuple(predicates),
        actions=tuple(actions),
    )


def _parse_action(reader: _Reader, node: _Node, predicates: Dict[str, Predicate],
                  declared_types: Set[str], constants: Set[str]) -> ActionSchema:
    items = node.items
    if len(items) < 2 or not isinstance(items[1], str):
        raise reader.error(node, "Ожидалось имя действия")
    name = items[1]
    fields: Dict[str, Union[str, _Node]] = {}
    rest = items[2:]
    if len(rest) % 2:
        raise reader.error(node, f"Действие {name}: ключи и значения должны идти парами")
    for key, value in zip(rest[::2], rest[1::2]):
        if not isinstance(key, str) or not key.startswith(":"):
            raise reader.error(node, f"Действие {name}: ожидался ключ, получено {key!r}")
        if key not in (":parameters", ":precondition", ":effect"):
            raise UnsupportedFeatureError(key)
        fields[key] = value

    params_node = fields.get(":parameters", _Node((), node.loc))
    if not isinstance(params_node, _Node):
        raise reader.error(node, f"Действие {name}: :parameters должен быть списком")
    parameters = reader.typed_list(params_node.items, params_node)
    param_names = [p for p, _ in parameters]
    if len(set(param_names)) != len(param_names):
        raise reader.error(params_node, f"Действие {name}: повторяющиеся параметры")
    for p, t in parameters:
        if not p.startswith("?"):
            raise reader.error(params_node, f"Действие {name}: параметр {p} должен начинаться с ?")
        if t not in declared_types:
            raise reader.error(params_node, f"Действие {name}: необъявленный тип {t}")

    precondition = reader.conjunction(fields.get(":precondition", _Node((), node.loc)), node)
    adds, dels = reader.effect(fields.get(":effect", _Node((), node.loc)), node)
    variables = set(param_names)
    _check_declared(reader, node, precondition + adds + dels, predicates, variables, constants)
    return ActionSchema(name, tuple(parameters), precondition, adds, dels)


def parse_problem(text: str) -> ProblemAst:
    """
    Разбирает текст задачи в ProblemAst.
    Сверка с доменом (типы, арность, объекты) откладывается до ground().
    """
    reader = _Reader(text)
    root = reader.parse()
    name, sections = reader.header(root, "problem")

    domain_name = ""
    objects: List[TypedName] = []
    init: Dict[Atom, None] = {}
    goal: Tuple[Atom, ...] = ()

    for item in sections:
        key, node = reader.section(item, root)
        if key == ":domain":
            if len(node.items) != 2 or not isinstance(node.items[1], str):
                raise reader.error(node, "Ожидалось (:domain <имя>)")
            domain_name = node.items[1]
        elif key == ":requirements":
            reader.requirements(node)
        elif key == ":objects":
            objects.extend(reader.typed_list(node.items[1:], node))
        elif key == ":init":
            for child in node.items[1:]:
                atom = reader.atom(child, node)
                if not atom.is_ground:
                    raise reader.error(node, f"Атом {atom} в :init должен быть без переменных")
                init.setdefault(atom, None)
        elif key == ":goal":
            if len(node.items) != 2:
                raise reader.error(node, "Ожидалось (:goal <условие>)")
            goal = reader.conjunction(node.items[1], node)
            for atom in goal:
                if not atom.is_ground:
                    raise reader.error(node, f"Атом {atom} в :goal должен быть без переменных")
        else:
            raise reader.error(node, f"Неизвестная секция {key}")

    if not domain_name:
        raise reader.error(root, "Отсутствует (:domain ...)")
    return ProblemAst(
        name=name,
        domain_name=domain_name,
        objects=tuple(objects),
        init=tuple(init),
        goal=goal,
    )
