"""
Тесты PDDL: разбор домена и задачи, граундинг, проверка плана на AST.
Запуск: pytest test_pddl.py
"""
import pytest

from app.errors import GroundingError, PDDLSyntaxError, UnsupportedFeatureError
from app.models.pddl import Atom
from app.services.grounding import ground, validate_lifted_plan
from app.services.pddl_parser import parse_domain, parse_problem

MINIMAL_DOMAIN = """
(define (domain tiny)
  (:requirements :strips)
  (:predicates (a))
  (:action op1 :parameters () :precondition () :effect (a)))
"""

TINY_PROBLEM = """
(define (problem tiny-1) (:domain tiny) (:init) (:goal (a)))
"""

GRIPPER_PLAN = [
    "(pick ball1 rooma left)",
    "(pick ball2 rooma right)",
    "(move rooma roomb)",
    "(drop ball1 roomb left)",
    "(drop ball2 roomb right)",
]


# ─────────────────────────────────────────────
# 1. Домен
# ─────────────────────────────────────────────
def test_minimal_domain():
    domain = parse_domain(MINIMAL_DOMAIN)
    assert domain.name == "tiny"
    assert len(domain.predicates) == 1
    assert len(domain.actions) == 1
    assert domain.action("op1").add_effects == (Atom("a"),)


def test_gripper_domain_actions(fixtures_dir):
    domain = parse_domain((fixtures_dir / "gripper" / "domain.pddl").read_text(encoding="utf-8"))
    assert [a.name for a in domain.actions] == ["move", "pick", "drop"]
    assert domain.requirements == (":strips", ":typing")
    pick = domain.action("pick")
    assert pick.del_effects == (Atom("at", ("?obj", "?room")), Atom("free", ("?gripper",)))


def test_identifiers_are_lower_cased():
    domain = parse_domain(MINIMAL_DOMAIN.upper())
    assert domain.name == "tiny"
    assert domain.action("op1")


def test_constants_are_supported():
    domain = parse_domain("""
    (define (domain c)
      (:requirements :strips :typing)
      (:types place)
      (:constants home - place)
      (:predicates (at ?p - place))
      (:action go-home :parameters (?p - place) :precondition (at ?p) :effect (and (at home) (not (at ?p)))))
    """)
    assert domain.constants == (("home", "place"),)


@pytest.mark.parametrize(
    "text, feature",
    [
        ("(define (domain d) (:requirements :adl))", ":adl"),
        ("(define (domain d) (:requirements :strips :conditional-effects))", ":conditional-effects"),
        ("(define (domain d) (:predicates (a) (b)) (:action x :parameters () :precondition (a) :effect (when (a) (b))))", "when"),
        ("(define (domain d) (:predicates (a)) (:action x :parameters () :precondition (not (a)) :effect (a)))", "not"),
        ("(define (domain d) (:predicates (a)) (:functions (total-cost)))", ":functions"),
        ("(define (domain d) (:types t) (:predicates (p ?x - (either t object))))", "either"),
    ],
)
def test_unsupported_features_are_named(text, feature):
    with pytest.raises(UnsupportedFeatureError) as exc:
        parse_domain(text)
    assert exc.value.feature == feature


def test_syntax_error_has_position():
    with pytest.raises(PDDLSyntaxError) as exc:
        parse_domain("(define (domain broken)\n  (:predicates (a))\n  (:action x")
    assert exc.value.line is not None
    assert exc.value.column is not None


def test_undeclared_predicate_in_action():
    with pytest.raises(PDDLSyntaxError, match="Необъявленный предикат"):
        parse_domain("(define (domain d) (:predicates (a)) (:action x :parameters () :precondition (b) :effect (a)))")


def test_duplicate_parameters_rejected():
    with pytest.raises(PDDLSyntaxError, match="повторяющиеся параметры"):
        parse_domain("(define (domain d) (:predicates (p ?x)) (:action x :parameters (?a ?a) :precondition (p ?a) :effect (p ?a)))")


# ─────────────────────────────────────────────
# 2. Задача
# ─────────────────────────────────────────────
def test_empty_init_and_goal():
    problem = parse_problem("(define (problem e) (:domain tiny) (:init) (:goal (and)))")
    assert problem.init == ()
    assert problem.goal == ()


def test_fixture_init_atoms(fixtures_dir, instance):
    path = fixtures_dir / instance["domain"] / f"{instance['problem']}.pddl"
    problem = parse_problem(path.read_text(encoding="utf-8"))
    assert len(problem.init) == instance["init_atoms"]


def test_problem_requires_domain():
    with pytest.raises(PDDLSyntaxError):
        parse_problem("(define (problem e) (:init) (:goal (and)))")


def test_goal_arity_error_raised_at_ground():
    domain = parse_domain(MINIMAL_DOMAIN)
    problem = parse_problem("(define (problem bad) (:domain tiny) (:init) (:goal (a x)))")
    with pytest.raises(GroundingError, match="арность"):
        ground(domain, problem)


# ─────────────────────────────────────────────
# 3. Граундинг
# ─────────────────────────────────────────────
def test_ground_trivial():
    task = ground(parse_domain(MINIMAL_DOMAIN), parse_problem(TINY_PROBLEM))
    assert len(task.facts) == 1
    assert len(task.operators) == 1
    assert not task.unsolvable


def test_ground_gripper_operator_count(gripper_task):
    names = [op.name for op in gripper_task.operators]
    assert len(names) == 20
    assert names.count("move") == 4
    assert names.count("pick") == 8
    assert names.count("drop") == 8


def test_ground_sizes_match_manifest(load, instance):
    task = load(instance["domain"], instance["problem"])
    assert task.fact_count == instance["facts"]
    assert len(task.operators) == instance["operators"]


def test_grounding_is_deterministic(load):
    first = load("gripper", "p02")
    second = load("gripper", "p02")
    assert first.facts == second.facts
    assert first.operators == second.operators
    assert list(first.facts) == sorted(first.facts)
    assert [(o.name, o.args) for o in first.operators] == sorted((o.name, o.args) for o in first.operators)


def test_operator_sets_within_facts(load, instance):
    task = load(instance["domain"], instance["problem"])
    for op in task.operators:
        assert set(op.pre) | set(op.add) | set(op.delete) <= set(range(task.fact_count))


def test_unreachable_goal_flags_unsolvable():
    domain = parse_domain("""
    (define (domain d) (:predicates (a) (b))
      (:action op1 :parameters () :precondition () :effect (a)))
    """)
    problem = parse_problem("(define (problem p) (:domain d) (:init) (:goal (and (a) (b))))")
    task = ground(domain, problem)
    assert task.unsolvable
    assert Atom("b") in task.fact_index


def test_domain_name_mismatch():
    problem = parse_problem("(define (problem p) (:domain other) (:init) (:goal (a)))")
    with pytest.raises(GroundingError):
        ground(parse_domain(MINIMAL_DOMAIN), problem)


def test_undeclared_object_and_type_mismatch(fixtures_dir):
    domain = parse_domain((fixtures_dir / "gripper" / "domain.pddl").read_text(encoding="utf-8"))
    undeclared = parse_problem("""
    (define (problem p) (:domain gripper-typed)
      (:objects rooma - room ball1 - ball)
      (:init (at-robby rooma) (at ball1 kitchen))
      (:goal (at ball1 rooma)))
    """)
    with pytest.raises(GroundingError, match="необъявленный объект"):
        ground(domain, undeclared)

    mismatch = parse_problem("""
    (define (problem p) (:domain gripper-typed)
      (:objects rooma - room ball1 - ball)
      (:init (at-robby ball1))
      (:goal (at ball1 rooma)))
    """)
    with pytest.raises(GroundingError, match="не подходит"):
        ground(domain, mismatch)


# ─────────────────────────────────────────────
# 4. Проверка плана на AST (без граундера)
# ─────────────────────────────────────────────
def test_validate_lifted_plan(fixtures_dir):
    domain = parse_domain((fixtures_dir / "gripper" / "domain.pddl").read_text(encoding="utf-8"))
    problem = parse_problem((fixtures_dir / "gripper" / "p01.pddl").read_text(encoding="utf-8"))
    assert validate_lifted_plan(domain, problem, GRIPPER_PLAN)
    assert not validate_lifted_plan(domain, problem, GRIPPER_PLAN[:-1])
    assert not validate_lifted_plan(domain, problem, ["(drop ball1 roomb left)"])
    assert not validate_lifted_plan(domain, problem, ["(pick rooma ball1 left)"])
