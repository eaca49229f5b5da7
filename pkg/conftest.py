"""
Общие фикстуры тестов: задачи из fixtures/ и ручные значения из manifest.json.
"""
import json
from pathlib import Path
from typing import Callable

import pytest

from app.models.pddl import Atom
from app.models.task import GroundTask, Operator
from app.services.bench_service import load_task

FIXTURES = Path(__file__).parent / "fixtures"
MANIFEST = json.loads((FIXTURES / "manifest.json").read_text(encoding="utf-8"))


def pytest_generate_tests(metafunc):
    # instance - запись manifest.json, по тесту на каждую задачу набора
    if "instance" in metafunc.fixturenames:
        metafunc.parametrize(
            "instance",
            MANIFEST["instances"],
            ids=[f"{i['domain']}-{i['problem']}" for i in MANIFEST["instances"]],
        )


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def load() -> Callable[[str, str], GroundTask]:
    """Загрузчик fixtures/<domain>/<problem>.pddl."""

    def _load(domain: str, problem: str) -> GroundTask:
        return load_task(FIXTURES / domain / "domain.pddl", FIXTURES / domain / f"{problem}.pddl")

    return _load


@pytest.fixture
def chain_task() -> GroundTask:
    """{} →o1 {a} →o2 {a, b}, цель {a, b}."""
    return GroundTask(
        domain_name="chain",
        problem_name="inline",
        facts=(Atom("a"), Atom("b")),
        operators=(
            Operator("o1", (), pre=(), add=(0,), delete=()),
            Operator("o2", (), pre=(0,), add=(1,), delete=()),
        ),
        init=frozenset(),
        goal=frozenset({0, 1}),
    )


@pytest.fixture
def gripper_task(load) -> GroundTask:
    return load("gripper", "p01")
