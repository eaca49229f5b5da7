"""
Иерархия исключений планировщика.
CLI превращает их в коды выхода, роутеры - в HTTPException.
"""
from typing import Optional


class PlannerError(Exception):
    """Базовая ошибка пакета."""


class PDDLError(PlannerError):
    """Ошибка во входных PDDL файлах."""


class PDDLSyntaxError(PDDLError):
    """Синтаксическая ошибка с позицией (строка/столбец, с единицы)."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f" (строка {line}, столбец {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnsupportedFeatureError(PDDLError):
    """Конструкция PDDL вне поддерживаемого подмножества :strips + :typing."""

    def __init__(self, feature: str, message: Optional[str] = None):
        self.feature = feature
        super().__init__(message or f"Не поддерживается: {feature}")


class GroundingError(PlannerError):
    """Несогласованность домена и задачи при граундинге."""


class ContractViolation(PlannerError, ValueError):
    """Нарушено предусловие чистой операции."""


class UnknownAlgorithmError(PlannerError):
    """Идентификатор алгоритма не входит в список поддерживаемых."""
