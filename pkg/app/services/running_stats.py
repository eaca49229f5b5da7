"""
Бегущая статистика (count, mean, m2) со слиянием и вычитанием наборов данных.
Храним m2 = Σ(x − μ)²: из него получаются и популяционная дисперсия (m2/n),
нужная формулам слияния, и выборочная (m2/(n−1)) для UCB1-Normal.
"""
import math
from dataclasses import dataclass
from typing import Iterable

from app.errors import ContractViolation


@dataclass(frozen=True, slots=True)
class RunningStats:
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_samples(cls, xs: Iterable[float]) -> "RunningStats":
        stats = cls()
        for x in xs:
            stats = stats.push(x)
        return stats

    @classmethod
    def singleton(cls, x: float) -> "RunningStats":
        if math.isnan(x):
            raise ContractViolation("Наблюдение NaN")
        return cls(1, float(x), 0.0)

    def push(self, x: float) -> "RunningStats":
        """Welford: то же, что merge с одноэлементным набором {x}."""
        if math.isnan(x):
            raise ContractViolation("Наблюдение NaN")
        n = self.count + 1
        delta = x - self.mean
        mean = self.mean + delta / n
        return RunningStats(n, mean, self.m2 + delta * (x - mean))

    def merge(self, other: "RunningStats") -> "RunningStats":
        """Статистика объединения двух наборов."""
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = (self.count * self.mean + other.count * other.mean) / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return RunningStats(n, mean, m2)

    def retract(self, other: "RunningStats") -> "RunningStats":
        """
        Статистика после вычитания набора other, ранее влитого в self.
        Вычитание плохо обусловлено: небольшой отрицательный m2 от округления
        обнуляется.
        """
        if other.count > self.count:
            raise ContractViolation(f"Нельзя вычесть {other.count} наблюдений из {self.count}")
        if other.count == 0:
            return self
        n1 = self.count - other.count
        if n1 == 0:
            return RunningStats()
        mean = (self.count * self.mean - other.count * other.mean) / n1
        delta = self.mean - other.mean
        m2 = self.m2 - other.m2 - other.count * self.count / n1 * delta * delta
        if m2 < 0.0:
            m2 = 0.0
        return RunningStats(n1, mean, m2)

    def shift(self, c: float) -> "RunningStats":
        """Прибавить константу к каждому наблюдению."""
        if self.count == 0 or c == 0:
            return self
        return RunningStats(self.count, self.mean + c, self.m2)

    @property
    def variance(self) -> float:
        """Популяционная дисперсия m2/n (0 для пустого набора)."""
        return self.m2 / self.count if self.count else 0.0

    @property
    def sample_variance(self) -> float:
        """Выборочная дисперсия m2/(n−1); при n ≤ 1 считаем 0."""
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def sigma_hat(self) -> float:
        # σ̂ = 0 при n = 1: линейное поддерево исследовать не нужно
        return math.sqrt(self.sample_variance)

    def __bool__(self) -> bool:
        return self.count > 0
