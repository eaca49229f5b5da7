"""
Роутер лаборатории бандитов - симуляция регрета и проверка тождеств.
"""
import math

from fastapi import APIRouter
from pydantic import BaseModel, Field
from typing import Any, Dict, List

from app.models.bandit import BoundPolicy, GaussianArm, PolicySummary
from app.services import regret_lab

router = APIRouter(prefix="/bandits")


class SimulateRequest(BaseModel):
    arms: List[GaussianArm] = Field(min_length=1)
    policies: List[BoundPolicy] = Field(min_length=1)
    horizon: int = Field(default=1000, ge=1, le=100000)
    seeds: int = Field(default=10, ge=1, le=200, description="Зёрна 0..N-1")
    warmup: int = Field(default=1, ge=1)


class SimulateResponse(BaseModel):
    summary: List[PolicySummary]


@router.post("/simulate", response_model=SimulateResponse)
def simulate_endpoint(request: SimulateRequest):
    """Сводка финального регрета по политикам."""
    # ContractViolation (horizon < warmup · число ручек) отдаёт 400 обработчик в main
    table, _ = regret_lab.compare_policies(
        request.arms, request.policies, request.horizon, range(request.seeds), request.warmup
    )
    # NaN (нет оценки) → None
    rows = table.astype(object).where(table.notna(), None).to_dict("records")
    return SimulateResponse(summary=[PolicySummary(**row) for row in rows])


@router.get("/verify")
def verify_endpoint() -> Dict[str, Any]:
    """Норма суб-гауссовой величины для σ = 1, 2 и квантили χ²₂."""
    return {
        "subgaussian_norm": [
            {
                "sigma": sigma,
                "value": regret_lab.verify_subgaussian_norm(sigma),
                "expected": math.sqrt(8.0 / 3.0) * sigma,
            }
            for sigma in (1.0, 2.0)
        ],
        "chi2_df2": [
            {
                "alpha": alpha,
                "value": regret_lab.verify_chi2_df2(alpha),
                "expected": -2.0 * math.log(alpha),
            }
            for alpha in (0.5, 0.05, math.exp(-2.0))
        ],
    }
