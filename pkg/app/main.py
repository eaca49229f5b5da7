"""
Точка входа FastAPI приложения: health, роутеры поиска и лаборатории бандитов.
"""
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.config import get_settings
from app.errors import ContractViolation
from app.logger import get_logger, setup_logging
from app.models.search import Algorithm
from app.routers import bandits, search
from app.services.heuristics import HeuristicName

settings = get_settings()
setup_logging(settings.log_level)
logger = get_logger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info(
        f"{settings.app_name} v{settings.app_version}: budget={settings.default_budget}, "
        f"deadline={settings.deadline_s}s, check_backprop={settings.check_backprop}"
    )
    yield
    logger.info("Сервис остановлен")


app = FastAPI(
    title=settings.app_name,
    version=settings.app_version,
    description="Поиск MCTS/GBFS для классического планирования и лаборатория бандитов",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)

app.include_router(search.router, prefix="/api/v1", tags=["Search"])
app.include_router(bandits.router, prefix="/api/v1", tags=["Bandits"])


@app.exception_handler(ContractViolation)
async def contract_violation_handler(request: Request, exc: ContractViolation):
    # Нарушенные предусловия, не пойманные в роутерах
    logger.warning(f"{request.url.path}: {exc}")
    return JSONResponse(status_code=status.HTTP_400_BAD_REQUEST, content={"detail": str(exc)})


@app.get("/", tags=["Health"])
async def root():
    """Имя сервиса и доступные алгоритмы и эвристики."""
    return {
        "status": "ok",
        "service": settings.app_name,
        "version": settings.app_version,
        "algorithms": [a.value for a in Algorithm],
        "heuristics": [h.value for h in HeuristicName],
    }


@app.get("/health", tags=["Health"])
async def health_check():
    return {
        "status": "healthy",
        "version": settings.app_version,
        "default_budget": settings.default_budget,
    }
