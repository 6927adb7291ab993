# !/usr/bin/env python
from dotenv import load_dotenv

# Load environment variables before the settings are read
load_dotenv(".env")


from fastapi import FastAPI  # noqa: E402
from loguru import logger  # noqa: E402

from src.tentwave.api import router as api_router  # noqa: E402
from src.tentwave.config import config_service  # noqa: E402
from src.tentwave.logging import setup_logger  # noqa: E402
from src.tentwave.middleware import RequestTimer  # noqa: E402


def get_application() -> FastAPI:
    """
    Create the FastAPI app.

    Returns:

    app: object
        fastapi app exposing health, stability and single tent endpoints
    -------
    """
    application = FastAPI(
        title="Tentwave API",
        description="Stateless evaluation of tent causality, local tent solves and stability sweeps",
        version=config_service.version,
        docs_url="/docs",
        redoc_url="/redoc",
        openapi_url="/openapi.json",
        openapi_tags=[
            {"name": "health", "description": "Health check endpoints"},
            {"name": "stability", "description": "Von Neumann analysis of the uniform grid scheme"},
            {"name": "tents", "description": "Causality checks and local solves of single tents"},
        ],
    )

    application.state = config_service.get_api_model()
    application.middleware("http")(RequestTimer())
    application.include_router(api_router.core)

    logger.info(f"API running in {application.state.env} mode")
    return application


setup_logger(config_service.env, config_service.log_json)
app = get_application()
