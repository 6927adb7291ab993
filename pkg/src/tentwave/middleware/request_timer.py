import time
import uuid

from fastapi import Request
from loguru import logger

from src.tentwave.context import ctx_request_id


class RequestTimer:
    async def __call__(self, request: Request, call_next):
        token = ctx_request_id.set(request.headers.get("X-Request-ID") or uuid.uuid4().hex[:12])
        try:
            start_time = time.perf_counter()
            response = await call_next(request)
            process_time = time.perf_counter() - start_time
            response.headers["X-Process-Time"] = str(process_time)
            logger.info(f"{request.method} {request.url.path} took {process_time:.4f} seconds")
            return response
        finally:
            ctx_request_id.reset(token)
