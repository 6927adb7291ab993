from .request_timer import RequestTimer

__all__ = ["RequestTimer"]
