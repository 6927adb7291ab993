from contextvars import ContextVar

ctx_run_id = ContextVar("run_id", default="-")
ctx_command = ContextVar("command", default="-")
ctx_request_id = ContextVar("request_id", default="-")
