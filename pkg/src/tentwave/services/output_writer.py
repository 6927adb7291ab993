"""In-memory collection of run outputs, written to disk in one go once a run has succeeded"""

import io
import json
import uuid
from datetime import UTC, datetime
from pathlib import Path

import numpy as np
from loguru import logger

from src.tentwave import __version__
from src.tentwave.context import ctx_run_id


def format_time(t: float) -> str:
    """File name token for a snapshot time: 0.25 -> 0.25, 1.0 -> 1"""
    return f"{t:g}"


class OutputBundle:
    def __init__(self, prefix: str, directory: str | Path = "."):
        self.prefix = prefix
        self.directory = Path(directory)
        self.files: dict[str, str] = {}

    def name(self, suffix: str) -> str:
        return f"{self.prefix}_{suffix}"

    def add_csv(self, suffix: str, header: list[str], rows: list[list[float | None]]) -> str:
        table = np.array(
            [[np.nan if value is None else value for value in row] for row in rows], dtype=float
        ).reshape(-1, len(header))
        buffer = io.StringIO()
        np.savetxt(buffer, table, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
        name = self.name(suffix)
        self.files[name] = buffer.getvalue()
        return name

    def add_json(self, suffix: str, document: dict) -> str:
        name = self.name(suffix)
        self.files[name] = json.dumps(document, indent=2, default=_json_default)
        return name

    def write(self) -> list[Path]:
        self.directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name, content in self.files.items():
            path = self.directory / name
            path.write_text(content)
            written.append(path)
        logger.info(f"Wrote {len(written)} output files", directory=str(self.directory))
        return written


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def run_metadata(command: str, raw_config: dict | None, seed: int | None, run_id: str | None = None, **extra) -> dict:
    """Provenance block: the configuration exactly as given, the seed and the version"""
    if run_id is None:
        run_id = ctx_run_id.get() if ctx_run_id.get() != "-" else uuid.uuid4().hex[:12]
    return {
        "run_id": run_id,
        "command": command,
        "version": __version__,
        "created": datetime.now(UTC).isoformat(),
        "seed": seed,
        "config": raw_config,
        **extra,
    }
