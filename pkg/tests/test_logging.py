import json
import logging
from unittest.mock import MagicMock, patch

import pytest

from src.tentwave.context import ctx_command, ctx_run_id
from src.tentwave.logging import log_level_for, sink_serializer, tracking_filter
from src.tentwave.services.output_writer import OutputBundle, format_time, run_metadata
from src.tentwave.utils.logging_utils import LogContext, SolverLogger, log_operation


class TestLoggerSetup:
    """Test log levels and record enrichment"""

    @pytest.mark.parametrize(
        "env,level",
        [("prod", logging.ERROR), ("staging", logging.INFO), ("dev", logging.DEBUG), ("test", logging.DEBUG)],
    )
    def test_level_per_environment(self, env, level):
        """Test each environment maps to its log level"""
        assert log_level_for(env) == level

    def test_tracking_filter(self):
        """Test run id and command are attached to every record"""
        token_run, token_command = ctx_run_id.set("abc123"), ctx_command.set("solve")
        try:
            record = {}
            assert tracking_filter(record) is True
            assert record["run_id"] == "abc123"
            assert record["command"] == "solve"
            assert record["request_id"] == "-"
        finally:
            ctx_run_id.reset(token_run)
            ctx_command.reset(token_command)

    def test_json_sink_drops_non_plain_extras(self, capsys):
        """Test the JSON sink keeps scalar extras only"""
        level = MagicMock()
        level.name = "INFO"
        time = MagicMock()
        time.timestamp.return_value = 1.5
        message = MagicMock()
        message.record = {
            "level": level,
            "message": "Solved",
            "time": time,
            "run_id": "r",
            "command": "solve",
            "request_id": "-",
            "extra": {"tents": 12, "errors": [0.1, 0.2]},
        }
        sink_serializer(message)
        line = json.loads(capsys.readouterr().err)
        assert line["message"] == "Solved"
        assert line["extra"] == {"tents": 12}


class TestLoggingUtils:
    """Test timing helpers and domain log lines"""

    @patch("src.tentwave.utils.logging_utils.logger")
    def test_log_context_success(self, mock_logger):
        """Test LogContext logs start and completion with its context"""
        with LogContext("march", tents=10) as context:
            pass
        assert context.duration_ms >= 0.0
        assert mock_logger.info.call_count == 2
        assert mock_logger.info.call_args.kwargs == {"tents": 10}

    @patch("src.tentwave.utils.logging_utils.logger")
    def test_log_context_failure(self, mock_logger):
        """Test LogContext logs failures without swallowing them"""
        with pytest.raises(RuntimeError), LogContext("march"):
            raise RuntimeError("boom")
        assert "Failed march" in mock_logger.error.call_args.args[0]

    @patch("src.tentwave.utils.logging_utils.logger")
    def test_log_operation(self, mock_logger):
        """Test the decorator passes results and exceptions through"""

        @log_operation("double")
        def double(x):
            if x < 0:
                raise ValueError("negative")
            return 2 * x

        assert double(3) == 6
        assert mock_logger.debug.call_count == 2
        with pytest.raises(ValueError):
            double(-1)
        mock_logger.error.assert_called_once()

    @patch("src.tentwave.utils.logging_utils.logger")
    def test_stability_verdict_levels(self, mock_logger):
        """Test unstable verdicts are warnings"""
        SolverLogger.log_stability_verdict(0.9, "stable", 1.0, 2.0)
        SolverLogger.log_stability_verdict(1.05, "unstable", 1.3, float("inf"))
        mock_logger.info.assert_called_once()
        mock_logger.warning.assert_called_once()

    @patch("src.tentwave.utils.logging_utils.logger")
    def test_mesh_summary(self, mock_logger):
        """Test the mesh summary line names tents and levels"""
        SolverLogger.log_mesh_summary({"tents": 40, "levels": 8, "slabs": 2})
        args, kwargs = mock_logger.info.call_args
        assert "40 tents in 8 levels" in args[0]
        assert kwargs == {"slabs": 2}


class TestOutputBundle:
    """Test deferred output files"""

    def test_nothing_written_until_write(self, tmp_path):
        """Test files exist only after write()"""
        bundle = OutputBundle("run", tmp_path / "out")
        name = bundle.add_csv("error.csv", ["t", "l2err"], [[0.0, 0.1], [0.5, None]])
        assert name == "run_error.csv"
        assert not (tmp_path / "out").exists()
        paths = bundle.write()
        assert [p.name for p in paths] == ["run_error.csv"]
        lines = paths[0].read_text().splitlines()
        assert lines[0] == "t,l2err"
        assert lines[2].endswith("nan")

    def test_format_time(self):
        """Test snapshot times print without trailing zeros"""
        assert format_time(0.25) == "0.25"
        assert format_time(1.0) == "1"

    def test_metadata_uses_run_id(self):
        """Test metadata carries the active run id, the seed and the raw config"""
        token = ctx_run_id.set("run42")
        try:
            metadata = run_metadata("solve", {"scheme": "tp"}, 3, slope=2.0)
        finally:
            ctx_run_id.reset(token)
        assert metadata["run_id"] == "run42"
        assert metadata["seed"] == 3
        assert metadata["config"] == {"scheme": "tp"}
        assert metadata["slope"] == 2.0
