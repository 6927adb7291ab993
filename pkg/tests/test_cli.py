import json
from unittest.mock import patch

import numpy as np
import pytest

from src.tentwave.cli import build_parser, main
from src.tentwave.errors import SingularSystemError
from src.tentwave.utils.constants import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_FAILURE, EXIT_OK


@pytest.fixture
def pulse_config(tmp_path):
    """Short left-moving pulse run on a coarse uniform stencil mesh"""
    document = {
        "problem": {"final_time": 0.25, "pulse": {"kind": "left_moving"}},
        "mesh": {"kind": "uniform_stencil", "h": 0.03125, "k_ratio": 0.9},
        "output": {"prefix": "pulse", "directory": str(tmp_path / "out"), "snapshots": [0.0, 0.25]},
    }
    path = tmp_path / "pulse.json"
    path.write_text(json.dumps(document))
    return path, document


@pytest.fixture
def pitched_config(tmp_path):
    """Interface pulse on a pitched two-region mesh with reflecting ends"""
    document = {
        "problem": {
            "material": {"c": 1.0, "kappa1": [4.0, 0.5], "kappa2": [1.0, 0.5]},
            "z0": 0.0,
            "z1": "matched",
            "pulse": {"kind": "interface", "center": 0.25, "sharpness": 50.0},
            "final_time": 0.2,
        },
        "mesh": {
            "segments": [
                {"start": 0.0, "end": 0.5, "h": 0.0625, "region": 0},
                {"start": 0.5, "end": 1.0, "h": 0.0625, "region": 1},
            ],
            "slab_height": 0.05,
            "margin": 0.9,
            "seed": 4,
        },
        "output": {"prefix": "iface", "directory": str(tmp_path / "out")},
    }
    path = tmp_path / "iface.json"
    path.write_text(json.dumps(document))
    return path


def _table(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


class TestParser:
    """Test the command line surface"""

    def test_subcommands(self):
        """Test every subcommand parses with its handler"""
        parser = build_parser()
        for argv in (
            ["mesh", "--config", "a.json"],
            ["solve", "--config", "a.json", "--snapshots", "0,0.5"],
            ["ctcs", "--config", "a.json"],
            ["stability", "--ac", "0.9"],
            ["verify", "--suite", "ibp"],
            ["converge", "--scheme", "ctcs", "--h", "0.1,0.05"],
            ["serve"],
        ):
            assert callable(parser.parse_args(argv).handler)

    def test_float_lists(self):
        """Test comma separated times become floats"""
        args = build_parser().parse_args(["solve", "--config", "a.json", "--snapshots", "0, 0.25,1"])
        assert args.snapshots == [0.0, 0.25, 1.0]

    def test_unknown_suite(self):
        """Test argparse rejects an unknown verification suite"""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["verify", "--suite", "all"])


class TestSolveCommand:
    """Test the solve and ctcs subcommands"""

    def test_solve_writes_outputs(self, test_config, pulse_config, tmp_path):
        """Test snapshots, error history and metadata are written"""
        path, document = pulse_config
        assert main(["solve", "--config", str(path)]) == EXIT_OK

        out = tmp_path / "out"
        initial = _table(out / "pulse_snap_0.csv")
        assert initial.shape[1] == 3
        assert initial[:, 1].max() == pytest.approx(1.0, abs=1e-3)
        assert (out / "pulse_snap_0.25.csv").is_file()

        errors = _table(out / "pulse_error.csv")
        assert errors[0, 0] == 0.0
        assert errors[-1, 0] == pytest.approx(0.25)

        metadata = json.loads((out / "pulse_metadata.json").read_text())
        assert metadata["command"] == "solve"
        assert metadata["config"] == document
        assert metadata["final_error"] == pytest.approx(errors[-1, 1])

    def test_command_line_overrides(self, test_config, pulse_config, tmp_path):
        """Test --snapshots, --out-prefix and --nodal override the file while metadata keeps the original"""
        path, document = pulse_config
        argv = ["solve", "--config", str(path), "--snapshots", "0.125", "--out-prefix", "alt", "--nodal"]
        assert main(argv) == EXIT_OK

        out = tmp_path / "out"
        assert (out / "alt_snap_0.125.csv").is_file()
        assert not (out / "alt_snap_0.csv").exists()
        nodal = json.loads((out / "alt_nodal.json").read_text())
        assert set(nodal["nodes"][0]) == {"x", "t", "u1", "u2"}
        metadata = json.loads((out / "alt_metadata.json").read_text())
        assert metadata["config"]["output"]["snapshots"] == document["output"]["snapshots"]

    def test_pitched_interface_run(self, test_config, pitched_config, tmp_path):
        """Test a pitched mesh run without an exact solution writes no error file"""
        assert main(["solve", "--config", str(pitched_config), "--snapshots", "0.2"]) == EXIT_OK
        out = tmp_path / "out"
        assert np.all(np.isfinite(_table(out / "iface_snap_0.2.csv")))
        assert not (out / "iface_error.csv").exists()

    def test_ctcs(self, test_config, pulse_config, tmp_path):
        """Test the CTCS subcommand writes its error history"""
        path, _ = pulse_config
        assert main(["ctcs", "--config", str(path), "--out-prefix", "ref"]) == EXIT_OK
        errors = _table(tmp_path / "out" / "ref_error.csv")
        assert errors[-1, 0] == pytest.approx(0.25)
        metadata = json.loads((tmp_path / "out" / "ref_metadata.json").read_text())
        assert metadata["bootstrap"] == "exact"

    def test_mesh(self, test_config, pitched_config, tmp_path):
        """Test the mesh subcommand exports tents and a summary"""
        assert main(["mesh", "--config", str(pitched_config)]) == EXIT_OK
        mesh = json.loads((tmp_path / "out" / "iface_mesh.json").read_text())
        metadata = json.loads((tmp_path / "out" / "iface_metadata.json").read_text())
        assert len(mesh["tents"]) == metadata["summary"]["tents"]
        assert metadata["seed"] == 4


class TestExitCodes:
    """Test failures map to exit codes and leave no partial output"""

    def test_missing_config(self, test_config, tmp_path):
        """Test a missing file exits with the configuration code"""
        assert main(["solve", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG_ERROR

    def test_invalid_config(self, test_config, pulse_config, tmp_path):
        """Test a snapshot past the final time exits with the configuration code"""
        path, _ = pulse_config
        assert main(["solve", "--config", str(path), "--snapshots", "0.5"]) == EXIT_CONFIG_ERROR
        assert not (tmp_path / "out").exists()

    def test_numerical_failure(self, test_config, pulse_config, tmp_path):
        """Test a solver failure exits with the numerical code and writes nothing"""
        path, _ = pulse_config
        error = SingularSystemError("singular tent system", condition=1e16, center=3)
        with patch("src.tentwave.services.run_service.march", side_effect=error):
            assert main(["solve", "--config", str(path)]) == EXIT_NUMERICAL_FAILURE
        assert not (tmp_path / "out").exists()


class TestAnalysisCommands:
    """Test stability, verify and converge"""

    def test_stability(self, test_config, tmp_path):
        """Test the sweep table and metadata are written"""
        argv = ["stability", "--ac", "0.9", "--thetas", "16", "--blowup-steps", "20", "--out-dir", str(tmp_path)]
        assert main(argv) == EXIT_OK
        table = _table(tmp_path / "stability_stability.csv")
        assert table.shape == (16, 3)
        metadata = json.loads((tmp_path / "stability_metadata.json").read_text())
        assert metadata["summary"]["verdict"] == "stable"
        assert metadata["blowup"]["steps"] == 20

    def test_stability_bad_thetas(self, test_config, tmp_path):
        """Test too few frequencies exit with the configuration code"""
        assert main(["stability", "--ac", "0.9", "--thetas", "4", "--out-dir", str(tmp_path)]) == EXIT_CONFIG_ERROR

    def test_verify_ibp(self, test_config, tmp_path):
        """Test the integration by parts suite reports small residuals"""
        out = tmp_path / "ibp.json"
        assert main(["verify", "--suite", "ibp", "--out", str(out)]) == EXIT_OK
        report = json.loads(out.read_text())
        assert report["suite"] == "ibp"
        assert max(report["report"]["max_residual"].values()) <= 1e-10

    def test_verify_traces(self, test_config, tmp_path):
        """Test the trace suite reports the non-closed sum and the x^-1/2 growth"""
        out = tmp_path / "traces.json"
        assert main(["verify", "--suite", "traces", "--out", str(out)]) == EXIT_OK
        report = json.loads(out.read_text())["report"]
        assert report["inverse_sqrt"]["growth_rate"] == pytest.approx(1.0, abs=1e-3)
        assert len(report["nonclosed"]) == 6

    def test_converge(self, test_config, tmp_path):
        """Test a two level study writes its table"""
        argv = ["converge", "--scheme", "ctcs", "--h", "0.0625,0.03125", "--t-eval", "0.25", "--out-dir", str(tmp_path)]
        assert main(argv) == EXIT_OK
        table = _table(tmp_path / "run_convergence_ctcs.csv")
        assert table.shape == (2, 3)
        assert np.isnan(table[0, 2])
        assert table[1, 1] < table[0, 1]
