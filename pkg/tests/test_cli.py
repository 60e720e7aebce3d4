"""
Unit tests for the command-line interface and solver config files
"""

import io
import tempfile
import shutil
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest.mock import patch
import sys
import os

# Add the parent directory to the path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.linalg import Matrix
from src.shared.config_loader import load_solver_config
from src.shared.errors import ConfigurationError, TransportError
from src.main import main
from src.solver.cli import config_from_args, parse_args, run_command
from src.transport import Backend


def run_cli(*argv):
    """Run one command; returns (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = run_command(parse_args(list(argv)))
    return code, out.getvalue(), err.getvalue()


class TestParser(unittest.TestCase):
    """Argument parsing"""

    def test_usage_error_exits_with_one(self):
        for argv in (["solve", "--iters", "many"], ["frobnicate"], [], ["solve", "--dims", "a,b"]):
            with self.subTest(argv=argv):
                with redirect_stderr(io.StringIO()):
                    with self.assertRaises(SystemExit) as ctx:
                        parse_args(argv)
                self.assertEqual(ctx.exception.code, 1)

    def test_solve_flags(self):
        args = parse_args([
            "solve", "--dims", "4,6,8", "--iters", "5", "--ranks", "2",
            "--backend", "tcp", "--coordinator", "127.0.0.1:9000", "--rank", "1",
            "--listen", "9001", "--listen-host", "10.0.0.5", "--seed", "7", "--tol", "1e-8",
            "--checkpoint-every", "2",
        ])
        config = config_from_args(args)
        self.assertEqual(config.dims, (4, 6, 8))
        self.assertEqual(config.iterations, 5)
        self.assertEqual(config.nranks, 2)
        self.assertIs(config.backend, Backend.TCP)
        self.assertEqual(config.coordinator, "127.0.0.1:9000")
        self.assertEqual(config.rank, 1)
        self.assertEqual(config.listen_port, 9001)
        self.assertEqual(config.listen_host, "10.0.0.5")
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.tolerance, 1e-8)
        self.assertEqual(config.checkpoint_every, 2)

    def test_defaults(self):
        config = config_from_args(parse_args(["solve"]))
        self.assertEqual(config.dims, (10, 10, 10))
        self.assertEqual(config.iterations, 1000)
        self.assertEqual(config.nranks, 1)
        self.assertIs(config.backend, Backend.INPROC)
        self.assertIsNone(config.tolerance)
        self.assertEqual(config.amplitude, Matrix.from_rows([[1, 1j], [3, 1]]))

    def test_verbose_after_subcommand(self):
        self.assertTrue(parse_args(["solve", "--verbose"]).verbose)
        self.assertTrue(parse_args(["--verbose", "inspect", "x"]).verbose)
        self.assertFalse(parse_args(["inspect", "x"]).verbose)


class TestSolveCommand(unittest.TestCase):
    """solve output and exit codes"""

    def setUp(self):
        """Set up test fixtures"""
        self.temp_dir = Path(tempfile.mkdtemp())
        self.out = self.temp_dir / "phi.lfld"

    def tearDown(self):
        """Clean up test fixtures"""
        if self.temp_dir.exists():
            shutil.rmtree(self.temp_dir)

    def test_solve_prints_checkpoints(self):
        code, out, _ = run_cli(
            "solve", "--dims", "4,5,4", "--iters", "20", "--ranks", "2",
            "--checkpoint-every", "10", "--out", str(self.out),
        )
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(len(lines), 4)
        self.assertTrue(lines[0].startswith("iter=0 residual="))
        self.assertTrue(lines[1].startswith("iter=10 residual="))
        self.assertTrue(lines[2].startswith("iter=20 residual="))
        self.assertTrue(lines[3].startswith("max_error="))
        self.assertGreater(float(lines[0].split("residual=")[1]), 0.0)
        self.assertTrue(self.out.exists())

    def test_solve_zero_iterations(self):
        code, out, _ = run_cli("solve", "--iters", "0", "--out", str(self.out))
        self.assertEqual(code, 0)
        first = out.splitlines()[0]
        self.assertAlmostEqual(float(first.split("residual=")[1]), 2.8531695488854605, places=12)

    def test_configuration_errors_exit_with_one(self):
        for argv in (
            ["solve", "--dims", "10,10", "--out", str(self.out)],
            ["solve", "--iters", "-3", "--out", str(self.out)],
            ["solve", "--ranks", "0", "--out", str(self.out)],
            ["solve", "--backend", "tcp", "--ranks", "2", "--out", str(self.out)],
        ):
            with self.subTest(argv=argv):
                code, _, err = run_cli(*argv)
                self.assertEqual(code, 1)
                self.assertIn("Error", err)

    def test_transport_failure_exits_with_two(self):
        with patch("src.solver.cli.run_poisson", side_effect=TransportError("peer 1 vanished")):
            code, _, err = run_cli("solve", "--out", str(self.out))
        self.assertEqual(code, 2)
        self.assertIn("peer 1 vanished", err)

    def test_unwritable_output_exits_with_three(self):
        blocker = self.temp_dir / "blocker"
        blocker.write_text("not a directory")
        code, _, _ = run_cli("solve", "--dims", "3,3,3", "--iters", "1", "--out", str(blocker / "phi.lfld"))
        self.assertEqual(code, 3)


class TestInspectCommand(unittest.TestCase):
    """inspect output"""

    def setUp(self):
        """Set up test fixtures"""
        self.temp_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        """Clean up test fixtures"""
        if self.temp_dir.exists():
            shutil.rmtree(self.temp_dir)

    def test_inspect_saved_field(self):
        path = self.temp_dir / "phi.lfld"
        code, _, _ = run_cli("solve", "--dims", "4,6,2", "--iters", "3", "--out", str(path))
        self.assertEqual(code, 0)
        code, out, _ = run_cli("inspect", str(path))
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines(), [
            "magic=LFLD version=1",
            "ndim=3 dims=4,6,2 elem=64B sites=48",
        ])

    def test_inspect_bad_file(self):
        path = self.temp_dir / "junk.lfld"
        path.write_bytes(b"definitely not a field file")
        code, _, err = run_cli("inspect", str(path))
        self.assertEqual(code, 3)
        self.assertIn("Field file error", err)

    def test_inspect_missing_file(self):
        code, _, _ = run_cli("inspect", str(self.temp_dir / "absent.lfld"))
        self.assertEqual(code, 3)


class TestAlgebraCommand(unittest.TestCase):
    """algebra output"""

    def test_algebra_output(self):
        code, out, _ = run_cli("algebra", "--seed", "3", "--n", "3")
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(len(lines), 4)
        self.assertTrue(lines[0].startswith("A = Matrix("))
        self.assertTrue(lines[1].startswith("det(A) = "))
        det_value = complex(lines[1].split(" = ")[1])
        self.assertAlmostEqual(abs(det_value - 1), 0.0, places=12)
        self.assertLess(float(lines[2].split(" = ")[1]), 1e-12)
        self.assertTrue(lines[3].startswith("B = Matrix("))

    def test_algebra_is_reproducible(self):
        self.assertEqual(run_cli("algebra", "--seed", "11")[1], run_cli("algebra", "--seed", "11")[1])
        self.assertNotEqual(run_cli("algebra", "--seed", "11")[1], run_cli("algebra", "--seed", "12")[1])

    def test_algebra_rejects_empty_matrix(self):
        self.assertEqual(run_cli("algebra", "--n", "0")[0], 1)


class TestMain(unittest.TestCase):
    """Entry point"""

    @patch("src.main.initialize_logging")
    def test_main_dispatches(self, mock_logging):
        with redirect_stdout(io.StringIO()) as out:
            code = main(["--verbose", "algebra", "--n", "2"])
        self.assertEqual(code, 0)
        mock_logging.assert_called_once_with(verbose=True)
        self.assertIn("B = Matrix(", out.getvalue())


class TestSolverConfigFile(unittest.TestCase):
    """YAML config files for solve"""

    def setUp(self):
        """Set up test fixtures"""
        self.temp_dir = Path(tempfile.mkdtemp())
        self.path = self.temp_dir / "solver.yml"

    def tearDown(self):
        """Clean up test fixtures"""
        if self.temp_dir.exists():
            shutil.rmtree(self.temp_dir)

    def test_load_values(self):
        self.path.write_text(
            "dims: [4, 5, 6]\n"
            "iterations: 30\n"
            "tol: 1e-9\n"
            "amplitude:\n"
            "  - [2, \"1j\"]\n"
            "  - [0, \"1-2j\"]\n"
            "coordinator: null\n"
        )
        values = load_solver_config(self.path)
        self.assertEqual(values["dims"], [4, 5, 6])
        self.assertEqual(values["iterations"], 30)
        self.assertEqual(values["tol"], 1e-9)
        self.assertEqual(values["amplitude"], [[2, 1j], [0, 1 - 2j]])
        self.assertNotIn("coordinator", values)

    def test_dims_as_string(self):
        self.path.write_text("dims: \"3,4,5\"\n")
        self.assertEqual(load_solver_config(self.path)["dims"], [3, 4, 5])

    def test_empty_file(self):
        self.path.write_text("")
        self.assertEqual(load_solver_config(self.path), {})

    def test_rejected_files(self):
        for text in (
            "dims: [4, 4, 4]\nwarp_speed: 9\n",
            "- just\n- a\n- list\n",
            "dims: [4, 4\n",
            "iterations: lots\n",
            "amplitude: [[1, 2, 3]]\n",
            "backend: mpi\n",
        ):
            with self.subTest(text=text):
                self.path.write_text(text)
                with self.assertRaises(ConfigurationError):
                    load_solver_config(self.path)

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            load_solver_config(self.temp_dir / "absent.yml")

    def test_flags_override_file(self):
        self.path.write_text("dims: [4, 4, 4]\niterations: 30\nseed: 5\n")
        config = config_from_args(parse_args(["solve", "--config", str(self.path), "--iters", "7"]))
        self.assertEqual(config.dims, (4, 4, 4))
        self.assertEqual(config.iterations, 7)
        self.assertEqual(config.seed, 5)

    def test_listen_host_from_file(self):
        self.path.write_text("backend: tcp\nlisten_host: 192.168.1.20\n")
        config = config_from_args(parse_args(["solve", "--config", str(self.path)]))
        self.assertEqual(config.listen_host, "192.168.1.20")
        self.assertEqual(config_from_args(parse_args(["solve"])).listen_host, "127.0.0.1")

    def test_amplitude_from_file(self):
        self.path.write_text("amplitude: [[1, 0], [0, 1]]\n")
        config = config_from_args(parse_args(["solve", "--config", str(self.path)]))
        self.assertEqual(config.amplitude, Matrix.from_rows([[1, 0], [0, 1]]))

    def test_bad_config_exits_with_one(self):
        self.path.write_text("bogus: 1\n")
        code, _, _ = run_cli("solve", "--config", str(self.path))
        self.assertEqual(code, 1)

    def test_unknown_backend_exits_with_one(self):
        self.path.write_text("backend: mpi\n")
        code, _, err = run_cli("solve", "--config", str(self.path))
        self.assertEqual(code, 1)
        self.assertIn("mpi", err)


if __name__ == '__main__':
    unittest.main()
