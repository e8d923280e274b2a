#!/usr/bin/env python3
"""End-to-end tests for the fapchan command line."""

import io
import json
import math
import sys
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from typing import List, Tuple

# Add the fapchan directory to the Python path
sys.path.insert(0, str(Path(__file__).parent.parent))

from cli import EXIT_OK, EXIT_USAGE, main, parse_range

TEST_DATA = Path(__file__).parent / "test_data"
CHANNEL_2D = ["--dim", "2", "--drift", "0,0", "--sigma2", "1", "--distance", "1"]


def run_cli(argv: List[str]) -> Tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


class TestDensityCommand(unittest.TestCase):
    def test_xi_range_csv(self) -> None:
        code, out, _ = run_cli(["density", *CHANNEL_2D, "--xi-range=-5:5:0.1"])
        lines = out.splitlines()
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(lines[0], "xi,density")
        self.assertEqual(len(lines), 102)
        xi, density = (float(v) for v in lines[51].split(","))
        self.assertAlmostEqual(xi, 0.0, places=12)
        self.assertAlmostEqual(density, 0.3183099, places=7)

    def test_three_dimensional_point(self) -> None:
        code, out, _ = run_cli(["density", "--dim", "3", "--drift", "0,0,0", "--sigma2", "1", "--distance", "1", "--point", "0,0"])
        lines = out.splitlines()
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(lines[0], "xi,eta,density")
        self.assertAlmostEqual(float(lines[1].split(",")[-1]), 0.1591549, places=7)

    def test_json_output_from_config_file(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / "density.json"
            argv = ["density", "--config", str(TEST_DATA / "params_2d_oblique.json"), "--point", "0", "--point", "1.5"]
            code, _, _ = run_cli(argv + ["--format", "json", "--output", str(target)])
            payload = json.loads(target.read_text())
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(payload["params"]["drift"], [0.5, -1.0])
        self.assertEqual([p["offset"] for p in payload["points"]], [[0.0], [1.5]])
        self.assertTrue(all(p["density"] > 0 for p in payload["points"]))

    def test_flags_override_config(self) -> None:
        argv = ["density", "--config", str(TEST_DATA / "params_2d_oblique.json"), "--drift", "0,0", "--point", "0"]
        code, out, _ = run_cli(argv)
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(float(out.splitlines()[1].split(",")[1]), 1 / math.pi, places=12)

    def test_usage_errors(self) -> None:
        cases = [
            ["density", "--dim", "3", "--drift", "0,0", "--sigma2", "1", "--distance", "1", "--point", "0,0"],
            ["density", *CHANNEL_2D],
            ["density", *CHANNEL_2D, "--xi-range", "5:-5:0.1"],
            ["density", *CHANNEL_2D, "--point", "0,1"],
            ["density", "--dim", "2", "--drift", "0,0", "--sigma2", "-1", "--distance", "1", "--point", "0"],
        ]
        for argv in cases:
            with self.subTest(argv=argv):
                code, out, err = run_cli(argv)
                self.assertEqual(code, EXIT_USAGE)
                self.assertEqual(out, "")
                self.assertIn("fapchan density", err)

    def test_parse_range_includes_both_ends(self) -> None:
        values = parse_range("-1:1:0.5")
        self.assertEqual(values, [-1.0, -0.5, 0.0, 0.5, 1.0])


class TestSampleCommand(unittest.TestCase):
    ARGV = ["sample", "--dim", "2", "--drift", "0,-1", "--sigma2", "1", "--distance", "1"]
    RUN = ["-n", "200", "--dt", "0.01", "--t-max", "10", "--seed", "3", "--workers", "1"]

    def test_deterministic_output(self) -> None:
        code, first, err = run_cli(self.ARGV + self.RUN)
        _, second, _ = run_cli(self.ARGV + self.RUN)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(first, second)
        lines = first.splitlines()
        self.assertEqual(lines[0], "xi,tau,status")
        self.assertEqual(len(lines), 201)
        self.assertIn("absorbed_fraction=", err)
        self.assertIn("particles=200", err)

    def test_json_records(self) -> None:
        code, out, _ = run_cli(self.ARGV + self.RUN + ["--format", "json"])
        payload = json.loads(out)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(payload["records"]), 200)
        self.assertEqual(payload["config"]["seed"], 3)
        self.assertIn(payload["records"][0]["status"], ("absorbed", "censored"))

    def test_invalid_configuration(self) -> None:
        for extra in (["-n", "0"], ["--dt", "20", "--t-max", "10"]):
            with self.subTest(extra=extra):
                code, _, _ = run_cli(self.ARGV + extra)
                self.assertEqual(code, EXIT_USAGE)


class TestValidateCommand(unittest.TestCase):
    def test_bessel_suite(self) -> None:
        code, out, _ = run_cli(["validate", "--suite", "bessel"])
        payload = json.loads(out)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(payload["pass"])
        self.assertEqual(len(payload["reports"]), 2)

    def test_unknown_suite(self) -> None:
        with self.assertRaises(SystemExit) as ctx:
            run_cli(["validate", "--suite", "everything"])
        self.assertEqual(ctx.exception.code, EXIT_USAGE)

    def test_nonpositive_workers_is_a_usage_error(self) -> None:
        for workers in ("0", "-2"):
            with self.subTest(workers=workers):
                code, out, err = run_cli(["validate", "--suite", "bessel", f"--workers={workers}"])
                self.assertEqual(code, EXIT_USAGE)
                self.assertEqual(out, "")
                self.assertIn("--workers must be >= 1", err)


class TestBvpCommand(unittest.TestCase):
    ARGV = [
        "bvp",
        "--dim",
        "2",
        "--drift",
        "0,0",
        "--sigma2",
        "1",
        "--distance",
        "0.4",
        "--g-halfwidth",
        "0.4",
        "--half-width",
        "4",
        "--height",
        "2",
    ]

    def test_field_csv(self) -> None:
        code, out, _ = run_cli(self.ARGV + ["--spacing", "0.1", "--format", "csv"])
        lines = out.splitlines()
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(lines[0], "x1,x2,u")
        self.assertEqual(len(lines), 81 * 21 + 1)

    def test_report(self) -> None:
        argv = self.ARGV + ["--spacing", "0.05", "--far-field", "representation", "--rel-tolerance", "0.05"]
        code, out, _ = run_cli(argv)
        payload = json.loads(out)
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(payload["pass"])
        self.assertAlmostEqual(payload["reports"][0]["metrics"]["u_repr[0]"], 0.5, places=8)

    def test_grid_too_small(self) -> None:
        code, _, err = run_cli(self.ARGV[:-4] + ["--half-width", "2", "--height", "2", "--spacing", "0.1"])
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("half_width", err)


if __name__ == "__main__":
    unittest.main()
