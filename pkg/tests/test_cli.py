import csv
import io
import json
import logging
import os
import sys
import tempfile
import unittest
import xml.etree.ElementTree as ET
from contextlib import redirect_stderr, redirect_stdout
from unittest import mock

# Add src to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.cli import main
from src.cli.commands import EXIT_BAD_INPUT, EXIT_OK, EXIT_VALIDATION_FAILED, parse_n_values
from src.core import validation
from src.core.errors import ConfigError

SVG_POLYLINE = "{http://www.w3.org/2000/svg}polyline"


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def read_rows(path):
    with open(path, "r", newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


class CLITestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def write_config(self, **values) -> str:
        data = dict(N=6, K=3, d=3, T=10, algorithm="ucba-lcbp", replications=1, base_seed=42)
        data.update(values)
        path = os.path.join(self.tmp, "config.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump({k: v for k, v in data.items() if v is not None}, f)
        return path


class TestRunCommand(CLITestCase):
    def test_run_writes_trace_and_manifest(self):
        config = self.write_config()
        out = os.path.join(self.tmp, "out")
        code, stdout, _ = run_cli(["run", "--config", config, "--out", out, "--quiet", "--sequential"])
        self.assertEqual(code, EXIT_OK)
        self.assertIn("ucba-lcbp", stdout)

        rows = read_rows(os.path.join(out, "trace.csv"))
        self.assertEqual(len(rows), 10)
        self.assertEqual([int(r["t"]) for r in rows], list(range(1, 11)))

        with open(os.path.join(out, "manifest.json"), "r", encoding="utf-8") as f:
            manifest = json.load(f)
        self.assertEqual(manifest["command"], "run")
        self.assertEqual(manifest["config"]["N"], 6)
        self.assertEqual(len(manifest["seeds"]["replications"]), 1)
        self.assertTrue(manifest["version"])

    def test_rerun_is_byte_identical(self):
        config = self.write_config(algorithm="tsa-lcbp", replications=2)
        first, second = os.path.join(self.tmp, "a"), os.path.join(self.tmp, "b")
        run_cli(["run", "--config", config, "--out", first, "--quiet"])
        run_cli(["run", "--config", config, "--out", second, "--quiet", "--sequential"])
        with open(os.path.join(first, "trace.csv"), "rb") as a, open(os.path.join(second, "trace.csv"), "rb") as b:
            self.assertEqual(a.read(), b.read())

    def test_missing_key_exits_with_bad_input(self):
        config = self.write_config(K=None)
        code, _, stderr = run_cli(["run", "--config", config, "--out", os.path.join(self.tmp, "out"), "--quiet"])
        self.assertEqual(code, EXIT_BAD_INPUT)
        self.assertIn("[K]", stderr)

    def test_missing_config_file(self):
        code, _, stderr = run_cli(["run", "--config", os.path.join(self.tmp, "nope.json"), "--out", self.tmp, "--quiet"])
        self.assertEqual(code, EXIT_BAD_INPUT)
        self.assertIn("config", stderr)

    def test_run_rejects_several_algorithms(self):
        config = self.write_config(algorithm="ucba-lcbp,random")
        code, _, stderr = run_cli(["run", "--config", config, "--out", self.tmp, "--quiet"])
        self.assertEqual(code, EXIT_BAD_INPUT)
        self.assertIn("algorithm", stderr)

    def test_unwritable_output_directory_exits_with_bad_input(self):
        config = self.write_config()
        blocker = os.path.join(self.tmp, "file.txt")
        with open(blocker, "w", encoding="utf-8") as f:
            f.write("not a directory\n")
        code, _, stderr = run_cli(["run", "--config", config, "--out", os.path.join(blocker, "out"), "--quiet"])
        self.assertEqual(code, EXIT_BAD_INPUT)
        self.assertNotIn("Traceback", stderr)
        self.assertIn("error", stderr)


class TestSweepAndPlot(CLITestCase):
    def test_sweep_outputs(self):
        config = self.write_config(algorithm="ucba-lcbp,random", T=12)
        out = os.path.join(self.tmp, "sweep")
        code, _, _ = run_cli(["sweep", "--config", config, "--N", "6,8", "--out", out, "--quiet", "--sequential"])
        self.assertEqual(code, EXIT_OK)

        rows = read_rows(os.path.join(out, "sweep.csv"))
        self.assertEqual([(int(r["N"]), r["algorithm"]) for r in rows],
                         [(6, "ucba-lcbp"), (6, "random"), (8, "ucba-lcbp"), (8, "random")])
        for row in rows:
            trace = read_rows(os.path.join(out, f"N{row['N']}", row["algorithm"], "trace.csv"))
            self.assertEqual(len(trace), 12)
            self.assertEqual(float(row["final_regret_mean"]), float(trace[-1]["regret_mean"]))

        root = ET.parse(os.path.join(out, "regret.svg")).getroot()
        self.assertEqual(len(list(root.iter(SVG_POLYLINE))), 4)

        with open(os.path.join(out, "manifest.json"), "r", encoding="utf-8") as f:
            manifest = json.load(f)
        self.assertEqual(manifest["n_values"], [6, 8])
        for path in manifest["artifacts"].values():
            self.assertTrue(os.path.exists(path))

    def test_sweep_rejects_bad_n_list(self):
        config = self.write_config()
        code, _, stderr = run_cli(["sweep", "--config", config, "--N", "6,x", "--out", self.tmp, "--quiet"])
        self.assertEqual(code, EXIT_BAD_INPUT)
        self.assertIn("[N]", stderr)

    def test_plot_from_run_directories(self):
        dirs = []
        for algorithm in ("ucba-lcbp", "random"):
            out = os.path.join(self.tmp, algorithm)
            run_cli(["run", "--config", self.write_config(algorithm=algorithm), "--out", out, "--quiet"])
            dirs.append(out)
        chart = os.path.join(self.tmp, "chart.svg")
        code, _, _ = run_cli(["plot", "--trace", *dirs, "--out", chart])
        self.assertEqual(code, EXIT_OK)
        root = ET.parse(chart).getroot()
        self.assertEqual(len(list(root.iter(SVG_POLYLINE))), 2)

    def test_plot_missing_trace(self):
        code, _, stderr = run_cli(["plot", "--trace", os.path.join(self.tmp, "none"), "--out", os.path.join(self.tmp, "c.svg")])
        self.assertEqual(code, EXIT_BAD_INPUT)
        self.assertIn("not found", stderr)


class TestValidateCommand(unittest.TestCase):
    def _subset(self, names):
        original = validation.build_checks

        def build(quick=False, fault=None):
            checks = original(quick, fault)
            return {name: checks[name] for name in names}

        return mock.patch("src.core.validation.build_checks", side_effect=build)

    def test_injected_gradient_fault_fails(self):
        with self._subset(("gradient", "hessian", "assortment")):
            code, stdout, stderr = run_cli(["validate", "--quick", "--inject-fault", "gradient", "--quiet"])
        self.assertEqual(code, EXIT_VALIDATION_FAILED)
        self.assertIn("gradient", stderr)
        self.assertIn("PASS", stdout)

    def test_clean_subset_passes(self):
        with self._subset(("gradient", "gram_psd")):
            code, stdout, _ = run_cli(["validate", "--quick", "--quiet"])
        self.assertEqual(code, EXIT_OK)
        self.assertNotIn("FAIL", stdout)


class TestLogLevelFlag(unittest.TestCase):
    def test_flag_overrides_root_level(self):
        root = logging.getLogger()
        previous = root.level
        try:
            with mock.patch("src.cli.commands.cmd_plot", return_value=EXIT_OK):
                code = main(["--log-level", "warning", "plot", "--trace", "x", "--out", "y.svg"])
            self.assertEqual(code, EXIT_OK)
            self.assertEqual(root.level, logging.WARNING)
        finally:
            root.setLevel(previous)


class TestParseNValues(unittest.TestCase):
    def test_parses_lists(self):
        self.assertEqual(parse_n_values("10,15, 20"), [10, 15, 20])
        self.assertEqual(parse_n_values("7"), [7])

    def test_rejects_bad_values(self):
        for text in ("", "a,b", "0,5", "-3"):
            with self.assertRaises(ConfigError):
                parse_n_values(text)


if __name__ == "__main__":
    unittest.main()
