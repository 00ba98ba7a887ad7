import json
import unittest
import sys
import os
import shutil
import tempfile
import xml.etree.ElementTree as ET
from types import SimpleNamespace

import numpy as np

# Add src to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.core.errors import InputError
from src.core.export import (
    ChartSeries,
    RunManifest,
    get_version,
    read_trace_csv,
    render_regret_chart,
    write_sweep_csv,
    write_trace_csv,
)
from src.core.export.tables import TRACE_COLUMNS, format_float


def fake_summary(T=5):
    t = np.arange(1, T + 1, dtype=float)
    return SimpleNamespace(
        regret_mean=0.1 * t,
        regret_std=np.zeros(T),
        oracle_rev_mean=np.full(T, 0.5),
        policy_rev_mean=np.full(T, 0.4),
        tau_mean=np.floor(t / 2),
        good_event_frac=np.full(T, np.nan),
    )


class TestTables(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_format_float_keeps_full_precision(self):
        self.assertEqual(float(format_float(0.1 + 0.2)), 0.1 + 0.2)
        self.assertEqual(format_float(2.0), "2")

    def test_trace_csv_reads_back(self):
        path = write_trace_csv(fake_summary(), os.path.join(self.temp_dir, "nested", "trace.csv"))
        with open(path, "r", encoding="utf-8") as f:
            header = f.readline().strip().split(",")
        self.assertEqual(tuple(header), TRACE_COLUMNS)

        columns = read_trace_csv(path)
        self.assertTrue(np.array_equal(columns["t"], np.arange(1, 6)))
        self.assertTrue(np.array_equal(columns["regret_mean"], 0.1 * np.arange(1, 6, dtype=float)))
        self.assertTrue(np.all(np.isnan(columns["good_event_frac"])))

    def test_read_rejects_missing_files_and_columns(self):
        with self.assertRaises(InputError):
            read_trace_csv(os.path.join(self.temp_dir, "absent.csv"))
        path = os.path.join(self.temp_dir, "bad.csv")
        with open(path, "w", encoding="utf-8") as f:
            f.write("t,regret_mean\n1,0.5\n")
        with self.assertRaises(InputError):
            read_trace_csv(path)

    def test_sweep_csv_rows(self):
        rows = [
            SimpleNamespace(N=10, algorithm="ucba-lcbp", final_regret_mean=1.5, final_regret_std=0.25),
            SimpleNamespace(N=20, algorithm="random", final_regret_mean=9.0, final_regret_std=1.0),
        ]
        path = write_sweep_csv(rows, os.path.join(self.temp_dir, "sweep.csv"))
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], "N,algorithm,final_regret_mean,final_regret_std")
        self.assertEqual(lines[1], "10,ucba-lcbp,1.5,0.25")
        self.assertEqual(len(lines), 3)


class TestRenderer(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_one_polyline_per_series(self):
        t = np.arange(1, 51, dtype=float)
        series = [
            ChartSeries("ucba-lcbp (N=10)", t, np.sqrt(t)),
            ChartSeries("random <N=10>", t, 0.2 * t),
            ChartSeries("etc", t, np.log(t)),
        ]
        path = render_regret_chart(series, os.path.join(self.temp_dir, "regret.svg"))
        root = ET.parse(path).getroot()
        polylines = list(root.iter("{http://www.w3.org/2000/svg}polyline"))
        self.assertEqual(len(polylines), 3)
        texts = [el.text for el in root.iter("{http://www.w3.org/2000/svg}text")]
        self.assertIn("random <N=10>", texts)

    def test_flat_zero_series_still_renders(self):
        t = np.arange(1, 4, dtype=float)
        path = render_regret_chart([ChartSeries("oracle", t, np.zeros(3))], os.path.join(self.temp_dir, "z.svg"))
        root = ET.parse(path).getroot()
        self.assertEqual(len(list(root.iter("{http://www.w3.org/2000/svg}polyline"))), 1)

    def test_title_carries_a_single_font_size(self):
        t = np.arange(1, 4, dtype=float)
        path = render_regret_chart([ChartSeries("etc", t, t)], os.path.join(self.temp_dir, "title.svg"), title="Regret")
        with open(path, "r", encoding="utf-8") as f:
            title_line = next(line for line in f if ">Regret</text>" in line)
        self.assertEqual(title_line.count("font-size="), 1)
        root = ET.parse(path).getroot()
        title = next(el for el in root.iter("{http://www.w3.org/2000/svg}text") if el.text == "Regret")
        self.assertEqual(title.get("font-size"), "14")
        self.assertEqual(title.get("font-weight"), "bold")


class TestManifest(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_version_is_never_empty(self):
        self.assertTrue(get_version())

    def test_write_requires_existing_artifacts(self):
        manifest = RunManifest(command="run", config={"N": 5}, artifacts={"trace": os.path.join(self.temp_dir, "x.csv")})
        with self.assertRaises(InputError):
            manifest.write(os.path.join(self.temp_dir, "manifest.json"))

    def test_write_round_trip(self):
        trace = write_trace_csv(fake_summary(), os.path.join(self.temp_dir, "trace.csv"))
        manifest = RunManifest(command="run", config={"N": 5}, artifacts={"trace": trace}, seeds={"replications": [1, 2]})
        path = manifest.write(os.path.join(self.temp_dir, "manifest.json"))
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        self.assertEqual(data["seeds"]["replications"], [1, 2])
        self.assertIsNone(data["n_values"])


if __name__ == "__main__":
    unittest.main()
