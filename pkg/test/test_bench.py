import io
import unittest

import pandas as pd

from qmv.bench import COLUMNS, bench_settings, check_methods, peak_matrix_bytes, run_bench
from qmv.errors import ConfigError
from qmv.run_config import load_settings


class BenchTest(unittest.TestCase):
    def setUp(self):
        self.settings = load_settings()
        self.params = bench_settings({'qubits': [2, 3], 'time': 0.5, 'instances': 2, 'repetitions': 1,
                                      'trotter_steps': 10, 'rk4_steps': 20}, self.settings)

    def test_defaults(self):
        params = bench_settings({}, self.settings)
        self.assertEqual(params['qubits'], [2, 3, 4, 5])
        self.assertEqual(params['repetitions'], self.settings['BENCH_REPETITIONS'])
        self.assertEqual(params['trotter_steps'], 30)
        self.assertEqual(params['reference_tol'], 1e-12)

    def test_bad_fields(self):
        with self.assertRaises(ConfigError):
            bench_settings({'qubits': []}, self.settings)
        with self.assertRaises(ConfigError):
            bench_settings({'repetitions': 0}, self.settings)
        with self.assertRaises(ConfigError):
            bench_settings({'time': 'long'}, self.settings)

    def test_unknown_method(self):
        with self.assertRaises(ConfigError) as cm:
            check_methods(['trotter', 'euler'])
        self.assertEqual(cm.exception.field, 'methods')

    def test_table(self):
        df = run_bench(self.params, ['trotter', 'rk4', 'dp5'])
        self.assertEqual(list(df.columns), COLUMNS)
        self.assertEqual(len(df), 6)
        parsed = pd.read_csv(io.StringIO(df.to_csv(index=False)))
        self.assertEqual(list(parsed.columns), COLUMNS)
        self.assertEqual(list(parsed['qubits']), [2, 2, 2, 3, 3, 3])

        by_method = df.set_index(['method', 'qubits'])
        for m in (2, 3):
            self.assertEqual(by_method.loc[('dp5', m), 'error_vs_reference'], 0.0)
            self.assertGreater(by_method.loc[('trotter', m), 'error_vs_reference'],
                               by_method.loc[('rk4', m), 'error_vs_reference'])
            self.assertLessEqual(by_method.loc[('trotter', m), 'min_wall_seconds'],
                                 by_method.loc[('trotter', m), 'mean_wall_seconds'])

    def test_looser_dp5_reports_error(self):
        params = dict(self.params, dp5_tol=1e-6)
        df = run_bench(params, ['dp5'])
        self.assertTrue((df['error_vs_reference'] > 0).all())
        self.assertTrue((df['error_vs_reference'] < 1e-3).all())

    def test_peak_bytes(self):
        self.assertEqual(peak_matrix_bytes('trotter', 3), 4 * 16 * 64)
        self.assertLess(peak_matrix_bytes('trotter', 5), peak_matrix_bytes('dp5', 5))
