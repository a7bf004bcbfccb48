"""
Propagator benchmark: wall time, conjugation error against a tight dp5
reference and analytic peak buffer sizes for each solver on random
time-dependent chains.
"""
import json
import logging

import numpy as np
import pandas as pd

from . import pauli
from .errors import ConfigError
from .get_logger import get_logger
from .hamiltonian import full_region_hamiltonian, random_hamiltonian
from .lattice import Lattice
from .propagator import DP5, METHODS, RK4, TROTTER, conjugate, ode_propagate, trotter_propagate
from .stop_watch import stopwatch

log = get_logger(__name__, logging.INFO)

COLUMNS = ['method', 'qubits', 'repetitions', 'min_wall_seconds', 'mean_wall_seconds', 'error_vs_reference',
           'peak_matrix_bytes']

# dense complex matrices alive at the peak of each method
LIVE_MATRICES = {TROTTER: 4, RK4: 7, DP5: 10}


def bench_settings(doc, settings):
    """Validated benchmark parameters; absent fields come from ``settings``."""
    if not isinstance(doc, dict):
        raise ConfigError('benchmark configuration must be an object', 'bench')
    qubits = doc.get('qubits', [2, 3, 4, 5])
    if not isinstance(qubits, list) or not qubits or \
            not all(isinstance(q, int) and not isinstance(q, bool) and q >= 1 for q in qubits):
        raise ConfigError('expected a nonempty list of positive integers', 'qubits')
    out = {
        'qubits': qubits,
        'time': doc.get('time', 1.0),
        'g': doc.get('g', 1.0),
        'instances': doc.get('instances', settings['BENCH_INSTANCES']),
        'repetitions': doc.get('repetitions', settings['BENCH_REPETITIONS']),
        'seed': doc.get('seed', settings['BENCH_SEED']),
        'trotter_steps': doc.get('trotter_steps', settings['BENCH_TROTTER_STEPS']),
        'rk4_steps': doc.get('rk4_steps', settings['RK4_STEPS']),
        'dp5_tol': doc.get('dp5_tol', settings['ODE_TOL']),
        'reference_tol': doc.get('reference_tol', settings['BENCH_REFERENCE_TOL']),
    }
    for key in ('instances', 'repetitions', 'trotter_steps', 'rk4_steps', 'seed'):
        value = out[key]
        if isinstance(value, bool) or not isinstance(value, int) or value < (0 if key == 'seed' else 1):
            raise ConfigError('expected a positive integer, got %r' % (value,), key)
    for key in ('time', 'g', 'dp5_tol', 'reference_tol'):
        value = out[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
            raise ConfigError('expected a non-negative number, got %r' % (value,), key)
    return out


def load_bench_config(path, settings):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (IOError, OSError) as e:
        raise ConfigError('cannot read %s: %s' % (path, e), 'config')
    except ValueError as e:
        raise ConfigError('invalid JSON in %s: %s' % (path, e), 'config')
    return bench_settings(doc, settings)


def check_methods(methods):
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigError('unknown method(s) %s (expected %s)' % (', '.join(unknown), ', '.join(METHODS)),
                          'methods')
    return list(methods)


def conjugation_error(W, V, observable):
    """||W^+ O W - V^+ O V|| in operator norm."""
    return float(np.linalg.norm(conjugate(W, observable) - conjugate(V, observable), 2))


def peak_matrix_bytes(method, qubits):
    return LIVE_MATRICES[method] * 16 * 4 ** qubits


def _solve(method, HA, T, params):
    if method == TROTTER:
        return trotter_propagate(HA, T, params['trotter_steps'])
    if method == RK4:
        return ode_propagate(HA, T, method=RK4, steps=params['rk4_steps'], estimate_error=False)
    return ode_propagate(HA, T, method=DP5, tol=params['dp5_tol'])


def run_bench(params, methods):
    """One row per (method, qubits); error is the max over instances, timings aggregate every run."""
    methods = check_methods(methods)
    rng = np.random.default_rng(params['seed'])
    T = params['time']
    rows = []
    for m in params['qubits']:
        lattice = Lattice(m, 1)
        observable = pauli.embed(pauli.Z, [0], m)
        instances = [full_region_hamiltonian(random_hamiltonian(lattice, params['g'], rng))
                     for _ in range(params['instances'])]
        references = [ode_propagate(HA, T, method=DP5, tol=params['reference_tol']) for HA in instances]

        for method in methods:
            walls = []
            errors = []
            for HA, reference in zip(instances, references):
                result = None
                for _ in range(params['repetitions']):
                    with stopwatch(method) as watch:
                        result = _solve(method, HA, T, params)
                    walls.append(watch.elapsed)
                if method == DP5 and params['dp5_tol'] == params['reference_tol']:
                    errors.append(0.0)
                else:
                    errors.append(conjugation_error(result.matrix, reference.matrix, observable))
            rows.append({
                'method': method,
                'qubits': m,
                'repetitions': params['repetitions'],
                'min_wall_seconds': float(np.min(walls)),
                'mean_wall_seconds': float(np.mean(walls)),
                'error_vs_reference': float(np.max(errors)),
                'peak_matrix_bytes': peak_matrix_bytes(method, m),
            })
            log.info('bench %s m=%d: min %.3es, max error %.3e', method, m, rows[-1]['min_wall_seconds'],
                     rows[-1]['error_vs_reference'])
    return pd.DataFrame(rows, columns=COLUMNS)
