import copy
import unittest
from unittest import mock

import numpy as np
from numpy.testing import assert_allclose

from qmv import meanvalue, pauli
from qmv.errors import CapacityError, ConfigError, InfeasibleError, InvariantError
from qmv.hamiltonian import Constant, Hamiltonian, TwoSiteTerm, full_region_hamiltonian, random_hamiltonian
from qmv.lattice import Lattice, Region, strip_partition
from qmv.meanvalue import (MPS_CONTRACTION, Observable, PropagatorCache, contract, cost_estimate,
                           evolved_observable, mean_value, oracle_mean_value, oracle_report, parse_operator,
                           strip_state)
from qmv.propagator import SolverSettings, propagate
from qmv.run_config import from_dict


def make_config(nx, ny, time, delta=0.1, **sections):
    doc = {'lattice': {'nx': nx, 'ny': ny}, 'time': time, 'delta': delta}
    doc.update(sections)
    return from_dict(doc)


def random_config(nx, ny, time, g, seed, delta=0.1, **sections):
    return make_config(nx, ny, time, delta, hamiltonian={'random': {'seed': seed, 'g': g}}, **sections)


class ObservableTest(unittest.TestCase):
    def test_parse(self):
        self.assertEqual(parse_operator('z'), (0.0, 0.0, 0.0, 1.0))
        self.assertEqual(parse_operator({'I': 0.5, 'X': 0.25}), (0.5, 0.25, 0.0, 0.0))
        self.assertEqual(parse_operator([0.1, 0.2, 0.3, 0.0]), (0.1, 0.2, 0.3, 0.0))
        with self.assertRaises(ConfigError):
            parse_operator('W')

    def test_norm_limit(self):
        Observable((0.5, 0.3, 0.0, 0.4))
        with self.assertRaises(ConfigError):
            Observable((0.5, 0.6, 0.0, 0.0))
        with self.assertRaises(ConfigError):
            Observable(overrides=(((0, 0), (0.0, 1.0, 0.0, 1.0)),))

    def test_overrides(self):
        observable = Observable((0.0, 0.0, 0.0, 1.0), overrides=(((1, 0), (0.0, 1.0, 0.0, 0.0)),))
        assert_allclose(observable.matrix((1, 0)), pauli.X)
        assert_allclose(observable.matrix((0, 0)), pauli.Z)
        self.assertEqual(observable.zero_time_value(Lattice(2, 1)), 0.0)


class EvolvedObservableTest(unittest.TestCase):
    def setUp(self):
        self.solver = SolverSettings('dp5', tol=1e-12)

    def test_zero_hamiltonian(self):
        H = Hamiltonian(Lattice(3, 3), ())
        op = evolved_observable((1, 1), pauli.X, H, 1, 0.7, self.solver)
        assert_allclose(op.matrix, pauli.embed(pauli.X, [2], 5), atol=1e-12)
        self.assertEqual(op.lr_error_share, 0.0)

    def test_zero_time(self):
        H = random_hamiltonian(Lattice(3, 3), 1.0, np.random.default_rng(1))
        op = evolved_observable((0, 0), pauli.Y, H, 1, 0.0, self.solver)
        assert_allclose(op.matrix, pauli.embed(pauli.Y, [0], 3), atol=1e-12)

    def test_matches_direct_conjugation(self):
        H = random_hamiltonian(Lattice(2, 1), 1.0, np.random.default_rng(2))
        op = evolved_observable((1, 0), pauli.Z, H, 1, 0.6, self.solver)
        V = propagate(full_region_hamiltonian(H), 0.6, self.solver).matrix
        O = pauli.embed(pauli.Z, [1], 2)
        assert_allclose(op.matrix, V.conj().T @ O @ V, atol=1e-10)

    def test_hermitian_and_bounded(self):
        H = random_hamiltonian(Lattice(3, 3), 1.0, np.random.default_rng(3))
        O = pauli.single_site((0.2, 0.3, 0.0, 0.5))
        op = evolved_observable((1, 1), O, H, 1, 0.4, SolverSettings('trotter', steps=20))
        self.assertLessEqual(np.linalg.norm(op.matrix - op.matrix.conj().T), 1e-10)
        self.assertLessEqual(np.max(np.abs(np.linalg.eigvalsh(op.matrix))), 0.2 + np.sqrt(0.34) + 1e-9)
        self.assertGreater(op.cs_error_share, 0.0)
        self.assertGreater(op.lr_error_share, 0.0)

    def test_scalar_observable_stays_local(self):
        H = random_hamiltonian(Lattice(3, 3), 1.0, np.random.default_rng(4))
        op = evolved_observable((1, 1), 0.5 * pauli.I2, H, 1, 0.4, self.solver)
        self.assertEqual(op.region, Region.of([(1, 1)]))
        assert_allclose(op.matrix, 0.5 * pauli.I2)

    def test_target_tightens_trotter(self):
        H = random_hamiltonian(Lattice(3, 3), 1.0, np.random.default_rng(5))
        op = evolved_observable((1, 1), pauli.Z, H, 1, 0.3, SolverSettings('trotter'), target=1e-3)
        self.assertLessEqual(op.cs_error_share, 1e-3)
        self.assertGreater(op.propagator.params['steps'], 1)

    def test_translation_cache(self):
        term = TwoSiteTerm.from_labels({'XX': 0.4, 'ZZ': 0.3})
        lattice = Lattice(8, 1)
        H = Hamiltonian.build(lattice, [(edge, Constant(1.0), term) for edge in lattice.edges()])
        cache = PropagatorCache()
        ops = [evolved_observable(site, pauli.Z, H, 1, 0.5, self.solver, cache=cache) for site in lattice.sites()]
        self.assertEqual(cache.computed, 3)
        self.assertEqual(cache.hits, 5)
        uncached = evolved_observable((4, 0), pauli.Z, H, 1, 0.5, self.solver)
        assert_allclose(ops[4].matrix, uncached.matrix, atol=1e-14)

    def test_lightcone_cap(self):
        H = random_hamiltonian(Lattice(8, 8), 1.0, np.random.default_rng(6))
        with self.assertRaises(CapacityError):
            evolved_observable((4, 4), pauli.Z, H, 3, 0.1, self.solver, cap=14)


class StripStateTest(unittest.TestCase):
    def setUp(self):
        self.lattice = Lattice(4, 4)
        self.H = random_hamiltonian(self.lattice, 1.0, np.random.default_rng(7))
        self.decomposition = strip_partition(self.lattice, 1)
        self.solver = SolverSettings('dp5', tol=1e-12)

    def evolved(self, sites, label='X'):
        return [evolved_observable(s, pauli.BY_LABEL[label], self.H, 1, 0.3, self.solver) for s in sites]

    def test_empty(self):
        strip = self.decomposition.strips_b[0]
        for contraction in ('dense', 'mps'):
            state = strip_state(strip, [], contraction=contraction)
            dense = state.to_dense().reshape(-1)
            self.assertEqual(dense[0], 1.0)
            self.assertEqual(np.count_nonzero(dense), 1)

    def test_identity_ops(self):
        strip = self.decomposition.strips_a[0]
        ops = self.evolved(list(self.decomposition.centers_a[0]), 'I')
        state = strip_state(strip, ops)
        self.assertAlmostEqual(state.to_dense().reshape(-1)[0], 1.0, places=12)

    def test_dense_and_mps_agree(self):
        # left B strip: two columns, four rows
        strip = self.decomposition.strips_b[0]
        ops = self.evolved(list(self.decomposition.centers_b[0]))
        for adjoint in (False, True):
            dense = strip_state(strip, ops, adjoint=adjoint).to_dense()
            mps = strip_state(strip, ops, contraction='mps', adjoint=adjoint).to_dense()
            assert_allclose(mps, dense, atol=1e-8)

    def test_escaping_region(self):
        strip = self.decomposition.strips_b[0]
        ops = self.evolved([(2, 1)])
        with self.assertRaises(InvariantError):
            strip_state(strip, ops)

    def test_contract_zero_states(self):
        states_a = [strip_state(s, []) for s in self.decomposition.strips_a]
        states_b = [strip_state(s, []) for s in self.decomposition.strips_b]
        self.assertAlmostEqual(contract(states_a, states_b), 1.0)

    def test_contract_self_overlap(self):
        strip = self.lattice.full_region()
        state = strip_state(strip, self.evolved([(1, 1), (2, 3)]))
        value = contract([state], [state])
        self.assertAlmostEqual(value, np.linalg.norm(state.to_dense()) ** 2, places=10)

    def test_contract_backends_agree(self):
        ops = {}
        for op in self.evolved(self.lattice.sites(), 'Z'):
            ops.setdefault(self.decomposition.assignment[op.site], []).append(op)
        results = []
        for contraction in ('dense', 'mps'):
            states_a = [strip_state(s, ops.get(('A', i), []), contraction=contraction)
                        for i, s in enumerate(self.decomposition.strips_a)]
            states_b = [strip_state(s, ops.get(('B', i), []), contraction=contraction, adjoint=True)
                        for i, s in enumerate(self.decomposition.strips_b)]
            results.append(contract(states_a, states_b))
        self.assertLessEqual(abs(results[0] - results[1]), 1e-8)

    def test_coverage_mismatch(self):
        states_a = [strip_state(s, []) for s in self.decomposition.strips_a]
        with self.assertRaises(ConfigError):
            contract(states_a, [strip_state(self.decomposition.strips_b[0], [])])


class MeanValueTest(unittest.TestCase):
    def test_identity_observable(self):
        config = random_config(4, 4, 0.03, 0.01, seed=1, observable={'default': 'I'})
        report = mean_value(config)
        self.assertAlmostEqual(report['mu_estimate'], 1.0, delta=1e-10)

    def test_zero_time_product(self):
        config = random_config(4, 4, 0.0, 1.0, seed=2)
        self.assertAlmostEqual(mean_value(config)['mu_estimate'], 1.0, delta=1e-12)
        config = random_config(4, 4, 0.0, 1.0, seed=2, observable={'default': {'I': 0.3, 'Z': 0.6}})
        self.assertAlmostEqual(mean_value(config)['mu_estimate'], 0.9 ** 16, delta=1e-12)
        self.assertAlmostEqual(config.observable.zero_time_value(config.lattice), 0.9 ** 16, places=14)

    def test_zero_time_cross_check(self):
        config = random_config(4, 4, 0.0, 1.0, seed=2)
        with mock.patch.object(meanvalue, 'contract', return_value=complex(0.5)):
            with self.assertRaises(InvariantError):
                mean_value(config)
        config = random_config(4, 4, 0.03, 0.01, seed=2)
        with mock.patch.object(meanvalue, 'contract', return_value=complex(0.5)):
            self.assertEqual(mean_value(config)['mu_estimate'], 0.5)

    def test_report_layout(self):
        report = mean_value(random_config(4, 4, 0.03, 0.01, seed=3))
        self.assertEqual(report['lightcone_radius'], 1)
        self.assertEqual(set(report['per_stage_timings_seconds']),
                         {'budget', 'radius', 'partition', 'observables', 'strip_states', 'contract'})
        budget = report['budget']
        self.assertEqual(budget['ssc'], 0.0)
        self.assertLessEqual(budget['lr'], budget['allocated_lr'] + 1e-15)
        self.assertLessEqual(budget['cs'], budget['allocated_cs'] + 1e-15)
        self.assertLessEqual(budget['certified'], 0.1 + 1e-15)
        self.assertEqual(report['solver']['method'], 'trotter')
        self.assertEqual(report['cost']['lightcone_qubits'], 5)
        self.assertLessEqual(report['im_residual'], budget['certified'])

    def test_oracle_envelope(self):
        rng = np.random.default_rng(12)
        observable = {'default': 'Z', 'sites': [{'site': [1, 2], 'op': 'X'}]}
        for seed in range(20):
            if seed < 10:
                # radius chosen from the budget
                g, T, backend = 0.01, float(rng.uniform(0.01, 0.03)), {}
            else:
                g, T, backend = float(rng.uniform(0.02, 0.1)), float(rng.uniform(0.1, 0.3)), {'radius': 1}
            config = random_config(4, 4, T, g, seed=seed, observable=observable, backend=backend)
            report = mean_value(config)
            exact = oracle_mean_value(config)
            certified = report['budget']['certified']
            self.assertLessEqual(abs(report['mu_estimate'] - exact), certified)
            self.assertLessEqual(report['im_residual'], certified)
            if not backend:
                self.assertEqual(report['lightcone_radius'], 1)
                self.assertLessEqual(certified, config.delta)

    def test_imaginary_residual_within_certified_bound(self):
        config = random_config(6, 3, 0.2, 0.02, seed=3, backend={'radius': 1})
        report = mean_value(config)
        self.assertGreater(report['im_residual'], 0.0)
        self.assertLessEqual(report['im_residual'], report['budget']['certified'])
        self.assertLessEqual(abs(report['mu_estimate'] - oracle_mean_value(config)), report['budget']['certified'])

    def test_full_lightcone_is_exact(self):
        config = random_config(3, 2, 0.5, 1.0, seed=4, delta=0.5,
                               observable={'default': {'X': 0.6, 'Z': 0.8}},
                               solver={'method': 'dp5'}, backend={'radius': 3})
        report = mean_value(config)
        self.assertEqual(report['backend']['partition'], 'single_strip')
        self.assertAlmostEqual(report['mu_estimate'], oracle_mean_value(config), delta=1e-8)

    def test_radius_scan(self):
        certified = []
        for L in (1, 2):
            config = random_config(6, 2, 0.5, 0.1, seed=5, delta=0.1, solver={'method': 'dp5'},
                                   backend={'radius': L})
            report = mean_value(config)
            certified.append(report['budget']['certified'])
            self.assertLessEqual(abs(report['mu_estimate'] - oracle_mean_value(config)), certified[-1])
        self.assertLess(certified[1], certified[0])

    def test_backends_agree_4x4(self):
        results = []
        for contraction in ('dense', 'mps'):
            config = random_config(4, 4, 0.2, 0.5, seed=6, backend={'radius': 1, 'contraction': contraction})
            results.append(mean_value(config)['mu_estimate'])
        self.assertAlmostEqual(results[0], results[1], delta=1e-8)

    def test_backends_agree_8x4(self):
        lattice = Lattice(8, 4)
        rng = np.random.default_rng(9)
        terms = [{'edge': [list(a), list(b)], 'pauli': {'XX': float(rng.uniform(-1, 1)), 'ZY': 0.3},
                  'schedule': {'type': 'harmonic', 'a': 0.2, 'b': 0.1, 'omega': 2.0}}
                 for a, b in lattice.edges() if a[1] == b[1]]
        results = []
        for contraction in ('dense', 'mps'):
            config = make_config(8, 4, 0.2, hamiltonian={'terms': terms},
                                 observable={'default': {'X': 0.6, 'Z': 0.8}},
                                 backend={'radius': 1, 'contraction': contraction})
            report = mean_value(config)
            results.append(report['mu_estimate'])
        self.assertEqual(report['backend']['contraction'], MPS_CONTRACTION)
        self.assertAlmostEqual(results[0], results[1], delta=1e-8)

    def test_term_order_invariance(self):
        lattice = Lattice(3, 3)
        rng = np.random.default_rng(10)
        terms = [{'edge': [list(a), list(b)], 'pauli': {'XY': float(rng.normal()), 'ZZ': float(rng.normal())},
                  'schedule': {'type': 'harmonic', 'a': 0.1, 'b': 0.05, 'omega': 1.5}} for a, b in lattice.edges()]
        shuffled = copy.deepcopy(terms)
        rng.shuffle(shuffled)
        values = [mean_value(make_config(3, 3, 0.2, hamiltonian={'terms': t}, backend={'radius': 1}))['mu_estimate']
                  for t in (terms, shuffled)]
        self.assertAlmostEqual(values[0], values[1], delta=1e-12)

    def test_threads(self):
        config = random_config(4, 4, 0.03, 0.01, seed=11)
        single = mean_value(config, threads=1)['mu_estimate']
        threaded = mean_value(config, threads=3)['mu_estimate']
        self.assertAlmostEqual(single, threaded, delta=1e-12)

    def test_cache_hits_on_uniform_chain(self):
        doc = {'default_term': {'pauli': {'XX': 0.2, 'YY': 0.1}, 'schedule': {'type': 'constant', 'a': 1.0}}}
        cached = mean_value(make_config(10, 1, 0.05, hamiltonian=doc))
        uncached = mean_value(make_config(10, 1, 0.05, hamiltonian=doc, backend={'propagator_cache': False}))
        self.assertGreater(cached['solver']['propagator_cache_hits'], 0)
        self.assertEqual(uncached['solver']['propagator_cache_hits'], 0)
        self.assertEqual(uncached['solver']['propagators_computed'], 10)
        self.assertAlmostEqual(cached['mu_estimate'], uncached['mu_estimate'], delta=1e-14)

    def test_infeasible(self):
        with self.assertRaises(InfeasibleError):
            mean_value(random_config(4, 4, 5.0, 1.0, seed=0, delta=1e-6))


class OracleTest(unittest.TestCase):
    def test_zero_hamiltonian(self):
        self.assertAlmostEqual(oracle_mean_value(make_config(3, 2, 1.0)), 1.0)

    def test_rabi_rotation(self):
        terms = [{'edge': [[0, 0], [1, 0]], 'pauli': {'XI': np.pi / 2}, 'schedule': {'type': 'constant', 'a': 1.0}}]
        config = make_config(2, 1, 1.0, hamiltonian={'terms': terms},
                             observable={'default': 'I', 'sites': [{'site': [0, 0], 'op': 'Z'}]})
        report = oracle_report(config)
        self.assertAlmostEqual(report['mu_exact'], -1.0, delta=1e-9)
        self.assertLessEqual(report['norm_residual'], 1e-10)

    def test_norm_conserved(self):
        report = oracle_report(random_config(3, 3, 0.7, 1.0, seed=3))
        self.assertLessEqual(report['norm_residual'], 1e-10)

    def test_cap(self):
        with self.assertRaises(CapacityError):
            oracle_mean_value(make_config(5, 5, 0.1, backend={'oracle_cap': 20}))


class CostEstimateTest(unittest.TestCase):
    def test_radius_one(self):
        cost = cost_estimate(1, 16)
        self.assertEqual(cost['lightcone_qubits'], 5)
        self.assertEqual(cost['propagator_bytes'], 16 * 4 ** 5)
        self.assertAlmostEqual(cost['matmul_work'], 16 * 32 ** np.log2(7))
