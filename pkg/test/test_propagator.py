import unittest

import numpy as np
from numpy.testing import assert_allclose
from scipy import linalg

from qmv import pauli
from qmv.errors import CapacityError, ConfigError
from qmv.hamiltonian import (Constant, Hamiltonian, Harmonic, TwoSiteTerm, assemble, full_region_hamiltonian,
                             random_hamiltonian)
from qmv.lattice import Lattice
from qmv.propagator import (DP5, RK4, SolverSettings, conjugate, conjugation_error_share, expm_hermitian,
                            ode_propagate, propagate, trotter_error_bound, trotter_propagate, trotter_steps_for,
                            unitarity_defect)


def cos_z():
    """H(t) = cos(t) Z on the first qubit of a two-site chain."""
    term = TwoSiteTerm.from_labels({'ZI': 1.0})
    H = Hamiltonian.build(Lattice(2, 1), [(((0, 0), (1, 0)), Harmonic(0.0, 1.0, 1.0), term)])
    return full_region_hamiltonian(H)


def analytic_cos_z(T):
    phase = np.sin(T)
    return np.kron(np.diag([np.exp(-1j * phase), np.exp(1j * phase)]), pauli.I2)


def random_region(qubits, seed, g=1.0):
    return full_region_hamiltonian(random_hamiltonian(Lattice(qubits, 1), g, np.random.default_rng(seed)))


def conjugation_gap(W, V, O):
    return np.linalg.norm(conjugate(W, O) - conjugate(V, O), 2)


class TrotterTest(unittest.TestCase):
    def test_constant_schedule_is_exact(self):
        H = Hamiltonian.build(Lattice(3, 1), [
            (((0, 0), (1, 0)), Constant(0.7), TwoSiteTerm.from_labels({'XX': 1.0, 'ZY': 0.3})),
            (((1, 0), (2, 0)), Constant(-0.4), TwoSiteTerm.from_labels({'YZ': 1.0})),
        ])
        HA = full_region_hamiltonian(H)
        T = 0.9
        expected = linalg.expm(-1j * T * assemble(HA, 0.0))
        for N in (1, 7):
            assert_allclose(trotter_propagate(HA, T, N).matrix, expected, atol=1e-12)

    def test_commuting_family_phase(self):
        W = trotter_propagate(cos_z(), 1.0, 4000).matrix
        assert_allclose(W, analytic_cos_z(1.0), atol=1e-3)

    def test_zero_time(self):
        result = trotter_propagate(random_region(2, 1), 0.0, 5)
        assert_allclose(result.matrix, np.eye(4))
        self.assertEqual(result.cs_error_bound, 0.0)

    def test_bad_steps(self):
        with self.assertRaises(ConfigError):
            trotter_propagate(random_region(2, 1), 1.0, 0)

    def test_negative_time(self):
        with self.assertRaises(ConfigError):
            trotter_propagate(random_region(2, 1), -1.0, 3)

    def test_cap(self):
        with self.assertRaises(CapacityError):
            trotter_propagate(random_region(4, 1), 1.0, 3, cap=3)

    def test_unitary_after_projection(self):
        for N in (1, 10, 100):
            result = trotter_propagate(random_region(3, 2), 1.0, N)
            self.assertLessEqual(unitarity_defect(result.matrix), 1e-10)

    def test_midpoint_sampling(self):
        HA = random_region(2, 4)
        reference = ode_propagate(HA, 1.0, tol=1e-12).matrix
        right = trotter_propagate(HA, 1.0, 50).matrix
        midpoint = trotter_propagate(HA, 1.0, 50, sample='midpoint').matrix
        self.assertLess(np.linalg.norm(midpoint - reference, 2), np.linalg.norm(right - reference, 2))


class TrotterBoundTest(unittest.TestCase):
    def test_formula(self):
        H = Hamiltonian.build(Lattice(2, 1), [
            (((0, 0), (1, 0)), Harmonic(0.0, 1.0, 2.0), TwoSiteTerm.from_labels({'XX': 1.0}))])
        self.assertAlmostEqual(trotter_error_bound(full_region_hamiltonian(H), 1.0, 1.0, 100), 0.12)

    def test_constant_has_no_error(self):
        term = TwoSiteTerm.from_labels({'XX': 1.0})
        H = Hamiltonian.build(Lattice(2, 1), [(((0, 0), (1, 0)), Constant(1.0), term)])
        self.assertEqual(trotter_error_bound(full_region_hamiltonian(H), 1.0, 1.0, 3), 0.0)

    def test_steps_for_target(self):
        HA = random_region(3, 8)
        N = trotter_steps_for(HA, 1.0, 0.5, 1e-3)
        self.assertLessEqual(trotter_error_bound(HA, 1.0, 0.5, N), 1e-3)
        self.assertGreater(trotter_error_bound(HA, 1.0, 0.5, N - 1), 1e-3)

    def test_bound_holds_on_random_instances(self):
        for qubits, seeds in ((2, range(100)), (3, range(100, 150))):
            O = pauli.embed(pauli.Z, [0], qubits)
            for seed in seeds:
                HA = random_region(qubits, seed)
                reference = ode_propagate(HA, 0.5, tol=1e-12).matrix
                for N in (10, 30, 100):
                    W = trotter_propagate(HA, 0.5, N)
                    self.assertLessEqual(conjugation_gap(W.matrix, reference, O),
                                         conjugation_error_share(W, 1.0) + 1e-10,
                                         'qubits=%d seed=%d N=%d' % (qubits, seed, N))

    def test_first_order_convergence(self):
        HA = random_region(2, 17)
        O = pauli.embed(pauli.Z, [0], 2)
        reference = ode_propagate(HA, 1.0, tol=1e-12).matrix
        steps = np.array([50, 100, 200, 400, 800])
        errors = [conjugation_gap(trotter_propagate(HA, 1.0, N).matrix, reference, O) for N in steps]
        slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
        self.assertAlmostEqual(slope, -1.0, delta=0.2)


class OdeTest(unittest.TestCase):
    def test_zero_hamiltonian(self):
        HA = full_region_hamiltonian(Hamiltonian(Lattice(2, 1), ()))
        assert_allclose(ode_propagate(HA, 1.0).matrix, np.eye(4))

    def test_dp5_commuting_family(self):
        result = ode_propagate(cos_z(), 1.0, method=DP5, tol=1e-12)
        assert_allclose(result.matrix, analytic_cos_z(1.0), atol=1e-10)
        self.assertIsNone(result.cs_error_bound)
        self.assertAlmostEqual(result.error_estimate, 1e-11)

    def test_rk4_commuting_family(self):
        result = ode_propagate(cos_z(), 1.0, method=RK4, steps=200)
        assert_allclose(result.matrix, analytic_cos_z(1.0), atol=1e-9)
        self.assertLess(result.error_estimate, 1e-9)

    def test_rk4_fourth_order(self):
        HA = random_region(2, 21)
        reference = ode_propagate(HA, 1.0, tol=1e-13).matrix
        steps = np.array([10, 20, 40, 80])
        errors = [np.linalg.norm(ode_propagate(HA, 1.0, method=RK4, steps=int(n), estimate_error=False).matrix
                                 - reference, 2) for n in steps]
        slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
        self.assertAlmostEqual(slope, -4.0, delta=0.5)

    def test_dp5_beats_trotter(self):
        HA = random_region(3, 5)
        O = pauli.embed(pauli.Z, [0], 3)
        fine = ode_propagate(HA, 1.0, tol=1e-13).matrix
        dp5 = ode_propagate(HA, 1.0, tol=1e-12).matrix
        trotter = trotter_propagate(HA, 1.0, 30).matrix
        self.assertGreater(conjugation_gap(trotter, fine, O), 1e3 * conjugation_gap(dp5, fine, O))

    def test_dp5_beats_trotter_per_instance(self):
        for qubits in (2, 3, 4, 5):
            O = pauli.embed(pauli.Z, [0], qubits)
            for seed in range(3):
                HA = random_region(qubits, 1000 + 10 * qubits + seed)
                fine = ode_propagate(HA, 1.0, tol=1e-13).matrix
                dp5 = conjugation_gap(ode_propagate(HA, 1.0, tol=1e-12).matrix, fine, O)
                trotter = conjugation_gap(trotter_propagate(HA, 1.0, 30).matrix, fine, O)
                self.assertLessEqual(dp5, 1e-6 * trotter, 'qubits=%d seed=%d' % (qubits, seed))

    def test_rk4_records_fine_steps(self):
        HA = random_region(2, 22)
        result = ode_propagate(HA, 1.0, method=RK4, steps=20)
        self.assertEqual(result.params['steps'], 40)
        self.assertEqual(result.stats['steps'], 40)
        coarse = ode_propagate(HA, 1.0, method=RK4, steps=20, estimate_error=False)
        self.assertEqual(coarse.params['steps'], 20)
        self.assertIsNone(coarse.error_estimate)

    def test_composition(self):
        HA = random_region(3, 9)
        T, tol = 0.8, 1e-12
        whole = ode_propagate(HA, T, tol=tol).matrix
        first = ode_propagate(HA, T / 2, tol=tol).matrix
        second = ode_propagate(HA.shifted(T / 2), T / 2, tol=tol).matrix
        self.assertLessEqual(np.linalg.norm(second @ first - whole, 2), 10 * tol)

    def test_trotter_converges_to_ode(self):
        HA = random_region(2, 3)
        reference = ode_propagate(HA, 1.0, tol=1e-12).matrix
        gaps = [np.linalg.norm(trotter_propagate(HA, 1.0, N).matrix - reference, 2) for N in (10, 100, 1000)]
        self.assertGreater(gaps[0], gaps[1])
        self.assertGreater(gaps[1], gaps[2])

    def test_dispatch(self):
        HA = random_region(2, 6)
        self.assertEqual(propagate(HA, 0.5, SolverSettings('trotter', steps=3)).params['steps'], 3)
        self.assertEqual(propagate(HA, 0.5, SolverSettings('dp5', tol=1e-10)).method, DP5)
        with self.assertRaises(ConfigError):
            SolverSettings('euler')


class ConjugateTest(unittest.TestCase):
    def test_identity(self):
        V = trotter_propagate(random_region(2, 2), 1.0, 10)
        assert_allclose(conjugate(V, np.eye(4)), np.eye(4), atol=1e-12)

    def test_spectrum_preserved(self):
        rng = np.random.default_rng(4)
        V = trotter_propagate(random_region(3, 2), 1.0, 10)
        A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        O = 0.5 * (A + A.conj().T)
        assert_allclose(np.linalg.eigvalsh(conjugate(V, O)), np.linalg.eigvalsh(O), atol=1e-10)

    def test_against_dense_product(self):
        V = ode_propagate(random_region(2, 12), 0.7).matrix
        O = pauli.embed(pauli.X, [1], 2)
        assert_allclose(conjugate(V, O), V.conj().T @ O @ V, atol=1e-13)

    def test_dimension_mismatch(self):
        with self.assertRaises(ConfigError):
            conjugate(np.eye(4), np.eye(2))

    def test_expm_hermitian(self):
        M = np.array([[0.3, 0.1 - 0.2j], [0.1 + 0.2j, -0.5]])
        assert_allclose(expm_hermitian(M, 0.4), linalg.expm(-0.4j * M), atol=1e-14)
