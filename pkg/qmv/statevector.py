"""
Dense state tensors of shape (2,)*n with the first qubit most significant.
"""
import numpy as np


def zero_state(num_qubits):
    state = np.zeros((2,) * num_qubits, dtype=complex)
    state[(0,) * num_qubits] = 1.0
    return state


def apply_operator(state, op, qubits):
    """Apply a 2^k x 2^k operator to ``qubits`` of a state tensor."""
    k = len(qubits)
    if k == 0:
        return complex(np.asarray(op).reshape(())) * state
    op_t = np.asarray(op, dtype=complex).reshape((2,) * (2 * k))
    out = np.tensordot(op_t, state, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(out, list(range(k)), list(qubits))


def expectation(state, ops):
    """<psi| prod_q O_q |psi> for single-qubit operators given as {qubit: 2x2 matrix}."""
    phi = state
    for q, op in ops.items():
        phi = apply_operator(phi, op, [q])
    return complex(np.vdot(state, phi))


def norm(state):
    return float(np.linalg.norm(state))
