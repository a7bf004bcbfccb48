"""
Single-qubit Pauli matrices, Pauli-coefficient operators and Pauli strings
embedded on registers of qubits.
"""
import numpy as np

from .errors import ConfigError

LABELS = 'IXYZ'

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULIS = (I2, X, Y, Z)
BY_LABEL = dict(zip(LABELS, PAULIS))


def single_site(coefficients):
    """cI*I + cX*X + cY*Y + cZ*Z for real coefficients."""
    return sum(c * p for c, p in zip(coefficients, PAULIS))


def single_site_norm(coefficients):
    c_i, c_x, c_y, c_z = coefficients
    return abs(c_i) + float(np.sqrt(c_x ** 2 + c_y ** 2 + c_z ** 2))


def two_site(coefficients):
    """4x4 matrix of sum_ab c[4a+b] sigma_a (x) sigma_b; the first factor is the more significant qubit."""
    out = np.zeros((4, 4), dtype=complex)
    for a in range(4):
        for b in range(4):
            c = coefficients[4 * a + b]
            if c:
                out += c * np.kron(PAULIS[a], PAULIS[b])
    return out


def parse_label(label, width, field_name):
    label = str(label).upper()
    if len(label) != width or any(ch not in LABELS for ch in label):
        raise ConfigError('invalid Pauli label %r' % (label,), field_name)
    return [LABELS.index(ch) for ch in label]


def string_action(paulis, qubits, num_qubits):
    """
    Sparse action of a Pauli string: returns ``(flip, phase)`` such that
    P|j> = phase[j] |j ^ flip> for every basis index j of ``num_qubits`` qubits.
    """
    flip = 0
    z_mask = 0
    y_count = 0
    for p, q in zip(paulis, qubits):
        bit = 1 << (num_qubits - 1 - q)
        if p in (1, 2):
            flip |= bit
        if p in (2, 3):
            z_mask |= bit
        if p == 2:
            y_count += 1
    index = np.arange(2 ** num_qubits, dtype=np.int64)
    parity = np.zeros(index.shape, dtype=np.int64)
    masked = index & z_mask
    while np.any(masked):
        parity ^= masked & 1
        masked = masked >> 1
    phase = (1j ** y_count) * (1 - 2 * parity).astype(complex)
    return flip, phase


def embed(matrix, qubits, num_qubits):
    """Dense embedding of a k-qubit operator on ``qubits`` of a register (identity elsewhere)."""
    k = len(qubits)
    op = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k))
    identity = np.eye(2 ** num_qubits, dtype=complex).reshape((2,) * (2 * num_qubits))
    out = np.tensordot(op, identity, axes=(list(range(k, 2 * k)), list(qubits)))
    out = np.moveaxis(out, list(range(k)), list(qubits))
    return out.reshape(2 ** num_qubits, 2 ** num_qubits)
