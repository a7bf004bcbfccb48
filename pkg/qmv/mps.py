"""
Matrix product states and operators whose physical sites are row segments of
a lattice strip (a site with w qubits has physical dimension 2^w), plus the
labelled contractions used to take overlaps of strip products.
"""
import logging

import numpy as np
import opt_einsum as oe

from .errors import CapacityError, ConfigError
from .get_logger import get_logger

log = get_logger(__name__, logging.INFO)


class MPS(object):
    """Open-boundary MPS; tensor i has shape (left bond, 2^widths[i], right bond)."""

    def __init__(self, tensors, widths):
        self.tensors = list(tensors)
        self.widths = list(widths)

    @classmethod
    def zero(cls, widths):
        tensors = []
        for w in widths:
            t = np.zeros((1, 2 ** w, 1), dtype=complex)
            t[0, 0, 0] = 1.0
            tensors.append(t)
        return cls(tensors, widths)

    def __len__(self):
        return len(self.tensors)

    @property
    def bond_dims(self):
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self):
        return max([1] + self.bond_dims)

    def to_dense(self):
        """State tensor of shape (2,)*total_qubits."""
        out = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            out = np.tensordot(out, t, axes=(1, 0)).reshape(-1, t.shape[2])
        return out.reshape((2,) * sum(self.widths))

    def apply_mpo(self, first_site, mpo, positions):
        """
        Apply MPO tensors W[a, out, in, b] to consecutive sites starting at
        ``first_site``; ``positions[r]`` lists the qubits of site first_site + r
        the r-th tensor acts on.
        """
        for r, (W, pos) in enumerate(zip(mpo, positions)):
            i = first_site + r
            A = self.tensors[i]
            w = self.widths[i]
            g = len(pos)
            left, _, right = A.shape
            a, _, _, b = W.shape
            A_t = A.reshape((left,) + (2,) * w + (right,))
            W_t = W.reshape((a,) + (2,) * (2 * g) + (b,))

            # integer labels: qubits 0..w-1, then bonds and new outputs
            l_lab, r_lab, a_lab, b_lab = w, w + 1, w + 2, w + 3
            out_labels = {p: w + 4 + k for k, p in enumerate(pos)}
            A_labels = [l_lab] + list(range(w)) + [r_lab]
            W_labels = [a_lab] + [out_labels[p] for p in pos] + list(pos) + [b_lab]
            result_labels = [a_lab, l_lab] + [out_labels.get(q, q) for q in range(w)] + [b_lab, r_lab]
            new = np.einsum(W_t, W_labels, A_t, A_labels, result_labels)
            self.tensors[i] = new.reshape(a * left, 2 ** w, b * right)

    def compress(self, cutoff=1e-12):
        """Left-canonicalize by QR, then drop singular values below ``cutoff`` times the largest, right to left."""
        n = len(self.tensors)
        for i in range(n - 1):
            left, d, right = self.tensors[i].shape
            q, r = np.linalg.qr(self.tensors[i].reshape(left * d, right))
            self.tensors[i] = q.reshape(left, d, q.shape[1])
            self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=(1, 0))
        for i in range(n - 1, 0, -1):
            left, d, right = self.tensors[i].shape
            u, s, vh = np.linalg.svd(self.tensors[i].reshape(left, d * right), full_matrices=False)
            keep = max(1, int(np.sum(s > cutoff * s[0]))) if s.size and s[0] > 0 else 1
            self.tensors[i] = vh[:keep].reshape(keep, d, right)
            self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], u[:, :keep] * s[:keep], axes=(2, 0))
        return self


def mpo_from_operator(op, groups, cutoff=1e-12):
    """
    Factorize a dense operator on sum(groups) qubits (row-major, consecutive
    qubit groups per MPO site) into tensors W[a, out, in, b] by sequential
    singular value decompositions; relative singular values below ``cutoff``
    are dropped.
    """
    m = sum(groups)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2 ** m, 2 ** m):
        raise ConfigError('operator shape %r does not match %d qubits' % (op.shape, m), 'op')
    dims = [2 ** g for g in groups]
    k = len(dims)
    t = op.reshape(tuple(dims) + tuple(dims))
    t = np.transpose(t, [ax for r in range(k) for ax in (r, k + r)])

    tensors = []
    left = 1
    rem = t.reshape(1, -1)
    for r in range(k - 1):
        d = dims[r]
        rem = rem.reshape(left * d * d, -1)
        u, s, vh = np.linalg.svd(rem, full_matrices=False)
        keep = max(1, int(np.sum(s > cutoff * s[0]))) if s.size and s[0] > 0 else 1
        tensors.append(u[:, :keep].reshape(left, d, d, keep))
        rem = s[:keep, None] * vh[:keep]
        left = keep
    tensors.append(rem.reshape(left, dims[-1], dims[-1], 1))
    return tensors


def mpo_to_dense(tensors):
    out = np.ones((1, 1, 1), dtype=complex)
    for W in tensors:
        a, d, _, b = W.shape
        rows, cols = out.shape[0], out.shape[1]
        out = np.einsum('ija,aklb->ikjlb', out, W).reshape(rows * d, cols * d, b)
    return out[:, :, 0]


def sweep_overlap(bra_states, ket_states, boundary_cap=None):
    """
    <(x)bra | (x)ket> for two families of strip MPS that each cover the same
    lattice rows. Each entry is ``(columns, mps)`` with ``columns`` the
    lattice columns of the strip in ascending order; row y of every strip is
    MPS site y. The boundary tensor carries every open bond while sweeping
    along the rows.
    """
    num_rows = {len(m) for _, m in bra_states + ket_states}
    if len(num_rows) != 1:
        raise ConfigError('strip states cover different numbers of rows', 'states')
    num_rows = num_rows.pop()

    labels = iter(range(10 ** 9))
    qubit_label = {}

    def site_label(x):
        if x not in qubit_label:
            qubit_label[x] = next(labels)
        return qubit_label[x]

    ket_left = [next(labels) for _ in ket_states]
    bra_left = [next(labels) for _ in bra_states]
    boundary = np.ones((1,) * (len(ket_states) + len(bra_states)), dtype=complex)

    for y in range(num_rows):
        operands = [boundary, ket_left + bra_left]
        ket_right = [next(labels) for _ in ket_states]
        bra_right = [next(labels) for _ in bra_states]
        for (columns, m), l_lab, r_lab in zip(ket_states, ket_left, ket_right):
            t = m.tensors[y]
            operands += [t.reshape((t.shape[0],) + (2,) * len(columns) + (t.shape[2],)),
                         [l_lab] + [site_label((x, y)) for x in columns] + [r_lab]]
        for (columns, m), l_lab, r_lab in zip(bra_states, bra_left, bra_right):
            t = m.tensors[y].conj()
            operands += [t.reshape((t.shape[0],) + (2,) * len(columns) + (t.shape[2],)),
                         [l_lab] + [site_label((x, y)) for x in columns] + [r_lab]]
        boundary = oe.contract(*operands, ket_right + bra_right)
        if boundary_cap is not None and boundary.size > boundary_cap:
            raise CapacityError('MPS boundary tensor too large: %d entries > cap %d' % (boundary.size, boundary_cap))
        ket_left, bra_left = ket_right, bra_right
        log.debug('row %d boundary shape %r', y, boundary.shape)

    return complex(boundary.reshape(-1)[0])


def dense_overlap(bra_tensors, ket_tensors, cap=None):
    """
    <(x)bra | (x)ket> for dense strip tensors. Entries are ``(start_column,
    sites, tensor)``; tensors are contracted pairwise in column order so only
    the sites shared by partially absorbed strips stay open.
    """
    pieces = [(start, 0, sites, t) for start, sites, t in ket_tensors]
    pieces += [(start, 1, sites, t.conj()) for start, sites, t in bra_tensors]
    pieces.sort(key=lambda p: (p[0], p[1]))

    label = {}
    for _, _, sites, _ in pieces:
        for s in sites:
            label.setdefault(s, len(label))

    current, open_sites = None, []
    for _, _, sites, t in pieces:
        if current is None:
            current, open_sites = t, list(sites)
            continue
        shared = set(open_sites) & set(sites)
        out_sites = [s for s in open_sites if s not in shared] + [s for s in sites if s not in shared]
        if cap is not None and len(out_sites) > cap:
            raise CapacityError('dense contraction needs %d open qubits > cap %d' % (len(out_sites), cap))
        current = oe.contract(current, [label[s] for s in open_sites], t, [label[s] for s in sites],
                              [label[s] for s in out_sites])
        open_sites = out_sites
    if open_sites:
        raise ConfigError('strip families do not cover the same sites', 'states')
    return complex(current)
