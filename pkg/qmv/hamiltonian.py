"""
Time-dependent, edge-local Hamiltonians H(t) = sum_e u_e(t) h_e on a lattice.

Schedules are limited to closed forms whose sup norm and derivative bound are
computable: Constant, Harmonic and PiecewiseLinear.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import pauli
from .errors import CapacityError, ConfigError
from .get_logger import get_logger
from .lattice import Region, l_boundary, row_major

log = get_logger(__name__, logging.INFO)


class Schedule(object):
    """Scalar coefficient u(t) of one Hamiltonian term (hbar = 1)."""

    def value(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    def sup_norm(self, T=None):
        """Upper bound on |u(t)| for 0 <= t <= T (all t when T is None)."""
        raise NotImplementedError

    def deriv_bound(self, T=None):
        """Upper bound on |u'(t)| for 0 <= t <= T (almost everywhere)."""
        raise NotImplementedError

    def shifted(self, t0):
        """The schedule t -> u(t + t0)."""
        raise NotImplementedError

    def covers(self, T):
        return True

    def key(self):
        raise NotImplementedError

    def as_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Schedule):
    a: float

    def value(self, t):
        return self.a

    def derivative(self, t):
        return 0.0

    def sup_norm(self, T=None):
        return abs(self.a)

    def deriv_bound(self, T=None):
        return 0.0

    def shifted(self, t0):
        return self

    def key(self):
        return 'constant', self.a

    def as_dict(self):
        return {'type': 'constant', 'a': self.a}


@dataclass(frozen=True)
class Harmonic(Schedule):
    """a + b*cos(omega*t + phi)"""
    a: float
    b: float
    omega: float
    phi: float = 0.0

    def value(self, t):
        return self.a + self.b * np.cos(self.omega * t + self.phi)

    def derivative(self, t):
        return -self.b * self.omega * np.sin(self.omega * t + self.phi)

    def sup_norm(self, T=None):
        return abs(self.a) + abs(self.b)

    def deriv_bound(self, T=None):
        return abs(self.b) * abs(self.omega)

    def shifted(self, t0):
        return Harmonic(self.a, self.b, self.omega, self.phi + self.omega * t0)

    def key(self):
        return 'harmonic', self.a, self.b, self.omega, self.phi

    def as_dict(self):
        return {'type': 'harmonic', 'a': self.a, 'b': self.b, 'omega': self.omega, 'phi': self.phi}


@dataclass(frozen=True)
class PiecewiseLinear(Schedule):
    knots: tuple

    def __post_init__(self):
        knots = tuple((float(t), float(v)) for t, v in self.knots)
        if len(knots) < 1:
            raise ConfigError('piecewise-linear schedule needs at least one knot', 'schedule.knots')
        times = [t for t, _ in knots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError('knot times must be strictly increasing', 'schedule.knots')
        object.__setattr__(self, 'knots', knots)

    @property
    def _times(self):
        return np.array([t for t, _ in self.knots])

    @property
    def _values(self):
        return np.array([v for _, v in self.knots])

    def value(self, t):
        return float(np.interp(t, self._times, self._values))

    def covers(self, T):
        """True when the knots span [0, T]."""
        return self.knots[0][0] <= 0.0 and self.knots[-1][0] >= T

    def _slopes(self):
        if len(self.knots) < 2:
            return np.zeros(0)
        return np.diff(self._values) / np.diff(self._times)

    def derivative(self, t):
        slopes = self._slopes()
        times = self._times
        if slopes.size == 0 or t < times[0] or t > times[-1]:
            return 0.0
        segment = min(int(np.searchsorted(times, t, side='right')) - 1, slopes.size - 1)
        return float(slopes[max(segment, 0)])

    def sup_norm(self, T=None):
        if T is None:
            return float(np.max(np.abs(self._values)))
        points = [0.0, T] + [t for t, _ in self.knots if 0.0 <= t <= T]
        return max(abs(self.value(t)) for t in points)

    def deriv_bound(self, T=None):
        slopes = self._slopes()
        return float(np.max(np.abs(slopes))) if slopes.size else 0.0

    def shifted(self, t0):
        return PiecewiseLinear(tuple((t - t0, v) for t, v in self.knots))

    def key(self):
        return ('piecewise_linear',) + self.knots

    def as_dict(self):
        return {'type': 'piecewise_linear', 'knots': [list(k) for k in self.knots]}


def _number(d, key, field_name, default=None):
    value = d.get(key, default)
    if value is None:
        raise ConfigError('missing required number %r' % key, field_name)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError('%r must be a number, got %r' % (key, value), field_name)
    return float(value)


def schedule_from_dict(d, field_name='schedule'):
    if d is None:
        return Constant(1.0)
    if not isinstance(d, dict):
        raise ConfigError('expected an object', field_name)
    kind = d.get('type', 'constant')
    if kind == 'constant':
        return Constant(_number(d, 'a', field_name, 1.0))
    if kind == 'harmonic':
        return Harmonic(_number(d, 'a', field_name), _number(d, 'b', field_name),
                        _number(d, 'omega', field_name), _number(d, 'phi', field_name, 0.0))
    if kind == 'piecewise_linear':
        knots = d.get('knots')
        if not isinstance(knots, list) or not all(isinstance(k, (list, tuple)) and len(k) == 2 for k in knots):
            raise ConfigError('knots must be a list of [t, value] pairs', field_name + '.knots')
        return PiecewiseLinear(tuple(tuple(k) for k in knots))
    raise ConfigError('unknown schedule type %r' % (kind,), field_name + '.type')


@dataclass(frozen=True)
class TwoSiteTerm(object):
    """16 real coefficients over {I,X,Y,Z} x {I,X,Y,Z}; index 4a+b, a acts on the first edge site."""
    coefficients: tuple

    def __post_init__(self):
        coefficients = tuple(float(c) for c in self.coefficients)
        if len(coefficients) != 16:
            raise ConfigError('two-site term needs 16 coefficients, got %d' % len(coefficients), 'pauli')
        object.__setattr__(self, 'coefficients', coefficients)

    @classmethod
    def from_labels(cls, labels, field_name='pauli'):
        if not isinstance(labels, dict) or not labels:
            raise ConfigError('expected a nonempty {label: coefficient} object', field_name)
        coefficients = [0.0] * 16
        for label, c in labels.items():
            a, b = pauli.parse_label(label, 2, field_name)
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise ConfigError('coefficient of %r must be real, got %r' % (label, c), field_name)
            coefficients[4 * a + b] += float(c)
        return cls(tuple(coefficients))

    def swapped(self):
        return TwoSiteTerm(tuple(self.coefficients[4 * b + a] for a in range(4) for b in range(4)))

    def __add__(self, other):
        return TwoSiteTerm(tuple(a + b for a, b in zip(self.coefficients, other.coefficients)))

    def scaled(self, factor):
        return TwoSiteTerm(tuple(factor * c for c in self.coefficients))

    def matrix(self):
        return pauli.two_site(self.coefficients)

    def opnorm(self):
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix()))))

    def strings(self):
        for a in range(4):
            for b in range(4):
                c = self.coefficients[4 * a + b]
                if c:
                    yield (a, b), c

    def as_dict(self):
        return {pauli.LABELS[a] + pauli.LABELS[b]: c for (a, b), c in self.strings()}


@dataclass(frozen=True)
class EdgeTerm(object):
    """All components acting on one edge; ``components`` is a tuple of (Schedule, TwoSiteTerm)."""
    edge: tuple
    components: tuple

    def matrix(self, t):
        return sum(s.value(t) * term.matrix() for s, term in self.components)

    def sup_bound(self, T=None):
        return sum(s.sup_norm(T) * term.opnorm() for s, term in self.components)

    def deriv_bound(self, T=None):
        return sum(s.deriv_bound(T) * term.opnorm() for s, term in self.components)

    def shifted(self, t0):
        return EdgeTerm(self.edge, tuple((s.shifted(t0), term) for s, term in self.components))


def _normalize_edge(lattice, a, b, term, field_name):
    a = lattice.check_site(a, field_name)
    b = lattice.check_site(b, field_name)
    if not lattice.is_edge(a, b):
        raise ConfigError('%r-%r is not a nearest-neighbour edge' % (a, b), field_name)
    if row_major(b) < row_major(a):
        return (b, a), term.swapped()
    return (a, b), term


def merge_terms(entries):
    """
    Merge (edge, schedule, term) entries into one EdgeTerm per edge. Entries
    sharing an edge and schedule have their coefficients summed; distinct
    schedules are kept side by side.
    """
    by_edge = {}
    for edge, schedule, term in entries:
        components = by_edge.setdefault(edge, [])
        for i, (s, existing) in enumerate(components):
            if s == schedule:
                components[i] = (s, existing + term)
                break
        else:
            components.append((schedule, term))
    ordered = sorted(by_edge, key=lambda e: (row_major(e[0]), row_major(e[1])))
    return tuple(EdgeTerm(e, tuple(by_edge[e])) for e in ordered)


@dataclass(frozen=True)
class Hamiltonian(object):
    lattice: object
    terms: tuple

    @classmethod
    def build(cls, lattice, entries, field_name='hamiltonian.terms'):
        normalized = []
        for i, (edge, schedule, term) in enumerate(entries):
            try:
                a, b = edge
            except (TypeError, ValueError):
                raise ConfigError('edge must be a pair of sites', '%s[%d].edge' % (field_name, i))
            e, t = _normalize_edge(lattice, a, b, term, '%s[%d].edge' % (field_name, i))
            normalized.append((e, schedule, t))
        return cls(lattice, merge_terms(normalized))


def coupling_bound(H, T=None):
    """g = max_e sum_components sup|u_e| * ||h_e||; an upper bound on ||u_e(t) h_e||."""
    if not H.terms:
        return 0.0
    return max(term.sup_bound(T) for term in H.terms)


@dataclass(frozen=True)
class RegionHamiltonian(object):
    region: Region
    terms: tuple
    _operators: list = field(default=None, init=False, compare=False, hash=False, repr=False)

    @property
    def num_qubits(self):
        return len(self.region)

    def shifted(self, t0):
        return RegionHamiltonian(self.region, tuple(term.shifted(t0) for term in self.terms))

    def operators(self):
        """Per component: (schedule, sparse embedded matrix), built once."""
        if self._operators is None:
            m = self.num_qubits
            dim = 2 ** m
            ops = []
            for term in self.terms:
                qubits = [self.region.index(s) for s in term.edge]
                for schedule, two_site in term.components:
                    rows, cols, data = [], [], []
                    cols_all = np.arange(dim, dtype=np.int64)
                    for paulis, c in two_site.strings():
                        flip, phase = pauli.string_action(paulis, qubits, m)
                        rows.append(cols_all ^ flip)
                        cols.append(cols_all)
                        data.append(c * phase)
                    if not data:
                        continue
                    matrix = sparse.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                                               shape=(dim, dim)).tocsr()
                    matrix.sum_duplicates()
                    ops.append((schedule, matrix.tocoo()))
            object.__setattr__(self, '_operators', ops)
        return self._operators

    def signature(self, center):
        """Translation-invariant description of this region Hamiltonian relative to ``center``."""
        cx, cy = center
        shape = tuple((x - cx, y - cy) for x, y in self.region)
        terms = tuple(sorted(
            (((a[0] - cx, a[1] - cy), (b[0] - cx, b[1] - cy)),
             tuple(sorted((s.key(), term.coefficients) for s, term in components)))
            for (a, b), components in ((t.edge, t.components) for t in self.terms)))
        return shape, terms


def restrict(H, A, L):
    """H_A(t): the terms of H whose edge lies inside A and its L-boundary."""
    A = A if isinstance(A, Region) else Region.of(A)
    if len(A) == 0:
        raise ConfigError('region must be nonempty', 'A')
    for site in A:
        H.lattice.check_site(site, 'A')
    region = A.union(l_boundary(H.lattice, A, L)) if L >= 1 else A
    terms = tuple(term for term in H.terms if term.edge[0] in region and term.edge[1] in region)
    return RegionHamiltonian(region, terms)


def full_region_hamiltonian(H):
    return RegionHamiltonian(H.lattice.full_region(), H.terms)


def check_cap(HA, cap):
    if cap is not None and HA.num_qubits > cap:
        raise CapacityError('lightcone too large: %d qubits > cap %d' % (HA.num_qubits, cap))


def assemble(HA, t, cap=None):
    """Dense 2^m x 2^m matrix of H_A(t)."""
    check_cap(HA, cap)
    dim = 2 ** HA.num_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for schedule, matrix in HA.operators():
        u = schedule.value(t)
        if u:
            out[matrix.row, matrix.col] += u * matrix.data
    return out


def assemble_derivative(HA, t, cap=None):
    """Dense matrix of H_A'(t)."""
    check_cap(HA, cap)
    dim = 2 ** HA.num_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for schedule, matrix in HA.operators():
        du = schedule.derivative(t)
        if du:
            out[matrix.row, matrix.col] += du * matrix.data
    return out


def derivative_bound(HA, T):
    """Triangle-inequality bound on max_{0<=t<=T} ||H_A'(t)||."""
    return float(sum(term.deriv_bound(T) for term in HA.terms))


def random_term(rng):
    coefficients = rng.normal(size=16)
    coefficients[0] = 0.0
    term = TwoSiteTerm(tuple(coefficients))
    return term.scaled(1.0 / term.opnorm())


def random_schedule(rng, g):
    """Harmonic schedule with |a| + |b| <= g."""
    split = rng.uniform(0.2, 0.8)
    a = g * split * rng.choice([-1.0, 1.0])
    b = g * (1.0 - split) * rng.uniform(0.5, 1.0)
    return Harmonic(a, b, rng.uniform(0.5, 5.0), rng.uniform(0.0, 2 * np.pi))


def random_hamiltonian(lattice, g, rng):
    """One unit-norm random Pauli term per edge with a random Harmonic schedule bounded by ``g``."""
    entries = [(edge, random_schedule(rng, g), random_term(rng)) for edge in lattice.edges()]
    return Hamiltonian.build(lattice, entries)
