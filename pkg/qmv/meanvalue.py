"""
Lightcone mean value pipeline.

Each single-site factor O_j of a product observable is conjugated by the
propagator of the Hamiltonian restricted to its radius-L ball. The evolved
factors are grouped by the strip whose central region owns their site,
applied to |0...0> strip by strip (A strips as kets, B strips as bras) and
the two strip families are contracted to give the estimate

    mu~ = (x)_j <Psi_Bj| (x)_i |Psi_Ai>

The dense oracle evolves the full lattice state vector instead.
"""
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from cachetools import LRUCache

from . import pauli
from .errors import CapacityError, ConfigError, InvariantError
from .get_logger import get_logger
from .hamiltonian import check_cap, coupling_bound, restrict
from .integrators import dormand_prince
from .lattice import (PARTITION_A, PARTITION_B, Region, row_major, single_strip_partition,
                      strip_partition)
from .liebrobinson import lr_error, min_radius, split_budget
from .mps import MPS, dense_overlap, mpo_from_operator, sweep_overlap
from .propagator import (DP5, RK4, TROTTER, conjugate, conjugation_error_share, propagate, trotter_steps_for)
from .statevector import apply_operator, expectation, norm, zero_state
from .stop_watch import stopwatch

log = get_logger(__name__, logging.INFO)

DENSE = 'dense'
MPS_CONTRACTION = 'mps'
CONTRACTIONS = (DENSE, MPS_CONTRACTION)

NORM_TOLERANCE = 1e-12
IMAG_TOLERANCE = 1e-8


def parse_operator(value, field_name='observable'):
    """
    Single-site operator as Pauli coefficients (cI, cX, cY, cZ): a label
    ('I', 'X', 'Y', 'Z'), a {label: coefficient} object or a list of four
    real numbers.
    """
    if isinstance(value, str):
        label = value.upper()
        if label not in pauli.LABELS or len(label) != 1:
            raise ConfigError('unknown operator label %r' % (value,), field_name)
        coefficients = [0.0] * 4
        coefficients[pauli.LABELS.index(label)] = 1.0
        return tuple(coefficients)
    if isinstance(value, dict):
        coefficients = [0.0] * 4
        for label, c in value.items():
            (index,) = pauli.parse_label(label, 1, field_name)
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise ConfigError('coefficient of %r must be real, got %r' % (label, c), field_name)
            coefficients[index] += float(c)
        return tuple(coefficients)
    if isinstance(value, (list, tuple)) and len(value) == 4:
        if any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in value):
            raise ConfigError('coefficients must be real numbers, got %r' % (value,), field_name)
        return tuple(float(c) for c in value)
    raise ConfigError('expected a Pauli label, a {label: coefficient} object or four coefficients', field_name)


@dataclass(frozen=True)
class Observable(object):
    """Product observable (x)_j O_j; ``overrides`` is a tuple of (site, coefficients) pairs."""
    default: tuple = (0.0, 0.0, 0.0, 1.0)
    overrides: tuple = ()
    _by_site: dict = field(default=None, init=False, compare=False, hash=False, repr=False)

    def __post_init__(self):
        default = tuple(float(c) for c in self.default)
        overrides = tuple(sorted(((tuple(s), tuple(float(c) for c in coeffs)) for s, coeffs in self.overrides),
                                 key=lambda item: row_major(item[0])))
        if pauli.single_site_norm(default) > 1.0 + NORM_TOLERANCE:
            raise ConfigError('operator norm %.6g exceeds 1' % pauli.single_site_norm(default), 'observable.default')
        for site, coeffs in overrides:
            if pauli.single_site_norm(coeffs) > 1.0 + NORM_TOLERANCE:
                raise ConfigError('operator norm %.6g at %r exceeds 1' % (pauli.single_site_norm(coeffs), site),
                                  'observable.sites')
        object.__setattr__(self, 'default', default)
        object.__setattr__(self, 'overrides', overrides)
        object.__setattr__(self, '_by_site', dict(overrides))

    @classmethod
    def uniform(cls, label):
        return cls(parse_operator(label))

    def coefficients(self, site):
        return self._by_site.get(tuple(site), self.default)

    def matrix(self, site):
        return pauli.single_site(self.coefficients(site))

    def norm(self, site):
        return pauli.single_site_norm(self.coefficients(site))

    def zero_time_value(self, lattice):
        """prod_j <0|O_j|0> = prod_j (cI + cZ)."""
        return float(np.prod([c_i + c_z for c_i, _, _, c_z in map(self.coefficients, lattice.sites())]))

    def as_dict(self):
        return {
            'default': list(self.default),
            'sites': [{'site': list(s), 'op': list(c)} for s, c in self.overrides],
        }


@dataclass
class EvolvedObservable(object):
    site: tuple
    region: Region
    matrix: np.ndarray
    lr_error_share: float
    cs_error_share: float
    propagator: object = None
    cache_hit: bool = False

    @property
    def num_qubits(self):
        return len(self.region)


class PropagatorCache(object):
    """
    Lightcone propagators keyed by the translation-invariant signature of the
    restricted Hamiltonian, the evolution time and the solver settings.
    """

    def __init__(self, maxsize=4096, enabled=True):
        self.enabled = enabled and maxsize > 0
        self._cache = LRUCache(maxsize) if self.enabled else None
        self._lock = threading.Lock()
        self.hits = 0
        self.computed = 0

    def propagate(self, HA, center, T, solver, cap=None):
        """Returns ``(result, hit)``."""
        key = (HA.signature(center), float(T), solver)
        if self.enabled:
            with self._lock:
                result = self._cache.get(key)
                if result is not None:
                    self.hits += 1
                    return result, True
        result = propagate(HA, T, solver, cap=cap)
        with self._lock:
            self.computed += 1
            if self.enabled:
                self._cache[key] = result
        return result, False


def _site_operator(O_j):
    O_j = np.asarray(O_j)
    if O_j.shape == (4,):
        return pauli.single_site(O_j.real)
    if O_j.shape != (2, 2):
        raise ConfigError('single-site operator must be 2x2 or four Pauli coefficients', 'O_j')
    return O_j.astype(complex)


def _opnorm(matrix):
    return float(np.max(np.abs(np.linalg.eigvalsh(matrix))))


def lr_degree(lattice):
    """Degree entering the Lieb-Robinson bound; graphs of degree < 2 use 2."""
    return max(lattice.max_degree, 2)


def _solve_within(cache, HA, center, T, solver, obs_norm, target, cap, max_steps):
    """Propagate with solver parameters tightened until the conjugation share is <= target."""
    if target is None or obs_norm == 0:
        result, hit = cache.propagate(HA, center, T, solver, cap)
        return result, hit, conjugation_error_share(result, obs_norm)

    if solver.method == TROTTER:
        steps = trotter_steps_for(HA, obs_norm, T, target, min_steps=solver.steps)
        if max_steps is not None and steps > max_steps:
            raise CapacityError('Trotter steps %d exceed limit %d at %r; raise the budget or the limit'
                                % (steps, max_steps, center))
        result, hit = cache.propagate(HA, center, T, replace(solver, steps=steps), cap)
        return result, hit, conjugation_error_share(result, obs_norm)

    if solver.method == DP5:
        tol = min(solver.tol, target / (20.0 * obs_norm))
        result, hit = cache.propagate(HA, center, T, replace(solver, tol=tol), cap)
        return result, hit, conjugation_error_share(result, obs_norm)

    steps = solver.steps
    while True:
        result, hit = cache.propagate(HA, center, T, replace(solver, steps=steps), cap)
        share = conjugation_error_share(result, obs_norm)
        if share <= target:
            return result, hit, share
        steps *= 2
        if max_steps is not None and steps > max_steps:
            raise CapacityError('RK4 steps %d exceed limit %d at %r; raise the budget or use dp5'
                                % (steps, max_steps, center))


def evolved_observable(j, O_j, H, L, T, solver, cap=None, cache=None, target=None, max_steps=None):
    """
    O~_j = V^+ O_j V on ball(j, L) where V propagates the Hamiltonian restricted
    to the ball. With ``target`` the solver is tightened until the conjugation
    error share is at most ``target``.

    A scalar O_j commutes with every propagator and is returned unevolved on {j}.
    """
    j = H.lattice.check_site(j, 'site')
    O = _site_operator(O_j)
    obs_norm = _opnorm(O)
    cache = cache if cache is not None else PropagatorCache(enabled=False)

    if O[0, 1] == 0 and O[1, 0] == 0 and O[0, 0] == O[1, 1]:
        return EvolvedObservable(j, Region.of([j]), O, 0.0, 0.0)

    HA = restrict(H, [j], L)
    check_cap(HA, cap)
    result, hit, cs_share = _solve_within(cache, HA, j, T, solver, obs_norm, target, cap, max_steps)

    embedded = pauli.embed(O, [HA.region.index(j)], HA.num_qubits)
    matrix = conjugate(result, embedded)
    lr_share = lr_error(L, T, coupling_bound(H, T), lr_degree(H.lattice), 1, obs_norm)
    return EvolvedObservable(j, HA.region, matrix, lr_share, cs_share, propagator=result, cache_hit=hit)


@dataclass
class StripState(object):
    """(prod O~)|0...0> on one strip, as a dense tensor or as an MPS over its rows."""
    strip: Region
    dense: np.ndarray = None
    mps: MPS = None

    @property
    def columns(self):
        return self.strip.columns()

    def to_dense(self):
        if self.dense is not None:
            return self.dense
        return self.mps.to_dense()


def _check_inside(op, strip):
    if not op.region.issubset(strip):
        raise InvariantError('operator region of %r escapes its strip (margin broken)' % (op.site,))


def _mpo_layout(op, columns):
    """Consecutive row groups of the op region: (first row, group sizes, qubit positions per row)."""
    rows = op.region.rows()
    by_row = {y: [] for y in range(rows[0], rows[-1] + 1)}
    for x, y in op.region:
        by_row[y].append(columns.index(x))
    ordered = [by_row[y] for y in range(rows[0], rows[-1] + 1)]
    return rows[0], [len(p) for p in ordered], ordered


def strip_state(strip, ops, contraction=DENSE, cap=None, cutoff=1e-12, adjoint=False):
    """
    Apply ``ops`` to |0...0> on ``strip`` in ascending row-major order of
    their sites, or in descending order with ``adjoint`` (the bra side state
    (prod O~)^+ |0>).
    """
    strip = strip if isinstance(strip, Region) else Region.of(strip)
    if contraction not in CONTRACTIONS:
        raise ConfigError('unknown contraction %r' % (contraction,), 'backend.contraction')
    ordered = sorted(ops, key=lambda op: row_major(op.site), reverse=adjoint)
    for op in ordered:
        _check_inside(op, strip)

    if contraction == DENSE:
        if cap is not None and len(strip) > cap:
            raise CapacityError('strip of %d qubits exceeds dense cap %d' % (len(strip), cap))
        state = zero_state(len(strip))
        for op in ordered:
            state = apply_operator(state, op.matrix, [strip.index(s) for s in op.region])
        return StripState(strip, dense=state)

    columns = strip.columns()
    mps = MPS.zero([len(columns)] * len(strip.rows()))
    first_row = strip.rows()[0]
    for op in ordered:
        start, groups, positions = _mpo_layout(op, columns)
        mpo = mpo_from_operator(op.matrix, groups, cutoff=cutoff)
        mps.apply_mpo(start - first_row, mpo, positions)
        mps.compress(cutoff)
    log.debug('strip %r..%r: max bond %d', columns[0], columns[-1], mps.max_bond)
    return StripState(strip, mps=mps)


def contract(states_a, states_b, dense_cap=None, boundary_cap=None):
    """<(x) Psi_B | (x) Psi_A> over the whole lattice."""
    covered_a = [s for state in states_a for s in state.strip]
    covered_b = [s for state in states_b for s in state.strip]
    if len(set(covered_a)) != len(covered_a) or set(covered_a) != set(covered_b):
        raise ConfigError('A and B strip states do not cover the same sites', 'states')

    if all(state.mps is not None for state in states_a + states_b):
        return sweep_overlap([(state.columns, state.mps) for state in states_b],
                             [(state.columns, state.mps) for state in states_a],
                             boundary_cap=boundary_cap)
    return dense_overlap([(state.columns[0], list(state.strip), state.to_dense()) for state in states_b],
                         [(state.columns[0], list(state.strip), state.to_dense()) for state in states_a],
                         cap=dense_cap)


def decomposition_for(lattice, L):
    if 4 * L > lattice.nx:
        log.info('lattice narrower than 4L=%d: using a single strip', 4 * L)
        return single_strip_partition(lattice, L)
    return strip_partition(lattice, L)


def cost_estimate(L, n):
    """Dominant analytic sizes for lightcone radius L on n sites."""
    m = 2 * L * L + 2 * L + 1
    return {
        'lightcone_qubits': m,
        'propagator_bytes': 16 * 4 ** m,
        'matmul_work': float(n * (2.0 ** m) ** math.log2(7)),
    }


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _solver_summary(solver, evolved, cache):
    propagators = [op.propagator for op in evolved if op.propagator is not None]
    summary = dict(solver.as_dict())
    summary['propagators_computed'] = cache.computed
    summary['propagator_cache_hits'] = cache.hits
    summary['max_unitarity_defect'] = max([p.unitarity_defect for p in propagators] or [0.0])
    if solver.method == TROTTER:
        steps = [p.params['steps'] for p in propagators] or [solver.steps]
        summary['trotter_steps'] = {'min': min(steps), 'max': max(steps)}
    elif solver.method == DP5:
        summary['tol_used'] = min([p.params['tol'] for p in propagators] or [solver.tol])
    elif solver.method == RK4:
        summary['rk4_steps_max'] = max([p.params['steps'] for p in propagators] or [solver.steps])
    return summary


def mean_value(config, threads=None):
    """
    Run the full pipeline for a RunConfig and return the report dict:
    mu_estimate, im_residual, lightcone_radius, budget, per-stage timings,
    backend, solver summary and cost estimate.
    """
    lattice, H, T = config.lattice, config.hamiltonian, config.time
    backend, solver, observable = config.backend, config.solver, config.observable
    threads = threads or backend.threads
    timings = {}
    n = lattice.n

    with stopwatch('budget', timings):
        budget = split_budget(config.delta, n, backend.lr_fraction)

    with stopwatch('radius', timings):
        g = coupling_bound(H, T)
        degree = lr_degree(lattice)
        if backend.radius is not None:
            L = backend.radius
            log.info('lightcone radius forced to L=%d', L)
        else:
            L = min_radius(T, g, degree, n, budget.eps_lr_total, backend.lightcone_cap)

    with stopwatch('partition', timings):
        decomposition = decomposition_for(lattice, L)

    cache = PropagatorCache(backend.cache_size, enabled=backend.propagator_cache)
    max_steps = backend.trotter_max_steps if solver.method == TROTTER else backend.rk4_max_steps

    def evolve(site):
        return evolved_observable(site, observable.matrix(site), H, L, T, solver, cap=backend.lightcone_cap,
                                  cache=cache, target=budget.per_site_cs, max_steps=max_steps)

    with stopwatch('observables', timings):
        evolved = _map(evolve, lattice.sites(), threads)
    log.info('evolved %d observables: %d propagators computed, %d cache hits', len(evolved), cache.computed,
             cache.hits)

    by_strip = {}
    for op in evolved:
        by_strip.setdefault(decomposition.assignment[op.site], []).append(op)

    def build(key):
        partition, i = key
        return strip_state(decomposition.strips(partition)[i], by_strip.get(key, []),
                           contraction=backend.contraction, cap=backend.dense_cap, cutoff=backend.mps_cutoff,
                           adjoint=(partition == PARTITION_B))

    keys_a = [(PARTITION_A, i) for i in range(len(decomposition.strips_a))]
    keys_b = [(PARTITION_B, i) for i in range(len(decomposition.strips_b))]
    with stopwatch('strip_states', timings):
        states = _map(build, keys_a + keys_b, threads)
    states_a, states_b = states[:len(keys_a)], states[len(keys_a):]

    with stopwatch('contract', timings):
        mu = contract(states_a, states_b, dense_cap=backend.dense_cap, boundary_cap=backend.boundary_cap)

    certified_lr = float(sum(op.lr_error_share for op in evolved))
    certified_cs = float(sum(op.cs_error_share for op in evolved))
    certified = certified_lr + certified_cs

    # truncated factors commute only up to the lightcone error, so Im mu~ is bounded by it
    if abs(mu.imag) > IMAG_TOLERANCE:
        log.warning('imaginary residual %.3e (certified bound %.3e)', abs(mu.imag), certified)
    if abs(mu.imag) > max(IMAG_TOLERANCE, certified):
        raise InvariantError('imaginary residual %.3e exceeds the certified bound %.3e' % (abs(mu.imag), certified))
    if abs(mu) > 1.0 + max(budget.delta_total, certified):
        raise InvariantError('|mu| = %.6f exceeds 1 + delta' % abs(mu))
    if T == 0:
        expected = observable.zero_time_value(lattice)
        if abs(mu.real - expected) > max(IMAG_TOLERANCE, certified):
            raise InvariantError('mu~ = %.12f at T = 0 differs from the product state value %.12f'
                                 % (mu.real, expected))

    log.info('mu~ = %.12f (L=%d, certified bound %.3e)', mu.real, L, certified)
    report_budget = budget.as_dict()
    report_budget.update({
        'allocated_lr': budget.eps_lr_total,
        'allocated_cs': budget.eps_cs_total,
        'lr': certified_lr,
        'cs': certified_cs,
        'certified': certified,
    })
    backend_summary = {
        'contraction': backend.contraction,
        'partition': 'single_strip' if 4 * L > lattice.nx else 'strips',
        'strips_a': len(keys_a),
        'strips_b': len(keys_b),
        'threads': threads,
    }
    if backend.contraction == MPS_CONTRACTION:
        backend_summary['max_bond'] = max(state.mps.max_bond for state in states)
    return {
        'mu_estimate': float(mu.real),
        'im_residual': float(abs(mu.imag)),
        'lightcone_radius': int(L),
        'budget': report_budget,
        'per_stage_timings_seconds': timings,
        'backend': backend_summary,
        'solver': _solver_summary(solver, evolved, cache),
        'cost': cost_estimate(L, n),
    }


def _edge_operators(H):
    sites = H.lattice.sites()
    index = {s: i for i, s in enumerate(sites)}
    operators = []
    for edge_term in H.terms:
        a, b = edge_term.edge
        operators.append(([index[a], index[b]], [(s, term.matrix()) for s, term in edge_term.components]))
    return operators


@stopwatch()
def oracle_state(config):
    """psi(T) on the full lattice from dp5 on the state vector; returns (state, stats)."""
    lattice, H, T = config.lattice, config.hamiltonian, config.time
    cap = config.backend.oracle_cap
    if lattice.n > cap:
        raise CapacityError('oracle needs %d qubits > cap %d' % (lattice.n, cap))
    operators = _edge_operators(H)

    def rhs(t, psi):
        out = np.zeros_like(psi)
        for qubits, components in operators:
            matrix = sum(schedule.value(t) * h for schedule, h in components)
            out += apply_operator(psi, matrix, qubits)
        return -1j * out

    psi0 = zero_state(lattice.n)
    if T == 0 or not operators:
        return psi0, {}
    psi, stats = dormand_prince(rhs, psi0, 0.0, T, config.backend.oracle_tol)
    return psi, stats.as_dict()


def oracle_report(config):
    psi, stats = oracle_state(config)
    ops = {q: config.observable.matrix(site) for q, site in enumerate(config.lattice.sites())
           if config.observable.coefficients(site) != (1.0, 0.0, 0.0, 0.0)}
    mu = expectation(psi, ops)
    residual = abs(norm(psi) - 1.0)
    log.info('oracle mu = %.12f (norm residual %.2e)', mu.real, residual)
    return {'mu_exact': float(mu.real), 'im_residual': float(abs(mu.imag)), 'norm_residual': float(residual),
            'integrator': stats}


def oracle_mean_value(config):
    """<psi(T)| (x)_j O_j |psi(T)> without any lightcone approximation."""
    return oracle_report(config)['mu_exact']

