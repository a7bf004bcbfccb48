"""
Time-ordered propagators V(T) of region Hamiltonians, computed either by a
first-order product of exact short-time exponentials (Trotter) or by
integrating dU/dt = -i H(t) U with a Runge-Kutta method.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import integrators
from .errors import ConfigError
from .get_logger import get_logger
from .hamiltonian import assemble, check_cap, derivative_bound

log = get_logger(__name__, logging.INFO)

TROTTER = 'trotter'
RK4 = 'rk4'
DP5 = 'dp5'
METHODS = (TROTTER, RK4, DP5)

SAMPLE_RIGHT = 'right'
SAMPLE_MIDPOINT = 'midpoint'


@dataclass(frozen=True)
class SolverSettings(object):
    method: str = TROTTER
    steps: int = 1
    tol: float = 1e-12
    sample: str = SAMPLE_RIGHT

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError('unknown method %r (expected one of %s)' % (self.method, ', '.join(METHODS)),
                              'solver.method')
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError('steps must be a positive integer, got %r' % (self.steps,), 'solver.steps')
        if not self.tol > 0:
            raise ConfigError('tol must be positive, got %r' % (self.tol,), 'solver.tol')
        if self.sample not in (SAMPLE_RIGHT, SAMPLE_MIDPOINT):
            raise ConfigError('sample must be right or midpoint, got %r' % (self.sample,), 'solver.sample')

    def as_dict(self):
        if self.method == TROTTER:
            return {'method': self.method, 'steps': self.steps, 'sample': self.sample}
        if self.method == RK4:
            return {'method': self.method, 'steps': self.steps}
        return {'method': self.method, 'tol': self.tol}


@dataclass
class PropagatorResult(object):
    region: object
    matrix: np.ndarray
    method: str
    params: dict
    unitarity_defect: float
    cs_error_bound: float = None
    error_estimate: float = None
    stats: dict = field(default_factory=dict)

    def __repr__(self):
        return 'PropagatorResult(%s %r, qubits=%d, defect=%.2e)' % (
            self.method, self.params, len(self.region), self.unitarity_defect)


def expm_hermitian(H, dt):
    """exp(-i dt H) for Hermitian H via its eigendecomposition."""
    energies, vectors = linalg.eigh(H)
    return (vectors * np.exp(-1j * dt * energies)) @ vectors.conj().T


def unitarity_defect(U):
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2))


def reunitarize(U):
    """Closest unitary in the polar decomposition U = W P."""
    w, _ = linalg.polar(U)
    return w


def _check_time(T):
    if T < 0:
        raise ConfigError('evolution time must be non-negative, got %r' % (T,), 'time')


def _finish(HA, U, method, params, cs_error_bound=None, error_estimate=None, stats=None):
    defect = unitarity_defect(U)
    result = PropagatorResult(HA.region, reunitarize(U), method, params, defect,
                              cs_error_bound=cs_error_bound, error_estimate=error_estimate, stats=stats or {})
    log.debug('%r', result)
    return result


def trotter_propagate(HA, T, N, cap=None, sample=SAMPLE_RIGHT):
    """
    W(T, N) = prod_{j=1..N} exp(-i dt H_A(j dt)), dt = T/N, with the j = 1
    factor acting first. ``sample='midpoint'`` evaluates H_A at (j - 1/2) dt.
    """
    _check_time(T)
    if int(N) != N or N < 1:
        raise ConfigError('number of Trotter steps must be a positive integer, got %r' % (N,), 'solver.steps')
    dim = 2 ** HA.num_qubits
    check_cap(HA, cap)
    W = np.eye(dim, dtype=complex)
    dt = T / N
    if T > 0 and HA.terms:
        offset = 0.5 if sample == SAMPLE_MIDPOINT else 0.0
        for j in range(1, N + 1):
            W = expm_hermitian(assemble(HA, (j - offset) * dt), dt) @ W
    params = {'steps': int(N), 'sample': sample}
    return _finish(HA, W, TROTTER, params, cs_error_bound=trotter_error_bound(HA, 1.0, T, N),
                   stats={'exponentials': int(N)})


def _schrodinger(HA):
    def rhs(t, U):
        return -1j * (assemble(HA, t) @ U)
    return rhs


def ode_propagate(HA, T, method=DP5, tol=1e-12, steps=200, cap=None, estimate_error=True):
    """
    Integrate dU/dt = -i H_A(t) U from U(0) = I with fixed-step RK4 or
    adaptive Dormand-Prince 5(4). The result is projected back onto the
    unitaries; the pre-projection defect is recorded.
    """
    _check_time(T)
    if method not in (RK4, DP5):
        raise ConfigError('unknown ODE method %r' % (method,), 'solver.method')
    dim = 2 ** HA.num_qubits
    check_cap(HA, cap)
    identity = np.eye(dim, dtype=complex)
    if T == 0 or not HA.terms:
        params = {'tol': tol} if method == DP5 else {'steps': steps}
        return _finish(HA, identity, method, params, error_estimate=0.0)

    rhs = _schrodinger(HA)
    if method == RK4:
        U, stats = integrators.rk4(rhs, identity, 0.0, T, steps)
        estimate, used = None, steps
        if estimate_error:
            # params and stats describe the returned fine solution
            U_fine, stats = integrators.rk4(rhs, identity, 0.0, T, 2 * steps)
            estimate = float(np.linalg.norm(U - U_fine, 2)) / 15.0
            U, used = U_fine, 2 * steps
        return _finish(HA, U, RK4, {'steps': used}, error_estimate=estimate, stats=stats.as_dict())

    U, stats = integrators.dormand_prince(rhs, identity, 0.0, T, tol)
    return _finish(HA, U, DP5, {'tol': tol}, error_estimate=10.0 * tol, stats=stats.as_dict())


def trotter_error_bound(HA, OA_norm, T, N):
    """epsilon^CS = (6 T^2 / N) ||O_A|| max_t ||H_A'(t)||"""
    if OA_norm < 0:
        raise ConfigError('operator norm must be non-negative', 'OA_norm')
    return 6.0 * T ** 2 / N * OA_norm * derivative_bound(HA, T)


def trotter_steps_for(HA, OA_norm, T, target, min_steps=1):
    """Smallest N >= min_steps whose Trotter bound is <= target."""
    slope = 6.0 * T ** 2 * OA_norm * derivative_bound(HA, T)
    if slope == 0:
        return int(min_steps)
    return max(int(min_steps), int(np.ceil(slope / target)))


def propagate(HA, T, solver, cap=None):
    """Dispatch on ``solver.method``; Trotter results carry their epsilon^CS bound for a unit-norm observable."""
    if solver.method == TROTTER:
        return trotter_propagate(HA, T, solver.steps, cap=cap, sample=solver.sample)
    return ode_propagate(HA, T, method=solver.method, tol=solver.tol, steps=solver.steps, cap=cap)


def conjugation_error_share(result, OA_norm):
    """Contribution of one propagator to the epsilon^CS total."""
    if result.cs_error_bound is not None:
        return OA_norm * result.cs_error_bound
    # heuristic for ODE methods: ||W^+ O W - V^+ O V|| <= 2 ||O|| ||W - V||
    return 2.0 * OA_norm * (result.error_estimate or 0.0)


def conjugate(V, OA):
    """V^+ O_A V, Hermitized."""
    matrix = V.matrix if isinstance(V, PropagatorResult) else V
    OA = np.asarray(OA)
    if OA.shape != matrix.shape:
        raise ConfigError('dimension mismatch: operator %r vs propagator %r' % (OA.shape, matrix.shape), 'OA')
    out = matrix.conj().T @ OA @ matrix
    return 0.5 * (out + out.conj().T)
