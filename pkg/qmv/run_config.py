"""
Process settings and per-run JSON configuration.

Settings come from ``qmv.default_settings`` overridden by the file named in
``QMV_SETTINGS``. A run configuration looks like::

    {
      "lattice": {"nx": 4, "ny": 4},
      "time": 0.03,
      "delta": 0.1,
      "hamiltonian": {
        "terms": [{"edge": [[0, 0], [1, 0]], "pauli": {"ZZ": 1.0},
                   "schedule": {"type": "harmonic", "a": 0.5, "b": 0.5, "omega": 1.0}}],
        "default_term": {"pauli": {"XX": 0.01}},
        "random": {"seed": 7, "g": 0.01}
      },
      "observable": {"default": "Z", "sites": [{"site": [1, 2], "op": "X"}]},
      "solver": {"method": "trotter", "steps": 1},
      "backend": {"contraction": "dense", "lightcone_cap": 14}
    }

Every field except ``lattice``, ``time`` and ``delta`` is optional.
"""
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
from flask import Config

from .errors import ConfigError
from .get_logger import get_logger
from .hamiltonian import Hamiltonian, TwoSiteTerm, random_hamiltonian, schedule_from_dict
from .lattice import Lattice
from .meanvalue import CONTRACTIONS, Observable, parse_operator
from .propagator import RK4, SolverSettings, TROTTER

log = get_logger(__name__, logging.INFO)

here = os.path.dirname(__file__)

SETTINGS_ENVVAR = 'QMV_SETTINGS'


def load_settings():
    config = Config(here)
    config.from_object('qmv.default_settings')
    if SETTINGS_ENVVAR in os.environ:
        config.from_envvar(SETTINGS_ENVVAR)
    return config


@dataclass(frozen=True)
class BackendSettings(object):
    contraction: str = 'dense'
    lightcone_cap: int = 14
    dense_cap: int = 20
    oracle_cap: int = 20
    boundary_cap: int = 2 ** 26
    lr_fraction: float = 0.5
    radius: int = None
    mps_cutoff: float = 1e-12
    threads: int = 1
    propagator_cache: bool = True
    cache_size: int = 4096
    trotter_max_steps: int = 200000
    rk4_max_steps: int = 12800
    oracle_tol: float = 1e-12

    def as_dict(self):
        return {
            'contraction': self.contraction,
            'lightcone_cap': self.lightcone_cap,
            'dense_cap': self.dense_cap,
            'oracle_cap': self.oracle_cap,
            'boundary_cap': self.boundary_cap,
            'lr_fraction': self.lr_fraction,
            'radius': self.radius,
            'mps_cutoff': self.mps_cutoff,
            'threads': self.threads,
            'propagator_cache': self.propagator_cache,
        }


@dataclass(frozen=True)
class RunConfig(object):
    lattice: Lattice
    time: float
    delta: float
    hamiltonian: Hamiltonian
    observable: Observable
    solver: SolverSettings
    backend: BackendSettings
    document: dict = field(default=None, compare=False, hash=False, repr=False)

    def with_backend(self, **changes):
        values = dict(self.backend.__dict__)
        values.update(changes)
        return RunConfig(self.lattice, self.time, self.delta, self.hamiltonian, self.observable, self.solver,
                         BackendSettings(**values), self.document)


def _section(doc, key, path, required=False):
    value = doc.get(key)
    if value is None:
        if required:
            raise ConfigError('missing required object', path)
        return {}
    if not isinstance(value, dict):
        raise ConfigError('expected an object', path)
    return value


def _number(doc, key, path, default=None, positive=False, non_negative=False):
    value = doc.get(key, default)
    if value is None:
        raise ConfigError('missing required number', path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError('expected a number, got %r' % (value,), path)
    if positive and not value > 0:
        raise ConfigError('must be positive, got %r' % (value,), path)
    if non_negative and value < 0:
        raise ConfigError('must be non-negative, got %r' % (value,), path)
    return float(value)


def _integer(doc, key, path, default=None, minimum=None):
    value = doc.get(key, default)
    if value is None:
        raise ConfigError('missing required integer', path)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError('expected an integer, got %r' % (value,), path)
    if minimum is not None and value < minimum:
        raise ConfigError('must be >= %d, got %r' % (minimum, value), path)
    return value


def _site(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 2 or \
            not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ConfigError('expected an [x, y] integer pair, got %r' % (value,), path)
    return tuple(value)


def _two_site_term(value, path):
    if isinstance(value, dict):
        return TwoSiteTerm.from_labels(value, path)
    if isinstance(value, list) and len(value) == 16:
        if any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in value):
            raise ConfigError('coefficients must be real numbers', path)
        return TwoSiteTerm(tuple(value))
    raise ConfigError('expected a {label: coefficient} object or 16 coefficients', path)


def parse_lattice(doc):
    section = _section(doc, 'lattice', 'lattice', required=True)
    return Lattice(_integer(section, 'nx', 'lattice.nx', minimum=1), _integer(section, 'ny', 'lattice.ny', minimum=1))


def _schedule(block, path, T):
    schedule = schedule_from_dict(block.get('schedule'), path)
    if T is not None and not schedule.covers(T):
        raise ConfigError('knots must span [0, %r]' % (T,), path + '.knots')
    return schedule


def parse_hamiltonian(doc, lattice, T=None):
    section = _section(doc, 'hamiltonian', 'hamiltonian')
    entries = []

    if 'random' in section:
        block = _section(section, 'random', 'hamiltonian.random')
        seed = _integer(block, 'seed', 'hamiltonian.random.seed', default=0)
        g = _number(block, 'g', 'hamiltonian.random.g', non_negative=True)
        if 'default_term' in section:
            raise ConfigError('cannot be combined with default_term', 'hamiltonian.random')
        H = random_hamiltonian(lattice, g, np.random.default_rng(seed))
        entries += [(t.edge, s, term) for t in H.terms for s, term in t.components]

    terms = section.get('terms', [])
    if not isinstance(terms, list):
        raise ConfigError('expected a list', 'hamiltonian.terms')
    listed = set()
    for i, item in enumerate(terms):
        path = 'hamiltonian.terms[%d]' % i
        if not isinstance(item, dict):
            raise ConfigError('expected an object', path)
        edge = item.get('edge')
        if not isinstance(edge, (list, tuple)) or len(edge) != 2:
            raise ConfigError('expected a pair of sites', path + '.edge')
        a, b = _site(edge[0], path + '.edge'), _site(edge[1], path + '.edge')
        if 'pauli' not in item:
            raise ConfigError('missing required Pauli coefficients', path + '.pauli')
        term = _two_site_term(item['pauli'], path + '.pauli')
        entries.append(((a, b), _schedule(item, path + '.schedule', T), term))
        listed.add(frozenset((a, b)))

    if 'default_term' in section:
        block = _section(section, 'default_term', 'hamiltonian.default_term')
        if 'pauli' not in block:
            raise ConfigError('missing required Pauli coefficients', 'hamiltonian.default_term.pauli')
        term = _two_site_term(block['pauli'], 'hamiltonian.default_term.pauli')
        schedule = _schedule(block, 'hamiltonian.default_term.schedule', T)
        entries += [(edge, schedule, term) for edge in lattice.edges() if frozenset(edge) not in listed]

    return Hamiltonian.build(lattice, entries, 'hamiltonian.terms')


def parse_observable(doc, lattice):
    section = _section(doc, 'observable', 'observable')
    default = parse_operator(section.get('default', 'Z'), 'observable.default')
    sites = section.get('sites', [])
    if not isinstance(sites, list):
        raise ConfigError('expected a list', 'observable.sites')
    overrides = []
    for i, item in enumerate(sites):
        path = 'observable.sites[%d]' % i
        if not isinstance(item, dict) or 'site' not in item or 'op' not in item:
            raise ConfigError('expected {"site": [x, y], "op": ...}', path)
        site = lattice.check_site(_site(item['site'], path + '.site'), path + '.site')
        overrides.append((site, parse_operator(item['op'], path + '.op')))
    return Observable(default, tuple(overrides))


def parse_solver(doc, settings):
    section = _section(doc, 'solver', 'solver')
    method = section.get('method', settings['SOLVER'])
    if method == TROTTER:
        default_steps = settings['TROTTER_MIN_STEPS']
    elif method == RK4:
        default_steps = settings['RK4_STEPS']
    else:
        default_steps = 1
    steps = _integer(section, 'steps', 'solver.steps', default=default_steps, minimum=1)
    tol = _number(section, 'tol', 'solver.tol', default=settings['ODE_TOL'], positive=True)
    sample = section.get('sample', settings['TROTTER_SAMPLE'])
    return SolverSettings(method, steps, tol, sample)


def parse_backend(doc, settings):
    section = _section(doc, 'backend', 'backend')
    contraction = section.get('contraction', settings['CONTRACTION'])
    if contraction not in CONTRACTIONS:
        raise ConfigError('unknown contraction %r (expected one of %s)' % (contraction, ', '.join(CONTRACTIONS)),
                          'backend.contraction')
    radius = section.get('radius')
    if radius is not None:
        radius = _integer(section, 'radius', 'backend.radius', minimum=1)
    lr_fraction = _number(section, 'lr_fraction', 'backend.lr_fraction', default=settings['LR_FRACTION'])
    if not 0 < lr_fraction < 1:
        raise ConfigError('must lie strictly between 0 and 1, got %r' % (lr_fraction,), 'backend.lr_fraction')
    propagator_cache = section.get('propagator_cache', True)
    if not isinstance(propagator_cache, bool):
        raise ConfigError('expected true or false', 'backend.propagator_cache')
    return BackendSettings(
        contraction=contraction,
        lightcone_cap=_integer(section, 'lightcone_cap', 'backend.lightcone_cap',
                               default=settings['LIGHTCONE_QUBIT_CAP'], minimum=1),
        dense_cap=_integer(section, 'dense_cap', 'backend.dense_cap', default=settings['DENSE_QUBIT_CAP'],
                           minimum=1),
        oracle_cap=_integer(section, 'oracle_cap', 'backend.oracle_cap', default=settings['ORACLE_QUBIT_CAP'],
                            minimum=1),
        boundary_cap=_integer(section, 'boundary_cap', 'backend.boundary_cap', default=settings['MPS_BOUNDARY_CAP'],
                              minimum=1),
        lr_fraction=lr_fraction,
        radius=radius,
        mps_cutoff=_number(section, 'mps_cutoff', 'backend.mps_cutoff', default=settings['MPS_CUTOFF'],
                           non_negative=True),
        threads=_integer(section, 'threads', 'backend.threads', default=settings['THREADS'], minimum=1),
        propagator_cache=propagator_cache,
        cache_size=settings['PROPAGATOR_CACHE_SIZE'],
        trotter_max_steps=settings['TROTTER_MAX_STEPS'],
        rk4_max_steps=settings['RK4_MAX_STEPS'],
        oracle_tol=settings['ORACLE_TOL'],
    )


def from_dict(doc, settings=None):
    if not isinstance(doc, dict):
        raise ConfigError('run configuration must be an object', 'config')
    settings = settings if settings is not None else load_settings()
    lattice = parse_lattice(doc)
    time = _number(doc, 'time', 'time', non_negative=True)
    delta = _number(doc, 'delta', 'delta', positive=True)
    config = RunConfig(
        lattice=lattice,
        time=time,
        delta=delta,
        hamiltonian=parse_hamiltonian(doc, lattice, time),
        observable=parse_observable(doc, lattice),
        solver=parse_solver(doc, settings),
        backend=parse_backend(doc, settings),
        document=doc,
    )
    log.debug('run config: %dx%d lattice, %d terms, T=%r, delta=%r', lattice.nx, lattice.ny,
              len(config.hamiltonian.terms), time, delta)
    return config


def load(path, settings=None):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (IOError, OSError) as e:
        raise ConfigError('cannot read %s: %s' % (path, e), 'config')
    except ValueError as e:
        raise ConfigError('invalid JSON in %s: %s' % (path, e), 'config')
    return from_dict(doc, settings)
