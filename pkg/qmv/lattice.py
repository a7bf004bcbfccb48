"""
Grid geometry for open-boundary 2D lattices: sites, edges, Manhattan balls,
L-boundaries, the two offset strip partitions and super-site blocks.

Sites are ``(x, y)`` tuples. Every ordered collection of sites uses row-major
order, i.e. sorted by ``(y, x)``; a state vector over a region puts the first
site on the most significant qubit.
"""
import logging
import threading
from dataclasses import dataclass, field

from cachetools import LRUCache, cached

from .errors import ConfigError, InvariantError
from .get_logger import get_logger

log = get_logger(__name__, logging.INFO)

BALL_CACHE = LRUCache(65536)
BALL_LOCK = threading.Lock()

PARTITION_A = 'A'
PARTITION_B = 'B'


def row_major(site):
    x, y = site
    return y, x


@dataclass(frozen=True)
class Lattice(object):
    nx: int
    ny: int

    def __post_init__(self):
        if int(self.nx) != self.nx or self.nx < 1:
            raise ConfigError('must be a positive integer, got %r' % (self.nx,), 'lattice.nx')
        if int(self.ny) != self.ny or self.ny < 1:
            raise ConfigError('must be a positive integer, got %r' % (self.ny,), 'lattice.ny')

    @property
    def n(self):
        return self.nx * self.ny

    def contains(self, site):
        x, y = site
        return 0 <= x < self.nx and 0 <= y < self.ny

    def check_site(self, site, field_name='site'):
        try:
            x, y = site
        except (TypeError, ValueError):
            raise ConfigError('expected an (x, y) pair, got %r' % (site,), field_name)
        if not self.contains((x, y)):
            raise ConfigError('site %r outside %dx%d lattice' % (site, self.nx, self.ny), field_name)
        return int(x), int(y)

    def sites(self):
        return [(x, y) for y in range(self.ny) for x in range(self.nx)]

    def edges(self):
        """Nearest-neighbour edges ``(a, b)`` with ``a`` before ``b`` in row-major order."""
        out = []
        for y in range(self.ny):
            for x in range(self.nx):
                if x + 1 < self.nx:
                    out.append(((x, y), (x + 1, y)))
                if y + 1 < self.ny:
                    out.append(((x, y), (x, y + 1)))
        return sorted(out, key=lambda e: (row_major(e[0]), row_major(e[1])))

    def is_edge(self, a, b):
        return self.contains(a) and self.contains(b) and distance(a, b) == 1

    def neighbours(self, site):
        x, y = site
        candidates = [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
        return [s for s in candidates if self.contains(s)]

    @property
    def max_degree(self):
        return max(len(self.neighbours(s)) for s in self.sites())

    def full_region(self):
        return Region.of(self.sites())


@dataclass(frozen=True)
class Region(object):
    sites: tuple = ()
    _index: dict = field(default=None, init=False, compare=False, hash=False, repr=False)

    def __post_init__(self):
        ordered = tuple(sorted(set((int(x), int(y)) for x, y in self.sites), key=row_major))
        object.__setattr__(self, 'sites', ordered)
        object.__setattr__(self, '_index', {s: i for i, s in enumerate(ordered)})

    @classmethod
    def of(cls, sites):
        return cls(tuple(tuple(s) for s in sites))

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, site):
        return tuple(site) in self._index

    def index(self, site):
        return self._index[tuple(site)]

    def issubset(self, other):
        return all(s in other for s in self.sites)

    def union(self, other):
        return Region.of(self.sites + tuple(other))

    def columns(self):
        return sorted(set(x for x, _ in self.sites))

    def rows(self):
        return sorted(set(y for _, y in self.sites))


def distance(a, b):
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def ball(lattice, j, L):
    """All sites at Manhattan distance <= L from ``j``, row-major ordered."""
    site = lattice.check_site(j)
    if L < 0 or int(L) != L:
        raise ConfigError('radius must be a non-negative integer, got %r' % (L,), 'L')
    return _ball(lattice, site, int(L))


@cached(BALL_CACHE, lock=BALL_LOCK)
def _ball(lattice, j, L):
    x0, y0 = j
    sites = []
    for y in range(max(0, y0 - L), min(lattice.ny, y0 + L + 1)):
        reach = L - abs(y - y0)
        for x in range(max(0, x0 - reach), min(lattice.nx, x0 + reach + 1)):
            sites.append((x, y))
    return Region.of(sites)


def l_boundary(lattice, A, L):
    """Sites at graph distance 1..L from region ``A``."""
    A = A if isinstance(A, Region) else Region.of(A)
    if len(A) == 0:
        raise ConfigError('region must be nonempty', 'A')
    if L < 1:
        raise ConfigError('radius must be positive, got %r' % (L,), 'L')
    grown = set()
    for site in A:
        grown.update(ball(lattice, site, L))
    return Region.of(s for s in grown if s not in A)


@dataclass(frozen=True)
class StripDecomposition(object):
    lattice: Lattice
    L: int
    strips_a: tuple
    strips_b: tuple
    centers_a: tuple
    centers_b: tuple
    assignment: dict = field(compare=False, hash=False)

    def strips(self, partition):
        return self.strips_a if partition == PARTITION_A else self.strips_b

    def centers(self, partition):
        return self.centers_a if partition == PARTITION_A else self.centers_b


def _column_block(lattice, start, stop):
    return Region.of((x, y) for y in range(lattice.ny) for x in range(start, stop))


def _build_decomposition(lattice, L, a_bounds, b_bounds):
    strips_a = tuple(_column_block(lattice, *s) for s, _ in a_bounds)
    centers_a = tuple(_column_block(lattice, *c) for _, c in a_bounds)
    strips_b = tuple(_column_block(lattice, *s) for s, _ in b_bounds)
    centers_b = tuple(_column_block(lattice, *c) for _, c in b_bounds)

    assignment = {}
    for partition, centers in ((PARTITION_A, centers_a), (PARTITION_B, centers_b)):
        for i, center in enumerate(centers):
            for site in center:
                if site in assignment:
                    raise InvariantError('site %r assigned to two central regions' % (site,))
                assignment[site] = (partition, i)
    if len(assignment) != lattice.n:
        raise InvariantError('central regions cover %d of %d sites' % (len(assignment), lattice.n))

    decomposition = StripDecomposition(lattice, L, strips_a, strips_b, centers_a, centers_b, assignment)
    verify_margins(decomposition)
    return decomposition


def verify_margins(decomposition):
    """Every centre site keeps its radius-L ball inside its own strip; strips of one partition tile the lattice."""
    lattice, L = decomposition.lattice, decomposition.L
    for partition in (PARTITION_A, PARTITION_B):
        strips = decomposition.strips(partition)
        covered = [s for strip in strips for s in strip]
        if len(covered) != lattice.n or len(set(covered)) != lattice.n:
            raise InvariantError('partition %s strips do not tile the lattice' % partition)
        for strip, center in zip(strips, decomposition.centers(partition)):
            for site in center:
                if not ball(lattice, site, L).issubset(strip):
                    raise InvariantError('margin violated at %r in partition %s' % (site, partition))


def strip_partition(lattice, L):
    """
    Two offset partitions of the lattice into column strips of width 4L whose
    width-2L centres tile the lattice.

    The last A strip absorbs the remainder columns when nx is not a multiple
    of 4L, widening its centre. B strips are shifted by 2L, with narrower
    edge strips at both lattice ends.
    """
    if L < 1:
        raise ConfigError('radius must be positive, got %r' % (L,), 'L')
    width = 4 * L
    if width > lattice.nx:
        raise ConfigError('lattice too narrow for this radius (4L=%d > nx=%d)' % (width, lattice.nx), 'L')

    k = lattice.nx // width
    a_bounds = []
    for i in range(k):
        stop = (i + 1) * width if i < k - 1 else lattice.nx
        center_stop = i * width + 3 * L if i < k - 1 else lattice.nx - L
        a_bounds.append(((i * width, stop), (i * width + L, center_stop)))

    b_bounds = [((0, 2 * L), (0, L))]
    for i in range(k - 1):
        b_bounds.append(((i * width + 2 * L, (i + 1) * width + 2 * L), (i * width + 3 * L, (i + 1) * width + L)))
    b_bounds.append((((k - 1) * width + 2 * L, lattice.nx), (lattice.nx - L, lattice.nx)))

    log.debug('strip partition %dx%d L=%d: A=%r B=%r', lattice.nx, lattice.ny, L, a_bounds, b_bounds)
    return _build_decomposition(lattice, L, a_bounds, b_bounds)


def single_strip_partition(lattice, L):
    """Degenerate decomposition for lattices narrower than one strip: A is the whole lattice, B has an empty centre."""
    return _build_decomposition(lattice, L, [((0, lattice.nx), (0, lattice.nx))], [((0, lattice.nx), (0, 0))])


def super_sites(lattice, L):
    """Disjoint 2L x 2L blocks covering the lattice, row-major by block; edge blocks are truncated."""
    if L < 1:
        raise ConfigError('radius must be positive, got %r' % (L,), 'L')
    size = 2 * L
    blocks = []
    for by in range(0, lattice.ny, size):
        for bx in range(0, lattice.nx, size):
            blocks.append(Region.of((x, y)
                                    for y in range(by, min(by + size, lattice.ny))
                                    for x in range(bx, min(bx + size, lattice.nx))))
    return blocks
