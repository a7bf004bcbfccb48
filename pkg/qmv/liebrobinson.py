"""
Lieb-Robinson lightcone error, minimal radius selection and the split of the
total error budget between lightcone truncation (LR), propagator computation
(CS) and strip contraction (SSC).

The closed form reads the degree symbol inside the logarithm as the maximum
vertex degree of the interaction graph.
"""
import logging
import math
from dataclasses import dataclass

from .errors import ConfigError, InfeasibleError
from .get_logger import get_logger

log = get_logger(__name__, logging.INFO)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

_degree_notice_logged = False


def log_degree_interpretation():
    global _degree_notice_logged
    if not _degree_notice_logged:
        log.warning('Lieb-Robinson bound: (Delta - 1) factor uses the maximum lattice degree Delta')
        _degree_notice_logged = True


@dataclass(frozen=True)
class ErrorBudget(object):
    delta_total: float
    eps_lr_total: float
    eps_cs_total: float
    eps_ssc: float
    per_site_lr: float
    per_site_cs: float

    def as_dict(self):
        return {
            'delta': self.delta_total,
            'lr': self.eps_lr_total,
            'cs': self.eps_cs_total,
            'ssc': self.eps_ssc,
            'per_site_lr': self.per_site_lr,
            'per_site_cs': self.per_site_cs,
        }


def lr_error(L, T, g, degree, region_size=1, obs_norm=1.0):
    """
    sqrt(2/pi) |A| ||O_A|| (4 g T (Delta - 1) / L)^L L^(-1/2)

    evaluated in log space. Zero for T <= 0 or g == 0.
    """
    if L < 1:
        raise ConfigError('radius must be >= 1, got %r' % (L,), 'L')
    if degree < 2:
        raise ConfigError('degree must be >= 2, got %r' % (degree,), 'degree')
    if g < 0:
        raise ConfigError('coupling bound must be non-negative, got %r' % (g,), 'g')
    if T <= 0 or g == 0 or region_size == 0 or obs_norm == 0:
        return 0.0
    exponent = -L * (math.log(L) - math.log(T) - math.log(4.0 * g * (degree - 1))) - 0.5 * math.log(L)
    return SQRT_2_OVER_PI * region_size * obs_norm * math.exp(exponent)


def max_radius_for_cap(m_cap):
    """Largest L with 2L^2 + 2L + 1 <= m_cap (0 when even L = 1 does not fit)."""
    L = 0
    while 2 * (L + 1) ** 2 + 2 * (L + 1) + 1 <= m_cap:
        L += 1
    return L


def min_radius(T, g, degree, n, lr_budget, m_cap):
    """Smallest L >= 1 with n * lr_error(L) <= lr_budget and a full ball within ``m_cap`` qubits."""
    if not lr_budget > 0:
        raise ConfigError('lightcone budget must be positive, got %r' % (lr_budget,), 'budget')
    log_degree_interpretation()
    L_max = max_radius_for_cap(m_cap)
    for L in range(1, L_max + 1):
        if n * lr_error(L, T, g, degree) <= lr_budget:
            log.info('lightcone radius L=%d (n*eps=%.3e <= %.3e)', L, n * lr_error(L, T, g, degree), lr_budget)
            return L
    raise InfeasibleError('infeasible: increase delta, decrease T, or raise the qubit cap '
                          '(no L <= %d meets budget %.3e)' % (L_max, lr_budget))


def split_budget(delta, n, lr_fraction=0.5):
    """Split delta between LR and CS (SSC is exact, hence 0); per-site shares are totals / n."""
    if not delta > 0:
        raise ConfigError('delta must be positive, got %r' % (delta,), 'delta')
    if not 0 < lr_fraction < 1:
        raise ConfigError('lr_fraction must lie strictly between 0 and 1, got %r' % (lr_fraction,),
                          'backend.lr_fraction')
    if n < 1:
        raise ConfigError('number of sites must be positive', 'n')
    eps_lr = delta * lr_fraction
    eps_cs = delta - eps_lr
    return ErrorBudget(delta, eps_lr, eps_cs, 0.0, eps_lr / n, eps_cs / n)


def radius_table(T, g, degree, n, L_stop):
    """Rows (L, eps_LR(L), n * eps_LR(L)) for L = 1..L_stop."""
    return [(L, lr_error(L, T, g, degree), n * lr_error(L, T, g, degree)) for L in range(1, L_stop + 1)]
