"""
Explicit Runge-Kutta integrators for linear Schrodinger-type systems
dy/dt = f(t, y) over complex arrays: classical fixed-step RK4 and the
adaptive Dormand-Prince 5(4) pair.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .errors import StiffnessError
from .get_logger import get_logger

log = get_logger(__name__, logging.INFO)


@dataclass
class IntegrationStats(object):
    steps: int = 0
    rejected: int = 0
    evaluations: int = 0

    def as_dict(self):
        return {'steps': self.steps, 'rejected': self.rejected, 'evaluations': self.evaluations}


def rk4(rhs, y0, t0, t1, steps):
    """Classical fourth-order Runge-Kutta with ``steps`` equal steps."""
    stats = IntegrationStats()
    y = np.array(y0, dtype=complex)
    if t1 == t0:
        return y, stats
    h = (t1 - t0) / steps
    for i in range(steps):
        t = t0 + i * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        stats.steps += 1
        stats.evaluations += 4
    return y, stats


class DormandPrince54(object):
    """
    Dormand-Prince 5(4) pair with the FSAL property. The fifth-order solution
    is propagated; the embedded fourth-order solution drives step control.

    The local error estimate (Frobenius norm) is held below ``tol * h / span``
    so that the accumulated error over the whole interval stays near ``tol``;
    unitary flows do not amplify earlier errors.
    """

    c = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)

    a = (
        (),
        (1 / 5,),
        (3 / 40, 9 / 40),
        (44 / 45, -56 / 15, 32 / 9),
        (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
        (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
        (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
    )

    b = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)

    # b - b_hat
    e = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

    safety = 0.9
    min_factor = 0.2
    max_factor = 5.0

    def __init__(self, tol, max_steps=1000000):
        self.tol = tol
        self.max_steps = max_steps

    def integrate(self, rhs, y0, t0, t1):
        stats = IntegrationStats()
        y = np.array(y0, dtype=complex)
        span = t1 - t0
        if span == 0:
            return y, stats

        k1 = rhs(t0, y)
        stats.evaluations += 1
        rate = np.linalg.norm(k1) / max(np.linalg.norm(y), 1e-300)
        h = min(span, 0.1 / rate) if rate > 0 else span
        t = t0

        while t < t1:
            if stats.steps + stats.rejected >= self.max_steps:
                raise StiffnessError('stiffness failure: tighten cap or use Trotter (step limit %d reached)'
                                     % self.max_steps)
            h = min(h, t1 - t)
            if h < 1e-14 * max(span, abs(t)):
                raise StiffnessError('stiffness failure: tighten cap or use Trotter (step size %g at t=%g)' % (h, t))

            k = [k1]
            for i in range(1, 7):
                increment = sum(a_ij * k_j for a_ij, k_j in zip(self.a[i], k) if a_ij)
                k.append(rhs(t + self.c[i] * h, y + h * increment))
            stats.evaluations += 6

            y_new = y + h * sum(b_i * k_i for b_i, k_i in zip(self.b, k) if b_i)
            error = h * np.linalg.norm(sum(e_i * k_i for e_i, k_i in zip(self.e, k) if e_i))
            target = self.tol * h / span

            if error <= target:
                t = t + h if t1 - t - h > 1e-15 * span else t1
                y = y_new
                k1 = k[6]
                stats.steps += 1
            else:
                stats.rejected += 1

            if error == 0:
                factor = self.max_factor
            else:
                factor = self.safety * (target / error) ** 0.25
            h = h * min(self.max_factor, max(self.min_factor, factor))

        log.debug('dp5: %d steps, %d rejected', stats.steps, stats.rejected)
        return y, stats


def dormand_prince(rhs, y0, t0, t1, tol, max_steps=1000000):
    return DormandPrince54(tol, max_steps).integrate(rhs, y0, t0, t1)
