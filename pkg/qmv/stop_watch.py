import functools
import logging
import time

from .get_logger import get_logger

log = get_logger(__name__, level=logging.DEBUG)


class stopwatch(object):
    """
    Easily measure elapsed time

    When a ``timings`` dict is supplied the elapsed seconds are accumulated
    into it under ``label``.
    """
    def __init__(self, label=None, timings=None):
        self.start_time = time.perf_counter()
        self.label = label
        self.timings = timings
        self.elapsed = 0.0

    def __repr__(self):
        if self.label:
            return 'exit: %s %.6fs' % (self.label, self.elapsed)
        return '%.6fs' % self.elapsed

    def __enter__(self):
        log.debug('enter %s', self.label)
        self.start_time = time.perf_counter()
        return self

    # noinspection PyUnusedLocal
    def __exit__(self, exc_type, exc_val, exc_tb):
        self.elapsed = time.perf_counter() - self.start_time
        if self.timings is not None:
            self.timings[self.label] = self.timings.get(self.label, 0.0) + self.elapsed
        log.debug(self)

    def __call__(self, f):
        @functools.wraps(f)
        def decorated(*args, **kwargs):
            if self.label is None:
                self.label = 'function: %s' % f.__name__
            with self:
                return f(*args, **kwargs)
        return decorated
