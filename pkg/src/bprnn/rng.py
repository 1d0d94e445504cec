"""Seedable, splittable random number generation.

One :class:`Rng` wraps a numpy PCG64 bit generator keyed by a
``SeedSequence``. Normal variates come from numpy's ziggurat sampler on
top of that stream; the exact draw sequence is therefore a documented,
deterministic function of the seed for a fixed numpy build. Child
generators come from ``SeedSequence.spawn``, which derives statistically
independent streams from (parent seed, split index).

An Rng is single-owner state: split before handing work to another
thread.
"""

import numpy as np

from .errors import ParameterError


class Rng:
    """Deterministic random stream with support for splitting."""

    def __init__(self, seed=None, _seq=None):
        self._seq = _seq if _seq is not None else np.random.SeedSequence(seed)
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    @property
    def entropy(self):
        """Root entropy of the underlying seed sequence."""
        return self._seq.entropy

    def split(self, n):
        """Derive ``n`` independent child generators.

        Children are a deterministic function of this generator's seed
        sequence and the running spawn count, not of how many values have
        been drawn from the parent.
        """
        if n < 1:
            raise ParameterError(f"cannot split into {n} children")
        return [Rng(_seq=s) for s in self._seq.spawn(n)]

    def normal(self, rows, cols, mean=0.0, std=1.0):
        """i.i.d. normal samples as a (rows, cols) float64 array."""
        if std < 0:
            raise ParameterError(f"std must be >= 0, got {std}")
        if rows < 1 or cols < 1:
            raise ParameterError(f"shape must be positive, got ({rows}, {cols})")
        if std == 0.0:
            return np.full((rows, cols), float(mean))
        x = self._gen.standard_normal((rows, cols))
        if std != 1.0:
            x *= std
        if mean != 0.0:
            x += mean
        return x

    def uniform(self, size=None, low=0.0, high=1.0):
        return self._gen.uniform(low, high, size=size)

    def integers(self, low, high, size=None):
        """Uniform integers in [low, high)."""
        return self._gen.integers(low, high, size=size)


def sample_gaussian(rng, rows, cols, mean, std):
    """Gaussian tensor draw; deterministic given the generator state."""
    return rng.normal(rows, cols, mean=mean, std=std)
