"""Portable seeded random numbers.

The generator is SplitMix64, so streams can be reproduced bit-for-bit in any
language with 64-bit unsigned arithmetic::

    state = (state + 0x9E3779B97F4A7C15) mod 2**64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    return z ^ (z >> 31)

Uniforms in [0, 1) take the top 53 bits: ``(next() >> 11) * 2**-53``.
Standard normals use the Box-Muller cosine branch on two fresh uniforms
``u1, u2`` with ``u1`` mapped to (0, 1] via ``1 - u1``:
``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``. No spare value is cached.
"""

import math

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, low=0.0, high=1.0):
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return low + (high - low) * u

    def normal(self):
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, n):
        return np.array([self.normal() for _ in range(n)])

    def multivariate_normal(self, cov):
        """Zero-mean sample with covariance ``cov`` (PSD allowed).

        Diagonal covariances scale independent normals directly, which keeps
        the stream independent of the platform's eigensolver.
        """
        cov = np.asarray(cov, dtype=float)
        d = cov.shape[0]
        if not np.any(cov - np.diag(np.diag(cov))):
            return np.sqrt(np.clip(np.diag(cov), 0.0, None)) * self.normals(d)
        w, U = np.linalg.eigh(0.5 * (cov + cov.T))
        L = U * np.sqrt(np.clip(w, 0.0, None))
        return L @ self.normals(d)

    def spawn(self, key):
        """Independent child stream derived from this seed and an integer key."""
        child = SplitMix64(self.state ^ ((int(key) * 0xD1B54A32D192ED03) & _MASK))
        child.next_u64()
        return child
