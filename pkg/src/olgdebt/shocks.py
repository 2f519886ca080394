"""Counter-based productivity shock streams.

Every random quantity in the simulator is addressed as (master_seed,
stream_id, index) -> value, with no hidden generator state.  The mapping is
implemented on top of the Philox counter-based bit generator: each index owns
one 4-word Philox block, so the value at an index never depends on how many
draws were made before it or in which order.  This is what makes path-level
parallelism bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

__all__ = ["ShockStream", "draw_shocks", "draw_shock"]

# One double per Philox block; a vectorised batch therefore strides the raw
# uniform stream by this factor so that batch[i] == single draw at index i.
_WORDS_PER_INDEX = 4

# Keep uniforms strictly inside (0, 1) before the normal inverse cdf.
_U_LO = 1e-300
_U_HI = 1.0 - 1e-16


@dataclass(frozen=True)
class ShockStream:
    """Addressable i.i.d. shock source for one logical stream.

    The draw law is lognormal: ln A ~ Normal(mu, sigma^2), with (mu, sigma)
    supplied at draw time so one stream can serve several parameterisations
    of the same underlying uniforms (common random numbers).
    """

    master_seed: int
    stream_id: int

    def _bitgen(self, index: int = 0) -> Philox:
        bg = Philox(key=[np.uint64(self.master_seed), np.uint64(self.stream_id)])
        if index:
            bg.advance(index)
        return bg

    def uniform_at(self, index: int) -> float:
        """Uniform(0,1) value owned by ``index``."""
        return float(Generator(self._bitgen(index)).random())

    def uniforms(self, count: int, start: int = 0) -> np.ndarray:
        """Uniforms for indices [start, start + count)."""
        if count < 0:
            raise ValueError("count must be non-negative")
        bg = self._bitgen(start)
        raw = Generator(bg).random(count * _WORDS_PER_INDEX)
        return raw[::_WORDS_PER_INDEX].copy()

    def normals(self, count: int, start: int = 0) -> np.ndarray:
        """Standard normals for indices [start, start + count)."""
        u = np.clip(self.uniforms(count, start), _U_LO, _U_HI)
        return ndtri(u)

    def normal_at(self, index: int) -> float:
        return float(ndtri(np.clip(self.uniform_at(index), _U_LO, _U_HI)))

    def lognormals(self, mu: float, sigma: float, count: int, start: int = 0) -> np.ndarray:
        """Shock values A with ln A ~ Normal(mu, sigma^2) for an index range."""
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        return np.exp(mu + sigma * self.normals(count, start))

    def lognormal_at(self, mu: float, sigma: float, index: int) -> float:
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        return float(np.exp(mu + sigma * self.normal_at(index)))


def draw_shocks(stream: ShockStream, mu: float, sigma: float, count: int,
                start: int = 0) -> np.ndarray:
    """Batch form of :func:`draw_shock` over indices [start, start + count)."""
    return stream.lognormals(mu, sigma, count, start)


def draw_shock(stream: ShockStream, mu: float, sigma: float, index: int) -> float:
    """Productivity shock at one index; pure function of (seed, stream, index)."""
    return stream.lognormal_at(mu, sigma, index)
