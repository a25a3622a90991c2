"""Uniform S-D traffic, exact hop-distance distributions and tail bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hexlattice import Lattice, hex_norm

_ROW_CHUNK = 512


class TrafficError(ValueError):
    pass


@dataclass(frozen=True)
class SDPairs:
    src: np.ndarray
    dst: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.src)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist()))


def draw_sd_pairs(lattice: Lattice | int, seed: int) -> SDPairs:
    """Every node picks one destination uniformly among the other nodes."""
    n = lattice if isinstance(lattice, (int, np.integer)) else lattice.n
    if n < 2:
        raise TrafficError(f"need at least 2 nodes to form S-D pairs, got {n}")
    rng = np.random.default_rng(seed)
    src = np.arange(n, dtype=np.int64)
    dst = rng.integers(0, n - 1, size=n, dtype=np.int64)
    dst += dst >= src
    src.setflags(write=False)
    dst.setflags(write=False)
    return SDPairs(src, dst, int(seed))


@dataclass(frozen=True)
class HopDistanceDistribution:
    """Hop distance between a uniformly random ordered pair of distinct nodes.

    ``counts[i, x]`` is the number of nodes exactly ``x`` hops from node ``i``
    and ``pmf[x]`` the probability that a random pair is ``x`` hops apart.
    """

    n: int
    counts: np.ndarray
    pmf: np.ndarray

    @property
    def mass(self) -> dict[int, float]:
        return {x: float(p) for x, p in enumerate(self.pmf) if p > 0}

    @property
    def diameter(self) -> int:
        return len(self.pmf) - 1

    def b(self, i: int, x: int) -> int:
        if x >= self.counts.shape[1]:
            return 0
        return int(self.counts[i, x])

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.pmf)), self.pmf))


def hop_distribution(lattice: Lattice) -> HopDistanceDistribution:
    """Exact pair hop-distance distribution including edge effects."""
    n = lattice.n
    if n < 2:
        raise TrafficError(f"need at least 2 nodes, got {n}")
    width = 2 * lattice.rings + 1
    counts = np.zeros((n, width), dtype=np.int64)
    for lo in range(0, n, _ROW_CHUNK):
        hi = min(lo + _ROW_CHUNK, n)
        d = hex_norm(lattice.q[None, :] - lattice.q[lo:hi, None],
                     lattice.r[None, :] - lattice.r[lo:hi, None])
        rows = np.arange(hi - lo)[:, None] * width + d
        counts[lo:hi] = np.bincount(rows.ravel(), minlength=(hi - lo) * width).reshape(hi - lo, width)
    counts[:, 0] = 0
    pmf = counts.sum(axis=0) / (n * (n - 1))
    counts.setflags(write=False)
    pmf.setflags(write=False)
    return HopDistanceDistribution(n, counts, pmf)


def xi(dist: HopDistanceDistribution, D: int) -> float:
    """Probability that a random pair is at most ``D`` hops apart."""
    if D < 0:
        raise TrafficError(f"hop limit must be >= 0, got {D}")
    if D == 0:
        return 0.0
    if D >= dist.diameter:
        return 1.0
    return float(min(1.0, dist.pmf[1:D + 1].sum()))


def chernoff_tail(expectation: float, delta: float) -> float:
    """``P[X >= (1 + delta) E[X]]`` bound for a sum of independent indicators."""
    if not delta > 0:
        raise TrafficError(f"delta must be positive, got {delta}")
    if not expectation > 0:
        raise TrafficError(f"expectation must be positive, got {expectation}")
    return math.exp(-delta * delta * expectation / (2.0 + delta))


def chernoff_delta(n: int, expectation):
    """Deviation ``sqrt(6 ln n / E)`` used for the relay-load upper bound."""
    e = np.asarray(expectation, dtype=float)
    out = np.sqrt(6.0 * math.log(n) / e)
    return out if out.ndim else float(out)
