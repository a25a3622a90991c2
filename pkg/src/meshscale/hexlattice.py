"""Hexagonal cell lattices in axial coordinates.

A lattice of ``L_r`` rings holds ``3 L_r (L_r + 1) + 1`` cells arranged
around a central cell. Node ids are ring-major: id 0 is the center, ids
``1..6`` are ring 1, and so on. Cell centers use the pointy-top layout,
so neighbouring centers are ``sqrt(3) * a`` apart for side length ``a``.

Axial ``(q, r)`` maps to cube ``(x, y, z) = (q, -q - r, r)`` and the hop
distance between two cells is ``(|dq| + |dr| + |dq + dr|) / 2``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterator

import numpy as np

DEFAULT_EPS = 0.25
MAX_EPS = 0.75

# Ring walk order; starting corner is AXIAL_DIRECTIONS[4] * ring.
AXIAL_DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))


class LatticeError(ValueError):
    """Invalid lattice parameters or node ids."""


@dataclass(frozen=True)
class HexSite:
    q: int
    r: int
    offset: tuple[float, float] = (0.0, 0.0)


def site_count(rings: int) -> int:
    """Number of cells in a lattice with ``rings`` outer rings."""
    return 3 * rings * (rings + 1) + 1


def rings_to_cover(n: int) -> int:
    """Smallest ring count whose lattice holds at least ``n`` cells."""
    if n < 1:
        raise LatticeError(f"node count must be >= 1, got {n}")
    rings = max(0, math.ceil((math.sqrt(12 * n - 3) - 3) / 6) - 1)
    while site_count(rings) < n:
        rings += 1
    return rings


def hex_norm(dq, dr):
    """Hop length of an axial displacement. Works on ints and arrays."""
    return (abs(dq) + abs(dr) + abs(dq + dr)) // 2


def ring_offsets(radius: int) -> np.ndarray:
    """Axial offsets of the ``6 * radius`` cells exactly ``radius`` hops away.

    Returns an ``(m, 2)`` int array; ``radius = 0`` gives the single origin.
    """
    if radius < 0:
        raise LatticeError(f"ring index must be >= 0, got {radius}")
    if radius == 0:
        return np.zeros((1, 2), dtype=np.int64)
    out = []
    q, r = AXIAL_DIRECTIONS[4][0] * radius, AXIAL_DIRECTIONS[4][1] * radius
    for dq, dr in AXIAL_DIRECTIONS:
        for _ in range(radius):
            out.append((q, r))
            q, r = q + dq, r + dr
    return np.asarray(out, dtype=np.int64)


def axial_to_xy(q, r, a: float = 1.0):
    """Cartesian center of axial cell(s), pointy-top layout."""
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    return np.stack([math.sqrt(3.0) * a * (q + r / 2.0), 1.5 * a * r], axis=-1)


def squared_hex_length(dq, dr):
    """``|x|^2 / (3 a^2)`` for an axial displacement; exact in integers."""
    return dq * dq + dq * dr + dr * dr


class Lattice:
    """Hexagonal lattice of ``3 L_r (L_r + 1) + 1`` cells, one node per cell.

    Instances are treated as immutable: the coordinate and offset arrays are
    flagged read-only after construction. Use :func:`build_lattice` rather
    than calling the constructor with hand-made arrays.
    """

    def __init__(self, rings, a, q, r, offsets, placement="regular", eps=0.0, seed=0):
        self.rings = int(rings)
        self.a = float(a)
        self.q = np.asarray(q, dtype=np.int64)
        self.r = np.asarray(r, dtype=np.int64)
        self.offsets = np.asarray(offsets, dtype=float)
        self.placement = placement
        self.eps = float(eps)
        self.seed = int(seed)
        for arr in (self.q, self.r, self.offsets):
            arr.setflags(write=False)

        span = 2 * self.rings + 1
        index = np.full((span, span), -1, dtype=np.int64)
        index[self.q + self.rings, self.r + self.rings] = np.arange(self.n)
        index.setflags(write=False)
        self._index = index
        self._cache: dict = {}

    @property
    def n(self) -> int:
        return len(self.q)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return (
            f"Lattice(rings={self.rings}, n={self.n}, a={self.a}, "
            f"placement={self.placement!r}, eps={self.eps})"
        )

    @property
    def sites(self) -> list[HexSite]:
        return [
            HexSite(int(q), int(r), (float(o[0]), float(o[1])))
            for q, r, o in zip(self.q, self.r, self.offsets)
        ]

    @property
    def centers(self) -> np.ndarray:
        """Unperturbed cell centers, shape ``(n, 2)``."""
        if "centers" not in self._cache:
            c = axial_to_xy(self.q, self.r, self.a)
            c.setflags(write=False)
            self._cache["centers"] = c
        return self._cache["centers"]

    @property
    def positions(self) -> np.ndarray:
        """Node positions including perturbation offsets, shape ``(n, 2)``."""
        if "positions" not in self._cache:
            p = self.centers + self.offsets
            p.setflags(write=False)
            self._cache["positions"] = p
        return self._cache["positions"]

    @property
    def ring_index(self) -> np.ndarray:
        """Hop distance of every node from the center node."""
        return hex_norm(self.q, self.r)

    def ring_members(self, ring: int) -> np.ndarray:
        return np.flatnonzero(self.ring_index == ring)

    def contains(self, q, r):
        q = np.asarray(q)
        r = np.asarray(r)
        return hex_norm(q, r) <= self.rings

    def node_id(self, q, r):
        """Node id(s) at axial coordinates; -1 where outside the lattice."""
        q = np.asarray(q, dtype=np.int64)
        r = np.asarray(r, dtype=np.int64)
        inside = self.contains(q, r)
        qi = np.where(inside, q + self.rings, 0)
        ri = np.where(inside, r + self.rings, 0)
        ids = np.where(inside, self._index[qi, ri], -1)
        return ids if ids.ndim else int(ids)

    def check_ids(self, *ids) -> None:
        for i in ids:
            arr = np.asarray(i)
            if arr.size and (arr.min() < 0 or arr.max() >= self.n):
                raise LatticeError(f"node id out of range [0, {self.n}): {i}")

    def hop_distance(self, i, j):
        """Hexagonal grid distance between nodes ``i`` and ``j`` (vectorized)."""
        self.check_ids(i, j)
        d = hex_norm(self.q[i] - self.q[j], self.r[i] - self.r[j])
        return d if np.ndim(d) else int(d)

    def neighbors(self, i: int) -> list[int]:
        self.check_ids(i)
        out = []
        for dq, dr in AXIAL_DIRECTIONS:
            nid = self.node_id(self.q[i] + dq, self.r[i] + dr)
            if nid >= 0:
                out.append(nid)
        return out

    def euclidean(self, i, j):
        """Distance between (possibly perturbed) node positions."""
        d = np.linalg.norm(self.positions[i] - self.positions[j], axis=-1)
        return d if np.ndim(d) else float(d)

    def cache(self) -> dict:
        """Scratch space for derived per-lattice tables (routers, etc.)."""
        return self._cache


def _ring_major_coordinates(rings: int) -> tuple[np.ndarray, np.ndarray]:
    blocks = [ring_offsets(k) for k in range(rings + 1)]
    qr = np.concatenate(blocks, axis=0)
    return qr[:, 0].copy(), qr[:, 1].copy()


def _disk_offsets(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    rho = radius * np.sqrt(rng.random(n))
    theta = 2.0 * math.pi * rng.random(n)
    return np.stack([rho * np.cos(theta), rho * np.sin(theta)], axis=1)


def build_lattice(rings: int, a: float = 1.0, placement: str = "regular",
                  seed: int = 0, eps: float | None = None) -> Lattice:
    """Build a regular or randomly perturbed hexagonal lattice.

    Perturbed nodes are displaced uniformly within a disk of radius
    ``eps * a`` around their cell center; ``eps`` defaults to 0.25 and must
    stay below 3/4. The same ``seed`` always yields the same offsets.
    """
    if rings < 0:
        raise LatticeError(f"ring count must be >= 0, got {rings}")
    if not a > 0:
        raise LatticeError(f"side length must be positive, got {a}")
    q, r = _ring_major_coordinates(int(rings))
    if placement == "regular":
        if eps not in (None, 0, 0.0):
            raise LatticeError("eps is only meaningful for perturbed placement")
        offsets = np.zeros((len(q), 2))
        eps = 0.0
    elif placement == "perturbed":
        eps = DEFAULT_EPS if eps is None else float(eps)
        if not 0 <= eps < MAX_EPS:
            raise LatticeError(f"perturbation eps must satisfy 0 <= eps < 3/4, got {eps}")
        rng = np.random.default_rng(seed)
        offsets = _disk_offsets(len(q), eps * a, rng)
    else:
        raise LatticeError(f"unknown placement {placement!r}")
    return Lattice(rings, a, q, r, offsets, placement=placement, eps=eps, seed=seed)


def hop_distance(lattice: Lattice, i, j):
    return lattice.hop_distance(i, j)


def bfs_distances(lattice: Lattice, source: int) -> np.ndarray:
    """Breadth-first hop distances from ``source`` over cell adjacency."""
    dist = np.full(lattice.n, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in lattice.neighbors(u):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def ring_distance_bounds(ring: int, a: float = 1.0) -> tuple[float, float]:
    """Min and max center-to-center distance to the cells of ring ``ring``.

    Computed by enumerating all ``6 * ring`` ring cells around an interior
    node, so the values are exact rather than a closed-form approximation.
    """
    if ring < 1:
        raise LatticeError(f"ring index must be >= 1, got {ring}")
    off = ring_offsets(ring)
    s = squared_hex_length(off[:, 0], off[:, 1])
    scale = math.sqrt(3.0) * a
    return scale * math.sqrt(int(s.min())), scale * math.sqrt(int(s.max()))


def iter_rings(lattice: Lattice) -> Iterator[tuple[int, np.ndarray]]:
    ring = lattice.ring_index
    for k in range(lattice.rings + 1):
        yield k, np.flatnonzero(ring == k)
