"""Deterministic shortest-path routing on a hexagonal lattice.

Every hop may span up to ``reach`` rings. A flow at hop distance ``h`` from
its destination moves to a cell at distance ``max(h - reach, 0)``. With
``reach == 1`` ties go to the neighbour whose center is closest
(Euclidean) to the destination center, then to the lowest node id. With
longer hops the candidates form an arc of the ``reach``-th ring; there the
cell farthest from the network center wins first, because the closest-to-
destination rule funnels opposite-side flows through the central cell.
Because the hexagonal region is geodesically convex, the lattice hop
distance is the axial distance and greedy steps always exist inside the
lattice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hexlattice import Lattice, hex_norm, ring_offsets, squared_hex_length

_NO_KEY = np.iinfo(np.int64).max
_TABLE_CHUNK = 1 << 19


@dataclass
class PathSet:
    """Node sequences of a batch of flows.

    ``nodes[t, f]`` is the node holding flow ``f`` after ``t`` hops, or -1
    once the flow has arrived (``t > hops[f]``).
    """

    nodes: np.ndarray
    hops: np.ndarray

    @property
    def n_flows(self) -> int:
        return self.nodes.shape[1]

    def step_mask(self, last: bool = False) -> np.ndarray:
        """Mask of path positions ``t < hops`` (or ``t <= hops`` if ``last``)."""
        t = np.arange(self.nodes.shape[0])[:, None]
        return t <= self.hops[None, :] if last else t < self.hops[None, :]

    def loads(self, n: int, mask: np.ndarray) -> np.ndarray:
        return np.bincount(self.nodes[mask], minlength=n)


class Router:
    def __init__(self, lattice: Lattice, reach: int = 1):
        if reach < 1:
            raise ValueError(f"hop reach must be >= 1, got {reach}")
        self.lattice = lattice
        self.reach = int(reach)
        self._ring = ring_offsets(self.reach)
        self._table: np.ndarray | None = None

    @classmethod
    def for_lattice(cls, lattice: Lattice, reach: int = 1) -> "Router":
        """Router cached on the lattice, so next-hop tables are built once."""
        store = lattice.cache().setdefault("routers", {})
        if reach not in store:
            store[reach] = cls(lattice, reach)
        return store[reach]

    def _candidate_next(self, cur: np.ndarray, dst: np.ndarray) -> np.ndarray:
        lat = self.lattice
        cq, cr = lat.q[cur], lat.r[cur]
        dq, dr = lat.q[dst], lat.r[dst]
        h = hex_norm(dq - cq, dr - cr)
        out = dst.copy()
        far = h > self.reach
        if not far.any():
            return out
        fq, fr, fdq, fdr = cq[far], cr[far], dq[far], dr[far]
        kq = fq[:, None] + self._ring[None, :, 0]
        kr = fr[:, None] + self._ring[None, :, 1]
        inside = hex_norm(kq, kr) <= lat.rings
        ids = lat.node_id(np.where(inside, kq, 0), np.where(inside, kr, 0))
        ex, ey = fdq[:, None] - kq, fdr[:, None] - kr
        ok = inside & (hex_norm(ex, ey) == (h[far] - self.reach)[:, None])
        key = squared_hex_length(ex, ey) * lat.n + ids
        if self.reach > 1:
            span = 4 * lat.rings * lat.rings + 1
            inward = lat.rings * lat.rings - squared_hex_length(kq, kr)
            key = key + np.where(inside, inward, 0) * (span * lat.n)
        key = np.where(ok, key, _NO_KEY)
        pick = np.argmin(key, axis=1)
        out[far] = ids[np.arange(len(pick)), pick]
        return out

    def build_table(self) -> np.ndarray:
        """Precompute ``next[cur, dst]`` for every node pair."""
        if self._table is None:
            n = self.lattice.n
            dtype = np.int16 if n < np.iinfo(np.int16).max else np.int32
            table = np.empty((n, n), dtype=dtype)
            flat_cur = np.repeat(np.arange(n), n)
            flat_dst = np.tile(np.arange(n), n)
            flat = table.reshape(-1)
            for lo in range(0, n * n, _TABLE_CHUNK):
                hi = min(lo + _TABLE_CHUNK, n * n)
                flat[lo:hi] = self._candidate_next(flat_cur[lo:hi], flat_dst[lo:hi])
            table.setflags(write=False)
            self._table = table
        return self._table

    def next_hop(self, cur, dst) -> np.ndarray:
        cur = np.asarray(cur, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if self._table is not None:
            return self._table[cur, dst].astype(np.int64)
        return self._candidate_next(cur, dst)

    def hop_count(self, src, dst) -> np.ndarray:
        lat = self.lattice
        h = hex_norm(lat.q[dst] - lat.q[src], lat.r[dst] - lat.r[src])
        return -(-h // self.reach)

    def paths(self, src, dst) -> PathSet:
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        hops = self.hop_count(src, dst)
        T = int(hops.max()) if len(hops) else 0
        nodes = np.full((T + 1, len(src)), -1, dtype=np.int64)
        nodes[0] = src
        cur = src.copy()
        for t in range(1, T + 1):
            live = hops >= t
            cur[live] = self.next_hop(cur[live], dst[live])
            nodes[t, live] = cur[live]
        return PathSet(nodes, hops)

    def path(self, src: int, dst: int) -> list[int]:
        ps = self.paths([src], [dst])
        return [int(v) for v in ps.nodes[: ps.hops[0] + 1, 0]]


def subsample_path(paths: PathSet, stride: int) -> PathSet:
    """Keep every ``stride``-th node of each path plus its endpoint.

    A geodesic sampled this way is a valid route whose hops each span at
    most ``stride`` rings, and its nodes are a subset of the original path.
    """
    if stride == 1:
        return paths
    hops = paths.hops
    new_hops = -(-hops // stride)
    T = int(new_hops.max()) if len(hops) else 0
    nodes = np.full((T + 1, paths.n_flows), -1, dtype=np.int64)
    cols = np.arange(paths.n_flows)
    for t in range(T + 1):
        live = new_hops >= t
        idx = np.minimum(t * stride, hops)
        nodes[t, live] = paths.nodes[idx[live], cols[live]]
    return PathSet(nodes, new_hops)


def expected_loads(router: Router) -> np.ndarray:
    """Exact expected transmit load of every node under uniform traffic.

    Each node sends one flow to a destination drawn uniformly from the other
    ``n - 1`` nodes. Routes toward a fixed destination form an in-tree, so
    the number of sources whose flow node ``i`` forwards toward ``d`` is the
    size of ``i``'s subtree; averaging over destinations gives ``E[Z_i]``.
    """
    lat = router.lattice
    n = lat.n
    if n < 2:
        return np.zeros(n)
    table = router.build_table().astype(np.int64)
    dist = hex_norm(lat.q[None, :] - lat.q[:, None], lat.r[None, :] - lat.r[:, None])
    size = np.ones((n, n))
    np.fill_diagonal(size, 0.0)
    flat_size = size.reshape(-1)
    target = (table * n + np.arange(n)[None, :]).reshape(-1)
    flat_dist = dist.reshape(-1)
    for level in range(int(dist.max()), 0, -1):
        sel = np.flatnonzero(flat_dist == level)
        flat_size += np.bincount(target[sel], weights=flat_size[sel], minlength=n * n)
    np.fill_diagonal(size, 0.0)
    return size.sum(axis=1) / (n - 1)
