"""Multi-tier hierarchical mesh with D-hop maximum routing.

Tier 1 holds the ``n`` data nodes; tier ``l`` holds about ``n / l**k`` relay
nodes on its own hexagonal lattice whose spacing grows as ``l**(k/2)``.
Bandwidth and antenna count grow as ``l**psi`` and ``l**upsilon``.

A flow at tier ``l`` travels within the tier when its endpoints are at
most ``D_l`` hops apart (always at the top tier). Otherwise it climbs from
its source to the nearest tier-``l+1`` node, continues there toward the
tier-``l+1`` node nearest its destination, and later comes back down the
same way on the destination side.

Hop accounting at tier ``l`` (``H`` per flow, ``Z`` per node, always with
``sum(Z) == sum(H)``):

* transit: one hop per same-tier transmission, charged to the sender;
* ascent: the walk from the source to the cell holding the parent, plus
  the uplink itself, charged to each walk node including the last;
* descent: the mirror of ascent, the downlink plus the walk to the
  destination, charged to each receiving node.

Under beamforming the same routes are kept but every same-tier walk skips
ahead ``floor(M_l ** (2 / alpha))`` rings per hop, so the nodes charged are
a subset of those charged under spatial multiplexing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .hexlattice import Lattice, build_lattice, hex_norm, rings_to_cover
from .radio import PathLossModel, PowerBudget, tdma_sinr
from .routing import PathSet, Router, subsample_path
from .traffic import SDPairs, draw_sd_pairs, hop_distribution, xi

# neighbour-cell interferers of an r = 1 link, plus the same-cell case
DELTA_C_TIER = 5 + 1
UNBOUNDED = math.inf
ETA_REFERENCE_RINGS = 16
_TIE_DECIMALS = 9


class OrdersError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class Mode(str, Enum):
    SM = "SM"
    BF = "BF"


@dataclass(frozen=True)
class ScalingOrders:
    k: float
    psi: float
    upsilon: float

    def __post_init__(self):
        errs = orders_violations(self.k, self.psi, self.upsilon)
        if errs:
            raise OrdersError(errs)


def orders_violations(k: float, psi: float, upsilon: float) -> list[str]:
    errs = []
    if not k >= 2:
        errs.append(f"k={k} violates k >= 2 (node count must fall at least quadratically)")
    if not psi >= 1:
        errs.append(f"psi={psi} violates psi >= 1")
    if not upsilon >= 1:
        errs.append(f"upsilon={upsilon} violates upsilon >= 1")
    return errs


@dataclass(frozen=True)
class TierBase:
    """Tier-1 anchor values from which every tier is scaled.

    ``alpha``, ``C`` (linear gain) and ``P0`` (mW) may be scalars or one value
    per tier; ``d1`` is the tier-1 neighbour spacing.
    """

    W1: float = 1e7
    M1: int = 1
    d1: float = 1.0
    alpha: float | tuple = 3.0
    C: float | tuple = 1.0
    P0: float | tuple = 1.0
    placement: str = "regular"
    eps: float | None = None
    seed: int = 0

    def per_tier(self, name: str, l: int) -> float:
        v = getattr(self, name)
        if isinstance(v, (tuple, list)):
            return float(v[min(l, len(v)) - 1])
        return float(v)


@dataclass(frozen=True, eq=False)
class TierSpec:
    l: int
    n_l: int
    W: float
    M: float
    P: float
    alpha: float
    C: float
    P0: float
    D: int
    d: float
    k: float
    lattice: Lattice = field(repr=False)

    @property
    def n_sites(self) -> int:
        return self.lattice.n

    @property
    def delta_k(self) -> float:
        """Average number of cells of this tier covered by one cell of the next."""
        return (1.0 + 1.0 / self.l) ** self.k


@dataclass(frozen=True)
class MimoLink:
    N_t: int
    N_r: int
    mode: Mode = Mode.SM

    def __post_init__(self):
        if self.N_t < 1 or self.N_r < 1:
            raise ValueError(f"antenna counts must be >= 1, got {self.N_t}x{self.N_r}")
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def dof_gain(self) -> int:
        return min(self.N_t, self.N_r)

    @property
    def power_gain(self) -> int:
        return self.N_t * self.N_r

    @property
    def gain(self) -> int:
        return self.dof_gain if self.mode == Mode.SM else self.power_gain


def tier_count(n: int, k: float) -> int:
    """Largest ``l`` with ``n / l**k >= 1``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    L = max(1, int(math.floor(n ** (1.0 / k))))
    while (L + 1) ** k <= n:
        L += 1
    while L > 1 and L ** k > n:
        L -= 1
    return L


def nominal_nodes(n: int, l: int, k: float) -> int:
    return max(1, int(math.floor(n / l ** k + 0.5)))


def hop_limit(l: int, k: float) -> int:
    """``ceil((1 + 1/l) ** (k/2))``: same-tier hop budget of tier ``l``."""
    return int(math.ceil((1.0 + 1.0 / l) ** (k / 2.0) - 1e-12))


def spacing_chain(d1: float, L: int, k: float) -> list[float]:
    d = [float(d1)]
    for l in range(1, L):
        d.append(d[-1] * (1.0 + 1.0 / l) ** (k / 2.0))
    return d


def build_tiers(n: int, orders: ScalingOrders, base: TierBase = TierBase()) -> list[TierSpec]:
    L = tier_count(n, orders.k)
    spacing = spacing_chain(base.d1, L, orders.k)
    tiers = []
    for l in range(1, L + 1):
        n_l = n if l == 1 else nominal_nodes(n, l, orders.k)
        d = spacing[l - 1]
        alpha = base.per_tier("alpha", l)
        C = base.per_tier("C", l)
        P0 = base.per_tier("P0", l)
        lattice = build_lattice(rings_to_cover(n_l), d / math.sqrt(3.0), base.placement,
                                seed=base.seed + l, eps=base.eps)
        tiers.append(TierSpec(
            l=l, n_l=n_l, W=base.W1 * l ** orders.psi, M=base.M1 * l ** orders.upsilon,
            P=P0 * d ** alpha / C, alpha=alpha, C=C, P0=P0, D=hop_limit(l, orders.k),
            d=d, k=orders.k, lattice=lattice,
        ))
    return tiers


def nearest(points: np.ndarray, targets: np.ndarray, scale: float) -> np.ndarray:
    """Index of the nearest target for every point; ties go to the lowest index."""
    out = np.empty(len(points), dtype=np.int64)
    step = max(1, (1 << 22) // max(1, len(targets)))
    for lo in range(0, len(points), step):
        p = points[lo:lo + step]
        d2 = ((p[:, None, :] - targets[None, :, :]) ** 2).sum(axis=2) / (scale * scale)
        out[lo:lo + step] = np.argmin(np.round(d2, _TIE_DECIMALS), axis=1)
    return out


def associate_upward(tier_l: TierSpec, tier_up: TierSpec) -> np.ndarray:
    """Parent (nearest tier-``l+1`` node) of every tier-``l`` node."""
    if tier_up.n_sites == 0:
        raise ValueError("upper tier has no nodes")
    return nearest(tier_l.lattice.positions, tier_up.lattice.positions, tier_up.d)


def anchor_cells(tier_l: TierSpec, tier_up: TierSpec) -> np.ndarray:
    """Tier-``l`` node nearest to every tier-``l+1`` node (its home cell)."""
    return nearest(tier_up.lattice.positions, tier_l.lattice.positions, tier_l.d)


@dataclass
class Topology:
    tiers: list[TierSpec]
    parents: list[np.ndarray]
    anchors: list[np.ndarray]
    orders: ScalingOrders

    @property
    def L(self) -> int:
        return len(self.tiers)

    def resolved_tiers(self) -> list[int]:
        """Tiers whose next tier has a strictly smaller ring count.

        Once ``n / l**k`` changes by less than a ring between tiers, the
        rounded lattices stop shrinking and the parent map is nearly one to
        one; order-level scaling only shows on the resolved prefix.
        """
        out = []
        for lo, hi in zip(self.tiers, self.tiers[1:]):
            if hi.lattice.rings >= lo.lattice.rings:
                break
            out.append(lo.l)
        return out


def build_topology(n: int, orders: ScalingOrders, base: TierBase = TierBase()) -> Topology:
    tiers = build_tiers(n, orders, base)
    parents = [associate_upward(a, b) for a, b in zip(tiers, tiers[1:])]
    anchors = [anchor_cells(a, b) for a, b in zip(tiers, tiers[1:])]
    return Topology(tiers, parents, anchors, orders)


@lru_cache(maxsize=16)
def cached_topology(n: int, orders: ScalingOrders, base: TierBase = TierBase()) -> Topology:
    return build_topology(n, orders, base)


def bf_range_boost(M: float, alpha: float) -> float:
    """Range multiplier ``M ** (2 / alpha)`` from an ``M x M`` beamforming gain."""
    if M < 1 or not alpha > 0:
        raise ValueError(f"need M >= 1 and alpha > 0, got M={M}, alpha={alpha}")
    return M ** (2.0 / alpha)


def bf_stride(tier: TierSpec) -> int:
    return max(1, int(math.floor(bf_range_boost(tier.M, tier.alpha) + 1e-9)))


@dataclass
class Segment:
    tier: int
    kind: str  # "up", "apex" or "down"
    nodes: list[int]
    hops: int


@dataclass
class FlowRoute:
    flow: int
    segments: list[Segment]

    @property
    def apex(self) -> int:
        return max(s.tier for s in self.segments)

    @property
    def tiers(self) -> list[int]:
        return [s.tier for s in self.segments]


@dataclass
class TierFlowStats:
    l: int
    n_flows: int
    N: int
    Q: float
    xi: float
    flows: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    Z: np.ndarray = field(repr=False)
    ascend: np.ndarray = field(repr=False)
    parent_load: np.ndarray = field(repr=False)
    mu_ratio: float = 1.0
    zeta_u: float = float("nan")
    zeta_s: float = float("nan")
    up_hops_mean: float = float("nan")

    @property
    def Z_U(self) -> int:
        return int(self.Z.max()) if self.Z.size else 0

    @property
    def parent_demand(self) -> float:
        """Busiest parent's up/down slot demand after MU-MIMO sharing."""
        if self.parent_load.size == 0:
            return 0.0
        return float(self.parent_load.max()) / self.mu_ratio

    @property
    def slot_demand(self) -> float:
        return max(float(self.Z_U), self.parent_demand)


@dataclass
class _TierTrace:
    flows: np.ndarray
    transit: np.ndarray
    transit_paths: PathSet
    up_paths: PathSet
    down_paths: PathSet
    src: np.ndarray
    dst: np.ndarray


def _trace(topo: Topology, src: np.ndarray, dst: np.ndarray) -> list[_TierTrace]:
    """Tier-by-tier routing of all flows; geometry only, mode independent."""
    traces = []
    flows = np.arange(len(src))
    for idx, tier in enumerate(topo.tiers):
        lat = tier.lattice
        router = Router.for_lattice(lat, 1)
        h = hex_norm(lat.q[dst] - lat.q[src], lat.r[dst] - lat.r[src])
        top = idx == topo.L - 1
        transit = np.ones(len(src), bool) if top else h <= tier.D
        tp = router.paths(src[transit], dst[transit])
        climb = ~transit
        if top or not climb.any():
            empty = router.paths(np.empty(0, np.int64), np.empty(0, np.int64))
            traces.append(_TierTrace(flows, transit, tp, empty, empty, src, dst))
            break
        parent, anchor = topo.parents[idx], topo.anchors[idx]
        up = router.paths(src[climb], anchor[parent[src[climb]]])
        down = router.paths(anchor[parent[dst[climb]]], dst[climb])
        traces.append(_TierTrace(flows, transit, tp, up, down, src, dst))
        flows, src, dst = flows[climb], parent[src[climb]], parent[dst[climb]]
    return traces


def _charge(ps: PathSet, n: int, last: bool) -> tuple[np.ndarray, np.ndarray]:
    mask = ps.step_mask(last=last)
    return ps.loads(n, mask), mask.sum(axis=0)


def tier_flow_stats(topo: Topology, traces: list[_TierTrace], n_flows: int,
                    mode: Mode = Mode.SM) -> list[TierFlowStats]:
    mode = Mode(mode)
    stats = []
    for idx, tier in enumerate(topo.tiers):
        n = tier.n_sites
        xi_l = tier_xi(tier)
        if idx >= len(traces):
            stats.append(TierFlowStats(tier.l, n_flows, 0, 0.0, xi_l, np.empty(0, np.int64),
                                       np.empty(0, np.int64), np.zeros(n, np.int64),
                                       np.empty(0, bool), np.empty(0, np.int64)))
            continue
        tr = traces[idx]
        stride = bf_stride(tier) if mode == Mode.BF else 1
        tp, up, down = (subsample_path(p, stride) for p in (tr.transit_paths, tr.up_paths, tr.down_paths))
        z_t, h_t = _charge(tp, n, last=False)
        z_u, h_u = _charge(up, n, last=True)
        z_d, h_d = _charge(down, n, last=True)
        H = np.zeros(len(tr.flows), dtype=np.int64)
        H[tr.transit] = h_t
        H[~tr.transit] = h_u + h_d
        climb = ~tr.transit
        if idx + 1 < topo.L and climb.any():
            parent = topo.parents[idx]
            n_up = topo.tiers[idx + 1].n_sites
            parent_load = (np.bincount(parent[tr.src[climb]], minlength=n_up)
                           + np.bincount(parent[tr.dst[climb]], minlength=n_up))
            mu = topo.tiers[idx + 1].M / tier.M
        else:
            parent_load, mu = np.empty(0, np.int64), 1.0
        zeta_u = float(np.mean(up.hops)) / math.sqrt(tier.delta_k) if up.hops.size else float("nan")
        zeta_s = float(np.mean(h_t)) / tier.D if h_t.size else float("nan")
        stats.append(TierFlowStats(
            l=tier.l, n_flows=n_flows, N=len(tr.flows), Q=len(tr.flows) / n_flows, xi=xi_l,
            flows=tr.flows, H=H, Z=z_t + z_u + z_d, ascend=climb, parent_load=parent_load,
            mu_ratio=mu, zeta_u=zeta_u, zeta_s=zeta_s,
            up_hops_mean=float(np.mean(up.hops)) if up.hops.size else float("nan"),
        ))
    return stats


def route_flow(topo: Topology, pair: tuple[int, int], flow: int = 0) -> FlowRoute:
    """Full tier-by-tier route of a single S-D pair (tier-1 node ids)."""
    s, d = int(pair[0]), int(pair[1])
    if s == d:
        raise ValueError("source and destination must differ")
    traces = _trace(topo, np.array([s]), np.array([d]))
    ups, downs = [], []
    apex = None
    for idx, tr in enumerate(traces):
        l = idx + 1
        if tr.transit[0]:
            ps = tr.transit_paths
            apex = Segment(l, "apex", ps.nodes[: ps.hops[0] + 1, 0].tolist(), int(ps.hops[0]))
            break
        for ps, bucket, kind in ((tr.up_paths, ups, "up"), (tr.down_paths, downs, "down")):
            nodes = ps.nodes[: ps.hops[0] + 1, 0].tolist()
            bucket.append(Segment(l, kind, nodes, int(ps.hops[0]) + 1))
    return FlowRoute(flow, ups + [apex] + downs[::-1])


@lru_cache(maxsize=256)
def _xi_cached(rings: int, D: int) -> float:
    lat = build_lattice(rings)
    if lat.n < 2:
        return 1.0
    return xi(hop_distribution(lat), D)


def tier_xi(tier: TierSpec) -> float:
    """Probability that a uniform tier-``l`` pair is within ``D_l`` hops."""
    return _xi_cached(tier.lattice.rings, tier.D)


def crossing_probabilities(tiers: list[TierSpec]) -> np.ndarray:
    """``Q_1 = 1``, ``Q_{l+1} = (1 - xi_l) Q_l``."""
    Q = np.ones(len(tiers))
    for i in range(1, len(tiers)):
        Q[i] = Q[i - 1] * (1.0 - tier_xi(tiers[i - 1]))
    return Q


@lru_cache(maxsize=64)
def default_eta(model: PathLossModel = PathLossModel(3.0, 1.0),
                budget: PowerBudget = PowerBudget(1.0, 1.0)) -> float:
    """Spectral efficiency ``log2(1 + SINR)`` of a one-ring TDMA link."""
    return math.log2(1.0 + tdma_sinr(1, model, budget, ETA_REFERENCE_RINGS))


def link_rate_sm(tier: TierSpec, eta: float = 1.0) -> float:
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    return eta * tier.M * tier.W


def bf_link_snr(tier: TierSpec, noise: float | None = None, interference: float = 0.0) -> float:
    """``C M^2 P d^-alpha`` over the noise-plus-residual-interference floor.

    The floor defaults to the tier's receive threshold, so a tier running at
    threshold power has SNR ``M^2``.
    """
    floor = (tier.P0 if noise is None else noise) + interference
    return tier.C * tier.M ** 2 * tier.P * tier.d ** (-tier.alpha) / floor


def link_rate_bf(tier: TierSpec, noise: float | None = None, interference: float = 0.0) -> float:
    """``W log2(SNR)`` in the high-SNR regime; 0 when ``SNR <= 1``."""
    snr = bf_link_snr(tier, noise, interference)
    if snr <= 1.0:
        return 0.0
    return tier.W * math.log2(snr)


def compose_rate(R_L: float, delta_c: int, Z_U: float) -> float:
    if Z_U <= 0:
        return UNBOUNDED
    return R_L / ((1 + delta_c) * Z_U)


def tier_rate(tier: TierSpec, stats: TierFlowStats, mode: Mode = Mode.SM, eta: float | None = None,
              bf_interference: float = 0.0) -> float:
    """End-to-end rate a tier can give every flow it carries.

    Returns :data:`UNBOUNDED` when the tier carries no traffic.
    """
    mode = Mode(mode)
    if mode == Mode.SM:
        R_L = link_rate_sm(tier, default_eta() if eta is None else eta)
    else:
        R_L = link_rate_bf(tier, interference=bf_interference)
    return compose_rate(R_L, DELTA_C_TIER, stats.slot_demand)


def network_throughput(rates) -> float:
    finite = [r for r in rates if math.isfinite(r)]
    if not finite:
        raise ValueError("no tier carries traffic")
    return min(finite)


@dataclass
class ThroughputReport:
    n: int
    mode: Mode
    seed: int
    rates: list[float]
    stats: list[TierFlowStats] = field(repr=False)
    R_n: float = 0.0
    flags: list[str] = field(default_factory=list)

    @property
    def bottleneck(self) -> int:
        finite = [(r, i + 1) for i, r in enumerate(self.rates) if math.isfinite(r)]
        return min(finite)[1]


def simulate(topo: Topology, pairs: SDPairs, modes=(Mode.SM,), eta: float | None = None,
             bf_interference: float = 0.0) -> dict:
    """Route ``pairs`` once and evaluate each requested mode on the same routes."""
    traces = _trace(topo, np.asarray(pairs.src), np.asarray(pairs.dst))
    out = {}
    for mode in modes:
        mode = Mode(mode)
        stats = tier_flow_stats(topo, traces, len(pairs), mode)
        rates = [tier_rate(t, s, mode, eta, bf_interference) for t, s in zip(topo.tiers, stats)]
        flags = []
        if mode == Mode.BF:
            flags = [f"tier {t.l}: beamforming SNR <= 1, rate floored at 0"
                     for t, s in zip(topo.tiers, stats)
                     if s.N and bf_link_snr(t, interference=bf_interference) <= 1.0]
        out[mode] = ThroughputReport(topo.tiers[0].n_sites, mode, pairs.seed, rates, stats,
                                     network_throughput(rates), flags)
    return out


def run_seed(n: int, orders: ScalingOrders, seed: int, base: TierBase = TierBase(),
             modes=(Mode.SM,), eta: float | None = None) -> dict:
    topo = cached_topology(n, orders, base)
    return simulate(topo, draw_sd_pairs(topo.tiers[0].lattice, seed), modes, eta)


def sm_rate_exponent(orders: ScalingOrders) -> float:
    return orders.psi + orders.upsilon - orders.k


def bf_rate_exponent(orders: ScalingOrders, alpha: float) -> float:
    return orders.psi + 2 * orders.upsilon / alpha - orders.k


def analytic_tier_rate(l: int, orders: ScalingOrders, mode: Mode = Mode.SM, alpha: float = 3.0) -> float:
    """Order-level tier rate: ``l**(psi+upsilon-k)`` or ``upsilon l**(psi+2 upsilon/alpha-k) log l``."""
    if Mode(mode) == Mode.SM:
        return float(l) ** sm_rate_exponent(orders)
    return orders.upsilon * float(l) ** bf_rate_exponent(orders, alpha) * math.log(l)
