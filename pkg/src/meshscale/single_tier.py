"""Per-node throughput of a single-tier hexagonal mesh.

Two transmission schemes are modelled: short-hop (SH, one ring per hop) and
long-hop (LH, reach equal to the network's ring count). The achievable rate
is composed as ``R_n = R_L / ((1 + delta_c) * Z_U)``: link rate, TDMA slot
share and relay-load bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .hexlattice import Lattice, build_lattice
from .radio import PathLossModel, PowerBudget, shannon_rate, tdma_sinr
from .routing import PathSet, Router, expected_loads
from .traffic import SDPairs, chernoff_delta, draw_sd_pairs

# LH relay-load cap; checked against measured loads rather than assumed.
LH_RELAY_CAP = 8


class Scheme(str, Enum):
    SH = "SH"
    LH = "LH"


@dataclass(frozen=True)
class SchemeConfig:
    scheme: Scheme
    r: int
    W: float
    model: PathLossModel
    budget: PowerBudget

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"reach must be >= 1, got {self.r}")
        if self.scheme == Scheme.SH and self.r != 1:
            raise ValueError("SH scheme has reach 1")

    @classmethod
    def for_lattice(cls, scheme, lattice: Lattice, W: float, model: PathLossModel,
                    budget: PowerBudget) -> "SchemeConfig":
        scheme = Scheme(scheme)
        r = 1 if scheme == Scheme.SH else max(1, lattice.rings)
        return cls(scheme, r, W, model, budget)


@dataclass
class SingleTierReport:
    n: int
    scheme: Scheme
    r: int
    R_L: float
    sinr: float
    delta_c: int
    Z_U: float
    R_n: float
    Z: np.ndarray = field(repr=False)
    total_hops: int = 0

    @property
    def z_mean(self) -> float:
        return float(self.Z.mean())

    @property
    def z_max(self) -> int:
        return int(self.Z.max())

    @property
    def bound_holds(self) -> bool:
        return bool(self.Z_U >= self.Z.max())


def delta_c(r: int) -> int:
    """Worst-case number of interfering cells for a reach-``r`` link."""
    if r < 1:
        raise ValueError(f"reach must be >= 1, got {r}")
    return 3 * r * (r + 1) - 1


def route_paths(lattice: Lattice, pairs: SDPairs, r: int) -> PathSet:
    return Router.for_lattice(lattice, r).paths(pairs.src, pairs.dst)


def route_all_flows(lattice: Lattice, pairs: SDPairs, r: int) -> np.ndarray:
    """Number of flows each node transmits (as source or relay)."""
    ps = route_paths(lattice, pairs, r)
    return ps.loads(lattice.n, ps.step_mask())


@lru_cache(maxsize=None)
def _sh_expected_loads(rings: int) -> np.ndarray:
    # routing only depends on the cell graph, not on side length or offsets
    E = expected_loads(Router(build_lattice(rings), 1))
    E.setflags(write=False)
    return E


def sh_expected_loads(lattice: Lattice) -> np.ndarray:
    """Exact ``E[Z_i]`` of every node under SH routing and uniform traffic."""
    return _sh_expected_loads(lattice.rings)


def sh_relay_bound(lattice: Lattice) -> float:
    """``max_i (1 + delta_i) E[Z_i]`` with ``delta_i = sqrt(6 ln n / E[Z_i])``.

    Each ``Z_i`` is a sum of independent per-source indicators, so the
    Chernoff tail applies node by node with that node's own expectation.
    """
    E = sh_expected_loads(lattice)
    return float(np.max((1.0 + chernoff_delta(lattice.n, E)) * E))


@lru_cache(maxsize=256)
def _link_sinr(reach, model, budget, rings, a):
    return tdma_sinr(reach, model, budget, rings, a)


def per_node_throughput(cfg: SchemeConfig, lattice: Lattice, pairs: SDPairs) -> SingleTierReport:
    ps = route_paths(lattice, pairs, cfg.r)
    Z = ps.loads(lattice.n, ps.step_mask())
    sinr = _link_sinr(cfg.r, cfg.model, cfg.budget, lattice.rings, lattice.a)
    R_L = shannon_rate(cfg.W, sinr)
    dc = delta_c(cfg.r)
    Z_U = sh_relay_bound(lattice) if cfg.scheme == Scheme.SH else float(LH_RELAY_CAP)
    R_n = R_L / ((1 + dc) * Z_U)
    return SingleTierReport(lattice.n, cfg.scheme, cfg.r, R_L, sinr, dc, Z_U, R_n, Z,
                            int(ps.hops.sum()))


def fit_scaling_exponent(points) -> tuple[float, float, float]:
    """Least-squares line through ``(log n, log value)``.

    Returns ``(slope, intercept, r_squared)``; natural logs.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise ValueError("need at least 3 (n, value) points")
    if np.any(pts <= 0):
        raise ValueError("scaling fit needs strictly positive n and values")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(slope), float(intercept), r2


def relay_exceedance(lattice: Lattice, pairs: SDPairs) -> bool:
    """True if some node's SH load exceeds its own ``(1 + delta_i) E[Z_i]``."""
    E = sh_expected_loads(lattice)
    Z = route_all_flows(lattice, pairs, 1)
    return bool(np.any(Z > (1.0 + chernoff_delta(lattice.n, E)) * E))


def concentration_trial_stats(lattice: Lattice, seeds) -> tuple[int, int]:
    """Count seeds whose SH loads break the per-node Chernoff bound."""
    router = Router.for_lattice(lattice, 1)
    router.build_table()
    E = sh_expected_loads(lattice)
    limit = (1.0 + chernoff_delta(lattice.n, E)) * E
    hits = 0
    total = 0
    for seed in seeds:
        pairs = draw_sd_pairs(lattice, seed)
        ps = router.paths(pairs.src, pairs.dst)
        Z = ps.loads(lattice.n, ps.step_mask())
        hits += bool(np.any(Z > limit))
        total += 1
    return hits, total


def empirical_bound(p_hat: float, trials: int, n: int, k_se: float = 3.0) -> float:
    """``1/n^2 + k_se`` binomial standard errors around an observed frequency."""
    se = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / trials)
    return 1.0 / (n * n) + k_se * se
