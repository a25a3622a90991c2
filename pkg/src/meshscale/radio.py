"""Path loss, link rates, interference sums and closed-form interference bounds.

All powers are linear milliwatts. Use :func:`dbm_to_mw` / :func:`db_to_linear`
at the edges when a quantity is quoted in decibels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .hexlattice import Lattice, build_lattice, ring_distance_bounds, ring_offsets

DEFAULT_THRESHOLD_SNR = 10.0  # P0 / noise when no noise floor is given


class RadioError(ValueError):
    pass


@dataclass(frozen=True)
class PathLossModel:
    """Received power ``C * P * d**-alpha``."""

    alpha: float
    C: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise RadioError(f"path-loss exponent must be positive, got {self.alpha}")
        if not self.C > 0:
            raise RadioError(f"gain constant must be positive, got {self.C}")

    def require_bounded(self):
        # the lattice interference bounds divide by alpha - 2
        if not self.alpha > 2:
            raise RadioError(f"interference bounds need alpha > 2, got {self.alpha}")


@dataclass(frozen=True)
class PowerBudget:
    P: float
    P0: float
    noise: float | None = None

    def __post_init__(self):
        if not (self.P > 0 and self.P0 > 0):
            raise RadioError(f"powers must be positive, got P={self.P}, P0={self.P0}")
        if self.noise is not None and self.noise < 0:
            raise RadioError(f"noise power must be >= 0, got {self.noise}")

    @property
    def noise_mw(self) -> float:
        return self.P0 / DEFAULT_THRESHOLD_SNR if self.noise is None else self.noise


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_mw(dbm):
    return db_to_linear(dbm)


def mw_to_dbm(mw):
    return linear_to_db(mw)


def received_power(model: PathLossModel, P, d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise RadioError("distance must be positive")
    out = model.C * P * d ** (-model.alpha)
    return out if out.ndim else float(out)


def max_range(model: PathLossModel, budget: PowerBudget) -> float:
    """Largest distance at which the received power still meets ``P0``."""
    return (model.C * budget.P / budget.P0) ** (1.0 / model.alpha)


def required_power(model: PathLossModel, P0: float, ring: int, a: float = 1.0) -> float:
    """Transmit power that reaches every cell of ring ``ring`` at exactly ``P0``."""
    _, d_max = ring_distance_bounds(ring, a)
    return P0 * d_max ** model.alpha / model.C


def shannon_rate(W, gamma):
    W = np.asarray(W, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if np.any(W < 0) or np.any(gamma < 0):
        raise RadioError("bandwidth and SINR must be non-negative")
    out = W * np.log2(1.0 + gamma)
    return out if out.ndim else float(out)


def interference_sum(lattice: Lattice, model: PathLossModel, P: float, receiver: int,
                     active: Iterable[int]) -> float:
    """Total power at ``receiver`` from every node in ``active`` sending at ``P``.

    Distances are between actual (possibly perturbed) node positions.
    """
    active = np.fromiter(active, dtype=np.int64) if not isinstance(active, np.ndarray) \
        else active.astype(np.int64).ravel()
    if active.size == 0:
        return 0.0
    lattice.check_ids(receiver, active)
    if np.any(active == receiver):
        raise RadioError(f"receiver {receiver} is listed among the active transmitters")
    d = np.linalg.norm(lattice.positions[active] - lattice.positions[receiver], axis=1)
    return float(np.sum(model.C * P * d ** (-model.alpha)))


def interference_bound_regular(model: PathLossModel, P: float, a: float = 1.0) -> float:
    """Upper bound on the interference at the center of a regular lattice.

    Holds for any ring count when every other node transmits.
    """
    model.require_bounded()
    al = model.alpha
    return 6.0 * 2.0 ** al * model.C * P / (3.0 * a) ** al * (al - 1.0) / (al - 2.0)


def interference_bound_perturbed(model: PathLossModel, P: float, a: float = 1.0,
                                 eps: float = 0.25, rings: int | None = None) -> float:
    """Upper bound on the center interference when nodes are perturbed by ``< eps * a``.

    With ``rings`` given, the finite-network form (before letting the ring
    count go to infinity) is returned; it never exceeds the default value.
    """
    model.require_bounded()
    if not 0 <= eps < 0.75:
        raise RadioError(f"perturbation eps must satisfy 0 <= eps < 3/4, got {eps}")
    al = model.alpha
    base = 6.0 * 2.0 ** al * model.C * P / a ** al
    head = 1.0 / (3.0 - 4.0 * eps)
    if rings is None:
        tail = 1.0 / ((al - 2.0) * (3.0 - 4.0 * eps) ** (al - 2.0))
    else:
        if rings < 1:
            raise RadioError(f"ring count must be >= 1, got {rings}")
        tail = ((3.0 - 4.0 * eps) ** (2.0 - al) - (3.0 * rings - 4.0 * eps) ** (2.0 - al)) / (al - 2.0)
    return base * (head + tail)


def reuse_members(lattice: Lattice, anchor: int, reach: int) -> np.ndarray:
    """Nodes sharing a time slot with ``anchor`` under a reach-``reach`` reuse pattern.

    Cells are grouped into hexagonal clusters of radius ``reach``
    (``3 reach^2 + 3 reach + 1`` cells each) that tile the plane; one cell per
    cluster is active at a time, so co-scheduled transmitters are at least
    ``2 reach + 1`` hops apart.
    """
    m = 3 * reach * reach + 3 * reach + 1
    dq = lattice.q - lattice.q[anchor]
    dr = lattice.r - lattice.r[anchor]
    on = (((reach + 1) * dq - reach * dr) % m == 0) & ((reach * dq + (2 * reach + 1) * dr) % m == 0)
    return np.flatnonzero(on)


def tdma_sinr(reach: int, model: PathLossModel, budget: PowerBudget, rings: int,
              a: float = 1.0) -> float:
    """Worst-case SINR of a reach-``reach`` link under TDMA spatial reuse.

    The receiver sits at the network center (where interference peaks), the
    signal arrives at the threshold ``P0`` (transmitter at the ring's
    maximum distance), and every co-scheduled cell of the reuse pattern
    transmits at the power needed to cover ``reach`` rings. The minimum is
    taken over all ``6 * reach`` transmitter placements.
    """
    if reach < 1:
        raise RadioError(f"reach must be >= 1, got {reach}")
    lattice = build_lattice(max(rings, reach), a)
    P = required_power(model, budget.P0, reach, a)
    worst = math.inf
    for dq, dr in ring_offsets(reach):
        tx = lattice.node_id(int(dq), int(dr))
        others = reuse_members(lattice, tx, reach)
        others = others[others != tx]
        interference = interference_sum(lattice, model, P, 0, others)
        worst = min(worst, budget.P0 / (budget.noise_mw + interference))
    return worst
