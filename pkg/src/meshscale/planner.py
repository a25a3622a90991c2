"""Scalability conditions, resource totals and deployment planning.

The deployment planner calibrates an effective propagation constant from a
tier-1 anchor (transmit power, range and receive threshold), then sizes
every tier so its nodes just reach the threshold at the tier's spacing.
Quoted antenna gains enter as offsets relative to tier 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .multi_tier import (Mode, ScalingOrders, bf_rate_exponent, nominal_nodes, sm_rate_exponent,
                         spacing_chain, tier_count)
from .radio import db_to_linear, dbm_to_mw

_MARGIN_TOL = 1e-12
# a computed power further than this factor from a reference value is flagged
REFERENCE_TOLERANCE = 1.5


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class ScalabilityVerdict:
    mode: Mode
    holds: bool
    margin: float
    w_tot_exponent: float
    m_max_exponent: float
    p_top_exponent: float

    def summary(self) -> str:
        cond = "psi + upsilon - k" if self.mode == Mode.SM else "psi + 2 upsilon / alpha - k"
        state = "holds" if self.holds else "fails"
        return (f"{self.mode.value}: {state} ({cond} = {self.margin:+.4g}); "
                f"W_tot ~ n^{self.w_tot_exponent:.4g}, M_max ~ n^{self.m_max_exponent:.4g}, "
                f"P_L ~ n^{self.p_top_exponent:.4g}")


def check_scalability(orders: ScalingOrders, alpha: float = 3.0, mode: Mode = Mode.SM) -> ScalabilityVerdict:
    """Whether the growth orders keep every tier rate from decaying with ``l``."""
    if not alpha > 2:
        raise PlanError(f"alpha must exceed 2, got {alpha}")
    mode = Mode(mode)
    margin = sm_rate_exponent(orders) if mode == Mode.SM else bf_rate_exponent(orders, alpha)
    return ScalabilityVerdict(
        mode=mode,
        holds=margin >= -_MARGIN_TOL,
        margin=float(margin),
        w_tot_exponent=(orders.psi + 1.0) / orders.k,
        m_max_exponent=orders.upsilon / orders.k,
        p_top_exponent=alpha / 2.0,
    )


@dataclass(frozen=True)
class ResourceTotals:
    L: int
    W_tot: float
    M_max: float
    w_tot_exponent: float
    m_max_exponent: float


def resource_totals(orders: ScalingOrders, n: int, W1: float, M1: float = 1) -> ResourceTotals:
    L = tier_count(n, orders.k)
    W_tot = sum(W1 * l ** orders.psi for l in range(1, L + 1))
    return ResourceTotals(L, float(W_tot), float(M1 * L ** orders.upsilon),
                          (orders.psi + 1.0) / orders.k, orders.upsilon / orders.k)


@dataclass(frozen=True)
class Anchor:
    """Tier-1 operating point plus per-tier gains and thresholds."""

    P1_mw: float = 1.0
    d1_m: float = 50.0
    P0_dbm: float | tuple = -78.0
    gains_db: tuple = (3.0, 6.0, 9.0)
    W1_hz: float = 10e6
    M1: int = 1
    alpha: float | tuple = 3.0


CASE_STUDY_ANCHOR = Anchor()
CASE_STUDY_ORDERS = ScalingOrders(8, 4, 4)
CASE_STUDY_N = 10000
# transmit powers listed for the 10,000-node case study
CASE_STUDY_POWER_MW = (1.0, 2000.0, 13000.0)


@dataclass
class PlannedTier:
    l: int
    n_l: int
    gain_db: float
    C_eff: float
    P_mw: float
    W_hz: float
    M: float
    d_m: float
    alpha: float
    P0_mw: float

    def threshold_residual(self) -> float:
        rx = self.C_eff * self.P_mw * self.d_m ** (-self.alpha)
        return abs(rx - self.P0_mw) / self.P0_mw


@dataclass
class DeploymentPlan:
    n: int
    orders: ScalingOrders
    tiers: list[PlannedTier]
    C_eff1: float
    flags: list[str] = field(default_factory=list)

    @property
    def L(self) -> int:
        return len(self.tiers)

    def column(self, name: str) -> list:
        return [getattr(t, name) for t in self.tiers]


def _per_tier(value, L: int, name: str) -> list[float]:
    if isinstance(value, (list, tuple)):
        if len(value) != L:
            raise PlanError(f"{name} lists {len(value)} tiers but the hierarchy has {L}")
        return [float(v) for v in value]
    return [float(value)] * L


def plan_deployment(n: int, orders: ScalingOrders, anchor: Anchor = CASE_STUDY_ANCHOR,
                    reference_power_mw=None) -> DeploymentPlan:
    """Size every tier of an ``n``-node hierarchy from a tier-1 anchor.

    ``C_eff,1 = P0_1 d_1^alpha / P_1`` absorbs whatever propagation loss the
    quoted gains leave out; tier ``l`` uses ``C_eff,1`` scaled by its gain
    relative to tier 1 and transmits at ``P0_l d_l^alpha / C_eff,l``.
    Computed powers more than a factor :data:`REFERENCE_TOLERANCE` away
    from ``reference_power_mw`` are flagged, not adjusted.
    """
    L = tier_count(n, orders.k)
    gains = _per_tier(anchor.gains_db, L, "gains_db")
    alphas = _per_tier(anchor.alpha, L, "alpha")
    p0 = [float(dbm_to_mw(v)) for v in _per_tier(anchor.P0_dbm, L, "P0_dbm")]
    if reference_power_mw is not None and len(reference_power_mw) != L:
        raise PlanError(f"reference powers list {len(reference_power_mw)} tiers but the hierarchy has {L}")
    if not (anchor.P1_mw > 0 and anchor.d1_m > 0):
        raise PlanError("anchor power and range must be positive")

    C1 = p0[0] * anchor.d1_m ** alphas[0] / anchor.P1_mw
    spacing = spacing_chain(anchor.d1_m, L, orders.k)
    tiers = []
    flags = []
    for i, l in enumerate(range(1, L + 1)):
        C = C1 * float(db_to_linear(gains[i] - gains[0]))
        d = spacing[i]
        P = anchor.P1_mw if l == 1 else p0[i] * d ** alphas[i] / C
        tiers.append(PlannedTier(
            l=l, n_l=n if l == 1 else nominal_nodes(n, l, orders.k), gain_db=gains[i], C_eff=C,
            P_mw=P, W_hz=anchor.W1_hz * l ** orders.psi, M=anchor.M1 * l ** orders.upsilon,
            d_m=d, alpha=alphas[i], P0_mw=p0[i],
        ))
        if reference_power_mw is not None:
            ref = float(reference_power_mw[i])
            ratio = P / ref
            if not 1.0 / REFERENCE_TOLERANCE <= ratio <= REFERENCE_TOLERANCE:
                flags.append(f"tier {l}: computed P = {format_power(P)} vs reference "
                             f"{format_power(ref)} (x{ratio:.3g})")
    return DeploymentPlan(n, orders, tiers, C1, flags)


def case_study_plan() -> DeploymentPlan:
    return plan_deployment(CASE_STUDY_N, CASE_STUDY_ORDERS, CASE_STUDY_ANCHOR, CASE_STUDY_POWER_MW)


def _sig3(x: float) -> str:
    return f"{x:.3g}"


def format_power(mw: float) -> str:
    if mw >= 1000:
        return f"{_sig3(mw / 1000)} W"
    return f"{_sig3(mw)} mW"


def format_distance(m: float) -> str:
    return f"{_sig3(m / 1000)} km" if m >= 1000 else f"{_sig3(m)} m"


def format_plan_table(plan: DeploymentPlan) -> str:
    """Aligned text table, one column per tier."""
    rows = [
        ("Tier index", [str(t.l) for t in plan.tiers]),
        ("Number of nodes (n_l)", [f"{t.n_l:,}" for t in plan.tiers]),
        ("Antenna gain (C_l)", [f"{t.gain_db:g} dB" for t in plan.tiers]),
        ("Transmit power (P_l)", [format_power(t.P_mw) for t in plan.tiers]),
        ("Bandwidth (W_l)", [f"{_sig3(t.W_hz / 1e6)} MHz" for t in plan.tiers]),
        ("Antenna number (M_l)", [f"{t.M:g}" for t in plan.tiers]),
        ("Transmission range (d_l)", [format_distance(t.d_m) for t in plan.tiers]),
    ]
    head = max(len(r[0]) for r in rows)
    widths = [max(len(r[1][i]) for r in rows) for i in range(plan.L)]
    lines = []
    for j, (label, cells) in enumerate(rows):
        lines.append(label.ljust(head) + " | " + " | ".join(c.rjust(w) for c, w in zip(cells, widths)))
        if j == 0:
            lines.append("-" * len(lines[0]))
    lines.append(f"calibrated C_eff,1 = {plan.C_eff1:.3g} (linear)")
    lines.extend("note: " + f for f in plan.flags)
    return "\n".join(lines)

