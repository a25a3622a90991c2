"""Command-line driver: config parsing, experiment sweeps and CSV output.

Usage::

    meshscale single-tier --config sweep.ini --out st.csv
    meshscale multi-tier --parallel 4 --out mt.csv
    meshscale check
    meshscale plan
    meshscale bounds --out bounds.csv
    meshscale config-reference

Every subcommand runs with built-in defaults when ``--config`` is omitted.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import re
import sys
import tempfile
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .hexlattice import MAX_EPS, build_lattice
from .multi_tier import (Mode, OrdersError, ScalingOrders, TierBase, cached_topology, crossing_probabilities,
                         orders_violations, simulate)
from .planner import Anchor, check_scalability, format_plan_table, plan_deployment
from .radio import (PathLossModel, PowerBudget, interference_bound_perturbed, interference_bound_regular,
                    interference_sum, required_power)
from .single_tier import (SchemeConfig, fit_scaling_exponent, per_node_throughput, sh_expected_loads)
from .traffic import draw_sd_pairs

COMMANDS = ("single-tier", "multi-tier", "check", "plan", "bounds")
SEEDED_COMMANDS = ("single-tier", "multi-tier", "bounds")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CELL = 3
EXIT_IO = 4

TIMESTAMP_PREFIX = "# generated: "
PARTIAL_MARKER = "# PARTIAL"


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("\n".join(self.violations))


def _ints(text: str) -> list[int]:
    """``"0-19"``, ``"1,2,5"`` or a mix such as ``"0-3,10"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\d+)\s*-\s*(\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ValueError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def _floats(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _words(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


# (section, key) -> (parser, default text, description)
SCHEMA: dict[tuple[str, str], tuple] = {
    ("experiment", "command"): (str, "", "subcommand this file is meant for; checked against the one invoked"),
    ("experiment", "rings"): (_ints, "8,12,16,24,32", "single-tier ring counts to sweep (n = 3R(R+1)+1)"),
    ("experiment", "sizes"): (_ints, "256,1024,4096", "multi-tier data-node counts to sweep"),
    ("experiment", "seeds"): (_ints, "0-19", "traffic seeds; ranges like 0-19 are inclusive"),
    ("experiment", "schemes"): (_words, "SH,LH", "single-tier schemes (SH, LH)"),
    ("experiment", "modes"): (_words, "SM,BF", "multi-tier MIMO modes (SM, BF)"),
    ("experiment", "parallel"): (int, "0", "worker processes; 0 = all available CPUs"),
    ("lattice", "placement"): (str, "regular", "regular or perturbed node placement"),
    ("lattice", "eps"): (float, "0.25", "perturbation radius as a fraction of the cell side"),
    ("lattice", "spacing_m"): (float, "1.0", "tier-1 neighbour spacing (m)"),
    ("radio", "alpha"): (float, "3.0", "path-loss exponent"),
    ("radio", "gain_linear"): (float, "1.0", "path-loss gain constant C (linear)"),
    ("radio", "threshold_mw"): (float, "1.0", "receive threshold P0 (mW)"),
    ("radio", "noise_mw"): (_opt_float, "none", "noise floor (mW); none = threshold / 10"),
    ("radio", "bandwidth_hz"): (float, "1e7", "tier-1 bandwidth W (Hz)"),
    ("hierarchy", "k"): (float, "2", "node-count decay order, n_l = n / l^k"),
    ("hierarchy", "psi"): (float, "1", "bandwidth growth order, W_l = W_1 l^psi"),
    ("hierarchy", "upsilon"): (float, "1", "antenna growth order, M_l = M_1 l^upsilon"),
    ("hierarchy", "antennas"): (int, "1", "tier-1 antenna count M_1"),
    ("hierarchy", "eta"): (_opt_float, "none", "SM spectral efficiency (bit/s/Hz); none = from TDMA SINR"),
    ("hierarchy", "bf_interference_mw"): (float, "0", "residual interference floor under beamforming (mW)"),
    ("plan", "n"): (int, "10000", "data-node count"),
    ("plan", "k"): (float, "8", "node-count decay order"),
    ("plan", "psi"): (float, "4", "bandwidth growth order"),
    ("plan", "upsilon"): (float, "4", "antenna growth order"),
    ("plan", "p1_mw"): (float, "1", "tier-1 transmit power (mW)"),
    ("plan", "d1_m"): (float, "50", "tier-1 transmission range (m)"),
    ("plan", "p0_dbm"): (_floats, "-78", "receive threshold (dBm), one value or one per tier"),
    ("plan", "gains_db"): (_floats, "3,6,9", "antenna gain per tier (dB)"),
    ("plan", "alpha"): (_floats, "3", "path-loss exponent, one value or one per tier"),
    ("plan", "bandwidth_hz"): (float, "1e7", "tier-1 bandwidth (Hz)"),
    ("plan", "antennas"): (int, "1", "tier-1 antenna count"),
    ("plan", "reference_power_mw"): (_floats, "1,2000,13000", "reference powers to flag against; empty = none"),
    ("bounds", "max_rings"): (int, "32", "regular sweep covers ring counts 1..max_rings"),
    ("bounds", "alphas"): (_floats, "2.5,3,3.5,4", "path-loss exponents of the regular sweep"),
    ("bounds", "trials"): (int, "1000", "number of perturbed lattices"),
    ("bounds", "trial_rings"): (int, "16", "ring count of the perturbed lattices"),
    ("bounds", "trial_eps"): (float, "0.25", "perturbation radius of the perturbed lattices"),
    ("bounds", "trial_alpha"): (float, "3", "path-loss exponent of the perturbed lattices"),
}


@dataclass
class ExperimentConfig:
    command: str
    values: dict = field(default_factory=dict)
    source: str = ""

    def get(self, section: str, key: str):
        return self.values[(section, key)]

    def canonical(self) -> str:
        # the worker count never changes results, so it stays out of the hash
        items = {f"{s}.{k}": v for (s, k), v in sorted(self.values.items()) if (s, k) != ("experiment", "parallel")}
        return json.dumps({"command": self.command, "values": items}, sort_keys=True, default=str)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    @property
    def seeds(self) -> list[int]:
        return self.get("experiment", "seeds")

    @property
    def parallel(self) -> int:
        p = self.get("experiment", "parallel")
        return p if p > 0 else (os.cpu_count() or 1)


def _key_lines(text: str) -> dict[tuple[str, str], tuple[int, str]]:
    where = {}
    section = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m:
            where[(section, m.group(1).strip().lower())] = (no, line.rstrip())
    return where


def parse_config(text: str, command: str | None = None) -> ExperimentConfig:
    """Parse and validate an INI config, collecting every violation."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}".splitlines()[0]]) from None
    where = _key_lines(text)
    errs = []
    values = {key: entry[0](entry[1]) for key, entry in SCHEMA.items()}
    known_sections = {s for s, _ in SCHEMA}
    for section in cp.sections():
        if section.lower() not in known_sections:
            errs.append(f"unknown section [{section}]")
            continue
        for key, raw in cp.items(section):
            ident = (section.lower(), key.lower())
            if ident not in SCHEMA:
                no, line = where.get(ident, (0, key))
                errs.append(f"line {no}: unknown key {section}.{key}: {line.strip()!r}")
                continue
            try:
                values[ident] = SCHEMA[ident][0](raw)
            except (TypeError, ValueError) as exc:
                no, _ = where.get(ident, (0, ""))
                errs.append(f"line {no}: {section}.{key} = {raw!r} is not valid ({exc})")
    declared = values[("experiment", "command")]
    if command is None:
        command = declared
    elif declared and declared != command:
        errs.append(f"experiment.command = {declared!r} but the {command!r} subcommand was invoked")
    if command not in COMMANDS:
        errs.append(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    values[("experiment", "command")] = command
    errs += _validate(command, values)
    if errs:
        raise ConfigError(errs)
    return ExperimentConfig(command, values, text)


def _validate(command: str, v: dict) -> list[str]:
    errs = []

    def need(cond, msg):
        if not cond:
            errs.append(msg)

    if command in ("single-tier", "multi-tier", "bounds"):
        need(v[("experiment", "seeds")], "experiment.seeds must list at least one seed")
    if command == "single-tier":
        rings = v[("experiment", "rings")]
        need(rings, "experiment.rings must list at least one ring count")
        need(all(r >= 1 for r in rings), "experiment.rings: every ring count must be >= 1")
        bad = [s for s in v[("experiment", "schemes")] if s not in ("SH", "LH")]
        need(not bad, f"experiment.schemes: unknown scheme(s) {bad}; use SH or LH")
        need(v[("experiment", "schemes")], "experiment.schemes must name at least one scheme")
    if command == "multi-tier":
        sizes = v[("experiment", "sizes")]
        need(sizes, "experiment.sizes must list at least one size")
        need(all(n >= 2 for n in sizes), "experiment.sizes: every size must be >= 2")
        bad = [s for s in v[("experiment", "modes")] if s not in ("SM", "BF")]
        need(not bad, f"experiment.modes: unknown mode(s) {bad}; use SM or BF")
        need(v[("experiment", "modes")], "experiment.modes must name at least one mode")
    if command in ("multi-tier", "check"):
        errs += [f"hierarchy.{e}" for e in _orders_violations(v, "hierarchy")]
        need(v[("hierarchy", "antennas")] >= 1, "hierarchy.antennas must be >= 1")
        eta = v[("hierarchy", "eta")]
        need(eta is None or eta > 0, "hierarchy.eta must be positive")
        need(v[("hierarchy", "bf_interference_mw")] >= 0, "hierarchy.bf_interference_mw must be >= 0")
    if command == "plan":
        errs += [f"plan.{e}" for e in _orders_violations(v, "plan")]
        need(v[("plan", "n")] >= 1, "plan.n must be >= 1")
        need(v[("plan", "p1_mw")] > 0 and v[("plan", "d1_m")] > 0, "plan.p1_mw and plan.d1_m must be positive")
        need(all(a > 2 for a in v[("plan", "alpha")]), "plan.alpha must exceed 2")
    if command in ("single-tier", "multi-tier", "check"):
        need(v[("radio", "alpha")] > 2, f"radio.alpha = {v[('radio', 'alpha')]} violates alpha > 2")
        need(v[("radio", "gain_linear")] > 0, "radio.gain_linear must be positive")
        need(v[("radio", "threshold_mw")] > 0, "radio.threshold_mw must be positive")
        need(v[("radio", "bandwidth_hz")] > 0, "radio.bandwidth_hz must be positive")
        noise = v[("radio", "noise_mw")]
        need(noise is None or noise >= 0, "radio.noise_mw must be >= 0")
    if command in ("single-tier", "multi-tier"):
        need(v[("lattice", "placement")] in ("regular", "perturbed"),
             "lattice.placement must be regular or perturbed")
        eps = v[("lattice", "eps")]
        need(0 <= eps < MAX_EPS, f"lattice.eps = {eps} violates 0 <= eps < 3/4")
        need(v[("lattice", "spacing_m")] > 0, "lattice.spacing_m must be positive")
    if command == "bounds":
        need(v[("bounds", "max_rings")] >= 1, "bounds.max_rings must be >= 1")
        need(all(a > 2 for a in v[("bounds", "alphas")]), "bounds.alphas must all exceed 2")
        need(v[("bounds", "trial_alpha")] > 2, "bounds.trial_alpha must exceed 2")
        need(v[("bounds", "trials")] >= 0, "bounds.trials must be >= 0")
        need(v[("bounds", "trial_rings")] >= 1, "bounds.trial_rings must be >= 1")
        eps = v[("bounds", "trial_eps")]
        need(0 <= eps < MAX_EPS, f"bounds.trial_eps = {eps} violates 0 <= eps < 3/4")
    return errs


def _orders_violations(v: dict, section: str) -> list[str]:
    return orders_violations(v[(section, "k")], v[(section, "psi")], v[(section, "upsilon")])


def config_reference() -> str:
    """Markdown reference of every config key, generated from the schema."""
    lines = ["# Config reference", "", "INI file; every key is optional.", ""]
    section = None
    for (sec, key), (_, default, doc) in SCHEMA.items():
        if sec != section:
            lines += ["", f"## [{sec}]", "", "| key | default | meaning |", "|---|---|---|"]
            section = sec
        lines.append(f"| `{key}` | `{default}` | {doc} |")
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# --- experiment cells ------------------------------------------------------

SINGLE_TIER_COLUMNS = [
    "rings_count", "nodes_count", "seed_id", "scheme", "reach_hops", "sinr_linear", "link_rate_bps",
    "delta_c_cells", "z_mean_flows", "z_max_flows", "z_bound_flows", "bound_holds", "throughput_bps",
]

MULTI_TIER_COLUMNS = [
    "nodes_count", "seed_id", "mode", "tier_idx", "tier_nodes_count", "tier_sites_count", "d_hops",
    "spacing_m", "flows_count", "crossing_prob", "crossing_analytic_prob", "xi_prob", "z_mean_flows",
    "z_max_flows", "parent_demand_flows", "zeta_u_ratio", "zeta_s_ratio", "tier_rate_bps",
    "network_rate_bps",
]

CHECK_COLUMNS = [
    "mode", "k_order", "psi_order", "upsilon_order", "alpha_exp", "margin_order", "holds",
    "w_tot_exponent_order", "m_max_exponent_order", "p_top_exponent_order",
]

PLAN_COLUMNS = [
    "tier_idx", "nodes_count", "gain_db", "c_eff_linear", "power_mw", "bandwidth_hz", "antennas_count",
    "range_m", "threshold_mw", "flag",
]

BOUNDS_COLUMNS = [
    "kind", "rings_count", "alpha_exp", "eps_ratio", "seed_id", "interference_mw", "bound_mw", "violated",
]


def _model(cfg: ExperimentConfig) -> PathLossModel:
    return PathLossModel(cfg.get("radio", "alpha"), cfg.get("radio", "gain_linear"))


def _lattice_eps(cfg: ExperimentConfig):
    return cfg.get("lattice", "eps") if cfg.get("lattice", "placement") == "perturbed" else None


def _single_tier_cell(args):
    cfg, rings, seed = args
    lattice = build_lattice(rings, cfg.get("lattice", "spacing_m") / np.sqrt(3.0),
                            cfg.get("lattice", "placement"), seed=seed, eps=_lattice_eps(cfg))
    pairs = draw_sd_pairs(lattice, seed)
    model = _model(cfg)
    P0 = cfg.get("radio", "threshold_mw")
    rows = []
    for scheme in cfg.get("experiment", "schemes"):
        r = 1 if scheme == "SH" else max(1, rings)
        budget = PowerBudget(required_power(model, P0, r, lattice.a), P0, cfg.get("radio", "noise_mw"))
        sc = SchemeConfig.for_lattice(scheme, lattice, cfg.get("radio", "bandwidth_hz"), model, budget)
        rep = per_node_throughput(sc, lattice, pairs)
        rows.append([rings, lattice.n, seed, scheme, rep.r, rep.sinr, rep.R_L, rep.delta_c, rep.z_mean,
                     rep.z_max, rep.Z_U, rep.bound_holds, rep.R_n])
    return rows


def _tier_base(cfg: ExperimentConfig) -> TierBase:
    return TierBase(W1=cfg.get("radio", "bandwidth_hz"), M1=cfg.get("hierarchy", "antennas"),
                    d1=cfg.get("lattice", "spacing_m"), alpha=cfg.get("radio", "alpha"),
                    C=cfg.get("radio", "gain_linear"), P0=cfg.get("radio", "threshold_mw"),
                    placement=cfg.get("lattice", "placement"),
                    eps=_lattice_eps(cfg), seed=0)


def _orders(cfg: ExperimentConfig, section: str = "hierarchy") -> ScalingOrders:
    return ScalingOrders(cfg.get(section, "k"), cfg.get(section, "psi"), cfg.get(section, "upsilon"))


def _multi_tier_cell(args):
    cfg, n, seed = args
    orders = _orders(cfg)
    topo = cached_topology(n, orders, _tier_base(cfg))
    Q = crossing_probabilities(topo.tiers)
    modes = [Mode(m) for m in cfg.get("experiment", "modes")]
    reports = simulate(topo, draw_sd_pairs(topo.tiers[0].lattice, seed), modes,
                       cfg.get("hierarchy", "eta"), cfg.get("hierarchy", "bf_interference_mw"))
    rows = []
    for mode in modes:
        rep = reports[mode]
        for tier, st, rate, q in zip(topo.tiers, rep.stats, rep.rates, Q):
            rows.append([n, seed, mode.value, tier.l, tier.n_l, tier.n_sites, tier.D, tier.d, st.N, st.Q, q,
                         st.xi, float(st.Z.mean()), st.Z_U, st.parent_demand, st.zeta_u, st.zeta_s, rate,
                         rep.R_n])
    return rows


def _bounds_regular_cell(args):
    cfg, rings = args
    lattice = build_lattice(rings)
    rows = []
    for alpha in cfg.get("bounds", "alphas"):
        model = PathLossModel(alpha)
        I = interference_sum(lattice, model, 1.0, 0, np.arange(1, lattice.n))
        B = interference_bound_regular(model, 1.0, lattice.a)
        rows.append(["regular", rings, alpha, 0.0, 0, I, B, I > B])
    return rows


def _bounds_perturbed_cell(args):
    cfg, seed = args
    rings = cfg.get("bounds", "trial_rings")
    eps = cfg.get("bounds", "trial_eps")
    model = PathLossModel(cfg.get("bounds", "trial_alpha"))
    lattice = build_lattice(rings, 1.0, "perturbed", seed=seed, eps=eps)
    I = interference_sum(lattice, model, 1.0, 0, np.arange(1, lattice.n))
    B = interference_bound_perturbed(model, 1.0, lattice.a, eps)
    return [["perturbed", rings, model.alpha, eps, seed, I, B, I > B]]


def _guarded(job):
    fn, args = job
    try:
        return fn(args), None
    except Exception as exc:  # a failing cell must not sink the sweep
        return None, f"{type(exc).__name__}: {exc}"


def _run_cells(jobs, parallel: int):
    if parallel <= 1 or len(jobs) <= 1:
        return [_guarded(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(parallel, len(jobs))) as pool:
        return list(pool.map(_guarded, jobs))


@dataclass
class RunResult:
    columns: list[str]
    rows: list[list]
    failures: list[str]
    text: str = ""
    summary: list[str] = field(default_factory=list)


def run(cfg: ExperimentConfig) -> RunResult:
    """Execute ``cfg``; rows come back in canonical (size, seed) order."""
    cmd = cfg.command
    if cmd == "check":
        return _run_check(cfg)
    if cmd == "plan":
        return _run_plan(cfg)
    if cmd == "single-tier":
        columns = SINGLE_TIER_COLUMNS
        jobs = [(_single_tier_cell, (cfg, r, s)) for r in cfg.get("experiment", "rings") for s in cfg.seeds]
        if cfg.get("experiment", "parallel") != 1 and "SH" in cfg.get("experiment", "schemes"):
            # prime the expected-load cache before forking
            for r in cfg.get("experiment", "rings"):
                sh_expected_loads(build_lattice(r))
    elif cmd == "multi-tier":
        columns = MULTI_TIER_COLUMNS
        jobs = [(_multi_tier_cell, (cfg, n, s)) for n in cfg.get("experiment", "sizes") for s in cfg.seeds]
    else:
        columns = BOUNDS_COLUMNS
        jobs = [(_bounds_regular_cell, (cfg, r)) for r in range(1, cfg.get("bounds", "max_rings") + 1)]
        base = cfg.seeds[0]
        jobs += [(_bounds_perturbed_cell, (cfg, base + i)) for i in range(cfg.get("bounds", "trials"))]
    rows, failures = [], []
    for (fn, args), (out, err) in zip(jobs, _run_cells(jobs, cfg.parallel)):
        if err is None:
            rows.extend(out)
        else:
            failures.append(f"{fn.__name__.strip('_')}{tuple(a for a in args[1:])}: {err}")
    res = RunResult(columns, rows, failures)
    res.summary = _summarize(cmd, columns, rows)
    return res


def _summarize(cmd: str, columns: list[str], rows: list[list]) -> list[str]:
    out = []
    if not rows:
        return out
    col = {c: i for i, c in enumerate(columns)}
    if cmd == "single-tier":
        for scheme in sorted({r[col["scheme"]] for r in rows}):
            by_n = {}
            for r in rows:
                if r[col["scheme"]] == scheme:
                    by_n.setdefault(r[col["nodes_count"]], []).append(r[col["throughput_bps"]])
            if len(by_n) >= 3:
                slope, _, r2 = fit_scaling_exponent((n, float(np.mean(v))) for n, v in sorted(by_n.items()))
                out.append(f"{scheme}: throughput ~ n^{slope:.4f} (r2 {r2:.4f})")
    elif cmd == "multi-tier":
        for mode in sorted({r[col["mode"]] for r in rows}):
            by_n = {}
            for r in rows:
                if r[col["mode"]] == mode and r[col["tier_idx"]] == 1:
                    by_n.setdefault(r[col["nodes_count"]], []).append(r[col["network_rate_bps"]])
            if len(by_n) >= 3 and all(np.mean(v) > 0 for v in by_n.values()):
                slope, _, r2 = fit_scaling_exponent((n, float(np.mean(v))) for n, v in sorted(by_n.items()))
                out.append(f"{mode}: network throughput ~ n^{slope:.4f} (r2 {r2:.4f})")
    elif cmd == "bounds":
        viol = sum(bool(r[col["violated"]]) for r in rows)
        out.append(f"{viol} bound violations over {len(rows)} cases")
    return out


def _run_check(cfg: ExperimentConfig) -> RunResult:
    orders = _orders(cfg)
    alpha = cfg.get("radio", "alpha")
    rows, text = [], []
    for mode in (Mode.SM, Mode.BF):
        v = check_scalability(orders, alpha, mode)
        rows.append([mode.value, orders.k, orders.psi, orders.upsilon, alpha, v.margin, v.holds,
                     v.w_tot_exponent, v.m_max_exponent, v.p_top_exponent])
        text.append(v.summary())
    return RunResult(CHECK_COLUMNS, rows, [], "\n".join(text))


def _run_plan(cfg: ExperimentConfig) -> RunResult:
    orders = _orders(cfg, "plan")

    def one_or_list(key):
        v = cfg.get("plan", key)
        return v[0] if len(v) == 1 else tuple(v)

    anchor = Anchor(P1_mw=cfg.get("plan", "p1_mw"), d1_m=cfg.get("plan", "d1_m"),
                    P0_dbm=one_or_list("p0_dbm"), gains_db=one_or_list("gains_db"),
                    W1_hz=cfg.get("plan", "bandwidth_hz"), M1=cfg.get("plan", "antennas"),
                    alpha=one_or_list("alpha"))
    ref = cfg.get("plan", "reference_power_mw") or None
    plan = plan_deployment(cfg.get("plan", "n"), orders, anchor, ref)
    rows = []
    for t in plan.tiers:
        flag = next((f for f in plan.flags if f.startswith(f"tier {t.l}:")), "")
        rows.append([t.l, t.n_l, t.gain_db, t.C_eff, t.P_mw, t.W_hz, t.M, t.d_m, t.P0_mw, flag])
    return RunResult(PLAN_COLUMNS, rows, [], format_plan_table(plan))


def render_csv(cfg: ExperimentConfig, result: RunResult, timestamp: str | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# meshscale {__version__}\n")
    buf.write(f"# command: {cfg.command}\n")
    buf.write(f"# config_sha256: {cfg.digest()}\n")
    if cfg.command in SEEDED_COMMANDS:
        buf.write(f"# seeds: {','.join(str(s) for s in cfg.seeds)}\n")
    if timestamp is None:
        timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    buf.write(f"{TIMESTAMP_PREFIX}{timestamp}\n")
    if result.failures:
        buf.write(f"{PARTIAL_MARKER}: {len(result.failures)} cell(s) failed\n")
        for f in result.failures:
            buf.write(f"#   {f}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def strip_timestamp(text: str) -> str:
    return "".join(l for l in text.splitlines(keepends=True) if not l.startswith(TIMESTAMP_PREFIX))


def write_atomic(path: str, text: str):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".meshscale-", suffix=".tmp", dir=folder)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meshscale", description="Capacity scaling experiments for "
                                     "single- and multi-tier hexagonal mesh networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("single-tier", "SH/LH per-node throughput sweep"),
                           ("multi-tier", "hierarchical D-hop routing sweep"),
                           ("check", "scalability conditions for the configured orders"),
                           ("plan", "deployment plan from a tier-1 anchor"),
                           ("bounds", "interference bound dominance trials")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="INI config file (defaults used when omitted)")
        p.add_argument("--out", help="CSV output path; '-' or omitted prints to stdout")
        p.add_argument("--seed", type=int, help="first seed; the seed list keeps its length")
        p.add_argument("--parallel", type=int, help="worker processes (0 = all CPUs)")
    sub.add_parser("config-reference", help="print every config key with its default")
    return parser


def _load(args) -> ExperimentConfig:
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    cfg = parse_config(text, args.command)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError([f"--seed must be >= 0, got {args.seed}"])
        count = len(cfg.seeds)
        cfg.values[("experiment", "seeds")] = list(range(args.seed, args.seed + count))
    if args.parallel is not None:
        if args.parallel < 0:
            raise ConfigError([f"--parallel must be >= 0, got {args.parallel}"])
        cfg.values[("experiment", "parallel")] = args.parallel
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "config-reference":
        sys.stdout.write(config_reference())
        return EXIT_OK
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        result = run(cfg)
    except (OrdersError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        return EXIT_CELL
    text = render_csv(cfg, result)
    if result.text:
        print(result.text)
    for line in result.summary:
        print(line, file=sys.stderr)
    try:
        if args.out and args.out != "-":
            write_atomic(args.out, text)
        elif cfg.command != "plan" or args.out == "-":
            sys.stdout.write(text)
    except OSError as exc:
        print(f"cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    for f in result.failures:
        print(f"cell failed: {f}", file=sys.stderr)
    return EXIT_CELL if result.failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
