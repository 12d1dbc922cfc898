# ----------------------- core/engine.py -----------------------
"""Correlated-snapshot simulation loop.

Per snapshot, in this order:
 1) advance clock              6) SINR, throughput, drain files
 2) move users                 7) retire finished, rescue or drop uncovered
 3) arrivals + CAC             8) smoothed loads
 4) handovers (ascending id)   9) margin update (order 1 only)
 5) PRB reallocation          10) metrics (after warm-up)
"""
from __future__ import annotations
import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np

from config import settings as S
from core.errors import ConsistencyError
from core.metrics import MetricsAccumulator, MetricsReport, build_report
from core.mobility import (
    CacDecision, admissible_headroom, admit_measured, committed_load, evaluate_handover,
    rescue_target,
)
from core.propagation import ShadowingField, dbm_to_watts, path_loss_matrix
from core.radio import (
    LoadVector, build_link_curve, reallocate_prbs, sinr_batch, smoothing_alpha,
    throughput_per_prb, update_loads,
)
from data.layout import build_adjacency, build_interference_matrix, site_positions
from data.scenario import Scenario
from strategy.balancing import BalancingFunction, HandoverMarginMatrix, update_margins
from utils.rng import RngStreams

logger = logging.getLogger(__name__)

Policy = Literal["auto", "fixed"]
POLICIES: Tuple[str, ...] = ("auto", "fixed")

Bounds = Tuple[float, float, float, float]


# =========================
# State
# =========================

@dataclass(eq=False)
class UserSession:
    id: int
    position: np.ndarray
    heading: float                 # rad
    speed: float                   # m/s
    serving: int
    allocated_prbs: int
    remaining_bytes: float
    admitted_at: float             # s, start of the first transmitting snapshot
    shadow_db: np.ndarray          # one entry per site, fixed for the session
    measured: bool = True          # arrived after warm-up

    @property
    def velocity(self) -> np.ndarray:
        return self.speed * np.array([math.cos(self.heading), math.sin(self.heading)])


@dataclass(frozen=True, eq=False)
class NetworkContext:
    """Everything derived once from the scenario and never mutated."""
    site_xy: np.ndarray
    eirp_dbm: np.ndarray
    capacity: np.ndarray
    interference: np.ndarray       # Λ, zero diagonal
    adjacency: np.ndarray
    balancing: BalancingFunction
    curve: object
    noise_w: float
    alpha: float
    bounds: Bounds

    @classmethod
    def build(cls, scenario: Scenario, balancing: BalancingFunction) -> "NetworkContext":
        sites = scenario.sites
        return cls(
            site_xy=site_positions(sites),
            eirp_dbm=np.array([s.tx_power_per_subcarrier + s.antenna_gain for s in sites], dtype=float),
            capacity=np.array([s.prb_capacity for s in sites], dtype=int),
            interference=build_interference_matrix(sites).entries.astype(float),
            adjacency=build_adjacency(sites, scenario.policy.adjacency_factor * scenario.inter_site_distance),
            balancing=balancing,
            curve=build_link_curve(scenario.link),
            noise_w=float(dbm_to_watts(scenario.radio.thermal_noise_per_subcarrier)),
            alpha=smoothing_alpha(scenario.snapshot_duration, scenario.policy.load_time_constant),
            bounds=scenario.bounds,
        )


@dataclass(eq=False)
class SimulationState:
    ctx: NetworkContext
    policy: str
    rng: RngStreams
    shadowing: ShadowingField
    loads: LoadVector                          # smoothed PRB occupancy, weights interference
    committed: LoadVector                      # smoothed committed load, drives the margins
    margins: HandoverMarginMatrix
    occupancy: np.ndarray                      # PRBs in use per cell
    users_per_cell: np.ndarray
    clock: float = 0.0
    snapshot: int = 0
    next_uid: int = 0
    sessions: Dict[int, UserSession] = field(default_factory=dict)
    metrics: MetricsAccumulator = field(default_factory=MetricsAccumulator)
    totals: Dict[str, int] = field(default_factory=lambda: {
        "arrivals": 0, "admitted": 0, "blocked_coverage": 0, "blocked_resource": 0,
        "completed": 0, "dropped": 0, "handovers": 0, "rescue_handovers": 0,
    })
    members: List[Dict[int, UserSession]] = field(default_factory=list)   # sessions per serving cell
    min_prb: int = S.MIN_PRB_PER_USER
    events: Optional[List[tuple]] = None       # kept only when an event log is requested
    hm_rows: Optional[List[tuple]] = None
    hasher: "hashlib._Hash" = field(default_factory=hashlib.sha256)

    @property
    def event_hash(self) -> str:
        return self.hasher.hexdigest()

    @property
    def active(self) -> int:
        return len(self.sessions)

    def headroom(self) -> np.ndarray:
        return admissible_headroom(self.users_per_cell, self.ctx.capacity, self.min_prb)


def _log_event(state: SimulationState, event: str, uid: int, a: int = -1, b: int = -1) -> None:
    row = (round(state.clock, 9), event, uid, a, b)
    state.hasher.update(f"{row[0]!r},{event},{uid},{a},{b}\n".encode("ascii"))
    if state.events is not None:
        state.events.append(row)


def init_state(scenario: Scenario, policy: Policy = "auto", keep_events: bool = False,
               keep_margins: bool = False) -> SimulationState:
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
    bf = BalancingFunction.from_policy(scenario.policy, order=0 if policy == "fixed" else None)
    ctx = NetworkContext.build(scenario, bf)
    rng = RngStreams(scenario.rng_seed)
    n = scenario.n_sites
    state = SimulationState(
        ctx=ctx,
        policy=policy,
        rng=rng,
        shadowing=ShadowingField(n, scenario.propagation.shadowing_sigma_db, rng.shadowing),
        loads=LoadVector.zeros(n, scenario.policy.load_time_constant),
        committed=LoadVector.zeros(n, scenario.policy.load_time_constant),
        margins=HandoverMarginMatrix.planned(ctx.adjacency, bf.f0, scenario.policy.hysteresis),
        occupancy=np.zeros(n, dtype=int),
        users_per_cell=np.zeros(n, dtype=int),
        events=[] if keep_events else None,
        hm_rows=[] if keep_margins else None,
        members=[{} for _ in range(n)],
        min_prb=scenario.radio.min_prb_per_user,
    )
    logger.debug("[ENGINE] init %d sites, %d adjacent pairs, policy=%s order=%d",
                 n, int(ctx.adjacency.sum()), policy, bf.order)
    return state


# =========================
# Mobility
# =========================

def _reflect(v: float, heading: float, lo: float, hi: float, axis: int) -> Tuple[float, float]:
    while v < lo or v > hi:
        v = 2.0 * lo - v if v < lo else 2.0 * hi - v
        heading = (math.pi - heading) if axis == 0 else -heading
    return v, heading


def move_user(user: UserSession, dt: float, bounds: Bounds, turn_sigma: float = S.TURN_SIGMA,
              rng: Optional[np.random.Generator] = None) -> UserSession:
    """Random walk at constant speed with a Gaussian heading turn, reflected at `bounds`."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if user.speed <= 0.0:
        return user
    if rng is not None and turn_sigma > 0:
        user.heading += float(rng.normal(0.0, turn_sigma))
    x = float(user.position[0]) + user.speed * dt * math.cos(user.heading)
    y = float(user.position[1]) + user.speed * dt * math.sin(user.heading)
    xmin, ymin, xmax, ymax = bounds
    x, user.heading = _reflect(x, user.heading, xmin, xmax, axis=0)
    y, user.heading = _reflect(y, user.heading, ymin, ymax, axis=1)
    user.heading = math.remainder(user.heading, 2.0 * math.pi)
    user.position = np.array([x, y])
    return user


# =========================
# Helpers
# =========================

def _rx_dbm(state: SimulationState, positions: np.ndarray, shadow: np.ndarray, scenario: Scenario) -> np.ndarray:
    return state.ctx.eirp_dbm[None, :] - path_loss_matrix(state.ctx.site_xy, positions, shadow, scenario.propagation)


def _reallocate_cell(state: SimulationState, scenario: Scenario, cell: int) -> None:
    served = list(state.members[cell].values())
    alloc = reallocate_prbs(cell, served, int(state.ctx.capacity[cell]),
                            scenario.radio.min_prb_per_user, scenario.radio.max_prb_per_user)
    for u in served:
        u.allocated_prbs = alloc[u.id]
    state.occupancy[cell] = sum(alloc.values())


def _reallocate_all(state: SimulationState, scenario: Scenario) -> None:
    for cell in range(len(state.members)):
        _reallocate_cell(state, scenario, cell)


def _switch_cell(state: SimulationState, scenario: Scenario, user: UserSession, target: int, event: str) -> None:
    source = user.serving
    state.users_per_cell[source] -= 1
    state.users_per_cell[target] += 1
    del state.members[source][user.id]
    state.members[target][user.id] = user
    user.serving = target
    _reallocate_cell(state, scenario, source)
    _reallocate_cell(state, scenario, target)
    _log_event(state, event, user.id, source, target)


def _release(state: SimulationState, user: UserSession, event: str) -> None:
    del state.sessions[user.id]
    del state.members[user.serving][user.id]
    state.users_per_cell[user.serving] -= 1
    state.occupancy[user.serving] -= user.allocated_prbs
    state.rng.release(user.id)
    state.shadowing.release(user.id)
    _log_event(state, event, user.id, user.serving, -1)


def _place(state: SimulationState, scenario: Scenario) -> np.ndarray:
    """Site drawn by hotspot weight, then a uniform point in the disk of one cell radius around it."""
    w = np.asarray(scenario.traffic.hotspot_weights, dtype=float)
    g = state.rng.placement
    site = int(g.choice(w.size, p=w / w.sum()))
    r = scenario.cell_radius * math.sqrt(g.random())
    theta = 2.0 * math.pi * g.random()
    xmin, ymin, xmax, ymax = state.ctx.bounds
    x = state.ctx.site_xy[site, 0] + r * math.cos(theta)
    y = state.ctx.site_xy[site, 1] + r * math.sin(theta)
    return np.array([min(max(x, xmin), xmax), min(max(y, ymin), ymax)])


# =========================
# Arrivals
# =========================

def offer_arrival(state: SimulationState, scenario: Scenario, point, measured: bool = True,
                  at: Optional[float] = None) -> CacDecision:
    """Run CAC for one new mobile at `point` and, if admitted, start its session."""
    uid = state.next_uid
    state.next_uid += 1
    point = np.asarray(point, dtype=float).reshape(2)
    shadow = state.shadowing.draw(uid)
    rx = _rx_dbm(state, point.reshape(1, 2), shadow[None, :], scenario)[0]
    decision = admit_measured(rx, state.headroom(), scenario.radio)

    state.totals["arrivals"] += 1
    if measured:
        state.metrics.attempts += 1
    if not decision.admitted:
        state.totals[decision.outcome] += 1
        if measured:
            setattr(state.metrics, decision.outcome, getattr(state.metrics, decision.outcome) + 1)
        state.shadowing.release(uid)
        _log_event(state, decision.outcome, uid, decision.cell, -1)
        return decision

    g = state.rng.for_user(uid)
    user = UserSession(
        id=uid,
        position=point,
        heading=float(g.uniform(-math.pi, math.pi)),
        speed=scenario.traffic.user_speed,
        serving=decision.cell,
        allocated_prbs=decision.granted_prbs,
        remaining_bytes=float(scenario.traffic.file_size),
        admitted_at=state.clock if at is None else float(at),
        shadow_db=shadow,
        measured=measured,
    )
    state.sessions[uid] = user
    state.members[decision.cell][uid] = user
    state.users_per_cell[decision.cell] += 1
    state.totals["admitted"] += 1
    if measured:
        state.metrics.admitted += 1
    _log_event(state, "admit", uid, -1, decision.cell)
    _reallocate_cell(state, scenario, decision.cell)
    return decision


# =========================
# Invariants
# =========================

def check_invariants(state: SimulationState) -> None:
    n = state.ctx.capacity.size
    users = list(state.sessions.values())
    serving = np.array([u.serving for u in users], dtype=int)
    prbs = np.array([u.allocated_prbs for u in users], dtype=int)
    booked = np.bincount(serving, weights=prbs, minlength=n).astype(int) if users else np.zeros(n, dtype=int)
    counts = np.bincount(serving, minlength=n) if users else np.zeros(n, dtype=int)
    bad = np.flatnonzero(booked != state.occupancy)
    if bad.size:
        c = int(bad[0])
        raise ConsistencyError(f"PRB books: occupancy {state.occupancy[c]} != allocated {booked[c]}", cell=c)
    over = np.flatnonzero(state.occupancy > state.ctx.capacity)
    if over.size:
        c = int(over[0])
        raise ConsistencyError(f"occupancy {state.occupancy[c]} exceeds capacity {state.ctx.capacity[c]}", cell=c)
    if np.any(counts != state.users_per_cell):
        c = int(np.flatnonzero(counts != state.users_per_cell)[0])
        raise ConsistencyError(f"user count {state.users_per_cell[c]} != sessions {counts[c]}", cell=c)
    t = state.totals
    accounted = (state.active + t["completed"] + t["blocked_coverage"]
                 + t["blocked_resource"] + t["dropped"])
    if accounted != t["arrivals"]:
        raise ConsistencyError(f"conservation: arrivals {t['arrivals']} != accounted {accounted}")
    for u in users:
        if u.remaining_bytes <= 0:
            raise ConsistencyError("active session with no bytes left", cell=u.serving, user=u.id)


# =========================
# Snapshot
# =========================

def step(state: SimulationState, scenario: Scenario) -> SimulationState:
    ctx = state.ctx
    radio = scenario.radio
    dt = scenario.snapshot_duration

    # 1) clock
    state.snapshot += 1
    state.clock = state.snapshot * dt
    start = state.clock - dt
    measuring = state.snapshot > scenario.warmup_snapshots

    # 2) mobility
    for u in state.sessions.values():
        move_user(u, dt, ctx.bounds, scenario.traffic.turn_sigma, state.rng.for_user(u.id))

    # 3) arrivals
    lam = scenario.traffic.arrival_rate * dt
    n_new = int(state.rng.arrivals.poisson(lam)) if lam > 0 else 0
    for _ in range(n_new):
        offer_arrival(state, scenario, _place(state, scenario), measured=measuring, at=start)

    users = list(state.sessions.values())
    if users:
        positions = np.vstack([u.position for u in users])
        shadow = np.vstack([u.shadow_db for u in users])
        rx = _rx_dbm(state, positions, shadow, scenario)
    else:
        rx = np.zeros((0, ctx.capacity.size))

    # 4) handovers
    if users and state.snapshot % scenario.policy.handover_every == 0:
        serving = np.array([u.serving for u in users], dtype=int)
        pbq = rx - rx[np.arange(len(users)), serving][:, None]
        adj = ctx.adjacency[serving]
        margin = np.where(adj, state.margins.margins[serving], np.inf)
        hot = np.flatnonzero((adj & (pbq >= margin + state.margins.hysteresis)
                              & (rx >= radio.ho_signal_threshold)).any(axis=1))
        for i in hot:
            u = users[i]
            decision = evaluate_handover(rx[i], u.serving, state.margins, state.headroom(), radio)
            if decision.moves:
                _switch_cell(state, scenario, u, decision.target, "handover")
                state.totals["handovers"] += 1
                if measuring:
                    state.metrics.handovers += 1

    # 5) allocation
    _reallocate_all(state, scenario)
    occupancy = state.occupancy / ctx.capacity
    committed = committed_load(state.users_per_cell, ctx.capacity, state.min_prb)

    # 6) SINR and throughput
    finished: List[Tuple[UserSession, float]] = []
    if users:
        serving = np.array([u.serving for u in users], dtype=int)
        sinr, _ = sinr_batch(dbm_to_watts(rx), serving, ctx.interference, state.loads.values, ctx.noise_w)
        per_prb = np.atleast_1d(throughput_per_prb(sinr, ctx.curve))
        for i, u in enumerate(users):
            rate = u.allocated_prbs * float(per_prb[i])   # bit/s
            delivered = rate * dt / 8.0
            if delivered >= u.remaining_bytes:
                finished.append((u, start + u.remaining_bytes * 8.0 / rate))
            else:
                u.remaining_bytes -= delivered
        if measuring:
            with np.errstate(divide="ignore"):
                state.metrics.sinr_samples_db.extend((10.0 * np.log10(sinr)).tolist())

    # 7) departures
    for u, t_end in finished:
        if u.measured:
            state.metrics.completed += 1
            state.metrics.throughput_samples.append(scenario.traffic.file_size / max(t_end - u.admitted_at, 1e-12))
        state.totals["completed"] += 1
        _release(state, u, "complete")
    done = {u.id for u, _ in finished}
    for i, u in enumerate(users):
        if u.id in done or rx[i, u.serving] >= radio.cac_signal_threshold:
            continue
        target = rescue_target(rx[i], u.serving, ctx.adjacency, state.headroom(), radio)
        if target is not None:
            _switch_cell(state, scenario, u, target, "rescue")
            state.totals["rescue_handovers"] += 1
            if measuring:
                state.metrics.rescue_handovers += 1
            continue
        state.totals["dropped"] += 1
        if u.measured:
            state.metrics.dropped += 1
        _release(state, u, "drop")

    # 8) loads
    state.loads = update_loads(state.loads, occupancy, ctx.alpha)
    state.committed = update_loads(state.committed, committed, ctx.alpha)

    # 9) margins
    if ctx.balancing.order == 1 and state.snapshot % scenario.policy.margin_update_every == 0:
        state.margins = update_margins(state.margins, state.committed, ctx.balancing)
    if state.hm_rows is not None:
        e, k = np.nonzero(ctx.adjacency)
        vals = state.margins.margins[e, k]
        state.hm_rows.extend(zip([state.clock] * e.size, e.tolist(), k.tolist(), vals.tolist()))

    # 10) metrics
    if measuring:
        state.metrics.load_series.append(committed)
        state.metrics.hm_deviation_series.append(state.margins.mean_abs_deviation(ctx.balancing.f0))

    check_invariants(state)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug("[ENGINE] t=%.1f active=%d arrivals=%d mean_committed=%.3f",
                     state.clock, state.active, n_new, float(state.committed.values.mean()))
    return state


# =========================
# Run
# =========================

def simulate(scenario: Scenario, policy: Policy = "auto", keep_events: bool = False,
             keep_margins: bool = False) -> SimulationState:
    state = init_state(scenario, policy, keep_events=keep_events, keep_margins=keep_margins)
    for _ in range(scenario.n_snapshots):
        step(state, scenario)
    state.metrics.active_at_end = sum(1 for u in state.sessions.values() if u.measured)
    return state


def run(scenario: Scenario, policy: Policy = "auto", event_log: Optional[str] = None,
        hm_log: Optional[str] = None) -> MetricsReport:
    """Whole run; metrics cover sessions arriving after the warm-up only."""
    state = simulate(scenario, policy, keep_events=event_log is not None, keep_margins=hm_log is not None)
    report = build_report(state.metrics, policy, scenario.traffic.arrival_rate, scenario.rng_seed,
                          event_hash=state.event_hash)
    if not report.conserves():
        raise ConsistencyError(
            f"report counters do not add up: attempts={report.attempts} admitted={report.admitted} "
            f"completed={report.completed} dropped={report.dropped} active_at_end={report.active_at_end}"
        )
    if event_log is not None or hm_log is not None:
        from report.export import write_event_log, write_hm_log
        if event_log is not None:
            write_event_log(state.events, event_log)
        if hm_log is not None:
            write_hm_log(state.hm_rows, hm_log)
    logger.info(
        "[ENGINE] λ=%.3g seed=%d policy=%s: access=%s holding=%s thr=%s handovers=%d",
        scenario.traffic.arrival_rate, scenario.rng_seed, policy,
        _fmt(report.access_probability), _fmt(report.holding_probability),
        _fmt(report.mean_user_throughput), report.handovers,
    )
    return report


def _fmt(v: Optional[float]) -> str:
    return "n/a" if v is None else f"{v:.4g}"
# ----------------------- /core/engine.py -----------------------
