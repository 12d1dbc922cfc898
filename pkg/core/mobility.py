# ----------------------- core/mobility.py -----------------------
"""Call admission control and the power-budget handover trigger.

Both gates read committed state only (received powers in dBm per site and
per-cell PRB headroom) and return a decision object; the engine applies it.
Cell ids are site indices, so argmax ties resolve to the lowest id.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Tuple

import numpy as np

from core.propagation import received_power_matrix
from data.scenario import PropagationParams, RadioParams, SiteSpec
from strategy.balancing import HandoverMarginMatrix

Outcome = Literal["admitted", "blocked_coverage", "blocked_resource"]


@dataclass(frozen=True)
class CacDecision:
    outcome: Outcome
    cell: int                   # best-signal cell (serving cell when admitted)
    granted_prbs: int = 0
    signal_dbm: float = float("nan")

    @property
    def admitted(self) -> bool:
        return self.outcome == "admitted"


@dataclass(frozen=True)
class HandoverDecision:
    target: Optional[int] = None    # None = stay
    pbq: float = float("nan")       # P_k* - P_e* of the chosen target, dB
    reason: str = "STAY"

    @property
    def moves(self) -> bool:
        return self.target is not None


def admissible_headroom(users_per_cell: np.ndarray, capacity: np.ndarray, min_prb: int) -> np.ndarray:
    """PRBs a newcomer can get once every served user is squeezed to `min_prb`."""
    return np.asarray(capacity, dtype=int) - np.asarray(users_per_cell, dtype=int) * int(min_prb)


def committed_load(users_per_cell: np.ndarray, capacity: np.ndarray, min_prb: int) -> np.ndarray:
    """Share of each cell's capacity promised to its users at `min_prb` each; 1 means CAC blocks.

    PRB occupancy is already 1 from about capacity / max_prb users on; this keeps rising
    until the cell stops admitting.
    """
    cap = np.asarray(capacity, dtype=float)
    return np.clip(np.asarray(users_per_cell, dtype=float) * int(min_prb) / cap, 0.0, 1.0)


# =========================
# CAC
# =========================

def admit_measured(rx_dbm: np.ndarray, free_prbs: np.ndarray, radio: RadioParams) -> CacDecision:
    best = int(np.argmax(rx_dbm))
    signal = float(rx_dbm[best])
    if signal < radio.cac_signal_threshold:
        return CacDecision("blocked_coverage", best, 0, signal)
    free = int(free_prbs[best])
    if free < radio.min_prb_per_user:
        return CacDecision("blocked_resource", best, 0, signal)
    return CacDecision("admitted", best, min(radio.max_prb_per_user, free), signal)


def admit(point: Tuple[float, float], shadow_db: np.ndarray, sites: Sequence[SiteSpec],
          free_prbs: np.ndarray, radio: RadioParams, params: PropagationParams) -> CacDecision:
    rx = received_power_matrix(sites, np.asarray(point, dtype=float).reshape(1, 2),
                               np.asarray(shadow_db, dtype=float)[None, :], params)[0]
    return admit_measured(rx, free_prbs, radio)


# =========================
# Handover
# =========================

def handover_candidates(rx_dbm: np.ndarray, serving: int, hm: HandoverMarginMatrix,
                        free_prbs: np.ndarray, radio: RadioParams) -> np.ndarray:
    """Mask of neighbours meeting PBQ >= HM + hysteresis, the signal threshold and the resource check."""
    pbq = rx_dbm - rx_dbm[serving]
    adj = hm.adjacency[serving]
    margin = np.where(adj, hm.margins[serving], np.inf)
    return (adj
            & (pbq >= margin + hm.hysteresis)
            & (rx_dbm >= radio.ho_signal_threshold)
            & (np.asarray(free_prbs) >= radio.min_prb_per_user))


def evaluate_handover(rx_dbm: np.ndarray, serving: int, hm: HandoverMarginMatrix,
                      free_prbs: np.ndarray, radio: RadioParams) -> HandoverDecision:
    """Strongest-PBQ neighbour satisfying every trigger condition, or stay."""
    rx_dbm = np.asarray(rx_dbm, dtype=float)
    cand = np.flatnonzero(handover_candidates(rx_dbm, serving, hm, free_prbs, radio))
    if cand.size == 0:
        return HandoverDecision()
    pbq = rx_dbm[cand] - rx_dbm[serving]
    i = int(np.argmax(pbq))
    return HandoverDecision(target=int(cand[i]), pbq=float(pbq[i]), reason="PBQ")


def rescue_target(rx_dbm: np.ndarray, serving: int, adjacency: np.ndarray,
                  free_prbs: np.ndarray, radio: RadioParams) -> Optional[int]:
    """Strongest admissible neighbour for a user that lost serving coverage (no margin applied)."""
    rx_dbm = np.asarray(rx_dbm, dtype=float)
    ok = (np.asarray(adjacency[serving], dtype=bool)
          & (rx_dbm >= radio.ho_signal_threshold)
          & (np.asarray(free_prbs) >= radio.min_prb_per_user))
    cand = np.flatnonzero(ok)
    if cand.size == 0:
        return None
    return int(cand[int(np.argmax(rx_dbm[cand]))])
# ----------------------- /core/mobility.py -----------------------
