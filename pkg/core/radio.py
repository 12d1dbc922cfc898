# ----------------------- core/radio.py -----------------------
"""Load-weighted inter-cell interference, SINR, link curve and PRB allocation."""
from __future__ import annotations
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Sequence, Tuple

import numpy as np
import pandas as pd

from core.errors import AllocationError, ScenarioError
from core.propagation import dbm_to_watts, received_power_matrix
from data.layout import InterferenceMatrix
from data.scenario import LinkCurve, PropagationParams, RadioParams, SiteSpec

if TYPE_CHECKING:
    from core.engine import UserSession

LINK_CSV_COLUMNS = ["sinr_db", "throughput_per_prb_bps"]


# =========================
# Loads
# =========================

@dataclass(frozen=True, eq=False)
class LoadVector:
    """Per-cell load χ in [0, 1]; `window` is the smoothing time constant in seconds."""
    values: np.ndarray
    window: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError(f"loads must lie in [0, 1], got range [{v.min()}, {v.max()}]")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, n: int, window: float = 0.0) -> "LoadVector":
        return cls(np.zeros(n), window)

    def __getitem__(self, i):
        return float(self.values[i])

    def __len__(self) -> int:
        return int(self.values.size)


def smoothing_alpha(dt: float, time_constant: float) -> float:
    """EMA factor whose memory decays with time constant `time_constant` at step `dt`."""
    return float(min(1.0, 1.0 - math.exp(-dt / time_constant)))


def _check_smoothing(occupancy, alpha: float) -> None:
    occ = np.asarray(occupancy, dtype=float)
    if occ.size and (occ.min() < 0.0 or occ.max() > 1.0):
        raise ValueError(f"occupancy must lie in [0, 1], got {occ}")
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def update_load(cell: int, occupancy: float, smoothed: LoadVector, alpha: float) -> LoadVector:
    _check_smoothing(occupancy, alpha)
    v = smoothed.values.copy()
    v[cell] = min(1.0, max(0.0, (1.0 - alpha) * v[cell] + alpha * occupancy))
    return LoadVector(v, smoothed.window)


def update_loads(smoothed: LoadVector, occupancy: np.ndarray, alpha: float) -> LoadVector:
    """All cells at once; same recurrence as `update_load`."""
    _check_smoothing(occupancy, alpha)
    v = (1.0 - alpha) * smoothed.values + alpha * np.asarray(occupancy, dtype=float)
    return LoadVector(np.clip(v, 0.0, 1.0), smoothed.window)


# =========================
# Interference & SINR
# =========================

def interference_from_powers(rx_w: np.ndarray, serving: int, lam_row: np.ndarray, loads: np.ndarray) -> float:
    """I = sum_{k != e} Λ(e,k) χ_k P_k G_k / L_k from per-site received powers in watts."""
    w = np.asarray(lam_row, dtype=float) * np.asarray(loads, dtype=float)
    w[serving] = 0.0
    return float(np.dot(w, rx_w))


def sinr_from_powers(signal_w, interference_w, noise_w):
    return np.asarray(signal_w, dtype=float) / (np.asarray(interference_w, dtype=float) + noise_w)


def sinr_batch(rx_w: np.ndarray, serving: np.ndarray, lam: np.ndarray, loads: np.ndarray,
               noise_w: float) -> Tuple[np.ndarray, np.ndarray]:
    """SINR and interference for many users; rows of `rx_w` are users, columns sites."""
    serving = np.asarray(serving, dtype=int)
    if serving.size == 0:
        return np.zeros(0), np.zeros(0)
    weights = lam[serving].astype(float) * np.asarray(loads, dtype=float)[None, :]
    weights[np.arange(serving.size), serving] = 0.0
    interference = np.einsum("us,us->u", weights, rx_w)
    signal = rx_w[np.arange(serving.size), serving]
    return sinr_from_powers(signal, interference, noise_w), interference


def _user_rx_w(user: "UserSession", sites: Sequence[SiteSpec], params: PropagationParams) -> np.ndarray:
    pts = np.asarray(user.position, dtype=float).reshape(1, 2)
    return dbm_to_watts(received_power_matrix(sites, pts, np.asarray(user.shadow_db)[None, :], params))


def interference_per_subcarrier(user: "UserSession", serving: int, sites: Sequence[SiteSpec],
                                imatrix: InterferenceMatrix, loads: LoadVector,
                                params: PropagationParams) -> float:
    rx_w = _user_rx_w(user, sites, params)[0]
    return interference_from_powers(rx_w, serving, imatrix.entries[serving], loads.values)


def sinr_linear(user: "UserSession", serving: int, sites: Sequence[SiteSpec], imatrix: InterferenceMatrix,
                loads: LoadVector, radio: RadioParams, params: PropagationParams) -> float:
    rx_w = _user_rx_w(user, sites, params)
    noise_w = float(dbm_to_watts(radio.thermal_noise_per_subcarrier))
    sinr, _ = sinr_batch(rx_w, np.array([serving]), imatrix.entries, loads.values, noise_w)
    return float(sinr[0])


# =========================
# Link curve
# =========================

class TabulatedLinkCurve:
    """Piecewise-linear throughput over SINR in dB; 0 below the first row, flat above the last."""

    def __init__(self, sinr_db: Sequence[float], bps: Sequence[float], source: str = ""):
        x = np.asarray(sinr_db, dtype=float)
        y = np.asarray(bps, dtype=float)
        if x.size < 2 or x.size != y.size:
            raise ScenarioError("link.table", f"need >= 2 rows of (sinr_db, bps) in {source or 'table'}")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(y) < 0) or y[0] < 0:
            raise ScenarioError("link.table", f"rows must be increasing in SINR and non-decreasing in throughput ({source})")
        self.sinr_db = x
        self.bps = y
        self.source = source

    @property
    def max_throughput_per_prb(self) -> float:
        return float(self.bps[-1])

    def __call__(self, sinr):
        s = np.asarray(sinr, dtype=float)
        with np.errstate(divide="ignore"):
            s_db = 10.0 * np.log10(np.maximum(s, 0.0))
        return np.interp(s_db, self.sinr_db, self.bps, left=0.0, right=float(self.bps[-1]))


def load_link_curve_csv(path: str) -> TabulatedLinkCurve:
    try:
        df = pd.read_csv(path)
    except FileNotFoundError:
        raise ScenarioError("link.table", f"file not found: {path}") from None
    missing = [c for c in LINK_CSV_COLUMNS if c not in df.columns]
    if missing:
        raise ScenarioError("link.table", f"missing columns {missing} in {path}")
    return TabulatedLinkCurve(df["sinr_db"].to_numpy(), df["throughput_per_prb_bps"].to_numpy(), source=path)


def build_link_curve(link: LinkCurve):
    return link if link.table is None else load_link_curve_csv(link.table)


def throughput_per_prb(sinr, curve):
    """bit/s per PRB. Attenuated Shannon: min(cap, eta_bw * B * log2(1 + sinr / eta_sinr))."""
    if isinstance(curve, TabulatedLinkCurve):
        out = curve(sinr)
    else:
        s = np.maximum(np.asarray(sinr, dtype=float), 0.0)
        out = np.minimum(
            curve.max_throughput_per_prb,
            curve.bandwidth_efficiency * curve.prb_bandwidth * np.log2(1.0 + s / curve.sinr_efficiency),
        )
    return float(out) if np.ndim(out) == 0 else out


def user_throughput(user: "UserSession", per_prb):
    return user.allocated_prbs * per_prb


# =========================
# PRB allocation
# =========================

def reallocate_prbs(cell: int, sessions: Sequence["UserSession"], capacity: int,
                    min_prb: int, max_prb: int) -> Dict[int, int]:
    """Minimum for everyone, the rest round-robin in arrival (id) order up to `max_prb`."""
    order = sorted(u.id for u in sessions)
    n = len(order)
    if n == 0:
        return {}
    if n * min_prb > capacity:
        raise AllocationError(
            f"minimum demand {n}x{min_prb} exceeds capacity {capacity}", cell=cell
        )
    spare = capacity - n * min_prb
    headroom = max_prb - min_prb
    rounds = min(headroom, spare // n)
    spare -= rounds * n
    alloc = {uid: min_prb + rounds for uid in order}
    if rounds < headroom:
        for uid in order[:spare]:
            alloc[uid] += 1
    return alloc
# ----------------------- /core/radio.py -----------------------
