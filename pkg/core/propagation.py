# ----------------------- core/propagation.py -----------------------
"""Path loss L = l0 * d^gamma * zeta, evaluated in dB, and received power per subcarrier."""
from __future__ import annotations
from typing import Dict, Sequence, Tuple

import numpy as np

from data.scenario import PropagationParams, SiteSpec

# Distance floor (m) that keeps log10 finite when a user stands on a site.
MIN_DISTANCE = 1.0


def dbm_to_watts(dbm):
    return np.power(10.0, (np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(w):
    return 10.0 * np.log10(np.asarray(w, dtype=float)) + 30.0


def _distance(site_xy: Tuple[float, float], point: Tuple[float, float]) -> float:
    return float(np.hypot(point[0] - site_xy[0], point[1] - site_xy[1]))


def path_loss_db(site: SiteSpec, point: Tuple[float, float], shadow_db: float, params: PropagationParams) -> float:
    d = max(_distance(site.position, point), MIN_DISTANCE)
    loss = params.l0_db + 10.0 * params.path_loss_exponent * np.log10(d / params.reference_distance) + shadow_db
    return float(max(loss, params.min_coupling_loss_db))


def received_power_dbm(site: SiteSpec, point: Tuple[float, float], shadow_db: float, params: PropagationParams) -> float:
    return float(site.tx_power_per_subcarrier + site.antenna_gain - path_loss_db(site, point, shadow_db, params))


# ========= Vectorised forms used by the engine =========

def path_loss_matrix(site_xy: np.ndarray, points: np.ndarray, shadow_db: np.ndarray,
                     params: PropagationParams) -> np.ndarray:
    """(users, sites) path loss in dB. `shadow_db` has the same shape as the result."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    d = np.hypot(points[:, None, 0] - site_xy[None, :, 0], points[:, None, 1] - site_xy[None, :, 1])
    d = np.maximum(d, MIN_DISTANCE)
    loss = params.l0_db + 10.0 * params.path_loss_exponent * np.log10(d / params.reference_distance) + shadow_db
    return np.maximum(loss, params.min_coupling_loss_db)


def received_power_matrix(sites: Sequence[SiteSpec], points: np.ndarray, shadow_db: np.ndarray,
                          params: PropagationParams) -> np.ndarray:
    site_xy = np.array([s.position for s in sites], dtype=float).reshape(len(sites), 2)
    eirp = np.array([s.tx_power_per_subcarrier + s.antenna_gain for s in sites], dtype=float)
    return eirp[None, :] - path_loss_matrix(site_xy, points, shadow_db, params)


class ShadowingField:
    """Per (user, site) log-normal shadowing, drawn once per user and kept for its lifetime."""

    def __init__(self, n_sites: int, sigma_db: float, rng: np.random.Generator):
        self.n_sites = int(n_sites)
        self.sigma_db = float(sigma_db)
        self._rng = rng
        self._values: Dict[int, np.ndarray] = {}

    def draw(self, uid: int) -> np.ndarray:
        """Shadowing row of `uid` in dB; the first call draws it, later calls return the same row."""
        row = self._values.get(uid)
        if row is None:
            if self.sigma_db > 0:
                row = self._rng.normal(0.0, self.sigma_db, size=self.n_sites)
            else:
                row = np.zeros(self.n_sites)
            row.setflags(write=False)
            self._values[uid] = row
        return row

    def release(self, uid: int) -> None:
        self._values.pop(uid, None)

    def __len__(self) -> int:
        return len(self._values)
# ----------------------- /core/propagation.py -----------------------
