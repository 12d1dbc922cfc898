# ----------------------- data/layout.py -----------------------
from __future__ import annotations
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import pandas as pd

from config import settings as S
from data.scenario import SiteSpec
from utils.rng import LAYOUT, stream

LAYOUT_COLUMNS = ["id", "x", "y", "band_index", "prb_capacity"]


@dataclass(frozen=True)
class InterferenceMatrix:
    """Co-channel indicator Λ. Diagonal is stored as 0 so sums over k != e need no mask."""
    entries: np.ndarray

    def __getitem__(self, ij):
        return int(self.entries[ij])

    @property
    def size(self) -> int:
        return int(self.entries.shape[0])


def _lattice_shape(n_sites: int) -> int:
    rows = max(1, int(round(math.sqrt(n_sites / S.LAYOUT_ASPECT))))
    return int(math.ceil(n_sites / rows))


def lattice_coords(n_sites: int) -> List[tuple]:
    """(col, row) of each site on an odd-row-offset hexagonal patch, row major."""
    cols = _lattice_shape(n_sites)
    return [(i % cols, i // cols) for i in range(n_sites)]


def _axial(col: int, row: int) -> tuple:
    q = col - (row - (row & 1)) // 2
    return q, row


def band_of(col: int, row: int, reuse_factor: int) -> int:
    """Proper 3-colouring of the hex lattice via (q - r) mod 3.

    Factors above 3 still use three bands; factors below 3 fold the colouring.
    """
    q, r = _axial(col, row)
    return (q - r) % 3 % min(reuse_factor, 3)


def generate_layout(
    n_sites: int,
    jitter: float,
    seed: int,
    inter_site_distance: float = S.INTER_SITE_DISTANCE,
    reuse_factor: int = S.REUSE_FACTOR,
    prb_capacity: int = S.PRB_CAPACITY,
    tx_power_per_subcarrier: float = S.TX_POWER_PER_SUBCARRIER,
    antenna_gain: float = S.ANTENNA_GAIN,
) -> List[SiteSpec]:
    """Hexagonal lattice perturbed per site by uniform jitter in [-jitter, jitter] on each axis.

    Site 0 sits at the lattice origin. Bands come from the unperturbed lattice.
    """
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    rng = stream(seed, LAYOUT)
    offsets = rng.uniform(-jitter, jitter, size=(n_sites, 2)) if jitter > 0 else np.zeros((n_sites, 2))
    d = float(inter_site_distance)
    sites: List[SiteSpec] = []
    for i, (col, row) in enumerate(lattice_coords(n_sites)):
        x = d * (col + 0.5 * (row & 1)) + float(offsets[i, 0])
        y = d * (math.sqrt(3.0) / 2.0) * row + float(offsets[i, 1])
        sites.append(SiteSpec(
            id=i,
            position=(x, y),
            band_index=band_of(col, row, reuse_factor),
            prb_capacity=prb_capacity,
            tx_power_per_subcarrier=tx_power_per_subcarrier,
            antenna_gain=antenna_gain,
        ))
    return sites


def lattice_neighbours(n_sites: int) -> List[tuple]:
    """Index pairs (i, j), i < j, adjacent on the unperturbed lattice."""
    coords = lattice_coords(n_sites)
    index = {_axial(c, r): i for i, (c, r) in enumerate(coords)}
    pairs = []
    for i, (c, r) in enumerate(coords):
        q, rr = _axial(c, r)
        for dq, dr in ((1, 0), (0, 1), (-1, 1)):
            j = index.get((q + dq, rr + dr))
            if j is not None:
                pairs.append((min(i, j), max(i, j)))
    return sorted(pairs)


def build_interference_matrix(sites: Sequence[SiteSpec]) -> InterferenceMatrix:
    bands = np.array([s.band_index for s in sites])
    lam = (bands[:, None] == bands[None, :]).astype(np.int8)
    np.fill_diagonal(lam, 0)
    return InterferenceMatrix(entries=lam)


def site_positions(sites: Sequence[SiteSpec]) -> np.ndarray:
    return np.array([s.position for s in sites], dtype=float).reshape(len(sites), 2)


def build_adjacency(sites: Sequence[SiteSpec], radius: float) -> np.ndarray:
    """Symmetric neighbour mask: sites closer than `radius`, no self loops."""
    xy = site_positions(sites)
    dist = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    adj = dist <= radius
    np.fill_diagonal(adj, False)
    return adj


def layout_frame(sites: Sequence[SiteSpec]) -> pd.DataFrame:
    return pd.DataFrame(
        [(s.id, s.position[0], s.position[1], s.band_index, s.prb_capacity) for s in sites],
        columns=LAYOUT_COLUMNS,
    )


def export_layout_csv(sites: Sequence[SiteSpec], path: str) -> str:
    from utils.storage import atomic_write_text
    atomic_write_text(path, layout_frame(sites).to_csv(index=False))
    return path
# ----------------------- /data/layout.py -----------------------
