# ----------------------- utils/rng.py -----------------------
"""Named, seeded random streams.

Each concern draws from its own generator so that switching the handover policy
never shifts the arrival, placement, shadowing or mobility draws of a run.
Per-user mobility streams are keyed by user id for the same reason.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

# spawn-key slots, fixed forever: changing them changes every result
ARRIVALS  = 0
PLACEMENT = 1
SHADOWING = 2
MOBILITY  = 3
LAYOUT    = 4


def stream(seed: int, slot: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(slot),) + tuple(int(k) for k in key))
    return np.random.default_rng(ss)


@dataclass
class RngStreams:
    seed: int
    arrivals: np.random.Generator = field(init=False)
    placement: np.random.Generator = field(init=False)
    shadowing: np.random.Generator = field(init=False)
    _users: Dict[int, np.random.Generator] = field(init=False, default_factory=dict)

    def __post_init__(self):
        self.arrivals = stream(self.seed, ARRIVALS)
        self.placement = stream(self.seed, PLACEMENT)
        self.shadowing = stream(self.seed, SHADOWING)

    def for_user(self, uid: int) -> np.random.Generator:
        """Mobility stream of one user; created lazily, dropped with `release`."""
        g = self._users.get(uid)
        if g is None:
            g = stream(self.seed, MOBILITY, uid)
            self._users[uid] = g
        return g

    def release(self, uid: int) -> None:
        self._users.pop(uid, None)
# ----------------------- /utils/rng.py -----------------------
