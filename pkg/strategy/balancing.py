# ----------------------- strategy/balancing.py -----------------------
# Handover-margin auto-tuning:
# 1) HM(e,k) = f(χ_e - χ_k), f decreasing from [-1,1] onto [HM_min, HM_max]
# 2) f(x) + f(-x) = 2 f(0)   (cells never raise, or lower, their mutual margins together)
# 3) order 0: f = f(0) (fixed planned margin); order 1: f(x) = f(0) + (f(0) - HM_max) x
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from config import settings as S
from core.errors import BalancingDomainError
from core.radio import LoadVector
from data.scenario import PolicySpec

logger = logging.getLogger(__name__)

DOMAIN_EPS = 1e-9


# =========================
# Balancing function
# =========================

@dataclass(frozen=True)
class BalancingFunction:
    f0: float = S.F0_DB
    hm_min: float = S.HM_MIN_DB
    hm_max: float = S.HM_MAX_DB
    order: int = S.BALANCING_ORDER

    def __post_init__(self):
        if not (self.hm_min <= self.f0 <= self.hm_max):
            raise ValueError(f"need hm_min <= f0 <= hm_max, got {self.hm_min}, {self.f0}, {self.hm_max}")
        if self.order not in (0, 1):
            raise ValueError(f"order must be 0 or 1, got {self.order}")
        if self.order == 1 and not self.is_midpoint:
            logger.warning(
                "[BALANCING] f0=%.3f is not the midpoint of [%.3f, %.3f]; order-1 image is [%.3f, %.3f] "
                "and values are clamped to the margin bounds",
                self.f0, self.hm_min, self.hm_max, *self.image,
            )

    @classmethod
    def from_policy(cls, policy: PolicySpec, order: Optional[int] = None) -> "BalancingFunction":
        return cls(policy.f0, policy.hm_min, policy.hm_max, policy.order if order is None else order)

    @property
    def slope(self) -> float:
        return (self.f0 - self.hm_max) if self.order == 1 else 0.0

    @property
    def is_midpoint(self) -> bool:
        return abs(self.f0 - 0.5 * (self.hm_min + self.hm_max)) <= DOMAIN_EPS

    @property
    def image(self) -> tuple:
        """Unclamped (f(1), f(-1))."""
        return (self.f0 + self.slope, self.f0 - self.slope)

    def __call__(self, x: float) -> float:
        return evaluate_f(self, x)

    def evaluate_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size and np.max(np.abs(x)) > 1.0 + DOMAIN_EPS:
            raise BalancingDomainError(f"load difference outside [-1, 1]: max |x| = {np.max(np.abs(x))}")
        x = np.clip(x, -1.0, 1.0)
        return np.clip(self.f0 + self.slope * x, self.hm_min, self.hm_max)


def evaluate_f(bf: BalancingFunction, x: float) -> float:
    if abs(x) > 1.0 + DOMAIN_EPS:
        raise BalancingDomainError(f"load difference {x} outside [-1, 1]")
    x = min(1.0, max(-1.0, float(x)))
    if bf.order == 0:
        return float(bf.f0)
    return float(min(bf.hm_max, max(bf.hm_min, bf.f0 + (bf.f0 - bf.hm_max) * x)))


# =========================
# Theorem validator
# =========================

@dataclass
class ValidationReport:
    n_samples: int
    f0: float
    hm_min: float
    hm_max: float
    order: Optional[int]
    monotone: bool = True
    in_range: bool = True
    symmetric: bool = True
    max_symmetry_error: float = 0.0
    clamped_points: int = 0
    violations: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_balancing(bf, n_samples: int = S.VALIDATION_SAMPLES,
                       tolerance: float = S.SYMMETRY_TOLERANCE) -> ValidationReport:
    """Check a balancing curve on a uniform grid over [-1, 1].

    `bf` is a BalancingFunction or any callable exposing f0, hm_min and hm_max.
    """
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    grid = np.linspace(-1.0, 1.0, int(n_samples))
    f: Callable[[float], float] = bf
    if isinstance(bf, BalancingFunction):
        values = bf.evaluate_array(grid)
        mirrored = bf.evaluate_array(-grid)
    else:
        values = np.array([f(float(x)) for x in grid])
        mirrored = np.array([f(float(-x)) for x in grid])
    f0 = float(bf.f0)
    rep = ValidationReport(
        n_samples=int(n_samples), f0=f0, hm_min=float(bf.hm_min), hm_max=float(bf.hm_max),
        order=getattr(bf, "order", None),
    )

    # 1) non-increasing
    rises = np.flatnonzero(np.diff(values) > 0.0)
    if rises.size:
        rep.monotone = False
        i = int(rises[0])
        rep.violations.append(
            f"monotonicity: f rises at {rises.size} grid steps, first f({grid[i]:.6f})={values[i]:.6f} "
            f"< f({grid[i + 1]:.6f})={values[i + 1]:.6f}"
        )

    # 2) range
    out = np.flatnonzero((values < bf.hm_min - tolerance) | (values > bf.hm_max + tolerance))
    if out.size:
        rep.in_range = False
        i = int(out[0])
        rep.violations.append(
            f"range: {out.size} grid values outside [{bf.hm_min}, {bf.hm_max}], first f({grid[i]:.6f})={values[i]:.6f}"
        )

    # 3) f(x) + f(-x) = 2 f(0)
    err = np.abs(values + mirrored - 2.0 * f0)
    rep.max_symmetry_error = float(err.max())
    bad = np.flatnonzero(err > tolerance)
    if bad.size:
        rep.symmetric = False
        i = int(bad[0])
        rep.violations.append(
            f"symmetry: |f(x)+f(-x)-2f(0)| > {tolerance:g} at {bad.size} grid points, "
            f"first x={grid[i]:.6f} error={err[i]:.3e}"
        )

    # warnings: order-1 construction off the midpoint
    if isinstance(bf, BalancingFunction) and bf.order == 1:
        lo, hi = sorted(bf.image)
        rep.clamped_points = int(np.count_nonzero((bf.f0 + bf.slope * grid < bf.hm_min) |
                                                  (bf.f0 + bf.slope * grid > bf.hm_max)))
        if not bf.is_midpoint:
            rep.warnings.append(
                f"f0={bf.f0:g} is not the midpoint {0.5 * (bf.hm_min + bf.hm_max):g}: "
                f"image [{lo:g}, {hi:g}] vs bounds [{bf.hm_min:g}, {bf.hm_max:g}], "
                f"{rep.clamped_points} grid points clamped"
            )
    return rep


# =========================
# Margin matrix
# =========================

@dataclass(frozen=True, eq=False)
class HandoverMarginMatrix:
    """HM(e,k) in dB for adjacent ordered pairs; NaN elsewhere."""
    margins: np.ndarray
    adjacency: np.ndarray
    hysteresis: float = S.HYSTERESIS_DB

    @classmethod
    def planned(cls, adjacency: np.ndarray, f0: float, hysteresis: float = S.HYSTERESIS_DB) -> "HandoverMarginMatrix":
        adj = np.asarray(adjacency, dtype=bool)
        m = np.where(adj, float(f0), np.nan)
        return cls(margins=m, adjacency=adj, hysteresis=hysteresis)

    def __getitem__(self, ek) -> float:
        return float(self.margins[ek])

    def pairs(self):
        e, k = np.nonzero(self.adjacency)
        return list(zip(e.tolist(), k.tolist()))

    def mean_abs_deviation(self, f0: float) -> float:
        vals = self.margins[self.adjacency]
        return float(np.mean(np.abs(vals - f0))) if vals.size else 0.0

    def max_reciprocity_error(self, f0: float) -> float:
        if not self.adjacency.any():
            return 0.0
        s = self.margins + self.margins.T
        return float(np.max(np.abs(s[self.adjacency] - 2.0 * f0)))


def update_margins(hm: HandoverMarginMatrix, loads: LoadVector, bf: BalancingFunction,
                   adjacency: Optional[np.ndarray] = None) -> HandoverMarginMatrix:
    """HM(e,k) = f(χ_e - χ_k) on every adjacent ordered pair."""
    adj = hm.adjacency if adjacency is None else np.asarray(adjacency, dtype=bool)
    chi = loads.values
    x = chi[:, None] - chi[None, :]
    m = np.where(adj, bf.evaluate_array(x), np.nan)
    return HandoverMarginMatrix(margins=m, adjacency=adj, hysteresis=hm.hysteresis)
# ----------------------- /strategy/balancing.py -----------------------
