# ----------------------- data/scenario.py -----------------------
"""Experiment scenario: types, validation and the `.scn` text format.

Format (line oriented, `#` starts a comment):

    [section]
    key = value

Key/value sections: scenario, radio, propagation, link, traffic, policy,
layout, hotspots.  The `sites` section is a whitespace table whose first
line is a header naming the columns

    id x y band_index prb_capacity tx_power_per_subcarrier antenna_gain hotspot_weight

(`prb_capacity` onwards optional; missing columns take the defaults).
Either `[sites]` or `[layout]` must be present.  `[layout]` generates the
sites (n_sites, jitter, seed, prb_capacity, tx_power_per_subcarrier,
antenna_gain); `[hotspots]` then sets `weight` on the id list `sites`
(e.g. `0-2, 9-11`).  `link.table` points to a link-curve CSV, relative to
the scenario file.
"""
from __future__ import annotations
import logging
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple

from config import settings as S
from core.errors import ScenarioError

logger = logging.getLogger(__name__)

Point = Tuple[float, float]


# =========================
# Types
# =========================

@dataclass(frozen=True)
class SiteSpec:
    id: int
    position: Point
    band_index: int = 0
    prb_capacity: int = S.PRB_CAPACITY
    tx_power_per_subcarrier: float = S.TX_POWER_PER_SUBCARRIER   # dBm
    antenna_gain: float = S.ANTENNA_GAIN                         # dBi

    def __post_init__(self):
        if self.prb_capacity < 1:
            raise ScenarioError(f"sites[{self.id}].prb_capacity", f"must be >= 1, got {self.prb_capacity}")
        if self.band_index < 0:
            raise ScenarioError(f"sites[{self.id}].band_index", f"must be >= 0, got {self.band_index}")
        if not all(math.isfinite(c) for c in self.position):
            raise ScenarioError(f"sites[{self.id}].position", f"must be finite, got {self.position}")


@dataclass(frozen=True)
class RadioParams:
    reuse_factor: int = S.REUSE_FACTOR
    subcarriers_per_prb: int = S.SUBCARRIERS_PER_PRB
    subcarrier_bandwidth: float = S.SUBCARRIER_BANDWIDTH
    thermal_noise_per_subcarrier: float = S.THERMAL_NOISE_PER_SUBCARRIER
    min_prb_per_user: int = S.MIN_PRB_PER_USER
    max_prb_per_user: int = S.MAX_PRB_PER_USER
    cac_signal_threshold: float = S.CAC_SIGNAL_THRESHOLD
    ho_signal_threshold: float = S.HO_SIGNAL_THRESHOLD

    def __post_init__(self):
        if self.reuse_factor < 1:
            raise ScenarioError("radio.reuse_factor", f"must be >= 1, got {self.reuse_factor}")
        if self.subcarriers_per_prb < 1:
            raise ScenarioError("radio.subcarriers_per_prb", f"must be >= 1, got {self.subcarriers_per_prb}")
        if not self.subcarrier_bandwidth > 0:
            raise ScenarioError("radio.subcarrier_bandwidth", f"must be > 0, got {self.subcarrier_bandwidth}")
        if self.min_prb_per_user < 1:
            raise ScenarioError("radio.min_prb_per_user", f"must be >= 1, got {self.min_prb_per_user}")
        if self.max_prb_per_user < self.min_prb_per_user:
            raise ScenarioError(
                "radio.max_prb_per_user",
                f"must be >= min_prb_per_user ({self.min_prb_per_user}), got {self.max_prb_per_user}",
            )


@dataclass(frozen=True)
class PropagationParams:
    l0_db: float = S.L0_DB
    path_loss_exponent: float = S.PATH_LOSS_EXPONENT
    shadowing_sigma_db: float = S.SHADOWING_SIGMA_DB
    reference_distance: float = S.REFERENCE_DISTANCE
    min_coupling_loss_db: float = S.MIN_COUPLING_LOSS_DB

    def __post_init__(self):
        if not self.path_loss_exponent > 2:
            raise ScenarioError("propagation.path_loss_exponent", f"must be > 2, got {self.path_loss_exponent}")
        if self.shadowing_sigma_db < 0:
            raise ScenarioError("propagation.shadowing_sigma_db", f"must be >= 0, got {self.shadowing_sigma_db}")
        if not self.reference_distance > 0:
            raise ScenarioError("propagation.reference_distance", f"must be > 0, got {self.reference_distance}")


@dataclass(frozen=True)
class LinkCurve:
    """Attenuated-Shannon link curve; `table` switches to a tabulated CSV curve."""
    bandwidth_efficiency: float = S.BANDWIDTH_EFFICIENCY
    sinr_efficiency: float = S.SINR_EFFICIENCY
    max_throughput_per_prb: float = S.MAX_THROUGHPUT_PER_PRB     # bit/s
    prb_bandwidth: float = S.PRB_BANDWIDTH                       # Hz
    table: Optional[str] = None

    def __post_init__(self):
        for name in ("bandwidth_efficiency", "sinr_efficiency", "max_throughput_per_prb", "prb_bandwidth"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"link.{name}", f"must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class TrafficSpec:
    arrival_rate: float = S.ARRIVAL_RATE          # mobiles/s, network wide
    hotspot_weights: Tuple[float, ...] = ()       # one per site
    file_size: int = S.FILE_SIZE                  # bytes
    user_speed: float = S.USER_SPEED              # m/s
    turn_sigma: float = S.TURN_SIGMA              # rad per snapshot

    def __post_init__(self):
        if self.arrival_rate < 0:
            raise ScenarioError("traffic.arrival_rate", f"must be >= 0, got {self.arrival_rate}")
        if not self.file_size > 0:
            raise ScenarioError("traffic.file_size", f"must be > 0, got {self.file_size}")
        if self.user_speed < 0:
            raise ScenarioError("traffic.user_speed", f"must be >= 0, got {self.user_speed}")
        if any((w < 0 or not math.isfinite(w)) for w in self.hotspot_weights):
            raise ScenarioError("traffic.hotspot_weights", "must be finite and nonnegative")
        if self.hotspot_weights and not any(w > 0 for w in self.hotspot_weights):
            raise ScenarioError("traffic.hotspot_weights", "at least one weight must be positive")


@dataclass(frozen=True)
class PolicySpec:
    f0: float = S.F0_DB
    hm_min: float = S.HM_MIN_DB
    hm_max: float = S.HM_MAX_DB
    order: int = S.BALANCING_ORDER
    hysteresis: float = S.HYSTERESIS_DB
    adjacency_factor: float = S.ADJACENCY_FACTOR
    load_time_constant: float = S.LOAD_TIME_CONSTANT
    margin_update_every: int = S.MARGIN_UPDATE_EVERY
    handover_every: int = S.HANDOVER_EVERY

    def __post_init__(self):
        if not (self.hm_min <= self.f0 <= self.hm_max):
            raise ScenarioError("policy.f0", f"must lie in [hm_min, hm_max] = [{self.hm_min}, {self.hm_max}], got {self.f0}")
        if self.order not in (0, 1):
            raise ScenarioError("policy.order", f"must be 0 or 1, got {self.order}")
        if self.hysteresis < 0:
            raise ScenarioError("policy.hysteresis", f"must be >= 0, got {self.hysteresis}")
        if not self.adjacency_factor > 0:
            raise ScenarioError("policy.adjacency_factor", f"must be > 0, got {self.adjacency_factor}")
        if not self.load_time_constant > 0:
            raise ScenarioError("policy.load_time_constant", f"must be > 0, got {self.load_time_constant}")
        if self.margin_update_every < 1 or self.handover_every < 1:
            raise ScenarioError("policy.margin_update_every", "update cadences must be >= 1 snapshot")


@dataclass(frozen=True)
class Scenario:
    sites: Tuple[SiteSpec, ...]
    radio: RadioParams = field(default_factory=RadioParams)
    propagation: PropagationParams = field(default_factory=PropagationParams)
    link: LinkCurve = field(default_factory=LinkCurve)
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    policy: PolicySpec = field(default_factory=PolicySpec)
    snapshot_duration: float = S.SNAPSHOT_DURATION
    sim_duration: float = S.SIM_DURATION
    rng_seed: int = S.RNG_SEED
    warmup_fraction: float = S.WARMUP_FRACTION
    inter_site_distance: float = S.INTER_SITE_DISTANCE

    def __post_init__(self):
        sites = tuple(self.sites)
        object.__setattr__(self, "sites", sites)
        if not sites:
            raise ScenarioError("sites", "at least one site is required")
        for idx, s in enumerate(sites):
            if s.id != idx:
                raise ScenarioError("sites.id", f"ids must be 0..n-1 in order; position {idx} has id {s.id}")
            if s.band_index >= self.radio.reuse_factor:
                raise ScenarioError(
                    f"sites[{s.id}].band_index",
                    f"must be < reuse_factor ({self.radio.reuse_factor}), got {s.band_index}",
                )
            if self.radio.max_prb_per_user > s.prb_capacity:
                raise ScenarioError(
                    "radio.max_prb_per_user",
                    f"exceeds prb_capacity {s.prb_capacity} of site {s.id}",
                )
        weights = tuple(float(w) for w in self.traffic.hotspot_weights) or (1.0,) * len(sites)
        if len(weights) != len(sites):
            raise ScenarioError("traffic.hotspot_weights", f"expected {len(sites)} weights, got {len(weights)}")
        object.__setattr__(self, "traffic", replace(self.traffic, hotspot_weights=weights))
        if not self.snapshot_duration > 0:
            raise ScenarioError("snapshot_duration", f"must be > 0, got {self.snapshot_duration}")
        if self.sim_duration < self.snapshot_duration:
            raise ScenarioError("sim_duration", f"must be >= snapshot_duration ({self.snapshot_duration})")
        if not (0 <= int(self.rng_seed) < 2 ** 64):
            raise ScenarioError("rng_seed", "must be a 64-bit unsigned integer")
        if not (0.0 <= self.warmup_fraction < 1.0):
            raise ScenarioError("warmup_fraction", f"must lie in [0, 1), got {self.warmup_fraction}")
        if not self.inter_site_distance > 0:
            raise ScenarioError("inter_site_distance", f"must be > 0, got {self.inter_site_distance}")

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def cell_radius(self) -> float:
        """Hexagon circumradius for the nominal inter-site distance."""
        return self.inter_site_distance / math.sqrt(3.0)

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax): site hull padded by one cell radius."""
        xs = [s.position[0] for s in self.sites]
        ys = [s.position[1] for s in self.sites]
        r = self.cell_radius
        return (min(xs) - r, min(ys) - r, max(xs) + r, max(ys) + r)

    @property
    def n_snapshots(self) -> int:
        return int(math.floor(self.sim_duration / self.snapshot_duration + 1e-9))

    @property
    def warmup_snapshots(self) -> int:
        return int(math.floor(self.n_snapshots * self.warmup_fraction + 1e-9))


# =========================
# Parsing helpers
# =========================

_KV_SECTIONS = ("scenario", "radio", "propagation", "link", "traffic", "policy", "layout", "hotspots")
_SCENARIO_KEYS = ("snapshot_duration", "sim_duration", "rng_seed", "warmup_fraction", "inter_site_distance")
_LAYOUT_KEYS = ("n_sites", "jitter", "seed", "prb_capacity", "tx_power_per_subcarrier", "antenna_gain")
_SITE_COLUMNS = ("id", "x", "y", "band_index", "prb_capacity", "tx_power_per_subcarrier",
                 "antenna_gain", "hotspot_weight")
_SECTION_TYPES = {
    "radio": RadioParams,
    "propagation": PropagationParams,
    "link": LinkCurve,
    "traffic": TrafficSpec,
    "policy": PolicySpec,
}


def _convert(section: str, key: str, raw: str, kind: str) -> Any:
    try:
        if kind == "int":
            try:
                return int(raw)
            except ValueError:
                as_float = float(raw)
                if not as_float.is_integer():
                    raise
                return int(as_float)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ScenarioError(f"{section}.{key}", f"expected {kind}, got {raw!r}") from None


def _field_kinds(cls) -> Dict[str, str]:
    out = {}
    for f in fields(cls):
        t = str(f.type)
        out[f.name] = "int" if t == "int" else "float" if t == "float" else "str"
    return out


def _parse_id_list(raw: str) -> List[int]:
    ids: List[int] = []
    for part in raw.replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            ids.extend(range(int(lo), int(hi) + 1))
        else:
            ids.append(int(part))
    return ids


def _tokenize(text: str, path: str) -> Tuple[Dict[str, Dict[str, str]], List[List[str]]]:
    sections: Dict[str, Dict[str, str]] = {}
    table: List[List[str]] = []
    current: Optional[str] = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in _KV_SECTIONS and current != "sites":
                raise ScenarioError(f"[{current}]", f"unknown section at {path}:{lineno}")
            if current in sections or (current == "sites" and table):
                raise ScenarioError(f"[{current}]", f"duplicate section at {path}:{lineno}")
            if current != "sites":
                sections[current] = {}
            continue
        if current is None:
            raise ScenarioError("file", f"content before any section at {path}:{lineno}")
        if current == "sites":
            table.append(line.split())
            continue
        if "=" not in line:
            raise ScenarioError(current, f"expected 'key = value' at {path}:{lineno}, got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in sections[current]:
            raise ScenarioError(f"{current}.{key}", f"duplicate key at {path}:{lineno}")
        sections[current][key] = value
    return sections, table


def _sites_from_table(table: List[List[str]]) -> Tuple[List[SiteSpec], List[float]]:
    header = [h.lower() for h in table[0]]
    for col in header:
        if col not in _SITE_COLUMNS:
            raise ScenarioError(f"sites.{col}", "unknown column")
    for col in ("id", "x", "y"):
        if col not in header:
            raise ScenarioError(f"sites.{col}", "required column missing")
    sites: List[SiteSpec] = []
    weights: List[float] = []
    for row in table[1:]:
        if len(row) != len(header):
            raise ScenarioError("sites", f"row {row!r} has {len(row)} cells, header has {len(header)}")
        rec = dict(zip(header, row))
        kw: Dict[str, Any] = {}
        try:
            sid = int(rec["id"])
            pos = (float(rec["x"]), float(rec["y"]))
            if "band_index" in rec:
                kw["band_index"] = int(rec["band_index"])
            if "prb_capacity" in rec:
                kw["prb_capacity"] = int(rec["prb_capacity"])
            if "tx_power_per_subcarrier" in rec:
                kw["tx_power_per_subcarrier"] = float(rec["tx_power_per_subcarrier"])
            if "antenna_gain" in rec:
                kw["antenna_gain"] = float(rec["antenna_gain"])
            weights.append(float(rec.get("hotspot_weight", "1.0")))
        except ValueError as e:
            raise ScenarioError("sites", f"bad value in row {row!r}: {e}") from None
        sites.append(SiteSpec(id=sid, position=pos, **kw))
    return sites, weights


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# =========================
# Public API
# =========================

def parse_scenario(text: str, path: str = "<string>") -> Scenario:
    from data.layout import generate_layout  # layout imports this module

    sections, table = _tokenize(text, path)
    base_dir = os.path.dirname(os.path.abspath(path)) if path != "<string>" else os.getcwd()

    parts: Dict[str, Any] = {}
    for name, cls in _SECTION_TYPES.items():
        raw = sections.get(name, {})
        kinds = _field_kinds(cls)
        kw: Dict[str, Any] = {}
        for key, value in raw.items():
            if key not in kinds or key == "hotspot_weights":
                raise ScenarioError(f"{name}.{key}", "unknown key")
            kw[key] = _convert(name, key, value, kinds[key])
        if name == "link" and kw.get("table"):
            table_path = kw["table"]
            if not os.path.isabs(table_path):
                table_path = os.path.normpath(os.path.join(base_dir, table_path))
            kw["table"] = table_path
        parts[name] = kw

    top: Dict[str, Any] = {}
    kinds = _field_kinds(Scenario)
    for key, value in sections.get("scenario", {}).items():
        if key not in _SCENARIO_KEYS:
            raise ScenarioError(f"scenario.{key}", "unknown key")
        top[key] = _convert("scenario", key, value, kinds[key])

    radio = RadioParams(**parts["radio"])

    if table:
        if "layout" in sections:
            raise ScenarioError("[layout]", "give either [layout] or [sites], not both")
        sites, weights = _sites_from_table(table)
    elif "layout" in sections:
        lay = sections["layout"]
        for key in lay:
            if key not in _LAYOUT_KEYS:
                raise ScenarioError(f"layout.{key}", "unknown key")
        n_sites = _convert("layout", "n_sites", lay.get("n_sites", str(S.N_SITES)), "int")
        if n_sites < 1:
            raise ScenarioError("layout.n_sites", f"must be >= 1, got {n_sites}")
        sites = generate_layout(
            n_sites=n_sites,
            jitter=_convert("layout", "jitter", lay.get("jitter", repr(S.LAYOUT_JITTER)), "float"),
            seed=_convert("layout", "seed", lay.get("seed", str(S.LAYOUT_SEED)), "int"),
            inter_site_distance=top.get("inter_site_distance", S.INTER_SITE_DISTANCE),
            reuse_factor=radio.reuse_factor,
            prb_capacity=_convert("layout", "prb_capacity", lay.get("prb_capacity", str(S.PRB_CAPACITY)), "int"),
            tx_power_per_subcarrier=_convert("layout", "tx_power_per_subcarrier",
                                             lay.get("tx_power_per_subcarrier", repr(S.TX_POWER_PER_SUBCARRIER)), "float"),
            antenna_gain=_convert("layout", "antenna_gain", lay.get("antenna_gain", repr(S.ANTENNA_GAIN)), "float"),
        )
        weights = [1.0] * len(sites)
    else:
        raise ScenarioError("sites", "scenario needs a [sites] table or a [layout] section")

    if "hotspots" in sections:
        hs = sections["hotspots"]
        for key in hs:
            if key not in ("sites", "weight"):
                raise ScenarioError(f"hotspots.{key}", "unknown key")
        weight = _convert("hotspots", "weight", hs.get("weight", repr(S.HOTSPOT_WEIGHT)), "float")
        try:
            ids = _parse_id_list(hs.get("sites", ""))
        except ValueError:
            raise ScenarioError("hotspots.sites", f"bad id list {hs.get('sites')!r}") from None
        for sid in ids:
            if not (0 <= sid < len(weights)):
                raise ScenarioError("hotspots.sites", f"site id {sid} out of range")
            weights[sid] = weight

    traffic = TrafficSpec(hotspot_weights=tuple(weights), **parts["traffic"])
    return Scenario(
        sites=tuple(sites),
        radio=radio,
        propagation=PropagationParams(**parts["propagation"]),
        link=LinkCurve(**parts["link"]),
        traffic=traffic,
        policy=PolicySpec(**parts["policy"]),
        **top,
    )


def load_scenario(path: str) -> Scenario:
    if not os.path.exists(path):
        raise FileNotFoundError(f"scenario file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    sc = parse_scenario(text, path)
    logger.debug("[SCENARIO] loaded %s: %d sites, reuse=%d", path, sc.n_sites, sc.radio.reuse_factor)
    return sc


def format_scenario(sc: Scenario) -> str:
    lines: List[str] = ["# scenario file (explicit sites)", "", "[scenario]"]
    for key in _SCENARIO_KEYS:
        lines.append(f"{key} = {_fmt(getattr(sc, key))}")
    for name, obj in (("radio", sc.radio), ("propagation", sc.propagation), ("link", sc.link),
                      ("traffic", sc.traffic), ("policy", sc.policy)):
        lines.append("")
        lines.append(f"[{name}]")
        for f in fields(obj):
            if f.name == "hotspot_weights":
                continue
            v = getattr(obj, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {_fmt(v)}")
    lines.append("")
    lines.append("[sites]")
    lines.append(" ".join(_SITE_COLUMNS))
    for s, w in zip(sc.sites, sc.traffic.hotspot_weights):
        lines.append(" ".join(_fmt(v) for v in (
            s.id, float(s.position[0]), float(s.position[1]), s.band_index, s.prb_capacity,
            float(s.tx_power_per_subcarrier), float(s.antenna_gain), float(w),
        )))
    return "\n".join(lines) + "\n"


def with_overrides(sc: Scenario, arrival_rate: Optional[float] = None, seed: Optional[int] = None,
                   warmup_fraction: Optional[float] = None, snapshot_duration: Optional[float] = None,
                   sim_duration: Optional[float] = None) -> Scenario:
    """Copy of `sc` with the CLI overrides applied; validation reruns on the copy."""
    top: Dict[str, Any] = {}
    if seed is not None:
        top["rng_seed"] = int(seed)
    if warmup_fraction is not None:
        top["warmup_fraction"] = float(warmup_fraction)
    if snapshot_duration is not None:
        top["snapshot_duration"] = float(snapshot_duration)
    if sim_duration is not None:
        top["sim_duration"] = float(sim_duration)
    if arrival_rate is not None:
        top["traffic"] = replace(sc.traffic, arrival_rate=float(arrival_rate))
    return replace(sc, **top) if top else sc


def save_scenario(sc: Scenario, path: str) -> str:
    from utils.storage import atomic_write_text
    atomic_write_text(path, format_scenario(sc))
    return path
# ----------------------- /data/scenario.py -----------------------
