"""Scenario model for an airborne/terrestrial emergency deployment.

A scenario holds airborne cells (AeNB on a tethered platform), terrestrial
cells (TeNB, e.g. in a portable land unit), user equipment, spectrum sensors,
channels, backhaul links towards an external network node, and a dynamic
spectrum access policy. Evaluation is SNR-only: there is no load coupling
between users, so every UE row is computed independently.
"""

from __future__ import annotations

import enum
import heapq
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace

from .errors import DomainError, ScenarioError
from .linkbudget import (SPEED_OF_LIGHT, AerialPlatform, LinkBudgetParams,
                         free_space_path_loss_db, snr_db)
from .rem import (OccupancyTable, ReportStore, SensorReport, build_occupancy_table,
                  free_channels, id_key, parse_id)
from .sensing import FusionRule

GEO_MIN_SLANT_M = 35_786e3
CAPABILITIES = ("LTE", "TETRA", "SBAND")
COMMAND_SECTIONS = ("coverage", "roc", "fuse", "rem", "scenario")
_PARAM_KEYS = tuple(f.name for f in fields(LinkBudgetParams) if f.name != "carrier_freq_hz")


class CellKind(str, enum.Enum):
    AENB = "AENB"
    TENB = "TENB"


class LinkKind(str, enum.Enum):
    TETHER = "TETHER"
    WLAN = "WLAN"
    SATELLITE = "SATELLITE"


class DsaMode(str, enum.Enum):
    UNDERLAY = "UNDERLAY"
    OVERLAY = "OVERLAY"


@dataclass(frozen=True)
class ScenarioDefaults:
    tx_power_dbm: float = 30.0
    bandwidth_hz: float = 10e6
    tx_antenna_gain_dbi: float = 3.0
    ue_antenna_gain_dbi: float = 0.0
    ue_noise_figure_db: float = 7.0
    fading_margin_db: float = 4.0
    temperature_k: float = 293.15
    ground_cell_height_m: float = 10.0
    access_delay_s: float = 0.001
    terrestrial_link_delay_s: float = 0.002
    core_id: str = "core"

    def link_params(self, carrier_freq_hz, overrides=None) -> LinkBudgetParams:
        kw = {k: getattr(self, k) for k in _PARAM_KEYS}
        kw.update(overrides or {})
        return LinkBudgetParams(carrier_freq_hz=carrier_freq_hz, **kw)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Cell:
    cell_id: str
    kind: CellKind
    position: tuple[float, float]
    height_m: float
    channel_id: int | str
    params: LinkBudgetParams

    def slant_distance_m(self, point) -> float:
        dx = point[0] - self.position[0]
        dy = point[1] - self.position[1]
        return math.sqrt(self.height_m * self.height_m + dx * dx + dy * dy)


@dataclass(frozen=True)
class UserEquipment:
    ue_id: str
    position: tuple[float, float]
    capabilities: tuple[str, ...] = ("LTE",)


@dataclass(frozen=True)
class Sensor:
    sensor_id: str
    position: tuple[float, float]


@dataclass(frozen=True)
class BackhaulLink:
    kind: LinkKind
    endpoints: tuple[str, str]
    slant_range_m: float | None = None
    processing_delay_s: float = 0.0
    delay_s: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LinkKind(self.kind))
        if self.processing_delay_s < 0:
            raise DomainError("processing_delay_s must be >= 0")
        if self.kind is LinkKind.SATELLITE:
            if self.slant_range_m is None or not self.slant_range_m >= GEO_MIN_SLANT_M:
                raise DomainError(
                    f"satellite slant range must be >= {GEO_MIN_SLANT_M:.0f} m, "
                    f"got {self.slant_range_m!r}")
        if self.delay_s is not None and self.delay_s < 0:
            raise DomainError("delay_s must be >= 0")


@dataclass(frozen=True)
class DsaPolicy:
    mode: DsaMode = DsaMode.OVERLAY
    interference_cap_dbm: float | None = None
    victims: tuple = ()
    max_tx_power_dbm: float = 30.0
    occupancy: OccupancyTable | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", DsaMode(self.mode))
        object.__setattr__(self, "victims", tuple(
            (float(v[0]), float(v[1]), float(v[2]) if len(v) > 2 else 0.0)
            for v in self.victims))


@dataclass(frozen=True)
class ChannelGrant:
    channel_id: int | str
    tx_power_cap_dbm: float


@dataclass(frozen=True)
class AssociationRow:
    ue_id: str
    cell_id: str
    snr_db: float
    spectral_eff_bps_hz: float  # Shannon upper bound


@dataclass(frozen=True)
class Association:
    rows: tuple[AssociationRow, ...]

    def serving(self, ue_id) -> str:
        return next(r.cell_id for r in self.rows if r.ue_id == ue_id)


@dataclass(frozen=True)
class Scenario:
    platforms: tuple[Cell, ...] = ()
    ground_cells: tuple[Cell, ...] = ()
    ues: tuple[UserEquipment, ...] = ()
    sensors: tuple[Sensor, ...] = ()
    channels: dict = field(default_factory=dict)  # channel_id -> carrier_freq_hz
    backhaul: tuple[BackhaulLink, ...] = ()
    dsa_policy: DsaPolicy = field(default_factory=DsaPolicy)
    defaults: ScenarioDefaults = field(default_factory=ScenarioDefaults)

    @property
    def cells(self) -> tuple[Cell, ...]:
        return tuple(self.platforms) + tuple(self.ground_cells)

    def __post_init__(self):
        seen = set()
        for ident in ([c.cell_id for c in self.cells] + [u.ue_id for u in self.ues]
                      + [s.sensor_id for s in self.sensors]):
            if ident in seen:
                raise ScenarioError("id", f"duplicate node identifier {ident!r}")
            seen.add(ident)
        for c in self.cells:
            if c.channel_id not in self.channels:
                raise ScenarioError("channel_id", f"cell {c.cell_id!r} references "
                                    f"undefined channel {c.channel_id!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return _parse_scenario(data)

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError("<file>", f"invalid JSON: {exc}") from None
        return _parse_scenario(data)


# -- operations -------------------------------------------------------------

def spectral_efficiency(snr_value_db: float) -> float:
    return math.log2(1.0 + 10.0 ** (snr_value_db / 10.0))


def _associate(cells, ue) -> AssociationRow:
    best = None
    for cell in cells:
        s = snr_db(cell.params, cell.slant_distance_m(ue.position))
        key = (-s, id_key(cell.cell_id))
        if best is None or key < best[0]:
            best = (key, cell, s)
    _, cell, s = best
    return AssociationRow(ue.ue_id, cell.cell_id, s, spectral_efficiency(s))


def best_server_association(scenario: Scenario) -> Association:
    """Each UE picks the cell with the highest downlink SNR (lowest id on ties)."""
    cells = scenario.cells
    if not cells:
        raise DomainError("scenario has no cells")
    if not scenario.ues:
        raise DomainError("scenario has no user equipment")
    return Association(tuple(_associate(cells, ue) for ue in scenario.ues))


def backhaul_delay_s(link: BackhaulLink, default_delay_s: float = 0.002) -> float:
    """One-way delay of a backhaul hop.

    A satellite hop is ground-satellite-ground through one slant range each
    way plus on-board/modem processing.
    """
    if link.kind is LinkKind.SATELLITE:
        return 2.0 * link.slant_range_m / SPEED_OF_LIGHT + link.processing_delay_s
    return default_delay_s if link.delay_s is None else link.delay_s


def backhaul_path(scenario: Scenario, source: str):
    """Minimum-delay route from ``source`` to the core node.

    Returns ``(path, total_delay)`` or ``None`` when unreachable. Ties between
    equal-delay paths go to the lexicographically smaller node sequence.
    """
    core = scenario.defaults.core_id
    adj: dict = {}
    for link in scenario.backhaul:
        d = backhaul_delay_s(link, scenario.defaults.terrestrial_link_delay_s)
        a, b = link.endpoints
        adj.setdefault(a, []).append((b, d))
        adj.setdefault(b, []).append((a, d))
    heap = [(0.0, (source,))]
    settled = set()
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == core:
            return path, dist
        for nxt, d in adj.get(node, ()):
            if nxt not in settled:
                heapq.heappush(heap, (dist + d, path + (nxt,)))
    return None


def select_channel(policy: DsaPolicy, table: OccupancyTable | None, *,
                   tx_position=None, channel_freqs=None) -> ChannelGrant | None:
    """Channel and transmit-power cap under the DSA policy.

    Overlay takes the first free channel at full power. Underlay takes the
    least-occupied known channel and caps the power so that the free-space
    received power at the nearest victim does not exceed the interference cap.
    """
    table = table if table is not None else OccupancyTable()
    if policy.mode is DsaMode.OVERLAY:
        free = free_channels(table)
        return ChannelGrant(free[0], policy.max_tx_power_dbm) if free else None

    if not policy.victims:
        raise DomainError("underlay access needs victim positions to verify the cap")
    if policy.interference_cap_dbm is None:
        raise DomainError("underlay access needs an interference cap")
    if tx_position is None:
        raise DomainError("underlay access needs the transmitter position")
    known = sorted((e.probability, id_key(ch), ch) for ch, e in table.entries.items()
                   if not e.unknown)
    if not known:
        return None
    ch = known[0][2]
    freqs = channel_freqs or {}
    if ch not in freqs:
        raise DomainError(f"no carrier frequency for channel {ch!r}")
    tx = tuple(tx_position) + (0.0,) * (3 - len(tx_position))
    dists = [math.dist(tx, v) for v in policy.victims]
    if min(dists) <= 0:
        raise DomainError("a victim is co-located with the transmitter")
    loss = min(free_space_path_loss_db(d, freqs[ch]) for d in dists)
    cap = min(policy.interference_cap_dbm + loss, policy.max_tx_power_dbm)
    return ChannelGrant(ch, cap)


@dataclass(frozen=True)
class UeReportRow:
    ue_id: str
    cell_id: str
    snr_db: float
    spectral_eff_bps_hz: float
    path: tuple[str, ...]
    delay_s: float
    reachable: bool


@dataclass(frozen=True)
class ScenarioReport:
    rows: tuple[UeReportRow, ...]
    grants: dict  # cell_id -> ChannelGrant | None
    header: dict

    def to_text(self, extra_header: dict | None = None) -> str:
        head = dict(self.header)
        head.update(extra_header or {})
        lines = [f"# {k}={v}" for k, v in head.items()]
        lines.append("ue_id,cell_id,snr_db,spectral_eff_bps_hz,path,delay_s,reachable")
        for r in self.rows:
            delay = f"{r.delay_s:.6f}" if r.reachable else "nan"
            lines.append(f"{r.ue_id},{r.cell_id},{r.snr_db:.6f},{r.spectral_eff_bps_hz:.6f},"
                         f"{'>'.join(r.path)},{delay},{str(r.reachable).lower()}")
        lines.append("")
        lines.append("cell_id,channel_id,tx_power_cap_dbm")
        for cell_id, g in self.grants.items():
            if g is None:
                lines.append(f"{cell_id},none,nan")
            else:
                lines.append(f"{cell_id},{g.channel_id},{g.tx_power_cap_dbm:.6f}")
        return "\n".join(lines) + "\n"


def _ue_row(scenario, cells, ue) -> UeReportRow:
    a = _associate(cells, ue)
    route = backhaul_path(scenario, a.cell_id)
    if route is None:
        return UeReportRow(ue.ue_id, a.cell_id, a.snr_db, a.spectral_eff_bps_hz,
                           (), math.nan, False)
    path, dist = route
    return UeReportRow(ue.ue_id, a.cell_id, a.snr_db, a.spectral_eff_bps_hz, path,
                       scenario.defaults.access_delay_s + dist, True)


def evaluate_scenario(scenario: Scenario, *, workers: int = 1) -> ScenarioReport:
    """Association, backhaul route/delay per UE and a DSA grant per cell.

    The end-to-end delay is the access hop plus the backhaul delays along the
    serving cell's minimum-delay route to the core node. ``workers`` only
    changes how rows are scheduled, never their values or order.
    """
    cells = scenario.cells
    if not cells:
        raise DomainError("scenario has no cells")
    if workers > 1 and len(scenario.ues) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(lambda ue: _ue_row(scenario, cells, ue), scenario.ues))
    else:
        rows = tuple(_ue_row(scenario, cells, ue) for ue in scenario.ues)
    policy = scenario.dsa_policy
    grants = {c.cell_id: select_channel(policy, policy.occupancy,
                                        tx_position=(*c.position, c.height_m),
                                        channel_freqs=scenario.channels)
              for c in cells}
    header = {f"defaults.{k}": v for k, v in scenario.defaults.as_dict().items()}
    header.update({
        "dsa.mode": policy.mode.value,
        "dsa.max_tx_power_dbm": policy.max_tx_power_dbm,
        "dsa.interference_cap_dbm": policy.interference_cap_dbm,
        "cells": len(cells),
        "ues": len(scenario.ues),
        "backhaul_links": len(scenario.backhaul),
        "spectral_eff_bps_hz": "Shannon upper bound",
    })
    return ScenarioReport(rows, grants, header)


# -- parsing ----------------------------------------------------------------

_TOP_KEYS = {"platforms", "ground_cells", "ues", "sensors", "channels", "backhaul",
             "dsa_policy", "defaults"}


def _req(d, key, where, kind=float):
    if not isinstance(d, dict):
        raise ScenarioError(where, "expected an object")
    if key not in d:
        raise ScenarioError(f"{where}.{key}", "missing required key")
    return _conv(d[key], f"{where}.{key}", kind)


def _opt(d, key, where, default, kind=float):
    return default if d.get(key) is None else _conv(d[key], f"{where}.{key}", kind)


def _conv(value, where, kind):
    try:
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
            if not math.isfinite(out):
                raise ValueError
            return out
        if kind is str:
            if isinstance(value, (dict, list)):
                raise TypeError
            return str(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ScenarioError(where, f"invalid value {value!r}") from None


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ScenarioError(where, "expected an object")
    for k in d:
        if k not in allowed:
            raise ScenarioError(f"{where}.{k}", "unknown key")


def _list(data, key):
    value = data.get(key, [])
    if not isinstance(value, list):
        raise ScenarioError(key, "expected a list")
    return value


def _parse_cell(d, where, kind, defaults, channels):
    allowed = {"id", "x_m", "y_m", "channel_id", "altitude_m", "height_m", *_PARAM_KEYS}
    _check_keys(d, allowed, where)
    ch = parse_id(_req(d, "channel_id", where, str))
    if ch not in channels:
        raise ScenarioError(f"{where}.channel_id", f"undefined channel {ch!r}")
    overrides = {k: _conv(d[k], f"{where}.{k}", float) for k in _PARAM_KEYS if k in d}
    try:
        params = defaults.link_params(channels[ch], overrides)
        pos = (_req(d, "x_m", where), _req(d, "y_m", where))
        if kind is CellKind.AENB:
            platform = AerialPlatform(pos, _req(d, "altitude_m", where))
            height = platform.altitude_m
        else:
            height = _opt(d, "height_m", where, defaults.ground_cell_height_m)
            if not height > 0:
                raise DomainError("height_m must be positive")
    except DomainError as exc:
        raise ScenarioError(where, str(exc)) from None
    return Cell(_req(d, "id", where, str), kind, pos, height, ch, params)


def _parse_policy(d, channels, defaults):
    where = "dsa_policy"
    _check_keys(d, {"mode", "interference_cap_dbm", "victims", "max_tx_power_dbm",
                    "occupancy", "reports", "fusion_rule"}, where)
    try:
        mode = DsaMode(str(d.get("mode", "OVERLAY")).upper())
    except ValueError:
        raise ScenarioError(f"{where}.mode", f"unknown mode {d.get('mode')!r}") from None
    victims = []
    for i, v in enumerate(d.get("victims", [])):
        w = f"{where}.victims[{i}]"
        _check_keys(v, {"x_m", "y_m", "z_m"}, w)
        victims.append((_req(v, "x_m", w), _req(v, "y_m", w), _opt(v, "z_m", w, 0.0)))
    cap = _opt(d, "interference_cap_dbm", where, None)
    if mode is DsaMode.UNDERLAY and (cap is None or not victims):
        raise ScenarioError(f"{where}.victims" if cap is not None else
                            f"{where}.interference_cap_dbm",
                            "underlay access needs an interference cap and victim positions")
    try:
        rule = FusionRule.parse(d.get("fusion_rule", "OR"))
    except DomainError as exc:
        raise ScenarioError(f"{where}.fusion_rule", str(exc)) from None
    occupancy = None
    if "occupancy" in d and "reports" in d:
        raise ScenarioError(where, "give either 'occupancy' or 'reports', not both")
    if "occupancy" in d:
        try:
            occupancy = OccupancyTable.from_records(d["occupancy"], rule)
        except (KeyError, ValueError, TypeError) as exc:
            raise ScenarioError(f"{where}.occupancy", f"bad record: {exc}") from None
    elif "reports" in d:
        store = ReportStore()
        for i, r in enumerate(d["reports"]):
            w = f"{where}.reports[{i}]"
            try:
                store.ingest(SensorReport(
                    node_id=_req(r, "node_id", w, str),
                    position=(_req(r, "x_m", w), _req(r, "y_m", w)),
                    channel_id=_req(r, "channel_id", w, str),
                    rssi_dbm=_req(r, "rssi_dbm", w),
                    decision=r.get("decision"),
                    timestamp_s=_opt(r, "timestamp_s", w, 0.0)))
            except ValueError as exc:
                if isinstance(exc, ScenarioError):
                    raise
                raise ScenarioError(w, str(exc)) from None
        occupancy = build_occupancy_table(store, rule, channels=list(channels))
    return DsaPolicy(mode, cap, tuple(victims),
                     _opt(d, "max_tx_power_dbm", where, defaults.tx_power_dbm), occupancy)


def _parse_scenario(data) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("<root>", "expected a JSON object")
    for k in data:
        if k not in _TOP_KEYS and k not in COMMAND_SECTIONS:
            raise ScenarioError(k, "unknown top-level key")

    raw_defaults = data.get("defaults", {})
    _check_keys(raw_defaults, {f.name for f in fields(ScenarioDefaults)}, "defaults")
    conv = {k: _conv(v, f"defaults.{k}", str if k == "core_id" else float)
            for k, v in raw_defaults.items()}
    defaults = replace(ScenarioDefaults(), **conv)

    channels = {}
    for i, c in enumerate(_list(data, "channels")):
        w = f"channels[{i}]"
        _check_keys(c, {"channel_id", "carrier_freq_hz"}, w)
        ch = parse_id(_req(c, "channel_id", w, str))
        if ch in channels:
            raise ScenarioError(f"{w}.channel_id", f"duplicate channel {ch!r}")
        f = _req(c, "carrier_freq_hz", w)
        if not f > 0:
            raise ScenarioError(f"{w}.carrier_freq_hz", "must be positive")
        channels[ch] = f

    platforms = tuple(_parse_cell(d, f"platforms[{i}]", CellKind.AENB, defaults, channels)
                      for i, d in enumerate(_list(data, "platforms")))
    ground = tuple(_parse_cell(d, f"ground_cells[{i}]", CellKind.TENB, defaults, channels)
                   for i, d in enumerate(_list(data, "ground_cells")))

    ues = []
    for i, u in enumerate(_list(data, "ues")):
        w = f"ues[{i}]"
        _check_keys(u, {"id", "x_m", "y_m", "capabilities"}, w)
        caps = tuple(str(c).upper() for c in u.get("capabilities", ["LTE"]))
        bad = [c for c in caps if c not in CAPABILITIES]
        if bad:
            raise ScenarioError(f"{w}.capabilities", f"unknown capability {bad[0]!r}")
        ues.append(UserEquipment(_req(u, "id", w, str),
                                 (_req(u, "x_m", w), _req(u, "y_m", w)), caps))

    sensors = []
    for i, s in enumerate(_list(data, "sensors")):
        w = f"sensors[{i}]"
        _check_keys(s, {"id", "x_m", "y_m"}, w)
        sensors.append(Sensor(_req(s, "id", w, str), (_req(s, "x_m", w), _req(s, "y_m", w))))

    links = []
    for i, b in enumerate(_list(data, "backhaul")):
        w = f"backhaul[{i}]"
        _check_keys(b, {"kind", "a", "b", "slant_range_m", "processing_delay_s", "delay_s"}, w)
        try:
            kind = LinkKind(str(_req(b, "kind", w, str)).upper())
        except ValueError:
            raise ScenarioError(f"{w}.kind", f"unknown link kind {b.get('kind')!r}") from None
        try:
            links.append(BackhaulLink(kind, (_req(b, "a", w, str), _req(b, "b", w, str)),
                                      _opt(b, "slant_range_m", w, None),
                                      _opt(b, "processing_delay_s", w, 0.0),
                                      _opt(b, "delay_s", w, None)))
        except DomainError as exc:
            key = "slant_range_m" if kind is LinkKind.SATELLITE else "delay_s"
            raise ScenarioError(f"{w}.{key}", str(exc)) from None

    policy = _parse_policy(data.get("dsa_policy", {}), channels, defaults)
    return Scenario(platforms, ground, tuple(ues), tuple(sensors), channels, tuple(links),
                    policy, defaults)
