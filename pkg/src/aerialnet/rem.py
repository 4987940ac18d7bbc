"""Radio environment maps and spectrum occupancy from distributed sensor reports."""

from __future__ import annotations

import enum
import math
import re
import threading
from dataclasses import dataclass, field

import numpy as np

from . import _idw
from .errors import DomainError, ReportError
from .linkbudget import SnrGrid
from .sensing import FusionRule, fuse

DEFAULT_HORIZON_S = 60.0
DEFAULT_ENERGY_THRESHOLD_DBM = -95.0
REPORT_COLUMNS = ("node_id", "x_m", "y_m", "channel_id", "rssi_dbm", "decision", "timestamp_s")

_INT_RE = re.compile(r"^[+-]?\d+$")


def parse_id(text):
    """Identifiers that look like integers are stored as ``int``."""
    text = str(text).strip()
    return int(text) if _INT_RE.match(text) else text


def id_key(ident):
    """Sort key placing integer ids (numerically) before string ids."""
    return (0, ident, "") if isinstance(ident, int) else (1, 0, str(ident))


class ReportFileError(ReportError):
    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        lines = ", ".join(str(n) for n, _ in problems) or "-"
        detail = "; ".join(f"line {n}: {r}" for n, r in problems[:10]) or "no reports"
        super().__init__(f"malformed report lines [{lines}]: {detail}")


@dataclass(frozen=True)
class SensorReport:
    node_id: str
    position: tuple[float, float]
    channel_id: int | str
    rssi_dbm: float
    decision: int | None = None
    timestamp_s: float = 0.0

    def __post_init__(self):
        if not str(self.node_id).strip():
            raise ReportError("empty node_id")
        if len(self.position) != 2 or not all(math.isfinite(v) for v in self.position):
            raise ReportError(f"position must be two finite coordinates, got {self.position!r}")
        if not math.isfinite(self.rssi_dbm):
            raise ReportError(f"rssi_dbm must be finite, got {self.rssi_dbm!r}")
        if self.decision is not None and self.decision not in (0, 1):
            raise ReportError(f"decision must be 0, 1 or empty, got {self.decision!r}")
        if not (math.isfinite(self.timestamp_s) and self.timestamp_s >= 0):
            raise ReportError(f"timestamp_s must be >= 0, got {self.timestamp_s!r}")
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "node_id", str(self.node_id).strip())
        object.__setattr__(self, "channel_id", parse_id(self.channel_id))

    @property
    def key(self):
        return (str(self.node_id), self.channel_id, self.timestamp_s)

    @classmethod
    def from_line(cls, line: str) -> "SensorReport":
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(REPORT_COLUMNS):
            raise ReportError(f"expected {len(REPORT_COLUMNS)} fields, got {len(fields)}")
        node, x, y, ch, rssi, dec, ts = fields
        try:
            return cls(node_id=node, position=(float(x), float(y)), channel_id=parse_id(ch),
                       rssi_dbm=float(rssi), decision=int(dec) if dec else None,
                       timestamp_s=float(ts))
        except ValueError as exc:
            if isinstance(exc, ReportError):
                raise
            raise ReportError(str(exc)) from None

    def to_line(self) -> str:
        dec = "" if self.decision is None else str(self.decision)
        return (f"{self.node_id},{self.position[0]:.6f},{self.position[1]:.6f},"
                f"{self.channel_id},{self.rssi_dbm:.6f},{dec},{self.timestamp_s:.6f}")


def parse_reports(text: str) -> list[SensorReport]:
    """Parse a report file; every bad line is collected before raising."""
    reports, problems = [], []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("node_id"):
            continue
        try:
            reports.append(SensorReport.from_line(line))
        except ReportError as exc:
            problems.append((n, exc.reason))
    if problems or not reports:
        raise ReportFileError(problems)
    return reports


def read_reports(path) -> list[SensorReport]:
    with open(path, encoding="utf-8") as fh:
        return parse_reports(fh.read())


class ReportStore:
    """Thread-safe report set with last-write-wins per (node, channel, timestamp).

    Reports older than ``horizon_s`` before the newest report are dropped when
    the store is queried.
    """

    def __init__(self, reports=(), horizon_s: float = DEFAULT_HORIZON_S):
        if not horizon_s > 0:
            raise DomainError("horizon_s must be positive")
        self.horizon_s = float(horizon_s)
        self._lock = threading.Lock()
        self._reports: dict = {}
        for r in reports:
            self.ingest(r)

    def __len__(self):
        with self._lock:
            return len(self._reports)

    def ingest(self, report: SensorReport) -> "ReportStore":
        if not isinstance(report, SensorReport):
            raise ReportError(f"not a SensorReport: {report!r}")
        with self._lock:
            self._reports[report.key] = report
        return self

    def snapshot(self) -> tuple[SensorReport, ...]:
        """Consistent, canonically ordered view after lazy eviction."""
        with self._lock:
            if self._reports:
                newest = max(r.timestamp_s for r in self._reports.values())
                cutoff = newest - self.horizon_s
                stale = [k for k, r in self._reports.items() if r.timestamp_s < cutoff]
                for k in stale:
                    del self._reports[k]
            items = list(self._reports.values())
        items.sort(key=lambda r: (id_key(r.channel_id), r.node_id, r.timestamp_s))
        return tuple(items)


def ingest_report(store: ReportStore, report: SensorReport) -> ReportStore:
    return store.ingest(report)


class OccupancyState(str, enum.Enum):
    FREE = "FREE"
    OCCUPIED = "OCCUPIED"


@dataclass(frozen=True)
class OccupancyEntry:
    state: OccupancyState
    probability: float
    reports: int
    unknown: bool = False

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise DomainError(f"occupancy probability must lie in [0, 1], got {self.probability}")


@dataclass(frozen=True)
class OccupancyTable:
    """Per-channel occupancy.

    Channels without reports are ``unknown`` and conservatively held
    OCCUPIED with probability 1, so they are never offered as free.
    """

    entries: dict = field(default_factory=dict)
    rule: FusionRule = FusionRule.OR

    def __post_init__(self):
        ordered = dict(sorted(self.entries.items(), key=lambda kv: id_key(kv[0])))
        object.__setattr__(self, "entries", ordered)

    def __getitem__(self, channel_id) -> OccupancyEntry:
        return self.entries[channel_id]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def to_text(self, header: dict | None = None) -> str:
        lines = [f"# {k}={v}" for k, v in (header or {}).items()]
        lines.append("channel_id,state,probability,reports")
        for ch, e in self.entries.items():
            state = "UNKNOWN" if e.unknown else e.state.value
            lines.append(f"{ch},{state},{e.probability:.6f},{e.reports}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_records(cls, records, rule=FusionRule.OR) -> "OccupancyTable":
        """Build from ``{channel_id, state, probability, reports}`` mappings."""
        entries = {}
        for rec in records:
            ch = parse_id(rec["channel_id"])
            state = str(rec.get("state", "")).upper()
            if state == "UNKNOWN":
                entries[ch] = OccupancyEntry(OccupancyState.OCCUPIED, 1.0, 0, unknown=True)
                continue
            entries[ch] = OccupancyEntry(OccupancyState(state), float(rec["probability"]),
                                         int(rec.get("reports", 0)))
        return cls(entries, FusionRule.parse(rule))


def _vote(report, thresholds, default_threshold):
    if report.decision is not None:
        return report.decision
    limit = thresholds.get(report.channel_id, default_threshold)
    return 1 if report.rssi_dbm >= limit else 0


def _latest_per_node(reports, horizon_s):
    if not reports:
        return {}
    cutoff = max(r.timestamp_s for r in reports) - horizon_s
    latest = {}
    for r in reports:
        if r.timestamp_s < cutoff:
            continue
        k = (r.channel_id, r.node_id)
        if k not in latest or r.timestamp_s > latest[k].timestamp_s:
            latest[k] = r
    return latest


def build_occupancy_table(store: ReportStore, rule=FusionRule.OR,
                          horizon_s: float | None = None, *, channels=(),
                          thresholds_dbm: dict | None = None,
                          default_threshold_dbm: float = DEFAULT_ENERGY_THRESHOLD_DBM
                          ) -> OccupancyTable:
    """Fuse each node's latest in-horizon vote per channel.

    A vote is the report's decision when present, otherwise
    ``rssi_dbm >= threshold`` for that channel. ``channels`` lists ids that
    must appear even without reports (they are flagged unknown).
    """
    rule = FusionRule.parse(rule)
    horizon = store.horizon_s if horizon_s is None else float(horizon_s)
    thresholds = {parse_id(k): float(v) for k, v in (thresholds_dbm or {}).items()}
    votes: dict = {}
    for (ch, node), r in sorted(_latest_per_node(store.snapshot(), horizon).items(),
                                key=lambda kv: (id_key(kv[0][0]), kv[0][1])):
        votes.setdefault(ch, []).append(_vote(r, thresholds, default_threshold_dbm))
    entries = {}
    for ch in channels:
        entries[parse_id(ch)] = OccupancyEntry(OccupancyState.OCCUPIED, 1.0, 0, unknown=True)
    for ch, v in votes.items():
        state = OccupancyState.OCCUPIED if fuse(v, rule) else OccupancyState.FREE
        entries[ch] = OccupancyEntry(state, sum(v) / len(v), len(v))
    return OccupancyTable(entries, rule)


@dataclass(frozen=True)
class GridSpec:
    origin: tuple[float, float]
    spacing_m: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.spacing_m > 0 or self.nx < 1 or self.ny < 1:
            raise DomainError("grid spec needs positive spacing and cell counts")


def interpolate_map(store: ReportStore, channel_id, grid: GridSpec,
                    horizon_s: float | None = None) -> SnrGrid:
    """Received-power map (dBm) by power-domain inverse-distance weighting.

    Uses each node's latest in-horizon report on the channel. Exact at report
    positions and bounded by the reported minimum and maximum.
    """
    channel_id = parse_id(channel_id)
    horizon = store.horizon_s if horizon_s is None else float(horizon_s)
    chosen = [r for (ch, _), r in sorted(_latest_per_node(store.snapshot(), horizon).items(),
                                        key=lambda kv: kv[0][1])
              if ch == channel_id]
    if not chosen:
        raise DomainError(f"no reports for channel {channel_id!r}")
    rx = np.array([r.position[0] for r in chosen])
    ry = np.array([r.position[1] for r in chosen])
    rssi = np.array([r.rssi_dbm for r in chosen])
    gx = grid.origin[0] + grid.spacing_m * np.arange(grid.nx)
    gy = grid.origin[1] + grid.spacing_m * np.arange(grid.ny)
    qx, qy = np.meshgrid(gx, gy)
    values = _idw.idw(qx.ravel(), qy.ravel(), rx, ry, rssi)
    return SnrGrid(origin=tuple(grid.origin), spacing_m=grid.spacing_m,
                   nx=grid.nx, ny=grid.ny, values=values)


def map_to_text(grid: SnrGrid, header: dict | None = None) -> str:
    return grid.to_text(header).replace("x_m,y_m,snr_db", "x_m,y_m,rssi_dbm", 1)


def free_channels(table: OccupancyTable) -> list:
    """FREE channels by ascending occupancy probability, then channel id."""
    free = [(e.probability, id_key(ch), ch) for ch, e in table.entries.items()
            if e.state is OccupancyState.FREE and not e.unknown]
    return [ch for _, _, ch in sorted(free)]
