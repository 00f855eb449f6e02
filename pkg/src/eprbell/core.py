"""Shared domain types: directions, outcomes, pair records and count tables.

Record logs are stored column-wise (one numpy array per field) so that a
million-trial run can be tallied without building a million Python objects.
:class:`PairRecord` is the row view used for small hand-built logs and for
file round-trips.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

#: speed of light in m/s
C_LIGHT = 299_792_458.0

TWO_PI = 2.0 * math.pi

CSV_HEADER = (
    "m", "setting1", "setting2", "outcome1", "outcome2",
    "t_emit", "t_set1", "t_set2", "lambda_family",
)

# fixed order of the four outcome cells of a setting pair
CELLS = ((1, 1), (1, -1), (-1, 1), (-1, -1))
CELL_NAMES = ("++", "+-", "-+", "--")


class ConfigurationError(ValueError):
    """Raised for invalid experiment, model or schedule configuration."""


class Outcome(enum.IntEnum):
    UP = 1
    DOWN = -1

    def __neg__(self):
        return Outcome(-int(self))

    @property
    def symbol(self):
        return "+" if self is Outcome.UP else "-"


@dataclass(frozen=True)
class Direction:
    """A measurement axis, either a coplanar angle or a 3D unit vector."""

    angle: float | None = None
    vector: tuple[float, float, float] | None = None

    def __post_init__(self):
        if (self.angle is None) == (self.vector is None):
            raise ConfigurationError("give exactly one of angle or vector")
        if self.angle is not None:
            if not math.isfinite(self.angle):
                raise ConfigurationError("direction angle must be finite")
            object.__setattr__(self, "angle", float(self.angle) % TWO_PI)
        else:
            v = np.asarray(self.vector, dtype=float)
            norm = np.linalg.norm(v)
            if v.shape != (3,) or not np.isfinite(norm) or norm == 0.0:
                raise ConfigurationError("direction vector must be a nonzero 3-vector")
            v = v / norm
            object.__setattr__(self, "vector", tuple(float(x) for x in v))

    @classmethod
    def coplanar(cls, angle):
        return cls(angle=angle)

    @classmethod
    def sphere(cls, vector):
        return cls(vector=tuple(vector))

    @property
    def mode(self):
        return "coplanar" if self.angle is not None else "full-sphere"

    def as_vector(self):
        """Unit 3-vector; coplanar axes lie in the x-y plane."""
        if self.angle is not None:
            return np.array([math.cos(self.angle), math.sin(self.angle), 0.0])
        return np.array(self.vector)


def relative_angle(d1: Direction, d2: Direction) -> float:
    """Angle in [0, pi] between two measurement axes."""
    if d1.angle is not None and d2.angle is not None:
        diff = abs(d1.angle - d2.angle) % TWO_PI
        return min(diff, TWO_PI - diff)
    cosine = float(np.dot(d1.as_vector(), d2.as_vector()))
    return math.acos(max(-1.0, min(1.0, cosine)))


@dataclass(frozen=True)
class HiddenTrace:
    """Hidden state of one emitted pair.

    ``counterfactual`` holds detector-1's outcome at every direction of the
    experiment; detector-2 always gives the negation at the same direction.
    ``source_family`` is ``None`` for setting-independent sources, otherwise
    the (setting1, setting2) index pair whose density produced ``lam``.
    """

    lam: tuple[float, ...]
    counterfactual: tuple[Outcome, ...]
    source_family: tuple[int, int] | None = None

    def outcome1(self, k):
        return self.counterfactual[k]

    def outcome2(self, k):
        return -self.counterfactual[k]


@dataclass(frozen=True)
class PairRecord:
    m: int
    settings: tuple[int, int]
    outcomes: tuple[Outcome, Outcome]
    emission_time: float = 0.0
    setting_event_times: tuple[float, float] = (0.0, 0.0)
    hidden_trace: HiddenTrace | None = None

    @property
    def causal_ordered(self):
        return all(self.emission_time <= t for t in self.setting_event_times)


@dataclass
class RecordLog:
    """Column store of pair records.

    ``cf`` is an (M, K) int8 array of detector-1 counterfactual outcomes and
    ``lam`` an (M, d) array of hidden variables; both are ``None`` for
    sources without hidden traces. ``family`` is -1 for setting-independent
    sources, otherwise ``s1 * K + s2``.
    """

    labels: tuple[str, ...]
    m: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    o1: np.ndarray
    o2: np.ndarray
    t_emit: np.ndarray
    t_set1: np.ndarray
    t_set2: np.ndarray
    family: np.ndarray | None = None
    lam: np.ndarray | None = None
    cf: np.ndarray | None = None

    def __post_init__(self):
        self.labels = tuple(self.labels)
        n = len(self.m)
        for name in ("s1", "s2", "o1", "o2", "t_emit", "t_set1", "t_set2"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has wrong length")
        k = len(self.labels)
        if n and (self.s1.min() < 0 or self.s2.min() < 0
                  or self.s1.max() >= k or self.s2.max() >= k):
            raise ValueError("setting index outside the direction list")

    def __len__(self):
        return len(self.m)

    @property
    def has_traces(self):
        return self.cf is not None

    @classmethod
    def empty(cls, labels):
        z = np.zeros(0, dtype=np.int64)
        f = np.zeros(0)
        return cls(labels, z, z, z, z.astype(np.int8), z.astype(np.int8), f, f, f)

    @classmethod
    def from_records(cls, records: Sequence[PairRecord], labels: Sequence[str]):
        records = list(records)
        if not records:
            return cls.empty(labels)
        traced = [r.hidden_trace is not None for r in records]
        if any(traced) and not all(traced):
            raise ValueError("either every record carries a hidden trace or none does")
        k = len(labels)
        log = cls(
            labels,
            m=np.array([r.m for r in records], dtype=np.int64),
            s1=np.array([r.settings[0] for r in records], dtype=np.int64),
            s2=np.array([r.settings[1] for r in records], dtype=np.int64),
            o1=np.array([int(r.outcomes[0]) for r in records], dtype=np.int8),
            o2=np.array([int(r.outcomes[1]) for r in records], dtype=np.int8),
            t_emit=np.array([r.emission_time for r in records], dtype=float),
            t_set1=np.array([r.setting_event_times[0] for r in records], dtype=float),
            t_set2=np.array([r.setting_event_times[1] for r in records], dtype=float),
        )
        if all(traced):
            traces = [r.hidden_trace for r in records]
            log.lam = np.array([t.lam for t in traces], dtype=float)
            log.cf = np.array([[int(o) for o in t.counterfactual] for t in traces],
                              dtype=np.int8)
            log.family = np.array(
                [-1 if t.source_family is None
                 else t.source_family[0] * k + t.source_family[1] for t in traces],
                dtype=np.int64)
        return log

    def record(self, i) -> PairRecord:
        trace = None
        if self.cf is not None:
            fam = int(self.family[i])
            k = len(self.labels)
            trace = HiddenTrace(
                lam=tuple(float(x) for x in self.lam[i]),
                counterfactual=tuple(Outcome(int(x)) for x in self.cf[i]),
                source_family=None if fam < 0 else divmod(fam, k),
            )
        return PairRecord(
            m=int(self.m[i]),
            settings=(int(self.s1[i]), int(self.s2[i])),
            outcomes=(Outcome(int(self.o1[i])), Outcome(int(self.o2[i]))),
            emission_time=float(self.t_emit[i]),
            setting_event_times=(float(self.t_set1[i]), float(self.t_set2[i])),
            hidden_trace=trace,
        )

    def records(self):
        for i in range(len(self)):
            yield self.record(i)

    def select(self, mask) -> "RecordLog":
        """Sub-log of the rows picked by a boolean mask or index array."""
        opt = {name: None if getattr(self, name) is None else getattr(self, name)[mask]
               for name in ("family", "lam", "cf")}
        return RecordLog(self.labels, self.m[mask], self.s1[mask], self.s2[mask],
                         self.o1[mask], self.o2[mask], self.t_emit[mask],
                         self.t_set1[mask], self.t_set2[mask], **opt)

    def family_name(self, i):
        if self.family is None:
            return ""
        fam = int(self.family[i])
        if fam < 0:
            return "uniform"
        a, b = divmod(fam, len(self.labels))
        return f"{self.labels[a]}/{self.labels[b]}"


def _as_log(records, labels=None) -> RecordLog:
    if isinstance(records, RecordLog):
        return records
    records = list(records)
    if labels is None:
        k = 1 + max((max(r.settings) for r in records), default=2)
        labels = default_labels(max(k, 3))
    return RecordLog.from_records(records, labels)


def default_labels(k):
    return tuple(chr(ord("A") + i) for i in range(k))


@dataclass(frozen=True)
class CountTable:
    """Outcome counts per ordered setting pair (detector-1, detector-2).

    ``counts[(i, j)]`` is the 4-vector N(++), N(+-), N(-+), N(--). Pairs with
    no trials are absent; their frequencies and expectations are ``None``.
    """

    labels: tuple[str, ...]
    M_total: int
    counts: Mapping[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def index(self, label):
        return label if isinstance(label, (int, np.integer)) else self.labels.index(label)

    def _key(self, pair):
        return (self.index(pair[0]), self.index(pair[1]))

    def subtotal(self, pair):
        c = self.counts.get(self._key(pair))
        return 0 if c is None else int(c.sum())

    def count(self, pair, o1=1, o2=1):
        c = self.counts.get(self._key(pair))
        if c is None:
            return 0
        return int(c[CELLS.index((int(o1), int(o2)))])

    def n(self, pair, o1=1, o2=1):
        """Relative frequency n(alpha o1; beta o2), or None without data."""
        total = self.subtotal(pair)
        if total == 0:
            return None
        return self.count(pair, o1, o2) / total

    def P(self, pair):
        """Product-outcome expectation, or None without data."""
        total = self.subtotal(pair)
        if total == 0:
            return None
        c = self.counts[self._key(pair)]
        return float(c[0] - c[1] - c[2] + c[3]) / total

    def pairs(self):
        return sorted(self.counts)

    def to_dict(self):
        out = {"M_total": self.M_total, "labels": list(self.labels), "pairs": {}}
        for key in self.pairs():
            name = f"{self.labels[key[0]]},{self.labels[key[1]]}"
            c = self.counts[key]
            out["pairs"][name] = {
                "counts": {cell: int(v) for cell, v in zip(CELL_NAMES, c)},
                "subtotal": int(c.sum()),
                "n": {cell: self.n(key, *o) for cell, o in zip(CELL_NAMES, CELLS)},
                "P": self.P(key),
            }
        return out

    @classmethod
    def from_dict(cls, data):
        labels = tuple(data["labels"])
        counts = {}
        for name, entry in data["pairs"].items():
            a, b = name.split(",")
            counts[(labels.index(a), labels.index(b))] = np.array(
                [entry["counts"][cell] for cell in CELL_NAMES], dtype=np.int64)
        return cls(labels, int(data["M_total"]), counts)


def tally(records, labels=None) -> CountTable:
    """Group records by setting pair and count the four outcome cells."""
    log = _as_log(records, labels)
    k = len(log.labels)
    if len(log) == 0:
        return CountTable(log.labels, 0, {})
    pair = log.s1 * k + log.s2
    # cell index: ++ -> 0, +- -> 1, -+ -> 2, -- -> 3
    cell = (log.o1 < 0).astype(np.int64) * 2 + (log.o2 < 0).astype(np.int64)
    flat = np.bincount(pair * 4 + cell, minlength=k * k * 4).reshape(k * k, 4)
    counts = {divmod(int(p), k): flat[p].astype(np.int64)
              for p in np.flatnonzero(flat.sum(axis=1))}
    return CountTable(log.labels, len(log), counts)


def write_records_csv(log: RecordLog, path):
    """Write the record log as CSV; hidden traces go to a ``.traces.npz`` sidecar."""
    path = Path(path)
    lines = [",".join(CSV_HEADER)]
    labels = log.labels
    # shortest round-trip repr of each float
    times = zip(log.t_emit.tolist(), log.t_set1.tolist(), log.t_set2.tolist())
    for i, (te, t1, t2) in enumerate(times):
        lines.append(
            f"{int(log.m[i])},{labels[log.s1[i]]},{labels[log.s2[i]]},"
            f"{int(log.o1[i])},{int(log.o2[i])},{te!r},{t1!r},{t2!r},{log.family_name(i)}"
        )
    path.write_text("\n".join(lines) + "\n")
    sidecar = trace_sidecar(path)
    if log.has_traces:
        np.savez(sidecar, labels=np.array(labels), lam=log.lam, cf=log.cf,
                 family=log.family)
    elif sidecar.exists():
        sidecar.unlink()


def trace_sidecar(path):
    path = Path(path)
    return path.with_name(path.name + ".traces.npz")


def read_records_csv(path, labels=None) -> RecordLog:
    path = Path(path)
    sidecar = trace_sidecar(path)
    traces = np.load(sidecar) if sidecar.exists() else None
    if labels is None and traces is not None:
        labels = tuple(str(x) for x in traces["labels"])
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected record header: {header}")
        rows = list(reader)
    if labels is None:
        seen = sorted({r[1] for r in rows} | {r[2] for r in rows})
        labels = tuple(seen)
    labels = tuple(labels)
    index = {name: i for i, name in enumerate(labels)}
    if not rows:
        return RecordLog.empty(labels)
    cols = list(zip(*rows))
    log = RecordLog(
        labels,
        m=np.array(cols[0], dtype=np.int64),
        s1=np.array([index[x] for x in cols[1]], dtype=np.int64),
        s2=np.array([index[x] for x in cols[2]], dtype=np.int64),
        o1=np.array(cols[3], dtype=np.int8),
        o2=np.array(cols[4], dtype=np.int8),
        t_emit=np.array(cols[5], dtype=float),
        t_set1=np.array(cols[6], dtype=float),
        t_set2=np.array(cols[7], dtype=float),
    )
    if traces is not None:
        log.lam = traces["lam"]
        log.cf = traces["cf"]
        log.family = traces["family"]
    return log


def write_summary_json(table: CountTable, path):
    Path(path).write_text(json.dumps(table.to_dict(), indent=2) + "\n")


def records_equal(a: RecordLog, b: RecordLog) -> bool:
    if a.labels != b.labels or len(a) != len(b):
        return False
    for name in ("m", "s1", "s2", "o1", "o2", "t_emit", "t_set1", "t_set2"):
        if not np.array_equal(getattr(a, name), getattr(b, name)):
            return False
    for name in ("family", "lam", "cf"):
        x, y = getattr(a, name), getattr(b, name)
        if (x is None) != (y is None) or (x is not None and not np.array_equal(x, y)):
            return False
    return True


def pair_labels(labels: Iterable[str], pair):
    labels = tuple(labels)
    return f"{labels[pair[0]]},{labels[pair[1]]}"
