"""Experiment configuration, selection schedules and the run driver.

Randomness is split into independent streams derived from the run seed with
:class:`numpy.random.SeedSequence` spawn keys: one for the schedule, one for
Poisson emission times, and one per fixed-size block of trials for the
source. Block boundaries do not depend on the worker count, so a run is
bit-identical whether it uses one thread or many.
"""
from __future__ import annotations

import configparser
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    C_LIGHT, ConfigurationError, Direction, RecordLog, default_labels,
    relative_angle, write_records_csv,
)
from .hidden import LocalHvModel, model_from_dict
from .singlet import singlet_sample_many

STRATEGIES = ("iid", "periodic", "preset", "delayed")
BLOCK_SIZE = 1 << 16

_SCHEDULE_STREAM, _EMISSION_STREAM, _SOURCE_STREAM = 0, 1, 2


@dataclass(frozen=True)
class ScheduleSpec:
    """How setting pairs are assigned to trials.

    ``pairs`` are the candidates for ``iid`` and ``delayed`` (drawn uniformly);
    ``pattern`` is cycled by ``periodic`` and listed trial by trial by
    ``preset`` (a preset list shorter than the run is repeated).
    """

    strategy: str = "iid"
    pairs: tuple[tuple[str, str], ...] = (("A", "B"), ("B", "C"), ("A", "C"))
    pattern: tuple[tuple[str, str], ...] = ()
    latency: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown schedule strategy {self.strategy!r}")
        if self.strategy in ("periodic", "preset") and not self.pattern:
            raise ConfigurationError(f"{self.strategy} schedule needs a nonempty pattern")
        if self.strategy in ("iid", "delayed") and not self.pairs:
            raise ConfigurationError("random schedule needs candidate pairs")
        if self.latency < 0:
            raise ConfigurationError("latency must be nonnegative")


@dataclass(frozen=True)
class Geometry:
    """Collinear layout: source at the origin, detectors on the lab axis.

    Positions may be scalars (metres along the axis) or 3-vectors.
    """

    detector1: float | tuple = -6.5
    detector2: float | tuple = 6.5
    t_o: float = 0.0
    t_f: float = 1.0
    rate: float | None = None
    poisson: bool = False
    cadence: float = 0.2

    def __post_init__(self):
        if not self.t_o < self.t_f:
            raise ConfigurationError("need t_o < t_f")
        for name in ("detector1", "detector2"):
            if np.linalg.norm(np.atleast_1d(getattr(self, name))) == 0:
                raise ConfigurationError(f"{name} coincides with the source")
        if np.array_equal(np.atleast_1d(self.detector1), np.atleast_1d(self.detector2)):
            raise ConfigurationError("detectors coincide")
        if self.rate is not None and self.rate <= 0:
            raise ConfigurationError("emission rate must be positive")
        if self.cadence <= 0:
            raise ConfigurationError("cadence must be positive")

    def position(self, k):
        x = np.atleast_1d(np.asarray(self.detector1 if k == 0 else self.detector2, float))
        return np.pad(x, (0, 3 - x.size)) if x.size < 3 else x

    def flight_time(self, k):
        return float(np.linalg.norm(self.position(k))) / C_LIGHT


@dataclass(frozen=True)
class ExperimentConfig:
    directions: tuple[Direction, ...]
    M_total: int
    source: dict | LocalHvModel = field(default_factory=lambda: {"kind": "qm"})
    schedule: ScheduleSpec = ScheduleSpec()
    geometry: Geometry = Geometry()
    rng_seed: int = 0
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "directions", tuple(self.directions))
        if self.labels is None:
            object.__setattr__(self, "labels", default_labels(len(self.directions)))
        if len(self.labels) != len(self.directions):
            raise ConfigurationError("one label per direction")
        if self.M_total < 1:
            raise ConfigurationError("M_total must be at least 1")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigurationError("rng_seed must be a 64-bit unsigned integer")
        s = self.schedule
        used = s.pairs if s.strategy in ("iid", "delayed") else s.pattern
        for pair in used:
            for name in pair:
                if name not in self.labels:
                    raise ConfigurationError(f"schedule references unknown label {name!r}")

    @property
    def rate(self):
        g = self.geometry
        return g.rate if g.rate is not None else self.M_total / (g.t_f - g.t_o)

    def stream(self, *key):
        return np.random.default_rng(np.random.SeedSequence(self.rng_seed, spawn_key=key))

    def build_source(self):
        if isinstance(self.source, LocalHvModel):
            return self.source
        if self.source.get("kind", "qm") == "qm":
            return None
        return model_from_dict(self.directions, self.source)

    def to_dict(self):
        s = self.schedule
        src = self.source.to_dict() if isinstance(self.source, LocalHvModel) else self.source
        return {
            "labels": list(self.labels),
            "directions": [d.angle if d.angle is not None else list(d.vector)
                           for d in self.directions],
            "M_total": self.M_total,
            "source": src,
            "schedule": {"strategy": s.strategy, "pairs": [list(p) for p in s.pairs],
                         "pattern": [list(p) for p in s.pattern], "latency": s.latency,
                         "seed": s.seed},
            "geometry": {k: getattr(self.geometry, k) for k in
                         ("detector1", "detector2", "t_o", "t_f", "rate", "poisson",
                          "cadence")},
            "rng_seed": self.rng_seed,
        }


@dataclass(frozen=True)
class SelectionSchedule:
    strategy: str
    pairs: np.ndarray           # (M, 2) setting indices per trial
    decision_times: np.ndarray  # (M, 2) seconds, one per detector

    def __len__(self):
        return len(self.pairs)

    def assignment(self, m):
        """Setting pair of trial ``m`` (1-based)."""
        return tuple(int(x) for x in self.pairs[m - 1])

    def decision_time(self, m):
        return tuple(float(x) for x in self.decision_times[m - 1])


@dataclass
class RunResult:
    log: RecordLog
    config: ExperimentConfig
    wallclock: dict


def emission_times(config: ExperimentConfig):
    g = config.geometry
    M = config.M_total
    if g.poisson:
        # a Poisson process conditioned on M events in the run is M sorted uniforms
        u = np.sort(config.stream(_EMISSION_STREAM).random(M))
        return g.t_o + u * (g.t_f - g.t_o)
    return g.t_o + np.arange(M) / config.rate


def generate_schedule(config: ExperimentConfig, t_emit=None) -> SelectionSchedule:
    spec = config.schedule
    index = {name: i for i, name in enumerate(config.labels)}
    M = config.M_total
    to_idx = lambda pairs: np.array([[index[a], index[b]] for a, b in pairs], dtype=np.int64)
    if spec.strategy in ("iid", "delayed"):
        seed = config.rng_seed if spec.seed is None else spec.seed
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_SCHEDULE_STREAM,)))
        cand = to_idx(spec.pairs)
        pairs = cand[rng.integers(0, len(cand), M)]
    else:
        pattern = to_idx(spec.pattern)
        pairs = pattern[np.arange(M) % len(pattern)]
    g = config.geometry
    if spec.strategy == "delayed":
        if t_emit is None:
            t_emit = emission_times(config)
        times = np.column_stack([t_emit + g.flight_time(k) - spec.latency for k in (0, 1)])
    else:
        # the selection program is fixed before the run starts
        times = np.full((M, 2), float(g.t_o))
    return SelectionSchedule(spec.strategy, pairs, times)


def _angle_matrix(directions):
    k = len(directions)
    return np.array([[relative_angle(directions[i], directions[j]) for j in range(k)]
                     for i in range(k)])


def _run_block(config, source, angles, s1, s2, block):
    rng = config.stream(_SOURCE_STREAM, block)
    n = len(s1)
    if source is None:
        o1, o2 = singlet_sample_many(angles[s1, s2], rng)
        return o1, o2, None, None, None
    k = len(config.directions)
    if source.setting_dependent:
        lam, cf = source.emit_batch(s1, s2, rng)
        family = s1 * k + s2
    else:
        lam, cf = source.emit_batch(n, rng)
        family = np.full(n, -1, dtype=np.int64)
    rows = np.arange(n)
    return cf[rows, s1], -cf[rows, s2], source.stored_lambda(lam), cf, family


def run(config: ExperimentConfig, workers: int = 1, out=None,
        block_size: int = BLOCK_SIZE) -> RunResult:
    """Simulate ``config.M_total`` trials.

    The source only sees the upcoming setting pair when it is
    selection-correlated. With ``out`` given, the records completed before a
    source error are written there before the error propagates.
    """
    started = time.perf_counter()
    source = config.build_source()
    t_emit = emission_times(config)
    schedule = generate_schedule(config, t_emit)
    angles = _angle_matrix(config.directions)
    M = config.M_total
    s1, s2 = schedule.pairs[:, 0], schedule.pairs[:, 1]
    bounds = [(b, lo, min(lo + block_size, M))
              for b, lo in enumerate(range(0, M, block_size))]

    def job(item):
        b, lo, hi = item
        return _run_block(config, source, angles, s1[lo:hi], s2[lo:hi], b)

    parts = []
    error = None
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(job, item) for item in bounds]
        for fut in futures:
            try:
                parts.append(fut.result())
            except Exception as exc:  # keep completed prefix for the partial log
                error = exc
                break
    done = bounds[len(parts) - 1][2] if parts else 0

    def cat(i):
        if not parts or parts[0][i] is None:
            return None
        return np.concatenate([p[i] for p in parts])

    empty8 = np.zeros(0, dtype=np.int8)
    log = RecordLog(
        config.labels,
        m=np.arange(1, done + 1, dtype=np.int64),
        s1=s1[:done].copy(), s2=s2[:done].copy(),
        o1=cat(0) if parts else empty8, o2=cat(1) if parts else empty8,
        t_emit=t_emit[:done].copy(),
        t_set1=schedule.decision_times[:done, 0].copy(),
        t_set2=schedule.decision_times[:done, 1].copy(),
        lam=cat(2), cf=cat(3), family=cat(4),
    )
    if error is not None:
        if out is not None:
            write_records_csv(log, out)
        raise error
    wall = {"seconds": time.perf_counter() - started, "workers": workers,
            "blocks": len(bounds)}
    return RunResult(log, config, wall)


def _parse_pairs(text):
    pairs = []
    for chunk in text.replace(";", ",").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.replace(":", " ").split()
        if len(parts) != 2:
            raise ConfigurationError(f"cannot read setting pair {chunk!r}")
        pairs.append((parts[0], parts[1]))
    return tuple(pairs)


def _parse_position(text):
    values = [float(x) for x in text.replace(",", " ").split()]
    return values[0] if len(values) == 1 else tuple(values)


def load_config(path) -> ExperimentConfig:
    """Read an INI-style experiment description (see README for the keys)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    if not cp.read(path):
        raise ConfigurationError(f"cannot read config {path}")
    return config_from_parser(cp)


def loads_config(text) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(text)
    return config_from_parser(cp)


def config_from_parser(cp) -> ExperimentConfig:
    exp = cp["experiment"] if cp.has_section("experiment") else {}
    if not cp.has_section("directions"):
        raise ConfigurationError("config needs a [directions] section")
    dsec = dict(cp["directions"])
    unit = dsec.pop("angle_unit", "degrees").strip().lower()
    if unit not in ("degrees", "radians"):
        raise ConfigurationError("angle_unit must be degrees or radians")
    labels, directions = [], []
    for label, value in dsec.items():
        comps = [float(x) for x in value.replace(",", " ").split()]
        if len(comps) == 1:
            a = comps[0]
            directions.append(Direction.coplanar(math.radians(a) if unit == "degrees" else a))
        elif len(comps) == 3:
            directions.append(Direction.sphere(comps))
        else:
            raise ConfigurationError(f"direction {label} needs an angle or a 3-vector")
        labels.append(label)

    kind = exp.get("source", "qm").strip()
    source = {"kind": kind}
    if kind == "stochastic_independent":
        source["density"] = json.loads(exp.get("density", '{"kind": "uniform"}'))
    elif kind == "selection_correlated":
        source["target"] = exp.get("target", "qm").strip()

    ssec = cp["schedule"] if cp.has_section("schedule") else {}
    sched_kwargs = {"strategy": ssec.get("strategy", "iid").strip()}
    if "pairs" in ssec:
        sched_kwargs["pairs"] = _parse_pairs(ssec["pairs"])
    elif len(labels) >= 3:
        a, b, c = labels[:3]
        sched_kwargs["pairs"] = ((a, b), (b, c), (a, c))
    if "pattern" in ssec:
        sched_kwargs["pattern"] = _parse_pairs(ssec["pattern"])
    if "latency" in ssec:
        sched_kwargs["latency"] = float(ssec["latency"])
    if "seed" in ssec:
        sched_kwargs["seed"] = int(ssec["seed"])

    gsec = cp["geometry"] if cp.has_section("geometry") else {}
    geo_kwargs = {}
    for key in ("detector1", "detector2"):
        if key in gsec:
            geo_kwargs[key] = _parse_position(gsec[key])
    for key in ("t_o", "t_f", "rate", "cadence"):
        if key in gsec:
            geo_kwargs[key] = float(gsec[key])
    if "poisson" in gsec:
        geo_kwargs["poisson"] = gsec["poisson"].strip().lower() in ("1", "true", "yes", "on")

    return ExperimentConfig(
        directions=tuple(directions),
        labels=tuple(labels),
        M_total=int(float(exp.get("trials", "1000"))),
        source=source,
        schedule=ScheduleSpec(**sched_kwargs),
        geometry=Geometry(**geo_kwargs),
        rng_seed=int(exp.get("seed", "0")),
    )


def with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(config, rng_seed=seed)
