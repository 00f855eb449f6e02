"""Local hidden-variable sources.

Every model here uses the same local outcome rule: detector-1 reads ``Up`` at
direction ``alpha`` iff ``alpha . lam >= 0`` and detector-2 reads the
opposite (singlet condition). Models differ only in how ``lam`` is drawn:

* :class:`DeterministicUniform` draws ``lam`` uniformly on the circle/sphere.
* :class:`StochasticIndependent` draws ``lam`` from a user density that does
  not depend on the detector settings.
* :class:`SelectionCorrelated` is told the upcoming setting pair and draws
  ``lam`` from a pair-specific density, which is enough to reproduce any
  per-pair outcome statistics that respect the singlet condition.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from .core import (
    CELLS, TWO_PI, ConfigurationError, Direction, HiddenTrace, Outcome,
    relative_angle,
)
from .singlet import singlet_joint

DENSITY_KINDS = ("uniform", "point", "von_mises", "hemisphere", "histogram")


def _unit(v):
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if v.shape != (3,) or not np.isfinite(norm) or norm == 0:
        raise ConfigurationError(f"not a usable 3-vector: {v!r}")
    return v / norm


def uniform_sphere(n, rng):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class Density:
    """Setting-independent density over the hidden variable.

    Coplanar models use the angle ``phi`` of ``lam`` on the unit circle;
    full-sphere models use unit 3-vectors. JSON form::

        {"kind": "von_mises", "parameters": {"mu": 0.3, "kappa": 2.0}}
    """

    kind: str = "uniform"
    parameters: Mapping = field(default_factory=dict)

    def __post_init__(self):
        p = dict(self.parameters)
        if self.kind not in DENSITY_KINDS:
            raise ConfigurationError(f"unknown density kind {self.kind!r}")
        if self.kind == "point":
            if ("angle" in p) == ("vector" in p):
                raise ConfigurationError("point density needs exactly one of angle, vector")
        elif self.kind == "von_mises":
            kappa = p.get("kappa")
            if kappa is None or not math.isfinite(kappa) or kappa < 0:
                raise ConfigurationError("von_mises needs a finite kappa >= 0")
        elif self.kind == "hemisphere":
            w = p.get("weight")
            if w is None or not 0.0 <= w <= 1.0:
                raise ConfigurationError("hemisphere weight must lie in [0, 1]")
            if "axis" not in p:
                raise ConfigurationError("hemisphere density needs an axis")
        elif self.kind == "histogram":
            w = np.asarray(p.get("weights", []), dtype=float)
            if w.ndim != 1 or w.size == 0 or np.any(w < 0) or not np.isfinite(w).all() \
                    or w.sum() <= 0:
                raise ConfigurationError("histogram weights must be nonnegative "
                                         "with a positive sum")

    @classmethod
    def from_dict(cls, data):
        return cls(data.get("kind", "uniform"), dict(data.get("parameters", {})))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_dict(self):
        return {"kind": self.kind, "parameters": dict(self.parameters)}

    def sample(self, n, rng, mode="coplanar"):
        """Draw ``n`` hidden variables as unit 3-vectors."""
        p = self.parameters
        if mode == "coplanar":
            phi = self._sample_angle(n, rng)
            return np.column_stack([np.cos(phi), np.sin(phi), np.zeros(n)])
        if self.kind == "uniform":
            return uniform_sphere(n, rng)
        if self.kind == "point":
            v = _axis_vector(p.get("vector", p.get("angle")))
            return np.tile(v, (n, 1))
        if self.kind == "von_mises":
            mu = _axis_vector(p.get("mu", (0.0, 0.0, 1.0)))
            if p["kappa"] == 0:
                return uniform_sphere(n, rng)
            return stats.vonmises_fisher(mu, p["kappa"]).rvs(n, random_state=rng)
        if self.kind == "hemisphere":
            axis = _axis_vector(p["axis"])
            v = uniform_sphere(n, rng)
            want_pos = rng.random(n) < p["weight"]
            proj = v @ axis
            flip = (proj >= 0) != want_pos
            v[flip] -= 2 * proj[flip, None] * axis
            return v
        raise ConfigurationError(f"density {self.kind!r} is only defined on the circle")

    def _sample_angle(self, n, rng):
        p = self.parameters
        if self.kind == "uniform":
            return rng.random(n) * TWO_PI
        if self.kind == "point":
            if "angle" not in p:
                raise ConfigurationError("coplanar point density needs an angle")
            return np.full(n, float(p["angle"]))
        if self.kind == "von_mises":
            return rng.vonmises(float(p.get("mu", 0.0)), float(p["kappa"]), n)
        if self.kind == "hemisphere":
            axis = float(p["axis"])
            side = np.where(rng.random(n) < p["weight"], 0.0, math.pi)
            return axis + side + (rng.random(n) - 0.5) * math.pi
        w = np.asarray(p["weights"], dtype=float)
        bins = rng.choice(w.size, size=n, p=w / w.sum())
        return (bins + rng.random(n)) * (TWO_PI / w.size)


def _axis_vector(spec):
    if np.ndim(spec) == 0:
        a = float(spec)
        return np.array([math.cos(a), math.sin(a), 0.0])
    return _unit(spec)


class LocalHvModel:
    """Base class: fixed local sign rule on a list of directions."""

    kind = "local"
    setting_dependent = False

    def __init__(self, directions: Sequence[Direction]):
        self.directions = tuple(directions)
        if len(self.directions) < 1:
            raise ConfigurationError("need at least one direction")
        coplanar = all(d.mode == "coplanar" for d in self.directions)
        self.mode = "coplanar" if coplanar else "full-sphere"
        self._axes = np.array([d.as_vector() for d in self.directions])

    @staticmethod
    def outcome1(direction: Direction, lam) -> Outcome:
        return Outcome.UP if float(np.dot(direction.as_vector(), lam)) >= 0 else Outcome.DOWN

    @classmethod
    def outcome2(cls, direction: Direction, lam) -> Outcome:
        return -cls.outcome1(direction, lam)

    def counterfactuals(self, lam):
        """(n, K) int8 detector-1 outcomes of ``lam`` rows at every direction."""
        return np.where(np.asarray(lam) @ self._axes.T >= 0, 1, -1).astype(np.int8)

    def _trace(self, lam, cf, family=None):
        if self.mode == "coplanar":
            stored = (float(math.atan2(lam[1], lam[0]) % TWO_PI),)
        else:
            stored = tuple(float(x) for x in lam)
        return HiddenTrace(stored, tuple(Outcome(int(x)) for x in cf), family)

    def stored_lambda(self, lam):
        """Hidden variables in log form: angle column (coplanar) or 3-vectors."""
        if self.mode == "coplanar":
            return (np.arctan2(lam[:, 1], lam[:, 0]) % TWO_PI)[:, None]
        return lam

    def draw(self, n, rng):
        raise NotImplementedError

    def emit_batch(self, n, rng):
        lam = self.draw(n, rng)
        return lam, self.counterfactuals(lam)

    def emit(self, rng) -> HiddenTrace:
        lam, cf = self.emit_batch(1, rng)
        return self._trace(lam[0], cf[0])

    def to_dict(self):
        return {"kind": self.kind}


class DeterministicUniform(LocalHvModel):
    kind = "deterministic_uniform"

    def draw(self, n, rng):
        return Density().sample(n, rng, self.mode)


class StochasticIndependent(LocalHvModel):
    kind = "stochastic_independent"

    def __init__(self, directions, density: Density):
        super().__init__(directions)
        if isinstance(density, Mapping):
            density = Density.from_dict(density)
        self.density = density
        if self.mode == "coplanar" and density.kind == "point" \
                and "angle" not in density.parameters:
            raise ConfigurationError("coplanar point density needs an angle")

    def draw(self, n, rng):
        return self.density.sample(n, rng, self.mode)

    def to_dict(self):
        return {"kind": self.kind, "density": self.density.to_dict()}


def qm_target(theta):
    s = singlet_joint(theta)
    return (s.p_uu, s.p_ud, s.p_du, s.p_dd)


def uniform_target(theta):
    """Per-pair cell probabilities of the uniform sign model at angle theta."""
    same = theta / TWO_PI
    return (same, 0.5 - same, 0.5 - same, same)


TARGETS = {"qm": qm_target, "uniform": uniform_target}


class InfeasibleTarget(ConfigurationError):
    pass


class SelectionCorrelated(LocalHvModel):
    """Source whose hidden-variable density depends on the upcoming setting pair.

    For the pair (alpha, beta) an outcome cell is drawn from the target
    distribution and ``lam`` is then drawn uniformly from the region on which
    the fixed local rules produce exactly that cell. ``target`` is ``"qm"``,
    ``"uniform"``, a callable ``theta -> (p_uu, p_ud, p_du, p_dd)`` or a
    mapping from index pairs to such 4-tuples.
    """

    kind = "selection_correlated"
    setting_dependent = True

    def __init__(self, directions, target="qm"):
        super().__init__(directions)
        self.target_spec = target
        self._probs = {}
        k = len(self.directions)
        for i in range(k):
            for j in range(k):
                self._probs[(i, j)] = self._validated(i, j, self._target_for(i, j))
        if self.mode == "coplanar":
            self._build_arcs()

    def _target_for(self, i, j):
        t = self.target_spec
        theta = relative_angle(self.directions[i], self.directions[j])
        if isinstance(t, str):
            if t not in TARGETS:
                raise ConfigurationError(f"unknown target {t!r}")
            return TARGETS[t](theta)
        if callable(t):
            return t(theta)
        if (i, j) in t:
            return t[(i, j)]
        return qm_target(theta)

    def _validated(self, i, j, probs):
        p = np.asarray(probs, dtype=float)
        if p.shape != (4,) or np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1) > 1e-9:
            raise InfeasibleTarget(f"target for pair {(i, j)} is not a distribution: {probs}")
        theta = relative_angle(self.directions[i], self.directions[j])
        for (o1, o2), prob in zip(CELLS, p):
            if prob > 0 and not self._cell_possible(theta, o1, o2):
                raise InfeasibleTarget(
                    f"pair {(i, j)} at angle {theta:.6g}: cell ({o1:+d},{o2:+d}) "
                    f"has target {prob:.6g} but no hidden variable yields it "
                    "under the singlet condition")
        return np.cumsum(p / p.sum())

    @staticmethod
    def _cell_possible(theta, o1, o2):
        # detector-1 must read o1 at alpha and -o2 at beta
        if theta == 0.0:
            return o1 == -o2
        if theta == math.pi:
            return o1 == o2
        return True

    def _build_arcs(self):
        angles = np.array([d.angle for d in self.directions])
        bounds = np.unique(np.concatenate([angles + math.pi / 2, angles - math.pi / 2])
                           % TWO_PI)
        starts = bounds
        lengths = np.diff(np.append(bounds, bounds[0] + TWO_PI))
        keep = lengths > 1e-15
        self._arc_start, self._arc_len = starts[keep], lengths[keep]
        mids = self._arc_start + self._arc_len / 2
        self._arc_cf = self.counterfactuals(
            np.column_stack([np.cos(mids), np.sin(mids), np.zeros_like(mids)]))

    def cell_probabilities(self, pair):
        c = self._probs[tuple(pair)]
        return np.diff(np.concatenate([[0.0], c]))

    def emit(self, settings, rng) -> HiddenTrace:
        s1 = np.array([settings[0]])
        s2 = np.array([settings[1]])
        lam, cf = self.emit_batch(s1, s2, rng)
        return self._trace(lam[0], cf[0], (int(settings[0]), int(settings[1])))

    def emit_batch(self, s1, s2, rng):
        s1 = np.asarray(s1)
        s2 = np.asarray(s2)
        n = len(s1)
        u_cell = rng.random(n)
        u_region = rng.random(n)
        u_pos = rng.random(n)
        lam = np.empty((n, 3))
        k = len(self.directions)
        for key in np.unique(s1 * k + s2):
            i, j = divmod(int(key), k)
            rows = np.flatnonzero((s1 == i) & (s2 == j))
            cell = np.searchsorted(self._probs[(i, j)], u_cell[rows], side="right")
            cell = np.minimum(cell, 3)
            for c in np.unique(cell):
                sel = rows[cell == c]
                o1, o2 = CELLS[int(c)]
                lam[sel] = self._region_sample(i, j, o1, o2, u_region[sel], u_pos[sel], rng)
        return lam, self.counterfactuals(lam)

    def _region_sample(self, i, j, o1, o2, u_region, u_pos, rng):
        if self.mode == "coplanar":
            ok = (self._arc_cf[:, i] == o1) & (self._arc_cf[:, j] == -o2)
            starts, lengths = self._arc_start[ok], self._arc_len[ok]
            cum = np.cumsum(lengths) / lengths.sum()
            arc = np.minimum(np.searchsorted(cum, u_region, side="right"), len(cum) - 1)
            # stay clear of arc endpoints where the sign rule is ambiguous
            frac = 0.5 + (u_pos - 0.5) * (1 - 1e-9)
            phi = starts[arc] + lengths[arc] * frac
            return np.column_stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)])
        out = np.empty((len(u_region), 3))
        todo = np.arange(len(u_region))
        for _ in range(10_000):
            if todo.size == 0:
                return out
            v = uniform_sphere(todo.size, rng)
            cf = self.counterfactuals(v)
            hit = (cf[:, i] == o1) & (cf[:, j] == -o2)
            out[todo[hit]] = v[hit]
            todo = todo[~hit]
        raise RuntimeError("rejection sampling did not converge")

    def to_dict(self):
        t = self.target_spec
        return {"kind": self.kind, "target": t if isinstance(t, str) else "custom"}


def model_from_dict(directions, data) -> LocalHvModel:
    kind = data.get("kind", "deterministic_uniform")
    if kind == "deterministic_uniform":
        return DeterministicUniform(directions)
    if kind == "stochastic_independent":
        return StochasticIndependent(directions, Density.from_dict(data.get("density", {})))
    if kind == "selection_correlated":
        return SelectionCorrelated(directions, data.get("target", "qm"))
    raise ConfigurationError(f"unknown hidden-variable model {kind!r}")


def deterministic_emit(model: DeterministicUniform, rng) -> HiddenTrace:
    return model.emit(rng)


def stochastic_emit(model: StochasticIndependent, rng) -> HiddenTrace:
    return model.emit(rng)


def conspiratorial_emit(model: SelectionCorrelated, settings, rng) -> HiddenTrace:
    """One trace for the announced setting pair ``settings``."""
    return model.emit(settings, rng)
