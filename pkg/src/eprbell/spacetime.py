"""Causal separation of selection and measurement events.

Geometry is the collinear lab layout: the source sits at the origin and the
detectors (with their setting selectors) at fixed positions on the lab axis.
Photons travel at ``c``. The causal-irrelevance test is the sign of the
interval ``c^2 dt^2 - |dx|^2``: negative means spacelike.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import C_LIGHT

NATURAL = 1.0

# Published figures for the Orsay-type parameters, shown next to computed values.
PUBLISHED = {
    "delayed_choice_deadline": {"parameter": 6.5, "value": 4.44e-8, "unit": "s"},
    "preset_separation": {"parameter": 12000.0, "value": 9.6e12, "unit": "m"},
    "cadence_separation": {"parameter": 0.2, "value": 1.6e8, "unit": "m"},
    "L_max": {"parameter": 12000.0, "value": 2.7e12, "unit": "m"},
    "apparatus_length": {"value": 12.0, "unit": "m"},
    "human_reaction_time": {"value": 0.2, "unit": "s"},
}


@dataclass(frozen=True)
class SpacetimeEvent:
    t: float
    x: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.size < 3:
            x = np.pad(x, (0, 3 - x.size))
        if x.shape != (3,) or not (math.isfinite(self.t) and np.isfinite(x).all()):
            raise ValueError("event coordinates must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", tuple(float(v) for v in x))


def interval(e1: SpacetimeEvent, e2: SpacetimeEvent, c=C_LIGHT) -> float:
    dt = e1.t - e2.t
    dx = np.subtract(e1.x, e2.x)
    return (c * dt) ** 2 - float(dx @ dx)


def is_spacelike(e1, e2, c=C_LIGHT) -> bool:
    return interval(e1, e2, c) < 0


def intervals(t1, x1, t2, x2, c=C_LIGHT):
    """Vectorised interval for arrays of times and (n, 3) or scalar positions."""
    dt = np.asarray(t1, float) - np.asarray(t2, float)
    dx = np.asarray(x1, float) - np.asarray(x2, float)
    d2 = np.sum(np.atleast_2d(dx) ** 2, axis=-1) if dx.ndim else dx ** 2
    return (c * dt) ** 2 - d2


def boost(event: SpacetimeEvent, beta, c=C_LIGHT) -> SpacetimeEvent:
    """Lorentz boost with velocity ``beta * c`` along the x axis."""
    if not -1 < beta < 1:
        raise ValueError("|beta| must be below 1")
    gamma = 1.0 / math.sqrt(1.0 - beta * beta)
    x, y, z = event.x
    t = gamma * (event.t - beta * x / c)
    xp = gamma * (x - beta * c * event.t)
    return SpacetimeEvent(t, (xp, y, z))


def to_natural(event: SpacetimeEvent, c=C_LIGHT) -> SpacetimeEvent:
    """Express time in light-metres so the interval needs no factor of c."""
    return SpacetimeEvent(event.t * c, event.x)


def delayed_choice_deadline(source_detector_distance, c=C_LIGHT) -> float:
    """Longest post-emission delay for a remote setting to stay spacelike
    from the opposite measurement, with detectors at +-x."""
    if not source_detector_distance > 0:
        raise ValueError("distance must be positive")
    return 2.0 * abs(source_detector_distance) / c


def preset_separation_bound(run_duration, c=C_LIGHT) -> float:
    """Detector separation 2|x| needed for selections fixed at the start of a
    run to stay spacelike from measurements until its end."""
    if not run_duration > 0:
        raise ValueError("duration must be positive")
    return c * run_duration


def cadence_separation_bound(cadence, c=C_LIGHT) -> float:
    """Separation needed when sub-selections are renewed every ``cadence`` s."""
    return preset_separation_bound(cadence, c)


def qm_locality_window(t_o, t_f, c=C_LIGHT):
    """(tau_max, L_max): by tau_max three quarters of the data are in, and a
    maximal 25% violation is accountable by selection-sequence contact when
    the apparatus is no longer than L_max."""
    if not t_o < t_f:
        raise ValueError("need t_o < t_f")
    return 0.25 * (3 * t_f + t_o), 0.75 * (t_f - t_o) * c


@dataclass
class GeometryReport:
    delayed_choice_spacelike: bool
    preset_spacelike: bool
    sub_selection_spacelike: bool
    separation: float
    source_detector_distance: float
    run_duration: float
    bounds: dict
    published: dict = field(default_factory=lambda: dict(PUBLISHED))
    fraction_delayed_choice: float = 0.0
    fraction_preset: float = 0.0
    fraction_sub_selection: float = 0.0

    @property
    def verdicts(self):
        return {"delayed_choice": self.delayed_choice_spacelike, "preset": self.preset_spacelike,
                "sub_selection": self.sub_selection_spacelike}

    def to_dict(self):
        return {
            "verdicts": self.verdicts,
            "fraction_spacelike": {"delayed_choice": self.fraction_delayed_choice, "preset": self.fraction_preset,
                                   "sub_selection": self.fraction_sub_selection},
            "separation_m": self.separation,
            "source_detector_distance_m": self.source_detector_distance,
            "run_duration_s": self.run_duration,
            "bounds": self.bounds,
            "published": self.published,
        }

    def table(self):
        """Human-readable summary of verdicts and binding bounds."""
        b = self.bounds
        p = self.published
        rows = [
            ("delayed-choice settings spacelike", str(self.delayed_choice_spacelike)),
            ("preset selections spacelike", str(self.preset_spacelike)),
            ("sub-selections spacelike", str(self.sub_selection_spacelike)),
            ("detector separation [m]", f"{self.separation:.4g}"),
            ("setting deadline after emission [s]",
             f"{b['delayed_choice_deadline_s']:.4g}  (published {p['delayed_choice_deadline']['value']:.3g} at 6.5 m)"),
            ("deadline / human reaction time",
             f"{b['deadline_over_reaction']:.3g}"),
            ("preset separation bound [m]",
             f"{b['preset_separation_bound_m']:.4g}  (published {p['preset_separation']['value']:.3g} for 12000 s)"),
            ("sub-selection separation bound [m]",
             f"{b['cadence_separation_bound_m']:.4g}  (published {p['cadence_separation']['value']:.3g} for 0.2 s)"),
            ("tau_max [s]", f"{b['tau_max_s']:.6g}"),
            ("L_max [m]", f"{b['L_max_m']:.4g}  (published {p['L_max']['value']:.3g} for 12000 s)"),
            ("apparatus within L_max by (orders of magnitude)",
             f"{b['L_max_orders_of_magnitude']:.2f}"),
        ]
        w = max(len(r[0]) for r in rows)
        return "\n".join(f"{k.ljust(w)}  {v}" for k, v in rows)


def audit_geometry(config, t_emit=None, schedule=None) -> GeometryReport:
    """Check the three locality conditions for every trial.

    delayed_choice: each detector's setting event is spacelike from the
        opposite particle's measurement.
    preset: the selection program fixed at ``t_o`` at each detector is
        spacelike from every opposite measurement of the run.
    sub_selection: the sub-selection in force at each measurement (renewed
        every ``cadence`` seconds from ``t_o``) is spacelike from every
        opposite measurement its window could contain.
    """
    from .engine import emission_times, generate_schedule

    g = getattr(config, "geometry", None)
    if g is None or g.t_o is None or g.t_f is None:
        raise ValueError("config lacks geometry or run timing")
    if t_emit is None:
        t_emit = emission_times(config)
    if schedule is None:
        schedule = generate_schedule(config, t_emit)
    pos = [g.position(0), g.position(1)]
    flight = [g.flight_time(0), g.flight_time(1)]
    t_meas = [t_emit + flight[0], t_emit + flight[1]]

    def spacelike(t_sel, k):
        # selection at detector k against the measurement at the other detector
        other = 1 - k
        return intervals(t_sel, pos[k], t_meas[other], pos[other]) < 0

    ok_delayed = spacelike(schedule.decision_times[:, 1], 1) & spacelike(schedule.decision_times[:, 0], 0)
    preset = np.full(len(t_emit), float(g.t_o))
    ok_preset = spacelike(preset, 0) & spacelike(preset, 1)
    # a renewal governs every measurement in its window, so test the window's
    # latest possible opposite measurement rather than the one that happened
    ok_sub = np.ones(len(t_emit), dtype=bool)
    for k in (0, 1):
        other = 1 - k
        renewal = g.t_o + np.floor((t_meas[other] - g.t_o) / g.cadence) * g.cadence
        latest = np.maximum(np.minimum(renewal + g.cadence, g.t_f + flight[other]), t_meas[other])
        ok_sub &= intervals(renewal, pos[k], latest, pos[other]) < 0

    separation = float(np.linalg.norm(pos[1] - pos[0]))
    distance = float(max(np.linalg.norm(pos[0]), np.linalg.norm(pos[1])))
    duration = g.t_f - g.t_o
    tau, L_max = qm_locality_window(g.t_o, g.t_f)
    deadline = delayed_choice_deadline(distance)
    bounds = {
        "delayed_choice_deadline_s": deadline,
        "deadline_over_reaction": deadline / PUBLISHED["human_reaction_time"]["value"],
        "preset_separation_bound_m": preset_separation_bound(duration),
        "cadence_s": g.cadence,
        "cadence_separation_bound_m": cadence_separation_bound(g.cadence),
        "tau_max_s": tau,
        "L_max_m": L_max,
        "qm_locality_condition_met": separation <= L_max,
        "L_max_orders_of_magnitude": math.log10(L_max / separation),
        "reference_values": {
            "delayed_choice_deadline_at_6.5m_s": delayed_choice_deadline(6.5),
            "preset_separation_for_12000s_m": preset_separation_bound(12000.0),
            "cadence_separation_for_0.2s_m": cadence_separation_bound(0.2),
            "L_max_for_12000s_m": qm_locality_window(0.0, 12000.0)[1],
        },
    }
    return GeometryReport(
        delayed_choice_spacelike=bool(ok_delayed.all()), preset_spacelike=bool(ok_preset.all()),
        sub_selection_spacelike=bool(ok_sub.all()), separation=separation,
        source_detector_distance=distance, run_duration=duration, bounds=bounds,
        fraction_delayed_choice=float(ok_delayed.mean()), fraction_preset=float(ok_preset.mean()),
        fraction_sub_selection=float(ok_sub.mean()),
    )
