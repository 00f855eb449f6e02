import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from eprbell import (
    C_LIGHT, Geometry, ScheduleSpec, SpacetimeEvent, audit_geometry, delayed_choice_deadline,
    interval, is_spacelike, preset_separation_bound, qm_locality_window,
)
from eprbell.spacetime import PUBLISHED, boost, cadence_separation_bound, to_natural

from conftest import make_config


def test_interval_examples():
    e = SpacetimeEvent(1.0, (2.0, 0.0, 0.0))
    assert interval(e, e) == 0 and not is_spacelike(e, e)
    a, b = SpacetimeEvent(0.0, (0.0,)), SpacetimeEvent(0.0, (1.0,))
    assert interval(a, b) == pytest.approx(-1.0) and is_spacelike(a, b)
    c = SpacetimeEvent(1.0, (C_LIGHT,))
    assert interval(a, c) == 0 and not is_spacelike(a, c)


def test_event_validation():
    with pytest.raises(ValueError):
        SpacetimeEvent(math.nan)
    assert SpacetimeEvent(0.0, 3.0).x == (3.0, 0.0, 0.0)


coord = st.floats(-1e3, 1e3, allow_nan=False)
events = st.builds(lambda t, x, y, z: SpacetimeEvent(t * 1e-6, (x, y, z)), coord, coord,
                   coord, coord)


@given(events, events)
def test_spacelike_symmetric(e1, e2):
    assert is_spacelike(e1, e2) == is_spacelike(e2, e1)
    assert interval(e1, e2) == interval(e2, e1)


@settings(max_examples=300)
@given(events, events, st.floats(-0.99, 0.99))
def test_boost_invariance(e1, e2, beta):
    s = interval(e1, e2)
    s_boosted = interval(boost(e1, beta), boost(e2, beta))
    scale = (C_LIGHT * (e1.t - e2.t)) ** 2 + float(np.sum(np.subtract(e1.x, e2.x) ** 2))
    assume(abs(s) > 1e-6 * scale)
    assert s_boosted == pytest.approx(s, rel=1e-9, abs=1e-9 * scale)
    assert (s_boosted < 0) == (s < 0)


def test_boost_rejects_superluminal():
    with pytest.raises(ValueError):
        boost(SpacetimeEvent(0.0), 1.0)


@given(events, events)
def test_natural_units_agree(e1, e2):
    si = interval(e1, e2)
    nat = interval(to_natural(e1), to_natural(e2), c=1.0)
    assert nat == pytest.approx(si, rel=1e-9, abs=1e-6)


def test_deadline():
    assert delayed_choice_deadline(6.5) == pytest.approx(4.336e-8, rel=1e-3)
    assert delayed_choice_deadline(C_LIGHT / 2) == pytest.approx(1.0)
    ratio = delayed_choice_deadline(6.5) / PUBLISHED["human_reaction_time"]["value"]
    assert ratio == pytest.approx(2.2e-7, rel=0.02)
    with pytest.raises(ValueError):
        delayed_choice_deadline(0)


def test_preset_bound():
    assert preset_separation_bound(12000) == pytest.approx(3.598e12, rel=1e-3)
    assert preset_separation_bound(0.2) == pytest.approx(5.996e7, rel=1e-3)
    assert preset_separation_bound(1) == pytest.approx(2.998e8, rel=1e-3)
    assert cadence_separation_bound(0.2) == preset_separation_bound(0.2)
    with pytest.raises(ValueError):
        preset_separation_bound(-1)


def test_locality_window():
    tau, L = qm_locality_window(0, 12000)
    assert L == pytest.approx(2.698e12, rel=1e-3)
    assert tau == 9000
    assert qm_locality_window(10 - 4 / 3, 10)[1] == pytest.approx(C_LIGHT)
    assert math.log10(L / 12) == pytest.approx(11.35, abs=0.01)
    with pytest.raises(ValueError):
        qm_locality_window(1, 1)


def orsay(trials=200, **kw):
    g = dict(detector1=-6.5, detector2=6.5, t_o=0.0, t_f=12000.0)
    g.update(kw.pop("geometry", {}))
    return make_config(trials=trials, geometry=Geometry(**g), **kw)


def test_orsay_like_audit():
    report = audit_geometry(orsay(schedule=ScheduleSpec("preset", pattern=(("A", "B"),))))
    assert not report.delayed_choice_spacelike and not report.preset_spacelike
    b = report.bounds
    assert b["preset_separation_bound_m"] == pytest.approx(3.598e12, rel=1e-3)
    assert b["delayed_choice_deadline_s"] == pytest.approx(4.336e-8, rel=1e-3)
    assert b["qm_locality_condition_met"]
    d = report.to_dict()
    assert d["published"]["delayed_choice_deadline"]["value"] == 4.44e-8
    assert "published" in report.table()


def test_sub_selection_cadence():
    # emissions spread through each 0.2 s window reach measurements the renewal cannot
    report = audit_geometry(orsay(trials=5000, geometry=dict(poisson=True)))
    assert not report.sub_selection_spacelike and report.fraction_sub_selection < 0.01
    far = audit_geometry(orsay(trials=5000, geometry=dict(
        poisson=True, detector1=-1e8, detector2=1e8)))
    assert far.sub_selection_spacelike


def test_far_detectors_make_preset_spacelike():
    report = audit_geometry(orsay(geometry=dict(detector1=-1e13, detector2=1e13)))
    assert report.preset_spacelike


def test_delayed_choice_within_deadline():
    x = 6.5
    geometry = dict(detector1=-x, detector2=x, t_o=0.0, t_f=1e-3)
    ok = audit_geometry(orsay(geometry=geometry, schedule=ScheduleSpec(
        "delayed", latency=0.5 * delayed_choice_deadline(x))))
    assert ok.delayed_choice_spacelike
    late = audit_geometry(orsay(geometry=geometry, schedule=ScheduleSpec(
        "delayed", latency=1.5 * delayed_choice_deadline(x))))
    assert not late.delayed_choice_spacelike


@settings(max_examples=25, deadline=None)
@given(st.floats(1.0, 1e14), st.floats(1.0, 10.0))
def test_preset_verdict_monotone(x, factor):
    near = audit_geometry(orsay(trials=20, geometry=dict(detector1=-x, detector2=x)))
    far = audit_geometry(orsay(trials=20, geometry=dict(detector1=-x * factor,
                                                        detector2=x * factor)))
    assert not near.preset_spacelike or far.preset_spacelike


def test_missing_timing_refused():
    class Bare:
        geometry = None
    with pytest.raises(ValueError, match="geometry"):
        audit_geometry(Bare())
