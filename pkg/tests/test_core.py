import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eprbell import (
    ConfigurationError, CountTable, Direction, HiddenTrace, Outcome, PairRecord,
    RecordLog, read_records_csv, relative_angle, run, tally, write_records_csv,
)
from eprbell.core import CSV_HEADER, records_equal, write_summary_json

from conftest import make_config

UP, DOWN = Outcome.UP, Outcome.DOWN


def rec(m, settings, outcomes, trace=None):
    return PairRecord(m, settings, outcomes, hidden_trace=trace)


class TestDirection:
    def test_relative_angle_examples(self):
        assert relative_angle(Direction.coplanar(0), Direction.coplanar(0)) == 0
        assert relative_angle(Direction.coplanar(0), Direction.coplanar(math.pi / 4)) \
            == pytest.approx(math.pi / 4)
        assert relative_angle(Direction.sphere((1, 0, 0)), Direction.sphere((0, 1, 0))) \
            == pytest.approx(math.pi / 2)

    def test_vector_normalised(self):
        d = Direction.sphere((3, 4, 12))
        assert np.linalg.norm(d.vector) == pytest.approx(1, abs=1e-12)
        assert d.mode == "full-sphere"

    def test_angle_wrapped(self):
        assert Direction.coplanar(-math.pi / 2).angle == pytest.approx(3 * math.pi / 2)

    @pytest.mark.parametrize("kwargs", [{}, {"angle": 1.0, "vector": (1, 0, 0)},
                                        {"vector": (0, 0, 0)}, {"angle": math.inf}])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            Direction(**kwargs)

    @given(st.floats(-20, 20), st.floats(-20, 20))
    def test_relative_angle_symmetric_and_bounded(self, a, b):
        d1, d2 = Direction.coplanar(a), Direction.coplanar(b)
        t = relative_angle(d1, d2)
        assert 0 <= t <= math.pi
        assert t == relative_angle(d2, d1)

    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(
        lambda v: np.linalg.norm(v) > 1e-3))
    def test_mixed_modes_agree_with_vectors(self, v):
        d = Direction.sphere(v)
        c = Direction.coplanar(0.7)
        expected = math.acos(np.clip(np.dot(d.as_vector(), c.as_vector()), -1, 1))
        assert relative_angle(d, c) == pytest.approx(expected)


def test_outcome_numeric_image():
    assert int(UP) == 1 and int(DOWN) == -1
    assert -UP is DOWN


class TestTally:
    def test_exhaustive_cells(self):
        records = [rec(i + 1, (0, 1), o) for i, o in
                   enumerate([(UP, UP), (UP, DOWN), (DOWN, UP), (DOWN, DOWN)])]
        t = tally(records)
        assert [t.count((0, 1), *o) for o in [(1, 1), (1, -1), (-1, 1), (-1, -1)]] \
            == [1, 1, 1, 1]
        assert t.P((0, 1)) == 0

    def test_equal_settings_anticorrelated(self):
        t = tally([rec(1, (0, 0), (UP, DOWN)), rec(2, (0, 0), (DOWN, UP))])
        assert t.count((0, 0)) == 0
        assert t.P((0, 0)) == -1

    def test_empty(self):
        t = tally([])
        assert t.M_total == 0
        assert t.n((0, 1)) is None and t.P((0, 1)) is None

    def test_qm_right_angle_frequency(self):
        result = run(make_config(angles=(0.0, math.pi / 2, math.pi), trials=10**6,
                                 schedule=__import__("eprbell").ScheduleSpec(
                                     "periodic", pattern=(("A", "B"),))))
        n = tally(result.log).n((0, 1))
        sigma = math.sqrt(0.25 * 0.75 / 10**6)
        assert abs(n - 0.25) < 3 * sigma

    def test_labels_lookup(self):
        t = tally([rec(1, (0, 2), (UP, UP))])
        assert t.count(("A", "C")) == 1


record_strategy = st.lists(
    st.tuples(st.integers(0, 2), st.integers(0, 2), st.sampled_from([1, -1]),
              st.sampled_from([1, -1])), max_size=60)


def records_from(rows):
    return [rec(i + 1, (a, b), (Outcome(o1), Outcome(o2)))
            for i, (a, b, o1, o2) in enumerate(rows)]


@given(record_strategy, st.randoms())
def test_tally_permutation_invariant(rows, rnd):
    records = records_from(rows)
    shuffled = records[:]
    rnd.shuffle(shuffled)
    a, b = tally(records, "ABC"), tally(shuffled, "ABC")
    assert a.M_total == b.M_total
    assert set(a.counts) == set(b.counts)
    for k in a.counts:
        assert np.array_equal(a.counts[k], b.counts[k])


@given(record_strategy)
def test_count_table_identities(rows):
    records = records_from(rows)
    t = tally(records, "ABC")
    assert sum(t.subtotal(k) for k in t.pairs()) == t.M_total == len(records)
    for k in t.pairs():
        ns = [t.n(k, o1, o2) for o1 in (1, -1) for o2 in (1, -1)]
        assert all(0 <= x <= 1 for x in ns)
        assert sum(ns) == pytest.approx(1)
        assert -1 <= t.P(k) <= 1
        # direct scan
        scan = sum(1 for r in records if r.settings == k and r.outcomes == (UP, UP))
        assert t.count(k) == scan
        c = t.counts[k]
        if c[0] == c[3] and c[1] == c[2]:
            assert t.P(k) == pytest.approx(4 * t.n(k) - 1)


def test_csv_header_and_roundtrip(tmp_path):
    result = run(make_config(trials=500, source={"kind": "deterministic_uniform"}))
    path = tmp_path / "log.csv"
    write_records_csv(result.log, path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    back = read_records_csv(path)
    assert records_equal(result.log, back)
    assert list(back.records()) == list(result.log.records())


def test_csv_roundtrip_without_traces(tmp_path):
    log = run(make_config(trials=300)).log
    path = tmp_path / "qm.csv"
    write_records_csv(log, path)
    assert records_equal(log, read_records_csv(path, labels=log.labels))


@settings(max_examples=30)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2),
                          st.floats(-1e6, 1e6, allow_nan=False),
                          st.floats(0, math.tau, exclude_max=True)), min_size=1, max_size=20))
def test_record_file_roundtrip_hypothesis(tmp_path_factory, rows):
    records = []
    for i, (a, b, t, lam) in enumerate(rows):
        cf = tuple(Outcome(1 if math.cos(lam - k) >= 0 else -1) for k in range(3))
        trace = HiddenTrace((lam,), cf, (a, b))
        records.append(PairRecord(i + 1, (a, b), (cf[a], -cf[b]), t, (t, t + 1e-9), trace))
    log = RecordLog.from_records(records, "ABC")
    path = tmp_path_factory.mktemp("rt") / "r.csv"
    write_records_csv(log, path)
    assert list(read_records_csv(path).records()) == records


def test_summary_json_roundtrip(tmp_path):
    t = tally(run(make_config(trials=2000)).log)
    path = tmp_path / "s.json"
    write_summary_json(t, path)
    back = CountTable.from_dict(json.loads(path.read_text()))
    assert back.M_total == t.M_total
    assert all(np.array_equal(back.counts[k], t.counts[k]) for k in t.counts)


def test_mixed_traces_rejected():
    trace = HiddenTrace((0.0,), (UP, UP, UP))
    with pytest.raises(ValueError):
        RecordLog.from_records([rec(1, (0, 1), (UP, DOWN), trace),
                                rec(2, (0, 1), (UP, DOWN))], "ABC")


def test_causal_order_flag():
    r = PairRecord(1, (0, 1), (UP, DOWN), emission_time=1.0, setting_event_times=(0.5, 2.0))
    assert not r.causal_ordered
