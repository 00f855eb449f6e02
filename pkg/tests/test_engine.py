import math

import numpy as np
import pytest
from scipy import stats

from eprbell import (
    ConfigurationError, ExperimentConfig, Geometry, ScheduleSpec, bi_count_form,
    generate_schedule, qm_bi_margin, run, tally,
)
from eprbell.core import records_equal
from eprbell.engine import emission_times, load_config, loads_config, with_seed
from eprbell.inequality import compare_logs, counterfactual_homogeneity

from conftest import coplanar, make_config

ORSAY_SPIN = (0.0, math.pi / 4, math.pi / 2)


def test_periodic_six(periodic_abc):
    s = generate_schedule(make_config(trials=6, schedule=periodic_abc))
    assert [s.assignment(m) for m in range(1, 7)] == [(0, 1), (1, 2), (0, 2)] * 2


def test_iid_pair_counts():
    M = 300_000
    cfg = make_config(trials=M, schedule=ScheduleSpec("iid", seed=1))
    pairs = generate_schedule(cfg).pairs
    keys, counts = np.unique(pairs[:, 0] * 3 + pairs[:, 1], return_counts=True)
    assert len(keys) == 3
    sigma = math.sqrt(M * (1 / 3) * (2 / 3))
    assert np.all(np.abs(counts - M / 3) < 4 * sigma)


def test_preset_decision_times():
    cfg = make_config(trials=50, schedule=ScheduleSpec("preset", pattern=(("A", "C"),)),
                      geometry=Geometry(t_o=-5.0, t_f=10.0))
    s = generate_schedule(cfg)
    assert np.all(s.decision_times == -5.0)


def test_delayed_decision_times():
    g = Geometry(detector1=-6.5, detector2=6.5, t_o=0.0, t_f=1e-3)
    cfg = make_config(trials=10, geometry=g, schedule=ScheduleSpec("delayed", latency=1e-8))
    s = generate_schedule(cfg)
    t = emission_times(cfg)
    assert s.decision_times[:, 1] == pytest.approx(t + 6.5 / 299_792_458.0 - 1e-8)


def test_unknown_label_rejected():
    with pytest.raises(ConfigurationError, match="unknown label"):
        make_config(schedule=ScheduleSpec("periodic", pattern=(("A", "Z"),)))


@pytest.mark.parametrize("kwargs", [{"strategy": "periodic"}, {"strategy": "sometimes"},
                                    {"latency": -1.0}])
def test_bad_schedules(kwargs):
    with pytest.raises(ConfigurationError):
        ScheduleSpec(**kwargs)


@pytest.mark.parametrize("kwargs", [{"t_o": 1.0, "t_f": 1.0}, {"detector1": 0.0},
                                    {"detector1": 3.0, "detector2": 3.0}, {"rate": -1.0}])
def test_bad_geometry(kwargs):
    with pytest.raises(ConfigurationError):
        Geometry(**kwargs)


def test_config_invariants():
    with pytest.raises(ConfigurationError):
        make_config(trials=0)


def test_records_numbered_without_gaps():
    r = run(make_config(trials=70_000))
    assert len(r.log) == 70_000
    assert np.array_equal(r.log.m, np.arange(1, 70_001))


def test_forced_equal_settings_anticorrelated():
    log = run(make_config(trials=5000, schedule=ScheduleSpec("periodic",
                                                             pattern=(("A", "A"),)))).log
    assert np.all(log.o1 == -log.o2)


def test_qm_run_reproduces_margin():
    t = tally(run(make_config(angles=ORSAY_SPIN, trials=10**6, seed=11)).log)
    r = bi_count_form(t)
    expected = 0.5 * qm_bi_margin(math.pi / 4, math.pi / 4, math.pi / 2)
    assert abs(r.margin - expected) < 3 * r.standard_error


@pytest.mark.parametrize("strategy", ["iid", "periodic", "preset"])
def test_uniform_source_any_schedule(strategy):
    spec = (ScheduleSpec(strategy) if strategy == "iid" else
            ScheduleSpec(strategy, pattern=(("A", "B"), ("B", "C"), ("A", "C"), ("A", "C"))))
    t = tally(run(make_config(trials=200_000, schedule=spec,
                              source={"kind": "deterministic_uniform"})).log)
    r = bi_count_form(t)
    assert r.margin >= -3 * r.standard_error


def test_determinism_across_workers():
    cfg = make_config(trials=150_000, source={"kind": "selection_correlated"}, seed=99)
    a = run(cfg, workers=1).log
    b = run(cfg, workers=4).log
    assert records_equal(a, b)
    assert not records_equal(a, run(with_seed(cfg, 100)).log)


def test_block_size_does_not_change_schedule():
    cfg = make_config(trials=1000)
    a = run(cfg, block_size=128).log
    b = run(cfg, block_size=512).log
    assert np.array_equal(a.s1, b.s1) and np.array_equal(a.t_emit, b.t_emit)


def test_poisson_emission():
    cfg = make_config(trials=20_000, seed=3,
                      geometry=Geometry(t_o=0.0, t_f=2.0, poisson=True))
    t = emission_times(cfg)
    assert 0.0 <= t[0] and t[-1] < 2.0 and np.all(np.diff(t) >= 0)
    gaps = np.diff(t)
    assert stats.kstest(gaps, "expon", args=(0, 1 / cfg.rate)).pvalue > 0.001


def test_uniform_emission_spacing():
    t = emission_times(make_config(trials=5, geometry=Geometry(t_o=1.0, t_f=2.0)))
    assert t == pytest.approx([1.0, 1.2, 1.4, 1.6, 1.8])


def test_partial_log_flushed_on_error(tmp_path):
    from eprbell.hidden import DeterministicUniform

    class Faulty(DeterministicUniform):
        calls = 0

        def draw(self, n, rng):
            Faulty.calls += 1
            if Faulty.calls > 1:
                raise RuntimeError("source failure")
            return super().draw(n, rng)

    cfg = ExperimentConfig(coplanar(*ORSAY_SPIN), 300, source=Faulty(coplanar(*ORSAY_SPIN)))
    out = tmp_path / "partial.csv"
    with pytest.raises(RuntimeError):
        run(cfg, out=out, block_size=100)
    assert len(out.read_text().splitlines()) == 101


def test_schedule_permutation_leaves_uniform_frequencies_alone():
    base = make_config(trials=300_000, source={"kind": "deterministic_uniform"}, seed=21)
    swapped = make_config(trials=300_000, source={"kind": "deterministic_uniform"}, seed=21,
                          schedule=ScheduleSpec("iid", seed=777))
    res = compare_logs(run(base).log, run(swapped).log)
    assert all(r.p_value >= 0.01 for r in res.values())


def test_selection_correlated_skews_hidden_patterns():
    log = run(make_config(trials=100_000, source={"kind": "selection_correlated"})).log
    assert counterfactual_homogeneity(log).p_value < 0.01
    log = run(make_config(trials=100_000, source={"kind": "deterministic_uniform"})).log
    assert counterfactual_homogeneity(log).p_value >= 0.01


CONFIG = """
[experiment]
trials = 1e4
seed = 5
source = stochastic_independent
density = {"kind": "von_mises", "parameters": {"mu": 0.2, "kappa": 1.5}}

[directions]
A = 0
B = 45
C = 90

[schedule]
strategy = periodic
pattern = A:B, B:C, A:C

[geometry]
detector1 = -6.5
detector2 = 6.5
t_o = 0
t_f = 12000   # seconds
cadence = 0.2
"""


def test_parse_config():
    cfg = loads_config(CONFIG)
    assert cfg.M_total == 10_000 and cfg.rng_seed == 5
    assert cfg.labels == ("A", "B", "C")
    assert cfg.directions[1].angle == pytest.approx(math.pi / 4)
    assert cfg.schedule.pattern == (("A", "B"), ("B", "C"), ("A", "C"))
    assert cfg.geometry.t_f == 12000
    assert cfg.source["density"]["kind"] == "von_mises"


def test_load_config_file(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(CONFIG)
    assert load_config(path) == loads_config(CONFIG)
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.ini")


def test_config_errors():
    with pytest.raises(ConfigurationError):
        loads_config("[experiment]\ntrials = 5\n")
    with pytest.raises(ConfigurationError):
        loads_config("[directions]\nA = 0\nB = 1 2\n")
    with pytest.raises(ConfigurationError):
        loads_config("[directions]\nA = 0\nB = 1\nC = 2\n[schedule]\npairs = A:D\n")


def test_sphere_directions_in_config():
    cfg = loads_config("[directions]\nA = 1 0 0\nB = 0 1 0\nC = 0 0 1\n")
    assert all(d.mode == "full-sphere" for d in cfg.directions)
    log = run(cfg).log
    assert len(log) == 1000
