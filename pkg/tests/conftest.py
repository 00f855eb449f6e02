import math

import numpy as np
import pytest

from eprbell import Direction, ExperimentConfig, ScheduleSpec


def coplanar(*angles):
    return tuple(Direction.coplanar(a) for a in angles)


def make_config(angles=(0.0, math.pi / 4, math.pi / 2), trials=10_000, source=None,
                seed=1, **kwargs):
    return ExperimentConfig(coplanar(*angles), trials,
                            source=source or {"kind": "qm"}, rng_seed=seed, **kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def periodic_abc():
    return ScheduleSpec("periodic", pattern=(("A", "B"), ("B", "C"), ("A", "C")))
