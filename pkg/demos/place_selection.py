"""Are outcome frequencies invariant under sub-selection of the trial sequence?"""
import math

import numpy as np

from eprbell import (
    Direction, ExperimentConfig, RecordLog, ScheduleSpec, place_selection_invariance, run,
)

dirs = [Direction.coplanar(a) for a in (0.0, math.pi / 4, math.pi / 2)]
periodic = ScheduleSpec("periodic", pattern=(("A", "B"), ("B", "C"), ("A", "C")))


def show(title, results):
    print(title)
    for key, r in results.items():
        print(f"   {key}: chi2={r.statistic:7.2f} dof={r.dof} p={r.p_value:.3f} {r.verdict}")


qm = run(ExperimentConfig(dirs, 300_000, rng_seed=1)).log
show("QM, odd vs even trials", place_selection_invariance(qm, "parity"))

# at alpha = 0.01 roughly one honest pair in a hundred fails by chance
uniform = run(ExperimentConfig(dirs, 300_000, source={"kind": "deterministic_uniform"},
                               schedule=periodic, rng_seed=5)).log
show("uniform model, by schedule phase", place_selection_invariance(uniform, "phase:6"))
show("uniform model, four contiguous blocks", place_selection_invariance(uniform, "blocks:4"))

# A constructed log whose up-rate differs by 0.1 between odd and even trials.
M = 40_000
rng = np.random.default_rng(0)
m = np.arange(1, M + 1)
o1 = np.where(rng.random(M) < np.where(m % 2, 0.45, 0.55), 1, -1).astype(np.int8)
o2 = np.where(rng.random(M) < 0.5, 1, -1).astype(np.int8)
z = np.zeros(M, dtype=np.int64)
shifted = RecordLog(("A", "B", "C"), m, z, z + 1, o1, o2, np.zeros(M), np.zeros(M), np.zeros(M))
show("shifted synthetic log, odd vs even", place_selection_invariance(shifted, "parity"))
