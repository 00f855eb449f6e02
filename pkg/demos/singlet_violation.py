"""Singlet statistics against the three-direction Bell inequality.

Run with ``python3 demos/singlet_violation.py``.
"""
import math

from eprbell import (
    Direction, ExperimentConfig, bi_count_form, bi_expectation_form, qm_bi_margin,
    run, singlet_joint, tally,
)

# Spin-1/2 convention: n(a+;b+) = sin^2(theta/2) / 2. Photon analyzer angles
# (0, 22.5, 45 degrees) correspond to spin angles (0, 45, 90 degrees).
for deg in (0, 45, 90, 180):
    s = singlet_joint(math.radians(deg))
    print(f"theta={deg:3d}  p_uu={s.p_uu:.4f}  p_ud={s.p_ud:.4f}  P={s.expectation:+.4f}")

# closed form, in sin^2 units
print("margin at (45, 45, 90):", qm_bi_margin(*map(math.radians, (45, 45, 90))))
print("margin at (60, 60, 120):", qm_bi_margin(*map(math.radians, (60, 60, 120))))

# A million trials with random setting pairs
dirs = [Direction.coplanar(math.radians(d)) for d in (0, 45, 90)]
log = run(ExperimentConfig(dirs, 1_000_000, rng_seed=2024)).log
table = tally(log)
for name, r in (("count", bi_count_form(table)), ("expectation", bi_expectation_form(table))):
    print(f"{name:12s} lhs={r.lhs:+.4f} rhs={r.rhs:+.4f} "
          f"margin={r.margin:+.4f} +- {r.standard_error:.4f}  {r.verdict.value}")

# Per-pair frequencies are used, so unequal pair subtotals do not matter.
for pair in table.pairs():
    print(table.labels[pair[0]] + table.labels[pair[1]], table.subtotal(pair),
          round(table.n(pair), 4))
