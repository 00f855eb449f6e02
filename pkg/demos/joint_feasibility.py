"""Which pairwise statistics can come from a single joint distribution?"""
import math

import numpy as np

from eprbell import AtomDistribution, feasible, implied_pairwise, set_identity_check
from eprbell.feasibility import (
    binarize_rows, conspiratorial_survey, cyclic_bi_values, random_survey, survey_inequality,
    survey_selected,
)
from eprbell.singlet import singlet_joint

print("uniform atoms ->", implied_pairwise(AtomDistribution.uniform()))
print("point (+,-,+) ->", implied_pairwise(AtomDistribution.point((1, -1, 1))))

qm = tuple(singlet_joint(t).p_uu for t in (math.pi / 4, math.pi / 4, math.pi / 2))
res = feasible(qm)
print("\nsinglet targets", np.round(qm, 4), "feasible:", res.feasible)
print("certificate:", res.certificate.name, "value on targets:",
      round(res.certificate.evaluate(qm + qm), 4))
print("Bell family on targets:", {k: round(v, 4) for k, v in cyclic_bi_values(qm).items()})

res = feasible((0.25, 0.25, 0.25))
print("\n(1/4, 1/4, 1/4) witness:", np.round(res.witness.weights, 4))

# The set identity behind the inequality, on random subsets of 32 elements.
rng = np.random.default_rng(1)
ok = all(set_identity_check(*(set(np.flatnonzero(rng.random(32) < 0.5)) for _ in range(3)),
                            universe=range(32)) for _ in range(1000))
print("\nset identity held on 1000 random triples:", ok)

# Survey form: tall / blue-eyed / male.
population = [{"height": rng.choice(["tall", "short"]), "eyes": rng.choice(["blue", "brown"]),
               "gender": rng.choice(["male", "female"])} for _ in range(5000)]
x = binarize_rows(population)
print("\ncomplete rows:", survey_inequality(x).verdict.value)
print("random question pair per person:", survey_selected(*random_survey(x, rng)).verdict.value)
sample, groups = conspiratorial_survey(x, 60_000, rng)
r = survey_selected(sample, groups)
print(f"recruiting to match each question pair: margin {r.margin:+.4f} -> {r.verdict.value}")
