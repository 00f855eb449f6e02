"""Does a set of pairwise statistics come from one joint distribution?

A joint distribution for three directions is a weight vector over the eight
deterministic atoms (A, B, C) in {+1, -1}^3 of detector-1 outcomes;
detector-2 is fixed by anti-correlation. The target statistic for a pair
(alpha, beta) is n(alpha+; beta+) = P(A_alpha = +, A_beta = -).

In ``symmetric`` mode (the singlet case) the reversed ordering must match
too, n(alpha-; beta-) = P(A_alpha = -, A_beta = +) = n(alpha+; beta+).
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import ConfigurationError
from .inequality import BiReport

ATOMS = np.array(list(itertools.product((1, -1), repeat=3)), dtype=np.int64)
PAIRS = ((0, 1), (1, 2), (0, 2))
PAIR_NAMES = ("ab", "bc", "ac")


@dataclass(frozen=True)
class AtomDistribution:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (8,) or np.any(w < -1e-12) or abs(w.sum() - 1) > 1e-9:
            raise ValueError("atom weights must be 8 nonnegative numbers summing to 1")
        object.__setattr__(self, "weights", tuple(float(x) for x in np.clip(w, 0, None)))

    @classmethod
    def uniform(cls):
        return cls((0.125,) * 8)

    @classmethod
    def point(cls, pattern):
        w = np.zeros(8)
        w[atom_index(pattern)] = 1.0
        return cls(tuple(w))

    def as_array(self):
        return np.array(self.weights)


def atom_index(pattern):
    """Index of the atom with detector-1 signs ``pattern`` (e.g. ``(1, -1, 1)``)."""
    return int(np.flatnonzero((ATOMS == np.asarray(pattern)).all(axis=1))[0])


def _features(symmetric):
    """Rows: statistic, columns: atoms. Order ab, bc, ac; the reversed
    orderings follow in symmetric mode."""
    rows = [((ATOMS[:, i] == 1) & (ATOMS[:, j] == -1)) for i, j in PAIRS]
    if symmetric:
        rows += [((ATOMS[:, i] == -1) & (ATOMS[:, j] == 1)) for i, j in PAIRS]
    return np.array(rows, dtype=float)


def implied_pairwise(atoms: AtomDistribution, symmetric=False):
    """Per-pair n(alpha+; beta+) of an atom distribution, keyed ab/bc/ac.

    With ``symmetric`` the reversed-order frequencies n(alpha-; beta-) are
    returned too, under keys ``ab-`` etc.
    """
    vals = _features(symmetric) @ atoms.as_array()
    keys = list(PAIR_NAMES) + ([f"{k}-" for k in PAIR_NAMES] if symmetric else [])
    return dict(zip(keys, (float(v) for v in vals)))


def _target_vector(targets):
    if isinstance(targets, Mapping):
        t = [targets[k] for k in PAIR_NAMES]
    else:
        t = list(targets)
    t = np.asarray(t, dtype=float)
    if t.shape != (3,) or np.any(t < 0) or np.any(t > 1) or not np.isfinite(t).all():
        raise ConfigurationError("targets must be three frequencies in [0, 1]")
    return t


@dataclass(frozen=True)
class Certificate:
    """Linear functional ``coefficients . stats + constant``.

    It is nonnegative on every atom and negative on the targets. ``stats``
    is the feature vector used by :func:`feasible` (three entries, or six
    in symmetric mode). ``name`` is set when the functional is one of the
    count-form Bell inequalities.
    """

    coefficients: tuple[float, ...]
    constant: float
    name: str | None = None

    def evaluate(self, stats):
        return float(np.dot(self.coefficients, stats) + self.constant)

    def on_atoms(self, symmetric):
        return _features(symmetric).T @ np.asarray(self.coefficients) + self.constant


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    witness: AtomDistribution | None = None
    certificate: Certificate | None = None
    symmetric: bool = True

    def __bool__(self):
        return self.feasible


def bi_family(symmetric=True):
    """Count-form Bell inequalities over the target statistics as certificates.

    Symmetric case: the three role permutations of n_ab + n_bc >= n_ac plus
    the member obtained by reversing one direction's orientation, which reads
    n_ab + n_bc + n_ac <= 1. With only one ordering matched the role
    permutations are not valid; the nontrivial facets are then
    n_ab + n_bc >= n_ac and n_ab + n_bc <= 1.
    """
    if not symmetric:
        return [Certificate((1.0, 1.0, -1.0), 0.0, "n_ab + n_bc >= n_ac"),
                Certificate((-1.0, -1.0, 0.0), 1.0, "n_ab + n_bc <= 1")]
    fam = []
    combos = [((1, 1, -1), "n_ab + n_bc >= n_ac"),
              ((1, -1, 1), "n_ab + n_ac >= n_bc"),
              ((-1, 1, 1), "n_bc + n_ac >= n_ab")]
    for coef, name in combos:
        fam.append(Certificate(tuple(float(x) for x in coef + coef), 0.0, name))
    fam.append(Certificate((-1.0,) * 6, 2.0, "n_ab + n_bc + n_ac <= 1"))
    return fam


def cyclic_bi_values(targets, symmetric=True):
    """Values of the Bell-inequality family on the targets (>= 0 means it holds),
    in per-ordering frequency units."""
    t = _target_vector(targets)
    stats = np.concatenate([t, t]) if symmetric else t
    scale = 2.0 if symmetric else 1.0
    return {c.name: c.evaluate(stats) / scale for c in bi_family(symmetric)}


def feasible(targets, tol=1e-6, symmetric=True) -> Feasibility:
    """Search the atom simplex for weights reproducing ``targets`` within ``tol``."""
    if not tol > 0:
        raise ConfigurationError("tolerance must be positive")
    t = _target_vector(targets)
    F = _features(symmetric)
    stats = np.concatenate([t, t]) if symmetric else t
    k = F.shape[0]
    # variables: 8 weights and s; maximise s = min weight for a central
    # witness inside half the band, else accept any point of the full band
    A_ub = np.vstack([np.hstack([F, np.zeros((k, 1))]),
                      np.hstack([-F, np.zeros((k, 1))]),
                      np.hstack([-np.eye(8), np.ones((8, 1))])])
    A_eq = np.hstack([np.ones((1, 8)), np.zeros((1, 1))])
    for band, objective in ((tol / 2, -1.0), (tol, 0.0)):
        c = np.zeros(9)
        c[-1] = objective
        b_ub = np.concatenate([stats + band, -stats + band, np.zeros(8)])
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                      bounds=[(0, None)] * 8 + [(0, 1)], method="highs")
        if res.status == 0:
            w = np.clip(res.x[:8], 0, None)
            return Feasibility(True, AtomDistribution(tuple(w / w.sum())), None, symmetric)
        if res.status != 2:
            raise RuntimeError(f"linear program failed: {res.message}")
    return Feasibility(False, None, _certificate(stats, tol, symmetric), symmetric)


def _certificate(stats, tol, symmetric):
    for cert in bi_family(symmetric):
        slack = tol * float(np.abs(cert.coefficients).sum())
        if cert.evaluate(stats) + slack < 0:
            return cert
    # Farkas: y . v_k + y0 >= 0 on atoms, y . t + y0 + tol |y|_1 < 0
    F = _features(symmetric)
    k = F.shape[0]
    # variables y+ (k), y- (k), y0
    c = np.concatenate([stats + tol, -stats + tol, [1.0]])
    A_ub = -np.hstack([F.T, -F.T, np.ones((8, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(8),
                  bounds=[(0, 1)] * (2 * k) + [(-2 * k, 2 * k)], method="highs")
    y = res.x[:k] - res.x[k:2 * k]
    return Certificate(tuple(float(v) for v in y), float(res.x[-1]), None)


# --- set algebra ----------------------------------------------------------

def set_identity_check(A, B, C, universe=None) -> bool:
    """A∩B̄ ∪ B∩C̄ ⊇ A∩C̄ and |A∩B̄| + |B∩C̄| >= |A∩C̄| for finite sets."""
    A, B, C = set(A), set(B), set(C)
    U = set(universe) if universe is not None else A | B | C
    nB, nC = U - B, U - C
    left = (A & nB) | (B & nC)
    contains = left >= (A & nC)
    counts = len(A & nB) + len(B & nC) >= len(A & nC)
    return contains and counts


# --- survey form ----------------------------------------------------------

SURVEY_PAIRS = (("tall", "blue"), ("blue", "male"), ("tall", "male"))


def binarize_rows(rows: Sequence[Mapping]) -> np.ndarray:
    """(n, 3) bool array of (tall, blue eyes, male) from categorical rows.

    Heights are ``tall``/``short`` (or t/s); eye colours are free text
    compared with ``blue`` (or b); gender ``male``/``female`` (or m/f, and
    any other value counts as not-male).
    """
    out = np.zeros((len(rows), 3), dtype=bool)
    for r, row in enumerate(rows):
        h = str(row["height"]).strip().lower()
        e = str(row["eyes"]).strip().lower()
        g = str(row["gender"]).strip().lower()
        if h not in ("tall", "short", "t", "s"):
            raise ConfigurationError(f"row {r}: height {row['height']!r} is not tall/short")
        if not e or not g:
            raise ConfigurationError(f"row {r}: empty attribute")
        out[r] = (h in ("tall", "t"), e in ("blue", "b"), g in ("male", "m"))
    return out


def read_survey_csv(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def survey_inequality(rows, z=3.0) -> BiReport:
    """N(t, not-b) + N(b, not-m) >= N(t, not-m) over complete rows."""
    x = rows if isinstance(rows, np.ndarray) and rows.dtype == bool else binarize_rows(rows)
    t, b, m = x[:, 0], x[:, 1], x[:, 2]
    lhs = float(np.sum(t & ~b) + np.sum(b & ~m))
    rhs = float(np.sum(t & ~m))
    return BiReport("survey-count", lhs, rhs, 0.0, z)


def survey_selected(x: np.ndarray, groups: np.ndarray, z=3.0) -> BiReport:
    """Two-question form: each row answers only the pair its group was asked.

    ``groups`` holds 0, 1, 2 for (tall, blue), (blue, male), (tall, male);
    frequencies are taken within each group.
    """
    f, var = [], 0.0
    for g, (i, j) in enumerate(((0, 1), (1, 2), (0, 2))):
        sel = groups == g
        n = int(sel.sum())
        if n == 0:
            return BiReport("survey-frequency", math.nan, math.nan, math.nan, z,
                            f"no rows asked question pair {SURVEY_PAIRS[g]}")
        p = float(np.mean(x[sel, i] & ~x[sel, j]))
        f.append(p)
        var += p * (1 - p) / n
    return BiReport("survey-frequency", f[0] + f[1], f[2], math.sqrt(var), z)


def random_survey(x: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
    """Everyone answers; a random question pair per person."""
    return x, rng.integers(0, 3, len(x))


def conspiratorial_survey(x: np.ndarray, n, rng, targets=None):
    """Fill ``n`` survey slots knowing in advance which question pair each slot gets.

    For each slot the surveyor draws an answer pattern for the two asked
    attributes from ``targets[g] = (p_yy, p_yn, p_ny, p_nn)`` and recruits a
    person from the population ``x`` whose answers match. The default
    targets mimic singlet frequencies at spin angles (pi/4, pi/4, pi/2).
    Returns the recruited rows and their question-pair groups.
    """
    from .singlet import singlet_joint  # local: survey mode is optional

    if targets is None:
        targets = []
        for theta in (math.pi / 4, math.pi / 4, math.pi / 2):
            s = singlet_joint(theta)
            # "x and not y" plays the role of the up-up cell
            targets.append((s.p_ud, s.p_uu, s.p_dd, s.p_du))
    groups = rng.integers(0, 3, n)
    chosen = np.empty(n, dtype=np.int64)
    for g, (i, j) in enumerate(((0, 1), (1, 2), (0, 2))):
        slots = np.flatnonzero(groups == g)
        p = np.asarray(targets[g], dtype=float)
        cells = rng.choice(4, size=slots.size, p=p / p.sum())
        for cell, (vi, vj) in enumerate(((True, True), (True, False),
                                         (False, True), (False, False))):
            pool = np.flatnonzero((x[:, i] == vi) & (x[:, j] == vj))
            hit = slots[cells == cell]
            if hit.size and pool.size == 0:
                raise ConfigurationError("population lacks an answer pattern the targets need")
            if hit.size:
                chosen[hit] = rng.choice(pool, size=hit.size)
    return x[chosen], groups
