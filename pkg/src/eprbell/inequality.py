"""Bell-inequality evaluation, the hidden-trace decomposition audit and
place-selection invariance tests.

Conventions: ``a, b, c`` are the three directions of a triple; ``N(x+;y+)``
counts trials with detector-1 set to ``x`` and detector-2 to ``y`` both
reading up. In a double entry such as ``N(a+;c+,b+)`` the second index on a
side is the outcome that detector *would* have shown at the other direction,
read off the stored counterfactuals. Because the singlet condition fixes
detector-2 to the negation of detector-1, every such count is a count of
detector-1 sign patterns ``(A, B, C)`` over one sub-ensemble of trials.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import CELLS, CountTable, RecordLog, _as_log, tally

Z_DEFAULT = 3.0


class Verdict(str, enum.Enum):
    SATISFIED = "Satisfied"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class BiReport:
    form: str
    lhs: float
    rhs: float
    standard_error: float = 0.0
    z: float = Z_DEFAULT
    diagnostic: str = ""

    @property
    def margin(self):
        return self.lhs - self.rhs

    @property
    def verdict(self) -> Verdict:
        m = self.margin
        if not math.isfinite(m):
            return Verdict.INCONCLUSIVE
        if self.standard_error > 0 and abs(m) < self.z * self.standard_error:
            return Verdict.INCONCLUSIVE
        return Verdict.SATISFIED if m >= 0 else Verdict.VIOLATED

    @property
    def significance(self):
        """Margin in units of its standard error (inf when exact)."""
        if self.standard_error == 0:
            return math.copysign(math.inf, self.margin) if self.margin else 0.0
        return self.margin / self.standard_error

    def to_dict(self):
        return {"form": self.form, "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "standard_error": self.standard_error,
                "verdict": self.verdict.value, "diagnostic": self.diagnostic}


def _triple(table_or_log, triple):
    labels = table_or_log.labels
    return tuple(t if isinstance(t, (int, np.integer)) else labels.index(t) for t in triple)


def _missing(table, pairs):
    return [f"{table.labels[i]},{table.labels[j]}" for i, j in pairs
            if table.subtotal((i, j)) == 0]


def bi_count_form(table: CountTable, triple=(0, 1, 2), z=Z_DEFAULT) -> BiReport:
    """n(a+;b+) + n(b+;c+) >= n(a+;c+) on per-pair relative frequencies."""
    a, b, c = _triple(table, triple)
    pairs = ((a, b), (b, c), (a, c))
    missing = _missing(table, pairs)
    if missing:
        return BiReport("count", math.nan, math.nan, math.nan, z,
                        f"no trials for pair(s) {', '.join(missing)}")
    n = [table.n(p) for p in pairs]
    var = sum(f * (1 - f) / table.subtotal(p) for f, p in zip(n, pairs))
    return BiReport("count", n[0] + n[1], n[2], math.sqrt(var), z)


def bi_expectation_form(table: CountTable, triple=(0, 1, 2), z=Z_DEFAULT) -> BiReport:
    """P(a;b) + P(b;c) >= P(a;c) - 1."""
    a, b, c = _triple(table, triple)
    pairs = ((a, b), (b, c), (a, c))
    missing = _missing(table, pairs)
    if missing:
        return BiReport("expectation", math.nan, math.nan, math.nan, z,
                        f"no trials for pair(s) {', '.join(missing)}")
    P = [table.P(p) for p in pairs]
    var = sum((1 - e * e) / table.subtotal(p) for e, p in zip(P, pairs))
    return BiReport("expectation", P[0] + P[1], P[2] - 1, math.sqrt(var), z)


# --- decomposition audit --------------------------------------------------

_SUBS = ("ab", "bc", "ac")


def _sign(v):
    return "+" if v > 0 else "-"


def _label(names, actual, pattern):
    """Double-index name of a count over sub-ensemble ``actual``.

    ``pattern`` maps direction position (0, 1, 2 for a, b, c) to detector-1
    sign; a hypothetical direction is written on the detector-2 side with the
    detector-2 sign.
    """
    i, j = actual
    s1 = f"{names[i]}{_sign(pattern[i])}" if i in pattern else f"{names[i]}"
    s2 = f"{names[j]}{_sign(-pattern[j])}" if j in pattern else f"{names[j]}"
    extra = [h for h in (0, 1, 2) if h not in (i, j) and h in pattern]
    tail = "".join(f",{names[h]}{_sign(-pattern[h])}" for h in extra)
    return f"N({s1};{s2}{tail})"


@dataclass
class DecompositionAudit:
    """Counts over the full ensemble and over each measured sub-ensemble.

    ``bracket_residual`` is the bracket correction
    ``[n(a+;b+,c+) - n(a+;c+,b+)] + [n(b+;c+,a-) - n(a+;c+,b-)]`` in per-pair
    frequency units; the count-form margin equals this residual plus the
    nonnegative ``slack`` ``n(a+;b+,c-) + n(b+;c+,a+)`` exactly.
    """

    names: tuple[str, str, str]
    M: int
    subtotals: dict
    tilde: dict
    N: dict
    hypothetical: dict
    partitions: dict
    short_terms: dict
    bracket_counts: int
    slack_counts: int
    bi_margin: float
    bracket_residual: float
    bracket_se: float
    slack: float
    outcomes_match_traces: bool
    z: float = Z_DEFAULT
    notes: list = field(default_factory=list)

    @property
    def partitions_exact(self):
        return all(sum(c for _, c in terms) == self.tilde[k]
                   for k, terms in self.partitions.items())

    @property
    def short_form_residuals(self):
        """Tilde count minus its two-term shorthand sum (not a full partition)."""
        return {k: self.tilde[k] - self.N[k] - sum(self.hypothetical[t] for t in terms)
                for k, terms in self.short_terms.items()}

    @property
    def count_identity_exact(self):
        """N_ab + N_bc - N_ac == brackets + slack, in raw counts."""
        return (self.N["ab"] + self.N["bc"] - self.N["ac"]
                == self.bracket_counts + self.slack_counts)

    @property
    def bracket_condition_holds(self):
        if self.bracket_se > 0:
            return abs(self.bracket_residual) <= self.z * self.bracket_se
        return self.bracket_residual == 0

    def to_dict(self):
        return {
            "directions": list(self.names), "M": self.M, "subtotals": self.subtotals,
            "tilde": self.tilde, "N": self.N, "hypothetical": self.hypothetical,
            "partitions": {k: [[lbl, c] for lbl, c in v] for k, v in self.partitions.items()},
            "partitions_exact": self.partitions_exact,
            "short_form_residuals": self.short_form_residuals,
            "bracket_residual": self.bracket_residual, "bracket_se": self.bracket_se,
            "bracket_counts": self.bracket_counts, "slack": self.slack,
            "slack_counts": self.slack_counts, "count_identity_exact": self.count_identity_exact,
            "bi_margin": self.bi_margin, "bracket_condition_holds": self.bracket_condition_holds,
            "outcomes_match_traces": self.outcomes_match_traces, "notes": self.notes,
        }


class AuditRefused(ValueError):
    pass


def decomposition_audit(records, triple=(0, 1, 2), z=Z_DEFAULT) -> DecompositionAudit:
    log = _as_log(records)
    if not log.has_traces:
        raise AuditRefused("decomposition audit needs hidden traces on every record")
    idx = _triple(log, triple)
    names = tuple(log.labels[i].lower() for i in idx)
    cf = log.cf[:, idx].astype(np.int64)
    # pattern code over (a, b, c): bit set where detector-1 reads up
    code = (cf[:, 0] > 0) * 4 + (cf[:, 1] > 0) * 2 + (cf[:, 2] > 0) * 1
    a, b, c = idx
    masks = {
        "ab": (log.s1 == a) & (log.s2 == b),
        "bc": (log.s1 == b) & (log.s2 == c),
        "ac": (log.s1 == a) & (log.s2 == c),
    }
    other = ~(masks["ab"] | masks["bc"] | masks["ac"])
    actual = {"ab": (0, 1), "bc": (1, 2), "ac": (0, 2)}

    atom_counts = {k: np.bincount(code[m], minlength=8) for k, m in masks.items()}
    atom_counts["other"] = np.bincount(code[other], minlength=8)
    atom_all = np.bincount(code, minlength=8)

    def count(where, pattern):
        sel = [x for x in range(8)
               if all(((x >> (2 - d)) & 1) == (v > 0) for d, v in pattern.items())]
        src = atom_all if where == "all" else atom_counts[where]
        return int(src[sel].sum())

    # detector-1 patterns behind the three measured "both up" events
    event = {"ab": {0: 1, 1: -1}, "bc": {1: 1, 2: -1}, "ac": {0: 1, 2: -1}}
    tilde = {k: count("all", event[k]) for k in _SUBS}

    N = {}
    for k in _SUBS:
        m = masks[k]
        N[k] = int(np.sum(m & (log.o1 == 1) & (log.o2 == 1)))
    match = bool(np.all(log.o1 == log.cf[np.arange(len(log)), log.s1])
                 and np.all(log.o2 == -log.cf[np.arange(len(log)), log.s2]))

    hypothetical = {}
    for k in _SUBS:
        for x in range(8):
            pattern = {d: (1 if (x >> (2 - d)) & 1 else -1) for d in range(3)}
            hypothetical[_label(names, actual[k], pattern)] = int(atom_counts[k][x])

    partitions = {}
    for k in _SUBS:
        terms = []
        ev = event[k]
        for s in _SUBS:
            if s == k:
                terms.append((_label(names, actual[s], ev), N[k]))
                continue
            free = [d for d in range(3) if d not in ev]
            for v in (1, -1):
                pattern = {**ev, free[0]: v}
                terms.append((_label(names, actual[s], pattern), count(s, pattern)))
        terms.append(("other settings", count("other", ev)))
        partitions[k] = terms

    def lab(sub, A=None, B=None, C=None):
        pattern = {d: v for d, v in zip((0, 1, 2), (A, B, C)) if v is not None}
        return _label(names, actual[sub], pattern)

    # two-term shorthand: measured count plus one or two hypothetical entries
    short_terms = {
        "ab": [lab("ac", A=1, B=-1, C=-1)],
        "bc": [lab("ac", A=1, B=1, C=-1)],
        "ac": [lab("ab", A=1, B=-1, C=-1), lab("bc", A=1, B=1, C=-1)],
    }

    t_abc = hypothetical[lab("ab", A=1, B=-1, C=-1)]      # N(a+;b+,c+)
    t_acb = hypothetical[lab("ac", A=1, B=-1, C=-1)]      # N(a+;c+,b+)
    t_bca = hypothetical[lab("bc", A=1, B=1, C=-1)]       # N(b+;c+,a-) = N(b+,a+;c+)
    t_acbm = hypothetical[lab("ac", A=1, B=1, C=-1)]      # N(a+;c+,b-) = N(a+,b+;c+)
    s_ab = hypothetical[lab("ab", A=1, B=-1, C=1)]        # N(a+;b+,c-)
    s_bc = hypothetical[lab("bc", A=-1, B=1, C=-1)]       # N(b+;c+,a+)
    bracket_counts = (t_abc - t_acb) + (t_bca - t_acbm)
    slack_counts = s_ab + s_bc

    sub = {k: int(masks[k].sum()) for k in _SUBS}
    notes = []
    if min(sub.values()) == 0:
        empty = [k for k in _SUBS if sub[k] == 0]
        notes.append(f"empty sub-ensemble(s): {', '.join(empty)}")
        freq = math.nan
        R = se = slack = math.nan
    else:
        f = lambda cnt, k: cnt / sub[k]
        n_ab, n_bc, n_ac = f(N["ab"], "ab"), f(N["bc"], "bc"), f(N["ac"], "ac")
        freq = n_ab + n_bc - n_ac
        p1, p2, p3 = f(t_abc, "ab"), f(t_bca, "bc"), n_ac
        R = p1 + p2 - p3
        se = math.sqrt(p1 * (1 - p1) / sub["ab"] + p2 * (1 - p2) / sub["bc"]
                       + p3 * (1 - p3) / sub["ac"])
        slack = f(s_ab, "ab") + f(s_bc, "bc")
    subtotals = dict(sub, other=int(other.sum()))
    return DecompositionAudit(
        names=names, M=len(log), subtotals=subtotals, tilde=tilde, N=N,
        hypothetical=hypothetical, partitions=partitions, short_terms=short_terms,
        bracket_counts=bracket_counts, slack_counts=slack_counts, bi_margin=freq,
        bracket_residual=R, bracket_se=se, slack=slack, outcomes_match_traces=match,
        z=z, notes=notes,
    )


def tilde_inequality_check(audit: DecompositionAudit) -> BiReport:
    """Ñ(a+;b+) + Ñ(b+;c+) >= Ñ(a+;c+) over the whole ensemble (exact counts)."""
    t = audit.tilde
    return BiReport("tilde-count", float(t["ab"] + t["bc"]), float(t["ac"]), 0.0, audit.z)


ñ_inequality_check = tilde_inequality_check


# --- homogeneity tests ----------------------------------------------------

@dataclass(frozen=True)
class HomogeneityResult:
    key: str
    statistic: float
    dof: int
    p_value: float
    alpha: float
    sizes: tuple
    min_size: int = 0

    @property
    def verdict(self):
        if min(self.sizes) < self.min_size or len(self.sizes) < 2:
            return "Inconclusive"
        return "pass" if self.p_value >= self.alpha else "fail"

    def to_dict(self):
        return {"key": self.key, "statistic": self.statistic, "dof": self.dof,
                "p_value": self.p_value, "sizes": list(self.sizes),
                "verdict": self.verdict}


def homogeneity_test(table, key="", alpha=0.01, min_size=0) -> HomogeneityResult:
    """Chi-square test that every row of a groups-by-categories table shares one
    distribution; all-zero categories are dropped."""
    t = np.asarray(table, dtype=float)
    sizes = tuple(int(x) for x in t.sum(axis=1))
    t = t[:, t.sum(axis=0) > 0]
    rows_ok = t.sum(axis=1) > 0
    if t.shape[1] < 2 or rows_ok.sum() < 2:
        return HomogeneityResult(key, 0.0, 0, 1.0, alpha, sizes, min_size)
    res = stats.chi2_contingency(t[rows_ok], correction=False)
    return HomogeneityResult(key, float(res.statistic), int(res.dof), float(res.pvalue),
                             alpha, sizes, min_size)


def partition_labels(log: RecordLog, spec):
    """Group index per record for a partition spec.

    ``"parity"`` splits odd/even trial numbers, ``"halves"`` splits the run in
    two contiguous halves, ``"blocks:k"`` into k contiguous blocks and
    ``"phase:k"`` by ``(m - 1) mod k``. A callable receives the log and an
    array is used as given.
    """
    if callable(spec):
        return np.asarray(spec(log))
    if not isinstance(spec, str):
        return np.asarray(spec)
    m = log.m
    if spec == "parity":
        return (m % 2).astype(np.int64)
    if spec == "halves":
        spec = "blocks:2"
    kind, _, arg = spec.partition(":")
    k = int(arg) if arg else 2
    if kind == "blocks":
        order = np.argsort(np.argsort(m, kind="stable"), kind="stable")
        return (order * k) // max(len(m), 1)
    if kind == "phase":
        return ((m - 1) % k).astype(np.int64)
    raise ValueError(f"unknown partition spec {spec!r}")


def _cell_index(log):
    return (log.o1 < 0).astype(np.int64) * 2 + (log.o2 < 0).astype(np.int64)


def place_selection_invariance(records, partition="parity", alpha=0.01, min_count=100):
    """Per setting pair, test that outcome frequencies agree across sub-sequences."""
    log = _as_log(records)
    groups = partition_labels(log, partition)
    gvals = np.unique(groups)
    k = len(log.labels)
    pair = log.s1 * k + log.s2
    cell = _cell_index(log)
    out = {}
    for p in np.unique(pair):
        sel = pair == p
        table = np.zeros((len(gvals), 4), dtype=np.int64)
        np.add.at(table, (np.searchsorted(gvals, groups[sel]), cell[sel]), 1)
        i, j = divmod(int(p), k)
        key = f"{log.labels[i]},{log.labels[j]}"
        # groups that never used this pair say nothing about it
        table = table[table.sum(axis=1) > 0]
        out[key] = homogeneity_test(table, key, alpha, min_count)
    return out


def compare_logs(first, second, alpha=0.01, min_count=0):
    """Two-sample test of per-pair outcome frequencies between two runs."""
    a, b = _as_log(first), _as_log(second)
    ta, tb = tally(a), tally(b)
    out = {}
    for key in sorted(set(ta.counts) | set(tb.counts)):
        name = f"{ta.labels[key[0]]},{ta.labels[key[1]]}"
        rows = [ta.counts.get(key, np.zeros(4, np.int64)), tb.counts.get(key, np.zeros(4, np.int64))]
        out[name] = homogeneity_test(np.array(rows), name, alpha, min_count)
    return out


def counterfactual_homogeneity(records, triple=(0, 1, 2), alpha=0.01) -> HomogeneityResult:
    """Test that the hidden sign patterns over (a, b, c) are distributed alike in
    the three measured sub-ensembles; a setting-dependent source fails this."""
    log = _as_log(records)
    if not log.has_traces:
        raise AuditRefused("counterfactual homogeneity needs hidden traces")
    a, b, c = _triple(log, triple)
    cf = log.cf[:, [a, b, c]]
    code = (cf[:, 0] > 0) * 4 + (cf[:, 1] > 0) * 2 + (cf[:, 2] > 0) * 1
    rows = [np.bincount(code[(log.s1 == i) & (log.s2 == j)], minlength=8)
            for i, j in ((a, b), (b, c), (a, c))]
    return homogeneity_test(np.array(rows), "counterfactual patterns", alpha)


def singlet_symmetric(table: CountTable, pairs=None, atol=0.0):
    """True when same-sign and mixed-sign cells are pairwise equal per pair."""
    for key in pairs or table.pairs():
        c = table.counts.get(tuple(key))
        if c is None:
            continue
        total = c.sum()
        if abs(c[0] - c[3]) > atol * total or abs(c[1] - c[2]) > atol * total:
            return False
    return True


__all__ = [
    "BiReport", "Verdict", "bi_count_form", "bi_expectation_form",
    "DecompositionAudit", "AuditRefused", "decomposition_audit",
    "tilde_inequality_check", "ñ_inequality_check", "place_selection_invariance", "compare_logs",
    "counterfactual_homogeneity", "homogeneity_test", "partition_labels",
    "singlet_symmetric", "CELLS",
]
