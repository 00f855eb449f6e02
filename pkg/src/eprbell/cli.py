"""Command-line entry point: ``eprbell simulate | audit | feasibility | constraints``."""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .core import ConfigurationError, read_records_csv, tally, write_records_csv, write_summary_json
from .engine import load_config, run
from .feasibility import (
    binarize_rows, conspiratorial_survey, feasible, read_survey_csv, survey_inequality,
    survey_selected,
)
from .inequality import (
    AuditRefused, bi_count_form, bi_expectation_form, counterfactual_homogeneity,
    decomposition_audit, place_selection_invariance, tilde_inequality_check,
)
from .spacetime import audit_geometry


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj)}")


def _clean(obj):
    # JSON has no NaN/inf
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj):
    return json.dumps(_clean(json.loads(json.dumps(obj, default=_json_default))), indent=2)


def cmd_simulate(args):
    config = load_config(args.config)
    result = run(config, workers=args.workers, out=args.out)
    write_records_csv(result.log, args.out)
    if args.summary:
        write_summary_json(tally(result.log), args.summary)
    print(f"wrote {len(result.log)} records to {args.out} "
          f"in {result.wallclock['seconds']:.2f} s")
    return 0


def audit_report(log, triple=(0, 1, 2), partition="parity"):
    table = tally(log)
    report = {
        "summary": table.to_dict(),
        "bi_count_form": bi_count_form(table, triple).to_dict(),
        "bi_expectation_form": bi_expectation_form(table, triple).to_dict(),
        "place_selection": {k: v.to_dict() for k, v in
                            place_selection_invariance(log, partition).items()},
    }
    try:
        audit = decomposition_audit(log, triple)
    except AuditRefused as exc:
        report["decomposition"] = {"refused": str(exc)}
    else:
        report["decomposition"] = audit.to_dict()
        report["tilde_inequality"] = tilde_inequality_check(audit).to_dict()
        report["counterfactual_homogeneity"] = counterfactual_homogeneity(log, triple).to_dict()
    return report


def cmd_audit(args):
    log = read_records_csv(args.records)
    triple = tuple(args.triple.split(",")) if args.triple else (0, 1, 2)
    report = audit_report(log, triple, args.partition)
    text = dumps(report)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    c = report["bi_count_form"]
    print(f"count form: lhs={c['lhs']} rhs={c['rhs']} verdict={c['verdict']}")
    return 0


def cmd_feasibility(args):
    if args.mode == "survey":
        if not args.rows:
            raise ConfigurationError("survey mode needs --rows")
        rows = read_survey_csv(args.rows)
        x = binarize_rows(rows)
        out = {"complete_rows": survey_inequality(x).to_dict()}
        if args.conspiratorial:
            rng = np.random.default_rng(args.seed)
            sample, groups = conspiratorial_survey(x, args.conspiratorial, rng)
            out["selected_sampling"] = survey_selected(sample, groups).to_dict()
        print(dumps(out))
        return 0
    if not args.targets:
        raise ConfigurationError("feasibility needs --targets")
    with open(args.targets) as fh:
        targets = json.load(fh)
    res = feasible(targets, tol=args.tol, symmetric=not args.asymmetric)
    out = {"feasible": res.feasible, "symmetric": res.symmetric}
    if res.witness is not None:
        out["witness"] = list(res.witness.weights)
    if res.certificate is not None:
        out["certificate"] = {"coefficients": list(res.certificate.coefficients),
                              "constant": res.certificate.constant,
                              "name": res.certificate.name}
    print(dumps(out))
    return 0


def cmd_constraints(args):
    config = load_config(args.config)
    report = audit_geometry(config)
    print(dumps(report.to_dict()))
    print()
    print(report.table())
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="eprbell", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run an experiment and write the record log")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--summary")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("audit", help="evaluate inequalities and the decomposition audit")
    a.add_argument("--records", required=True)
    a.add_argument("--report")
    a.add_argument("--triple", help="three labels, e.g. A,B,C")
    a.add_argument("--partition", default="parity",
                   help="parity, halves, blocks:k or phase:k")
    a.set_defaults(func=cmd_audit)

    f = sub.add_parser("feasibility", help="joint-distribution feasibility of pair statistics")
    f.add_argument("mode", nargs="?", choices=["survey"], default=None)
    f.add_argument("--targets", help="JSON with ab, bc, ac frequencies")
    f.add_argument("--tol", type=float, default=1e-6)
    f.add_argument("--asymmetric", action="store_true",
                   help="match only n(alpha+;beta+), not the reversed ordering")
    f.add_argument("--rows", help="survey CSV with height, eyes, gender columns")
    f.add_argument("--conspiratorial", type=int, default=0, metavar="N",
                   help="also run selection-correlated two-question sampling of N slots")
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_feasibility)

    c = sub.add_parser("constraints", help="spacetime locality constraints for a config")
    c.add_argument("--config", required=True)
    c.set_defaults(func=cmd_constraints)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, AuditRefused, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
