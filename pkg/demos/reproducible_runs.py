"""Command-line workflow and thread-count independence.

Equivalent shell session::

    eprbell simulate --config demos/configs/conspiratorial.ini --out run.csv --summary run.json
    eprbell audit --records run.csv --report audit.json
    eprbell constraints --config demos/configs/orsay_like.ini
"""
import hashlib
import json
import tempfile
from pathlib import Path

from eprbell.cli import main

config = Path(__file__).parent / "configs" / "conspiratorial.ini"
with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    digests = []
    for workers in (1, 2, 8):
        out = tmp / f"run{workers}.csv"
        main(["simulate", "--config", str(config), "--out", str(out),
              "--summary", str(tmp / "summary.json"), "--workers", str(workers)])
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest()[:16])
    print("sha256 prefixes by worker count:", digests)

    main(["audit", "--records", str(tmp / "run1.csv"), "--report", str(tmp / "audit.json")])
    audit = json.loads((tmp / "audit.json").read_text())
    print("bracket residual:", round(audit["decomposition"]["bracket_residual"], 4),
          " tilde inequality:", audit["tilde_inequality"]["verdict"])
