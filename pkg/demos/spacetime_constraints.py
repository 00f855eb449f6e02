"""Light-cone bookkeeping for setting choices and measurements."""
from dataclasses import replace
from pathlib import Path

from eprbell import (
    SpacetimeEvent, audit_geometry, delayed_choice_deadline, interval, is_spacelike,
    preset_separation_bound, qm_locality_window,
)
from eprbell.engine import load_config
from eprbell.spacetime import boost

a = SpacetimeEvent(0.0, (-6.5, 0, 0))
b = SpacetimeEvent(2e-8, (6.5, 0, 0))
print("interval", interval(a, b), "m^2  spacelike:", is_spacelike(a, b))
print("after a 0.6c boost:", interval(boost(a, 0.6), boost(b, 0.6)))

print("\nsetting deadline at 6.5 m:", delayed_choice_deadline(6.5), "s (published 4.44e-8)")
print("preset bound, 12000 s run:", preset_separation_bound(12000), "m (published 9.6e12)")
print("preset bound, 0.2 s cadence:", preset_separation_bound(0.2), "m (published 1.6e8)")
print("preset bound, 1 s:", preset_separation_bound(1), "m")
print("(tau_max, L_max) for 12000 s:", qm_locality_window(0, 12000))

configs = Path(__file__).parent / "configs"
for name in ("orsay_like.ini", "delayed_choice.ini"):
    cfg = load_config(configs / name)
    cfg = replace(cfg, M_total=20_000)
    print(f"\n--- {name}")
    print(audit_geometry(cfg).table())
