"""Simulation and audit tools for EPR-Bohm spin-correlation experiments."""
from .core import (
    C_LIGHT, ConfigurationError, CountTable, Direction, HiddenTrace, Outcome,
    PairRecord, RecordLog, read_records_csv, relative_angle, tally, write_records_csv,
)
from .engine import ExperimentConfig, Geometry, ScheduleSpec, generate_schedule, run
from .feasibility import AtomDistribution, feasible, implied_pairwise, set_identity_check
from .hidden import Density, DeterministicUniform, SelectionCorrelated, StochasticIndependent
from .inequality import (
    bi_count_form, bi_expectation_form, decomposition_audit, place_selection_invariance,
    tilde_inequality_check,
)
from .singlet import qm_bi_margin, singlet_joint, singlet_sample
from .spacetime import (
    SpacetimeEvent, audit_geometry, delayed_choice_deadline, interval, is_spacelike,
    preset_separation_bound, qm_locality_window,
)

__version__ = "0.1.0"
