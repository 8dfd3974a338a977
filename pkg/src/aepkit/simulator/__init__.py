"""Event-driven kinetic Monte Carlo for exclusion processes on a ring."""
from .core import (
    CLASS1, CLASS2, CLASS3, EMPTY, EventStream, RingState, SimConfig,
    advance, evolve, init_stationary, safe_ring_size,
)
from .runs import (
    HeightSamples, PairTrack, StationaryRecord, TaggedTrack, height_observer,
    positions_of, run_ensemble, second_class_run, stationary_run, three_class_run,
)
