"""Single-replica experiments, observers and the replica ensemble driver."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np

from ..errors import ConditioningConflict, NotNearestNeighbor, RingTooSmall, WindowTooWide
from .core import (
    CLASS1, CLASS2, CLASS3, EventStream, RingState, SimConfig, evolve, init_stationary,
)

SEAM_BUFFER = 4


@dataclass
class TaggedTrack:
    times: np.ndarray
    positions: np.ndarray
    cls: str

    def __post_init__(self):
        if self.cls not in ("second", "third"):
            raise ValueError(f"class must be 'second' or 'third', got {self.cls!r}")


@dataclass
class PairTrack:
    """Third-class track ``A``, second-class track ``B`` and their contact time."""

    A: TaggedTrack
    B: TaggedTrack
    contact_time: np.ndarray

    @property
    def order(self) -> np.ndarray:
        """1 where A(t) < B(t)."""
        return (self.A.positions < self.B.positions).astype(np.int8)


@dataclass
class StationaryRecord:
    """Snapshots of the first-class occupancy and bond fluxes on the grid."""

    times: np.ndarray
    occ: np.ndarray
    flux: np.ndarray


def _check_seam(config: SimConfig, positions: np.ndarray, origin: int = 0) -> None:
    if config.periodic:
        return
    limit = config.ring_size // 2 - SEAM_BUFFER * config.law.R
    worst = int(np.max(np.abs(positions - origin))) if positions.size else 0
    if worst >= limit:
        raise RingTooSmall(
            f"tagged particle reached distance {worst} from its start on a ring of {config.ring_size}"
        )


def _insert(config: SimConfig, tagged: Sequence[tuple[int, int]]):
    constrained = {site % config.ring_size for site, _ in config.conditioning}
    for site, _ in tagged:
        if site % config.ring_size in constrained:
            raise ConditioningConflict(f"site {site} is both conditioned and holds a tagged particle")


def second_class_run(config: SimConfig, replica: int = 0) -> TaggedTrack:
    """Track of a single second-class particle started at the origin."""
    stream = EventStream(config.seed, replica)
    insert = [(0, CLASS2)]
    _insert(config, insert)
    state = init_stationary(config, stream, insert)
    idx = state.particle_at(0)
    rec = evolve(state, config.law, config.T, stream, grid=config.grid, tagged=[idx])
    pos = rec.track[:, 0].copy()
    _check_seam(config, pos)
    return TaggedTrack(times=rec.times, positions=pos, cls="second")


def three_class_run(config: SimConfig, replica: int = 0) -> PairTrack:
    """Third-class particle at 0 and second-class particle at 1 in a Bernoulli sea."""
    if not config.law.nearest_neighbor:
        raise NotNearestNeighbor(f"law {config.law.as_dict()} is not nearest-neighbour")
    stream = EventStream(config.seed, replica)
    insert = [(0, CLASS3), (1, CLASS2)]
    _insert(config, insert)
    state = init_stationary(config, stream, insert)
    a, b = state.particle_at(0), state.particle_at(1)
    rec = evolve(state, config.law, config.T, stream, grid=config.grid,
                 tagged=[a, b], pair=(a, b))
    A, B = rec.track[:, 0].copy(), rec.track[:, 1].copy()
    _check_seam(config, A)
    _check_seam(config, B, origin=1)
    return PairTrack(
        A=TaggedTrack(rec.times, A, "third"),
        B=TaggedTrack(rec.times, B, "second"),
        contact_time=rec.adjacency.copy(),
    )


def stationary_run(config: SimConfig, replica: int = 0) -> StationaryRecord:
    """Unconditioned first-class run with occupancy and flux snapshots.

    Time 0 is always sampled, so the initial configuration is available.
    """
    stream = EventStream(config.seed, replica)
    state = init_stationary(config, stream)
    grid = np.asarray(config.grid, dtype=float)
    if grid.size == 0 or grid[0] > 0.0:
        grid = np.concatenate([[0.0], grid])
    rec = evolve(state, config.law, config.T, stream, grid=grid, snapshots=True)
    return StationaryRecord(times=rec.times, occ=rec.occ, flux=rec.flux)


@dataclass
class HeightSamples:
    """Height profile h_t(x) = 2 N_t(origin) - M_t(x) and bond fluxes N_t(x).

    Arrays have shape ``(G, 2W+1)`` with column ``W + x`` holding site/bond
    ``x`` relative to the origin.
    """

    times: np.ndarray
    xs: np.ndarray
    h: np.ndarray
    N: np.ndarray
    eta: np.ndarray
    M: np.ndarray


def _block_sums(occ: np.ndarray, origin: int, W: int) -> np.ndarray:
    """M_t(x) for x in [-W, W] relative to ``origin`` (vectorised over time)."""
    L = occ.shape[1]
    spin = 2 * occ.astype(np.int64) - 1
    right = spin[:, (origin + np.arange(1, W + 1)) % L]
    left = spin[:, (origin - np.arange(0, W)) % L]  # sites origin, origin-1, ...
    M = np.zeros((occ.shape[0], 2 * W + 1), dtype=np.int64)
    M[:, W + 1:] = np.cumsum(right, axis=1)
    M[:, :W] = -np.cumsum(left, axis=1)[:, ::-1]
    return M


def height_observer(record: StationaryRecord, window: int, origin: int = 0) -> HeightSamples:
    """Height function on sites ``origin-window .. origin+window``."""
    L = record.occ.shape[1]
    if window >= L // 4:
        raise WindowTooWide(f"window {window} must stay below L/4 = {L // 4}")
    xs = np.arange(-window, window + 1)
    M = _block_sums(record.occ, origin, window)
    N = record.flux[:, (origin + xs) % L].astype(np.int64)
    h = 2 * N[:, [window]] - M
    eta = record.occ[:, (origin + xs) % L].astype(np.int64)
    return HeightSamples(times=record.times, xs=xs, h=h, N=N, eta=eta, M=M)


RUNS: dict[str, Callable] = {
    "second": second_class_run,
    "three": three_class_run,
    "stationary": stationary_run,
}


def _identity(x):
    return x


def _run_chunk(kind: str, config: SimConfig, reducer, replicas: Sequence[int]):
    run = RUNS[kind]
    return [reducer(run(config, r)) for r in replicas]


def run_ensemble(config: SimConfig, kind: str, replicas: int, threads: int = 1,
                 reducer: Callable | None = None, first: int = 0) -> list:
    """Run ``replicas`` independent replicas and return per-replica results in order.

    Replica ``r`` always uses the stream keyed by ``(config.seed, r)``, so the
    output does not depend on ``threads``.  ``reducer`` (a picklable function)
    shrinks each replica's result before it is collected.
    """
    reducer = reducer or _identity
    ids = list(range(first, first + replicas))
    if threads <= 1 or replicas < 2:
        return _run_chunk(kind, config, reducer, ids)
    n_chunks = min(len(ids), 4 * threads)
    size = math.ceil(len(ids) / n_chunks)
    chunks = [ids[i:i + size] for i in range(0, len(ids), size)]
    out: list = []
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(partial(_run_chunk, kind, config, reducer), chunks):
            out.extend(part)
    return out


def positions_of(tracks: Sequence[TaggedTrack]) -> np.ndarray:
    return np.stack([t.positions for t in tracks])
