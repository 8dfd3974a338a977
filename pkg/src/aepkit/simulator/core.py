"""Ring configurations, seeded event streams and the ``advance`` entry point."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from ..errors import ConditioningConflict, ConfigError, RingTooSmall
from ..model import Density, JumpLaw
from . import kernel

EMPTY, CLASS1, CLASS2, CLASS3 = 0, 1, 2, 3

CHUNK = 1 << 17  # largest refill; refills start small and double up to this size
FIRST_CHUNK = 1 << 12

OBSERVERS = frozenset({"track", "current", "height", "occupancy"})


def safe_ring_size(law: JumpLaw, T: float) -> int:
    """Smallest ring that keeps the light cone of a horizon-T run from wrapping."""
    return 2 * math.ceil(law.R * (T + 10.0 * math.sqrt(T + 1.0))) + 200


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one Monte Carlo experiment.

    ``L=None`` selects :func:`safe_ring_size`.  An explicit ``L`` below the
    safe size is only accepted with ``periodic=True``, meaning the finite
    ring itself is the object of study (oracle comparisons), not an
    approximation of Z.
    """

    law: JumpLaw
    rho: Density
    T: float
    seed: int
    L: int | None = None
    grid: tuple[float, ...] = ()
    observers: frozenset[str] = frozenset({"track"})
    conditioning: tuple[tuple[int, int], ...] = ()
    periodic: bool = False

    def __post_init__(self):
        if not (self.T >= 0 and math.isfinite(self.T)):
            raise ConfigError(f"horizon T={self.T!r} must be finite and >= 0")
        unknown = set(self.observers) - OBSERVERS
        if unknown:
            raise ConfigError(f"unknown observers {sorted(unknown)}")
        grid = tuple(float(t) for t in (self.grid or (self.T,)))
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise ConfigError("time grid must be sorted")
        if grid and (grid[0] < 0 or grid[-1] > self.T):
            raise ConfigError("time grid must lie in [0, T]")
        object.__setattr__(self, "grid", grid)
        seen = set()
        for site, val in self.conditioning:
            if val not in (0, 1):
                raise ConfigError(f"conditioning value at site {site} must be 0 or 1")
            if site in seen:
                raise ConditioningConflict(f"site {site} constrained twice")
            seen.add(site)
        L = self.ring_size
        if L % 2 or L < 2:
            raise ConfigError(f"ring size L={L} must be an even positive integer")
        if not self.periodic and L <= safe_ring_size(self.law, self.T):
            raise RingTooSmall(
                f"L={L} <= safe ring size {safe_ring_size(self.law, self.T)} for T={self.T}"
            )

    @property
    def ring_size(self) -> int:
        if self.L is None:
            # strict inequality L > safe size, kept even
            return safe_ring_size(self.law, self.T) + 2
        return int(self.L)

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


class EventStream:
    """Uniform random numbers from a counter-based Philox generator.

    One independent stream per replica, keyed by ``(seed, replica)`` through
    :class:`numpy.random.SeedSequence`.  The stream is buffered; the buffer
    position travels with the object, so consecutive ``advance`` calls keep
    drawing from where the previous one stopped.
    """

    def __init__(self, seed: int, replica: int = 0):
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replica),))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self.buf = np.empty(0)
        self.pos = 0
        self._next = FIRST_CHUNK

    def uniforms(self, n: int) -> np.ndarray:
        """Draw ``n`` uniforms outside of the event buffer (initial data)."""
        if self.pos < self.buf.shape[0]:
            take = min(n, self.buf.shape[0] - self.pos)
            head = self.buf[self.pos:self.pos + take]
            self.pos += take
            if take == n:
                return head.copy()
            return np.concatenate([head, self._gen.random(n - take)])
        return self._gen.random(n)

    def refill(self) -> None:
        # Philox output is a single sequence, so the refill size never changes
        # which numbers are drawn, only how many are buffered at once.
        rest = self.buf[self.pos:]
        self.buf = np.concatenate([rest, self._gen.random(self._next)])
        self._next = min(2 * self._next, CHUNK)
        self.pos = 0


@dataclass
class RingState:
    """Occupancy of a ring of ``L`` sites together with its particle table.

    ``flux[x]`` is the net number of first-class crossings of the bond
    ``(x, x+1)`` since time 0; for totally asymmetric laws it only grows.
    ``upos`` are unwrapped particle positions.
    """

    sites: np.ndarray
    flux: np.ndarray
    time: float = 0.0
    pidx: np.ndarray = field(default=None, repr=False)
    psite: np.ndarray = field(default=None, repr=False)
    upos: np.ndarray = field(default=None, repr=False)
    pclass: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.pidx is None:
            self._index()

    def _index(self) -> None:
        L = self.sites.shape[0]
        occupied = np.flatnonzero(self.sites)
        self.psite = occupied.astype(np.int64)
        self.upos = occupied.astype(np.int64)
        self.pclass = self.sites[occupied].astype(np.int8)
        self.pidx = np.full(L, -1, dtype=np.int64)
        self.pidx[occupied] = np.arange(occupied.shape[0])

    @property
    def L(self) -> int:
        return self.sites.shape[0]

    def counts(self) -> dict[int, int]:
        return {c: int(np.count_nonzero(self.sites == c)) for c in (CLASS1, CLASS2, CLASS3)}

    def eta(self) -> np.ndarray:
        """First-class occupation variables."""
        return (self.sites == CLASS1).astype(np.int8)

    def particle_at(self, site: int) -> int:
        return int(self.pidx[site % self.L])

    def copy(self) -> "RingState":
        return RingState(
            sites=self.sites.copy(), flux=self.flux.copy(), time=self.time,
            pidx=self.pidx.copy(), psite=self.psite.copy(),
            upos=self.upos.copy(), pclass=self.pclass.copy(),
        )


def init_stationary(config: SimConfig, stream: EventStream,
                    insert: Iterable[tuple[int, int]] = ()) -> RingState:
    """Bernoulli(rho) first-class configuration, then conditioning, then insertions.

    ``insert`` holds ``(site, class)`` pairs placed by the caller (tagged
    second- and third-class particles); sites are taken mod L.
    """
    L = config.ring_size
    draws = stream.uniforms(L)
    sites = np.where(draws < config.rho.rho, CLASS1, EMPTY).astype(np.int8)
    for site, val in config.conditioning:
        sites[site % L] = CLASS1 if val else EMPTY
    for site, cls in insert:
        sites[site % L] = cls
    return RingState(sites=sites, flux=np.zeros(L, dtype=np.int64))


def _law_arrays(law: JumpLaw) -> tuple[np.ndarray, np.ndarray]:
    z = np.array(law.offsets, dtype=np.int64)
    cum = np.cumsum(np.array(law.probs, dtype=np.float64))
    cum[-1] = 1.0
    return z, cum


@dataclass
class Recording:
    times: np.ndarray
    track: np.ndarray
    adjacency: np.ndarray
    occ: np.ndarray | None
    flux: np.ndarray | None
    n_events: int


def evolve(state: RingState, law: JumpLaw, until: float, stream: EventStream,
           grid: Sequence[float] = (), tagged: Sequence[int] = (),
           pair: tuple[int, int] | None = None, snapshots: bool = False) -> Recording:
    """Run the chain in place from ``state.time`` to ``until``, sampling on ``grid``.

    ``tagged`` are particle indices whose unwrapped positions are recorded;
    ``pair`` accumulates the time two tagged particles spend at distance 1.
    """
    if until < state.time:
        raise ConfigError(f"until={until} precedes current time {state.time}")
    grid_arr = np.asarray(grid, dtype=np.float64)
    G = grid_arr.shape[0]
    tag = np.asarray(tagged, dtype=np.int64)
    rec_track = np.zeros((G, tag.shape[0]), dtype=np.int64)
    rec_adj = np.zeros(G, dtype=np.float64)
    L = state.L
    if snapshots:
        rec_occ = np.zeros((G, L), dtype=np.int8)
        rec_flux = np.zeros((G, L), dtype=np.int64)
    else:
        rec_occ = np.zeros((0, 0), dtype=np.int8)
        rec_flux = np.zeros((0, 0), dtype=np.int64)
    law_z, law_cum = _law_arrays(law)
    pa, pb = pair if pair is not None else (-1, -1)

    t, g, adj, total = state.time, 0, 0.0, 0
    while True:
        status, t, stream.pos, g, adj, n_ev = kernel.run_events(
            state.sites, state.pidx, state.psite, state.upos, state.pclass, state.flux,
            t, float(until), law_z, law_cum, stream.buf, stream.pos,
            grid_arr, g, tag, pa, pb, adj,
            rec_track, rec_adj, rec_occ, rec_flux, snapshots,
        )
        total += n_ev
        if status == kernel.DONE:
            break
        stream.refill()
    state.time = float(until)
    return Recording(
        times=grid_arr, track=rec_track, adjacency=rec_adj,
        occ=rec_occ if snapshots else None, flux=rec_flux if snapshots else None,
        n_events=total,
    )


def advance(state: RingState, law: JumpLaw, until: float, stream: EventStream) -> RingState:
    """Exact continuous-time evolution of ``state`` up to time ``until``.

    Returns a new state; the input is left untouched.  The pending event that
    would fall after ``until`` is discarded, which is exact by memorylessness.
    """
    new = state.copy()
    evolve(new, law, until, stream)
    return new
