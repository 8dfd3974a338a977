"""Compiled event loop for the multi-class exclusion process on a ring.

Site classes: 0 empty, 1 first class, 2 second class, 3 third class.  A
mover of class ``c`` jumping onto a site of class ``c2 > c`` (empty counts as
the largest class) exchanges places with it; otherwise the jump is
suppressed.

Every event consumes exactly two uniforms from the buffer: one for the
waiting time of the global clock (rate = number of particles) and one for
both the particle pick and the displacement.  The loop stops with
``NEED_MORE`` when fewer than two uniforms remain, so results never depend on
the buffer chunk size.
"""
import numpy as np
from numba import njit

DONE = 0
NEED_MORE = 1


@njit(cache=True)
def _record(g, occ, upos, flux, tagged, adj, rec_track, rec_adj, rec_occ, rec_flux, snap):
    for k in range(tagged.shape[0]):
        rec_track[g, k] = upos[tagged[k]]
    rec_adj[g] = adj
    if snap:
        L = occ.shape[0]
        for x in range(L):
            rec_occ[g, x] = 1 if occ[x] == 1 else 0
            rec_flux[g, x] = flux[x]


@njit(cache=True)
def run_events(
    occ, pidx, psite, upos, pclass, flux,
    t_start, t_end,
    law_z, law_cum,
    u, u_pos,
    grid, g_start,
    tagged, pair_a, pair_b, adj_start,
    rec_track, rec_adj, rec_occ, rec_flux, snap,
):
    """Advance the ring from ``t_start`` towards ``t_end``.

    Returns ``(status, t, u_pos, g, adj, n_events)``.  On ``NEED_MORE`` the
    state arrays are consistent at time ``t`` and the call can be resumed
    after refilling ``u``.
    """
    L = occ.shape[0]
    n = upos.shape[0]
    t = t_start
    g = g_start
    G = grid.shape[0]
    adj = adj_start
    n_events = 0
    m = law_z.shape[0]
    track_pair = pair_a >= 0 and pair_b >= 0

    while True:
        adjacent = False
        if track_pair:
            d = upos[pair_a] - upos[pair_b]
            adjacent = d == 1 or d == -1
        if n == 0:
            while g < G and grid[g] <= t_end:
                _record(g, occ, upos, flux, tagged, adj, rec_track, rec_adj, rec_occ, rec_flux, snap)
                g += 1
            return DONE, t_end, u_pos, g, adj, n_events
        if u_pos + 2 > u.shape[0]:
            return NEED_MORE, t, u_pos, g, adj, n_events

        dt = -np.log(1.0 - u[u_pos]) / n
        v = u[u_pos + 1] * n
        u_pos += 2
        t_new = t + dt

        while g < G and grid[g] < t_new and grid[g] <= t_end:
            a_g = adj
            if adjacent:
                a_g = adj + (grid[g] - t)
            _record(g, occ, upos, flux, tagged, a_g, rec_track, rec_adj, rec_occ, rec_flux, snap)
            g += 1

        if t_new > t_end:
            if adjacent:
                adj += t_end - t
            return DONE, t_end, u_pos, g, adj, n_events
        if adjacent:
            adj += dt
        t = t_new
        n_events += 1

        i = int(v)
        if i >= n:
            i = n - 1
        frac = v - i
        j = 0
        while j < m - 1 and law_cum[j] <= frac:
            j += 1
        z = law_z[j]

        s = psite[i]
        target = s + z
        if target >= L:
            target -= L
        elif target < 0:
            target += L
        c = pclass[i]
        oc = occ[target]
        if oc == 0:
            occ[s] = 0
            pidx[s] = -1
            occ[target] = c
            pidx[target] = i
            psite[i] = target
            upos[i] += z
        elif oc > c:
            k = pidx[target]
            occ[s] = oc
            pidx[s] = k
            psite[k] = s
            upos[k] -= z
            occ[target] = c
            pidx[target] = i
            psite[i] = target
            upos[i] += z
        else:
            continue

        if c == 1:
            if z > 0:
                for y in range(z):
                    b = s + y
                    if b >= L:
                        b -= L
                    flux[b] += 1
            else:
                for y in range(-z):
                    b = s - 1 - y
                    if b < 0:
                        b += L
                    flux[b] -= 1
