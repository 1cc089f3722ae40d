"""Numba path-simulation kernels.

Randomness comes from counter-based splitmix64 streams keyed by
(seed, path index): path i starts its counter 2^32 increments after path
i-1, so paths never share draws and any path can be reproduced alone.
"""

import math

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_STRIDE = np.uint64((0x9E3779B97F4A7C15 << 32) & 0xFFFFFFFFFFFFFFFF)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _path_state(seed, idx):
    return np.uint64(seed) + np.uint64(idx) * _STRIDE


@njit(cache=True, inline="always")
def _next_u(s):
    """Advance the stream; uniform on (0, 1), never exactly 0 or 1."""
    s = s + _GAMMA
    z = s
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    z = z ^ (z >> np.uint64(31))
    return s, (np.float64(z >> np.uint64(11)) + 0.5) * _INV53


@njit(cache=True, inline="always")
def _next_normal_pair(s):
    s, u1 = _next_u(s)
    s, u2 = _next_u(s)
    r = math.sqrt(-2.0 * math.log(u1))
    a = 2.0 * math.pi * u2
    return s, r * math.cos(a), r * math.sin(a)


@njit(cache=True, inline="always")
def _interp(table, tlo, inv_h, x):
    pos = (x - tlo) * inv_h
    if pos < 0.0:
        pos = 0.0
    j = int(pos)
    if j > table.shape[0] - 2:
        j = table.shape[0] - 2
    frac = pos - j
    if frac > 1.0:
        frac = 1.0
    return table[j] * (1.0 - frac) + table[j + 1] * frac


# boundary codes: 0 clamp (unreachable finite end), 1 reflect, 2 restart guard


@njit(cache=True)
def sde_terminal(n_paths, seed, x0, lam, dt, t_over, horizon,
                 table, tlo, inv_h, glo, ghi, code_l, code_r):
    values = np.empty(n_paths)
    hits = np.zeros(n_paths, dtype=np.uint8)
    sqdt = math.sqrt(dt)
    for i in range(n_paths):
        s = _path_state(seed, i)
        s, u = _next_u(s)
        if t_over >= 0.0:
            t_end = t_over
        else:
            t_end = -math.log(u) / lam
            if t_end > horizon:
                t_end = horizon
        x = x0
        nfull = int(t_end / dt)
        rem = t_end - nfull * dt
        have_spare = False
        spare = 0.0
        for k in range(nfull + 1):
            if k == nfull:
                if rem <= 0.0:
                    break
                step = math.sqrt(rem)
            else:
                step = sqdt
            if have_spare:
                z = spare
                have_spare = False
            else:
                s, z, spare = _next_normal_pair(s)
                have_spare = True
            x = x + _interp(table, tlo, inv_h, x) * step * z
            if x < glo:
                if code_l == 1:
                    x = 2.0 * glo - x
                    if x > ghi:
                        x = ghi
                elif code_l == 2:
                    x = x0
                    hits[i] = 1
                else:
                    x = glo
            elif x > ghi:
                if code_r == 1:
                    x = 2.0 * ghi - x
                    if x < glo:
                        x = glo
                elif code_r == 2:
                    x = x0
                    hits[i] = 1
                else:
                    x = ghi
        values[i] = x
    return values, hits


@njit(cache=True)
def ctmc_terminal_kill(n_paths, seed, lam, qup, qdown, start_idx, guard_l, guard_r):
    """Terminal site with the exponential clock folded into a kill check.

    At each visit the chain dies before its next jump with probability
    lam / (lam + R); conditional on surviving it moves up with probability
    qup / R.  Competing independent exponentials make this exactly the law
    of the site occupied at an independent Exp(lam) time.
    """
    nv = qup.shape[0]
    out = np.empty(n_paths, dtype=np.int64)
    hits = np.zeros(n_paths, dtype=np.uint8)
    for i in range(n_paths):
        s = _path_state(seed, i)
        j = start_idx
        while True:
            rate = qup[j] + qdown[j]
            s, u = _next_u(s)
            v = u * (lam + rate)
            if v < lam:
                break
            if v - lam < qup[j]:
                j += 1
            else:
                j -= 1
            if guard_l and j == 0:
                j = start_idx
                hits[i] = 1
            elif guard_r and j == nv - 1:
                j = start_idx
                hits[i] = 1
        out[i] = j
    return out, hits


@njit(cache=True)
def ctmc_terminal_clock(n_paths, seed, lam, qup, qdown, start_idx,
                        guard_l, guard_r, t_over):
    """Terminal site with an explicit clock; supports a forced terminal time."""
    nv = qup.shape[0]
    out = np.empty(n_paths, dtype=np.int64)
    hits = np.zeros(n_paths, dtype=np.uint8)
    for i in range(n_paths):
        s = _path_state(seed, i)
        s, u = _next_u(s)
        t_end = t_over if t_over >= 0.0 else -math.log(u) / lam
        j = start_idx
        t = 0.0
        while True:
            rate = qup[j] + qdown[j]
            if rate <= 0.0:
                break
            s, u1 = _next_u(s)
            tau = -math.log(u1) / rate
            if t + tau >= t_end:
                break
            t += tau
            s, u2 = _next_u(s)
            if u2 * rate < qup[j]:
                j += 1
            else:
                j -= 1
            if guard_l and j == 0:
                j = start_idx
                hits[i] = 1
            elif guard_r and j == nv - 1:
                j = start_idx
                hits[i] = 1
        out[i] = j
    return out, hits


@njit(cache=True)
def ctmc_hitting(n_paths, seed, lam, qup, qdown, start_idx, level_idx, horizon):
    """Mean weight exp(-lam H) accumulated path by path; 0 past the horizon."""
    wts = np.zeros(n_paths)
    for i in range(n_paths):
        s = _path_state(seed, i)
        j = start_idx
        t = 0.0
        while True:
            rate = qup[j] + qdown[j]
            if rate <= 0.0:
                break
            s, u1 = _next_u(s)
            t += -math.log(u1) / rate
            if t >= horizon:
                break
            s, u2 = _next_u(s)
            if u2 * rate < qup[j]:
                j += 1
            else:
                j -= 1
            if j == level_idx:
                wts[i] = math.exp(-lam * t)
                break
    return wts


@njit(cache=True)
def sde_hitting(n_paths, seed, start, level, lam, dt, horizon,
                table, tlo, inv_h, glo, ghi, code_l, code_r):
    wts = np.zeros(n_paths)
    nsteps = int(horizon / dt)
    sqdt = math.sqrt(dt)
    for i in range(n_paths):
        s = _path_state(seed, i)
        x = start
        have_spare = False
        spare = 0.0
        for k in range(nsteps):
            if have_spare:
                z = spare
                have_spare = False
            else:
                s, z, spare = _next_normal_pair(s)
                have_spare = True
            sig = _interp(table, tlo, inv_h, x)
            xn = x + sig * sqdt * z
            d0 = x - level
            d1 = xn - level
            if d0 * d1 <= 0.0:
                denom = xn - x
                theta = 0.5 if denom == 0.0 else (level - x) / denom
                wts[i] = math.exp(-lam * (k + theta) * dt)
                break
            # Brownian bridge catches crossings between grid times; without
            # it the estimate is biased low by several standard errors
            arg = 2.0 * d0 * d1 / (sig * sig * dt)
            if arg < 30.0:
                s, u = _next_u(s)
                if u < math.exp(-arg):
                    wts[i] = math.exp(-lam * (k + 0.5) * dt)
                    break
            # any non-interior move folds back; restarts would corrupt H
            if xn < glo:
                xn = 2.0 * glo - xn if code_l != 0 else glo
                if xn > ghi:
                    xn = ghi
            elif xn > ghi:
                xn = 2.0 * ghi - xn if code_r != 0 else ghi
                if xn < glo:
                    xn = glo
            x = xn
    return wts
