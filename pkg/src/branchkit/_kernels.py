"""Jitted inner loops for the exact chain simulators and the reflected scheme.

Everything here is deliberately self-contained: kernels receive plain arrays
and scalars, own a private counter-seeded RNG (splitmix64-seeded
xoshiro256++), and return plain tuples.  Interaction functions enter only
through precomputed increment tables, so a single compiled kernel serves
every f.

Status codes returned by the chain kernels:
    0  clean (reached the time horizon, or absorbed at 0)
    1  event cap hit
    2  increment table too small (caller regrows and replays the same seed)
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_EVENT_CAP = 1
STATUS_TABLE_OVERFLOW = 2

_U64 = np.uint64
_DBL_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


# ---------------------------------------------------------------------------
# RNG primitives
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _splitmix64(state):
    state = (state + _U64(0x9E3779B97F4A7C15)) & _U64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _U64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _U64(0xFFFFFFFFFFFFFFFF)
    return state, z ^ (z >> _U64(31))


@njit(cache=True)
def _rng_init(seed):
    st = np.empty(4, dtype=np.uint64)
    acc = _U64(seed)
    for i in range(4):
        acc, z = _splitmix64(acc)
        st[i] = z
    return st


@njit(cache=True, inline="always")
def _next_u64(st):
    # xoshiro256++
    r0 = st[0] + st[3]
    result = (_U64((r0 << _U64(23)) | (r0 >> _U64(41))) + st[0]) & _U64(0xFFFFFFFFFFFFFFFF)
    t = st[1] << _U64(17)
    st[2] ^= st[0]
    st[3] ^= st[1]
    st[1] ^= st[2]
    st[0] ^= st[3]
    st[2] ^= t
    st[3] = _U64((st[3] << _U64(45)) | (st[3] >> _U64(19)))
    return result

@njit(cache=True, inline="always")
def _uniform(st):
    return np.float64(_next_u64(st) >> _U64(11)) * _DBL_INV_2_53


@njit(cache=True, inline="always")
def _exponential(st):
    u = _uniform(st)
    return -np.log(1.0 - u)


# ---------------------------------------------------------------------------
# single interacting chain
#
# state k >= 0, birth rate lam*k + scale*cpos[k], death rate
# mu*k + scale*cneg[k]; cpos/cneg are cumulative positive/negative parts of
# the interaction increments, cabs their sum.  0 is absorbing.
# ---------------------------------------------------------------------------

@njit(cache=True)
def chain_value_at(seed, k0, lam, mu, scale, cpos, cneg, cabs, t_end, max_events):
    """Run to t_end; returns (k, n_events, int k dr, int cabs[k] dr, status)."""
    st = _rng_init(seed)
    k = k0
    t = 0.0
    n = 0
    int_k = 0.0
    int_cabs = 0.0
    kmax = cpos.shape[0] - 1
    status = STATUS_OK
    while k > 0:
        b = lam * k + scale * cpos[k]
        d = mu * k + scale * cneg[k]
        tot = b + d
        if tot <= 0.0:
            break
        dt = _exponential(st) / tot
        if t + dt >= t_end:
            int_k += (t_end - t) * k
            int_cabs += (t_end - t) * cabs[k]
            t = t_end
            break
        int_k += dt * k
        int_cabs += dt * cabs[k]
        t = t + dt
        if _uniform(st) * tot < b:
            if k + 1 > kmax:
                status = STATUS_TABLE_OVERFLOW
                break
            k += 1
        else:
            k -= 1
        n += 1
        if n >= max_events:
            status = STATUS_EVENT_CAP
            break
    return k, n, int_k, int_cabs, status


@njit(cache=True)
def chain_path(seed, k0, lam, mu, scale, cpos, cneg, t_end, max_events,
               out_t, out_k):
    """Record every jump; returns (n_jumps, t_reached, status)."""
    st = _rng_init(seed)
    k = k0
    t = 0.0
    n = 0
    kmax = cpos.shape[0] - 1
    status = STATUS_OK
    while k > 0:
        b = lam * k + scale * cpos[k]
        d = mu * k + scale * cneg[k]
        tot = b + d
        if tot <= 0.0:
            break
        dt = _exponential(st) / tot
        if t + dt >= t_end:
            t = t_end
            break
        t = t + dt
        if _uniform(st) * tot < b:
            if k + 1 > kmax:
                status = STATUS_TABLE_OVERFLOW
                break
            k += 1
        else:
            k -= 1
        out_t[n] = t
        out_k[n] = k
        n += 1
        if n >= max_events:
            status = STATUS_EVENT_CAP
            break
    return n, t, status


# ---------------------------------------------------------------------------
# coupled pair (Z, V): four jump channels, V reads the interaction increments
# at offset Z, both components absorbing at 0, never jumping together
# ---------------------------------------------------------------------------

@njit(cache=True)
def coupled_value_at(seed, i0, j0, lam, mu, scale, cpos, cneg, t_end, max_events):
    """Returns (i, j, n_events, status)."""
    st = _rng_init(seed)
    i = i0
    j = j0
    t = 0.0
    n = 0
    kmax = cpos.shape[0] - 1
    status = STATUS_OK
    while True:
        bi = lam * i + scale * cpos[i]
        di = mu * i + scale * cneg[i]
        bj = lam * j + scale * (cpos[i + j] - cpos[i])
        dj = mu * j + scale * (cneg[i + j] - cneg[i])
        tot = bi + di + bj + dj
        if tot <= 0.0:
            break
        dt = _exponential(st) / tot
        if t + dt >= t_end:
            break
        t = t + dt
        u = _uniform(st) * tot
        if u < bi:
            i += 1
        elif u < bi + di:
            i -= 1
        elif u < bi + di + bj:
            j += 1
        else:
            j -= 1
        if i + j + 1 > kmax:
            status = STATUS_TABLE_OVERFLOW
            break
        n += 1
        if n >= max_events:
            status = STATUS_EVENT_CAP
            break
    return i, j, n, status


@njit(cache=True)
def coupled_path(seed, i0, j0, lam, mu, scale, cpos, cneg, t_end, max_events,
                 out_t, out_i, out_j):
    """Record both components at every jump; returns (n_jumps, status)."""
    st = _rng_init(seed)
    i = i0
    j = j0
    t = 0.0
    n = 0
    kmax = cpos.shape[0] - 1
    status = STATUS_OK
    while True:
        bi = lam * i + scale * cpos[i]
        di = mu * i + scale * cneg[i]
        bj = lam * j + scale * (cpos[i + j] - cpos[i])
        dj = mu * j + scale * (cneg[i + j] - cneg[i])
        tot = bi + di + bj + dj
        if tot <= 0.0:
            break
        dt = _exponential(st) / tot
        if t + dt >= t_end:
            break
        t = t + dt
        u = _uniform(st) * tot
        if u < bi:
            i += 1
        elif u < bi + di:
            i -= 1
        elif u < bi + di + bj:
            j += 1
        else:
            j -= 1
        out_t[n] = t
        out_i[n] = i
        out_j[n] = j
        if i + j + 1 > kmax:
            status = STATUS_TABLE_OVERFLOW
            n += 1
            break
        n += 1
        if n >= max_events:
            status = STATUS_EVENT_CAP
            break
    return n, status


# ---------------------------------------------------------------------------
# conditional increment process V given a frozen base path x(.)
#
# base_t[s] .. base_t[s+1] is the s-th constancy interval of the base path,
# with count base_k[s]; base_t must end with a sentinel > t_end.  Rates are
# piecewise constant between base jumps and own jumps, so exponential
# sampling segment by segment is exact.
# ---------------------------------------------------------------------------

@njit(cache=True)
def increment_value_at(seed, v0, lam, mu, scale, cpos, cneg,
                       base_t, base_k, t_end, max_events):
    """Returns (v, n_events, status)."""
    st = _rng_init(seed)
    v = v0
    t = 0.0
    n = 0
    seg = 0
    kmax = cpos.shape[0] - 1
    status = STATUS_OK
    while v > 0:
        while base_t[seg + 1] <= t:
            seg += 1
        x = base_k[seg]
        if x + v + 1 > kmax:
            status = STATUS_TABLE_OVERFLOW
            break
        b = lam * v + scale * (cpos[x + v] - cpos[x])
        d = mu * v + scale * (cneg[x + v] - cneg[x])
        tot = b + d
        seg_end = base_t[seg + 1]
        if seg_end > t_end:
            seg_end = t_end
        if tot <= 0.0:
            t = seg_end
            if t >= t_end:
                break
            seg += 1
            continue
        dt = _exponential(st) / tot
        if t + dt >= seg_end:
            # no event in this constancy interval; rates change, redraw
            t = seg_end
            if t >= t_end:
                break
            continue
        t = t + dt
        if _uniform(st) * tot < b:
            v += 1
        else:
            v -= 1
        n += 1
        if n >= max_events:
            status = STATUS_EVENT_CAP
            break
    return v, n, status


@njit(cache=True)
def increment_path(seed, v0, lam, mu, scale, cpos, cneg,
                   base_t, base_k, t_end, max_events, out_t, out_v):
    """Recorded variant of increment_value_at; returns (n_jumps, status)."""
    st = _rng_init(seed)
    v = v0
    t = 0.0
    n = 0
    seg = 0
    kmax = cpos.shape[0] - 1
    status = STATUS_OK
    while v > 0:
        while base_t[seg + 1] <= t:
            seg += 1
        x = base_k[seg]
        if x + v + 1 > kmax:
            status = STATUS_TABLE_OVERFLOW
            break
        b = lam * v + scale * (cpos[x + v] - cpos[x])
        d = mu * v + scale * (cneg[x + v] - cneg[x])
        tot = b + d
        seg_end = base_t[seg + 1]
        if seg_end > t_end:
            seg_end = t_end
        if tot <= 0.0:
            t = seg_end
            if t >= t_end:
                break
            seg += 1
            continue
        dt = _exponential(st) / tot
        if t + dt >= seg_end:
            t = seg_end
            if t >= t_end:
                break
            continue
        t = t + dt
        if _uniform(st) * tot < b:
            v += 1
        else:
            v -= 1
        out_t[n] = t
        out_v[n] = v
        n += 1
        if n >= max_events:
            status = STATUS_EVENT_CAP
            break
    return n, status


# ---------------------------------------------------------------------------
# reflected Brownian motion with local-time-dependent drift
#
# Mirror Euler step: H* = H + 0.5*f'(env(H) + L(H))*ds + sqrt(ds)*xi, then
# fold at 0 (and at K if K > 0).  The fold amount 2*max(0, -H*) estimates the
# Skorokhod reflection term, and `calib` converts its running sum into the
# occupation-density local time at 0 (calib = 2 for the convention used
# throughout: L_s(0) = lim (1/eps) int 1{H < eps}).
#
# Level occupation is a histogram with cell width dh; L(h) for the drift is
# the linearly interpolated cell density at h.
#
# Drift kinds: 0 none, 1 constant p1, 2 affine p1 - 2*p2*v, 3 table lookup
# on a uniform grid fp_grid with spacing fp_dv (clamped at both ends).
# ---------------------------------------------------------------------------

RK_OK = 0
RK_SCAP = 1          # step budget exhausted before the last target
RK_LEVEL_OVERFLOW = 2  # path left the preallocated level range


@njit(cache=True, inline="always")
def _density_at(occ, n_levels, dh, h):
    pos = h / dh - 0.5
    if pos <= 0.0:
        return occ[0] / dh
    j = int(pos)
    if j + 1 >= n_levels:
        return occ[n_levels - 1] / dh
    w = pos - j
    return ((1.0 - w) * occ[j] + w * occ[j + 1]) / dh


@njit(cache=True, inline="always")
def _table_at(tab, dv, v):
    if v <= 0.0:
        return tab[0]
    pos = v / dv
    j = int(pos)
    if j + 1 >= tab.shape[0]:
        return tab[tab.shape[0] - 1]
    w = pos - j
    return (1.0 - w) * tab[j] + w * tab[j + 1]


@njit(cache=True)
def rk_path(seed, ds, dh, x_targets, kind, p1, p2, fp_grid, fp_dv,
            env_grid, env_dv, use_env, K, calib, s_cap_steps, n_levels,
            pair_sum, out_fields, out_s, out_reached, out_zlt):
    """Simulate H until local time at 0 exceeds every target (or budget).

    out_fields[m] receives the occupation histogram (in time units, divide
    by dh for densities) snapshotted when target m is crossed; out_s[m] the
    crossing time; out_reached[m] 1/0; out_zlt[m] the zero local time at the
    crossing.  Returns
    (n_steps, zero_local_time, ceiling_local_time, max_height, status).
    """
    st = _rng_init(seed)
    sqrt_ds = np.sqrt(ds)
    occ = np.zeros(n_levels)
    h = 0.0
    zlt = 0.0
    klt = 0.0
    max_h = 0.0
    n_targets = x_targets.shape[0]
    tgt = 0
    steps = 0
    status = RK_OK
    have_spare = False
    spare = 0.0
    while tgt < n_targets:
        if steps >= s_cap_steps:
            status = RK_SCAP
            break
        # one standard normal (polar method, spare cached)
        if have_spare:
            g = spare
            have_spare = False
        else:
            while True:
                v1 = 2.0 * _uniform(st) - 1.0
                v2 = 2.0 * _uniform(st) - 1.0
                rsq = v1 * v1 + v2 * v2
                if 0.0 < rsq < 1.0:
                    fac = np.sqrt(-2.0 * np.log(rsq) / rsq)
                    g = v1 * fac
                    spare = v2 * fac
                    have_spare = True
                    break
        if pair_sum:
            if have_spare:
                g2 = spare
                have_spare = False
            else:
                while True:
                    v1 = 2.0 * _uniform(st) - 1.0
                    v2 = 2.0 * _uniform(st) - 1.0
                    rsq = v1 * v1 + v2 * v2
                    if 0.0 < rsq < 1.0:
                        fac = np.sqrt(-2.0 * np.log(rsq) / rsq)
                        g2 = v1 * fac
                        spare = v2 * fac
                        have_spare = True
                        break
            g = (g + g2) * 0.7071067811865476

        if kind == 0:
            a = 0.0
        else:
            v = _density_at(occ, n_levels, dh, h)
            if use_env:
                v += _table_at(env_grid, env_dv, h)
            if kind == 1:
                a = 0.5 * p1
            elif kind == 2:
                a = 0.5 * (p1 - 2.0 * p2 * v)
            else:
                a = 0.5 * _table_at(fp_grid, fp_dv, v)

        hstar = h + a * ds + sqrt_ds * g
        if hstar < 0.0:
            zlt += calib * 2.0 * (-hstar)
            hstar = -hstar
        if K > 0.0 and hstar > K:
            klt += calib * 2.0 * (hstar - K)
            hstar = 2.0 * K - hstar
            if hstar < 0.0:  # pathological double fold, step >> K
                zlt += calib * 2.0 * (-hstar)
                hstar = -hstar
        h = hstar
        if h > max_h:
            max_h = h
        j = int(h / dh)
        if j >= n_levels:
            status = RK_LEVEL_OVERFLOW
            break
        occ[j] += ds
        steps += 1
        while tgt < n_targets and zlt > x_targets[tgt]:
            for q in range(n_levels):
                out_fields[tgt, q] = occ[q]
            out_s[tgt] = steps * ds
            out_reached[tgt] = 1
            out_zlt[tgt] = zlt
            tgt += 1
    return steps, zlt, klt, max_h, status


@njit(cache=True)
def rk_path_record(seed, ds, dh, x_target, kind, p1, p2, fp_grid, fp_dv,
                   env_grid, env_dv, use_env, K, calib, s_cap_steps, n_levels,
                   out_h):
    """Like rk_path with a single target, recording H after every step.

    Returns (n_steps, s_x, reached, status); out_h[:n_steps] holds the path.
    """
    st = _rng_init(seed)
    sqrt_ds = np.sqrt(ds)
    occ = np.zeros(n_levels)
    h = 0.0
    zlt = 0.0
    steps = 0
    status = RK_OK
    s_x = -1.0
    reached = 0
    have_spare = False
    spare = 0.0
    cap = min(s_cap_steps, out_h.shape[0])
    while True:
        if steps >= cap:
            status = RK_SCAP
            break
        if have_spare:
            g = spare
            have_spare = False
        else:
            while True:
                v1 = 2.0 * _uniform(st) - 1.0
                v2 = 2.0 * _uniform(st) - 1.0
                rsq = v1 * v1 + v2 * v2
                if 0.0 < rsq < 1.0:
                    fac = np.sqrt(-2.0 * np.log(rsq) / rsq)
                    g = v1 * fac
                    spare = v2 * fac
                    have_spare = True
                    break
        if kind == 0:
            a = 0.0
        else:
            v = _density_at(occ, n_levels, dh, h)
            if use_env:
                v += _table_at(env_grid, env_dv, h)
            if kind == 1:
                a = 0.5 * p1
            elif kind == 2:
                a = 0.5 * (p1 - 2.0 * p2 * v)
            else:
                a = 0.5 * _table_at(fp_grid, fp_dv, v)
        hstar = h + a * ds + sqrt_ds * g
        if hstar < 0.0:
            zlt += calib * 2.0 * (-hstar)
            hstar = -hstar
        if K > 0.0 and hstar > K:
            hstar = 2.0 * K - hstar
            if hstar < 0.0:
                zlt += calib * 2.0 * (-hstar)
                hstar = -hstar
        h = hstar
        j = int(h / dh)
        if j >= n_levels:
            status = RK_LEVEL_OVERFLOW
            break
        occ[j] += ds
        out_h[steps] = h
        steps += 1
        if zlt > x_target:
            s_x = steps * ds
            reached = 1
            break
    return steps, s_x, reached, status
