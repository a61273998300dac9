"""Hot trajectory-sampling loops.

Compiled with numba's @njit when available; setting JUMPLAB_DISABLE_NUMBA=1
(or having no numba installed) runs the identical source as plain Python on
numpy arrays.  Every function here is deterministic given its inputs; all
randomness arrives through the pre-drawn `uniforms` array.

State vectors stand in for the rank-1 projectors they generate: the no-jump
projector flow dP/dt = P⊥ L[P] P + P L[P] P⊥ is equivalent to
dpsi/dt = (L[P] - <psi|L[P]|psi>) psi on unit vectors, and renormalizing psi
is exactly the rank-1 retraction of the corresponding matrix iterate.
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("JUMPLAB_DISABLE_NUMBA", "0").strip().lower()
NUMBA_ENABLED = _flag not in ("1", "true", "yes")
if NUMBA_ENABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    def _jit(func):
        return numba.njit(func, cache=True, nogil=True)
else:
    def _jit(func):
        return func

STATUS_OK = 0
STATUS_NEED_DRAWS = 1

# absorbing-state detection: state is exactly stationary and silent
_STATIONARY_RATE = 1e-15
_STATIONARY_DRIFT = 1e-14


@_jit
def _nd_rhs(e, ti, tj, tw, psi, out):
    """Tangent flow of the normalized state plus its instantaneous jump rate.

    Writes dpsi into `out` and returns the total jump rate; `psi` need not be
    normalized (the flow of the underlying projector only sees psi/|psi|).
    """
    n = psi.shape[0]
    nrm2 = 0.0
    for k in range(n):
        nrm2 += psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
    s = 1.0 / np.sqrt(nrm2)
    eavg = 0.0
    for k in range(n):
        p = (psi[k].real * psi[k].real + psi[k].imag * psi[k].imag) / nrm2
        eavg += e[k] * p
    # u = L[P] psi_hat, built in `out`
    for k in range(n):
        out[k] = -1j * (e[k] - eavg) * (psi[k] * s)
    for t in range(ti.shape[0]):
        i = ti[t]
        j = tj[t]
        w = tw[t]
        pj = (psi[j].real * psi[j].real + psi[j].imag * psi[j].imag) / nrm2
        out[i] += w * pj * (psi[i] * s)
        for k in range(n):
            out[k] -= 0.5 * w * pj * (psi[k] * s)
        out[j] -= 0.5 * w * (psi[j] * s)
    # lam = -<psi_hat|u>;  dpsi = u + lam * psi_hat
    lam = 0.0
    for k in range(n):
        lam -= (np.conj(psi[k] * s) * out[k]).real
    for k in range(n):
        out[k] += lam * (psi[k] * s)
    if lam < 0.0:
        lam = 0.0
    return lam


@_jit
def _nd_rk4(e, ti, tj, tw, psi, h, out, k1, k2, k3, k4, tmp):
    """One RK4 step of the joint (state, accumulated hazard) system.

    Writes the (unnormalized) end state into `out`, returns the hazard
    increment over the step.
    """
    n = psi.shape[0]
    l1 = _nd_rhs(e, ti, tj, tw, psi, k1)
    for k in range(n):
        tmp[k] = psi[k] + 0.5 * h * k1[k]
    l2 = _nd_rhs(e, ti, tj, tw, tmp, k2)
    for k in range(n):
        tmp[k] = psi[k] + 0.5 * h * k2[k]
    l3 = _nd_rhs(e, ti, tj, tw, tmp, k3)
    for k in range(n):
        tmp[k] = psi[k] + h * k3[k]
    l4 = _nd_rhs(e, ti, tj, tw, tmp, k4)
    for k in range(n):
        out[k] = psi[k] + (h / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
    return (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4)


@_jit
def _normalize(psi):
    n = psi.shape[0]
    nrm2 = 0.0
    for k in range(n):
        nrm2 += psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
    s = 1.0 / np.sqrt(nrm2)
    for k in range(n):
        psi[k] *= s


@_jit
def _nd_spectrum(ti, tj, tw, psi):
    """Jump channels at a unit state: descending rates and orthonormal targets.

    The rate matrix restricted to the orthogonal complement of psi is built
    in an explicit orthonormal basis of that complement, so the channel
    states are exactly orthogonal to psi.
    """
    n = psi.shape[0]
    # R = sum_T w |psi_j|^2 c_i c_i†  with c_i = P⊥ e_i
    r = np.zeros((n, n), dtype=np.complex128)
    c = np.zeros(n, dtype=np.complex128)
    for t in range(ti.shape[0]):
        i = ti[t]
        j = tj[t]
        w = tw[t] * (psi[j].real * psi[j].real + psi[j].imag * psi[j].imag)
        if w == 0.0:
            continue
        for k in range(n):
            c[k] = -np.conj(psi[i]) * psi[k]
        c[i] += 1.0
        for a in range(n):
            for b in range(n):
                r[a, b] += w * c[a] * np.conj(c[b])
    # orthonormal basis q of psi-perp: project out psi from the identity
    # columns, dropping the column most aligned with psi
    m = 0
    best = 0.0
    for k in range(n):
        a = psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
        if a > best:
            best = a
            m = k
    q = np.zeros((n, n - 1), dtype=np.complex128)
    col = 0
    for k in range(n):
        if k == m:
            continue
        for a in range(n):
            q[a, col] = -np.conj(psi[k]) * psi[a]
        q[k, col] += 1.0
        col += 1
    # two rounds of modified Gram-Schmidt
    for _ in range(2):
        for cidx in range(n - 1):
            for prev in range(cidx):
                ov = 0.0 + 0.0j
                for a in range(n):
                    ov += np.conj(q[a, prev]) * q[a, cidx]
                for a in range(n):
                    q[a, cidx] -= ov * q[a, prev]
            nrm = 0.0
            for a in range(n):
                nrm += q[a, cidx].real * q[a, cidx].real + q[a, cidx].imag * q[a, cidx].imag
            nrm = np.sqrt(nrm)
            for a in range(n):
                q[a, cidx] /= nrm
    rt = q.conj().T @ (r @ q)
    rt = 0.5 * (rt + rt.conj().T)
    w_asc, v = np.linalg.eigh(rt)
    rates = np.zeros(n - 1, dtype=np.float64)
    targets = q @ v
    out_targets = np.zeros((n - 1, n), dtype=np.complex128)
    for k in range(n - 1):
        val = w_asc[n - 2 - k]
        rates[k] = val if val > 0.0 else 0.0
        for a in range(n):
            out_targets[k, a] = targets[a, n - 2 - k]
    return rates, out_targets


@_jit
def nodetect_trajectory(e, ti, tj, tw, psi0, t_bar, grid, h_max, uniforms):
    """Sample one no-detection trajectory.

    Returns (status, n_events, ev_time, ev_channel, ev_state, ev_rate,
    grid_states, log_density, draws_used).  Jump times come from inverse
    transform on the accumulated hazard, localized by bisection inside the
    RK4 step that crossed the target.
    """
    n = psi0.shape[0]
    ng = grid.shape[0]
    cap = uniforms.shape[0] // 2 + 1
    ev_time = np.zeros(cap, dtype=np.float64)
    ev_channel = np.zeros(cap, dtype=np.int64)
    ev_state = np.zeros((cap, n), dtype=np.complex128)
    ev_rate = np.zeros(cap, dtype=np.float64)
    grid_states = np.zeros((ng, n), dtype=np.complex128)
    k1 = np.zeros(n, dtype=np.complex128)
    k2 = np.zeros(n, dtype=np.complex128)
    k3 = np.zeros(n, dtype=np.complex128)
    k4 = np.zeros(n, dtype=np.complex128)
    tmp = np.zeros(n, dtype=np.complex128)
    trial = np.zeros(n, dtype=np.complex128)
    psi = psi0.copy()
    _normalize(psi)

    n_ev = 0
    idraw = 0
    log_dens = 0.0
    total_hazard = 0.0
    seg_hazard = 0.0
    if idraw >= uniforms.shape[0]:
        return STATUS_NEED_DRAWS, n_ev, ev_time, ev_channel, ev_state, ev_rate, grid_states, 0.0, idraw
    target = -np.log(1.0 - uniforms[idraw])
    idraw += 1

    t = 0.0
    ig = 0
    while ig < ng and grid[ig] <= t + 1e-12:
        for a in range(n):
            grid_states[ig, a] = psi[a]
        ig += 1
    time_tol = 1e-12 * max(1.0, t_bar)

    while t < t_bar - 1e-15:
        lam_now = _nd_rhs(e, ti, tj, tw, psi, k1)
        drift = 0.0
        for a in range(n):
            d = abs(k1[a])
            if d > drift:
                drift = d
        if lam_now < _STATIONARY_RATE and drift < _STATIONARY_DRIFT:
            while ig < ng:
                for a in range(n):
                    grid_states[ig, a] = psi[a]
                ig += 1
            t = t_bar
            break
        t_next = t_bar if ig >= ng else min(grid[ig], t_bar)
        seg = t_next - t
        nsub = int(np.ceil(seg / h_max))
        if nsub < 1:
            nsub = 1
        hh = seg / nsub
        jumped = False
        for s in range(nsub):
            d_lam = _nd_rk4(e, ti, tj, tw, psi, hh, trial, k1, k2, k3, k4, tmp)
            if seg_hazard + d_lam >= target:
                # localize the crossing inside (0, hh]
                lo = 0.0
                hi = hh
                need = target - seg_hazard
                for _ in range(80):
                    if hi - lo <= time_tol:
                        break
                    mid = 0.5 * (lo + hi)
                    dl = _nd_rk4(e, ti, tj, tw, psi, mid, trial, k1, k2, k3, k4, tmp)
                    if dl >= need:
                        hi = mid
                    else:
                        lo = mid
                _nd_rk4(e, ti, tj, tw, psi, hi, trial, k1, k2, k3, k4, tmp)
                for a in range(n):
                    psi[a] = trial[a]
                _normalize(psi)
                tau = t + s * hh + hi
                total_hazard += target
                seg_hazard = 0.0
                rates, targets = _nd_spectrum(ti, tj, tw, psi)
                tot = 0.0
                for k in range(n - 1):
                    tot += rates[k]
                if idraw + 1 >= uniforms.shape[0]:
                    return STATUS_NEED_DRAWS, n_ev, ev_time, ev_channel, ev_state, ev_rate, grid_states, 0.0, idraw
                u_ch = uniforms[idraw]
                idraw += 1
                pick = n - 2
                acc = 0.0
                for k in range(n - 1):
                    acc += rates[k]
                    if u_ch * tot < acc:
                        pick = k
                        break
                for a in range(n):
                    psi[a] = targets[pick, a]
                log_dens += np.log(rates[pick])
                ev_time[n_ev] = tau
                ev_channel[n_ev] = pick + 1
                for a in range(n):
                    ev_state[n_ev, a] = psi[a]
                ev_rate[n_ev] = rates[pick]
                n_ev += 1
                target = -np.log(1.0 - uniforms[idraw])
                idraw += 1
                t = tau
                jumped = True
                break
            seg_hazard += d_lam
            for a in range(n):
                psi[a] = trial[a]
            _normalize(psi)
        if not jumped:
            t = t_next
            while ig < ng and grid[ig] <= t + 1e-12:
                for a in range(n):
                    grid_states[ig, a] = psi[a]
                ig += 1
    while ig < ng:
        for a in range(n):
            grid_states[ig, a] = psi[a]
        ig += 1
    total_hazard += seg_hazard
    log_dens -= total_hazard
    return STATUS_OK, n_ev, ev_time, ev_channel, ev_state, ev_rate, grid_states, log_dens, idraw


@_jit
def _dt_survival(p, w, tau):
    s = 0.0
    for k in range(p.shape[0]):
        s += p[k] * np.exp(-w[k] * tau)
    return s


@_jit
def detect_trajectory(e, w_level, ti, tj, tw, psi0, t_bar, grid, uniforms):
    """Sample one detection-mode trajectory.

    The no-jump flow is the exact closed form of the drift semigroup: each
    amplitude decays as exp(-(i E_k + w_k/2) tau), so survival and jump
    times are solved without any ODE stepping.  Jump targets are energy
    eigenstates; the channel label is the destination level.
    """
    n = psi0.shape[0]
    ng = grid.shape[0]
    cap = uniforms.shape[0] // 2 + 1
    ev_time = np.zeros(cap, dtype=np.float64)
    ev_channel = np.zeros(cap, dtype=np.int64)
    ev_state = np.zeros((cap, n), dtype=np.complex128)
    ev_rate = np.zeros(cap, dtype=np.float64)
    grid_states = np.zeros((ng, n), dtype=np.complex128)
    psi = psi0.copy()
    _normalize(psi)
    p = np.zeros(n, dtype=np.float64)
    vt = np.zeros(n, dtype=np.complex128)

    n_ev = 0
    idraw = 0
    log_dens = 0.0
    t = 0.0
    ig = 0

    while True:
        ptot = 0.0
        for k in range(n):
            p[k] = psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
            ptot += p[k]
        for k in range(n):
            p[k] /= ptot
        if idraw >= uniforms.shape[0]:
            return STATUS_NEED_DRAWS, n_ev, ev_time, ev_channel, ev_state, ev_rate, grid_states, 0.0, idraw
        u = 1.0 - uniforms[idraw]
        idraw += 1
        horizon_left = t_bar - t
        s_horizon = _dt_survival(p, w_level, horizon_left)
        if u <= s_horizon:
            # no further jump before the horizon
            while ig < ng:
                tau = grid[ig] - t
                s = _dt_survival(p, w_level, tau)
                rt = 1.0 / np.sqrt(s)
                for k in range(n):
                    grid_states[ig, k] = psi[k] * np.exp(-(1j * e[k] + 0.5 * w_level[k]) * tau) * rt
                ig += 1
            log_dens += np.log(s_horizon)
            return STATUS_OK, n_ev, ev_time, ev_channel, ev_state, ev_rate, grid_states, log_dens, idraw
        # bisect the jump time: survival is strictly decreasing and is
        # already below u at the horizon
        lo = 0.0
        hi = horizon_left
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if _dt_survival(p, w_level, mid) > u:
                lo = mid
            else:
                hi = mid
        tau = 0.5 * (lo + hi)
        s_tau = _dt_survival(p, w_level, tau)
        # record grid points passed inside this segment
        while ig < ng and grid[ig] <= t + tau:
            dt_g = grid[ig] - t
            s = _dt_survival(p, w_level, dt_g)
            rt = 1.0 / np.sqrt(s)
            for k in range(n):
                grid_states[ig, k] = psi[k] * np.exp(-(1j * e[k] + 0.5 * w_level[k]) * dt_g) * rt
            ig += 1
        # state just before the jump, normalized
        rt = 1.0 / np.sqrt(s_tau)
        for k in range(n):
            vt[k] = psi[k] * np.exp(-(1j * e[k] + 0.5 * w_level[k]) * tau) * rt
        # destination level drawn proportionally to its feeding rate
        tot = 0.0
        for tr in range(ti.shape[0]):
            j = tj[tr]
            tot += tw[tr] * (vt[j].real * vt[j].real + vt[j].imag * vt[j].imag)
        if idraw >= uniforms.shape[0]:
            return STATUS_NEED_DRAWS, n_ev, ev_time, ev_channel, ev_state, ev_rate, grid_states, 0.0, idraw
        u_ch = uniforms[idraw]
        idraw += 1
        pick = -1
        rate_pick = 0.0
        acc = 0.0
        for lvl in range(n):
            r_lvl = 0.0
            for tr in range(ti.shape[0]):
                if ti[tr] == lvl:
                    j = tj[tr]
                    r_lvl += tw[tr] * (vt[j].real * vt[j].real + vt[j].imag * vt[j].imag)
            if r_lvl > 0.0:
                acc += r_lvl
                if u_ch * tot < acc:
                    pick = lvl
                    rate_pick = r_lvl
                    break
        if pick < 0:
            for lvl in range(n - 1, -1, -1):
                r_lvl = 0.0
                for tr in range(ti.shape[0]):
                    if ti[tr] == lvl:
                        j = tj[tr]
                        r_lvl += tw[tr] * (vt[j].real * vt[j].real + vt[j].imag * vt[j].imag)
                if r_lvl > 0.0:
                    pick = lvl
                    rate_pick = r_lvl
                    break
        t = t + tau
        log_dens += np.log(u) + np.log(rate_pick)
        for k in range(n):
            psi[k] = 0.0
        psi[pick] = 1.0
        ev_time[n_ev] = t
        ev_channel[n_ev] = pick
        for k in range(n):
            ev_state[n_ev, k] = psi[k]
        ev_rate[n_ev] = rate_pick
        n_ev += 1
