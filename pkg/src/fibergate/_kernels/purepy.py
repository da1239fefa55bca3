"""Reference NumPy implementation of the hot kernels.

Two entry points, mirrored exactly by the Cython extension:

* :func:`rk45_lincomb` -- adaptive Dormand-Prince 5(4) propagation of
  i dpsi/dt = (H0 + sum_k f_k(t) Hk) psi for scalar envelopes f_k;
* :func:`node_rk4` -- fixed-step RK4 for a small driven node
  dy/dt = (M0 + f(t) M1) y + v * c_in(t) with an input field sampled on a
  uniform grid, recording c_out = c_in + w . y.

Status codes: 0 ok, 1 step underflow, 2 non-finite amplitudes,
3 step budget exceeded.
"""
from __future__ import annotations

import math

import numpy as np

from ..envelopes import (
    ENV_GAUSSIAN,
    ENV_SECH_ABSORB,
    ENV_SECH_EMIT,
    ENV_TABLE,
    ENV_ZERO,
)

OK = 0
ERR_UNDERFLOW = 1
ERR_NONFINITE = 2
ERR_MAXSTEPS = 3

# Dormand-Prince 5(4) tableau (FSAL: stage 7 of an accepted step is stage 1
# of the next).
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def eval_envelope(code: int, params, table, t: float) -> float:
    """Scalar envelope evaluation (see envelopes.py for the array form)."""
    if code == ENV_ZERO:
        return 0.0
    if code == ENV_GAUSSIAN:
        if t < params[3] or t > params[4]:
            return 0.0
        x = (t - params[1]) / params[2]
        return params[0] * math.exp(-x * x)
    if code == ENV_SECH_EMIT or code == ENV_SECH_ABSORB:
        if t < params[4] or t > params[5]:
            return 0.0
        u = (t - params[1]) / params[2]
        if u > 200.0:
            u = 200.0
        elif u < -200.0:
            u = -200.0
        sign = 4.0 if code == ENV_SECH_ABSORB else -4.0
        s = 2.0 / math.sqrt(params[3] * params[2] * (1.0 + math.exp(sign * u)))
        if s > params[6]:
            s = params[6]
        return params[0] * s / math.sqrt(1.0 - s * s)
    if code == ENV_TABLE:
        x = (t - params[0]) / params[1]
        n = len(table)
        if x < 0.0 or x > n - 1:
            return 0.0
        i = int(x)
        if i > n - 2:
            i = n - 2
        frac = x - i
        return table[i] * (1.0 - frac) + table[i + 1] * frac
    raise ValueError(f"unknown envelope code {code}")


def _error_norm(err, y0, y1, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def _step_rk45(f, t, y, h, k1):
    """One Dormand-Prince step. Returns (y_new, err_vec, k7)."""
    k = [k1]
    for i in range(1, 6):
        yi = y + h * sum(a * ki for a, ki in zip(_A[i], k))
        k.append(f(t + _C[i] * h, yi))
    y_new = y + h * sum(b * ki for b, ki in zip(_B, k) if b != 0.0)
    k7 = f(t + h, y_new)
    k.append(k7)
    err = h * sum(e * ki for e, ki in zip(_E, k) if e != 0.0)
    return y_new, err, k7


def _adaptive_run(f, psi0, snap_times, rtol, atol, max_steps):
    """Shared adaptive driver; f(t, y) -> dy/dt."""
    snap_times = np.asarray(snap_times, dtype=float)
    dim = len(psi0)
    states = np.empty((len(snap_times), dim), dtype=complex)
    states[0] = psi0
    y = np.array(psi0, dtype=complex)
    t = snap_times[0]
    span = snap_times[-1] - snap_times[0]
    n_steps = n_rejected = 0
    n_fev = 1
    k1 = f(t, y)
    # conservative initial step from the first derivative
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((np.abs(y) / scale) ** 2))
    d1 = np.sqrt(np.mean((np.abs(k1) / scale) ** 2))
    h = min(0.01 * d0 / d1 if d1 > 0 else 0.1 * span, 0.1 * span)

    for i_snap in range(1, len(snap_times)):
        t_end = snap_times[i_snap]
        while t < t_end:
            if n_steps + n_rejected > max_steps:
                return states, n_steps, n_rejected, n_fev, ERR_MAXSTEPS
            h_try = min(h, t_end - t)
            y_new, err, k7 = _step_rk45(f, t, y, h_try, k1)
            n_fev += 6
            if not np.all(np.isfinite(y_new.view(float))):
                return states, n_steps, n_rejected, n_fev, ERR_NONFINITE
            err_norm = _error_norm(err, y, y_new, rtol, atol)
            if err_norm <= 1.0:
                n_steps += 1
                t = t + h_try
                y = y_new
                k1 = k7
                factor = _MAX_FACTOR if err_norm == 0.0 else min(
                    _MAX_FACTOR, _SAFETY * err_norm ** -0.2
                )
                if h_try < h:
                    # step was truncated by a snapshot boundary; never shrink
                    h = max(h, h_try * factor)
                else:
                    h = h * factor
            else:
                n_rejected += 1
                h = h_try * max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
                if h < 1e-12 * span:
                    return states, n_steps, n_rejected, n_fev, ERR_UNDERFLOW
        states[i_snap] = y
    return states, n_steps, n_rejected, n_fev, OK


def rk45_lincomb(h0, drive_mats, env_codes, env_params, env_tables, psi0,
                 snap_times, rtol, atol, max_steps=20_000_000):
    """Propagate i dpsi/dt = (H0 + sum_k f_k(t) Hk) psi through snap_times."""
    h0 = np.asarray(h0, dtype=complex)
    mats = [np.asarray(m, dtype=complex) for m in drive_mats]
    codes = list(env_codes)
    n_drives = len(mats)

    def f(t, y):
        dy = h0 @ y
        for kdx in range(n_drives):
            amp = eval_envelope(codes[kdx], env_params[kdx], env_tables[kdx], t)
            if amp != 0.0:
                dy += amp * (mats[kdx] @ y)
        return -1j * dy

    return _adaptive_run(f, psi0, snap_times, rtol, atol, max_steps)


def rk45_callable(f, psi0, snap_times, rtol, atol, max_steps=20_000_000):
    """Adaptive propagation for an arbitrary RHS callable f(t, y) -> dy/dt."""
    return _adaptive_run(f, psi0, snap_times, rtol, atol, max_steps)


def node_rk4(m0, m1, env_code, env_params, env_table, in_vec, out_row,
             cin, t0, dt, y0, substeps=2):
    """Fixed-step RK4 for a driven node on a uniform grid.

    dy/dt = (M0 + f(t) M1) y + v * c_in(t) from y(t0) = y0; returns the node
    history y[n, d] and the output samples c_out[n] = c_in[n] + w . y[n].
    The input field is interpolated linearly inside each grid cell.
    """
    m0 = np.asarray(m0, dtype=complex)
    m1 = np.asarray(m1, dtype=complex)
    in_vec = np.asarray(in_vec, dtype=complex)
    out_row = np.asarray(out_row, dtype=complex)
    cin = np.asarray(cin, dtype=complex)
    n = len(cin)
    dim = m0.shape[0]
    y_hist = np.empty((n, dim), dtype=complex)
    cout = np.empty(n, dtype=complex)
    y = np.array(y0, dtype=complex)
    y_hist[0] = y
    cout[0] = cin[0] + out_row @ y
    h = dt / substeps
    drive_on = env_code != ENV_ZERO or np.any(m1 != 0)

    for i in range(n - 1):
        c0 = cin[i]
        slope = (cin[i + 1] - c0) / dt
        for s in range(substeps):
            t_a = t0 + i * dt + s * h
            c_a = c0 + slope * (s * h)
            c_m = c0 + slope * (s * h + 0.5 * h)
            c_b = c0 + slope * ((s + 1) * h)
            if drive_on:
                om_a = eval_envelope(env_code, env_params, env_table, t_a)
                om_m = eval_envelope(env_code, env_params, env_table, t_a + 0.5 * h)
                om_b = eval_envelope(env_code, env_params, env_table, t_a + h)
                ma = m0 + om_a * m1
                mm = m0 + om_m * m1
                mb = m0 + om_b * m1
            else:
                ma = mm = mb = m0
            k1 = ma @ y + in_vec * c_a
            k2 = mm @ (y + 0.5 * h * k1) + in_vec * c_m
            k3 = mm @ (y + 0.5 * h * k2) + in_vec * c_m
            k4 = mb @ (y + h * k3) + in_vec * c_b
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y_hist[i + 1] = y
        cout[i + 1] = cin[i + 1] + out_row @ y
    return y_hist, cout
