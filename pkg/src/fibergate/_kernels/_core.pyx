# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Dormand-Prince 4/5 propagation of linear-combination
Hamiltonians and fixed-step RK4 for small driven nodes.

Mirrors purepy.py exactly (same tableau, same controller, same envelope
formulas); the pure module is the reference for parity tests.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

OK = 0
ERR_UNDERFLOW = 1
ERR_NONFINITE = 2
ERR_MAXSTEPS = 3

cdef int ENV_ZERO = 0
cdef int ENV_GAUSSIAN = 1
cdef int ENV_SECH_EMIT = 2
cdef int ENV_SECH_ABSORB = 3
cdef int ENV_TABLE = 4

cdef double _SAFETY = 0.9
cdef double _MIN_FACTOR = 0.2
cdef double _MAX_FACTOR = 5.0

# Dormand-Prince tableau
cdef double _C2 = 1.0 / 5, _C3 = 3.0 / 10, _C4 = 4.0 / 5, _C5 = 8.0 / 9
cdef double _A21 = 1.0 / 5
cdef double _A31 = 3.0 / 40, _A32 = 9.0 / 40
cdef double _A41 = 44.0 / 45, _A42 = -56.0 / 15, _A43 = 32.0 / 9
cdef double _A51 = 19372.0 / 6561, _A52 = -25360.0 / 2187
cdef double _A53 = 64448.0 / 6561, _A54 = -212.0 / 729
cdef double _A61 = 9017.0 / 3168, _A62 = -355.0 / 33, _A63 = 46732.0 / 5247
cdef double _A64 = 49.0 / 176, _A65 = -5103.0 / 18656
cdef double _B1 = 35.0 / 384, _B3 = 500.0 / 1113, _B4 = 125.0 / 192
cdef double _B5 = -2187.0 / 6784, _B6 = 11.0 / 84
cdef double _E1 = 71.0 / 57600, _E3 = -71.0 / 16695, _E4 = 71.0 / 1920
cdef double _E5 = -17253.0 / 339200, _E6 = 22.0 / 525, _E7 = -1.0 / 40


cdef double _eval_env(int code, double[::1] params, double[::1] table,
                      Py_ssize_t tab_len, double t) noexcept nogil:
    cdef double x, u, s, frac, sign
    cdef Py_ssize_t i
    if code == ENV_ZERO:
        return 0.0
    if code == ENV_GAUSSIAN:
        if t < params[3] or t > params[4]:
            return 0.0
        x = (t - params[1]) / params[2]
        return params[0] * exp(-x * x)
    if code == ENV_SECH_EMIT or code == ENV_SECH_ABSORB:
        if t < params[4] or t > params[5]:
            return 0.0
        u = (t - params[1]) / params[2]
        if u > 200.0:
            u = 200.0
        elif u < -200.0:
            u = -200.0
        sign = 4.0 if code == ENV_SECH_ABSORB else -4.0
        s = 2.0 / sqrt(params[3] * params[2] * (1.0 + exp(sign * u)))
        if s > params[6]:
            s = params[6]
        return params[0] * s / sqrt(1.0 - s * s)
    if code == ENV_TABLE:
        x = (t - params[0]) / params[1]
        if x < 0.0 or x > tab_len - 1:
            return 0.0
        i = <Py_ssize_t>x
        if i > tab_len - 2:
            i = tab_len - 2
        frac = x - i
        return table[i] * (1.0 - frac) + table[i + 1] * frac
    return 0.0


cdef void _rhs(long[::1] h0_indptr, long[::1] h0_idx, double complex[::1] h0_val,
               long[:, ::1] drv_indptr, long[::1] drv_idx, double complex[::1] drv_val,
               long[::1] codes, double[:, ::1] params_rows,
               double[:, ::1] tables, long[::1] tab_lens,
               double t, double complex[::1] y, double complex[::1] out,
               Py_ssize_t dim, Py_ssize_t n_drives) noexcept nogil:
    """out = -i (H0 + sum_k f_k(t) Hk) y; matrices are in CSR form

    (the Hamiltonians here carry only a handful of nonzeros per row)."""
    cdef Py_ssize_t i, k, idx
    cdef double complex acc
    cdef double amp
    for i in range(dim):
        acc = 0
        for idx in range(h0_indptr[i], h0_indptr[i + 1]):
            acc = acc + h0_val[idx] * y[h0_idx[idx]]
        out[i] = acc
    for k in range(n_drives):
        amp = _eval_env(<int>codes[k], params_rows[k], tables[k], tab_lens[k], t)
        if amp != 0.0:
            for i in range(dim):
                acc = 0
                for idx in range(drv_indptr[k, i], drv_indptr[k, i + 1]):
                    acc = acc + drv_val[idx] * y[drv_idx[idx]]
                out[i] = out[i] + amp * acc
    for i in range(dim):
        out[i] = out[i] * (-1j)


def _csr(matrix):
    """Row-major nonzero triplets (indptr, indices, values) of a dense matrix."""
    dim = matrix.shape[0]
    indptr = np.zeros(dim + 1, dtype=np.int64)
    idx = []
    val = []
    for i in range(dim):
        row = matrix[i]
        nz = np.nonzero(row)[0]
        idx.extend(nz.tolist())
        val.extend(row[nz].tolist())
        indptr[i + 1] = len(idx)
    return (
        indptr,
        np.asarray(idx if idx else [0], dtype=np.int64),
        np.asarray(val if val else [0j], dtype=np.complex128),
    )


def rk45_lincomb(h0, drive_mats, env_codes, env_params, env_tables, psi0,
                 snap_times, double rtol, double atol,
                 long max_steps=20_000_000):
    """Mirror of purepy.rk45_lincomb on typed memoryviews."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] h0_arr = np.ascontiguousarray(h0, dtype=np.complex128)
    cdef Py_ssize_t dim = h0_arr.shape[0]
    cdef Py_ssize_t n_drives = len(drive_mats)
    cdef Py_ssize_t k

    codes_arr = np.zeros(max(n_drives, 1), dtype=np.int64)
    params_arr = np.zeros((max(n_drives, 1), 8), dtype=np.float64)
    max_tab = 2
    for k in range(n_drives):
        codes_arr[k] = env_codes[k]
        params_arr[k, :] = env_params[k]
        if len(env_tables[k]) > max_tab:
            max_tab = len(env_tables[k])
    tables_arr = np.zeros((max(n_drives, 1), max_tab), dtype=np.float64)
    lens_arr = np.full(max(n_drives, 1), 2, dtype=np.int64)
    for k in range(n_drives):
        lens_arr[k] = len(env_tables[k])
        tables_arr[k, : lens_arr[k]] = env_tables[k]

    h0_ip, h0_ix, h0_vl = _csr(h0_arr)
    drv_ip_arr = np.zeros((max(n_drives, 1), dim + 1), dtype=np.int64)
    drv_ix_list = []
    drv_vl_list = []
    offset = 0
    for k in range(n_drives):
        ip, ix, vl = _csr(np.ascontiguousarray(drive_mats[k], dtype=np.complex128))
        n_nz = ip[dim]
        drv_ip_arr[k, :] = ip + offset
        drv_ix_list.append(ix[:n_nz])
        drv_vl_list.append(vl[:n_nz])
        offset += n_nz
    if drv_ix_list:
        drv_ix_arr = np.concatenate(drv_ix_list) if offset else np.zeros(1, dtype=np.int64)
        drv_vl_arr = np.concatenate(drv_vl_list) if offset else np.zeros(1, dtype=np.complex128)
    else:
        drv_ix_arr = np.zeros(1, dtype=np.int64)
        drv_vl_arr = np.zeros(1, dtype=np.complex128)

    cdef long[::1] h0_indptr = h0_ip
    cdef long[::1] h0_idx = h0_ix
    cdef double complex[::1] h0_val = h0_vl
    cdef long[:, ::1] drv_indptr = drv_ip_arr
    cdef long[::1] drv_idx = np.ascontiguousarray(drv_ix_arr, dtype=np.int64)
    cdef double complex[::1] drv_val = np.ascontiguousarray(drv_vl_arr, dtype=np.complex128)
    cdef long[::1] codes = codes_arr
    cdef double[:, ::1] params_rows = params_arr
    cdef double[:, ::1] tables = tables_arr
    cdef long[::1] tab_lens = lens_arr

    cdef cnp.ndarray[cnp.float64_t, ndim=1] ts = np.ascontiguousarray(snap_times, dtype=np.float64)
    cdef Py_ssize_t n_snap = ts.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] states = np.empty((n_snap, dim), dtype=np.complex128)
    cdef double complex[:, ::1] states_mv = states

    cdef cnp.ndarray[cnp.complex128_t, ndim=1] y_arr = np.array(psi0, dtype=np.complex128)
    cdef double complex[::1] y = y_arr
    work = np.zeros((9, dim), dtype=np.complex128)
    cdef double complex[:, ::1] w = work
    # rows 0..6 hold k1..k7, row 7 the stage/trial state, row 8 the error

    cdef double t = ts[0], span = ts[n_snap - 1] - ts[0]
    cdef double h, h_try, t_end, err_norm, factor, sc, d0, d1, m0, m1
    cdef long n_steps = 0, n_rejected = 0, n_fev = 1
    cdef Py_ssize_t i_snap, i
    cdef int status = OK

    for i in range(dim):
        states_mv[0, i] = y[i]

    _rhs(h0_indptr, h0_idx, h0_val, drv_indptr, drv_idx, drv_val, codes, params_rows, tables, tab_lens, t, y, w[0], dim, n_drives)
    d0 = 0.0
    d1 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y[i])
        d0 += (abs(y[i]) / sc) ** 2
        d1 += (abs(w[0, i]) / sc) ** 2
    d0 = sqrt(d0 / dim)
    d1 = sqrt(d1 / dim)
    h = 0.01 * d0 / d1 if d1 > 0.0 else 0.1 * span
    if h > 0.1 * span:
        h = 0.1 * span

    for i_snap in range(1, n_snap):
        t_end = ts[i_snap]
        while t < t_end:
            if n_steps + n_rejected > max_steps:
                status = ERR_MAXSTEPS
                break
            h_try = h if h < t_end - t else t_end - t
            for i in range(dim):
                w[7, i] = y[i] + h_try * (_A21 * w[0, i])
            _rhs(h0_indptr, h0_idx, h0_val, drv_indptr, drv_idx, drv_val, codes, params_rows, tables, tab_lens, t + _C2 * h_try, w[7], w[1], dim, n_drives)
            for i in range(dim):
                w[7, i] = y[i] + h_try * (_A31 * w[0, i] + _A32 * w[1, i])
            _rhs(h0_indptr, h0_idx, h0_val, drv_indptr, drv_idx, drv_val, codes, params_rows, tables, tab_lens, t + _C3 * h_try, w[7], w[2], dim, n_drives)
            for i in range(dim):
                w[7, i] = y[i] + h_try * (_A41 * w[0, i] + _A42 * w[1, i] + _A43 * w[2, i])
            _rhs(h0_indptr, h0_idx, h0_val, drv_indptr, drv_idx, drv_val, codes, params_rows, tables, tab_lens, t + _C4 * h_try, w[7], w[3], dim, n_drives)
            for i in range(dim):
                w[7, i] = y[i] + h_try * (_A51 * w[0, i] + _A52 * w[1, i] + _A53 * w[2, i] + _A54 * w[3, i])
            _rhs(h0_indptr, h0_idx, h0_val, drv_indptr, drv_idx, drv_val, codes, params_rows, tables, tab_lens, t + _C5 * h_try, w[7], w[4], dim, n_drives)
            for i in range(dim):
                w[7, i] = y[i] + h_try * (_A61 * w[0, i] + _A62 * w[1, i] + _A63 * w[2, i] + _A64 * w[3, i] + _A65 * w[4, i])
            _rhs(h0_indptr, h0_idx, h0_val, drv_indptr, drv_idx, drv_val, codes, params_rows, tables, tab_lens, t + h_try, w[7], w[5], dim, n_drives)
            for i in range(dim):
                w[7, i] = y[i] + h_try * (_B1 * w[0, i] + _B3 * w[2, i] + _B4 * w[3, i] + _B5 * w[4, i] + _B6 * w[5, i])
            _rhs(h0_indptr, h0_idx, h0_val, drv_indptr, drv_idx, drv_val, codes, params_rows, tables, tab_lens, t + h_try, w[7], w[6], dim, n_drives)
            n_fev += 6

            err_norm = 0.0
            for i in range(dim):
                w[8, i] = h_try * (_E1 * w[0, i] + _E3 * w[2, i] + _E4 * w[3, i] + _E5 * w[4, i] + _E6 * w[5, i] + _E7 * w[6, i])
                m0 = abs(y[i])
                m1 = abs(w[7, i])
                if m1 != m1 or m1 > 1e300:
                    status = ERR_NONFINITE
                    break
                sc = atol + rtol * (m0 if m0 > m1 else m1)
                err_norm += (abs(w[8, i]) / sc) ** 2
            if status != OK:
                break
            err_norm = sqrt(err_norm / dim)

            if err_norm <= 1.0:
                n_steps += 1
                t = t + h_try
                for i in range(dim):
                    y[i] = w[7, i]
                    w[0, i] = w[6, i]      # FSAL
                factor = _MAX_FACTOR if err_norm == 0.0 else _SAFETY * err_norm ** -0.2
                if factor > _MAX_FACTOR:
                    factor = _MAX_FACTOR
                if h_try < h:
                    # truncated by a snapshot boundary; never shrink
                    if h_try * factor > h:
                        h = h_try * factor
                else:
                    h = h * factor
            else:
                n_rejected += 1
                factor = _SAFETY * err_norm ** -0.2
                if factor < _MIN_FACTOR:
                    factor = _MIN_FACTOR
                h = h_try * factor
                if h < 1e-12 * span:
                    status = ERR_UNDERFLOW
                    break
        if status != OK:
            break
        for i in range(dim):
            states_mv[i_snap, i] = y[i]

    return states, int(n_steps), int(n_rejected), int(n_fev), int(status)


def node_rk4(m0, m1, env_code, env_params, env_table, in_vec, out_row,
             cin, double t0, double dt, y0, int substeps=2):
    """Mirror of purepy.node_rk4."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] m0_arr = np.ascontiguousarray(m0, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] m1_arr = np.ascontiguousarray(m1, dtype=np.complex128)
    cdef double complex[:, ::1] M0 = m0_arr
    cdef double complex[:, ::1] M1 = m1_arr
    cdef int code = int(env_code)
    cdef double[::1] params = np.ascontiguousarray(env_params, dtype=np.float64)
    cdef double[::1] table = np.ascontiguousarray(env_table, dtype=np.float64)
    cdef Py_ssize_t tab_len = table.shape[0]
    cdef double complex[::1] v = np.ascontiguousarray(in_vec, dtype=np.complex128)
    cdef double complex[::1] w_row = np.ascontiguousarray(out_row, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] cin_arr = np.ascontiguousarray(cin, dtype=np.complex128)
    cdef double complex[::1] c = cin_arr
    cdef Py_ssize_t n = cin_arr.shape[0]
    cdef Py_ssize_t dim = m0_arr.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] y_hist = np.empty((n, dim), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] cout = np.empty(n, dtype=np.complex128)
    cdef double complex[:, ::1] hist = y_hist
    cdef double complex[::1] co = cout

    cdef double complex[::1] y = np.array(y0, dtype=np.complex128)
    work = np.zeros((5, dim), dtype=np.complex128)
    cdef double complex[:, ::1] ww = work
    # rows: k1, k2, k3, k4, stage state
    cdef double h = dt / substeps
    cdef Py_ssize_t i, s, a, b
    cdef double complex c0, c1, slope, c_a, c_m, c_b, acc
    cdef double t_a, om_a, om_m, om_b
    cdef bint drive_on = code != ENV_ZERO or bool(np.any(m1_arr != 0))

    acc = 0
    for a in range(dim):
        acc = acc + w_row[a] * y[a]
        hist[0, a] = y[a]
    co[0] = c[0] + acc

    with nogil:
        for i in range(n - 1):
            c0 = c[i]
            c1 = c[i + 1]
            slope = (c1 - c0) / dt
            for s in range(substeps):
                t_a = t0 + i * dt + s * h
                c_a = c0 + slope * (s * h)
                c_m = c0 + slope * (s * h + 0.5 * h)
                c_b = c0 + slope * ((s + 1) * h)
                if drive_on:
                    om_a = _eval_env(code, params, table, tab_len, t_a)
                    om_m = _eval_env(code, params, table, tab_len, t_a + 0.5 * h)
                    om_b = _eval_env(code, params, table, tab_len, t_a + h)
                else:
                    om_a = om_m = om_b = 0.0
                for a in range(dim):
                    acc = 0
                    for b in range(dim):
                        acc = acc + (M0[a, b] + om_a * M1[a, b]) * y[b]
                    ww[0, a] = acc + v[a] * c_a
                for a in range(dim):
                    ww[4, a] = y[a] + 0.5 * h * ww[0, a]
                for a in range(dim):
                    acc = 0
                    for b in range(dim):
                        acc = acc + (M0[a, b] + om_m * M1[a, b]) * ww[4, b]
                    ww[1, a] = acc + v[a] * c_m
                for a in range(dim):
                    ww[4, a] = y[a] + 0.5 * h * ww[1, a]
                for a in range(dim):
                    acc = 0
                    for b in range(dim):
                        acc = acc + (M0[a, b] + om_m * M1[a, b]) * ww[4, b]
                    ww[2, a] = acc + v[a] * c_m
                for a in range(dim):
                    ww[4, a] = y[a] + h * ww[2, a]
                for a in range(dim):
                    acc = 0
                    for b in range(dim):
                        acc = acc + (M0[a, b] + om_b * M1[a, b]) * ww[4, b]
                    ww[3, a] = acc + v[a] * c_b
                for a in range(dim):
                    y[a] = y[a] + (h / 6.0) * (ww[0, a] + 2.0 * ww[1, a] + 2.0 * ww[2, a] + ww[3, a])
            acc = 0
            for a in range(dim):
                hist[i + 1, a] = y[a]
                acc = acc + w_row[a] * y[a]
            co[i + 1] = c1 + acc

    return y_hist, cout
