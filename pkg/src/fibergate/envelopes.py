"""Scalar drive envelopes in a form both kernel backends can evaluate.

An envelope is a code plus a flat parameter vector (and an optional sample
table), so the compiled kernel can evaluate it without calling back into
Python.  The NumPy implementations here are the reference; the Cython kernel
mirrors them and is parity-tested against them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ENV_ZERO = 0
ENV_GAUSSIAN = 1      # params: amp, t_c, width, t_lo, t_hi
ENV_SECH_EMIT = 2     # params: g_gain, t_c, width, kappa, t_lo, t_hi, clip
ENV_SECH_ABSORB = 3   # params: g_gain, t_c, width, kappa, t_lo, t_hi, clip
ENV_TABLE = 4         # params: t0, dt; sample table attached

N_PARAMS = 8


@dataclass(frozen=True)
class EnvelopeSpec:
    code: int
    params: np.ndarray = field(default_factory=lambda: np.zeros(N_PARAMS))
    table: np.ndarray | None = None

    def __call__(self, t):
        return evaluate(self, t)


def _pack(*values: float) -> np.ndarray:
    params = np.zeros(N_PARAMS)
    params[: len(values)] = values
    return params


def zero() -> EnvelopeSpec:
    return EnvelopeSpec(ENV_ZERO)


def gaussian(amp: float, t_c: float, width: float, t_lo: float, t_hi: float) -> EnvelopeSpec:
    return EnvelopeSpec(ENV_GAUSSIAN, _pack(amp, t_c, width, t_lo, t_hi))


def sech_emit(g_gain: float, t_c: float, width: float, kappa: float,
              t_lo: float, t_hi: float, clip: float) -> EnvelopeSpec:
    return EnvelopeSpec(ENV_SECH_EMIT, _pack(g_gain, t_c, width, kappa, t_lo, t_hi, clip))


def sech_absorb(g_gain: float, t_c: float, width: float, kappa: float,
                t_lo: float, t_hi: float, clip: float) -> EnvelopeSpec:
    return EnvelopeSpec(ENV_SECH_ABSORB, _pack(g_gain, t_c, width, kappa, t_lo, t_hi, clip))


def table(t0: float, dt: float, values: np.ndarray) -> EnvelopeSpec:
    values = np.ascontiguousarray(values, dtype=np.float64)
    return EnvelopeSpec(ENV_TABLE, _pack(t0, dt), values)


def sech_emit_sin(t, t_c: float, width: float, kappa: float):
    """sin(theta) for photon emission: sqrt(exp(2u) sech(2u)) scaling, u = (t-t_c)/width.

    Evaluated in the overflow-safe form 2 / sqrt(kappa*width*(1 + exp(-4u))).
    """
    u = (np.asarray(t, dtype=float) - t_c) / width
    return 2.0 / np.sqrt(kappa * width * (1.0 + np.exp(-4.0 * np.clip(u, -200, 200))))


def sech_absorb_sin(t, t_c: float, width: float, kappa: float):
    """Time-reverse of :func:`sech_emit_sin` about the pulse center."""
    u = (np.asarray(t, dtype=float) - t_c) / width
    return 2.0 / np.sqrt(kappa * width * (1.0 + np.exp(4.0 * np.clip(u, -200, 200))))


def rabi_from_sin(sin_theta, g_gain: float, clip: float):
    """Omega = g * tan(theta) with sin(theta) clipped below 1."""
    s = np.minimum(sin_theta, clip)
    return g_gain * s / np.sqrt(1.0 - s * s)


def evaluate(spec: EnvelopeSpec, t):
    """Evaluate an envelope at scalar or array ``t`` (zero outside support)."""
    t_arr = np.asarray(t, dtype=float)
    p = spec.params
    if spec.code == ENV_ZERO:
        out = np.zeros_like(t_arr)
    elif spec.code == ENV_GAUSSIAN:
        amp, t_c, width, t_lo, t_hi = p[:5]
        out = amp * np.exp(-(((t_arr - t_c) / width) ** 2))
        out = np.where((t_arr >= t_lo) & (t_arr <= t_hi), out, 0.0)
    elif spec.code in (ENV_SECH_EMIT, ENV_SECH_ABSORB):
        g_gain, t_c, width, kappa, t_lo, t_hi, clip = p[:7]
        sin_fn = sech_emit_sin if spec.code == ENV_SECH_EMIT else sech_absorb_sin
        out = rabi_from_sin(sin_fn(t_arr, t_c, width, kappa), g_gain, clip)
        out = np.where((t_arr >= t_lo) & (t_arr <= t_hi), out, 0.0)
    elif spec.code == ENV_TABLE:
        t0, dt = p[:2]
        values = spec.table
        x = (t_arr - t0) / dt
        i = np.clip(np.floor(x).astype(int), 0, len(values) - 2)
        frac = np.clip(x - i, 0.0, 1.0)
        out = values[i] * (1 - frac) + values[i + 1] * frac
        out = np.where((x >= 0) & (x <= len(values) - 1), out, 0.0)
    else:
        raise ValueError(f"unknown envelope code {spec.code}")
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out
