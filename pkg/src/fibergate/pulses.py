"""Classical drive profiles and analytic photon-envelope results.

Covers the Gaussian Rabi pulse, the sech-shaped emission/absorption mixing
profiles, the analytic output-pulse formula for adiabatic photon emission,
and the impedance-matching residual for reflection-free absorption.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from . import envelopes
from .errors import UnphysicalMixing, ZeroAmplitude

SIN_CLIP = 1.0 - 1e-6  # mixing-angle clip: tan(theta) stays finite


@dataclass(frozen=True)
class PulseProfile:
    """A time-parameterized Rabi drive with finite support.

    For sech shapes the drive realizes a target mixing angle,
    Omega(t) = g_gain * tan(theta(t)); ``omega0`` then records the peak Rabi
    value inside the support rather than a free parameter.
    """

    shape: str                      # gaussian | sech_emit | sech_absorb
    omega0: float
    t_c: float
    delta_t: float
    support: tuple[float, float]
    kappa: float | None = None      # sech shapes only
    g_gain: float | None = None     # needed to map mixing angle <-> Rabi

    def rabi(self, t):
        """Omega(t); zero outside the support window."""
        return envelopes.evaluate(self.envelope_spec(), t)

    def mixing_sin(self, t):
        """sin(theta_A(t)) with tan(theta_A) = Omega_A / g_gain."""
        t_arr = np.asarray(t, dtype=float)
        inside = (t_arr >= self.support[0]) & (t_arr <= self.support[1])
        if self.shape == "sech_emit":
            s = envelopes.sech_emit_sin(t_arr, self.t_c, self.delta_t, self.kappa)
        elif self.shape == "sech_absorb":
            s = envelopes.sech_absorb_sin(t_arr, self.t_c, self.delta_t, self.kappa)
        else:
            if self.g_gain is None:
                raise ValueError("g_gain required to convert a Rabi drive to a mixing angle")
            om = self.omega0 * np.exp(-(((t_arr - self.t_c) / self.delta_t) ** 2))
            s = om / np.sqrt(om * om + self.g_gain**2)
        out = np.where(inside, np.minimum(s, SIN_CLIP), 0.0)
        return float(out) if t_arr.ndim == 0 else out

    def envelope_spec(self) -> envelopes.EnvelopeSpec:
        lo, hi = self.support
        if self.shape == "gaussian":
            return envelopes.gaussian(self.omega0, self.t_c, self.delta_t, lo, hi)
        if self.shape == "sech_emit":
            return envelopes.sech_emit(self.g_gain, self.t_c, self.delta_t,
                                       self.kappa, lo, hi, SIN_CLIP)
        if self.shape == "sech_absorb":
            return envelopes.sech_absorb(self.g_gain, self.t_c, self.delta_t,
                                         self.kappa, lo, hi, SIN_CLIP)
        raise ValueError(f"unknown pulse shape {self.shape!r}")


def gaussian_profile(omega0: float, t_c: float, delta_t: float,
                     margin: float = 5.0, g_gain: float | None = None) -> PulseProfile:
    half = margin * delta_t
    return PulseProfile("gaussian", omega0, t_c, delta_t,
                        (t_c - half, t_c + half), g_gain=g_gain)


def _check_mixing_physical(kappa: float, delta_t: float) -> None:
    # sup of the unclamped sech mixing formula is sqrt(4 / (kappa*delta_t))
    if kappa * delta_t <= 4.0:
        raise UnphysicalMixing(
            f"sech mixing needs kappa * delta_t > 4 to keep sin(theta) <= 1, "
            f"got {kappa * delta_t:g}"
        )


def sech_profile(shape: str, kappa: float, g_gain: float, t_c: float,
                 delta_t: float, margin: float = 5.0) -> PulseProfile:
    """Emission/absorption drive realizing the analytic sech photon shape."""
    if shape not in ("sech_emit", "sech_absorb"):
        raise ValueError(f"shape must be sech_emit or sech_absorb, got {shape!r}")
    _check_mixing_physical(kappa, delta_t)
    half = margin * delta_t
    peak_sin = min(np.sqrt(4.0 / (kappa * delta_t)), SIN_CLIP)
    peak = g_gain * peak_sin / np.sqrt(1 - peak_sin**2)
    return PulseProfile(shape, peak, t_c, delta_t, (t_c - half, t_c + half),
                        kappa=kappa, g_gain=g_gain)


def gaussian_rabi(t, p: PulseProfile):
    """Gaussian drive Omega0 * exp(-((t - t_c)/Delta_t)^2)."""
    if p.shape != "gaussian":
        raise ValueError(f"profile shape is {p.shape!r}, not gaussian")
    return p.rabi(t)


def sech_emit_mixing(t, t_c1: float, delta_t: float, kappa: float):
    """sin(theta_A) for emission, clamped to [0, 1]."""
    _check_mixing_physical(kappa, delta_t)
    s = envelopes.sech_emit_sin(t, t_c1, delta_t, kappa)
    return np.minimum(s, 1.0)


def sech_absorb_mixing(t, t_c2: float, delta_t: float, kappa: float):
    """sin(theta_A) for absorption: the time-reverse of emission."""
    _check_mixing_physical(kappa, delta_t)
    s = envelopes.sech_absorb_sin(t, t_c2, delta_t, kappa)
    return np.minimum(s, 1.0)


def sech_emit_rabi(t, t_c1: float, delta_t: float, kappa: float, g_a: float):
    """Omega_A(t) = g_A tan(theta_A) realizing the emission mixing profile."""
    s = sech_emit_mixing(t, t_c1, delta_t, kappa)
    return envelopes.rabi_from_sin(s, g_a, SIN_CLIP)


@dataclass
class FieldEnvelope:
    """Single-photon wavefunction samples on a uniform grid (units 1/sqrt(time))."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    def norm2(self) -> float:
        """Integrated intensity (photon content), trapezoid rule."""
        return float(trapezoid(np.abs(self.values) ** 2, dx=self.dt))

    def overlap_with(self, other: "FieldEnvelope") -> complex:
        """<self|other> / ||self||^2: amplitude of ``other`` in this mode."""
        if other.values.shape != self.values.shape or other.dt != self.dt:
            raise ValueError("envelopes must share a grid")
        num = trapezoid(np.conj(self.values) * other.values, dx=self.dt)
        return complex(num / self.norm2())

    def l2_error(self, reference: "FieldEnvelope") -> float:
        """Relative L2 distance to a reference envelope on the same grid."""
        diff = trapezoid(np.abs(self.values - reference.values) ** 2, dx=self.dt)
        return float(np.sqrt(diff / reference.norm2()))

    def value_at(self, t: float) -> complex:
        x = (t - self.t0) / self.dt
        i = int(np.clip(np.floor(x), 0, len(self.values) - 2))
        frac = x - i
        return complex(self.values[i] * (1 - frac) + self.values[i + 1] * frac)


ThetaLike = PulseProfile | Callable[[np.ndarray], np.ndarray]


def _sin_theta_on(theta_profile: ThetaLike, t: np.ndarray) -> np.ndarray:
    if isinstance(theta_profile, PulseProfile):
        return np.asarray(theta_profile.mixing_sin(t))
    return np.asarray(theta_profile(t), dtype=float)


def analytic_output_pulse(theta_profile: ThetaLike, kappa: float,
                          grid: np.ndarray) -> FieldEnvelope:
    """Adiabatic-limit emitted photon envelope for a given mixing profile.

    f(t) = sqrt(kappa) sin(theta) exp[-(kappa/2) int_{t0}^{t} sin^2(theta)].
    """
    grid = np.asarray(grid, dtype=float)
    s = _sin_theta_on(theta_profile, grid)
    accum = cumulative_trapezoid(s * s, grid, initial=0.0)
    f = np.sqrt(kappa) * s * np.exp(-0.5 * kappa * accum)
    return FieldEnvelope(grid[0], grid[1] - grid[0], f.astype(complex))


def matching_residual(theta_profile: ThetaLike, f: FieldEnvelope, t: float,
                      kappa: float) -> float:
    """Impedance-matching defect at time t (zero for a reflection-free drive).

    residual = -d/dt ln sin(theta) + d/dt ln |f| - (kappa/2) sin^2(theta),
    with central differences on the envelope grid.
    """
    dt = f.dt
    ts = np.array([t - dt, t, t + dt])
    s = _sin_theta_on(theta_profile, ts)
    mag = np.array([abs(f.value_at(x)) for x in ts])
    s_peak = float(np.max(_sin_theta_on(theta_profile, f.times)))
    f_peak = float(np.max(np.abs(f.values)))
    if mag[1] < 1e-12 * f_peak or s[1] < 1e-12 * s_peak:
        raise ZeroAmplitude(
            f"envelope or mixing amplitude at t={t:g} below 1e-12 of peak"
        )
    dlog_s = (np.log(s[2]) - np.log(s[0])) / (2 * dt)
    dlog_f = (np.log(mag[2]) - np.log(mag[0])) / (2 * dt)
    return float(-dlog_s + dlog_f - 0.5 * kappa * s[1] ** 2)


def export_profile_csv(p: PulseProfile, grid: np.ndarray, path: str | Path) -> None:
    """Write (t, Omega_A(t)) rows for plotting."""
    om = p.rabi(np.asarray(grid, dtype=float))
    lines = ["t,omega"] + [f"{t:.17g},{o:.17g}" for t, o in zip(grid, om)]
    Path(path).write_text("\n".join(lines) + "\n")
