"""Physical parameters, validation, and regime classification.

Unit convention: all rates are expressed in units of the cavity decay rate
kappa, times in 1/kappa, lengths in c/kappa.  With the default ``c = 1`` a
fiber of length L has one-way flight time L and free spectral range
``delta_omega = pi * c / L``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError, InconsistentGeometry, NonPositiveRate

# Safety margins for the regime decision.  The short-distance condition is a
# strong inequality (pulse much longer than the round trip); the long-distance
# condition needs headroom so the emitted pulse fully clears the fiber.
R_SHORT_DEFAULT = 20.0
R_LONG_DEFAULT = 2.0

_GEOMETRY_RTOL = 1e-9


@dataclass(frozen=True)
class PulseConfig:
    """Classical drive settings: peak Rabi frequency, center, width, shape."""

    omega0: float = 4.65
    t_c: float = 0.0
    delta_t: float = 125.0
    shape: str = "gaussian"
    support_margin: float = 5.0  # support is t_c +/- margin * delta_t

    def support(self) -> tuple[float, float]:
        half = self.support_margin * self.delta_t
        return (self.t_c - half, self.t_c + half)


@dataclass(frozen=True)
class ParameterSet:
    """All physical rates, detunings and geometry of the two-cavity link."""

    gamma: float = 1.0            # atomic spontaneous emission
    kappa: float = 1.0            # cavity decay (both cavities)
    kappa_f: float = 0.0          # per-mode fiber photon loss (short regime)
    kappa_l: float = 0.0          # per-unit-length fiber loss (long regime)
    g_a: float = 10.0             # atom-cavity coupling, node A
    g_b: float = 10.0             # atom-cavity coupling, node B
    delta: float = 500.0          # drive/cavity detuning from the excited state
    delta_prime: float = 200.0    # extra Raman detuning for the transfer steps
    fiber_length: float | None = None
    delta_omega: float | None = 7.5   # fiber free spectral range pi*c/L
    c: float = 1.0                # light speed in the fiber
    n_fiber_modes: int = 20       # fiber-mode cutoff M (modes -M..M)
    pulse: PulseConfig = field(default_factory=PulseConfig)

    def round_trip_time(self) -> float:
        return 2.0 * self.fiber_length / self.c


class RegimeTag(enum.Enum):
    SHORT = "short"
    LONG = "long"
    AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class Regime:
    """Classification result with the margin ratio that decided it.

    ``margin`` is >= 1 for a definite tag; for AMBIGUOUS it is the larger
    (closest to qualifying) of the two sub-unity ratios.
    """

    tag: RegimeTag
    margin: float


def validate(raw: ParameterSet) -> ParameterSet:
    """Check physicality and fill in derived geometry.

    Exactly one of ``fiber_length`` / ``delta_omega`` may be omitted; the
    other is derived from ``delta_omega * L = pi * c``.  Idempotent.
    """
    for name in ("gamma", "kappa", "kappa_f", "kappa_l", "g_a", "g_b", "c"):
        value = getattr(raw, name)
        if not math.isfinite(value) or value < 0:
            raise NonPositiveRate(f"{name} must be finite and >= 0, got {value!r}")
    if raw.kappa <= 0:
        raise NonPositiveRate(f"kappa must be > 0, got {raw.kappa!r}")
    if raw.g_a <= 0:
        raise NonPositiveRate(f"g_a must be > 0, got {raw.g_a!r}")
    if raw.c <= 0:
        raise NonPositiveRate(f"c must be > 0, got {raw.c!r}")
    if raw.n_fiber_modes < 0:
        raise NonPositiveRate(f"n_fiber_modes must be >= 0, got {raw.n_fiber_modes!r}")
    for name in ("delta", "delta_prime"):
        if not math.isfinite(getattr(raw, name)):
            raise NonPositiveRate(f"{name} must be finite")
    if raw.pulse.delta_t <= 0 or not math.isfinite(raw.pulse.delta_t):
        raise NonPositiveRate(f"pulse width must be > 0, got {raw.pulse.delta_t!r}")
    if raw.pulse.omega0 < 0:
        raise NonPositiveRate(f"pulse peak must be >= 0, got {raw.pulse.omega0!r}")

    length, fsr = raw.fiber_length, raw.delta_omega
    target = math.pi * raw.c
    if length is None and fsr is None:
        raise InconsistentGeometry("need fiber_length or delta_omega")
    if length is not None and length <= 0:
        raise NonPositiveRate(f"fiber_length must be > 0, got {length!r}")
    if fsr is not None and fsr <= 0:
        raise NonPositiveRate(f"delta_omega must be > 0, got {fsr!r}")
    if length is None:
        length = target / fsr
    elif fsr is None:
        fsr = target / length
    elif abs(fsr * length - target) > _GEOMETRY_RTOL * target:
        raise InconsistentGeometry(
            f"delta_omega * L = {fsr * length!r} but pi * c = {target!r}"
        )
    return replace(raw, fiber_length=length, delta_omega=fsr)


def classify_regime(
    p: ParameterSet,
    pulse_width: float,
    r_short: float = R_SHORT_DEFAULT,
    r_long: float = R_LONG_DEFAULT,
) -> Regime:
    """Decide whether a configuration is in the short- or long-distance regime.

    Short: the pulse is at least ``r_short`` round trips long.  Long: the
    emitted photon (width taken equal to the drive width) fits ``r_long``
    times into a one-way flight.  Neither: ambiguous.
    """
    if pulse_width <= 0:
        raise NonPositiveRate(f"pulse_width must be > 0, got {pulse_width!r}")
    round_trip = p.round_trip_time()
    short_ratio = pulse_width / (r_short * round_trip)
    long_ratio = p.fiber_length / p.c / (r_long * pulse_width)
    if short_ratio >= 1.0:
        return Regime(RegimeTag.SHORT, short_ratio)
    if long_ratio >= 1.0:
        return Regime(RegimeTag.LONG, long_ratio)
    return Regime(RegimeTag.AMBIGUOUS, max(short_ratio, long_ratio))


# -- config file ------------------------------------------------------------

_FLOAT_KEYS = {
    "gamma": "gamma",
    "kappa": "kappa",
    "kappa_f": "kappa_f",
    "kappa_l": "kappa_l",
    "g_a": "g_a",
    "g_b": "g_b",
    "delta": "delta",
    "delta_prime": "delta_prime",
    "fiber_length": "fiber_length",
    "delta_omega": "delta_omega",
}
_PULSE_FLOAT_KEYS = {"omega0": "omega0", "t_c": "t_c", "delta_t": "delta_t"}
KNOWN_KEYS = (
    set(_FLOAT_KEYS) | set(_PULSE_FLOAT_KEYS) | {"pulse_shape", "n_fiber_modes"}
)


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment. Unknown keys raise."""
    out: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        out[key] = value
    return out


def params_from_mapping(entries: dict[str, str]) -> ParameterSet:
    kwargs = {}
    pulse_kwargs = {}
    for key, value in entries.items():
        try:
            if key in _FLOAT_KEYS:
                kwargs[_FLOAT_KEYS[key]] = float(value)
            elif key in _PULSE_FLOAT_KEYS:
                pulse_kwargs[_PULSE_FLOAT_KEYS[key]] = float(value)
            elif key == "n_fiber_modes":
                kwargs["n_fiber_modes"] = int(value)
            elif key == "pulse_shape":
                if value not in ("gaussian", "sech_emit", "sech_absorb"):
                    raise ConfigError(f"unknown pulse_shape {value!r}")
                pulse_kwargs["shape"] = value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    # an explicit fiber_length displaces the default free spectral range
    if "fiber_length" in kwargs and "delta_omega" not in kwargs:
        kwargs["delta_omega"] = None
    return validate(ParameterSet(pulse=PulseConfig(**pulse_kwargs), **kwargs))


def load_params(path: str | Path) -> ParameterSet:
    """Read and validate a config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return params_from_mapping(parse_config(text))
