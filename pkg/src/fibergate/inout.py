"""Long-distance regime: emit, fly, reflect, fly back, reabsorb.

The single flying excitation makes the quantum Langevin equations close on
c-number amplitudes: each cavity node is a tiny driven ODE system coupled to
the traveling envelope through the input-output boundary condition
c_out = c_in - sqrt(kappa) * a.  The fiber is a pure delay line with a flat
amplitude loss per pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import _kernels, envelopes
from .errors import BufferOverrun, NonPositiveRate
from .params import ParameterSet
from .pulses import FieldEnvelope, PulseProfile, sech_profile

GRID_PULSE_FRACTION = 200    # grid step <= delta_t / 200
GRID_RABI_FRACTION = 0.05    # ... and <= 0.05 / max(g_a, g_b)
GRID_MARGIN = 6.0            # grid extends 6 pulse widths past each center
_NODE_SUBSTEPS = 2


@dataclass(frozen=True)
class DelayLine:
    """One fiber span: length, light speed, flat loss per unit length."""

    length: float
    speed: float = 1.0
    loss: float = 0.0    # kappa_l

    def __post_init__(self):
        if self.length <= 0 or self.speed <= 0:
            raise NonPositiveRate("delay line needs positive length and speed")
        if not 0.0 <= self.loss * self.length < 1.0:
            raise NonPositiveRate(
                f"kappa_l * L must lie in [0, 1), got {self.loss * self.length!r}"
            )

    @property
    def one_way_delay(self) -> float:
        return self.length / self.speed

    @property
    def pass_amplitude(self) -> float:
        # (1 - kappa_l L)^2 of probability per round trip, split evenly
        return math.sqrt(1.0 - self.loss * self.length)


@dataclass
class NodeAmplitudes:
    """Final complex amplitudes of one cavity node (unused slots stay 0)."""

    atom_g1: complex = 0.0
    atom_e: complex = 0.0
    cav: complex = 0.0

    def populations(self) -> dict[str, float]:
        return {
            "g1": abs(self.atom_g1) ** 2,
            "e": abs(self.atom_e) ** 2,
            "cav": abs(self.cav) ** 2,
        }


@dataclass
class StageResult:
    """Envelope plus loss bookkeeping for one pipeline stage."""

    output: FieldEnvelope
    final: NodeAmplitudes
    gamma_loss: float             # gamma * int |e|^2 dt
    history: np.ndarray | None = field(repr=False, default=None)


def long_grid(params: ParameterSet, t_start: float | None = None,
              t_end: float | None = None) -> np.ndarray:
    """Uniform grid resolving both the pulse and the node internal dynamics."""
    dt_req = min(
        params.pulse.delta_t / GRID_PULSE_FRACTION,
        GRID_RABI_FRACTION / max(params.g_a, params.g_b),
    )
    t_c1 = params.pulse.t_c
    t_c2 = t_c1 + params.round_trip_time()
    if t_start is None:
        t_start = t_c1 - GRID_MARGIN * params.pulse.delta_t
    if t_end is None:
        t_end = t_c2 + GRID_MARGIN * params.pulse.delta_t
    n = int(math.ceil((t_end - t_start) / dt_req)) + 1
    return np.linspace(t_start, t_end, n)


def _run_a_node(params: ParameterSet, drive: PulseProfile | None,
                cin: np.ndarray, grid: np.ndarray, y0) -> StageResult:
    """Driven atom-cavity node A: amplitudes (g1, e, cavity photon)."""
    p = params
    dt = grid[1] - grid[0]
    sqk = math.sqrt(p.kappa)
    m0 = np.array(
        [
            [0.0, 0.0, 0.0],
            [0.0, -0.5 * p.gamma, -1j * p.g_a],
            [0.0, -1j * p.g_a, -0.5 * p.kappa],
        ],
        dtype=complex,
    )
    m1 = np.zeros((3, 3), dtype=complex)
    m1[0, 1] = m1[1, 0] = -1j
    env = drive.envelope_spec() if drive is not None else envelopes.zero()
    table = env.table if env.table is not None else np.zeros(2)
    in_vec = np.array([0.0, 0.0, sqk], dtype=complex)
    out_row = np.array([0.0, 0.0, -sqk], dtype=complex)
    hist, cout = _kernels.node_rk4(
        m0, m1, env.code, env.params, table, in_vec, out_row,
        np.ascontiguousarray(cin, dtype=complex), grid[0], dt,
        np.asarray(y0, dtype=complex), _NODE_SUBSTEPS,
    )
    gamma_loss = p.gamma * float(trapezoid(np.abs(hist[:, 1]) ** 2, dx=dt))
    final = NodeAmplitudes(atom_g1=hist[-1, 0], atom_e=hist[-1, 1], cav=hist[-1, 2])
    return StageResult(FieldEnvelope(grid[0], dt, cout), final, gamma_loss, hist)


def emit_stage(params: ParameterSet, drive: PulseProfile,
               grid: np.ndarray) -> StageResult:
    grid = np.asarray(grid, dtype=float)
    cin = np.zeros(len(grid), dtype=complex)
    return _run_a_node(params, drive, cin, grid, y0=[1.0, 0.0, 0.0])


def emit(params: ParameterSet, drive: PulseProfile,
         grid: np.ndarray) -> tuple[FieldEnvelope, dict[str, float]]:
    """Adiabatic single-photon emission from node A starting in g1.

    Returns the emitted envelope and the residual node populations (with the
    integrated spontaneous-emission loss under key "gamma_loss").
    """
    stage = emit_stage(params, drive, grid)
    return stage.output, stage.final.populations() | {"gamma_loss": stage.gamma_loss}


def reflect_stage(params: ParameterSet, input_env: FieldEnvelope,
                  atom_b: str) -> StageResult:
    p = params
    if atom_b not in ("g0", "g2"):
        raise ValueError(f"atom_b must be g0 or g2, got {atom_b!r}")
    g_b = p.g_b if atom_b == "g2" else 0.0
    dt = input_env.dt
    sqk = math.sqrt(p.kappa)
    m0 = np.array(
        [[-0.5 * p.kappa, -1j * g_b], [-1j * g_b, -0.5 * p.gamma]], dtype=complex
    )
    m1 = np.zeros((2, 2), dtype=complex)
    in_vec = np.array([sqk, 0.0], dtype=complex)
    out_row = np.array([-sqk, 0.0], dtype=complex)
    env = envelopes.zero()
    hist, cout = _kernels.node_rk4(
        m0, m1, env.code, env.params, np.zeros(2), in_vec, out_row,
        np.ascontiguousarray(input_env.values, dtype=complex),
        input_env.t0, dt, np.zeros(2, dtype=complex), _NODE_SUBSTEPS,
    )
    gamma_loss = p.gamma * float(trapezoid(np.abs(hist[:, 1]) ** 2, dx=dt))
    final = NodeAmplitudes(atom_e=hist[-1, 1], cav=hist[-1, 0])
    return StageResult(FieldEnvelope(input_env.t0, dt, cout), final, gamma_loss, hist)


def reflect(params: ParameterSet, input_env: FieldEnvelope,
            atom_b: str) -> FieldEnvelope:
    """Conditional reflection at node B: pi phase flip iff atom B is in g0."""
    return reflect_stage(params, input_env, atom_b).output


def propagate_line(line: DelayLine, env: FieldEnvelope) -> FieldEnvelope:
    """Delay by L/c (snapped to the grid) and attenuate one fiber pass."""
    shift = int(round(line.one_way_delay / env.dt))
    n = len(env.values)
    if shift >= n:
        raise BufferOverrun(f"delay of {shift} samples exceeds the {n}-sample window")
    tail_energy = float(trapezoid(np.abs(env.values[n - shift:]) ** 2, dx=env.dt))
    total = env.norm2()
    if total > 0 and tail_energy > 1e-9 * total:
        raise BufferOverrun(
            f"envelope would lose {tail_energy / total:.2e} of its energy off "
            "the end of the window"
        )
    out = np.zeros_like(env.values)
    out[shift:] = env.values[: n - shift]
    return FieldEnvelope(env.t0, env.dt, line.pass_amplitude * out)


@dataclass
class AbsorbResult:
    final: NodeAmplitudes
    reflected: FieldEnvelope
    reflected_fraction: float
    gamma_loss: float


def absorb(params: ParameterSet, input_env: FieldEnvelope, grid: np.ndarray,
           drive: PulseProfile | None = None) -> AbsorbResult:
    """Impedance-matched reabsorption at node A; the atom ends in g1.

    The default drive is the time-reversed emission profile centered one
    round trip after the emission center.
    """
    if drive is None:
        t_c2 = params.pulse.t_c + params.round_trip_time()
        drive = sech_profile(
            "sech_absorb", params.kappa, params.g_a, t_c2, params.pulse.delta_t
        )
    stage = _run_a_node(params, drive, input_env.values,
                        np.asarray(grid, dtype=float), y0=[0.0, 0.0, 0.0])
    in_energy = input_env.norm2()
    frac = stage.output.norm2() / in_energy if in_energy > 0 else 0.0
    return AbsorbResult(stage.final, stage.output, float(frac), stage.gamma_loss)


@dataclass
class LongGateResult:
    """One branch of the flying-photon gate."""

    amp_return: complex
    p_no_loss: float
    phi: float
    emitted: FieldEnvelope
    returned: FieldEnvelope
    reflected_fraction: float
    budget: dict[str, float]

    @property
    def P(self) -> float:
        return self.p_no_loss


def run_long_gate(params: ParameterSet, atom_b: str,
                  grid: np.ndarray | None = None) -> LongGateResult:
    """Full pipeline emit -> line -> reflect -> line -> absorb for one branch.

    amp_return is the final g1 amplitude of atom A and P = |amp_return|^2;
    the conditional phase is the g2/g0 difference of arg(amp_return), taken
    by :func:`run_long_gate_pair`.  ``budget`` accounts for the lost and
    stranded probability; its entries plus P sum to 1 up to discretization.
    """
    p = params
    if grid is None:
        grid = long_grid(p)
    grid = np.asarray(grid, dtype=float)
    emit_drive = sech_profile(
        "sech_emit", p.kappa, p.g_a, p.pulse.t_c, p.pulse.delta_t
    )
    line = DelayLine(p.fiber_length, p.c, p.kappa_l)

    stage1 = emit_stage(p, emit_drive, grid)
    emitted = stage1.output
    to_b = propagate_line(line, emitted)
    stage2 = reflect_stage(p, to_b, atom_b)
    back = propagate_line(line, stage2.output)
    stage3 = absorb(p, back, grid)
    amp = complex(stage3.final.atom_g1)

    line_loss = (emitted.norm2() - to_b.norm2()) + (
        stage2.output.norm2() - back.norm2()
    )
    residual = (
        sum(stage1.final.populations().values())
        + abs(stage2.final.cav) ** 2 + abs(stage2.final.atom_e) ** 2
        + abs(stage3.final.atom_e) ** 2 + abs(stage3.final.cav) ** 2
    )
    budget = {
        "gamma_loss": stage1.gamma_loss + stage2.gamma_loss + stage3.gamma_loss,
        "line_loss": float(line_loss),
        "reflected": stage3.reflected.norm2(),
        "residual": float(residual),
    }
    return LongGateResult(
        amp_return=amp,
        p_no_loss=abs(amp) ** 2,
        phi=float(np.angle(amp)),
        emitted=emitted,
        returned=back,
        reflected_fraction=stage3.reflected_fraction,
        budget=budget,
    )


@dataclass
class LongGatePair:
    g0: LongGateResult
    g2: LongGateResult

    @property
    def conditional_phase(self) -> float:
        return float(np.angle(self.g2.amp_return / self.g0.amp_return))


def run_long_gate_pair(params: ParameterSet,
                       grid: np.ndarray | None = None) -> LongGatePair:
    """Both atom-B branches on a shared grid."""
    if grid is None:
        grid = long_grid(params)
    return LongGatePair(
        g0=run_long_gate(params, "g0", grid),
        g2=run_long_gate(params, "g2", grid),
    )
