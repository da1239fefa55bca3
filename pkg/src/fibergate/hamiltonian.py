"""Assembly of the coupled atom-cavity-fiber Hamiltonians.

All operators are dense complex matrices over the single-excitation basis.
Loss enters as non-Hermitian diagonal terms (-i gamma/2 on excited atomic
levels, -i kappa_f/2 on fiber modes): the squared norm of a propagated state
is then the probability that no photon has been lost (no-jump convention).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import envelopes
from .errors import DetuningTooSmall
from .hilbert import Basis, build_basis
from .integrator import DriveTerm, TimeDependentOperator
from .params import ParameterSet
from .pulses import PulseProfile

EFFECTIVE_B_MARGIN = 50.0   # adiabatic elimination needs delta >= margin * g_b
STIRAP_MARGIN = 20.0        # Raman transfer needs delta_prime >= margin * g_b

STIRAP_LABELS = ("g1_b", "e_b", "g2_b", "g2_b_photon")
B_LOCAL_LABELS = ("cav_b_photon", "e_b")


@dataclass(frozen=True)
class OperatorMatrix:
    """A dense operator over an explicit basis (or a small labelled subspace)."""

    entries: np.ndarray
    basis: Basis | None = None
    labels: tuple[str, ...] | None = None

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class HamiltonianSpec:
    """Everything needed to assemble the short-distance Hamiltonian at any t."""

    params: ParameterSet
    atom_b_init: str = "g0"         # g0 | g2
    b_coupling: str = "none"        # full | effective | none
    drive: PulseProfile | None = None
    include_b_decay: bool = True    # keep -i gamma/2 on |e>_B in the full variant

    def __post_init__(self):
        if self.atom_b_init not in ("g0", "g2"):
            raise ValueError(f"atom_b_init must be g0 or g2, got {self.atom_b_init!r}")
        if self.b_coupling not in ("full", "effective", "none"):
            raise ValueError(f"bad b_coupling {self.b_coupling!r}")
        if self.atom_b_init == "g0" and self.b_coupling != "none":
            raise ValueError("the g0 branch has no atom-B coupling")
        if self.b_coupling == "effective":
            p = self.params
            if p.delta < EFFECTIVE_B_MARGIN * p.g_b:
                raise DetuningTooSmall(
                    f"adiabatic elimination needs delta >= {EFFECTIVE_B_MARGIN:g} * g_b; "
                    f"got delta = {p.delta:g}, g_b = {p.g_b:g}"
                )


def effective_cavity_coupling(kappa: float, delta_omega: float) -> float:
    """Per-mode cavity-fiber coupling kappa' = sqrt(kappa * delta_omega / 2 pi)."""
    return math.sqrt(kappa * delta_omega / (2.0 * math.pi))


def short_hamiltonian(spec: HamiltonianSpec) -> TimeDependentOperator:
    """Build H(t) = H_static + Omega_A(t) * H_drive over the N=1 basis.

    H_static holds the detuned excited level, the atom-cavity coupling g_A,
    the cavity-fiber ladder with alternating-sign coupling to cavity B, the
    fiber-loss terms, and the selected atom-B variant.  The classical drive
    only enters through the |e><g1| coupling.
    """
    p = spec.params
    # the g2 branch always carries the |e>_B label; under the effective
    # variant it simply stays unpopulated
    basis = build_basis(spec.atom_b_init, p.n_fiber_modes)
    dim = basis.dim
    h0 = np.zeros((dim, dim), dtype=complex)
    kp = effective_cavity_coupling(p.kappa, p.delta_omega)

    i_e, i_ca, i_cb = basis.i_e, basis.i_cav_a, basis.i_cav_b
    h0[i_e, i_e] = p.delta - 0.5j * p.gamma
    h0[i_e, i_ca] = p.g_a
    h0[i_ca, i_e] = p.g_a
    for n in range(-p.n_fiber_modes, p.n_fiber_modes + 1):
        i = basis.i_fiber(n)
        h0[i, i] = n * p.delta_omega - 0.5j * p.kappa_f
        h0[i_ca, i] = 1j * kp
        h0[i, i_ca] = -1j * kp
        sign = -1.0 if n % 2 else 1.0
        h0[i_cb, i] = 1j * kp * sign
        h0[i, i_cb] = -1j * kp * sign

    if spec.atom_b_init == "g2":
        if spec.b_coupling == "full":
            i_eb = basis.i_e_b
            h0[i_eb, i_eb] = p.delta
            if spec.include_b_decay:
                h0[i_eb, i_eb] -= 0.5j * p.gamma
            h0[i_cb, i_eb] = p.g_b
            h0[i_eb, i_cb] = p.g_b
        elif spec.b_coupling == "effective":
            h0[i_cb, i_cb] += -p.g_b**2 / p.delta

    h_drive = np.zeros((dim, dim), dtype=complex)
    h_drive[basis.i_g1, i_e] = 1.0
    h_drive[i_e, basis.i_g1] = 1.0
    drive_env = spec.drive.envelope_spec() if spec.drive is not None else envelopes.zero()
    return TimeDependentOperator(
        h0=h0, drives=(DriveTerm(drive_env, h_drive),), basis=basis
    )


def assemble_short(spec: HamiltonianSpec, t: float) -> OperatorMatrix:
    """The short-distance Hamiltonian evaluated at time t."""
    op = short_hamiltonian(spec)
    return OperatorMatrix(entries=op(t), basis=op.basis)


def assemble_b_local(params: ParameterSet, atom_b: str = "g2") -> OperatorMatrix:
    """Local cavity-B Hamiltonian on the (photon, excited-atom) pair.

    The g0 branch has no atom-cavity coupling at all: the operator is zero.
    """
    h = np.zeros((2, 2), dtype=complex)
    if atom_b == "g2":
        h[0, 1] = params.g_b
        h[1, 0] = params.g_b
        h[1, 1] = -0.5j * params.gamma
    elif atom_b != "g0":
        raise ValueError(f"atom_b must be g0 or g2, got {atom_b!r}")
    return OperatorMatrix(entries=h, labels=B_LOCAL_LABELS)


def stirap_hamiltonian(
    params: ParameterSet,
    omega_1b: PulseProfile,
    omega_2b: PulseProfile,
    margin: float = STIRAP_MARGIN,
) -> TimeDependentOperator:
    """Raman-transfer Hamiltonian for atom B over (g1, e, g2, g2+cavity photon).

    Both classical fields sit at one-photon detuning delta + delta_prime; the
    cavity transition stays at detuning delta, which puts the photon label at
    delta_prime and suppresses photon generation for delta_prime >> g_b.
    """
    p = params
    if p.delta_prime < margin * p.g_b:
        raise DetuningTooSmall(
            f"adiabatic passage needs delta_prime >= {margin:g} * g_b; "
            f"got delta_prime = {p.delta_prime:g}, g_b = {p.g_b:g}"
        )
    h0 = np.zeros((4, 4), dtype=complex)
    h0[1, 1] = p.delta + p.delta_prime - 0.5j * p.gamma
    h0[3, 3] = p.delta_prime
    h0[1, 3] = p.g_b
    h0[3, 1] = p.g_b
    m1 = np.zeros((4, 4), dtype=complex)
    m1[0, 1] = m1[1, 0] = 1.0
    m2 = np.zeros((4, 4), dtype=complex)
    m2[1, 2] = m2[2, 1] = 1.0
    return TimeDependentOperator(
        h0=h0,
        drives=(
            DriveTerm(omega_1b.envelope_spec(), m1),
            DriveTerm(omega_2b.envelope_spec(), m2),
        ),
    )


def assemble_stirap(
    params: ParameterSet,
    omega_1b: PulseProfile,
    omega_2b: PulseProfile,
    t: float,
) -> OperatorMatrix:
    """The Raman-transfer Hamiltonian evaluated at time t."""
    op = stirap_hamiltonian(params, omega_1b, omega_2b)
    return OperatorMatrix(entries=op(t), labels=STIRAP_LABELS)


def dump_operator_csv(op: OperatorMatrix, path: str | Path) -> None:
    """Write the nonzero entries as (i, j, re, im) rows."""
    lines = ["i,j,re,im"]
    rows, cols = np.nonzero(op.entries)
    for i, j in zip(rows, cols):
        z = op.entries[i, j]
        lines.append(f"{i},{j},{z.real:.17g},{z.imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
