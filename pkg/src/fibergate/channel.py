"""Operator-sum description of the gate and its fidelity.

The middle step of the gate acts on the four two-qubit branches as a
trace-preserving channel with three Kraus operators: a diagonal "no photon
lost" map carrying the conditional phases, and two dephasing projectors that
soak up the loss probability on the driven branches.  Basis ordering is
(|g0 g0>, |g0 g2>, |g1 g0>, |g1 g2>).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidState, ProbabilityOutOfRange, UnnormalizedInput

QUBIT_LABELS = ("g0g0", "g0g2", "g1g0", "g1g2")

# optical pumping reroutes stray population back into the qubit subspace
PUMPING_TARGETS = {"g2_a": "g1_a", "g1_b": "g2_b"}


@dataclass(frozen=True)
class GateChannel:
    """Kraus operators M1..M3 with the extracted (P1, P2, phi1, phi2)."""

    p1: float
    p2: float
    phi1: float
    phi2: float
    kraus: tuple[np.ndarray, np.ndarray, np.ndarray]

    def completeness_defect(self) -> float:
        """max |sum_i Mi^dag Mi - identity|."""
        acc = sum(m.conj().T @ m for m in self.kraus)
        return float(np.max(np.abs(acc - np.eye(4))))

    def to_json(self) -> str:
        payload = {
            "p1": self.p1,
            "p2": self.p2,
            "phi1": self.phi1,
            "phi2": self.phi2,
            "kraus": [
                {"re": m.real.tolist(), "im": m.imag.tolist()} for m in self.kraus
            ],
        }
        return json.dumps(payload, indent=2)


def build_channel(p1: float, p2: float, phi1: float, phi2: float) -> GateChannel:
    """Assemble the three Kraus operators from branch outcomes."""
    for name, p in (("P1", p1), ("P2", p2)):
        if not 0.0 <= p <= 1.0:
            raise ProbabilityOutOfRange(f"{name} = {p!r} outside [0, 1]")
    m1 = np.diag(
        [1.0, 1.0, np.sqrt(p1) * np.exp(1j * phi1), np.sqrt(p2) * np.exp(1j * phi2)]
    ).astype(complex)
    m2 = np.zeros((4, 4), dtype=complex)
    m2[2, 2] = np.sqrt(1.0 - p1)
    m3 = np.zeros((4, 4), dtype=complex)
    m3[3, 3] = np.sqrt(1.0 - p2)
    return GateChannel(p1, p2, phi1, phi2, (m1, m2, m3))


def apply_channel(rho: np.ndarray, ch: GateChannel) -> np.ndarray:
    """rho -> sum_i Mi rho Mi^dag, with input-state validation."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidState(f"density matrix must be 4x4, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise InvalidState(f"trace is {np.trace(rho)!r}, not 1")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -1e-10:
        raise InvalidState("density matrix has a negative eigenvalue")
    return sum(m @ rho @ m.conj().T for m in ch.kraus)


def _check_normalized(amps) -> np.ndarray:
    amps = np.asarray(amps, dtype=complex)
    if amps.shape != (4,):
        raise UnnormalizedInput(f"need 4 amplitudes, got shape {amps.shape}")
    total = float(np.sum(np.abs(amps) ** 2))
    if abs(total - 1.0) > 1e-9:
        raise UnnormalizedInput(f"|alpha|^2 sums to {total!r}, not 1")
    return amps


def fidelity(amps, p1: float, p2: float) -> float:
    """Closed-form gate fidelity for a pure input with amplitudes alpha.

    F = sqrt[(|a00|^2 + |a02|^2 + |a10|^2 sqrt(P1) + |a12|^2 sqrt(P2))^2
             + |a10|^4 (1 - P1) + |a12|^4 (1 - P2)].
    """
    a = np.abs(_check_normalized(amps)) ** 2
    for name, p in (("P1", p1), ("P2", p2)):
        if not 0.0 <= p <= 1.0:
            raise ProbabilityOutOfRange(f"{name} = {p!r} outside [0, 1]")
    coherent = a[0] + a[1] + a[2] * np.sqrt(p1) + a[3] * np.sqrt(p2)
    return float(np.sqrt(coherent**2 + a[2] ** 2 * (1 - p1) + a[3] ** 2 * (1 - p2)))


def fidelity_channel_crosscheck(amps, ch: GateChannel) -> float:
    """Fidelity via the Kraus map directly: an independent oracle for the
    closed form.

    The ideal target absorbs the compensable phase:
    |psi_t> = diag(1, 1, e^{i phi1}, e^{i (phi1 + pi)}) alpha, i.e. a
    controlled-Z up to the single-qubit phi1 correction.  Equals
    :func:`fidelity` exactly when the channel is calibrated
    (phi2 = phi1 + pi).
    """
    amps = _check_normalized(amps)
    target = amps * np.exp(1j * np.array([0.0, 0.0, ch.phi1, ch.phi1 + np.pi]))
    rho_out = apply_channel(np.outer(amps, amps.conj()), ch)
    return float(np.sqrt(np.real(target.conj() @ rho_out @ target)))


def optical_pumping_map(pop_leak: dict[str, float]) -> dict[str, float]:
    """Incoherent rerouting of leaked population into the qubit subspace.

    Population stranded on g2_A moves to g1_A; population on g1_B moves to
    g2_B.  Keys already inside the qubit subspace pass through unchanged;
    the total is preserved exactly.
    """
    out: dict[str, float] = {}
    for key, pop in pop_leak.items():
        if pop < 0:
            raise ProbabilityOutOfRange(f"population {key!r} is negative: {pop!r}")
        target = PUMPING_TARGETS.get(key, key)
        out[target] = out.get(target, 0.0) + pop
    return out


def export_channel_json(ch: GateChannel, path: str | Path) -> None:
    Path(path).write_text(ch.to_json() + "\n")
