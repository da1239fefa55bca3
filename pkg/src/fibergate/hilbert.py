"""Single-excitation basis for atom A + cavity A + fiber + cavity B + atom B.

Every Hamiltonian term conserves the shared excitation number, and the gate's
middle step starts with exactly one excitation, so the basis is hard-truncated
to N = 1.  Atom A contributes {g1 (excited-ground), e}; the photon can sit in
cavity A, one of the 2M+1 fiber modes, or cavity B; atom B is pinned to its
branch label (g0 or g2) and only contributes an excited label |e>_B when the
branch is g2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BasisMismatch, NonPositiveRate

_EXCITED_GROUND_A = "g1"  # the drive-coupled ground level of atom A


@dataclass(frozen=True)
class BasisLabel:
    """One product label: atomic states, cavity photon numbers, fiber mode."""

    atom_a: str               # g0 | g1 | g2 | e
    n_cav_a: int              # 0 | 1
    fiber_mode: int | None    # occupied mode index, or None for vacuum
    n_cav_b: int              # 0 | 1
    atom_b: str               # g0 | g1 | g2 | e

    def excitation_number(self) -> int:
        n = self.n_cav_a + self.n_cav_b
        if self.atom_a in (_EXCITED_GROUND_A, "e"):
            n += 1
        if self.fiber_mode is not None:
            n += 1
        if self.atom_b == "e":
            n += 1
        return n

    def __str__(self) -> str:
        fiber = "-" if self.fiber_mode is None else str(self.fiber_mode)
        return f"{self.atom_a}|{self.n_cav_a}|{fiber}|{self.n_cav_b}|{self.atom_b}"


class Basis:
    """Ordered single-excitation basis with positional lookup.

    Ordering: atom-A block (g1 then e), cavity-A photon, fiber modes ascending,
    cavity-B photon, then (g2 branch only) the atom-B excited label.
    """

    def __init__(self, labels: tuple[BasisLabel, ...], m_modes: int, atom_b_init: str):
        self.labels = labels
        self.m_modes = m_modes
        self.atom_b_init = atom_b_init
        self._index = {label: i for i, label in enumerate(labels)}

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index_of(self, label: BasisLabel) -> int:
        return self._index[label]

    # positional helpers for the fixed layout
    @property
    def i_g1(self) -> int:
        return 0

    @property
    def i_e(self) -> int:
        return 1

    @property
    def i_cav_a(self) -> int:
        return 2

    def i_fiber(self, n: int) -> int:
        if abs(n) > self.m_modes:
            raise KeyError(f"fiber mode {n} outside cutoff {self.m_modes}")
        return 3 + (n + self.m_modes)

    @property
    def i_cav_b(self) -> int:
        return 3 + (2 * self.m_modes + 1)

    @property
    def i_e_b(self) -> int | None:
        return self.i_cav_b + 1 if self.atom_b_init == "g2" else None

    def fiber_indices(self) -> range:
        return range(3, 3 + 2 * self.m_modes + 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, Basis) and self.labels == other.labels

    def __hash__(self) -> int:
        return hash(self.labels)

    def to_json(self) -> str:
        return json.dumps([str(label) for label in self.labels])


def build_basis(atom_b_init: str = "g0", m_modes: int = 20) -> Basis:
    """Enumerate the N = 1 basis for one branch of atom B.

    dim = 2M + 5 for the g0 branch, 2M + 6 for g2 (extra |e>_B label).
    """
    if atom_b_init not in ("g0", "g2"):
        raise ValueError(f"atom_b_init must be 'g0' or 'g2', got {atom_b_init!r}")
    if m_modes < 0:
        raise NonPositiveRate(f"m_modes must be >= 0, got {m_modes}")
    b = atom_b_init
    labels = [
        BasisLabel("g1", 0, None, 0, b),
        BasisLabel("e", 0, None, 0, b),
        BasisLabel("g2", 1, None, 0, b),
    ]
    labels += [BasisLabel("g2", 0, n, 0, b) for n in range(-m_modes, m_modes + 1)]
    labels.append(BasisLabel("g2", 0, None, 1, b))
    if atom_b_init == "g2":
        labels.append(BasisLabel("g2", 0, None, 0, "e"))
    basis = Basis(tuple(labels), m_modes, atom_b_init)
    assert all(label.excitation_number() == 1 for label in basis.labels)
    return basis


@dataclass
class StateVector:
    """Complex amplitudes over a basis."""

    basis: Basis
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (self.basis.dim,):
            raise BasisMismatch(
                f"amplitude vector of length {self.amps.shape} does not match "
                f"basis dimension {self.basis.dim}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "StateVector":
        return StateVector(self.basis, self.amps / np.linalg.norm(self.amps))

    def __getitem__(self, label: BasisLabel) -> complex:
        return complex(self.amps[self.basis.index_of(label)])


def basis_state(basis: Basis, index: int) -> StateVector:
    amps = np.zeros(basis.dim, dtype=complex)
    amps[index] = 1.0
    return StateVector(basis, amps)


def overlap(a: StateVector, b: StateVector) -> complex:
    """<a|b> with conjugation on a. Raises BasisMismatch for different bases."""
    if a.basis != b.basis:
        raise BasisMismatch("state vectors live in different bases")
    return complex(np.vdot(a.amps, b.amps))


def dump_amplitudes(state: StateVector, path: str | Path) -> None:
    """Write (label, Re, Im) rows as CSV for debugging."""
    lines = ["label,re,im"]
    for label, amp in zip(state.basis.labels, state.amps):
        lines.append(f"{label},{amp.real:.17g},{amp.imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
