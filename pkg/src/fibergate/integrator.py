"""Non-Hermitian Schrodinger propagation with adaptive error control.

Integrates i dpsi/dt = H(t) psi for a (generally non-Hermitian) H using an
embedded Dormand-Prince 4/5 pair.  Structured Hamiltonians (constant part
plus scalar-envelope drive terms) run on the compiled kernel when available;
arbitrary callables fall back to the pure-Python driver.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from ._kernels import purepy
from .envelopes import EnvelopeSpec
from .errors import NonFiniteAmplitude, StepUnderflow
from .hilbert import Basis, StateVector

DEFAULT_TOL = 1e-9
DEFAULT_SNAPSHOTS = 1000

_EMPTY_TABLE = np.zeros(2)


@dataclass(frozen=True)
class DriveTerm:
    """A scalar envelope multiplying a constant coupling matrix."""

    envelope: EnvelopeSpec
    matrix: np.ndarray


@dataclass(frozen=True)
class TimeDependentOperator:
    """H(t) = H0 + sum_k f_k(t) * Hk over a fixed basis."""

    h0: np.ndarray
    drives: tuple[DriveTerm, ...] = ()
    basis: Basis | None = None

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    def __call__(self, t: float) -> np.ndarray:
        h = np.array(self.h0, dtype=complex)
        for term in self.drives:
            h += term.envelope(t) * term.matrix
        return h


@dataclass
class IntegrationStats:
    n_steps: int
    n_rejected: int
    n_rhs: int
    backend: str


@dataclass
class Trajectory:
    """Snapshots of a propagated state plus norm history and diagnostics."""

    times: np.ndarray
    states: np.ndarray            # (n_snapshots, dim) complex
    norm2: np.ndarray             # squared norm per snapshot
    stats: IntegrationStats
    basis: Basis | None = None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def state(self, i: int) -> StateVector:
        if self.basis is None:
            raise ValueError("trajectory has no basis attached")
        return StateVector(self.basis, self.states[i])

    def amplitude_series(self, index: int) -> np.ndarray:
        return self.states[:, index]

    def export_csv(self, path: str | Path, amp_indices: Sequence[int] = ()) -> None:
        """Write (t, |psi|^2, Re/Im of selected amplitudes) rows."""
        header = ["t", "norm2"]
        for i in amp_indices:
            header += [f"re_{i}", f"im_{i}"]
        lines = [",".join(header)]
        for k, t in enumerate(self.times):
            row = [f"{t:.17g}", f"{self.norm2[k]:.17g}"]
            for i in amp_indices:
                row += [f"{self.states[k, i].real:.17g}", f"{self.states[k, i].imag:.17g}"]
            lines.append(",".join(row))
        Path(path).write_text("\n".join(lines) + "\n")


HamiltonianLike = TimeDependentOperator | Callable[[float], np.ndarray] | np.ndarray


def _raise_for_status(status: int, stats: IntegrationStats) -> None:
    if status == purepy.ERR_UNDERFLOW:
        raise StepUnderflow(
            f"step size collapsed after {stats.n_steps} steps "
            f"({stats.n_rejected} rejected)"
        )
    if status == purepy.ERR_NONFINITE:
        raise NonFiniteAmplitude("state amplitudes became non-finite")
    if status == purepy.ERR_MAXSTEPS:
        raise StepUnderflow("step budget exceeded before reaching t1")


def propagate(
    h: HamiltonianLike,
    psi0: StateVector | np.ndarray,
    t0: float,
    t1: float,
    tol: float = DEFAULT_TOL,
    atol: float | None = None,
    n_snapshots: int = DEFAULT_SNAPSHOTS,
    snap_times: np.ndarray | None = None,
) -> Trajectory:
    """Propagate psi0 from t0 to t1 recording evenly spaced snapshots.

    ``tol`` is the relative local tolerance of the embedded pair;
    ``atol`` defaults to the same value.  The final snapshot lands exactly
    at t1 (the last step is shortened to fit).
    """
    if t1 <= t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    basis = None
    if isinstance(psi0, StateVector):
        basis = psi0.basis
        y0 = np.array(psi0.amps, dtype=complex)
    else:
        y0 = np.array(psi0, dtype=complex)
    nrm = np.linalg.norm(y0)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"initial state must be normalized, |psi0| = {nrm!r}")
    if atol is None:
        atol = tol
    if snap_times is None:
        snap_times = np.linspace(t0, t1, max(2, n_snapshots))
    else:
        snap_times = np.asarray(snap_times, dtype=float)
        if snap_times[0] != t0 or snap_times[-1] != t1:
            raise ValueError("snap_times must start at t0 and end at t1")

    if isinstance(h, np.ndarray):
        h = TimeDependentOperator(h0=np.asarray(h, dtype=complex))

    if isinstance(h, TimeDependentOperator):
        if basis is None:
            basis = h.basis
        codes = [term.envelope.code for term in h.drives]
        param_rows = [np.asarray(term.envelope.params, dtype=float) for term in h.drives]
        tables = [
            term.envelope.table if term.envelope.table is not None else _EMPTY_TABLE
            for term in h.drives
        ]
        mats = [np.ascontiguousarray(term.matrix, dtype=complex) for term in h.drives]
        states, n_steps, n_rej, n_fev, status = _kernels.rk45_lincomb(
            np.ascontiguousarray(h.h0, dtype=complex), mats, codes, param_rows,
            tables, y0, snap_times, tol, atol,
        )
        backend = _kernels.BACKEND
    elif callable(h):
        def f(t, y):
            return -1j * (h(t) @ y)

        states, n_steps, n_rej, n_fev, status = purepy.rk45_callable(
            f, y0, snap_times, tol, atol
        )
        backend = "pure"
    else:
        raise TypeError(f"unsupported Hamiltonian type {type(h)!r}")

    stats = IntegrationStats(n_steps, n_rej, n_fev, backend)
    _raise_for_status(status, stats)
    norm2 = np.sum(np.abs(states) ** 2, axis=1)
    return Trajectory(snap_times, states, norm2, stats, basis=basis)


def loss_probability(traj: Trajectory) -> float:
    """Total photon-loss probability 1 - |psi(t1)|^2 of a no-jump trajectory."""
    return float(1.0 - traj.norm2[-1])
