"""Dark states, adiabatic eigenbranch tracking, and the dynamical phase.

The drive-dressed atom-cavity system has a zero-energy dark state; coupling
atom B shifts it, and the accumulated shift is the conditional phase of the
gate.  This module constructs the analytic dark states, follows the perturbed
eigenbranch through a full eigendecomposition at each grid time, and
integrates the eigenvalue into a phase.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.integrate import simpson

from .errors import TrackingLost
from .hamiltonian import HamiltonianSpec, effective_cavity_coupling, short_hamiltonian
from .hilbert import Basis, StateVector, build_basis
from .integrator import TimeDependentOperator
from .params import ParameterSet

REFINE_OVERLAP = 0.999   # refine the grid below this step-to-step overlap
FAIL_OVERLAP = 0.99      # give up below this after refinement
MAX_REFINE_DEPTH = 14


@dataclass
class EigenTrack:
    """One eigenbranch followed along a time grid.

    ``continuity`` holds |<v(t_k)|v(t_{k+1})>| per step of the (possibly
    refined) grid; tracking is trusted only if all entries exceed 0.99.
    """

    times: np.ndarray
    values: np.ndarray       # complex eigenvalue per time
    vectors: np.ndarray      # (n_times, dim), gauge-fixed right eigenvectors
    continuity: np.ndarray   # (n_times - 1,)
    basis: Basis | None = None

    def export_csv(self, path: str | Path) -> None:
        lines = ["t,re_e,im_e,overlap"]
        for k, t in enumerate(self.times):
            ov = self.continuity[k - 1] if k else 1.0
            lines.append(
                f"{t:.17g},{self.values[k].real:.17g},{self.values[k].imag:.17g},{ov:.17g}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


def dark_state_A(theta_a: float, basis: Basis | None = None) -> StateVector:
    """Atom-A dark state cos(theta)|g1,0> - sin(theta)|g2,1> on a basis."""
    if not 0.0 <= theta_a <= np.pi / 2:
        raise ValueError(f"theta_a must lie in [0, pi/2], got {theta_a!r}")
    if basis is None:
        basis = build_basis("g0", 0)
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.i_g1] = np.cos(theta_a)
    amps[basis.i_cav_a] = -np.sin(theta_a)
    return StateVector(basis, amps)


def total_dark_state(
    params: ParameterSet,
    theta_a: float,
    m_modes: int | None = None,
    atom_b_init: str = "g0",
) -> StateVector:
    """Normalized zero-energy eigenstate of the full coupled system.

    Only odd fiber modes appear, with amplitude -2i kappa' sin(theta)/(n dw);
    the sum is truncated symmetrically at the basis cutoff.
    """
    if m_modes is None:
        m_modes = params.n_fiber_modes
    basis = build_basis(atom_b_init, m_modes)
    kp = effective_cavity_coupling(params.kappa, params.delta_omega)
    s, c = np.sin(theta_a), np.cos(theta_a)
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.i_g1] = c
    amps[basis.i_cav_a] = -s
    amps[basis.i_cav_b] = s
    for n in range(-m_modes, m_modes + 1):
        if n % 2 != 0:
            amps[basis.i_fiber(n)] = -2j * kp * s / (n * params.delta_omega)
    return StateVector(basis, amps / np.linalg.norm(amps))


def _eig_sorted(h: np.ndarray):
    w, v = scipy.linalg.eig(h)
    # normalize columns; scipy already does, but be safe
    v /= np.linalg.norm(v, axis=0, keepdims=True)
    return w, v


def _pick_initial(w, v, ref: np.ndarray):
    order = np.argsort(np.abs(w))
    for k in order:
        if abs(np.vdot(ref, v[:, k])) ** 2 > 0.5:
            return k
    raise TrackingLost("no small eigenvalue overlaps the reference dark state")


def _follow(w, v, v_prev: np.ndarray):
    overlaps = np.abs(v_prev.conj() @ v)
    k = int(np.argmax(overlaps))
    return k, float(overlaps[k])


def track_dark_branch(
    spec: HamiltonianSpec | TimeDependentOperator,
    grid: np.ndarray,
    ref_state: np.ndarray | None = None,
    refine_overlap: float = REFINE_OVERLAP,
    fail_overlap: float = FAIL_OVERLAP,
    max_depth: int = MAX_REFINE_DEPTH,
) -> EigenTrack:
    """Follow the dark eigenbranch of H(t) along a time grid.

    The branch starts at the smallest-|E| eigenvector overlapping the
    drive-off dark state and is continued by maximal overlap, halving grid
    steps where the overlap dips below ``refine_overlap``.  Raises
    TrackingLost if even the refined step overlap stays <= ``fail_overlap``.
    """
    if isinstance(spec, HamiltonianSpec):
        op = short_hamiltonian(spec)
    else:
        op = spec
    basis = getattr(op, "basis", None)
    grid = np.asarray(grid, dtype=float)
    h_first = np.asarray(op(grid[0]), dtype=complex)
    if ref_state is None:
        if basis is None:
            raise ValueError("ref_state required for a basis-free operator")
        ref_state = np.zeros(h_first.shape[0], dtype=complex)
        ref_state[basis.i_g1] = 1.0

    times = [grid[0]]
    w, v = _eig_sorted(h_first)
    k = _pick_initial(w, v, ref_state)
    vec = v[:, k].copy()
    values = [w[k]]
    vectors = [vec]
    continuity: list[float] = []

    def eval_at(t: float, v_prev: np.ndarray):
        w, v = _eig_sorted(op(t))
        k, ov = _follow(w, v, v_prev)
        vk = v[:, k]
        phase = np.vdot(v_prev, vk)
        if abs(phase) > 0:
            vk = vk * (phase.conjugate() / abs(phase))  # smooth gauge
        return w[k], vk, ov

    def advance(t_prev: float, t_next: float, v_prev: np.ndarray, depth: int):
        value, vk, ov = eval_at(t_next, v_prev)
        if ov < refine_overlap and depth < max_depth:
            t_mid = 0.5 * (t_prev + t_next)
            v_mid = advance(t_prev, t_mid, v_prev, depth + 1)
            return advance(t_mid, t_next, v_mid, depth + 1)
        if ov <= fail_overlap:
            raise TrackingLost(
                f"eigenbranch overlap {ov:.4f} <= {fail_overlap} at t = {t_next:g}"
            )
        times.append(t_next)
        values.append(value)
        vectors.append(vk)
        continuity.append(ov)
        return vk

    for i in range(1, len(grid)):
        vec = advance(times[-1], grid[i], vec, 0)

    return EigenTrack(
        times=np.array(times),
        values=np.array(values),
        vectors=np.array(vectors),
        continuity=np.array(continuity),
        basis=basis,
    )


class PhaseResult(NamedTuple):
    phi: float        # unwrapped acquired phase
    phi_mod: float    # same, wrapped to (-pi, pi]
    decay: float      # integrated |Im E| (loss exponent), reported separately


def dynamical_phase(track: EigenTrack) -> PhaseResult:
    """Acquired phase of the tracked branch by composite Simpson quadrature.

    A branch at eigenvalue E evolves as exp(-i integral E dt), so the phase
    the state picks up is phi = -integral Re E(t) dt; the imaginary part
    feeds the loss exponent instead of the phase.
    """
    phi = -float(simpson(track.values.real, x=track.times))
    decay = -float(simpson(track.values.imag, x=track.times))
    phi_mod = float((phi + np.pi) % (2 * np.pi) - np.pi)
    return PhaseResult(phi=phi, phi_mod=phi_mod, decay=decay)
