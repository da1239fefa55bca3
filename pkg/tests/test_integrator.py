import numpy as np
import pytest

from fibergate import envelopes
from fibergate.errors import NonFiniteAmplitude, StepUnderflow
from fibergate.integrator import (
    DriveTerm,
    TimeDependentOperator,
    loss_probability,
    propagate,
)

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def _two_level_drive(amp, t_span=20.0):
    env = envelopes.gaussian(amp, 0.0, 1e6, -1e7, 1e7)  # effectively constant
    return TimeDependentOperator(h0=np.zeros((2, 2), dtype=complex),
                                 drives=(DriveTerm(env, SX),))


def test_zero_hamiltonian_is_identity():
    psi0 = np.array([0.6, 0.8], dtype=complex)
    traj = propagate(np.zeros((2, 2), dtype=complex), psi0, 0.0, 5.0)
    np.testing.assert_array_equal(traj.final_state, psi0)


def test_rabi_oscillation():
    omega = 1.3
    t1 = np.pi / omega  # full population return
    op = _two_level_drive(omega)
    traj = propagate(op, np.array([1.0, 0.0], dtype=complex), 0.0, t1, tol=1e-10)
    pops = np.abs(traj.states[:, 1]) ** 2
    expected = np.sin(omega * traj.times) ** 2
    np.testing.assert_allclose(pops, expected, atol=1e-8)


def test_exponential_decay():
    gamma = 0.7
    h = np.array([[-0.5j * gamma, 0], [0, 0]], dtype=complex)
    traj = propagate(h, np.array([1.0, 0.0], dtype=complex), 0.0, 3.0, tol=1e-10)
    assert abs(traj.final_state[0]) == pytest.approx(np.exp(-gamma * 3.0 / 2), abs=1e-8)
    assert loss_probability(traj) == pytest.approx(1 - np.exp(-gamma * 3.0), abs=1e-8)


def test_loss_probability_hermitian_is_zero():
    op = _two_level_drive(1.0)
    traj = propagate(op, np.array([1.0, 0.0], dtype=complex), 0.0, 7.0, tol=1e-10)
    assert abs(loss_probability(traj)) < 1e-9


def test_callable_hamiltonian_matches_structured():
    omega = 0.9

    def h(t):
        return np.exp(-((t - 5.0) / 2.0) ** 2) * omega * SX

    env = envelopes.gaussian(omega, 5.0, 2.0, -1e9, 1e9)
    op = TimeDependentOperator(h0=np.zeros((2, 2), dtype=complex),
                               drives=(DriveTerm(env, SX),))
    psi0 = np.array([1.0, 0.0], dtype=complex)
    t_call = propagate(h, psi0, 0.0, 10.0, tol=1e-10)
    t_struct = propagate(op, psi0, 0.0, 10.0, tol=1e-10)
    np.testing.assert_allclose(t_call.final_state, t_struct.final_state, atol=1e-8)


def test_self_convergence_on_tolerance():
    """Halving tol changes the final amplitudes by less than the larger tol."""
    env = envelopes.gaussian(2.0, 5.0, 1.5, 0.0, 10.0)
    h1 = np.diag([0.0, -3.0]).astype(complex)
    op = TimeDependentOperator(h0=h1, drives=(DriveTerm(env, SX),))
    psi0 = np.array([1.0, 0.0], dtype=complex)
    tol = 1e-6
    a = propagate(op, psi0, 0.0, 10.0, tol=tol).final_state
    b = propagate(op, psi0, 0.0, 10.0, tol=tol / 2).final_state
    assert np.max(np.abs(a - b)) < tol


def test_linearity(rng):
    env = envelopes.gaussian(1.0, 3.0, 1.0, -1e9, 1e9)
    h0 = np.diag([0.0, -1.0, 1.0]).astype(complex)
    hd = np.zeros((3, 3), dtype=complex)
    hd[0, 1] = hd[1, 0] = 1.0
    hd[1, 2] = hd[2, 1] = 0.5
    op = TimeDependentOperator(h0=h0, drives=(DriveTerm(env, hd),))
    for _ in range(5):
        v1, v2 = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
        v1 /= np.linalg.norm(v1)
        v2 -= np.vdot(v1, v2) * v1
        v2 /= np.linalg.norm(v2)
        combo = (v1 + v2) / np.sqrt(2)
        f1 = propagate(op, v1, 0.0, 6.0, tol=1e-10).final_state
        f2 = propagate(op, v2, 0.0, 6.0, tol=1e-10).final_state
        fc = propagate(op, combo, 0.0, 6.0, tol=1e-10).final_state
        np.testing.assert_allclose(fc, (f1 + f2) / np.sqrt(2), atol=1e-8)


def test_time_reversal_hermitian():
    def h(t):
        return np.exp(-((t - 3.0) / 1.0) ** 2) * 2.0 * SX + np.diag([0.0, 1.0])

    psi0 = np.array([1.0, 0.0], dtype=complex)
    fwd = propagate(h, psi0, 0.0, 6.0, tol=1e-10).final_state

    def h_back(s):
        return -h(6.0 - s)

    back = propagate(h_back, fwd, 0.0, 6.0, tol=1e-10).final_state
    np.testing.assert_allclose(back, psi0, atol=1e-7)


def test_norm_never_grows_under_decay():
    h = np.array([[-0.25j, 0.3], [0.3, -0.1j]], dtype=complex)
    traj = propagate(h, np.array([1.0, 0.0], dtype=complex), 0.0, 10.0, tol=1e-10)
    assert np.all(np.diff(traj.norm2) <= 1e-9)


def test_snapshots_cover_span():
    traj = propagate(np.zeros((2, 2), dtype=complex),
                     np.array([1.0, 0.0], dtype=complex), 1.0, 2.0, n_snapshots=17)
    assert len(traj.times) == 17
    assert traj.times[0] == 1.0
    assert traj.times[-1] == 2.0


def test_unnormalized_initial_state_rejected():
    with pytest.raises(ValueError, match="normalized"):
        propagate(np.zeros((2, 2), dtype=complex),
                  np.array([1.0, 1.0], dtype=complex), 0.0, 1.0)


def test_reversed_interval_rejected():
    with pytest.raises(ValueError):
        propagate(np.zeros((2, 2), dtype=complex),
                  np.array([1.0, 0.0], dtype=complex), 1.0, 0.0)


def test_step_underflow_on_singularity():
    def h(t):
        return SX / (0.5 - t) ** 2

    with pytest.raises(StepUnderflow):
        propagate(h, np.array([1.0, 0.0], dtype=complex), 0.0, 1.0)


def test_nonfinite_amplitudes_detected():
    def h(t):
        return np.full((2, 2), np.nan, dtype=complex) if t > 0.5 else np.zeros((2, 2))

    with pytest.raises((NonFiniteAmplitude, StepUnderflow)):
        propagate(h, np.array([1.0, 0.0], dtype=complex), 0.0, 1.0)


def test_trajectory_csv_export(tmp_path):
    op = _two_level_drive(1.0)
    traj = propagate(op, np.array([1.0, 0.0], dtype=complex), 0.0, 2.0,
                     n_snapshots=5)
    path = tmp_path / "traj.csv"
    traj.export_csv(path, amp_indices=[0, 1])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,norm2,re_0,im_0,re_1,im_1"
    assert len(lines) == 6
