import numpy as np
import pytest
from scipy.integrate import trapezoid

from fibergate.errors import UnphysicalMixing, ZeroAmplitude
from fibergate.pulses import (
    FieldEnvelope,
    analytic_output_pulse,
    export_profile_csv,
    gaussian_profile,
    gaussian_rabi,
    matching_residual,
    sech_absorb_mixing,
    sech_emit_mixing,
    sech_emit_rabi,
    sech_profile,
)


class TestGaussian:
    def test_peak(self):
        p = gaussian_profile(2.0, t_c=10.0, delta_t=5.0)
        assert gaussian_rabi(10.0, p) == pytest.approx(2.0)

    def test_one_width_out(self):
        p = gaussian_profile(2.0, t_c=10.0, delta_t=5.0)
        assert gaussian_rabi(15.0, p) == pytest.approx(2.0 / np.e)

    def test_far_tail_is_clipped_to_zero(self):
        p = gaussian_profile(2.0, t_c=0.0, delta_t=5.0)
        # support ends at 5 widths; beyond it the drive is exactly off
        assert gaussian_rabi(50.0, p) == 0.0
        assert gaussian_rabi(-50.0, p) == 0.0

    def test_small_outside_support(self):
        p = gaussian_profile(2.0, t_c=0.0, delta_t=5.0)
        edge = gaussian_rabi(np.nextafter(25.0, 0.0), p)
        assert 0 < edge < 1e-6 * p.omega0

    def test_wrong_shape_rejected(self):
        p = sech_profile("sech_emit", kappa=1.0, g_gain=8.0, t_c=0.0, delta_t=50.0)
        with pytest.raises(ValueError):
            gaussian_rabi(0.0, p)


class TestSechMixing:
    def test_value_at_center(self):
        # kappa * delta_t = 50: sin(theta) at the pulse center is sqrt(2/50)
        assert sech_emit_mixing(0.0, 0.0, 50.0, 1.0) == pytest.approx(0.2)

    def test_vanishes_far_before(self):
        assert sech_emit_mixing(-500.0, 0.0, 50.0, 1.0) < 1e-8

    def test_plateau(self):
        # late-time limit sqrt(4 / (kappa delta_t))
        assert sech_emit_mixing(500.0, 0.0, 50.0, 1.0) == pytest.approx(
            np.sqrt(4 / 50), rel=1e-6
        )

    def test_unphysical(self):
        with pytest.raises(UnphysicalMixing):
            sech_emit_mixing(0.0, 0.0, 2.0, 1.0)

    def test_time_reverse_symmetry(self):
        ts = np.linspace(-120.0, 120.0, 241)
        emit = sech_emit_mixing(ts, 0.0, 50.0, 1.0)
        absorb = sech_absorb_mixing(-ts, 0.0, 50.0, 1.0)
        np.testing.assert_allclose(emit, absorb, rtol=0, atol=1e-12)

    def test_rabi_alongside(self):
        om = sech_emit_rabi(0.0, 0.0, 50.0, 1.0, 8.0)
        s = 0.2
        assert om == pytest.approx(8.0 * s / np.sqrt(1 - s * s))

    def test_profile_construction_checks_mixing(self):
        with pytest.raises(UnphysicalMixing):
            sech_profile("sech_emit", kappa=1.0, g_gain=8.0, t_c=0.0, delta_t=3.9)

    def test_profile_peak_rabi(self):
        p = sech_profile("sech_emit", kappa=1.0, g_gain=8.0, t_c=0.0, delta_t=50.0)
        s = np.sqrt(4 / 50)
        assert p.omega0 == pytest.approx(8.0 * s / np.sqrt(1 - s * s))


class TestAnalyticOutput:
    def test_zero_mixing_gives_zero_field(self):
        grid = np.linspace(0, 10, 101)
        env = analytic_output_pulse(lambda t: np.zeros_like(t), 1.0, grid)
        assert np.all(env.values == 0)

    def test_sech_drive_emits_sech_photon(self):
        delta_t, kappa = 50.0, 1.0
        grid = np.linspace(-250.0, 250.0, 20001)
        prof = sech_profile("sech_emit", kappa, 8.0, 0.0, delta_t)
        env = analytic_output_pulse(prof, kappa, grid)
        ref = FieldEnvelope(
            grid[0], grid[1] - grid[0],
            (1 / np.sqrt(delta_t)) / np.cosh(2 * grid / delta_t),
        )
        assert env.l2_error(ref) < 1e-4

    def test_norm_identity(self):
        # emitted energy equals 1 - exp(-kappa * int sin^2(theta))
        delta_t, kappa = 50.0, 1.0
        grid = np.linspace(-250.0, 150.0, 40001)
        prof = sech_profile("sech_emit", kappa, 8.0, 0.0, delta_t)
        env = analytic_output_pulse(prof, kappa, grid)
        s2 = np.asarray(prof.mixing_sin(grid)) ** 2
        expected = 1.0 - np.exp(-kappa * trapezoid(s2, grid))
        assert env.norm2() == pytest.approx(expected, abs=1e-6)

    def test_emission_probability_bounded(self):
        grid = np.linspace(-250.0, 2000.0, 50001)
        prof = sech_profile("sech_emit", 1.0, 8.0, 0.0, 50.0, margin=20.0)
        env = analytic_output_pulse(prof, 1.0, grid)
        assert env.norm2() <= 1 + 1e-6


class TestMatching:
    def _setup(self, delta_t=50.0, kappa=1.0):
        grid = np.linspace(-200.0, 200.0, 16001)
        absorb = sech_profile("sech_absorb", kappa, 8.0, 0.0, delta_t)
        incoming = FieldEnvelope(
            grid[0], grid[1] - grid[0],
            (1 / np.sqrt(delta_t)) / np.cosh(2 * grid / delta_t),
        )
        return absorb, incoming

    def test_matched_pair_residual_small(self):
        absorb, incoming = self._setup()
        for t in (-40.0, -10.0, 0.0, 10.0, 40.0):
            assert abs(matching_residual(absorb, incoming, t, kappa=1.0)) < 1e-3

    def test_gaussian_drive_mismatched(self):
        _, incoming = self._setup()
        gauss = gaussian_profile(6.0, 0.0, 50.0, g_gain=8.0)
        worst = max(
            abs(matching_residual(gauss, incoming, t, kappa=1.0))
            for t in (-40.0, 0.0, 40.0)
        )
        assert worst > 0.1

    def test_zero_amplitude_raises(self):
        absorb, incoming = self._setup()
        with pytest.raises(ZeroAmplitude):
            matching_residual(absorb, incoming, 195.0, kappa=1.0)


def test_profile_csv_export(tmp_path):
    p = gaussian_profile(2.0, 0.0, 5.0)
    grid = np.linspace(-10, 10, 21)
    path = tmp_path / "drive.csv"
    export_profile_csv(p, grid, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,omega"
    assert len(lines) == 22
    t_mid, om_mid = lines[11].split(",")
    assert float(t_mid) == 0.0
    assert float(om_mid) == pytest.approx(2.0)


def test_field_envelope_norm_and_interp():
    grid = np.linspace(0.0, 10.0, 1001)
    env = FieldEnvelope(0.0, 0.01, np.exp(-((grid - 5) ** 2)))
    assert env.norm2() == pytest.approx(np.sqrt(np.pi / 2), rel=1e-6)
    assert env.value_at(5.0) == pytest.approx(1.0, rel=1e-6)
