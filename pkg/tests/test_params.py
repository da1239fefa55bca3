import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fibergate.errors import ConfigError, InconsistentGeometry, NonPositiveRate
from fibergate.params import (
    ParameterSet,
    PulseConfig,
    RegimeTag,
    classify_regime,
    load_params,
    params_from_mapping,
    parse_config,
    validate,
)


def test_validate_fills_length_from_fsr():
    p = validate(ParameterSet(delta_omega=7.5, pulse=PulseConfig(delta_t=125.0)))
    assert p.fiber_length == pytest.approx(math.pi / 7.5, rel=1e-12)
    assert p.delta_omega == 7.5


def test_validate_fills_fsr_from_length():
    p = validate(ParameterSet(fiber_length=600.0, delta_omega=None))
    assert p.delta_omega == pytest.approx(math.pi / 600.0, rel=1e-12)


def test_validate_rejects_zero_kappa():
    with pytest.raises(NonPositiveRate):
        validate(ParameterSet(kappa=0.0))


def test_validate_rejects_zero_coupling():
    with pytest.raises(NonPositiveRate):
        validate(ParameterSet(g_a=0.0))


def test_validate_rejects_negative_rate():
    with pytest.raises(NonPositiveRate):
        validate(ParameterSet(gamma=-1.0))


def test_validate_rejects_nonfinite():
    with pytest.raises(NonPositiveRate):
        validate(ParameterSet(kappa_f=float("nan")))


def test_inconsistent_geometry():
    with pytest.raises(InconsistentGeometry):
        validate(ParameterSet(delta_omega=7.5, fiber_length=600.0))


def test_consistent_geometry_accepted():
    p = validate(ParameterSet(delta_omega=7.5, fiber_length=math.pi / 7.5))
    assert p.fiber_length == pytest.approx(math.pi / 7.5)


def test_validate_idempotent():
    p1 = validate(ParameterSet(delta_omega=7.5))
    assert validate(p1) == p1


def test_classify_short():
    # pulse lasts ~149 round trips: comfortably adiabatic
    p = validate(ParameterSet(delta_omega=7.5))
    r = classify_regime(p, 125.0)
    assert r.tag == RegimeTag.SHORT
    assert r.margin >= 1.0


def test_classify_long():
    p = validate(ParameterSet(fiber_length=600.0, delta_omega=None))
    r = classify_regime(p, 50.0)
    assert r.tag == RegimeTag.LONG


def test_classify_ambiguous():
    p = validate(ParameterSet(fiber_length=60.0, delta_omega=None))
    r = classify_regime(p, 50.0)
    assert r.tag == RegimeTag.AMBIGUOUS
    assert r.margin < 1.0


@settings(max_examples=60, deadline=None)
@given(
    width=st.floats(min_value=1e-3, max_value=1e4),
    length=st.floats(min_value=1e-3, max_value=1e5),
    factor=st.floats(min_value=1.0, max_value=1e3),
)
def test_classify_monotone_in_length(width, length, factor):
    """Increasing L at fixed pulse width never moves LONG -> SHORT."""
    p_small = validate(ParameterSet(fiber_length=length, delta_omega=None))
    p_large = validate(ParameterSet(fiber_length=length * factor, delta_omega=None))
    tag_small = classify_regime(p_small, width).tag
    tag_large = classify_regime(p_large, width).tag
    if tag_small == RegimeTag.LONG:
        assert tag_large != RegimeTag.SHORT


CONFIG_TEXT = """
# reference short-distance setup
gamma = 1.0
kappa = 1.0
g_a = 10.0
g_b = 10.0
delta = 500.0
delta_omega = 7.5
omega0 = 4.65
delta_t = 125.0
n_fiber_modes = 20
pulse_shape = gaussian
"""


def test_parse_and_load(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(CONFIG_TEXT)
    p = load_params(path)
    assert p.g_a == 10.0
    assert p.n_fiber_modes == 20
    assert p.pulse.omega0 == 4.65
    assert p.fiber_length == pytest.approx(math.pi / 7.5)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("not_a_key = 3\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("kappa = 1\nkappa = 2\n")


def test_malformed_line_rejected():
    with pytest.raises(ConfigError):
        parse_config("kappa 1\n")


def test_bad_value_rejected():
    with pytest.raises(ConfigError):
        params_from_mapping({"kappa": "fast"})


def test_bad_pulse_shape_rejected():
    with pytest.raises(ConfigError):
        params_from_mapping({"pulse_shape": "square"})


def test_length_only_config():
    p = params_from_mapping({"fiber_length": "600"})
    assert p.delta_omega == pytest.approx(math.pi / 600.0)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_params("/nonexistent/path.cfg")


def test_pulse_width_must_be_positive():
    with pytest.raises(NonPositiveRate):
        validate(replace(ParameterSet(), pulse=PulseConfig(delta_t=0.0)))
