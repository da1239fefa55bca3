import json
from pathlib import Path

import numpy as np
import pytest

from fibergate.errors import BasisMismatch
from fibergate.hilbert import (
    BasisLabel,
    StateVector,
    basis_state,
    build_basis,
    dump_amplitudes,
    overlap,
)

GOLDEN = Path(__file__).parent / "data" / "basis_m1_g0.json"


def test_dimension_g0():
    assert build_basis("g0", 3).dim == 11


def test_dimension_g2():
    assert build_basis("g2", 3).dim == 12


def test_dimension_single_mode():
    assert build_basis("g0", 0).dim == 5


@pytest.mark.parametrize("branch", ["g0", "g2"])
@pytest.mark.parametrize("m", [0, 1, 4])
def test_every_label_has_one_excitation(branch, m):
    basis = build_basis(branch, m)
    assert all(label.excitation_number() == 1 for label in basis.labels)


def test_ordering_golden_file():
    basis = build_basis("g0", 1)
    expected = json.loads(GOLDEN.read_text())
    assert json.loads(basis.to_json()) == expected


def test_positional_helpers():
    basis = build_basis("g2", 2)
    assert basis.labels[basis.i_g1] == BasisLabel("g1", 0, None, 0, "g2")
    assert basis.labels[basis.i_e] == BasisLabel("e", 0, None, 0, "g2")
    assert basis.labels[basis.i_cav_a] == BasisLabel("g2", 1, None, 0, "g2")
    assert basis.labels[basis.i_fiber(-2)] == BasisLabel("g2", 0, -2, 0, "g2")
    assert basis.labels[basis.i_cav_b] == BasisLabel("g2", 0, None, 1, "g2")
    assert basis.labels[basis.i_e_b] == BasisLabel("g2", 0, None, 0, "e")
    assert build_basis("g0", 2).i_e_b is None


def test_index_is_bijection():
    basis = build_basis("g2", 5)
    positions = {basis.index_of(label) for label in basis.labels}
    assert positions == set(range(basis.dim))


def test_overlap_unit_states():
    basis = build_basis("g0", 1)
    a = basis_state(basis, 0)
    assert overlap(a, a) == pytest.approx(1.0)
    b = basis_state(basis, 3)
    assert overlap(a, b) == 0.0


def test_overlap_linearity():
    basis = build_basis("g0", 1)
    amps = np.zeros(basis.dim, dtype=complex)
    amps[1] = amps[2] = 1 / np.sqrt(2)
    sup = StateVector(basis, amps)
    assert overlap(sup, basis_state(basis, 1)) == pytest.approx(1 / np.sqrt(2))


def test_overlap_conjugates_first_argument():
    basis = build_basis("g0", 0)
    amps = np.zeros(basis.dim, dtype=complex)
    amps[0] = 1j
    a = StateVector(basis, amps)
    b = basis_state(basis, 0)
    assert overlap(a, b) == pytest.approx(-1j)


def test_overlap_basis_mismatch():
    a = basis_state(build_basis("g0", 1), 0)
    b = basis_state(build_basis("g0", 2), 0)
    with pytest.raises(BasisMismatch):
        overlap(a, b)


def test_state_vector_shape_checked():
    basis = build_basis("g0", 1)
    with pytest.raises(BasisMismatch):
        StateVector(basis, np.zeros(3, dtype=complex))


def test_amplitude_dump_round_trip(tmp_path):
    basis = build_basis("g0", 1)
    amps = np.arange(basis.dim) * (0.1 + 0.2j)
    state = StateVector(basis, amps)
    path = tmp_path / "amps.csv"
    dump_amplitudes(state, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "label,re,im"
    assert len(lines) == basis.dim + 1
    label, re, im = lines[2].split(",")
    assert label == str(basis.labels[1])
    assert complex(float(re), float(im)) == pytest.approx(amps[1])
