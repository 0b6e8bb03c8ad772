import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotorctl import units
from rotorctl.errors import DomainError
from rotorctl.units import (
    LINEAR,
    SYMMETRIC_TOP,
    MoleculeParams,
    au_to_debye,
    au_to_wavenumber,
    debye_to_au,
    field_to_intensity,
    field_vm_to_au,
    intensity_to_field,
    rotational_period,
    wavenumber_to_au,
)


def test_wavenumber_to_au():
    assert wavenumber_to_au(0) == 0
    # CODATA: 1 cm^-1 = 4.556335e-6 E_h
    assert wavenumber_to_au(1.0) == pytest.approx(4.5563353e-6, rel=1e-7)
    assert wavenumber_to_au(1.9313) == pytest.approx(8.7996e-6, rel=1e-4)
    assert wavenumber_to_au(219474.63) == pytest.approx(1.0, rel=1e-8)


def test_debye_to_au():
    assert debye_to_au(0) == 0
    assert units.DEBYE_TO_AU == pytest.approx(0.3934303, rel=1e-7)
    assert debye_to_au(0.112) == pytest.approx(0.044064, rel=1e-4)
    assert debye_to_au(2.5417) == pytest.approx(1.0, rel=1e-4)


def test_intensity_to_field():
    assert intensity_to_field(0) == 0
    e = intensity_to_field(20e12)
    # sqrt(2 I / (eps0 c)) with I = 2e17 W/m^2
    assert e * units.AU_FIELD == pytest.approx(1.2275e10, rel=1e-3)
    assert e == pytest.approx(0.02387, rel=1e-3)
    assert field_vm_to_au(1e8) == pytest.approx(1.9447e-4, rel=1e-4)


def test_rotational_period():
    assert rotational_period(1.0) == math.pi
    assert rotational_period(math.pi) == pytest.approx(1.0)
    t_co = rotational_period(wavenumber_to_au(1.9313)) * units.AU_TIME
    # 1/(2 B c) in SI
    assert t_co == pytest.approx(1 / (2 * 193.13 * units.SPEED_OF_LIGHT), rel=1e-9)
    assert t_co == pytest.approx(8.64e-12, rel=1e-3)


@pytest.mark.parametrize(
    "fn,arg",
    [(wavenumber_to_au, -1.0), (debye_to_au, -0.1), (intensity_to_field, -5.0), (rotational_period, 0.0),
     (rotational_period, -2.0), (wavenumber_to_au, float("nan"))],
)
def test_domain_errors(fn, arg):
    with pytest.raises(DomainError):
        fn(arg)


positive = st.floats(min_value=1e-8, max_value=1e8, allow_nan=False)


@given(positive)
def test_round_trips(x):
    assert au_to_wavenumber(wavenumber_to_au(x)) == pytest.approx(x, rel=1e-12)
    assert au_to_debye(debye_to_au(x)) == pytest.approx(x, rel=1e-12)
    assert field_to_intensity(intensity_to_field(x)) == pytest.approx(x, rel=1e-12)
    assert units.au_to_fs(units.fs_to_au(x)) == pytest.approx(x, rel=1e-12)


@given(positive)
def test_intensity_square_root_scaling(x):
    assert intensity_to_field(4 * x) == pytest.approx(2 * intensity_to_field(x), rel=1e-15)


def test_molecule_params_validation():
    MoleculeParams("x", LINEAR, 1.0, 0.0)
    with pytest.raises(DomainError):
        MoleculeParams("x", LINEAR, 0.0, 0.1)
    with pytest.raises(DomainError):
        MoleculeParams("x", LINEAR, 1.0, -0.1)
    with pytest.raises(DomainError):
        MoleculeParams("x", SYMMETRIC_TOP, 1.0, 0.1)
    with pytest.raises(DomainError):
        MoleculeParams("x", "asymmetric", 1.0, 0.1)
    with pytest.raises(DomainError):
        MoleculeParams("x", LINEAR, 1.0, 0.1, dalpha=-1.0)
    top = MoleculeParams("x", SYMMETRIC_TOP, 1.0, 0.1, A=1.0)
    assert top.A == top.B


def test_kelvin():
    assert units.kelvin_to_au(1.0) == pytest.approx(3.1668115e-6, rel=1e-7)
