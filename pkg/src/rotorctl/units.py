"""Unit conversions into the atomic-unit system (hbar = 1) used by every module.

All constants are CODATA 2018. Energies are in hartree, times in hbar/E_h,
fields in E_h/(e a0), dipoles in e a0 and polarizabilities in a0**3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError

# ---------------------------------------------------------------------------
# CODATA 2018
# ---------------------------------------------------------------------------
SPEED_OF_LIGHT = 299792458.0                 # m/s (exact)
VACUUM_PERMITTIVITY = 8.8541878128e-12       # F/m
ELEMENTARY_CHARGE = 1.602176634e-19          # C (exact)
BOHR_RADIUS = 5.29177210903e-11              # m
HARTREE_IN_CM1 = 219474.6313632              # 1 E_h in cm^-1
AU_TIME = 2.4188843265857e-17                # s
AU_FIELD = 5.14220674763e11                  # V/m
BOLTZMANN_HARTREE = 3.1668115634556e-6       # k_B in E_h/K
DEBYE_SI = 1e-21 / SPEED_OF_LIGHT            # C m
DEBYE_TO_AU = DEBYE_SI / (ELEMENTARY_CHARGE * BOHR_RADIUS)  # ~0.3934303
ANGSTROM3_TO_AU = (1e-10 / BOHR_RADIUS) ** 3  # polarizability volume

LINEAR = "linear"
SYMMETRIC_TOP = "symmetric-top"
KINDS = (LINEAR, SYMMETRIC_TOP)


def _nonnegative(x: float, what: str) -> float:
    x = float(x)
    if not x >= 0.0:  # also rejects NaN
        raise DomainError(f"{what} must be >= 0, got {x!r}")
    return x


@dataclass(frozen=True)
class MoleculeParams:
    """Rigid-rotor constants of one molecule, in atomic units.

    ``A`` is the axial rotational constant and is only meaningful for
    symmetric tops. ``dalpha`` is the polarizability anisotropy and is only
    needed when a nonresonant laser pulse is applied.
    """

    name: str
    kind: str
    B: float
    mu0: float
    A: Optional[float] = None
    dalpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown molecule kind {self.kind!r}; expected one of {KINDS}")
        if not self.B > 0:
            raise DomainError(f"rotational constant B must be > 0, got {self.B!r}")
        _nonnegative(self.mu0, "mu0")
        if self.kind == SYMMETRIC_TOP:
            if self.A is None or not self.A > 0:
                raise DomainError("symmetric-top molecules need an axial constant A > 0")
        if self.dalpha is not None:
            _nonnegative(self.dalpha, "dalpha")

    @property
    def period(self) -> float:
        return rotational_period(self.B)

    @classmethod
    def from_spectroscopic(
        cls,
        name: str,
        kind: str,
        B_cm1: float,
        mu0_D: float,
        A_cm1: Optional[float] = None,
        dalpha_au: Optional[float] = None,
    ) -> "MoleculeParams":
        """Build from constants in cm^-1 and Debye (dalpha already in a0**3)."""
        return cls(
            name=name,
            kind=kind,
            B=wavenumber_to_au(B_cm1),
            mu0=debye_to_au(mu0_D),
            A=None if A_cm1 is None else wavenumber_to_au(A_cm1),
            dalpha=dalpha_au,
        )


def wavenumber_to_au(x: float) -> float:
    """Energy in cm^-1 -> hartree."""
    return _nonnegative(x, "wavenumber") / HARTREE_IN_CM1


def au_to_wavenumber(e: float) -> float:
    return _nonnegative(e, "energy") * HARTREE_IN_CM1


def debye_to_au(d: float) -> float:
    """Dipole in Debye -> e a0."""
    return _nonnegative(d, "dipole") * DEBYE_TO_AU


def au_to_debye(d: float) -> float:
    return _nonnegative(d, "dipole") / DEBYE_TO_AU


def field_vm_to_au(e: float) -> float:
    """Field amplitude in V/m -> atomic units. Signed fields are allowed."""
    return float(e) / AU_FIELD


def field_au_to_vm(e: float) -> float:
    return float(e) * AU_FIELD


def intensity_to_field(intensity: float) -> float:
    """Peak intensity in W/cm^2 -> peak field amplitude in atomic units.

    Uses the cycle-averaged relation I = eps0 c E^2 / 2.
    """
    i_si = _nonnegative(intensity, "intensity") * 1e4  # W/m^2
    return math.sqrt(2.0 * i_si / (VACUUM_PERMITTIVITY * SPEED_OF_LIGHT)) / AU_FIELD


def field_to_intensity(e: float) -> float:
    """Inverse of :func:`intensity_to_field` (W/cm^2)."""
    e_si = _nonnegative(e, "field amplitude") * AU_FIELD
    return 0.5 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * e_si**2 / 1e4


def fs_to_au(t: float) -> float:
    return float(t) * 1e-15 / AU_TIME


def au_to_fs(t: float) -> float:
    return float(t) * AU_TIME / 1e-15


def kelvin_to_au(T: float) -> float:
    """Thermal energy k_B T in hartree."""
    return _nonnegative(T, "temperature") * BOLTZMANN_HARTREE


def angstrom3_to_au(v: float) -> float:
    return _nonnegative(v, "polarizability volume") * ANGSTROM3_TO_AU


def rotational_period(B: float) -> float:
    """Field-free revival period pi/B of a linear rotor (atomic units)."""
    B = float(B)
    if not B > 0:
        raise DomainError(f"rotational constant must be > 0, got {B!r}")
    return math.pi / B
