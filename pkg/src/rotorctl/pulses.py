"""Analytic field envelopes and pulse sequences (atomic units throughout).

Two channels drive the rotor:

* the THz field ``E(t)``, coupling through the permanent dipole as
  ``-mu0 cos(theta) E(t)``;
* the cycle-averaged squared envelope ``I(t) = E_env(t)^2`` of a nonresonant
  laser, coupling through the polarizability anisotropy as
  ``-(dalpha / 4) I(t) cos^2(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError
from .units import MoleculeParams, intensity_to_field

GAUSSIAN_THZ = "gaussian-thz"
HCP = "hcp"
SINGLE_CYCLE = "single-cycle"
LASER_KICK = "laser-kick"
SHAPES = (GAUSSIAN_THZ, HCP, SINGLE_CYCLE, LASER_KICK)
THZ_SHAPES = (GAUSSIAN_THZ, HCP, SINGLE_CYCLE)

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
# beyond this many widths a Gaussian is below 1.3e-14 of its peak
SUPPORT_SIGMAS = 8.0
GUESS_INTENSITY = 20e12  # W/cm^2
LASER_LEAD_SIGMAS = 4.0


def fwhm_to_sigma(fwhm: float) -> float:
    return fwhm / FWHM_PER_SIGMA


def sigma_to_fwhm(sigma: float) -> float:
    return sigma * FWHM_PER_SIGMA


@dataclass(frozen=True)
class PulseSpec:
    """One analytic pulse.

    For THz shapes ``peak`` is a field amplitude. For ``laser-kick`` it is the
    peak of the squared envelope ``E_env^2``, and ``width`` is the standard
    deviation of that intensity profile.
    """

    shape: str
    peak: float
    center: float
    width: float

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise DomainError(f"unknown pulse shape {self.shape!r}; expected one of {SHAPES}")
        if not self.peak >= 0:
            raise DomainError(f"pulse peak must be >= 0, got {self.peak!r}")
        if not self.width > 0:
            raise DomainError(f"pulse width must be > 0, got {self.width!r}")

    @property
    def fwhm(self) -> float:
        return sigma_to_fwhm(self.width)

    @property
    def support(self) -> tuple[float, float]:
        half = SUPPORT_SIGMAS * self.width
        return self.center - half, self.center + half

    def evaluate(self, t):
        x = (np.asarray(t, dtype=float) - self.center) / self.width
        if self.shape == SINGLE_CYCLE:
            # derivative of a Gaussian scaled so that max |E| = peak
            return -self.peak * x * np.exp(0.5 - 0.5 * x * x)
        return self.peak * np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class FieldSamples:
    """Piecewise-constant THz field: ``values[k]`` holds on ``[t0 + k dt, t0 + (k+1) dt)``."""

    t0: float
    dt: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise DomainError("field samples must be a nonempty 1-D array")
        if not self.dt > 0:
            raise DomainError(f"sample spacing must be > 0, got {self.dt!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def t1(self) -> float:
        return self.t0 + self.dt * len(self.values)

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.floor((t - self.t0) / self.dt).astype(np.int64)
        inside = (idx >= 0) & (idx < len(self.values))
        return np.where(inside, self.values[np.clip(idx, 0, len(self.values) - 1)], 0.0)


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pulses plus an optional sampled THz override.

    When ``override`` is set it replaces every analytic THz pulse; laser kicks
    still apply.
    """

    pulses: tuple[PulseSpec, ...] = ()
    override: Optional[FieldSamples] = None

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))

    @property
    def laser_pulses(self) -> tuple[PulseSpec, ...]:
        return tuple(p for p in self.pulses if p.shape == LASER_KICK)

    @property
    def thz_pulses(self) -> tuple[PulseSpec, ...]:
        return tuple(p for p in self.pulses if p.shape in THZ_SHAPES)

    def with_override(self, samples: Optional[FieldSamples]) -> "PulseSequence":
        return replace(self, override=samples)


class FieldValue(NamedTuple):
    thz: float
    intensity: float


def sample(seq: PulseSequence, t) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`field_at`: arrays ``(E_thz, I_env)`` on the times ``t``."""
    t = np.asarray(t, dtype=float)
    thz = np.zeros(t.shape)
    inten = np.zeros(t.shape)
    if seq.override is not None:
        thz = thz + seq.override.evaluate(t)
    for p in seq.pulses:
        if p.shape == LASER_KICK:
            inten = inten + p.evaluate(t)
        elif seq.override is None:
            thz = thz + p.evaluate(t)
    return thz, inten


def field_at(seq: PulseSequence, t: float) -> FieldValue:
    thz, inten = sample(seq, float(t))
    return FieldValue(float(thz), float(inten))


def default_guess_pulse(T_per: float, B: float) -> PulseSpec:
    """Gaussian THz guess centred at T_per/5 with sigma = pi/(50 B) and a 20 TW/cm^2 peak."""
    if not B > 0:
        raise DomainError(f"B must be > 0, got {B!r}")
    return PulseSpec(GAUSSIAN_THZ, intensity_to_field(GUESS_INTENSITY), T_per / 5.0, math.pi / (50.0 * B))


def bipulse_sequence(
    params: MoleculeParams,
    T_per: float,
    laser_peak: float,
    laser_fwhm: float,
    kick_peak: float,
    kick_fwhm: float,
    kick_shape: str = HCP,
) -> PulseSequence:
    """Nonresonant laser kick followed a quarter period later by a THz kick.

    ``laser_peak`` is the peak squared envelope E_env^2 (atomic units) and
    ``laser_fwhm`` the FWHM of that intensity profile. The laser is centred
    four of its sigmas after t = 0 so its envelope is fully inside the window.
    """
    if params.dalpha is None:
        raise DomainError(f"molecule {params.name!r} needs dalpha for a laser kick")
    if kick_shape not in THZ_SHAPES:
        raise DomainError(f"kick shape must be one of {THZ_SHAPES}, got {kick_shape!r}")
    if not (laser_fwhm > 0 and kick_fwhm > 0):
        raise DomainError("pulse widths must be > 0")
    laser_sigma = fwhm_to_sigma(laser_fwhm)
    laser = PulseSpec(LASER_KICK, laser_peak, LASER_LEAD_SIGMAS * laser_sigma, laser_sigma)
    kick = PulseSpec(kick_shape, kick_peak, laser.center + T_per / 4.0, fwhm_to_sigma(kick_fwhm))
    return PulseSequence((laser, kick))


def hcp_train_sequence(base: PulseSequence, n_kicks: int, amplitudes: Sequence[float]) -> PulseSequence:
    """Replace the THz kick of a bipulse by ``n_kicks`` copies spaced by T_per/2.

    The period is recovered from the base sequence, whose kick sits T_per/4
    after the laser.
    """
    if n_kicks < 1:
        raise DomainError(f"n_kicks must be >= 1, got {n_kicks}")
    if len(amplitudes) != n_kicks:
        raise DomainError(f"{len(amplitudes)} amplitudes for {n_kicks} kicks")
    lasers, kicks = base.laser_pulses, base.thz_pulses
    if len(lasers) != 1 or len(kicks) != 1:
        raise DomainError("base sequence must hold exactly one laser kick and one THz kick")
    laser, first = lasers[0], kicks[0]
    half_period = 2.0 * (first.center - laser.center)
    train = tuple(
        replace(first, peak=float(amp), center=first.center + n * half_period)
        for n, amp in enumerate(amplitudes)
    )
    return PulseSequence((laser,) + train, base.override)
