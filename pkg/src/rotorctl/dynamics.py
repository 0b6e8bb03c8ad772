"""Time propagation of rotational wave packets and thermal ensembles.

The Hamiltonian in one ``(m, k)`` block is

    H(t) = H_rot - mu0 E(t) cos(theta) - (dalpha / 4) I(t) cos^2(theta)

Each grid interval is advanced by exponentiating H exactly at the interval
midpoint (``exp(-i H(t_mid) dt)`` via a symmetric eigendecomposition).
Intervals where every pulse is negligible are evolved analytically, and short
pulses get midpoint sub-steps so that each width is resolved by at least
``samples_per_width`` evaluations.

A thermal ensemble is evolved as independent pure members (equivalent to the
von Neumann equation because the dynamics is unitary). Members whose blocks
have identical matrices and whose initial vectors coincide share a column of
the batched state array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .basis import RotorBasis, build_basis, cos_squared_matrix, cos_theta_matrix, rotor_energies
from .errors import BasisOverflowError, DomainError, NumericError
from .pulses import LASER_KICK, PulseSequence, sample
from .states import EnsembleMember, RotorEnsemble, RotorState, basis_state
from .units import LINEAR, SYMMETRIC_TOP, MoleculeParams, kelvin_to_au

DEFAULT_STEPS_PER_PERIOD = 4096
DEFAULT_WEIGHT_TAIL = 1e-6
DEFAULT_J_MARGIN = 4
NORM_TOL = 1e-6
OVERFLOW_TOL = 1e-6
# a step whose interaction phase ||V|| dt stays below this is taken as field free
QUIET_PHASE = 1e-15
SAMPLES_PER_WIDTH = 8


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 1 or not self.t1 > self.t0:
            raise DomainError(f"invalid time grid [{self.t0}, {self.t1}] with {self.n_steps} steps")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


def period_grid(
    params: MoleculeParams,
    periods: float,
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
    t0: float = 0.0,
) -> TimeGrid:
    """Uniform grid covering ``periods`` rotational periods starting at ``t0``."""
    n = int(round(periods * steps_per_period))
    return TimeGrid(t0, t0 + periods * params.period, n)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray = field(repr=False)
    period: float
    cos: np.ndarray = field(repr=False)
    cos2: np.ndarray = field(repr=False)
    norm: np.ndarray = field(repr=False)

    @property
    def t_over_period(self) -> np.ndarray:
        return self.times / self.period

    def __len__(self) -> int:
        return len(self.times)

    def index_of(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))


def free_evolve(state: RotorState, params: MoleculeParams, t: float) -> RotorState:
    """Exact field-free evolution ``c_j -> c_j exp(-i E_j t)``."""
    if params.kind != state.basis.kind:
        raise DomainError(f"molecule kind {params.kind!r} does not match state basis {state.basis.kind!r}")
    e = rotor_energies(state.basis, params)
    return RotorState(state.basis, state.coefficients * np.exp(-1j * e * t))


# ---------------------------------------------------------------------------
# batched block engine
# ---------------------------------------------------------------------------


def _block_signature(basis: RotorBasis) -> tuple:
    # (k, m) and (-k, -m) give identical matrices and energies
    km = basis.k * basis.m
    return (basis.kind, basis.j_cap, abs(basis.k), abs(basis.m), (km > 0) - (km < 0))


class _BlockStack:
    """Pure states on several conserved-(m, k) blocks, stored on a shared j axis.

    Index ``j`` of every array is the rotational quantum number; entries with
    ``j < j_min`` of a block are inert padding (zero couplings, zero amplitude).
    """

    def __init__(self, params: MoleculeParams, members: Sequence[tuple[float, RotorState, tuple]]):
        self.params = params
        j_cap = members[0][1].basis.j_cap
        self.J = J = j_cap + 1
        blocks: dict[tuple, int] = {}
        self.bases: list[RotorBasis] = []
        columns: list[list[np.ndarray]] = []
        col_keys: list[dict[bytes, int]] = []
        col_weights: list[list[float]] = []
        self.col_tags: list[list[tuple]] = []
        self.member_slots: list[tuple[int, int]] = []
        for weight, state, tag in members:
            b = state.basis
            if b.j_cap != j_cap or b.kind != params.kind:
                raise DomainError("all propagated states must share kind and j_cap")
            sig = _block_signature(b)
            if sig not in blocks:
                blocks[sig] = len(self.bases)
                self.bases.append(b)
                columns.append([])
                col_keys.append({})
                col_weights.append([])
                self.col_tags.append([])
            ib = blocks[sig]
            vec = np.zeros(J, dtype=complex)
            vec[b.j_min:] = state.coefficients
            key = vec.tobytes()
            if key not in col_keys[ib]:
                col_keys[ib][key] = len(columns[ib])
                columns[ib].append(vec)
                col_weights[ib].append(0.0)
                self.col_tags[ib].append(tag)
            ic = col_keys[ib][key]
            col_weights[ib][ic] += weight
            self.member_slots.append((ib, ic))

        nb = len(self.bases)
        ncol = max(len(c) for c in columns)
        self.psi = np.zeros((nb, J, ncol), dtype=complex)
        self.weights = np.zeros((nb, ncol))
        self.valid = np.zeros((nb, ncol), dtype=bool)
        for ib in range(nb):
            n = len(columns[ib])
            self.psi[ib, :, :n] = np.array(columns[ib]).T
            self.weights[ib, :n] = col_weights[ib]
            self.valid[ib, :n] = True

        self.e_rot = params.B * np.arange(J) * (np.arange(J) + 1.0)
        self.e_block = np.array(
            [(params.A - params.B) * b.k**2 if b.kind == SYMMETRIC_TOP else 0.0 for b in self.bases]
        )
        self.cos = np.zeros((nb, J, J))
        self.cos2 = np.zeros((nb, J, J))
        for ib, b in enumerate(self.bases):
            lo = b.j_min
            self.cos[ib, lo:, lo:] = cos_theta_matrix(b).entries
            self.cos2[ib, lo:, lo:] = cos_squared_matrix(b).entries
        self.cos_bands = [np.diagonal(self.cos, d, axis1=1, axis2=2).copy() for d in (0, 1)]
        self.cos2_bands = [np.diagonal(self.cos2, d, axis1=1, axis2=2).copy() for d in (0, 1, 2)]
        self.h_rot = self.e_rot[None, :] + self.e_block[:, None]

    # -- observables -------------------------------------------------------
    def _coherences(self) -> list[np.ndarray]:
        """Weighted band coherences rho_d[b, j] = sum_c w conj(psi_j) psi_{j+d}."""
        w = self.weights[:, None, :]
        out = []
        for d in (0, 1, 2):
            a = np.conj(self.psi[:, : self.J - d, :]) * self.psi[:, d:, :]
            out.append(np.sum(w * a, axis=2))
        return out

    def observe(self) -> tuple[float, float, float]:
        rho = self._coherences()
        cos = np.sum(self.cos_bands[0] * rho[0].real) + 2.0 * np.sum((self.cos_bands[1] * rho[1]).real)
        cos2 = (
            np.sum(self.cos2_bands[0] * rho[0].real)
            + 2.0 * np.sum((self.cos2_bands[1] * rho[1]).real)
            + 2.0 * np.sum((self.cos2_bands[2] * rho[2]).real)
        )
        return float(cos), float(cos2), float(np.sum(rho[0].real))

    def observe_free(self, taus: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Observables after field-free evolution by each of ``taus`` (no state change).

        Energy differences within a block depend on ``j`` only, so the band
        sums collapse over blocks before the time phases are applied.
        """
        rho = self._coherences()
        static_cos = np.sum(self.cos_bands[0] * rho[0].real)
        static_cos2 = np.sum(self.cos2_bands[0] * rho[0].real)
        norm = float(np.sum(rho[0].real))
        cos = np.full(taus.shape, static_cos)
        cos2 = np.full(taus.shape, static_cos2)
        for d, band, target in ((1, self.cos_bands[1], cos), (1, self.cos2_bands[1], cos2), (2, self.cos2_bands[2], cos2)):
            amp = np.sum(band * rho[d], axis=0)
            nz = np.flatnonzero(amp)
            if nz.size == 0:
                continue
            freq = self.e_rot[d:][nz] - self.e_rot[: self.J - d][nz]
            target += 2.0 * np.real(np.exp(-1j * np.outer(taus, freq)) @ amp[nz])
        return cos, cos2, np.full(taus.shape, norm)

    # -- evolution ---------------------------------------------------------
    def free(self, tau: float) -> None:
        self.psi *= np.exp(-1j * self.h_rot * tau)[:, :, None]

    def driven(self, e_thz: float, intensity: float, h: float) -> None:
        ham = -self.params.mu0 * e_thz * self.cos
        if intensity:
            ham = ham - 0.25 * self.params.dalpha * intensity * self.cos2
        idx = np.arange(self.J)
        ham[:, idx, idx] += self.h_rot
        w, v = np.linalg.eigh(ham)
        vt = np.swapaxes(v, 1, 2)
        a = (vt @ self.psi.real) + 1j * (vt @ self.psi.imag)
        a *= np.exp(-1j * h * w)[:, :, None]
        self.psi = (v @ a.real) + 1j * (v @ a.imag)

    # -- guards ------------------------------------------------------------
    def check(self, t: float) -> None:
        pop = np.abs(self.psi) ** 2
        norms = pop.sum(axis=1)
        drift = np.where(self.valid, np.abs(norms - 1.0), 0.0)
        if drift.max() > NORM_TOL:
            ib, ic = np.unravel_index(np.argmax(drift), drift.shape)
            raise NumericError(
                f"norm drift {drift[ib, ic]:.3e} for member {self.col_tags[ib][ic]} at t={t:.6g}"
            )
        top = np.where(self.valid, pop[:, -2:, :].sum(axis=1), 0.0)
        if top.max() > OVERFLOW_TOL:
            ib, ic = np.unravel_index(np.argmax(top), top.shape)
            raise BasisOverflowError(
                f"population {top[ib, ic]:.3e} in the top two j levels (j_cap={self.J - 1}) for member "
                f"{self.col_tags[ib][ic]} at t={t:.6g}; increase j_cap"
            )

    def member_state(self, slot: int) -> np.ndarray:
        ib, ic = self.member_slots[slot]
        return self.psi[ib, :, ic]


def _interval_plan(seq: PulseSequence, params: MoleculeParams, grid: TimeGrid, samples_per_width: float):
    """Per-interval sub-step counts, sub-step midpoint fields and quiet flags."""
    times = grid.times
    dt = grid.dt
    n = grid.n_steps
    nsub = np.ones(n, dtype=np.int64)
    for p in seq.pulses:
        if seq.override is not None and p.shape != LASER_KICK:
            continue
        lo, hi = p.support
        k0 = max(0, int(math.floor((lo - grid.t0) / dt)))
        k1 = min(n, int(math.ceil((hi - grid.t0) / dt)))
        if k1 > k0:
            need = max(1, int(math.ceil(samples_per_width * dt / p.width)))
            nsub[k0:k1] = np.maximum(nsub[k0:k1], need)
    starts = np.repeat(times[:-1], nsub)
    h = np.repeat(dt / nsub, nsub)
    offsets = np.arange(nsub.sum()) - np.repeat(np.cumsum(nsub) - nsub, nsub)
    mids = starts + (offsets + 0.5) * h
    e_thz, inten = sample(seq, mids)
    if np.any(inten != 0) and params.dalpha is None:
        raise DomainError(f"molecule {params.name!r} needs dalpha for a laser kick")
    strength = (params.mu0 * np.abs(e_thz) + 0.25 * (params.dalpha or 0.0) * np.abs(inten)) * h
    bounds = np.concatenate(([0], np.cumsum(nsub)))
    quiet = np.maximum.reduceat(strength, bounds[:-1]) < QUIET_PHASE
    return nsub, bounds, e_thz, inten, h, quiet


def _run(stack: _BlockStack, params: MoleculeParams, seq: PulseSequence, grid: TimeGrid,
         samples_per_width: float) -> Trajectory:
    times = grid.times
    n = grid.n_steps
    cos = np.empty(n + 1)
    cos2 = np.empty(n + 1)
    norm = np.empty(n + 1)
    stack.check(times[0])
    cos[0], cos2[0], norm[0] = stack.observe()
    nsub, bounds, e_thz, inten, h, quiet = _interval_plan(seq, params, grid, samples_per_width)
    k = 0
    while k < n:
        if quiet[k]:
            k_end = k
            while k_end < n and quiet[k_end]:
                k_end += 1
            taus = times[k + 1 : k_end + 1] - times[k]
            cos[k + 1 : k_end + 1], cos2[k + 1 : k_end + 1], norm[k + 1 : k_end + 1] = stack.observe_free(taus)
            stack.free(times[k_end] - times[k])
            k = k_end
            continue
        for s in range(bounds[k], bounds[k + 1]):
            stack.driven(e_thz[s], inten[s], h[s])
        stack.check(times[k + 1])
        cos[k + 1], cos2[k + 1], norm[k + 1] = stack.observe()
        k += 1
    return Trajectory(times, params.period, cos, cos2, norm)


def propagate(
    state: RotorState,
    params: MoleculeParams,
    seq: PulseSequence,
    grid: TimeGrid,
    samples_per_width: float = SAMPLES_PER_WIDTH,
) -> tuple[RotorState, Trajectory]:
    """Integrate the Schroedinger equation for ``state`` over ``grid``.

    Raises :class:`BasisOverflowError` when more than 1e-6 of the population
    reaches the top two ``j`` levels and :class:`NumericError` on norm drift
    above 1e-6.
    """
    if params.kind != state.basis.kind:
        raise DomainError(f"molecule kind {params.kind!r} does not match state basis {state.basis.kind!r}")
    stack = _BlockStack(params, [(1.0, state, state.label())])
    traj = _run(stack, params, seq, grid, samples_per_width)
    final = RotorState(state.basis, stack.member_state(0)[state.basis.j_min :])
    return final, traj


def propagate_ensemble(
    ens: RotorEnsemble,
    params: MoleculeParams,
    seq: PulseSequence,
    grid: TimeGrid,
    samples_per_width: float = SAMPLES_PER_WIDTH,
) -> tuple[RotorEnsemble, Trajectory]:
    """Evolve every member of ``ens``; the trajectory holds Tr[rho O](t)."""
    if params.kind != ens.members[0].state.basis.kind:
        raise DomainError("molecule kind does not match the ensemble basis")
    stack = _BlockStack(params, [(mem.weight, mem.state, mem.label) for mem in ens.members])
    traj = _run(stack, params, seq, grid, samples_per_width)
    members = []
    for i, mem in enumerate(ens.members):
        b = mem.state.basis
        members.append(EnsembleMember(mem.weight, RotorState(b, stack.member_state(i)[b.j_min :]), mem.label))
    return RotorEnsemble(tuple(members), ens.temperature), traj


def default_j_cap(j_max: int, margin: int = DEFAULT_J_MARGIN) -> int:
    return j_max + margin


def nuclear_spin_weight(k: int) -> float:
    """Relative nuclear-spin statistical weight of a C3v methyl top (K = 0 mod 3 doubled)."""
    return 2.0 if k % 3 == 0 else 1.0


def boltzmann_ensemble(
    params: MoleculeParams,
    T: float,
    weight_tail: float = DEFAULT_WEIGHT_TAIL,
    j_cap: int = 20,
    nuclear_spin: bool = False,
) -> RotorEnsemble:
    """Thermal mixture of field-free eigenstates truncated to weight ``1 - weight_tail``.

    Levels are added in order of increasing energy, each with all its
    ``m`` (and +/-k) members, until the included Boltzmann weight reaches
    ``1 - weight_tail`` of the partition function; the kept weights are then
    renormalized. Raises :class:`BasisOverflowError` when a required level
    sits in the top two ``j`` levels of ``j_cap``.
    """
    if not T >= 0:
        raise DomainError(f"temperature must be >= 0, got {T!r}")
    if not 0 < weight_tail < 1:
        raise DomainError(f"weight_tail must be in (0, 1), got {weight_tail!r}")
    kind = params.kind
    if T == 0:
        basis = build_basis(kind, j_cap, 0, 0)
        ground = (0, 0) if kind == LINEAR else (0, 0, 0)
        return RotorEnsemble((EnsembleMember(1.0, basis_state(basis, 0), ground),), 0.0)

    kt = kelvin_to_au(T)
    # (energy, j, |k|, degeneracy factor without m)
    levels = []
    j = 0
    while True:
        e_min = None
        ks = [0] if kind == LINEAR else range(0, j + 1)
        for k in ks:
            e = params.B * j * (j + 1)
            g = 1.0
            if kind == SYMMETRIC_TOP:
                e += (params.A - params.B) * k * k
                g = (1.0 if k == 0 else 2.0) * (nuclear_spin_weight(k) if nuclear_spin else 1.0)
            levels.append((e, j, k, g))
            e_min = e if e_min is None else min(e_min, e)
        if e_min / kt > 60.0 + math.log(2 * j + 1.0):
            break
        j += 1
    levels.sort(key=lambda x: (x[0], x[1], x[2]))
    boltz = np.array([g * (2 * jj + 1) * math.exp(-e / kt) for e, jj, _, g in levels])
    z = boltz.sum()
    cumulative = np.cumsum(boltz) / z
    n_keep = int(np.searchsorted(cumulative, 1.0 - weight_tail) + 1)
    kept = levels[:n_keep]
    j_needed = max(lv[1] for lv in kept)
    if j_needed > j_cap - 2:
        raise BasisOverflowError(
            f"thermal ensemble at T={T} K needs j0 up to {j_needed}; j_cap={j_cap} leaves no room above it"
        )
    z_kept = boltz[:n_keep].sum()
    members = []
    for e, jj, kk, g in kept:
        w_state = (g / (1.0 if kk == 0 or kind == LINEAR else 2.0)) * math.exp(-e / kt) / z_kept
        k_values = [0] if kind == LINEAR or kk == 0 else [kk, -kk]
        for k in k_values:
            for m in range(-jj, jj + 1):
                basis = build_basis(kind, j_cap, m, k)
                label = (jj, m) if kind == LINEAR else (jj, k, m)
                members.append(EnsembleMember(w_state, basis_state(basis, jj), label))
    members.sort(key=lambda mem: (-mem.weight, mem.label))
    total = sum(mem.weight for mem in members)
    members = [EnsembleMember(mem.weight / total, mem.state, mem.label) for mem in members]
    return RotorEnsemble(tuple(members), float(T))
