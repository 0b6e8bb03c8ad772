"""Gradient-ascent optimal control of the THz field towards a target state.

The control is a piecewise-constant field ``E_k`` on a uniform grid over the
horizon. Each interval is propagated with the exact exponential of the
Hamiltonian, and the gradient of the fidelity ``|<psi_T|psi(T)>|^2`` is the
exact derivative of that discretized map. It combines a forward sweep with a
backward-propagated costate and the Daleckii-Krein derivative of each step
exponential.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import build_basis, cos_theta_matrix, rotor_energies
from .dynamics import NORM_TOL, OVERFLOW_TOL, default_j_cap
from .errors import BasisOverflowError, DomainError, NumericError
from .pulses import FieldSamples, PulseSpec, default_guess_pulse
from .targets import TargetState
from .units import LINEAR, MoleculeParams

MIN_STEPS = 256
GROW = 1.5
SHRINK = 0.5
MAX_HALVINGS = 60


@dataclass(frozen=True)
class OctProblem:
    """One state-to-state control problem starting from ``|0, 0>``.

    ``horizon`` defaults to one rotational period and ``guess`` to
    :func:`~rotorctl.pulses.default_guess_pulse`. ``j_cap`` is the propagation
    cutoff (default ``target.j_max + 4``); strong guesses need more room.
    """

    params: MoleculeParams
    target: TargetState
    horizon: Optional[float] = None
    n_steps: int = 4096
    guess: Optional[PulseSpec] = None
    field_bound: Optional[float] = None
    penalty: float = 0.0
    j_cap: Optional[int] = None
    max_iterations: int = 5000
    goal: float = 0.99
    initial_step: Optional[float] = None

    def __post_init__(self):
        if self.params.kind != LINEAR:
            raise DomainError("optimal control is implemented for linear molecules")
        if self.horizon is not None and not self.horizon > 0:
            raise DomainError(f"horizon must be > 0, got {self.horizon!r}")
        if self.n_steps < MIN_STEPS:
            raise DomainError(f"need at least {MIN_STEPS} time steps, got {self.n_steps}")
        if self.field_bound is not None and not self.field_bound >= 0:
            raise DomainError(f"field_bound must be >= 0, got {self.field_bound!r}")
        if not self.penalty >= 0:
            raise DomainError(f"penalty must be >= 0, got {self.penalty!r}")
        if self.j_cap is not None and self.j_cap < self.target.j_max:
            raise DomainError(f"j_cap={self.j_cap} is below the target j_max={self.target.j_max}")

    @property
    def T(self) -> float:
        return self.params.period if self.horizon is None else self.horizon

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def cap(self) -> int:
        return default_j_cap(self.target.j_max) if self.j_cap is None else self.j_cap

    @property
    def guess_pulse(self) -> PulseSpec:
        if self.guess is not None:
            return self.guess
        return default_guess_pulse(self.params.period, self.params.B)

    def guess_field(self) -> np.ndarray:
        """Guess sampled at interval midpoints, clipped to the bound."""
        mids = (np.arange(self.n_steps) + 0.5) * self.dt
        return self.clip(self.guess_pulse.evaluate(mids))

    def clip(self, values: np.ndarray) -> np.ndarray:
        if self.field_bound is None:
            return np.asarray(values, dtype=float)
        return np.clip(values, -self.field_bound, self.field_bound)

    def samples(self, values: np.ndarray) -> FieldSamples:
        return FieldSamples(0.0, self.dt, values)


@dataclass(frozen=True)
class OctResult:
    field: FieldSamples
    fidelity: float
    iterations: int
    fidelity_history: np.ndarray = field(repr=False)
    objective_history: np.ndarray = field(repr=False)
    converged: bool
    message: str


class _Sweep:
    """Forward propagation under one control field, kept for the adjoint pass."""

    def __init__(self, values: np.ndarray, problem: OctProblem):
        values = np.asarray(values, dtype=float)
        if values.shape != (problem.n_steps,):
            raise DomainError(f"field has {values.shape} samples, problem grid has {problem.n_steps}")
        self.problem = problem
        self.values = values
        basis = build_basis(LINEAR, problem.cap, 0)
        self.cos = cos_theta_matrix(basis).entries
        self.mu0 = problem.params.mu0
        dt = problem.dt
        ham = -self.mu0 * values[:, None, None] * self.cos[None, :, :]
        idx = np.arange(basis.dim)
        ham[:, idx, idx] += rotor_energies(basis, problem.params)
        try:
            self.w, self.v = np.linalg.eigh(ham)
        except np.linalg.LinAlgError as exc:
            raise NumericError("eigendecomposition of the step Hamiltonian failed") from exc
        self.phase = np.exp(-1j * dt * self.w)
        self.target = problem.target.as_state(problem.cap).coefficients
        n = problem.n_steps
        # eigenbasis amplitudes of psi_k before step k
        self.pre = np.empty((n, basis.dim), dtype=complex)
        psi = np.zeros(basis.dim, dtype=complex)
        psi[0] = 1.0
        top = 0.0
        for k in range(n):
            vk = self.v[k]
            a = vk.T @ psi
            self.pre[k] = a
            psi = vk @ (self.phase[k] * a)
            top = max(top, abs(psi[-1]) ** 2 + abs(psi[-2]) ** 2)
        self.final = psi
        drift = abs(np.vdot(psi, psi).real - 1.0)
        if drift > NORM_TOL:
            raise NumericError(f"norm drift {drift:.3e} during control propagation")
        if top > OVERFLOW_TOL:
            raise BasisOverflowError(
                f"population {top:.3e} reached the top two j levels (j_cap={problem.cap}); increase j_cap"
            )
        self.overlap = complex(np.vdot(self.target, psi))
        self.fidelity = float(abs(self.overlap) ** 2)

    def gradient(self) -> np.ndarray:
        n = self.problem.n_steps
        dt = self.problem.dt
        post = np.empty_like(self.pre)  # eigenbasis amplitudes of the costate after step k
        chi = self.target.astype(complex)
        for k in range(n - 1, -1, -1):
            vk = self.v[k]
            a = vk.T @ chi
            post[k] = a
            chi = vk @ (np.conj(self.phase[k]) * a)
        # d exp(-i dt H) = V (G o L) V^T with G = V^T dH V, dH/dE = -mu0 cos
        g = np.swapaxes(self.v, 1, 2) @ (-self.mu0 * self.cos) @ self.v
        wa = self.w[:, :, None]
        wb = self.w[:, None, :]
        lmat = -1j * dt * np.exp(-0.5j * dt * (wa + wb)) * np.sinc(0.5 * dt * (wa - wb) / np.pi)
        d = np.einsum("ka,kab,kb->k", np.conj(post), g * lmat, self.pre)
        return 2.0 * np.real(np.conj(self.overlap) * d)


def fidelity(values: np.ndarray, problem: OctProblem) -> float:
    """|<psi_T|psi(T)>|^2 from |0, 0> under the piecewise-constant field ``values``."""
    return _Sweep(values, problem).fidelity


def gradient(values: np.ndarray, problem: OctProblem) -> np.ndarray:
    """Exact derivative of :func:`fidelity` with respect to each field sample."""
    return _Sweep(values, problem).gradient()


def _objective(sweep: _Sweep, problem: OctProblem) -> float:
    return sweep.fidelity - problem.penalty * problem.dt * float(np.sum(sweep.values**2))


def optimize(problem: OctProblem) -> OctResult:
    """Monotone gradient ascent with backtracking from the sampled guess field.

    The step grows by 1.5 after every accepted iterate and halves on every
    rejected trial. Iteration stops when the fidelity reaches ``problem.goal``,
    after ``max_iterations`` accepted steps, or when backtracking can no
    longer produce an improving field. The last case returns the best field
    with ``converged=False``.
    """
    sweep = _Sweep(problem.guess_field(), problem)
    obj = _objective(sweep, problem)
    fid_hist = [sweep.fidelity]
    obj_hist = [obj]
    alpha = None
    iterations = 0
    message = "maximum iterations reached"
    converged = False
    while True:
        if sweep.fidelity >= problem.goal:
            converged, message = True, f"fidelity goal {problem.goal} reached"
            break
        if iterations >= problem.max_iterations:
            break
        grad = sweep.gradient() - 2.0 * problem.penalty * problem.dt * sweep.values
        gmax = float(np.max(np.abs(grad)))
        if gmax == 0.0:
            message = "zero gradient"
            break
        if alpha is None:
            scale = float(np.max(np.abs(sweep.values)))
            step = problem.initial_step if problem.initial_step is not None else 0.01 * (scale or 1e-4)
            alpha = step / gmax
        accepted = None
        for _ in range(MAX_HALVINGS):
            trial = problem.clip(sweep.values + alpha * grad)
            if not np.any(trial != sweep.values):
                break
            try:
                cand = _Sweep(trial, problem)
            except BasisOverflowError:
                alpha *= SHRINK
                continue
            cand_obj = _objective(cand, problem)
            if cand_obj > obj:
                accepted = cand
                obj = cand_obj
                break
            alpha *= SHRINK
        if accepted is None:
            message = "line search exhausted: no improving step"
            break
        sweep = accepted
        iterations += 1
        fid_hist.append(sweep.fidelity)
        obj_hist.append(obj)
        alpha *= GROW
    return OctResult(
        problem.samples(sweep.values),
        sweep.fidelity,
        iterations,
        np.array(fid_hist),
        np.array(obj_hist),
        converged,
        message,
    )
