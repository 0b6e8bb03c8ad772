"""The orientation/delocalization figure of merit F = cos(theta) - a cos^2(theta).

Covers the classical optimum of F over the polar angle, the quantum target
state (top eigenvector of F restricted to ``j <= j_max``, m = 0), and the
state diagnostics used to characterize it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Union

import numpy as np
from scipy.special import eval_legendre

from .basis import OperatorMatrix, RotorBasis, build_basis, cos_squared_matrix, cos_theta_matrix
from .errors import DomainError, NumericError, UnsupportedInputError
from .states import RotorEnsemble, RotorState
from .units import LINEAR

SIGN_THRESHOLD = 1e-10
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class MeritParams:
    a: float
    j_max: int

    def __post_init__(self):
        if not self.a >= 0:
            raise DomainError(f"weight a must be >= 0, got {self.a!r}")
        if int(self.j_max) != self.j_max or self.j_max < 0:
            raise DomainError(f"j_max must be a nonnegative integer, got {self.j_max!r}")


class ClassicalOptimum(NamedTuple):
    theta_max: float
    cos_val: float
    cos2_val: float
    f_max: float


def classical_optimum(a: float) -> ClassicalOptimum:
    """Maximize f(u) = u - a u^2 over u = cos(theta) in [-1, 1]."""
    a = float(a)
    if not a > 0:
        raise DomainError(f"a must be > 0, got {a!r}")
    if a >= 0.5:
        u = 1.0 / (2.0 * a)
        return ClassicalOptimum(math.acos(u), u, u * u, 1.0 / (4.0 * a))
    return ClassicalOptimum(0.0, 1.0, 1.0, 1.0 - a)


def classical_scan(a_grid: Iterable[float]) -> list[tuple[float, float, float]]:
    """Rows ``(a, cos_val, cos2_val)`` in input order."""
    a_grid = list(a_grid)
    if not a_grid:
        raise DomainError("empty a grid")
    rows = []
    for a in a_grid:
        opt = classical_optimum(a)
        rows.append((float(a), opt.cos_val, opt.cos2_val))
    return rows


def projected_merit_matrix(basis: RotorBasis, a: float) -> OperatorMatrix:
    return cos_theta_matrix(basis) - float(a) * cos_squared_matrix(basis)


@dataclass(frozen=True)
class TargetState:
    basis: RotorBasis
    coefficients: np.ndarray = field(repr=False)
    lambda_max: float
    cos_exp: float
    cos2_exp: float
    a: float

    @property
    def j_max(self) -> int:
        return self.basis.j_cap

    def as_state(self, j_cap: int | None = None) -> RotorState:
        """The target as a complex state, zero-padded up to ``j_cap``."""
        j_cap = self.basis.j_cap if j_cap is None else j_cap
        if j_cap < self.basis.j_cap:
            raise DomainError(f"cannot embed a j_max={self.basis.j_cap} target in j_cap={j_cap}")
        basis = build_basis(self.basis.kind, j_cap, self.basis.m, self.basis.k)
        c = np.zeros(basis.dim, dtype=complex)
        c[: self.basis.dim] = self.coefficients
        return RotorState(basis, c)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    big = np.flatnonzero(np.abs(v) > SIGN_THRESHOLD)
    if big.size and v[big[0]] < 0:
        v = -v
    return v


def target_state(a: float, j_max: int) -> TargetState:
    """Top eigenpair of the projected figure of merit in the m = 0 block."""
    merit = MeritParams(a, j_max)
    if not merit.a > 0:
        raise DomainError(f"a must be > 0, got {a!r}")
    basis = build_basis(LINEAR, merit.j_max, 0)
    f = projected_merit_matrix(basis, merit.a).entries
    try:
        w, v = np.linalg.eigh(f)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed for a={a}, j_max={j_max}") from exc
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    candidates = [_fix_sign(v[:, i]) for i in range(len(w)) if w[0] - w[i] <= DEGENERACY_TOL]
    coeffs = max(candidates, key=lambda c: tuple(c))
    coeffs = coeffs / np.linalg.norm(coeffs)
    cos_exp = float(coeffs @ cos_theta_matrix(basis).entries @ coeffs)
    cos2_exp = float(coeffs @ cos_squared_matrix(basis).entries @ coeffs)
    coeffs.setflags(write=False)
    return TargetState(basis, coeffs, float(w[0]), cos_exp, cos2_exp, merit.a)


class Expectations(NamedTuple):
    cos_exp: float
    cos2_exp: float


def _pure_expectations(state: RotorState) -> Expectations:
    c = state.coefficients
    cos_m = cos_theta_matrix(state.basis).entries
    cos2_m = cos_squared_matrix(state.basis).entries
    return Expectations(float(np.real(np.vdot(c, cos_m @ c))), float(np.real(np.vdot(c, cos2_m @ c))))


def expectations(state: Union[RotorState, RotorEnsemble, TargetState]) -> Expectations:
    """<cos theta> and <cos^2 theta> of a pure state or ensemble (Tr[rho O])."""
    if isinstance(state, TargetState):
        return Expectations(state.cos_exp, state.cos2_exp)
    if isinstance(state, RotorState):
        return _pure_expectations(state)
    if isinstance(state, RotorEnsemble):
        cos_sum = cos2_sum = 0.0
        for mem in state.members:
            e = _pure_expectations(mem.state)
            cos_sum += mem.weight * e.cos_exp
            cos2_sum += mem.weight * e.cos2_exp
        return Expectations(cos_sum, cos2_sum)
    raise DomainError(f"cannot take expectations of {type(state).__name__}")


def angular_density(state: Union[RotorState, TargetState], theta: np.ndarray) -> np.ndarray:
    """Polar-angle probability density P(theta) = 2 pi sin(theta) |psi(theta)|^2.

    Only m = 0 states of linear molecules are supported; P integrates to one
    over [0, pi].
    """
    if isinstance(state, TargetState):
        state = state.as_state()
    basis = state.basis
    if basis.kind != LINEAR or basis.m != 0:
        raise UnsupportedInputError("angular density is implemented for linear m = 0 states only")
    theta = np.asarray(theta, dtype=float)
    x = np.cos(theta)
    amp = np.zeros(theta.shape, dtype=complex)
    for j, c in zip(basis.js, state.coefficients):
        if c != 0:
            amp += c * math.sqrt((2 * j + 1) / (4 * math.pi)) * eval_legendre(int(j), x)
    return 2 * math.pi * np.sin(theta) * np.abs(amp) ** 2
