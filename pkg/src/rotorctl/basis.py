"""Truncated rotational bases and the operator matrices built on them.

Every interaction considered here is linearly polarized along the lab z axis,
so ``m`` (and ``k`` for symmetric tops) is conserved. A basis is therefore a
single ``(m, k)`` block holding the states ``|j, k, m>`` with
``max(|k|, |m|) <= j <= j_cap``, ordered by ascending ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DomainError
from .units import KINDS, LINEAR, SYMMETRIC_TOP, MoleculeParams


@dataclass(frozen=True)
class RotorBasis:
    kind: str
    j_cap: int
    m: int = 0
    k: int = 0

    @property
    def j_min(self) -> int:
        return max(abs(self.m), abs(self.k))

    @property
    def dim(self) -> int:
        return self.j_cap - self.j_min + 1

    @property
    def js(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_cap + 1)

    def index(self, j: int) -> int:
        if not self.j_min <= j <= self.j_cap:
            raise DomainError(f"j={j} not in basis with j in [{self.j_min}, {self.j_cap}]")
        return j - self.j_min

    def labels(self) -> list[tuple[int, ...]]:
        """State labels in index order: ``(j, m)`` or ``(j, k, m)``."""
        if self.kind == LINEAR:
            return [(int(j), self.m) for j in self.js]
        return [(int(j), self.k, self.m) for j in self.js]

    def enlarged(self, extra: int = 1) -> "RotorBasis":
        return RotorBasis(self.kind, self.j_cap + extra, self.m, self.k)


def build_basis(kind: str, j_cap: int, m: int = 0, k: Optional[int] = None) -> RotorBasis:
    """Validate quantum numbers and return the ``(m, k)`` block up to ``j_cap``."""
    if kind not in KINDS:
        raise DomainError(f"unknown basis kind {kind!r}")
    if int(j_cap) != j_cap or j_cap < 0:
        raise DomainError(f"j_cap must be a nonnegative integer, got {j_cap!r}")
    k = 0 if k is None else k
    if kind == LINEAR and k != 0:
        raise DomainError("linear molecules have no body-frame projection; k must be 0")
    if abs(m) > j_cap or abs(k) > j_cap:
        raise DomainError(f"|m|={abs(m)} or |k|={abs(k)} exceeds j_cap={j_cap}")
    return RotorBasis(kind, int(j_cap), int(m), int(k))


@dataclass(frozen=True)
class OperatorMatrix:
    """Real symmetric matrix of an operator in a :class:`RotorBasis`."""

    basis: RotorBasis
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.shape != (self.basis.dim, self.basis.dim):
            raise DomainError(f"matrix shape {a.shape} does not match basis dimension {self.basis.dim}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check(other)
        return OperatorMatrix(self.basis, self.entries - other.entries)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check(other)
        return OperatorMatrix(self.basis, self.entries + other.entries)

    def __rmul__(self, scalar: float) -> "OperatorMatrix":
        return OperatorMatrix(self.basis, float(scalar) * self.entries)

    def _check(self, other: "OperatorMatrix") -> None:
        if other.basis != self.basis:
            raise DomainError("operator matrices live in different bases")


def _cos_theta_entries(basis: RotorBasis) -> np.ndarray:
    js = basis.js.astype(float)
    k, m = float(basis.k), float(basis.m)
    mat = np.zeros((basis.dim, basis.dim))
    # diagonal k m / (j (j+1)), zero for j = 0 and for every linear block
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = np.where(js > 0, k * m / (js * (js + 1.0)), 0.0)
    mat[np.diag_indices(basis.dim)] = diag
    # <j+1|cos|j>, j from j_min to j_cap-1
    j = js[:-1]
    jp = j + 1.0
    off = np.sqrt((jp**2 - k**2) * (jp**2 - m**2)) / (jp * np.sqrt((2 * j + 1) * (2 * j + 3)))
    idx = np.arange(basis.dim - 1)
    mat[idx + 1, idx] = off
    mat[idx, idx + 1] = off
    return mat


@lru_cache(maxsize=4096)
def cos_theta_matrix(basis: RotorBasis) -> OperatorMatrix:
    """Matrix of cos(theta) in ``basis`` (tridiagonal in j)."""
    return OperatorMatrix(basis, _cos_theta_entries(basis))


@lru_cache(maxsize=4096)
def cos_squared_matrix(basis: RotorBasis) -> OperatorMatrix:
    """Matrix of cos^2(theta), built as the truncated square of cos(theta).

    The square is taken on the basis enlarged by one ``j`` level, so every
    intermediate state ``j'' <= j + 1`` is present and the restriction is exact.
    """
    big = _cos_theta_entries(basis.enlarged(1))
    n = basis.dim
    return OperatorMatrix(basis, (big @ big)[:n, :n])


def free_hamiltonian(basis: RotorBasis, params: MoleculeParams) -> OperatorMatrix:
    """Diagonal rigid-rotor energies ``B j(j+1)`` (+ ``(A - B) k^2`` for symmetric tops)."""
    if params.kind != basis.kind:
        raise DomainError(f"molecule kind {params.kind!r} does not match basis kind {basis.kind!r}")
    return OperatorMatrix(basis, np.diag(rotor_energies(basis, params)))


def rotor_energies(basis: RotorBasis, params: MoleculeParams) -> np.ndarray:
    js = basis.js.astype(float)
    e = params.B * js * (js + 1.0)
    if basis.kind == SYMMETRIC_TOP:
        e = e + (params.A - params.B) * basis.k**2
    return e
