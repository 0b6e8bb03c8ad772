"""Pure rotational states and Boltzmann-weighted mixtures of them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import RotorBasis
from .errors import DomainError


@dataclass(frozen=True)
class RotorState:
    basis: RotorBasis
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        if c.shape != (self.basis.dim,):
            raise DomainError(f"{c.shape[0] if c.ndim else 0} coefficients for a basis of dimension {self.basis.dim}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def populations(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    def overlap(self, other: "RotorState") -> complex:
        """<self|other>."""
        if other.basis != self.basis:
            raise DomainError("states live in different bases")
        return complex(np.vdot(self.coefficients, other.coefficients))

    def label(self) -> tuple[int, ...]:
        """Label of the dominant basis state, used to tag ensemble members."""
        return self.basis.labels()[int(np.argmax(self.populations()))]


def basis_state(basis: RotorBasis, j: int) -> RotorState:
    c = np.zeros(basis.dim, dtype=complex)
    c[basis.index(j)] = 1.0
    return RotorState(basis, c)


@dataclass(frozen=True)
class EnsembleMember:
    weight: float
    state: RotorState
    label: tuple[int, ...]


@dataclass(frozen=True)
class RotorEnsemble:
    """Incoherent mixture sum_i w_i |psi_i><psi_i|.

    Members are kept in descending-weight order (ties broken by label), which
    fixes the reduction order of every ensemble average.
    """

    members: tuple[EnsembleMember, ...]
    temperature: Optional[float] = None

    def __post_init__(self):
        if not self.members:
            raise DomainError("an ensemble needs at least one member")
        first = self.members[0].state.basis
        for mem in self.members:
            if mem.weight <= 0:
                raise DomainError(f"member {mem.label} has nonpositive weight {mem.weight}")
            b = mem.state.basis
            if (b.kind, b.j_cap) != (first.kind, first.j_cap):
                raise DomainError("all ensemble members must share kind and j_cap")
        total = sum(mem.weight for mem in self.members)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"ensemble weights sum to {total!r}, expected 1")
        object.__setattr__(self, "members", tuple(self.members))

    def __len__(self) -> int:
        return len(self.members)

    @property
    def weights(self) -> np.ndarray:
        return np.array([mem.weight for mem in self.members])

    @property
    def trace(self) -> float:
        return float(sum(mem.weight * mem.state.norm**2 for mem in self.members))
