"""Product-basis bookkeeping for spin-1 x planar-rotor x libration-Fock spaces.

The factor order is fixed (spin, rotor, fock); any factor may be omitted.
Rotor states are angular-momentum eigenstates |m>, m = -L..L, so the rotor
factor has dimension 2L + 1. The Fock factor is a truncated oscillator basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BasisError(ValueError):
    """Basis composition or dimension mismatch."""


FACTOR_ORDER = ("spin", "rotor", "fock")


@dataclass(frozen=True)
class BasisSpec:
    """Composition descriptor for the product Hilbert space.

    Attributes:
        spin_dim: 3 for the NV triplet, 2 for a two-level subspace, or None.
        rotor_L: angular-momentum cutoff (dimension 2L+1), or None.
        fock_dim: oscillator truncation d >= 2, or None.
    """

    spin_dim: int | None = None
    rotor_L: int | None = None
    fock_dim: int | None = None

    def __post_init__(self):
        if self.spin_dim is None and self.rotor_L is None and self.fock_dim is None:
            raise BasisError("basis needs at least one factor")
        if self.spin_dim is not None and self.spin_dim not in (2, 3):
            raise BasisError(f"spin_dim must be 2 or 3, got {self.spin_dim}")
        if self.rotor_L is not None and self.rotor_L < 1:
            raise BasisError(f"rotor_L must be >= 1, got {self.rotor_L}")
        if self.fock_dim is not None and self.fock_dim < 2:
            raise BasisError(f"fock_dim must be >= 2, got {self.fock_dim}")

    @property
    def factors(self) -> list[tuple[str, int]]:
        out = []
        if self.spin_dim is not None:
            out.append(("spin", self.spin_dim))
        if self.rotor_L is not None:
            out.append(("rotor", 2 * self.rotor_L + 1))
        if self.fock_dim is not None:
            out.append(("fock", self.fock_dim))
        return out

    @property
    def dim(self) -> int:
        n = 1
        for _, d in self.factors:
            n *= d
        return n

    def factor_index(self, name: str) -> int:
        for i, (f, _) in enumerate(self.factors):
            if f == name:
                return i
        raise BasisError(f"factor {name!r} not present in basis {self}")

    def has(self, name: str) -> bool:
        return any(f == name for f, _ in self.factors)


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product respecting the fixed factor order (left factor slow)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise BasisError("tensor expects matrices")
    return np.kron(a, b)


def embed(op: np.ndarray, factor: str, basis: BasisSpec) -> np.ndarray:
    """Pad ``op`` (acting on one factor) with identities on all other factors."""
    op = np.asarray(op)
    idx = basis.factor_index(factor)
    dims = [d for _, d in basis.factors]
    if op.shape != (dims[idx], dims[idx]):
        raise BasisError(
            f"operator shape {op.shape} does not match factor {factor!r} "
            f"dimension {dims[idx]}"
        )
    out = np.eye(1, dtype=op.dtype)
    for i, d in enumerate(dims):
        out = np.kron(out, op if i == idx else np.eye(d, dtype=op.dtype))
    return out


def product_state(parts: list[np.ndarray]) -> np.ndarray:
    """Tensor product of per-factor state vectors, in factor order."""
    out = np.array([1.0 + 0.0j])
    for p in parts:
        out = np.kron(out, np.asarray(p, dtype=complex))
    return out
