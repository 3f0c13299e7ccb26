"""Unitary time propagation under time-independent Hamiltonians.

Small systems are evolved spectrally, psi(t) = V exp(-i L t / hbar) V† psi0.
Above ``DENSE_LIMIT`` the Lanczos stepper takes over (dense eigensolving at
Fock/rotor cutoffs of a few thousand states is impractical on a workstation).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sparse

from ..constants import HBAR
from .basis import BasisSpec
from .linalg import NonHermitianError, hermiticity_defect, lanczos_expm_multiply
from .states import StateVector, TruncationError

DENSE_LIMIT = 2000
EDGE_WEIGHT_TOL = 1e-6


def evolve(
    h,
    psi0: StateVector,
    times,
    method: str = "auto",
    krylov_dim: int = 30,
    tol: float = 1e-9,
) -> list[StateVector]:
    """Propagate psi0 under Hamiltonian ``h`` (Joules), returning psi(t).

    ``times`` must be nondecreasing and nonnegative. ``method`` is one of
    "auto", "dense", "lanczos"; "auto" switches to Lanczos above DENSE_LIMIT
    or for sparse/callable operators.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be nondecreasing")
    psi0 = psi0.check_normalized()

    dense = isinstance(h, np.ndarray)
    if method == "auto":
        method = "dense" if dense and h.shape[0] <= DENSE_LIMIT else "lanczos"
    if method == "dense" and not dense:
        raise ValueError("dense propagation needs an ndarray Hamiltonian")

    if method == "dense":
        if hermiticity_defect(h) > 1e-12:
            raise NonHermitianError("Hamiltonian is not Hermitian")
        w, v = np.linalg.eigh(h)
        coeff = v.conj().T @ psi0.amplitudes
        out = []
        for t in times:
            amps = v @ (np.exp(-1j * w * t / HBAR) * coeff)
            out.append(StateVector(amps).check_normalized())
        return out

    if method != "lanczos":
        raise ValueError(f"unknown method {method!r}")

    if sparse.issparse(h):
        hw = h.tocsr() / HBAR
        matvec = lambda x: hw @ x  # noqa: E731
    elif isinstance(h, np.ndarray):
        hw = h / HBAR
        matvec = lambda x: hw @ x  # noqa: E731
    else:
        # callable already in angular-frequency units times hbar: caller must
        # pass a matvec for H/hbar
        matvec = h

    out = []
    psi = np.array(psi0.amplitudes, dtype=complex)
    t_prev = 0.0
    for t in times:
        if t > t_prev:
            psi = lanczos_expm_multiply(
                matvec, psi, t - t_prev, krylov_dim=krylov_dim, tol=tol
            )
            t_prev = t
        out.append(StateVector(psi.copy()).check_normalized())
    return out


def edge_weight(psi: StateVector, basis: BasisSpec) -> float:
    """Max population in the two outermost layers of each truncated factor."""
    dims = [d for _, d in basis.factors]
    pops = np.abs(psi.amplitudes.reshape(dims)) ** 2
    worst = 0.0
    for axis, (name, d) in enumerate(basis.factors):
        if name == "spin" or d < 4:
            continue
        summed = np.moveaxis(pops, axis, 0).reshape(d, -1).sum(axis=1)
        if name == "rotor":
            w = summed[:2].sum() + summed[-2:].sum()
        else:  # fock: only the top of the ladder is truncated
            w = summed[-2:].sum()
        worst = max(worst, float(w))
    return worst


def check_edge_weight(psi: StateVector, basis: BasisSpec, tol: float = EDGE_WEIGHT_TOL):
    w = edge_weight(psi, basis)
    if w > tol:
        raise TruncationError(
            f"discarded-weight diagnostic {w:.2e} exceeds {tol:g}; "
            "enlarge the rotor/Fock cutoffs"
        )
    return w
