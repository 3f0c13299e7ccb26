"""State carriers, state preparation, and expectation values."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..constants import KB
from .linalg import hermitian_eig, is_hermitian

NORM_TOL = 1e-10
TRACE_TOL = 1e-10
COHERENT_LOSS_TOL = 1e-8


class StateError(ValueError):
    """Invalid state data (norm, trace, or positivity)."""


class TruncationError(RuntimeError):
    """Discarded weight beyond tolerance in a truncated basis."""


@dataclass
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 1:
            raise StateError("state vector must be one-dimensional")

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_normalized(self, tol: float = NORM_TOL):
        if abs(self.norm() - 1.0) > tol:
            raise StateError(f"state norm {self.norm():.3e} deviates from 1")
        return self


@dataclass
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise StateError("density matrix must be square")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def validate(self, tol: float = TRACE_TOL):
        if not is_hermitian(self.entries, rtol=1e-10):
            raise StateError("density matrix is not Hermitian")
        tr = np.trace(self.entries).real
        if abs(tr - 1.0) > tol:
            raise StateError(f"trace {tr:.3e} deviates from 1")
        evals = np.linalg.eigvalsh(self.entries)
        if evals.min() < -1e-10:
            raise StateError(f"negative eigenvalue {evals.min():.3e}")
        return self


def coherent_state(d: int, alpha: complex) -> StateVector:
    """Truncated coherent state; errors if the discarded weight exceeds 1e-8."""
    n = np.arange(d)
    log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, d)))))
    if alpha == 0:
        amps = np.zeros(d, dtype=complex)
        amps[0] = 1.0
        return StateVector(amps)
    log_mag = -abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - log_fact / 2
    phase = np.angle(alpha) * n
    amps = np.exp(log_mag + 1j * phase)
    kept = float(np.sum(np.abs(amps) ** 2))
    lost = 1.0 - kept
    if lost > COHERENT_LOSS_TOL:
        raise TruncationError(
            f"coherent state |alpha|={abs(alpha):.3g} loses {lost:.2e} weight "
            f"in a d={d} basis"
        )
    return StateVector(amps / np.sqrt(kept))


def ground_state(h: np.ndarray) -> StateVector:
    """Lowest eigenvector of a Hermitian operator."""
    _, v = hermitian_eig(h)
    return StateVector(v[:, 0])


def thermal_density(h_osc: np.ndarray, temperature: float) -> DensityMatrix:
    """Gibbs state exp(-H/kT)/Z; T = 0 returns the ground-state projector."""
    if temperature < 0:
        raise StateError("temperature must be >= 0")
    w, v = hermitian_eig(h_osc)
    if temperature == 0:
        psi = v[:, 0]
        return DensityMatrix(np.outer(psi, psi.conj()))
    x = -(w - w.min()) / (KB * temperature)
    pops = np.exp(x)
    pops /= pops.sum()
    rho = (v * pops) @ v.conj().T
    return DensityMatrix(rho)


def expectation(op: np.ndarray, state: StateVector | DensityMatrix) -> complex:
    """<psi|A|psi> or Tr(rho A)."""
    op = np.asarray(op)
    if isinstance(state, StateVector):
        if op.shape[0] != state.dim:
            raise StateError(
                f"operator dim {op.shape[0]} does not match state dim {state.dim}"
            )
        return complex(np.vdot(state.amplitudes, op @ state.amplitudes))
    if isinstance(state, DensityMatrix):
        if op.shape[0] != state.dim:
            raise StateError(
                f"operator dim {op.shape[0]} does not match state dim {state.dim}"
            )
        return complex(np.trace(op @ state.entries))
    raise TypeError(f"unsupported state type {type(state)!r}")


def rotor_gaussian_packet(
    L: int, center: float, width: float, momentum: int = 0
) -> StateVector:
    """Angular Gaussian on the rotor basis via truncated Fourier coefficients.

    |psi|^2 has variance width^2 in the angle for width << pi; ``momentum``
    shifts the packet's mean angular momentum in units of hbar.
    """
    if width <= 0:
        raise StateError("packet width must be positive")
    m = np.arange(-L, L + 1)
    amps = np.exp(-(width**2) * (m - momentum) ** 2 - 1j * m * center)
    edge = max(abs(amps[0]), abs(amps[-1])) ** 2 / np.sum(np.abs(amps) ** 2)
    if edge > 1e-8:
        raise TruncationError(
            f"rotor packet of width {width:.3g} needs L > {L} "
            f"(edge weight {edge:.2e})"
        )
    amps = amps / np.linalg.norm(amps)
    return StateVector(amps)
