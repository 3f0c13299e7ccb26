"""Operator construction on the individual basis factors.

Conventions (frozen):
  * spin-1 matrices live in the eigenbasis of the body-axis component,
    ordered (+hbar, 0, -hbar), and satisfy [S1, S2] = i hbar S3 cyclically;
  * the rotor shift operator lowers angular momentum, |m> -> |m-1>, so that
    [p_gamma, shift] = -hbar * shift;
  * oscillator zero-point length x0 = sqrt(hbar / 2 m w).
"""

from __future__ import annotations

import numpy as np

from ..constants import HBAR
from .basis import BasisError


class ParameterError(ValueError):
    """Nonphysical operator parameters."""


def spin1_operators() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin-1 triple (S1, S2, S3) in the S1 eigenbasis ordered (+hbar, 0, -hbar)."""
    s1 = HBAR * np.diag([1.0, 0.0, -1.0]).astype(complex)
    s2 = HBAR / np.sqrt(2) * np.array(
        [[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex
    )
    s3 = HBAR / np.sqrt(2) * np.array(
        [[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex
    )
    return s1, s2, s3


def pauli_operators() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sigma_x, sigma_y, sigma_z) on a two-level subspace ordered (+, -)."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return sx, sy, sz


def rotor_operators(L: int):
    """Planar-rotor operators on |m>, m = -L..L.

    Returns (p_gamma, shift, cos_gamma, sin_gamma) where shift lowers m and
    cos_gamma = (shift + shift†)/2, sin_gamma = (shift - shift†)/2i.
    """
    if L < 1:
        raise BasisError(f"rotor cutoff must be >= 1, got {L}")
    m = np.arange(-L, L + 1)
    p = HBAR * np.diag(m).astype(complex)
    # shift[m-1, m] = 1: lowers m by one unit
    shift = np.diag(np.ones(2 * L), k=1).astype(complex)
    cos_g = (shift + shift.conj().T) / 2
    sin_g = (shift - shift.conj().T) / 2j
    return p, shift, cos_g, sin_g


def ladder(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated (a, a†) pair on a d-dimensional Fock space."""
    if d < 2:
        raise BasisError(f"Fock dimension must be >= 2, got {d}")
    a = np.diag(np.sqrt(np.arange(1, d)), k=1).astype(complex)
    return a, a.conj().T


def fock_operators(d: int, inertia: float, frequency: float):
    """Libration-mode operators (xi, p_xi, H_xi) for mass ``inertia``.

    xi = x0 (a + a†) with x0 = sqrt(hbar/2 I w); H_xi is built directly in the
    number basis so its eigenvalues are exactly hbar w (n + 1/2) despite the
    truncation.
    """
    if d < 2:
        raise BasisError(f"Fock dimension must be >= 2, got {d}")
    if inertia <= 0 or frequency <= 0:
        raise ParameterError("inertia and frequency must be positive")
    a, ad = ladder(d)
    x0 = np.sqrt(HBAR / (2 * inertia * frequency))
    xi = x0 * (a + ad)
    p_xi = 1j * np.sqrt(HBAR * inertia * frequency / 2) * (ad - a)
    n = np.arange(d)
    h_xi = np.diag(HBAR * frequency * (n + 0.5)).astype(complex)
    return xi, p_xi, h_xi


def position_sq(d: int, x_zpf: float) -> np.ndarray:
    """Exact number-basis matrix of x^2 for x = x_zpf (a + a†).

    Unlike squaring the truncated x matrix, the diagonal stays exact up to the
    last basis state.
    """
    n = np.arange(d)
    out = np.diag(2 * n + 1.0).astype(complex)
    off = np.sqrt(n[2:] * (n[2:] - 1.0))
    out += np.diag(off, k=2) + np.diag(off, k=-2)
    return x_zpf**2 * out


def momentum_sq(d: int, p_zpf: float) -> np.ndarray:
    """Exact number-basis matrix of p^2 for p = i p_zpf (a† - a)."""
    n = np.arange(d)
    out = np.diag(2 * n + 1.0).astype(complex)
    off = np.sqrt(n[2:] * (n[2:] - 1.0))
    out -= np.diag(off, k=2) + np.diag(off, k=-2)
    return p_zpf**2 * out


def trig_of_position(d: int, x_zpf: float) -> tuple[np.ndarray, np.ndarray]:
    """(cos x, sin x) as matrix functions of the truncated position operator.

    Used to realize periodic potentials on a harmonic (Fock) basis when the
    wavepacket stays narrow compared to the period.
    """
    a, ad = ladder(d)
    x = x_zpf * (a + ad)
    vals, vecs = np.linalg.eigh(x)
    cos_x = (vecs * np.cos(vals)) @ vecs.conj().T
    sin_x = (vecs * np.sin(vals)) @ vecs.conj().T
    return cos_x, sin_x
