"""Hermitian eigensolving and Krylov short-iterate propagation.

Dense spectra go through LAPACK's tridiagonalization + implicit QL/QR path
(numpy.linalg.eigh), which is deterministic for fixed inputs. Bases too large
to eigensolve are propagated by a Lanczos stepper with full
reorthogonalization (subspace size 30, step error target 1e-9).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sparse

HERMITIAN_RTOL = 1e-12
UNITARY_TOL = 1e-10


class NonHermitianError(ValueError):
    """Input violates the Hermiticity precondition."""


class PropagationError(RuntimeError):
    """Krylov stepper failed to reach its accuracy target."""


def hermiticity_defect(a: np.ndarray) -> float:
    """max |A - A†| relative to max |A| (0 for the zero matrix)."""
    scale = np.abs(a).max()
    if scale == 0:
        return 0.0
    return np.abs(a - a.conj().T).max() / scale


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    return hermiticity_defect(a) <= rtol


def is_unitary(a: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    d = a.shape[0]
    return np.abs(a.conj().T @ a - np.eye(d)).max() <= tol


def hermitian_eig(h: np.ndarray, rtol: float = HERMITIAN_RTOL):
    """Eigendecomposition H = V diag(w) V† with ascending eigenvalues.

    Raises:
        NonHermitianError: if max|H - H†| > rtol * max|H|.
    """
    h = np.asarray(h)
    if hermiticity_defect(h) > rtol:
        raise NonHermitianError(
            f"matrix is not Hermitian within {rtol:g} relative tolerance"
        )
    w, v = np.linalg.eigh(h)
    return w, v


def _as_matvec(h):
    """Uniform matvec callable from ndarray / sparse / callable."""
    if callable(h) and not hasattr(h, "dot"):
        return h
    if sparse.issparse(h):
        hc = h.tocsr()
        return lambda v: hc @ v
    hm = np.asarray(h)
    return lambda v: hm @ v


def _krylov_basis(matvec, v0: np.ndarray, k: int):
    """Lanczos basis with full reorthogonalization.

    Returns (V, alpha, beta, beta_next, m): V is (m, n) orthonormal, the
    projected operator is tridiag(alpha, beta), and beta_next is the residual
    coupling out of the subspace (0 when the subspace is invariant).
    """
    n = v0.shape[0]
    v = np.empty((k, n), dtype=complex)
    v[0] = v0
    alpha = np.zeros(k)
    beta = np.zeros(k)
    beta_next = 0.0
    m = k
    for j in range(k):
        w = matvec(v[j])
        alpha[j] = np.real(np.vdot(v[j], w))
        w = w - alpha[j] * v[j]
        if j > 0:
            w -= beta[j] * v[j - 1]
        coeff = v[: j + 1].conj() @ w
        w -= v[: j + 1].T @ coeff
        b = float(np.linalg.norm(w))
        if j + 1 == k:
            beta_next = b
            break
        if b <= 1e-14 * max(abs(alpha[j]), abs(beta[j]), 1.0):
            m = j + 1
            beta_next = 0.0
            break
        beta[j + 1] = b
        v[j + 1] = w / b
    return v[:m], alpha[:m], beta[1:m], beta_next, m


def lanczos_expm_multiply(
    h,
    psi: np.ndarray,
    total_time: float,
    krylov_dim: int = 30,
    tol: float = 1e-9,
    max_steps: int = 2_000_000,
) -> np.ndarray:
    """Apply exp(-i A t) psi for Hermitian A given in angular-frequency units.

    ``h`` may be a dense array, a sparse matrix, or a matvec callable. Each
    step builds a Krylov subspace once and then picks the largest substep
    whose a-posteriori error estimate fits the proportional error budget
    (floored at tol/1e4 per step), so retries only re-evaluate the small
    tridiagonal exponential.
    """
    matvec = _as_matvec(h)
    n = psi.shape[0]
    k = min(krylov_dim, n)
    psi = np.array(psi, dtype=complex)
    sign = 1.0 if total_time >= 0 else -1.0
    t_total = abs(float(total_time))
    if t_total == 0.0:
        return psi

    t_done = 0.0
    dt_prev = t_total
    steps = 0
    while t_done < t_total:
        steps += 1
        if steps > max_steps:
            raise PropagationError("Lanczos stepper exceeded max step count")
        nrm = float(np.linalg.norm(psi))
        v, alpha, beta, beta_next, m = _krylov_basis(matvec, psi / nrm, k)
        evals, evecs = scipy.linalg.eigh_tridiagonal(alpha, beta)
        w0 = evecs[0]  # overlap of each Ritz vector with the start vector

        dt = min(t_total - t_done, 2 * dt_prev)
        for _ in range(64):
            phi = evecs @ (np.exp(-1j * sign * dt * evals) * w0)
            err = beta_next * abs(phi[m - 1]) * dt if m > 1 else 0.0
            if err <= tol * max(dt / t_total, 1e-4):
                break
            dt /= 2
            if dt < 1e-18 * t_total:
                raise PropagationError("Lanczos substep underflow")
        else:
            raise PropagationError("Lanczos substep search did not converge")
        psi = (v.T @ phi) * nrm
        t_done += dt
        dt_prev = dt
    return psi
