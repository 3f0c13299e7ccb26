"""Closed-form observables, validity conditions, and decoherence rates.

Everything here is analytic (special functions and algebra); the test suite
pits each expression against an independent brute-force oracle (quadrature,
Fock-space matrix elements, finite differences).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.integrate import quad

from .constants import C_LIGHT, EPSILON0, GAMMA0_DEFAULT, HBAR, KB
from .model import (
    DerivedScales,
    Environment,
    FieldConfig,
    ParticleGeometry,
    RegimeError,
    inertia_from_geometry,
)

BESSEL_RANGE = 700.0


class RangeError(ValueError):
    """Argument outside the guaranteed evaluation range."""


# ---------------------------------------------------------------------------
# special functions


def bessel_i(order: int, x: float) -> float:
    """Modified Bessel function I_order(x) for order in {0, 1, 2}.

    Evaluated through the exponentially scaled form, so intermediate
    overflow cannot occur below the |x| <= 700 guard.
    """
    if order not in (0, 1, 2):
        raise RangeError(f"order must be 0, 1, or 2, got {order}")
    if abs(x) > BESSEL_RANGE:
        raise RangeError(f"|x| <= {BESSEL_RANGE:g} required, got {x!r}")
    return float(special.ive(order, x) * math.exp(abs(x)))


def bessel_ratio(order: int, x: float) -> float:
    """I_order(x) / I_0(x), overflow-safe for any finite x."""
    if order not in (1, 2):
        raise RangeError("ratio defined for orders 1 and 2")
    if math.isinf(x):
        return math.copysign(1.0, x) if order == 1 else 1.0
    return float(special.ive(order, x) / special.ive(0, x))


def laguerre(n: int, x: float) -> float:
    """Laguerre polynomial L_n(x) by the stable three-term recurrence."""
    if n < 0:
        raise RangeError("n must be >= 0")
    if n == 0:
        return 1.0
    lm2, lm1 = 1.0, 1.0 - x
    for k in range(2, n + 1):
        lm2, lm1 = lm1, ((2 * k - 1 - x) * lm1 - (k - 1) * lm2) / k
    return lm1


# ---------------------------------------------------------------------------
# Barnett alignment


def barnett_alignment(kappa: float, m: int) -> tuple[float, float]:
    """Steady-state (<cos g>, var cos g) of the Boltzmann-distributed rotor.

    mean = -I1(kappa m)/I0(kappa m); the variance follows from the second
    derivative of the partition function and is bounded by 1/2.
    """
    if m not in (-1, 0, 1):
        raise RangeError("spin projection m must be -1, 0, or +1")
    x = kappa * m
    if m == 0 or x == 0:
        return 0.0, 0.5
    r1 = bessel_ratio(1, x)
    r2 = bessel_ratio(2, x)
    mean = -r1
    variance = 0.5 + r2 / 2 - r1**2
    return mean, variance


# ---------------------------------------------------------------------------
# potential surfaces at the avoided crossing


@dataclass(frozen=True)
class SurfacePoint:
    gamma: float
    omega_plus: float
    omega_minus: float


def potential_surfaces(delta: float, g: float, gamma: float) -> SurfacePoint:
    """Adiabatic surfaces O+- = d sin^2 g +- sqrt(d^2 sin^4 g + 4 g^2 cos^2 g)."""
    s2 = math.sin(gamma) ** 2
    root = math.sqrt((delta * s2) ** 2 + 4 * g**2 * math.cos(gamma) ** 2)
    return SurfacePoint(gamma, delta * s2 + root, delta * s2 - root)


def crossing_curvature(delta: float, g: float) -> float:
    """Curvature (1/2) d^2 [O+/2] / dg^2 of the upper energy surface at g = pi/2.

    Finite-differenced on the exact surfaces; tends to g^2/delta for
    delta << g (relative correction delta^2/g^2).
    """
    if delta == 0:
        raise RegimeError("curvature undefined at delta = 0")
    # stay well inside the harmonic region eta << delta / 2g
    h = 1e-3 * min(abs(delta) / (2 * abs(g)), 1.0) if g != 0 else 1e-4
    vp = [potential_surfaces(delta, g, math.pi / 2 + e).omega_plus / 2 for e in (-h, 0.0, h)]
    return (vp[0] - 2 * vp[1] + vp[2]) / (2 * h**2)


def stability_check(scales: DerivedScales) -> dict:
    """Trapping figures of merit at the avoided crossing.

    Returns sigma_gamma, the ratio |g sigma_gamma / delta| (stable when
    < 0.1), and the quartic smallness parameter (hbar g^2/8 I_eff |d|^3)^1/4.
    """
    if scales.g == 0 or scales.delta == 0:
        return {
            "sigma_gamma": math.nan,
            "ratio": math.nan,
            "small_param": math.nan,
            "stable": False,
            "defined": False,
        }
    small = (HBAR * scales.g**2 / (8 * scales.inertia_eff * abs(scales.delta) ** 3)) ** 0.25
    ratio = abs(scales.g * scales.sigma_gamma / scales.delta)
    return {
        "sigma_gamma": scales.sigma_gamma,
        "ratio": ratio,
        "small_param": small,
        "stable": ratio < 0.1,
        "defined": True,
    }


# ---------------------------------------------------------------------------
# libration overlap integrals


def displaced_diagonal_overlap(n: int, alpha: float) -> float:
    """<n| D |n> for a real position displacement with ladder amplitude alpha."""
    if n < 0:
        raise RangeError("n must be >= 0")
    return math.exp(-(alpha**2) / 2) * laguerre(n, alpha**2)


def overlap_fn(n: int, displacement: float, inertia: float, frequency: float) -> float:
    """Diagonal overlap of the libration state displaced by ``displacement``.

    Closed form exp(-a^2/2) L_n(a^2) with a = displacement / 2 x0 and
    x0 = sqrt(hbar / 2 I w).
    """
    x0 = math.sqrt(HBAR / (2 * inertia * frequency))
    return displaced_diagonal_overlap(n, displacement / (2 * x0))


def overlap_gn(n: int, displacement: float, inertia: float, frequency: float) -> float:
    """Same closed form; kept separate because the physical displacement differs."""
    return overlap_fn(n, displacement, inertia, frequency)


def coupling_displacement(scales: DerivedScales) -> float:
    """Out-of-plane shift hbar g / I w^2 felt by the spin-rotation coupling."""
    return HBAR * scales.g / (scales.inertia * scales.omega**2)


def zeeman_displacement(scales: DerivedScales) -> float:
    """Out-of-plane shift 2 hbar gamma0 B / I w^2 of the double spin flip."""
    gamma0_b = scales.omega - scales.g
    return 2 * HBAR * gamma0_b / (scales.inertia * scales.omega**2)


# ---------------------------------------------------------------------------
# spin-echo interference


@dataclass(frozen=True)
class InterferenceResult:
    tau: float
    lam: complex
    p_up: float
    p_down: float


def _zeta(scales: DerivedScales, tau: float) -> float:
    return math.sqrt(HBAR) * scales.g * tau / math.sqrt(scales.inertia_eff * scales.delta_big)


def lambda_tau(scales: DerivedScales, tau: float) -> complex:
    """Complex echo visibility: 1/lam = 1 + (1 - e^{2 i w t}) sinh^2 z."""
    if scales.delta_big <= 0 or scales.g == 0:
        raise RegimeError("echo visibility needs Delta > 0 and g != 0")
    z = _zeta(scales, tau)
    inv = 1 + (1 - np.exp(2j * scales.omega_gamma * tau)) * math.sinh(z) ** 2
    return complex(1.0 / inv)


def interference_probability(
    scales: DerivedScales, tau: float, t2: float = math.inf
) -> InterferenceResult:
    """Spin populations after the closed echo sequence of duration 2 tau.

    P = 1/2 +- e^{-2 tau/T2} sqrt|lam| cos(arg lam / 2) / 2; the pair sums to
    one by construction.
    """
    lam = lambda_tau(scales, tau)
    visibility = math.exp(-2 * tau / t2) if math.isfinite(t2) else 1.0
    contrast = visibility * math.sqrt(abs(lam)) * math.cos(np.angle(lam) / 2) / 2
    return InterferenceResult(tau=tau, lam=lam, p_up=0.5 + contrast, p_down=0.5 - contrast)


def i_gamma_general(scales: DerivedScales, tau: float) -> float:
    """Echo contrast 2 Re[(1 + C (1 - e^{2 i w t}) sinh^2 z)^{-1/2}] with the
    finite-detuning coefficient C = (D + 4g)^2 / 8g(D + 2g) (-> 1 as D/g -> 0)."""
    if scales.delta_big <= 0 or scales.g == 0:
        raise RegimeError("echo contrast needs Delta > 0 and g != 0")
    z = _zeta(scales, tau)
    c = (scales.delta_big + 4 * scales.g) ** 2 / (
        8 * scales.g * (scales.delta_big + 2 * scales.g)
    )
    inner = 1 + c * (1 - np.exp(2j * scales.omega_gamma * tau)) * math.sinh(z) ** 2
    return float(2 * np.real(inner ** (-0.5)))


def echo_coefficient(scales: DerivedScales) -> float:
    """(Delta + 4g)^2 / 8g(Delta + 2g); equals 1 in the Delta/g -> 0 limit."""
    return (scales.delta_big + 4 * scales.g) ** 2 / (
        8 * scales.g * (scales.delta_big + 2 * scales.g)
    )


# ---------------------------------------------------------------------------
# adiabatic-elimination validity map


@dataclass(frozen=True)
class ValidityPoint:
    omega: float
    l3: float
    ratio_p: float     # |p_gamma / I omega|
    ratio_b: float     # |hbar gamma0 B / I omega^2|
    valid: bool

    THRESHOLD = 0.01


def adiabatic_validity(
    geom: ParticleGeometry,
    fields: FieldConfig,
    env: Environment,
    omega_grid,
    l3_grid,
    classical_occupation: bool = False,
) -> list[ValidityPoint]:
    """Map the region where the out-of-plane mode separates adiabatically.

    Both ratios must stay below 0.01. The geometry is rescaled along the grid
    keeping the aspect ratios of ``geom``; the libration occupation n_gamma is
    Bose-Einstein at env.temperature (or classical kT/hbar w behind the flag).
    Points with undefined omega_gamma are marked invalid.
    """
    from dataclasses import replace as _replace

    aspect1 = geom.l1 / geom.l3
    aspect2 = geom.l2 / geom.l3
    out = []
    for l3 in np.asarray(l3_grid, dtype=float):
        g_here = ParticleGeometry(
            l1=aspect1 * l3, l2=aspect2 * l3, l3=l3,
            density=geom.density, surface_charge=geom.surface_charge,
        )
        _, inertia, inertia3 = inertia_from_geometry(g_here)
        inertia_eff = inertia * inertia3 / (inertia - inertia3)
        for omega in np.asarray(omega_grid, dtype=float):
            f_here = _replace(fields, omega=omega)
            g_coupling = omega - f_here.gamma0 * f_here.b_field
            delta_big = f_here.d_nv - g_coupling
            ratio_b = abs(HBAR * f_here.gamma0 * f_here.b_field / (inertia * omega**2))
            arg = HBAR * g_coupling * (1 + g_coupling / delta_big) / inertia_eff if delta_big != 0 else -1.0
            if arg <= 0:
                out.append(ValidityPoint(omega, l3, math.inf, ratio_b, False))
                continue
            omega_gamma = math.sqrt(arg)
            if env.temperature == 0:
                n_gamma = 0.0
            elif classical_occupation:
                n_gamma = KB * env.temperature / (HBAR * omega_gamma)
            else:
                x = HBAR * omega_gamma / (KB * env.temperature)
                n_gamma = 1.0 / math.expm1(x)
            p_gamma = math.sqrt(HBAR * n_gamma * inertia3 * omega_gamma)
            ratio_p = abs(p_gamma / (inertia * omega))
            valid = ratio_p < ValidityPoint.THRESHOLD and ratio_b < ValidityPoint.THRESHOLD
            out.append(ValidityPoint(omega, l3, ratio_p, ratio_b, valid))
    return out


# ---------------------------------------------------------------------------
# imperfection estimates


def misalignment_angle(eps_nv: float, d_nv: float, delta_big: float) -> float:
    """Dressing angle of the echo doublet under an NV-axis tilt."""
    if delta_big == 0:
        raise RegimeError("mixing angle undefined at zero detuning")
    return 0.5 * math.atan(math.sqrt(2) * eps_nv * d_nv / abs(delta_big))


def asymmetry_bound(scales: DerivedScales) -> float:
    """Transverse-inertia asymmetry must stay far below hbar|g| / I w^2."""
    return HBAR * abs(scales.g) / (scales.inertia * scales.omega**2)


def doppler_drift_average(trap_eps: float, omega: float, xi: float, n_rev: int) -> float:
    """Relative secular drift of the rotation rate under trap asymmetry.

    Integrates the first-order torque eps^2 sin 4a - 3 eps xi sin 2a over
    ``n_rev`` full revolutions (a = w t), normalized to its instantaneous
    amplitude; averages to zero over complete revolutions.
    """
    if n_rev < 1:
        raise RangeError("need at least one revolution")

    def torque(a):
        return trap_eps**2 * math.sin(4 * a) - 3 * trap_eps * xi * math.sin(2 * a)

    total, _ = quad(torque, 0.0, 2 * math.pi * n_rev, limit=200)
    mean = total / (2 * math.pi * n_rev)
    amplitude = trap_eps**2 + 3 * abs(trap_eps * xi)
    return mean / amplitude if amplitude > 0 else 0.0


# ---------------------------------------------------------------------------
# decoherence rates


@dataclass(frozen=True)
class DecoherenceReport:
    rate_field_noise: float     # Gamma_B (1/s)
    rate_collisions: float      # Gamma_coll (1/s)
    rate_photon: float          # Gamma_ph (1/s)
    loc_blackbody: float        # F_bb(g, g') at the requested separation (1/s)
    loc_field_noise: float      # magnetic localization at the same separation (1/s)


def decoherence_report(
    geom: ParticleGeometry,
    env: Environment,
    gamma_sep: float,
    gamma0: float = GAMMA0_DEFAULT,
) -> DecoherenceReport:
    """Rates of the environmental channels at an angular separation gamma_sep.

    Magnetic white noise dephases at (gamma0 A_fl)^2 with localization
    (cos g - cos g')^2 / 2 (evaluated at the most sensitive orientation,
    g + g' = pi); gas collisions at l1 (l1 + l3) P sqrt(2 pi / m kT);
    blackbody at the T^4 emission rate with 1 - cos separation. Localization
    entries vanish at zero separation.
    """
    rate_b = (gamma0 * env.field_noise) ** 2
    loc_mag = 2 * rate_b * math.sin(gamma_sep / 2) ** 2

    rate_coll = (
        geom.l1 * (geom.l1 + geom.l3) * env.gas_pressure
        * math.sqrt(2 * math.pi / (env.gas_mass * KB * env.temperature))
        if env.temperature > 0 else 0.0
    )

    rate_ph = (
        2 * math.pi**2 * env.polarizability_im * KB**4 * env.temperature**4
        / (45 * C_LIGHT**3 * HBAR**4 * EPSILON0)
    )
    loc_bb = rate_ph * (1 - math.cos(gamma_sep))

    return DecoherenceReport(
        rate_field_noise=rate_b,
        rate_collisions=rate_coll,
        rate_photon=rate_ph,
        loc_blackbody=loc_bb,
        loc_field_noise=loc_mag,
    )
