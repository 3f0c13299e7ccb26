"""Composite numerical experiments.

The spin-echo interferometer, spin-superposition stabilization at the avoided
crossing, Barnett alignment sweeps, and cross-model consistency runs. Each
experiment is a pure function of its inputs and returns plain data
(trajectories, sweep tables) ready for serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytics import barnett_alignment, interference_probability
from .constants import HBAR, KB
from .core.basis import BasisSpec, product_state
from .core.evolve import check_edge_weight
from .core.linalg import hermitian_eig
from .core.operators import ladder, pauli_operators, position_sq
from .core.states import (
    StateVector,
    TruncationError,
    coherent_state,
    rotor_gaussian_packet,
    thermal_density,
)
from .model import (
    DerivedScales,
    FieldConfig,
    ParticleGeometry,
    RegimeError,
    TrapConfig,
    build_H_disp,
    build_H_eff,
    build_H_eff_libration,
    build_H_misaligned,
    build_H_rot_libration,
    derive_scales,
)

EDGE_TOL = 1e-6
POPULATION_TOL = 1e-8


@dataclass
class PulseSequence:
    """Instantaneous pulses (time, angle) about a fixed Bloch axis."""

    times: list[float]
    angles: list[float]       # rotation angles in rad (pi/2, pi, ...)
    axis: str = "x"

    def __post_init__(self):
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("pulse times must be nondecreasing")

    @classmethod
    def standard_echo(cls, tau: float) -> "PulseSequence":
        return cls(times=[0.0, tau, 2 * tau], angles=[math.pi / 2, math.pi, math.pi / 2])


@dataclass
class Trajectory:
    """Time series of named observables."""

    times: np.ndarray
    observables: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def check_populations(self, names: list[str], tol: float = POPULATION_TOL):
        total = sum(self.observables[n] for n in names)
        if np.abs(total - 1.0).max() > tol:
            raise RuntimeError(
                f"populations {names} sum to {total.max():.10f}, deviating from 1"
            )
        return self


@dataclass
class SweepTable:
    columns: list[str]
    rows: list[tuple]


@dataclass
class InterferometerRun:
    tau: float
    p_up_numeric: float
    p_up_analytic: float
    trajectory: Trajectory
    warnings: list[str]


# ---------------------------------------------------------------------------
# spin-echo interferometer


def _branch_hamiltonians(scales: DerivedScales, fock_dim: int):
    """Oscillator Hamiltonians of the two echo branches.

    The bright branch is harmonic at the dispersive libration frequency; the
    other branch carries the spin-dependent softening (hbar g/4)(1 + 4g/D) g^2
    that squeezes the state between pulses.
    """
    if scales.delta_big <= 0:
        raise RegimeError("echo protocol needs Delta > 0")
    n = np.arange(fock_dim)
    h_up = np.diag(HBAR * scales.omega_gamma * (n + 0.5)).astype(complex)
    gamma_sq = position_sq(fock_dim, scales.gamma_zpf)
    h_dn = h_up - HBAR * scales.g / 4 * (1 + 4 * scales.g / scales.delta_big) * gamma_sq
    return h_up, h_dn


def run_interferometer(
    scales: DerivedScales,
    tau: float,
    fock_dim: int = 60,
    temperature: float = 0.0,
    t2: float = math.inf,
    samples_per_arm: int = 8,
) -> InterferometerRun:
    """Drive the three-pulse echo numerically and against the closed form.

    The rotor starts in a thermal state of the bright-branch oscillator and
    the spin in the upper level; ideal instantaneous x-axis pulses at 0, tau,
    2 tau close the interferometer. Spin dephasing enters as the
    multiplicative visibility exp(-2 tau / T2) on the coherent contrast. The
    analytic column is the closed-form small-temperature result.
    """
    d = fock_dim
    h_up, h_dn = _branch_hamiltonians(scales, d)
    wu, vu = hermitian_eig(h_up)
    wd, vd = hermitian_eig(h_dn)

    def branch_u(t):
        uu = (vu * np.exp(-1j * wu * t / HBAR)) @ vu.conj().T
        ud = (vd * np.exp(-1j * wd * t / HBAR)) @ vd.conj().T
        u = np.zeros((2 * d, 2 * d), dtype=complex)
        u[:d, :d] = uu
        u[d:, d:] = ud
        return u

    sx, _, _ = pauli_operators()
    eye_f = np.eye(d)

    def pulse(angle):
        half = angle / 2
        r = math.cos(half) * np.eye(2) - 1j * math.sin(half) * sx
        return np.kron(r, eye_f)

    rho_osc = thermal_density(h_up, temperature).entries
    rho = np.kron(np.diag([1.0, 0.0]).astype(complex), rho_osc)

    proj_up = np.kron(np.diag([1.0, 0.0]), eye_f)
    gamma_op = np.kron(np.eye(2), scales.gamma_zpf * sum(ladder(d)))

    times, p_ups, p_dns, mean_g = [], [], [], []

    def record(t, r):
        times.append(t)
        p = float(np.real(np.trace(proj_up @ r)))
        p_ups.append(p)
        p_dns.append(1.0 - p)
        mean_g.append(float(np.real(np.trace(gamma_op @ r))))

    def check_truncation(r):
        # population in the top two Fock layers of either spin branch
        pop = float(np.real(r[d - 2, d - 2] + r[d - 1, d - 1]
                            + r[2 * d - 2, 2 * d - 2] + r[2 * d - 1, 2 * d - 1]))
        if pop > EDGE_TOL:
            raise TruncationError(
                f"echo run leaks {pop:.2e} into the top Fock layers; raise fock_dim"
            )

    record(0.0, rho)
    rho = pulse(math.pi / 2) @ rho @ pulse(math.pi / 2).conj().T
    arm = np.linspace(0, tau, samples_per_arm + 1)[1:] if tau > 0 else []
    for t in arm:
        u = branch_u(t)
        record(t, u @ rho @ u.conj().T)
    u_tau = branch_u(tau)
    rho = u_tau @ rho @ u_tau.conj().T
    check_truncation(rho)
    rho = pulse(math.pi) @ rho @ pulse(math.pi).conj().T
    for t in arm:
        u = branch_u(t)
        record(tau + t, u @ rho @ u.conj().T)
    rho = u_tau @ rho @ u_tau.conj().T
    check_truncation(rho)
    rho = pulse(math.pi / 2) @ rho @ pulse(math.pi / 2).conj().T
    record(2 * tau, rho)

    p_coherent = float(np.real(np.trace(proj_up @ rho)))
    visibility = math.exp(-2 * tau / t2) if math.isfinite(t2) else 1.0
    p_numeric = 0.5 + visibility * (p_coherent - 0.5)

    if tau > 0:
        p_analytic = interference_probability(scales, tau, t2).p_up
    else:
        p_analytic = 1.0

    warnings = []
    var_g = scales.gamma_zpf**2  # ground-state spread; thermal states widen it
    if temperature > 0:
        nbar = 1.0 / math.expm1(HBAR * scales.omega_gamma / (KB * temperature))
        var_g *= 2 * nbar + 1
        warnings.append("analytic visibility assumes the small-temperature limit")
    disp_param = 2 * scales.g**2 * var_g / scales.delta_big**2
    if disp_param > 0.1:
        warnings.append(
            f"dispersive condition violated: 2 g^2 <gamma^2>/Delta^2 = {disp_param:.2e}"
        )

    traj = Trajectory(
        times=np.asarray(times),
        observables={
            "p_up": np.asarray(p_ups),
            "p_down": np.asarray(p_dns),
            "mean_gamma_rad": np.asarray(mean_g),
        },
        meta={"tau_s": tau, "fock_dim": d, "temperature_K": temperature},
    ).check_populations(["p_up", "p_down"])
    return InterferometerRun(
        tau=tau,
        p_up_numeric=p_numeric,
        p_up_analytic=p_analytic,
        trajectory=traj,
        warnings=warnings,
    )


def recurrence_sweep(
    geom: ParticleGeometry,
    trap: TrapConfig,
    fields: FieldConfig,
    env,
    b_grid,
    t2: float,
) -> SweepTable:
    """Protocol duration 2 pi/omega_gamma and recurrence probability vs field.

    One row per magnetic field: the coupling ratio g/D_nv, the full protocol
    duration 2 tau at the rephasing arm tau = pi/omega_gamma, the closed-form
    recurrence probability including the T2 visibility, and whether T2
    exceeds the protocol duration.
    """
    from dataclasses import replace

    rows = []
    for b in np.asarray(b_grid, dtype=float):
        f_here = replace(fields, b_field=b)
        s = derive_scales(geom, trap, f_here, env)
        if not (math.isfinite(s.omega_gamma) and s.delta_big > 0 and s.g != 0):
            continue
        tau = math.pi / s.omega_gamma
        p = interference_probability(s, tau, t2).p_up
        rows.append((b * 1e3, s.g / s.d_nv, 2 * tau, p, float(t2 > 2 * tau)))
    return SweepTable(
        columns=["B_mT", "g_over_Dnv", "duration_s", "recurrence_p_up", "t2_exceeds"],
        rows=rows,
    )


# ---------------------------------------------------------------------------
# stabilization at the avoided crossing


def _split_step_mag(scales: DerivedScales, rotor_L: int, psi0: np.ndarray,
                    times: np.ndarray, substep: float) -> list[np.ndarray]:
    """Strang-split propagation of the magnetic-doublet Hamiltonian.

    Kinetic phases act in the angular-momentum basis, the spin-dependent
    potential acts diagonally on the angle grid (2x2 exponential in closed
    form per grid point). Exactly unitary; splitting error ~ substep^3 per
    step weighted by the state's own energy scales, so the deep potential
    wells far from the packet cost nothing (a Krylov stepper would resolve
    the full +-hbar g spectral range instead).
    """
    n = 2 * rotor_L + 1
    m = np.arange(-rotor_L, rotor_L + 1, dtype=float)
    gamma_grid = 2 * math.pi * np.arange(n) / n
    # potential V = a(gamma)(1 + sigma_x) + b(gamma) sigma_z
    a = HBAR * scales.delta / 2 * np.sin(gamma_grid) ** 2
    b = HBAR * scales.g * np.cos(gamma_grid)

    def potential_half(dt):
        # exp(-i (a 1 + a sx + b sz) dt / hbar), vectorized over the grid
        norm = np.sqrt(a**2 + b**2)
        phase = np.exp(-1j * a * dt / HBAR)
        c = np.cos(norm * dt / HBAR)
        s = np.where(norm > 0, np.sin(norm * dt / HBAR) / np.where(norm > 0, norm, 1.0), dt / HBAR)
        u00 = phase * (c - 1j * s * b)
        u11 = phase * (c + 1j * s * b)
        u01 = phase * (-1j * s * a)
        return u00, u01, u11

    def to_angle(c):
        # c indexed m = -L..L; angle amplitudes on gamma_grid
        return np.fft.ifft(np.fft.ifftshift(c, axes=-1), axis=-1) * math.sqrt(n)

    def to_momentum(f):
        return np.fft.fftshift(np.fft.fft(f, axis=-1), axes=-1) / math.sqrt(n)

    out = []
    psi = psi0.reshape(2, n).astype(complex)
    t_prev = 0.0
    for t_out in times:
        span = t_out - t_prev
        if span > 0:
            steps = max(1, int(math.ceil(span / substep)))
            dt = span / steps
            kin = np.exp(-1j * (HBAR * m**2 / (2 * scales.inertia_eff)) * dt)
            u00, u01, u11 = potential_half(dt / 2)
            f = to_angle(psi)
            for _ in range(steps):
                g0 = u00 * f[0] + u01 * f[1]
                g1 = u01 * f[0] + u11 * f[1]
                c = to_momentum(np.stack([g0, g1]))
                c *= kin
                f = to_angle(c)
                g0 = u00 * f[0] + u01 * f[1]
                g1 = u01 * f[0] + u11 * f[1]
                f = np.stack([g0, g1])
            psi = to_momentum(f)
            t_prev = t_out
        out.append(psi.reshape(-1).copy())
    return out


def _next_odd_fft_len(n: int) -> int:
    """Smallest odd integer >= n whose prime factors are all <= 11."""

    def smooth(x):
        for p in (2, 3, 5, 7, 11):
            while x % p == 0:
                x //= p
        return x == 1

    if n % 2 == 0:
        n += 1
    while not smooth(n):
        n += 2
    return n


def escape_momentum(scales: DerivedScales) -> float:
    """Angular momentum (hbar units) gained by rolling from the crossing to a
    potential well: sqrt(2 I_eff |g| / hbar)."""
    return math.sqrt(2 * scales.inertia_eff * abs(scales.g) / HBAR)


def simulate_stabilization(
    scales: DerivedScales,
    rotor_L: int,
    packet_width: float,
    spin_init: str = "+x",
    t_max: float | None = None,
    n_out: int = 41,
    substep: float | None = None,
    edge_tol: float = EDGE_TOL,
) -> Trajectory:
    """Evolve a packet at the avoided crossing in a transverse spin state.

    The packet (Gaussian of ``packet_width``, centered at gamma = pi/2) starts
    in the sigma_x = +1 or -1 eigenstate; the recorded transition probability
    measures leakage out of that spin state. ``t_max`` defaults to ten trap
    periods 2 pi / omega_eta.

    Propagation is split-step Fourier (kinetic phases in the momentum basis,
    closed-form 2x2 potential kicks on the angle grid). The requested cutoff
    is rounded up to an FFT-friendly odd dimension; escaping runs must size
    ``rotor_L`` beyond :func:`escape_momentum` or the rolled-off population
    reflects from the momentum boundary (watch ``edge_weight``).
    """
    if spin_init not in ("+x", "-x"):
        raise ValueError("spin_init must be '+x' or '-x'")
    if t_max is None:
        if not math.isfinite(scales.omega_eta):
            raise RegimeError("default time window needs a finite omega_eta")
        t_max = 10 * 2 * math.pi / scales.omega_eta
    if substep is None:
        # calibrated against step-halving at the operating points of interest;
        # the g = 0 limit is potential-free and needs no subdivision
        if scales.g != 0 and math.isfinite(scales.omega_eta):
            substep = (2 * math.pi / scales.omega_eta) / 1000
        else:
            substep = t_max / max(n_out, 1) if t_max > 0 else 1.0

    n = _next_odd_fft_len(2 * rotor_L + 1)
    L = (n - 1) // 2
    pkt = rotor_gaussian_packet(L, math.pi / 2, packet_width)
    sign = 1.0 if spin_init == "+x" else -1.0
    spin = np.array([1.0, sign]) / math.sqrt(2)
    psi0 = product_state([spin, pkt.amplitudes])

    times = np.linspace(0.0, t_max, n_out)
    states = _split_step_mag(scales, L, psi0, times, substep)

    basis = BasisSpec(spin_dim=2, rotor_L=L)
    grid = 2 * math.pi * np.arange(n) / n
    cos_grid = np.cos(grid)
    trans, mean_cos, edges = [], [], []
    for amps_flat in states:
        amps = amps_flat.reshape(2, n)
        proj_amp = (amps[0] + sign * amps[1]) / math.sqrt(2)
        trans.append(1.0 - float(np.vdot(proj_amp, proj_amp).real))
        f = np.fft.ifft(np.fft.ifftshift(amps, axes=-1), axis=-1) * math.sqrt(n)
        mean_cos.append(float(sum(np.real(np.vdot(r, cos_grid * r)) for r in f)))
        edges.append(
            check_edge_weight(StateVector(amps_flat), basis, tol=edge_tol)
        )

    traj = Trajectory(
        times=times,
        observables={
            "transition_prob": np.asarray(trans),
            "mean_cos_gamma": np.asarray(mean_cos),
            "edge_weight": np.asarray(edges),
            "omega_eta_t": scales.omega_eta * times
            if math.isfinite(scales.omega_eta)
            else np.zeros_like(times),
        },
        meta={
            "spin_init": spin_init,
            "rotor_L": L,
            "packet_width_rad": packet_width,
            "substep_s": substep,
            "omega_gamma_t_scale": scales.omega_gamma,
        },
    )
    return traj


# ---------------------------------------------------------------------------
# Barnett alignment sweep


def alignment_sweep(
    geom: ParticleGeometry,
    trap: TrapConfig,
    fields: FieldConfig,
    b_grid,
    temperatures,
    m: int,
) -> SweepTable:
    """Steady-state <cos gamma> and variance over a field grid.

    The compensation field B = omega/gamma0 is inserted into the grid; its
    row is built from the defining condition (zero coupling), so the mean
    crosses zero there exactly.
    """
    if m not in (-1, 0, 1):
        raise ValueError("spin projection m must be -1, 0, or +1")
    b0 = fields.omega / fields.gamma0
    bs = np.asarray(sorted(set(np.asarray(b_grid, dtype=float)) | {b0}))
    rows = []
    for t_k in np.asarray(temperatures, dtype=float):
        for b in bs:
            if b == b0:
                kappa = 0.0
            elif t_k > 0:
                kappa = HBAR * (fields.omega - fields.gamma0 * b) / (KB * t_k)
            else:
                kappa = math.copysign(math.inf, fields.omega - fields.gamma0 * b)
            mean, var = barnett_alignment(kappa, m)
            rows.append((b * 1e3, t_k, mean, var))
    return SweepTable(
        columns=["B_mT", "T_K", "mean_cos_gamma", "variance"],
        rows=rows,
    )


# ---------------------------------------------------------------------------
# cross-model consistency


@dataclass
class CrosscheckResult:
    times: np.ndarray
    reference: Trajectory
    candidate: Trajectory
    label_reference: str
    label_candidate: str
    max_deviation: float          # of mean_gamma_rad, absolute
    normalized_deviation: float   # relative to the reference peak-to-peak

    @property
    def pair(self) -> str:
        return f"{self.label_reference} vs {self.label_candidate}"


def _spectral_series(h, psi0, ops: dict[str, np.ndarray], times) -> dict[str, np.ndarray]:
    w, v = np.linalg.eigh(h)
    coeff = v.conj().T @ psi0
    out = {k: [] for k in ops}
    for t in times:
        psi = v @ (np.exp(-1j * w * t / HBAR) * coeff)
        for k, op in ops.items():
            out[k].append(float(np.real(np.vdot(psi, op @ psi))))
    return {k: np.asarray(s) for k, s in out.items()}


def _gamma_observable_rotor(rotor_L: int) -> np.ndarray:
    """Angle observable near 0 on the rotor basis: -<(shift - shift†)/2i>.

    The frozen lowering convention represents sin(gamma) with a flipped sign,
    so the sign is folded in here once.
    """
    n = 2 * rotor_L + 1
    shift = np.diag(np.ones(n - 1), k=1).astype(complex)
    return -(shift - shift.conj().T) / 2j


def model_crosscheck(
    scales: DerivedScales,
    fields: FieldConfig,
    pair: str,
    *,
    fock_dim_gamma: int = 40,
    fock_dim_xi: int = 40,
    alpha_gamma: float = 0.1,
    alpha_xi: float = 0.0,
    eps_nv: float = 0.01,
    rotor_L: int | None = None,
    periods: float = 2.0,
    n_out: int = 81,
) -> CrosscheckResult:
    """Evolve the same initial packet under two model tiers and compare.

    Pairs:
      * ``gyro-vs-adiabatic``: explicit out-of-plane libration against the
        adiabatically reduced model (both with the in-plane angle on a
        harmonic basis; the eliminated mode starts in its ground state unless
        ``alpha_xi`` is set, since a displaced eliminated mode adds a
        gyroscopic ripple on <gamma> that no reduced model can carry).
      * ``adiabatic-vs-dispersive``: spin-1 adiabatic model against the
        two-level dispersive model. With ``rotor_L`` set, the adiabatic side
        runs on the periodic rotor basis (dense; keep 3(2L+1) modest).
      * ``zeeman-term``: adiabatic model with and without the magnetic-field
        induced spin-rotation term.
      * ``nv-misalignment``: adiabatic model against the tilted-NV-axis
        perturbation with ``eps_nv``.
      * ``identity``: the adiabatic model against itself (zero deviation).

    The deviation metric is max |<gamma>_a - <gamma>_b| normalized by the
    reference curve's peak-to-peak amplitude.
    """
    if not (math.isfinite(scales.omega_gamma) and scales.omega_gamma > 0):
        raise RegimeError("cross-checks need a defined libration frequency")
    times = np.linspace(0, periods * 2 * math.pi / scales.omega_gamma, n_out)
    d = fock_dim_gamma
    spin_dn3 = np.array([0.0, 0.0, 1.0])  # |S1 = -hbar>
    spin_sup3 = np.array([0.0, 1.0, 1.0]) / math.sqrt(2)  # (|0> + |-hbar>)/sqrt2
    osc = coherent_state(d, alpha_gamma).amplitudes

    def eff_side(include_zeeman=False, spin=spin_dn3):
        h, gam = build_H_eff_libration(scales, fields, d, include_zeeman=include_zeeman)
        pops = {
            "pop_up": np.kron(np.diag([0.0, 0.0, 1.0]), np.eye(d)),
            "pop_down": np.kron(np.diag([0.0, 1.0, 0.0]), np.eye(d)),
        }
        psi0 = product_state([spin, osc])
        series = _spectral_series(h, psi0, {"mean_gamma_rad": gam, **pops}, times)
        return Trajectory(times=times, observables=series)

    if pair == "gyro-vs-adiabatic":
        h_rot, gam_rot = build_H_rot_libration(scales, fields, d, fock_dim_xi)
        xi_state = coherent_state(fock_dim_xi, alpha_xi).amplitudes
        psi0 = product_state([spin_dn3, osc, xi_state])
        series = _spectral_series(h_rot, psi0, {"mean_gamma_rad": gam_rot}, times)
        ref = Trajectory(times=times, observables=series)
        cand = eff_side()
        labels = ("gyroscopic", "adiabatic")
    elif pair == "adiabatic-vs-dispersive":
        if rotor_L is not None:
            basis = BasisSpec(spin_dim=3, rotor_L=rotor_L)
            if basis.dim > 4000:
                raise RegimeError(
                    "rotor-basis cross-check limited to 3(2L+1) <= 4000; "
                    "use the harmonic representation or rescale the spin sector"
                )
            width = scales.gamma_zpf
            pkt = rotor_gaussian_packet(rotor_L, 2 * width * alpha_gamma, width)
            h = build_H_eff(scales, fields, basis)
            gam = np.kron(np.eye(3), _gamma_observable_rotor(rotor_L))
            psi0 = product_state([spin_dn3, pkt.amplitudes])
            series = _spectral_series(h, psi0, {"mean_gamma_rad": gam}, times)
            ref = Trajectory(times=times, observables=series)
        else:
            ref = eff_side()
        h_d = build_H_disp(scales, d)
        gam_d = np.kron(np.eye(2), scales.gamma_zpf * sum(ladder(d)))
        psi0d = product_state([np.array([1.0, 0.0]), osc])  # bright branch
        series_d = _spectral_series(h_d, psi0d, {"mean_gamma_rad": gam_d}, times)
        cand = Trajectory(times=times, observables=series_d)
        labels = ("adiabatic", "dispersive")
    elif pair == "zeeman-term":
        ref = eff_side(include_zeeman=True, spin=spin_sup3)
        cand = eff_side(include_zeeman=False, spin=spin_sup3)
        labels = ("with-zeeman-term", "without-zeeman-term")
    elif pair == "nv-misalignment":
        ref = eff_side(spin=spin_sup3)
        h_mis = build_H_misaligned(scales, fields, eps_nv, fock_dim=d)
        _, gam = build_H_eff_libration(scales, fields, d)
        psi0 = product_state([spin_sup3, osc])
        series = _spectral_series(h_mis, psi0, {"mean_gamma_rad": gam}, times)
        cand = Trajectory(times=times, observables=series)
        labels = ("aligned", "misaligned")
    elif pair == "identity":
        ref = eff_side()
        cand = eff_side()
        labels = ("adiabatic", "adiabatic")
    else:
        raise ValueError(f"unknown cross-check pair {pair!r}")

    a = ref.observables["mean_gamma_rad"]
    b = cand.observables["mean_gamma_rad"]
    dev = float(np.abs(a - b).max())
    ptp = float(a.max() - a.min())
    return CrosscheckResult(
        times=times,
        reference=ref,
        candidate=cand,
        label_reference=labels[0],
        label_candidate=labels[1],
        max_deviation=dev,
        normalized_deviation=dev / ptp if ptp > 0 else 0.0,
    )
