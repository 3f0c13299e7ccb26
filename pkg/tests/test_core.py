import numpy as np
import pytest
import scipy.sparse as sparse
from hypothesis import given, settings
from hypothesis import strategies as st

from gyrospin.constants import HBAR, KB
from gyrospin.core import (
    BasisError,
    BasisSpec,
    NonHermitianError,
    StateVector,
    TruncationError,
    coherent_state,
    edge_weight,
    embed,
    evolve,
    expectation,
    fock_operators,
    ground_state,
    hermitian_eig,
    lanczos_expm_multiply,
    momentum_sq,
    position_sq,
    product_state,
    rotor_gaussian_packet,
    rotor_operators,
    spin1_operators,
    tensor,
    thermal_density,
)


def comm(a, b):
    return a @ b - b @ a


class TestSpinOperators:
    def test_s1_diagonal(self):
        s1, _, _ = spin1_operators()
        assert np.allclose(s1, HBAR * np.diag([1, 0, -1]), atol=0)

    def test_commutators_exact(self):
        s1, s2, s3 = spin1_operators()
        scale = HBAR**2
        assert np.abs(comm(s1, s2) - 1j * HBAR * s3).max() <= 1e-15 * scale
        assert np.abs(comm(s2, s3) - 1j * HBAR * s1).max() <= 1e-15 * scale
        assert np.abs(comm(s3, s1) - 1j * HBAR * s2).max() <= 1e-15 * scale

    def test_casimir(self):
        s1, s2, s3 = spin1_operators()
        casimir = s1 @ s1 + s2 @ s2 + s3 @ s3
        assert np.abs(casimir - 2 * HBAR**2 * np.eye(3)).max() <= 1e-15 * HBAR**2


class TestRotorOperators:
    def test_momentum_diagonal_L1(self):
        p, _, _, _ = rotor_operators(1)
        assert np.allclose(p, HBAR * np.diag([-1, 0, 1]), atol=0)

    def test_shift_commutator_exact(self):
        # exact up to one ulp of the hbar*m products
        p, shift, _, _ = rotor_operators(4)
        assert np.abs(comm(p, shift) + HBAR * shift).max() <= 1e-15 * HBAR

    def test_trig_identity_on_interior(self):
        # boundary rows are corrupted by the momentum truncation
        L = 5
        _, _, cos_g, sin_g = rotor_operators(L)
        ident = cos_g @ cos_g + sin_g @ sin_g
        interior = slice(1, 2 * L)
        assert np.abs(ident[interior, interior] - np.eye(2 * L - 1)).max() < 1e-15

    def test_rejects_bad_cutoff(self):
        with pytest.raises(BasisError):
            rotor_operators(0)


class TestFockOperators:
    INERTIA = 9.2e-32
    FREQ = 2 * np.pi * 1e6

    def test_canonical_pair_on_interior(self):
        d = 8
        xi, p_xi, _ = fock_operators(d, self.INERTIA, self.FREQ)
        c = comm(xi, p_xi)
        sub = slice(0, d - 1)
        assert np.abs(c[sub, sub] - 1j * HBAR * np.eye(d - 1)).max() <= 1e-12 * HBAR

    def test_ground_energy(self):
        _, _, h = fock_operators(6, self.INERTIA, self.FREQ)
        assert h[0, 0].real == pytest.approx(HBAR * self.FREQ / 2, rel=1e-15)

    def test_zero_point_spread(self):
        d = 10
        xi, _, _ = fock_operators(d, self.INERTIA, self.FREQ)
        x0_sq = HBAR / (2 * self.INERTIA * self.FREQ)
        vac = np.zeros(d)
        vac[0] = 1.0
        assert (vac @ (xi @ xi) @ vac).real == pytest.approx(x0_sq, rel=1e-12)

    def test_exact_quadrature_matrices(self):
        d = 7
        xi, p_xi, _ = fock_operators(d, self.INERTIA, self.FREQ)
        x0 = np.sqrt(HBAR / (2 * self.INERTIA * self.FREQ))
        p0 = np.sqrt(HBAR * self.INERTIA * self.FREQ / 2)
        # interiors agree with the squared truncated operators
        s = slice(0, d - 2)
        assert np.allclose(position_sq(d, x0)[s, s], (xi @ xi)[s, s])
        assert np.allclose(momentum_sq(d, p0)[s, s], (p_xi @ p_xi)[s, s])
        # top diagonal entry keeps the exact value 2n+1
        assert position_sq(d, x0)[d - 1, d - 1].real == pytest.approx(
            x0**2 * (2 * (d - 1) + 1)
        )

    def test_rejects_bad_parameters(self):
        from gyrospin.core import ParameterError

        with pytest.raises(ParameterError):
            fock_operators(4, -1.0, self.FREQ)
        with pytest.raises(ParameterError):
            fock_operators(4, self.INERTIA, 0.0)


class TestTensorEmbed:
    def test_identity_product(self):
        assert np.allclose(tensor(np.eye(3), np.eye(5)), np.eye(15))

    def test_hand_kronecker(self):
        got = tensor(np.diag([1.0, 2.0]), np.diag([3.0, 4.0]))
        assert np.allclose(got, np.diag([3.0, 4.0, 6.0, 8.0]))

    def test_disjoint_factors_commute(self):
        basis = BasisSpec(spin_dim=3, rotor_L=2)
        s1, _, _ = spin1_operators()
        p, _, _, _ = rotor_operators(2)
        a = embed(s1, "spin", basis)
        b = embed(p, "rotor", basis)
        assert np.abs(comm(a, b)).max() == 0.0

    def test_embed_rejects_mismatch(self):
        basis = BasisSpec(spin_dim=3, rotor_L=2)
        with pytest.raises(BasisError):
            embed(np.eye(4), "rotor", basis)

    @given(st.integers(1, 3), st.integers(2, 5))
    @settings(max_examples=20, deadline=None)
    def test_embed_dimensions(self, L, d):
        basis = BasisSpec(spin_dim=3, rotor_L=L, fock_dim=d)
        s1, _, _ = spin1_operators()
        assert embed(s1, "spin", basis).shape == (basis.dim, basis.dim)


class TestHermitianEig:
    def test_sorted_diag(self):
        w, _ = hermitian_eig(np.diag([2.0, 1.0]))
        assert np.allclose(w, [1.0, 2.0])

    def test_sigma_x(self):
        w, _ = hermitian_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(w, [-1.0, 1.0])

    def test_reconstruction_residual(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        h = (a + a.conj().T) / 2
        w, v = hermitian_eig(h)
        resid = np.abs(h @ v - v * w).max()
        assert resid <= 1e-9 * np.abs(w).max()
        assert np.abs(v.conj().T @ v - np.eye(6)).max() <= 1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(NonHermitianError):
            hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestEvolve:
    def test_time_zero_identity(self):
        h = HBAR * np.diag([0.0, 1.0e6])
        psi0 = StateVector(np.array([1.0, 0.0]))
        (out,) = evolve(h, psi0, [0.0])
        assert np.allclose(out.amplitudes, psi0.amplitudes)

    def test_global_phase_only(self):
        e = 1e-25
        h = e * np.eye(3)
        psi0 = StateVector(np.array([0.6, 0.8, 0.0]))
        (out,) = evolve(h, psi0, [1e-6])
        expect = np.exp(-1j * e * 1e-6 / HBAR) * psi0.amplitudes
        assert np.abs(out.amplitudes - expect).max() < 1e-12

    def test_rabi_oracle(self):
        # closed form: |<1|psi(t)>|^2 = sin^2(Omega t / 2)
        omega = 2 * np.pi * 5e5
        h = HBAR * omega / 2 * np.array([[0.0, 1.0], [1.0, 0.0]])
        psi0 = StateVector(np.array([1.0, 0.0]))
        times = np.linspace(0, 3e-6, 17)
        states = evolve(h, psi0, times)
        for t, s in zip(times, states):
            assert abs(s.amplitudes[1]) ** 2 == pytest.approx(
                np.sin(omega * t / 2) ** 2, abs=1e-12
            )

    def test_norm_preservation(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        h = HBAR * 1e6 * (a + a.conj().T) / 2
        psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        psi0 = StateVector(psi / np.linalg.norm(psi))
        for s in evolve(h, psi0, np.linspace(0, 1e-5, 9)):
            assert abs(s.norm() - 1.0) <= 1e-10


class TestLanczosPropagator:
    def test_matches_dense_on_sparse_hamiltonian(self):
        rng = np.random.default_rng(11)
        n = 300
        main = rng.standard_normal(n)
        off = rng.standard_normal(n - 1)
        h = sparse.diags([off, main, off], [-1, 0, 1], format="csr") * 1e6
        psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        psi /= np.linalg.norm(psi)
        t = 3.3e-5
        dense = h.toarray()
        w, v = np.linalg.eigh(dense)
        expected = v @ (np.exp(-1j * w * t) * (v.conj().T @ psi))
        got = lanczos_expm_multiply(h, psi, t)
        assert np.abs(got - expected).max() < 1e-8
        assert abs(np.linalg.norm(got) - 1.0) < 1e-10

    def test_dispatch_above_dense_limit(self):
        # evolve() must route large sparse problems through the stepper
        n = 2500
        levels = HBAR * np.linspace(0.0, 1e6, n)
        h = sparse.diags([levels], [0], format="csr")
        psi0 = StateVector(np.ones(n) / np.sqrt(n))
        t = 1e-3
        (out,) = evolve(h, psi0, [t])
        assert abs(out.norm() - 1.0) < 1e-10
        expected = psi0.amplitudes * np.exp(-1j * levels * t / HBAR)
        assert np.abs(out.amplitudes - expected).max() < 1e-8


class TestStates:
    def test_coherent_alpha_zero(self):
        s = coherent_state(12, 0.0)
        assert s.amplitudes[0] == 1.0
        assert np.abs(s.amplitudes[1:]).max() == 0.0

    def test_coherent_poisson_mean(self):
        alpha = 0.7 + 0.2j
        s = coherent_state(30, alpha)
        n = np.arange(30)
        mean = float(np.sum(n * np.abs(s.amplitudes) ** 2))
        assert mean == pytest.approx(abs(alpha) ** 2, rel=1e-8)

    def test_coherent_truncation_error(self):
        with pytest.raises(TruncationError):
            coherent_state(4, 3.0)

    def test_thermal_zero_temperature(self):
        _, _, h = fock_operators(8, 9.2e-32, 2 * np.pi * 1e6)
        rho = thermal_density(h, 0.0).validate()
        proj = np.zeros((8, 8))
        proj[0, 0] = 1.0
        assert np.abs(rho.entries - proj).max() < 1e-14

    def test_thermal_bose_einstein_occupation(self):
        # at hbar w / k T = 1 the closed form gives 1/(e - 1)
        freq = 2 * np.pi * 1e6
        temperature = HBAR * freq / KB
        d = 40
        _, _, h = fock_operators(d, 9.2e-32, freq)
        rho = thermal_density(h, temperature).validate()
        n_op = np.diag(np.arange(d).astype(float))
        got = expectation(n_op, rho).real
        assert got == pytest.approx(1.0 / (np.e - 1.0), abs=1e-10)

    def test_ground_state(self):
        h = np.diag([3.0, -1.0, 2.0])
        g = ground_state(h)
        assert abs(g.amplitudes[1]) == pytest.approx(1.0)


class TestExpectation:
    def test_identity(self):
        s = StateVector(np.array([0.6, 0.8j]))
        assert expectation(np.eye(2), s).real == pytest.approx(1.0)

    def test_spin_projection(self):
        s1, _, _ = spin1_operators()
        up = StateVector(np.array([1.0, 0.0, 0.0]))
        assert expectation(s1, up).real == pytest.approx(HBAR)

    def test_cos_gamma_on_momentum_eigenstate(self):
        _, _, cos_g, _ = rotor_operators(3)
        m_state = np.zeros(7)
        m_state[2] = 1.0
        assert expectation(cos_g, StateVector(m_state)) == 0.0

    def test_real_for_hermitian(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = (a + a.conj().T) / 2
        psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        psi /= np.linalg.norm(psi)
        assert abs(expectation(h, StateVector(psi)).imag) < 1e-10


class TestPackets:
    def test_gaussian_packet_moments(self):
        L, width, center = 60, 0.12, np.pi / 2
        pkt = rotor_gaussian_packet(L, center, width)
        _, shift, cos_g, sin_g = rotor_operators(L)
        cg = expectation(cos_g, pkt).real
        sg = expectation(sin_g, pkt).real
        # narrow packet: <cos gamma> ~ cos(center) e^{-width^2/2}
        assert abs(np.hypot(cg, sg) - np.exp(-(width**2) / 2)) < 1e-3

    def test_packet_needs_enough_momentum(self):
        with pytest.raises(TruncationError):
            rotor_gaussian_packet(5, 0.0, 0.01)

    def test_edge_weight_diagnostic(self):
        basis = BasisSpec(spin_dim=3, rotor_L=30, fock_dim=6)
        pkt = rotor_gaussian_packet(30, 0.0, 0.2)
        spin = np.array([1.0, 0, 0])
        vac = np.zeros(6)
        vac[0] = 1.0
        psi = StateVector(product_state([spin, pkt.amplitudes, vac]))
        assert edge_weight(psi, basis) < 1e-8
