import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_pure
from qtst_sim.quantum import (
    DensityOperator,
    HilbertLayout,
    NoHeraldError,
    QuantumChannel,
    apply_channel,
    dephasing_channel,
    embed_operator,
    kron,
    partial_trace,
    project,
    state_fidelity,
    trace_distance,
)

AB = HilbertLayout.of(("A", ("0", "1")), ("B", ("0", "1")))
QUBIT = HilbertLayout.of(("q", ("0", "1")))
SX = np.array([[0, 1], [1, 0]])
PHI_P = np.array([1, 0, 0, 1]) / np.sqrt(2)
PHI_M = np.array([1, 0, 0, -1]) / np.sqrt(2)


def check_invariants(rho: DensityOperator):
    m = rho.matrix
    assert np.max(np.abs(m - m.conj().T)) < 1e-12
    assert abs(np.trace(m).real - 1) < 1e-12
    assert np.linalg.eigvalsh(m).min() >= -1e-10


class TestLayout:
    def test_dims(self):
        layout = HilbertLayout.of(("p", "ab"), ("e", "ab"), ("N", "abc"))
        assert layout.dim == 12
        assert layout.dims == (2, 2, 3)

    def test_basis_length_must_match(self):
        with pytest.raises(ValueError):
            HilbertLayout.of(("p", ()))

    def test_unknown_label(self):
        with pytest.raises(KeyError):
            AB.index("C")


class TestDensityOperator:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            DensityOperator(QUBIT, np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityOperator(QUBIT, np.eye(2))

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="negative"):
            DensityOperator(QUBIT, np.diag([1.1, -0.1]))

    def test_tiny_negative_tolerated_and_clipped(self):
        rho = DensityOperator(QUBIT, np.diag([1 + 5e-11, -5e-11]))
        assert np.linalg.eigvalsh(rho.clipped().matrix).min() >= 0

    def test_matrix_is_read_only(self):
        rho = DensityOperator.maximally_mixed(QUBIT)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 1


class TestKron:
    def test_identity(self):
        assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_basis_vectors(self):
        out = kron([1, 0], [0, 1])
        assert np.array_equal(out, [0, 1, 0, 0])

    def test_bell_symmetry(self):
        assert np.allclose(kron(SX, SX) @ PHI_P, PHI_P)


class TestPartialTrace:
    def test_product_state(self, rng):
        a, b = random_density(rng, 2), random_density(rng, 2)
        rho = DensityOperator.from_matrix(AB, np.kron(a, b))
        assert np.allclose(partial_trace(rho, ["A"]).matrix, a, atol=1e-12)
        assert np.allclose(partial_trace(rho, ["B"]).matrix, b, atol=1e-12)

    def test_bell_reduction(self):
        rho = DensityOperator.from_pure(AB, PHI_P)
        assert np.allclose(partial_trace(rho, ["A"]).matrix, np.eye(2) / 2)

    def test_unknown_label(self):
        with pytest.raises(KeyError):
            partial_trace(DensityOperator.maximally_mixed(AB), ["C"])

    def test_three_parties_keeps_layout_order(self, rng):
        layout = HilbertLayout.of(("p", "ab"), ("e", "ab"), ("N", "abc"))
        a, b, c = random_density(rng, 2), random_density(rng, 2), random_density(rng, 3)
        rho = DensityOperator.from_matrix(layout, kron(a, b, c))
        assert np.allclose(partial_trace(rho, ["N", "p"]).matrix, np.kron(a, c), atol=1e-12)
        assert np.allclose(partial_trace(rho, ["e"]).matrix, b, atol=1e-12)

    def test_commutes_with_mixing(self, rng):
        layout = HilbertLayout.of(("p", "ab"), ("N", "abc"))
        r1, r2 = random_density(rng, 6), random_density(rng, 6)
        lam = 0.3
        mixed = DensityOperator.from_matrix(layout, lam * r1 + (1 - lam) * r2)
        lhs = partial_trace(mixed, ["N"]).matrix
        rhs = lam * partial_trace(DensityOperator.from_matrix(layout, r1), ["N"]).matrix + (1 - lam) * partial_trace(
            DensityOperator.from_matrix(layout, r2), ["N"]
        ).matrix
        assert np.allclose(lhs, rhs, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_trace_preserved(self, seed):
        rng = np.random.default_rng(seed)
        layout = HilbertLayout.of(("p", "ab"), ("e", "ab"), ("N", "abc"))
        rho = DensityOperator.from_matrix(layout, random_density(rng, 12))
        for keep in (["p"], ["e", "N"], ["N"]):
            check_invariants(partial_trace(rho, keep))


class TestProject:
    def test_trivial(self):
        rho = DensityOperator.from_pure(QUBIT, [1, 0])
        prob, post = project(rho, np.diag([1, 0]))
        assert prob == 1.0
        assert np.allclose(post.matrix, np.diag([1, 0]))

    def test_identity_projector(self, rng):
        rho = DensityOperator.from_matrix(AB, random_density(rng, 4))
        prob, post = project(rho, np.eye(4))
        assert prob == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(post.matrix, rho.matrix, atol=1e-12)

    def test_not_a_projector(self):
        with pytest.raises(ValueError):
            project(DensityOperator.maximally_mixed(QUBIT), np.array([[1, 1], [0, 0]]))

    def test_no_herald(self):
        rho = DensityOperator.from_pure(QUBIT, [1, 0])
        with pytest.raises(NoHeraldError):
            project(rho, np.diag([0, 1]))

    def test_idempotent(self, rng):
        rho = DensityOperator.from_matrix(AB, random_density(rng, 4))
        p = np.outer(PHI_P, PHI_P) + np.diag([0, 1, 0, 0])
        _, post = project(rho, p)
        prob2, post2 = project(post, p)
        assert prob2 == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(post2.matrix, post.matrix, atol=1e-10)


class TestFidelity:
    def test_pure(self, rng):
        psi = random_pure(rng, 3)
        layout = HilbertLayout.of(("N", "abc"))
        assert state_fidelity(DensityOperator.from_pure(layout, psi), psi) == pytest.approx(1.0, abs=1e-12)

    def test_mixed(self, rng):
        assert state_fidelity(DensityOperator.maximally_mixed(QUBIT), random_pure(rng, 2)) == pytest.approx(0.5)

    def test_bell_mixture(self):
        m = 0.5 * (np.outer(PHI_P, PHI_P) + np.outer(PHI_M, PHI_M))
        assert state_fidelity(DensityOperator.from_matrix(AB, m), PHI_P) == pytest.approx(0.5)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            state_fidelity(DensityOperator.maximally_mixed(QUBIT), PHI_P)

    def test_trace_distance_orthogonal(self):
        assert trace_distance(np.diag([1, 0]), np.diag([0, 1])) == pytest.approx(1.0)


class TestChannels:
    def test_identity_channel(self, rng):
        rho = DensityOperator.from_matrix(AB, random_density(rng, 4))
        out = apply_channel(rho, QuantumChannel((np.eye(2),)), on=["B"])
        assert np.allclose(out.matrix, rho.matrix, atol=1e-14)

    def test_full_dephasing_plus(self):
        plus = DensityOperator.from_pure(QUBIT, [1 / np.sqrt(2), 1 / np.sqrt(2)])
        out = apply_channel(plus, dephasing_channel(0.0), on=["q"])
        assert np.allclose(out.matrix, np.eye(2) / 2)

    def test_non_cptp_rejected(self):
        with pytest.raises(ValueError, match="trace preserving"):
            QuantumChannel((0.9 * np.eye(2),))

    def test_out_of_range(self):
        for c in (-0.1, 1.1):
            with pytest.raises(ValueError):
                dephasing_channel(c)

    def test_trace_preserved_random_states(self, rng):
        ch = dephasing_channel(0.37)
        amp = QuantumChannel(
            (np.array([[1, 0], [0, np.sqrt(0.6)]]), np.array([[0, np.sqrt(0.4)], [0, 0]]))
        )
        layout = HilbertLayout.of(("e", "ab"), ("N", "abc"))
        for _ in range(100):
            rho = DensityOperator.from_matrix(layout, random_density(rng, 6))
            for c in (ch, amp):
                out = apply_channel(rho, c, on=["e"])
                assert abs(np.trace(out.matrix).real - 1) < 1e-12
                check_invariants(out)

    def test_embedding_order(self, rng):
        a, b = random_density(rng, 2), rng.normal(size=(2, 2))
        full = embed_operator(b, AB, ["A"])
        assert np.allclose(full, np.kron(b, np.eye(2)))
        full = embed_operator(b, AB, ["B"])
        assert np.allclose(full, np.kron(np.eye(2), b))
        # Two-subsystem operator given in reversed order is swapped back.
        op = np.kron(a, b)
        assert np.allclose(embed_operator(op, AB, ["B", "A"]), np.kron(b, a))


class TestDephasingOnBellPair:
    def test_coherence_one_is_identity(self):
        rho = DensityOperator.from_pure(AB, PHI_P)
        out = apply_channel(rho, dephasing_channel(1.0), on=["A"])
        assert np.allclose(out.matrix, rho.matrix)

    def test_coherence_zero_gives_bell_mixture(self):
        rho = DensityOperator.from_pure(AB, PHI_P)
        out = apply_channel(rho, dephasing_channel(0.0), on=["A"])
        expected = 0.5 * (np.outer(PHI_P, PHI_P) + np.outer(PHI_M, PHI_M))
        assert np.allclose(out.matrix, expected, atol=1e-14)

    @pytest.mark.parametrize("c", np.linspace(0, 1, 11))
    def test_phi_plus_population(self, c):
        # Direct evaluation: scale the |00><11| and |11><00| entries by c.
        expected = np.outer(PHI_P, PHI_P).astype(complex)
        expected[0, 3] *= c
        expected[3, 0] *= c
        rho = DensityOperator.from_pure(AB, PHI_P)
        out = apply_channel(rho, dephasing_channel(c), on=["A"])
        assert np.allclose(out.matrix, expected, atol=1e-14)
        assert state_fidelity(out, PHI_P) == pytest.approx((1 + c) / 2, abs=1e-14)
