import numpy as np
import pytest

from qtst_sim.nv import (
    LAMBDA_SO_DEFAULT,
    LAYOUT_EN,
    AmbiguousBranchError,
    StrainParams,
    a2_overlap,
    bell_phi_minus_eN,
    bell_phi_plus_eN,
    bsm_projector,
    calibrate_lambda_so,
    exchange_pe,
    excited_hamiltonian,
    excited_to_pe,
    psi_plus_pe,
    strained_a2,
)
from qtst_sim.quantum import DensityOperator, partial_trace, state_fidelity

GRID = np.linspace(0.0, 3.0, 61)


def lowest_eigenspace_overlap(delta, lam):
    """Independent route: |Psi+> weight inside the lowest eigenspace of the full 4x4 H."""
    sz, sx = np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])
    h = lam * np.kron(sz, sz) + delta * np.kron(sx, np.eye(2))  # photon/orbital (x) spin
    w, v = np.linalg.eigh(h)
    low = v[:, np.abs(w - w.min()) < 1e-9]
    psi = np.array([0, 1, 1, 0]) / np.sqrt(2)
    return float(np.linalg.norm(low.conj().T @ psi) ** 2)


class TestBellStates:
    def test_phi_plus_amplitudes(self):
        phi = bell_phi_plus_eN()
        expected = np.zeros(6)
        expected[[0, 4]] = 1 / np.sqrt(2)  # |+1,+1> and |-1,-1>
        assert np.allclose(phi, expected)
        assert np.vdot(phi, phi).real == pytest.approx(1.0)

    def test_reduced_electron(self):
        rho = DensityOperator.from_pure(LAYOUT_EN, bell_phi_plus_eN())
        assert np.allclose(partial_trace(rho, ["electron"]).matrix, np.eye(2) / 2)

    def test_orthogonal_bell_states(self):
        rho = DensityOperator.from_pure(LAYOUT_EN, bell_phi_plus_eN())
        assert state_fidelity(rho, bell_phi_minus_eN()) == pytest.approx(0.0, abs=1e-15)

    def test_psi_plus(self):
        psi = psi_plus_pe()
        assert np.allclose(exchange_pe() @ psi, psi)
        assert abs(psi[0]) == 0  # |+1,+1>
        assert psi[1] == pytest.approx(1 / np.sqrt(2))  # |+1,-1>


class TestExcitedHamiltonian:
    def test_zero_strain_eigenvectors(self):
        manifold = excited_hamiltonian(StrainParams(0.0, 4.0))
        vecs = [excited_to_pe(manifold.vectors[:, k]) for k in range(4)]
        a2 = psi_plus_pe()
        a1 = np.array([0, 1, -1, 0]) / np.sqrt(2)
        assert any(abs(abs(np.vdot(a2, v)) - 1) < 1e-12 for v in vecs)
        assert any(abs(abs(np.vdot(a1, v)) - 1) < 1e-12 for v in vecs)

    def test_zero_strain_branches(self):
        m = excited_hamiltonian(StrainParams(0.0, 4.0))
        assert np.allclose(m.energies, [-4, -4, 4, 4])
        # Lower pair is {A2, A1}: both live on |E+,-1>, |E-,+1> (first two basis entries).
        assert np.allclose(np.abs(m.vectors[2:, :2]), 0)
        assert np.allclose(np.abs(m.vectors[:2, 2:]), 0)

    @pytest.mark.parametrize("delta", [0.0, 0.5, 1.25, 3.0])
    def test_orthonormal_and_hermitian(self, delta):
        m = excited_hamiltonian(StrainParams(delta, LAMBDA_SO_DEFAULT))
        assert np.max(np.abs(m.hamiltonian - m.hamiltonian.conj().T)) < 1e-12
        assert np.allclose(m.vectors.conj().T @ m.vectors, np.eye(4), atol=1e-10)
        assert np.allclose(m.hamiltonian @ m.vectors, m.vectors * m.energies, atol=1e-10)
        assert np.all(np.diff(m.energies) >= -1e-12)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            StrainParams(-1.0)
        with pytest.raises(ValueError):
            StrainParams(1.0, 0.0)


class TestStrainedA2:
    def test_zero_strain_is_ideal(self):
        assert np.allclose(strained_a2(StrainParams(0.0)), psi_plus_pe(), atol=1e-15)

    def test_phase_convention(self):
        v = strained_a2(StrainParams(1.25))
        k = np.argmax(np.abs(v))
        assert v[k].imag == 0 and v[k].real > 0

    def test_matches_eigenspace_oracle(self):
        for d in GRID:
            assert a2_overlap(StrainParams(d)) == pytest.approx(lowest_eigenspace_overlap(d, LAMBDA_SO_DEFAULT), abs=1e-12)

    def test_monotone_non_increasing(self):
        overlaps = [lowest_eigenspace_overlap(d, LAMBDA_SO_DEFAULT) for d in GRID]
        assert np.all(np.diff(overlaps) <= 1e-12)
        ours = [a2_overlap(StrainParams(d)) for d in GRID]
        assert np.all(np.diff(ours) <= 1e-12)

    def test_continuity(self):
        for d in GRID:
            a = strained_a2(StrainParams(d))
            b = strained_a2(StrainParams(d + 1e-4))
            assert abs(np.vdot(a, b)) ** 2 > 1 - 1e-5

    def test_zero_strain_overlap_exactly_one(self):
        assert a2_overlap(StrainParams(0.0)) == 1.0

    def test_calibrated_default(self):
        assert a2_overlap(StrainParams(1.25)) == pytest.approx(0.98, abs=0.005)

    def test_calibration_reproduces_default(self):
        assert calibrate_lambda_so(1.25, 0.98) == pytest.approx(LAMBDA_SO_DEFAULT, rel=1e-10)

    def test_calibration_other_target(self):
        lam = calibrate_lambda_so(2.0, 0.95)
        assert a2_overlap(StrainParams(2.0, lam)) == pytest.approx(0.95, abs=1e-10)

    def test_ambiguous_branch(self, monkeypatch):
        import qtst_sim.nv as nv

        # A target halfway between A2 and A1 overlaps both equally.
        monkeypatch.setattr(nv, "psi_plus_pe", lambda: np.array([0, 1, 0, 0], dtype=complex))
        nv._strained_a2_cached.cache_clear()
        try:
            with pytest.raises(AmbiguousBranchError):
                nv.strained_a2(StrainParams(0.0, 1.0))
        finally:
            nv._strained_a2_cached.cache_clear()


class TestProjector:
    @pytest.mark.parametrize("sp,ideal", [(None, True), (StrainParams(1.25), False), (StrainParams(0.3), False)])
    def test_projector_properties(self, sp, ideal):
        p = bsm_projector(sp, ideal=ideal)
        assert p.shape == (12, 12)
        assert np.max(np.abs(p @ p - p)) < 1e-12
        assert np.trace(p).real == pytest.approx(3.0, abs=1e-12)
        assert np.linalg.matrix_rank(p, tol=1e-9) == 3

    def test_ideal_commutes_with_exchange(self):
        swap = np.kron(exchange_pe(), np.eye(3))
        p = bsm_projector(ideal=True)
        assert np.allclose(swap @ p, p @ swap)

    def test_ideal_flag_ignores_strain(self):
        assert np.allclose(bsm_projector(StrainParams(2.0), ideal=True), bsm_projector(ideal=True))
