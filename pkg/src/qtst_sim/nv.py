"""NV-center conventions, Bell states and the strained |A2> absorption projector.

Index maps (first factor most significant):

* photon ``p`` and electron ``e``: ``0 -> |+1>``, ``1 -> |-1>``
* nuclear ``N``: ``0 -> |+1>``, ``1 -> |-1>``, ``2 -> |0>``
* electron (x) nuclear, dim 6: ``index = 3*e + N``
* photon (x) electron, dim 4: ``index = 2*p + e``
* photon (x) electron (x) nuclear, dim 12: ``index = 6*p + 3*e + N``

Photon polarization is identified with the orbital label of the excited state,
``|+1>_p <-> |E+>`` and ``|-1>_p <-> |E->``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .quantum import HilbertLayout, kron

PHOTON = ("photon", ("+1", "-1"))
ELECTRON = ("electron", ("+1", "-1"))
NUCLEAR = ("nuclear", ("+1", "-1", "0"))

LAYOUT_PEN = HilbertLayout.of(PHOTON, ELECTRON, NUCLEAR)
LAYOUT_EN = HilbertLayout.of(ELECTRON, NUCLEAR)
LAYOUT_PE = HilbertLayout.of(PHOTON, ELECTRON)
LAYOUT_N = HilbertLayout.of(NUCLEAR)

UP, DOWN = np.eye(2, dtype=np.complex128)
N_UP, N_DOWN, N_ZERO = np.eye(3, dtype=np.complex128)

# Excited-manifold basis order used by ExcitedManifold.hamiltonian:
# |E+,-1>, |E-,+1>, |E+,+1>, |E-,-1>.
EXCITED_LABELS = ("E+,-1", "E-,+1", "E+,+1", "E-,-1")
# Position of each excited basis vector in the photon (x) electron basis.
EXCITED_TO_PE = np.array([1, 2, 0, 3])

DELTA_PERP_DEFAULT = 1.25  # GHz
A2_TARGET_OVERLAP = 0.98
# lambda/sqrt(lambda^2 + delta^2) = 2*0.98 - 1 at delta = 1.25 GHz gives 1.25*24/7.
LAMBDA_SO_DEFAULT = 30.0 / 7.0  # GHz
TIE_TOL = 1e-9


class AmbiguousBranchError(ValueError):
    """Two excited eigenvectors overlap equally with the ideal |A2>."""


@dataclass(frozen=True)
class StrainParams:
    """Transverse strain ``delta_perp`` and effective spin-orbit scale ``lambda_so`` (GHz)."""

    delta_perp: float = DELTA_PERP_DEFAULT
    lambda_so: float = LAMBDA_SO_DEFAULT

    def __post_init__(self):
        if not self.delta_perp >= 0:
            raise ValueError(f"delta_perp must be >= 0, got {self.delta_perp!r}")
        if not self.lambda_so > 0:
            raise ValueError(f"lambda_so must be > 0, got {self.lambda_so!r}")


@dataclass(frozen=True, eq=False)
class ExcitedManifold:
    hamiltonian: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray  # columns, in the EXCITED_LABELS basis
    parities: np.ndarray  # eigenvalue of the orbital/spin exchange (+1 or -1)

    @property
    def eigenpairs(self) -> list[tuple[float, np.ndarray]]:
        return [(float(e), self.vectors[:, k]) for k, e in enumerate(self.energies)]


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def bell_phi_plus_eN() -> np.ndarray:
    """``(|+1,+1> + |-1,-1>)/sqrt2`` on electron (x) nuclear."""
    return (kron(UP, N_UP) + kron(DOWN, N_DOWN)) / np.sqrt(2)


def bell_phi_minus_eN() -> np.ndarray:
    return (kron(UP, N_UP) - kron(DOWN, N_DOWN)) / np.sqrt(2)


def psi_plus_pe() -> np.ndarray:
    """Ideal ``|A2> = (|+1,-1> + |-1,+1>)/sqrt2`` on photon (x) electron."""
    return (kron(UP, DOWN) + kron(DOWN, UP)) / np.sqrt(2)


def exchange_pe() -> np.ndarray:
    """SWAP of the photon and electron qubits."""
    swap = np.zeros((4, 4), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            swap[2 * j + i, 2 * i + j] = 1.0
    return swap


def _excited_hamiltonian_pe(sp: StrainParams) -> np.ndarray:
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    return sp.lambda_so * np.kron(sz, sz) + sp.delta_perp * np.kron(sx, np.eye(2))


def excited_hamiltonian(sp: StrainParams) -> ExcitedManifold:
    """Effective m_s = +-1 excited-state Hamiltonian and its eigenpairs.

    ``H = lambda_so * sz_orb (x) sz_spin + delta_perp * sx_orb (x) 1``.
    The spectrum is doubly degenerate, so eigenvectors are resolved inside the
    two parity sectors of ``sx_orb (x) sx_spin``, which commutes with ``H``.
    That sector split keeps A2 (even) apart from A1 (odd).
    """
    h_pe = _excited_hamiltonian_pe(sp)
    h = h_pe[np.ix_(EXCITED_TO_PE, EXCITED_TO_PE)].astype(np.complex128)

    s = 1 / np.sqrt(2)
    even = np.array([[s, 0], [s, 0], [0, s], [0, s]], dtype=np.complex128)
    odd = np.array([[s, 0], [-s, 0], [0, s], [0, -s]], dtype=np.complex128)

    energies, vectors, parities = [], [], []
    for parity, basis in ((1, even), (-1, odd)):
        w, u = np.linalg.eigh(basis.conj().T @ h @ basis)
        for k in range(2):
            energies.append(w[k])
            vectors.append(_fix_phase(basis @ u[:, k]))
            parities.append(parity)

    order = sorted(range(4), key=lambda k: (round(energies[k], 12), -parities[k]))
    return ExcitedManifold(
        hamiltonian=h,
        energies=np.array([energies[k] for k in order]),
        vectors=np.column_stack([vectors[k] for k in order]),
        parities=np.array([parities[k] for k in order]),
    )


def excited_to_pe(v: np.ndarray) -> np.ndarray:
    """Re-index an excited-manifold vector into the photon (x) electron basis."""
    out = np.zeros(4, dtype=np.complex128)
    out[EXCITED_TO_PE] = v
    return out


@lru_cache(maxsize=256)
def _strained_a2_cached(delta_perp: float, lambda_so: float) -> np.ndarray:
    manifold = excited_hamiltonian(StrainParams(delta_perp, lambda_so))
    ideal = psi_plus_pe()
    candidates = [excited_to_pe(manifold.vectors[:, k]) for k in range(4)]
    overlaps = np.array([abs(np.vdot(ideal, c)) ** 2 for c in candidates])
    best = np.argsort(overlaps)[::-1]
    if overlaps[best[0]] - overlaps[best[1]] < TIE_TOL:
        raise AmbiguousBranchError(
            f"A2 branch is ambiguous at delta_perp={delta_perp}: overlaps {overlaps[best[:2]]}"
        )
    v = _fix_phase(candidates[best[0]])
    v.setflags(write=False)
    return v


def strained_a2(sp: StrainParams) -> np.ndarray:
    """The excited eigenvector closest to the ideal |A2>, on photon (x) electron."""
    return _strained_a2_cached(float(sp.delta_perp), float(sp.lambda_so)).copy()


def a2_overlap(sp: StrainParams) -> float:
    """``|<Psi+|A2(strain)>|^2``, normalized so equal kets give exactly 1."""
    ideal, a2 = psi_plus_pe(), strained_a2(sp)
    return float(abs(np.vdot(ideal, a2)) ** 2 / (np.vdot(ideal, ideal).real * np.vdot(a2, a2).real))


def calibrate_lambda_so(
    delta_perp: float = DELTA_PERP_DEFAULT, target: float = A2_TARGET_OVERLAP
) -> float:
    """Solve for the ``lambda_so`` giving ``a2_overlap == target`` at ``delta_perp``."""
    if not 0.5 < target < 1.0:
        raise ValueError(f"target overlap must be in (0.5, 1), got {target!r}")
    if delta_perp <= 0:
        raise ValueError("calibration needs a positive delta_perp")

    def gap(lam):
        return a2_overlap(StrainParams(delta_perp, lam)) - target

    return float(brentq(gap, 1e-6 * delta_perp, 1e6 * delta_perp, xtol=1e-14, rtol=1e-14))


def bsm_projector(sp: StrainParams | None = None, ideal: bool = False) -> np.ndarray:
    """``|a2><a2|_{p,e} (x) 1_N`` on the 12-dimensional photon/electron/nuclear space."""
    a2 = psi_plus_pe() if ideal or sp is None else strained_a2(sp)
    return kron(np.outer(a2, a2.conj()), np.eye(3))
