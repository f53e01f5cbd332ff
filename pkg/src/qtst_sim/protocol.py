"""Teleportation-based transfer of a photon polarization qubit into the nuclear spin.

Pipeline for one heralded attempt (all exact, no sampling)::

    prepare e-N Bell state -> dephase for the arrival delay
    -> photon (x) e-N -> project on |A2><A2| (x) 1_N -> trace out p, e
    -> sigma_x feed-forward on {|+1>, |-1>}_N -> |0>_N SPAM leakage
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .nv import (
    LAYOUT_EN,
    LAYOUT_N,
    LAYOUT_PEN,
    StrainParams,
    bell_phi_minus_eN,
    bell_phi_plus_eN,
    bsm_projector,
)
from .quantum import (
    DensityOperator,
    apply_channel,
    dephasing_channel,
    kron,
    partial_trace,
    project,
    state_fidelity,
)

SIGMA_F_DEFAULT = 61.0  # MHz
SIGMA_T_DEFAULT = 0.98  # us
P_SPAM_DEFAULT = 0.016
PREP_FIDELITY_DEFAULT = 0.97
HERALD_SCALE_DEFAULT = 0.1


def _check_probability(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")


@dataclass(frozen=True)
class PhotonState:
    """Polarization qubit ``alpha |+1>_p + beta |-1>_p``."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm2 = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm2 - 1.0) > 1e-12:
            raise ValueError(f"photon state is not normalized (|a|^2+|b|^2 = {norm2!r})")

    @classmethod
    def from_ket(cls, v) -> "PhotonState":
        a, b = np.asarray(v, dtype=np.complex128).reshape(2)
        return cls(complex(a), complex(b))

    @property
    def ket(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=np.complex128)

    def nuclear_ket(self) -> np.ndarray:
        """Same amplitudes on ``{|+1>, |-1>, |0>}_N``."""
        return np.array([self.alpha, self.beta, 0.0], dtype=np.complex128)


_s = 1 / np.sqrt(2)
# Circular (+1/-1), horizontal/vertical (+/-), diagonal/anti-diagonal (+i/-i).
SIX_INPUTS: dict[str, PhotonState] = {
    "+1": PhotonState(1.0, 0.0),
    "-1": PhotonState(0.0, 1.0),
    "+": PhotonState(_s, _s),
    "-": PhotonState(_s, -_s),
    "+i": PhotonState(_s, 1j * _s),
    "-i": PhotonState(_s, -1j * _s),
}
BASIS_INPUTS = ("+1", "-1")
SUPERPOSITION_INPUTS = ("+", "-", "+i", "-i")


@dataclass(frozen=True)
class NoiseParams:
    """Error model. Frequencies in MHz, times in microseconds."""

    sigma_f: float = SIGMA_F_DEFAULT
    sigma_t: float = SIGMA_T_DEFAULT
    p_spam: float = P_SPAM_DEFAULT
    prep_fidelity: float = PREP_FIDELITY_DEFAULT
    herald_scale: float = HERALD_SCALE_DEFAULT
    strain: StrainParams = field(default_factory=StrainParams)

    def __post_init__(self):
        for name in ("p_spam", "prep_fidelity", "herald_scale"):
            _check_probability(name, getattr(self, name))
        if not self.sigma_f > 0:
            raise ValueError(f"sigma_f must be > 0, got {self.sigma_f!r}")
        if not self.sigma_t > 0:
            raise ValueError(f"sigma_t must be > 0, got {self.sigma_t!r}")

    @classmethod
    def ideal(cls, **overrides) -> "NoiseParams":
        """Perfect preparation, no strain, no SPAM; widths and herald scale at defaults."""
        kw = dict(p_spam=0.0, prep_fidelity=1.0, strain=StrainParams(delta_perp=0.0))
        kw.update(overrides)
        return cls(**kw)


@dataclass(frozen=True)
class QtstOutcome:
    herald_prob: float
    rho_nuclear: DensityOperator
    leak_prob: float

    def fidelity(self, photon: PhotonState) -> float:
        return state_fidelity(self.rho_nuclear, photon.nuclear_ket())


def prepare_entangled(np_: NoiseParams) -> DensityOperator:
    """``F |Phi+><Phi+| + (1-F) |Phi-><Phi-|`` on electron (x) nuclear."""
    f = np_.prep_fidelity
    phi_p, phi_m = bell_phi_plus_eN(), bell_phi_minus_eN()
    m = f * np.outer(phi_p, phi_p.conj()) + (1 - f) * np.outer(phi_m, phi_m.conj())
    return DensityOperator.from_matrix(LAYOUT_EN, m)


def coherence_factor(t: float, sigma_t: float) -> float:
    """Gaussian decay ``exp(-t^2 / (2 sigma_t^2))`` of the e-N coherence."""
    if t < 0:
        raise ValueError(f"delay must be >= 0, got {t!r}")
    return float(np.exp(-(t**2) / (2 * sigma_t**2)))


def dephase_eN(rho: DensityOperator, t: float, np_: NoiseParams) -> DensityOperator:
    if rho.layout != LAYOUT_EN:
        raise ValueError("dephase_eN expects an electron (x) nuclear state")
    return apply_channel(rho, dephasing_channel(coherence_factor(t, np_.sigma_t)), on=["electron"])


def herald_lineshape(detuning: float, sigma_f: float) -> float:
    return float(np.exp(-(detuning**2) / (2 * sigma_f**2)))


def herald_probability(detuning: float, joint: DensityOperator, np_: NoiseParams) -> float:
    """Per-attempt herald probability.

    ``kappa * exp(-D^2 / 2 sigma_f^2) * 4 Tr(P rho P)``; the factor 4 maps the
    ideal Bell-measurement success of 1/4 onto 1.
    """
    if joint.layout != LAYOUT_PEN:
        raise ValueError("herald_probability expects a photon (x) electron (x) nuclear state")
    p = bsm_projector(np_.strain)
    success = float(np.trace(p @ joint.matrix @ p).real)
    return np_.herald_scale * herald_lineshape(detuning, np_.sigma_f) * 4.0 * success


_FEED_FORWARD = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=np.complex128)


def feed_forward(rho_n: DensityOperator) -> DensityOperator:
    """sigma_x on the ``{|+1>, |-1>}_N`` qubit, identity on ``|0>_N``."""
    return DensityOperator.from_matrix(rho_n.layout, _FEED_FORWARD @ rho_n.matrix @ _FEED_FORWARD)


def apply_spam(rho_n: DensityOperator, p_spam: float) -> DensityOperator:
    """Mix in ``p_spam`` of the ``|0>_N`` leakage state."""
    _check_probability("p_spam", p_spam)
    leak = np.zeros((3, 3), dtype=np.complex128)
    leak[2, 2] = 1.0
    return DensityOperator.from_matrix(rho_n.layout, (1 - p_spam) * rho_n.matrix + p_spam * leak)


def joint_state(photon: PhotonState, rho_en: DensityOperator) -> DensityOperator:
    ket = photon.ket
    return DensityOperator.from_matrix(LAYOUT_PEN, kron(np.outer(ket, ket.conj()), rho_en.matrix))


def run_qtst(photon: PhotonState, detuning: float, delay: float, np_: NoiseParams) -> QtstOutcome:
    """Run one heralded transfer. Raises ``NoHeraldError`` if absorption is impossible."""
    rho_en = dephase_eN(prepare_entangled(np_), delay, np_)
    joint = joint_state(photon, rho_en)
    # Detuning only sets the herald rate; the conditioned state does not depend on it.
    _, post = project(joint, bsm_projector(np_.strain))
    rho_n = apply_spam(feed_forward(partial_trace(post, keep=["nuclear"])), np_.p_spam)
    return QtstOutcome(
        herald_prob=herald_probability(detuning, joint, np_),
        rho_nuclear=rho_n,
        leak_prob=float(rho_n.matrix[2, 2].real),
    )


def closed_form_rho_n(photon: PhotonState, coherence: float) -> DensityOperator:
    """Analytic nuclear state after ideal teleportation with e-N coherence ``coherence``.

    ``|a|^2 |+1><+1| + |b|^2 |-1><-1| + coherence (a b* |+1><-1| + h.c.)``
    """
    if not 0.0 <= coherence <= 1.0:
        raise ValueError(f"coherence must be in [0, 1], got {coherence!r}")
    a, b = photon.alpha, photon.beta
    m = np.zeros((3, 3), dtype=np.complex128)
    m[0, 0] = abs(a) ** 2
    m[1, 1] = abs(b) ** 2
    m[0, 1] = coherence * a * np.conj(b)
    m[1, 0] = np.conj(m[0, 1])
    return DensityOperator.from_matrix(LAYOUT_N, m)


def transfer_fidelity(photon: PhotonState, detuning: float, delay: float, np_: NoiseParams) -> float:
    return run_qtst(photon, detuning, delay, np_).fidelity(photon)


def _as_photon_states(X) -> list[PhotonState]:
    if isinstance(X, PhotonState):
        return [X]
    if isinstance(X, dict):
        X = list(X.values())
    if len(X) and all(isinstance(x, PhotonState) for x in X):
        return list(X)
    arr = np.asarray(X, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected photon states or an (n, 2) amplitude array, got shape {arr.shape}")
    return [PhotonState.from_ket(row) for row in arr]


class QtstTransfer(TransformerMixin, BaseEstimator):
    """Transfer channel as a transformer: photon amplitudes in, nuclear states out.

    Parameters
    ----------
    noise : NoiseParams, optional
        Error model; calibrated defaults when omitted.
    detuning : float
        Photon detuning from the |A2> resonance, MHz.
    delay : float
        Photon arrival delay after e-N preparation, microseconds.

    ``transform`` maps an ``(n, 2)`` array of ``(alpha, beta)`` amplitudes (or a
    list of :class:`PhotonState`) to an ``(n, 3, 3)`` array of nuclear density
    matrices.
    """

    def __init__(self, noise=None, detuning=0.0, delay=0.0):
        self.noise = noise
        self.detuning = detuning
        self.delay = delay

    def fit(self, X=None, y=None):
        noise = NoiseParams() if self.noise is None else self.noise
        if not isinstance(noise, NoiseParams):
            raise TypeError(f"noise must be NoiseParams, got {type(noise).__name__}")
        self.noise_ = noise
        self.rho_en_ = dephase_eN(prepare_entangled(noise), float(self.delay), noise)
        self.projector_ = bsm_projector(noise.strain)
        return self

    def _outcomes(self, X) -> list[QtstOutcome]:
        check_is_fitted(self, "noise_")
        return [run_qtst(p, float(self.detuning), float(self.delay), self.noise_) for p in _as_photon_states(X)]

    def transform(self, X):
        return np.stack([o.rho_nuclear.matrix for o in self._outcomes(X)])

    def herald_probability(self, X):
        return np.array([o.herald_prob for o in self._outcomes(X)])

    def score(self, X, y=None):
        """Mean transfer fidelity over the inputs."""
        photons = _as_photon_states(X)
        return float(np.mean([o.fidelity(p) for o, p in zip(self._outcomes(photons), photons)]))
