"""Simulated readout, state/process tomography and shot-noise error bars.

Nuclear-spin readout is modeled as an ideal projective measurement of the
``{|+1>, |-1>}`` qubit in the X, Y or Z basis with a third outcome, ``leak``,
for population left on ``|0>_N``.

State reconstruction is linear inversion of the Pauli expectations followed by
eigenvalue clipping; process reconstruction is least squares on the chi matrix
in the (I, X, Y, Z) basis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._rng import make_rng
from .quantum import DensityOperator, HilbertLayout, as_pure_state, physical_projection

ESTIMATOR_ID = "linear-inversion+eigenvalue-clipping"

OUTCOMES = ("+", "-", "leak")
BASES = ("X", "Y", "Z")
CORRELATOR_BASES = ("XX", "YY", "ZZ")

LAYOUT_QUBIT = HilbertLayout.of(("nuclear", ("+1", "-1")))

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
PAULI_BASIS = (I2, X, Y, Z)

_s = 1 / np.sqrt(2)
# (+ eigenvector, - eigenvector) of each Pauli on the {|+1>, |-1>} qubit.
BASIS_VECTORS = {
    "X": (np.array([_s, _s]), np.array([_s, -_s])),
    "Y": (np.array([_s, 1j * _s]), np.array([_s, -1j * _s])),
    "Z": (np.array([1.0, 0.0]), np.array([0.0, 1.0])),
}


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome counts for one measurement setting.

    ``counts`` are normally integers. Exact (infinite-shot) records built by
    :func:`exact_record` carry probabilities as counts with ``shots == 1``.
    """

    basis: str
    counts: Mapping[str, float]
    shots: float

    def __post_init__(self):
        if self.basis not in BASES + CORRELATOR_BASES:
            raise ValueError(f"unknown basis {self.basis!r}")
        counts = {k: self.counts.get(k, 0) for k in self.outcomes}
        extra = set(self.counts) - set(self.outcomes)
        if extra:
            raise ValueError(f"unknown outcomes {sorted(extra)} for basis {self.basis}")
        if any(v < 0 for v in counts.values()):
            raise ValueError("counts must be nonnegative")
        if abs(sum(counts.values()) - self.shots) > 1e-9 * max(1.0, self.shots):
            raise ValueError(f"counts sum to {sum(counts.values())}, expected {self.shots}")
        object.__setattr__(self, "counts", counts)

    @property
    def outcomes(self) -> tuple[str, ...]:
        return OUTCOMES if self.basis in BASES else ("+", "-")

    def frequencies(self) -> np.ndarray:
        return np.array([self.counts[k] for k in self.outcomes], dtype=float) / self.shots


def _qubit_block(rho) -> tuple[np.ndarray, float]:
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    if m.shape == (3, 3):
        return m[:2, :2], float(m[2, 2].real)
    if m.shape == (2, 2):
        return m, 0.0
    raise ValueError(f"expected a nuclear (3x3) or qubit (2x2) state, got shape {m.shape}")


def born_probabilities(rho, basis: str) -> np.ndarray:
    """``(p+, p-, p_leak)`` for a nuclear state measured in ``basis``."""
    block, leak = _qubit_block(rho)
    plus, minus = BASIS_VECTORS[basis]
    p = np.array([np.vdot(plus, block @ plus).real, np.vdot(minus, block @ minus).real, leak])
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def exact_record(rho, basis: str) -> MeasurementRecord:
    p = born_probabilities(rho, basis)
    return MeasurementRecord(basis, dict(zip(OUTCOMES, p)), 1.0)


def simulate_counts(rho, basis: str, shots: int, seed) -> MeasurementRecord:
    """Multinomial draw of ``shots`` outcomes. ``seed`` is an int, a tuple key or a Generator."""
    if shots <= 0:
        raise ValueError(f"shots must be positive, got {shots!r}")
    rng = make_rng(seed)
    counts = rng.multinomial(int(shots), born_probabilities(rho, basis))
    return MeasurementRecord(basis, dict(zip(OUTCOMES, map(int, counts))), int(shots))


def correlator_expectation(rho_en, basis: str) -> float:
    """``<P (x) P>`` on the electron (x) nuclear-qubit block of an e-N state."""
    m = rho_en.matrix if isinstance(rho_en, DensityOperator) else np.asarray(rho_en)
    keep = [0, 1, 3, 4]  # |e, N> with N in {+1, -1}
    block = m[np.ix_(keep, keep)]
    p = PAULIS[basis[0]]
    return float(np.trace(np.kron(p, p) @ block).real)


def simulate_correlator(rho_en, basis: str, shots: int, seed) -> MeasurementRecord:
    """Parity outcomes (+1 / -1) for a two-qubit Pauli correlator; shots == 0 gives exact frequencies."""
    p_plus = min(max((1 + correlator_expectation(rho_en, basis)) / 2, 0.0), 1.0)
    if shots == 0:
        return MeasurementRecord(basis, {"+": p_plus, "-": 1 - p_plus}, 1.0)
    n_plus = int(make_rng(seed).binomial(int(shots), p_plus))
    return MeasurementRecord(basis, {"+": n_plus, "-": int(shots) - n_plus}, int(shots))


def bell_fidelity_from_correlators(records: Sequence[MeasurementRecord]) -> float:
    """Phi+ fidelity ``(1 + <XX> - <YY> + <ZZ>) / 4`` from parity records."""
    e = {r.basis: float(np.dot(r.frequencies(), [1.0, -1.0])) for r in records}
    missing = set(CORRELATOR_BASES) - set(e)
    if missing:
        raise ValueError(f"missing correlator records {sorted(missing)}")
    return (1 + e["XX"] - e["YY"] + e["ZZ"]) / 4


@dataclass(frozen=True)
class QstResult:
    rho: DensityOperator  # qubit subspace, renormalized
    leak: float
    bloch: np.ndarray = field(repr=False)  # linear-inversion Bloch vector before projection
    estimator: str = ESTIMATOR_ID

    def fidelity(self, psi) -> float:
        """Fidelity with a qubit target, counting leaked population as failure."""
        psi = as_pure_state(psi)[:2]
        return (1 - self.leak) * float(np.vdot(psi, self.rho.matrix @ psi).real)


def qst(records: Sequence[MeasurementRecord]) -> QstResult:
    """Linear-inversion state tomography of the nuclear qubit with physicality projection."""
    by_basis = {}
    for r in records:
        by_basis.setdefault(r.basis, []).append(r)
    missing = [b for b in BASES if b not in by_basis]
    if missing:
        raise ValueError(f"missing measurement basis {missing}")

    bloch = np.zeros(3)
    leak_counts = total = 0.0
    for k, b in enumerate(BASES):
        plus = sum(r.counts["+"] for r in by_basis[b])
        minus = sum(r.counts["-"] for r in by_basis[b])
        leak_counts += sum(r.counts["leak"] for r in by_basis[b])
        total += sum(r.shots for r in by_basis[b])
        bloch[k] = (plus - minus) / (plus + minus) if plus + minus > 0 else 0.0

    linear = 0.5 * (I2 + bloch[0] * X + bloch[1] * Y + bloch[2] * Z)
    rho = DensityOperator.from_matrix(LAYOUT_QUBIT, physical_projection(linear))
    return QstResult(rho=rho, leak=leak_counts / total, bloch=bloch)


@dataclass(frozen=True, eq=False)
class ChiMatrix:
    """Process matrix: ``E(rho) = sum_mn chi[m, n] P_m rho P_n^dagger`` over (I, X, Y, Z)."""

    entries: np.ndarray

    LABELS = ("I", "X", "Y", "Z")

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.complex128)
        if e.shape != (4, 4):
            raise ValueError(f"chi matrix must be 4x4, got {e.shape}")
        if np.max(np.abs(e - e.conj().T)) > 1e-10:
            raise ValueError("chi matrix is not Hermitian")
        if abs(np.trace(e).real - 1.0) > 1e-10:
            raise ValueError(f"chi matrix trace is {np.trace(e).real!r}, expected 1")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def __getitem__(self, key: str) -> complex:
        """``chi["XX"]`` style access."""
        m, n = (self.LABELS.index(c) for c in key)
        return complex(self.entries[m, n])

    def apply(self, rho) -> np.ndarray:
        m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
        return sum(
            self.entries[i, j] * PAULI_BASIS[i] @ m @ PAULI_BASIS[j].conj().T
            for i, j in itertools.product(range(4), repeat=2)
        )


def kraus_to_chi(kraus_ops: Sequence[np.ndarray]) -> np.ndarray:
    """Analytic chi matrix of a qubit channel from its Kraus operators."""
    chi = np.zeros((4, 4), dtype=np.complex128)
    for k in kraus_ops:
        e = np.array([np.trace(p.conj().T @ k) / 2 for p in PAULI_BASIS])
        chi += np.outer(e, e.conj())
    return chi


def _qubit_output(out) -> np.ndarray:
    """Drop ``|0>_N`` leakage and renormalize onto the qubit subspace."""
    block, _ = _qubit_block(out)
    tr = np.trace(block).real
    if tr <= 0:
        raise ValueError("output has no population in the qubit subspace")
    return block / tr


def qpt(inputs: Sequence, outputs: Sequence) -> ChiMatrix:
    """Least-squares process tomography from input/output state pairs.

    ``inputs`` are photon states (``PhotonState``, kets or 2x2 matrices);
    ``outputs`` are the matching nuclear states (3x3 with leakage, or 2x2).
    """
    if len(inputs) != len(outputs):
        raise ValueError(f"{len(inputs)} inputs but {len(outputs)} outputs")
    rho_in = [_input_matrix(x) for x in inputs]
    rho_out = [_qubit_output(y) for y in outputs]

    pairs = list(itertools.product(range(4), repeat=2))
    design = np.array(
        [
            np.concatenate([(PAULI_BASIS[m] @ r @ PAULI_BASIS[n].conj().T).reshape(-1) for r in rho_in])
            for m, n in pairs
        ]
    ).T
    target = np.concatenate([r.reshape(-1) for r in rho_out])
    if np.linalg.matrix_rank(design, tol=1e-9) < len(pairs):
        raise ValueError("input states do not span the qubit operator space (rank-deficient)")
    sol, *_ = np.linalg.lstsq(design, target, rcond=None)
    chi = sol.reshape(4, 4)
    chi = 0.5 * (chi + chi.conj().T)
    return ChiMatrix(chi / np.trace(chi).real)


def _input_matrix(x) -> np.ndarray:
    ket = getattr(x, "ket", None)
    if ket is not None:
        return np.outer(ket, ket.conj())
    if isinstance(x, DensityOperator):
        return _qubit_output(x)
    a = np.asarray(x, dtype=np.complex128)
    if a.shape == (2,):
        a = as_pure_state(a)
        return np.outer(a, a.conj())
    return _qubit_output(a)


def bootstrap_errorbar(
    records: Sequence[MeasurementRecord],
    estimator: Callable[[Sequence[MeasurementRecord]], float],
    resamples: int = 200,
    seed=0,
) -> tuple[float, float]:
    """Parametric bootstrap of ``estimator`` over multinomial shot noise.

    Each resample redraws every record's counts from its own empirical
    frequencies. Returns the estimate on the original records and the sample
    standard deviation (ddof=1) of the resampled estimates.
    """
    if resamples < 100:
        raise ValueError(f"need at least 100 resamples, got {resamples}")
    records = list(records)
    estimate = float(estimator(records))
    rng = make_rng(seed)
    freqs = [r.frequencies() for r in records]
    shots = [int(round(r.shots)) for r in records]
    values = np.empty(resamples)
    for i in range(resamples):
        fake = [
            MeasurementRecord(r.basis, dict(zip(r.outcomes, map(int, rng.multinomial(n, f)))), n)
            for r, f, n in zip(records, freqs, shots)
        ]
        values[i] = estimator(fake)
    return estimate, float(values.std(ddof=1))


class StateTomography(BaseEstimator):
    """Estimator wrapper around :func:`qst`.

    ``fit(records)`` sets ``rho_`` (qubit :class:`DensityOperator`), ``leak_``
    and ``bloch_``.
    """

    def fit(self, records, y=None):
        result = qst(records)
        self.result_ = result
        self.rho_ = result.rho
        self.leak_ = result.leak
        self.bloch_ = result.bloch
        return self

    def fidelity(self, psi) -> float:
        check_is_fitted(self, "result_")
        return self.result_.fidelity(psi)


class ProcessTomography(BaseEstimator):
    """Learn a qubit process from (input, output) pairs; ``predict`` applies it."""

    def fit(self, inputs, outputs):
        self.chi_ = qpt(inputs, outputs)
        return self

    def predict(self, inputs):
        check_is_fitted(self, "chi_")
        return np.stack([self.chi_.apply(_input_matrix(x)) for x in inputs])
