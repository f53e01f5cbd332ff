"""Dense density-matrix primitives on small labeled tensor-product spaces.

Everything here works on plain ``numpy`` arrays. The largest space used by the
package is photon (2) x electron (2) x nuclear (3) = 12, so all operators are
dense ``complex128`` matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
PROJECTOR_TOL = 1e-10
COMPLETENESS_TOL = 1e-10
NO_HERALD_PROB = 1e-15


class NoHeraldError(RuntimeError):
    """Raised when a projection succeeds with (numerically) zero probability."""


@dataclass(frozen=True)
class Subsystem:
    label: str
    dim: int
    basis: tuple[str, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"subsystem {self.label!r} must have positive dimension")
        if len(self.basis) != self.dim:
            raise ValueError(
                f"subsystem {self.label!r}: {len(self.basis)} basis labels for dimension {self.dim}"
            )


@dataclass(frozen=True)
class HilbertLayout:
    """Ordered list of subsystems; the first one is the most significant index."""

    subsystems: tuple[Subsystem, ...]

    def __post_init__(self):
        labels = [s.label for s in self.subsystems]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate subsystem labels in {labels}")

    @classmethod
    def of(cls, *specs: tuple[str, Sequence[str]]) -> "HilbertLayout":
        return cls(tuple(Subsystem(label, len(basis), tuple(basis)) for label, basis in specs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=int))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown subsystem {label!r}; layout has {self.labels}") from None

    def sub(self, labels: Iterable[str]) -> "HilbertLayout":
        """Layout restricted to ``labels``, kept in this layout's order."""
        wanted = set(labels)
        for label in wanted:
            self.index(label)
        return HilbertLayout(tuple(s for s in self.subsystems if s.label in wanted))


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix on ``layout``.

    The stored matrix is a read-only copy. Construction validates the three
    invariants; eigenvalues in ``[-1e-10, 0)`` are accepted as numerical noise
    (see :meth:`clipped`), anything more negative is an error.
    """

    layout: HilbertLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        d = self.layout.dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match layout dimension {d}")
        if np.max(np.abs(m - m.conj().T)) >= HERMITIAN_TOL:
            raise ValueError("density operator is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density operator trace is {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(m).min()
        if lo < -POSITIVITY_TOL:
            raise ValueError(f"density operator has negative eigenvalue {lo:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, layout: HilbertLayout, m: np.ndarray) -> "DensityOperator":
        """Build from a matrix that may carry rounding noise in its Hermitian part."""
        return cls(layout, _hermitize(np.asarray(m, dtype=np.complex128)))

    @classmethod
    def from_pure(cls, layout: HilbertLayout, psi: np.ndarray) -> "DensityOperator":
        psi = as_pure_state(psi, layout.dim)
        return cls.from_matrix(layout, np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, layout: HilbertLayout) -> "DensityOperator":
        return cls(layout, np.eye(layout.dim) / layout.dim)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def clipped(self) -> "DensityOperator":
        """Copy with tiny negative eigenvalues set to zero and trace restored."""
        return DensityOperator.from_matrix(self.layout, physical_projection(self.matrix))

    def __eq__(self, other):
        if not isinstance(other, DensityOperator):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(self.matrix, other.matrix)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map given by Kraus operators, ``rho -> sum_k K rho K^dagger``."""

    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=np.complex128) for k in self.kraus_ops)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        d = ops[0].shape[1]
        if any(k.shape != (d, d) for k in ops):
            raise ValueError("Kraus operators must be square with a common dimension")
        completeness = sum(k.conj().T @ k for k in ops)
        err = np.max(np.abs(completeness - np.eye(d)))
        if err > COMPLETENESS_TOL:
            raise ValueError(f"channel is not trace preserving (completeness error {err:.3e})")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]


def as_pure_state(psi, dim: int | None = None) -> np.ndarray:
    """Validate a ket: 1-D complex vector with unit norm (1e-12)."""
    v = np.asarray(psi, dtype=np.complex128).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"state has dimension {v.shape[0]}, expected {dim}")
    norm2 = np.vdot(v, v).real
    if abs(norm2 - 1.0) > 1e-12:
        raise ValueError(f"state is not normalized (|psi|^2 = {norm2!r})")
    return v


def kron(*ops) -> np.ndarray:
    """Kronecker product of any number of vectors or matrices, left to right."""
    out = np.asarray(ops[0], dtype=np.complex128)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=np.complex128))
    return out


def _perm_operator(op: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of ``op`` (factor dims ``dims``) so new factor i is old ``perm[i]``."""
    n = len(dims)
    t = op.reshape(tuple(dims) * 2)
    t = t.transpose(tuple(perm) + tuple(p + n for p in perm))
    d = int(np.prod(dims, dtype=int))
    return t.reshape(d, d)


def embed_operator(op: np.ndarray, layout: HilbertLayout, on: Sequence[str]) -> np.ndarray:
    """Lift ``op`` acting on subsystems ``on`` (in that order) to the full layout."""
    idx = [layout.index(label) for label in on]
    if len(set(idx)) != len(idx):
        raise ValueError(f"repeated subsystem in {list(on)}")
    dims = layout.dims
    target = int(np.prod([dims[i] for i in idx], dtype=int))
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (target, target):
        raise ValueError(f"operator shape {op.shape} does not match subsystems {list(on)} (dim {target})")
    rest = [i for i in range(len(dims)) if i not in idx]
    rest_dim = int(np.prod([dims[i] for i in rest], dtype=int))
    full = np.kron(op, np.eye(rest_dim))
    order = idx + rest  # factor order of ``full``
    ordered_dims = [dims[i] for i in order]
    perm = [order.index(i) for i in range(len(dims))]
    return _perm_operator(full, ordered_dims, perm)


def partial_trace(rho: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    """Trace out every subsystem not in ``keep``; the result keeps layout order."""
    keep = list(keep)
    kept_layout = rho.layout.sub(keep)
    dims = rho.layout.dims
    n = len(dims)
    keep_idx = [rho.layout.index(label) for label in kept_layout.labels]
    t = rho.matrix.reshape(dims * 2)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = [letters[n + i] if i in keep_idx else row[i] for i in range(n)]
    out = "".join(row[i] for i in keep_idx) + "".join(col[i] for i in keep_idx)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = kept_layout.dim
    return DensityOperator.from_matrix(kept_layout, reduced.reshape(d, d))


def is_projector(p: np.ndarray, tol: float = PROJECTOR_TOL) -> bool:
    p = np.asarray(p)
    return (
        p.ndim == 2
        and p.shape[0] == p.shape[1]
        and np.max(np.abs(p - p.conj().T)) <= tol
        and np.max(np.abs(p @ p - p)) <= tol
    )


def project(rho: DensityOperator, p_op: np.ndarray) -> tuple[float, DensityOperator]:
    """Probabilistic projection. Returns ``(Tr(P rho P), P rho P / prob)``.

    Raises :class:`NoHeraldError` when the success probability is below 1e-15.
    """
    p_op = np.asarray(p_op, dtype=np.complex128)
    if p_op.shape != rho.matrix.shape:
        raise ValueError(f"projector shape {p_op.shape} does not match state {rho.matrix.shape}")
    if not is_projector(p_op):
        raise ValueError("operator is not an orthogonal projector")
    unnorm = p_op @ rho.matrix @ p_op
    prob = float(np.trace(unnorm).real)
    if prob < NO_HERALD_PROB:
        raise NoHeraldError(f"projection probability {prob:.3e} is zero")
    return min(prob, 1.0), DensityOperator.from_matrix(rho.layout, unnorm / prob)


def state_fidelity(rho: DensityOperator | np.ndarray, psi) -> float:
    """``<psi|rho|psi>`` for a pure target state.

    Divides by ``<psi|psi>`` so kets built from ``1/sqrt2`` amplitudes carry no
    norm roundoff into the result.
    """
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    psi = as_pure_state(psi)
    if psi.shape[0] != m.shape[0]:
        raise ValueError(f"state dimension {psi.shape[0]} does not match operator dimension {m.shape[0]}")
    return float(np.vdot(psi, m @ psi).real / np.vdot(psi, psi).real)


def trace_distance(a, b) -> float:
    ma = a.matrix if isinstance(a, DensityOperator) else np.asarray(a)
    mb = b.matrix if isinstance(b, DensityOperator) else np.asarray(b)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(_hermitize(ma - mb))).sum())


def apply_channel(rho: DensityOperator, ch: QuantumChannel, on: Sequence[str]) -> DensityOperator:
    kraus = [embed_operator(k, rho.layout, on) for k in ch.kraus_ops]
    out = sum(k @ rho.matrix @ k.conj().T for k in kraus)
    return DensityOperator.from_matrix(rho.layout, out)


PAULI_Z = np.diag([1.0, -1.0]).astype(np.complex128)


def dephasing_channel(coherence: float) -> QuantumChannel:
    """Single-qubit phase damping that multiplies off-diagonals by ``coherence``.

    Applied to either qubit of a pair on the ``{|++>, |-->}`` span it scales
    the Phi+/Phi- coherence; ``coherence=0`` turns Phi+ into the equal
    Phi+/Phi- mixture.
    """
    c = float(coherence)
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"coherence must be in [0, 1], got {coherence!r}")
    return QuantumChannel((np.sqrt((1 + c) / 2) * np.eye(2), np.sqrt((1 - c) / 2) * PAULI_Z))


def physical_projection(m: np.ndarray) -> np.ndarray:
    """Nearest-state repair: Hermitize, clip negative eigenvalues, renormalize trace."""
    w, v = np.linalg.eigh(_hermitize(np.asarray(m, dtype=np.complex128)))
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValueError("matrix has no positive spectral weight")
    w = w / w.sum()
    return _hermitize((v * w) @ v.conj().T)
