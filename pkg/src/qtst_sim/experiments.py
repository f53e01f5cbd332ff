"""Parameter sweeps and the entanglement-rate scaling comparison.

``shots == 0`` selects exact mode: every fidelity is computed from the model
state and the reported standard deviation is zero. With ``shots > 0`` each
grid point simulates ``shots`` readouts per measurement basis, reconstructs by
tomography and attaches parametric-bootstrap error bars. Grid point ``i``
draws from the substream ``(seed, i)``, so results do not depend on the
evaluation order or the thread count.
"""

from __future__ import annotations

import dataclasses
import os
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from ._rng import PRNG_ID, make_rng
from .nv import bell_phi_plus_eN
from .protocol import (
    BASIS_INPUTS,
    SIX_INPUTS,
    SUPERPOSITION_INPUTS,
    NoiseParams,
    dephase_eN,
    prepare_entangled,
    run_qtst,
)
from .quantum import state_fidelity
from .tomography import (
    BASES,
    CORRELATOR_BASES,
    ESTIMATOR_ID,
    ChiMatrix,
    bell_fidelity_from_correlators,
    bootstrap_errorbar,
    qpt,
    qst,
    simulate_correlator,
    simulate_counts,
)

DEFAULT_DETUNINGS = np.linspace(-100.0, 100.0, 21)  # MHz
DEFAULT_DELAYS = np.linspace(0.0, 3.0, 31)  # us
DEFAULT_LENGTHS = np.linspace(0.0, 100.0, 20)  # km
DEFAULT_RESAMPLES = 200


@dataclass
class SweepResult:
    axis_name: str
    axis_unit: str
    axis: np.ndarray
    series: dict[str, tuple[np.ndarray, np.ndarray]]  # name -> (estimate, stddev)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        n = len(self.axis)
        for name, (est, std) in self.series.items():
            if len(est) != n or len(std) != n:
                raise ValueError(f"series {name!r} length does not match axis length {n}")

    def estimate(self, name: str) -> np.ndarray:
        return self.series[name][0]

    def stddev(self, name: str) -> np.ndarray:
        return self.series[name][1]


@dataclass(frozen=True)
class RateParams:
    """Link parameters for the rate comparison. ``repetition_rate`` in Hz."""

    p_zpl: float = 0.03
    attenuation_db_per_km: float = 0.2
    repetition_rate: float = 1e6
    length_km: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.p_zpl <= 1.0:
            raise ValueError(f"p_zpl must be in (0, 1], got {self.p_zpl!r}")
        if not self.length_km >= 0:
            raise ValueError(f"length_km must be >= 0, got {self.length_km!r}")
        if not self.attenuation_db_per_km >= 0:
            raise ValueError(f"attenuation_db_per_km must be >= 0, got {self.attenuation_db_per_km!r}")
        if not self.repetition_rate > 0:
            raise ValueError(f"repetition_rate must be > 0, got {self.repetition_rate!r}")


@dataclass
class TransferSummary:
    labels: tuple[str, ...]
    fidelities: np.ndarray
    stddevs: np.ndarray
    average: float
    average_stddev: float
    leaks: np.ndarray
    herald_probs: np.ndarray
    chi: ChiMatrix
    metadata: dict = field(default_factory=dict)


def thread_count() -> int:
    """Worker cap from ``QTST_SIM_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("QTST_SIM_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError(f"QTST_SIM_THREADS must be >= 0, got {raw!r}")
    return n or (os.cpu_count() or 1)


def _ordered_map(fn: Callable, items: Sequence) -> list:
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def revision() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return f"v{__version__}"
    sha = out.stdout.strip()
    return f"v{__version__}-g{sha}" if out.returncode == 0 and sha else f"v{__version__}"


def params_snapshot(obj) -> dict:
    return dataclasses.asdict(obj)


def _metadata(params: dict, shots: int, seed: int, resamples: int) -> dict:
    meta = {"params": params, "shots": int(shots), "seed": int(seed), "revision": revision()}
    if shots:
        meta.update(prng=PRNG_ID, estimator=ESTIMATOR_ID, resamples=int(resamples))
    return meta


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).reshape(-1)
    if g.size == 0:
        raise ValueError("grid must be nonempty")
    return g


def _mean_fidelity_estimator(labels: Sequence[str]) -> Callable:
    """Estimator over records ordered input-major, basis-minor (X, Y, Z per input)."""
    n = len(BASES)

    def estimator(recs):
        return float(
            np.mean([qst(recs[i * n : (i + 1) * n]).fidelity(SIX_INPUTS[k].ket) for i, k in enumerate(labels)])
        )

    return estimator


def _sample_records(outcomes: dict, labels: Sequence[str], shots: int, rng) -> list:
    return [simulate_counts(outcomes[k].rho_nuclear, b, shots, rng) for k in labels for b in BASES]


def _mean_fidelity(outcomes: dict, labels: Sequence[str], shots: int, key: tuple, resamples: int):
    """Average transfer fidelity over ``labels`` and its bootstrap error."""
    if shots == 0:
        fids = [outcomes[k].fidelity(SIX_INPUTS[k]) for k in labels]
        return float(np.mean(fids)), 0.0
    records = _sample_records(outcomes, labels, shots, make_rng(key))
    return bootstrap_errorbar(records, _mean_fidelity_estimator(labels), resamples, seed=key + (1,))


def sweep_frequency(
    grid=DEFAULT_DETUNINGS,
    np_: NoiseParams | None = None,
    shots: int = 0,
    seed: int = 0,
    resamples: int = DEFAULT_RESAMPLES,
) -> SweepResult:
    """Six-input average fidelity and herald probability versus detuning (MHz)."""
    np_ = NoiseParams() if np_ is None else np_
    grid = _check_grid(grid)
    labels = tuple(SIX_INPUTS)

    def point(i):
        outcomes = {k: run_qtst(SIX_INPUTS[k], grid[i], 0.0, np_) for k in labels}
        fid = _mean_fidelity(outcomes, labels, shots, (seed, i), resamples)
        herald = float(np.mean([o.herald_prob for o in outcomes.values()]))
        return fid, herald

    rows = _ordered_map(point, range(len(grid)))
    fid = np.array([r[0] for r in rows])
    herald = np.array([r[1] for r in rows])
    return SweepResult(
        "detuning",
        "MHz",
        grid,
        {"avg_fidelity": (fid[:, 0], fid[:, 1]), "herald_prob": (herald, np.zeros_like(herald))},
        _metadata(params_snapshot(np_), shots, seed, resamples),
    )


def sweep_arrival_time(
    grid=DEFAULT_DELAYS,
    np_: NoiseParams | None = None,
    shots: int = 0,
    seed: int = 0,
    resamples: int = DEFAULT_RESAMPLES,
) -> SweepResult:
    """Basis-input and superposition-input average fidelities versus delay (us)."""
    np_ = NoiseParams() if np_ is None else np_
    grid = _check_grid(grid)

    def point(i):
        outcomes = {k: run_qtst(p, 0.0, grid[i], np_) for k, p in SIX_INPUTS.items()}
        return (
            _mean_fidelity(outcomes, BASIS_INPUTS, shots, (seed, i, 0), resamples),
            _mean_fidelity(outcomes, SUPERPOSITION_INPUTS, shots, (seed, i, 1), resamples),
        )

    rows = np.array(_ordered_map(point, range(len(grid))))
    return SweepResult(
        "delay",
        "us",
        grid,
        {
            "basis_fidelity": (rows[:, 0, 0], rows[:, 0, 1]),
            "superposition_fidelity": (rows[:, 1, 0], rows[:, 1, 1]),
        },
        _metadata(params_snapshot(np_), shots, seed, resamples),
    )


def entanglement_decay(
    grid=DEFAULT_DELAYS,
    np_: NoiseParams | None = None,
    shots: int = 0,
    seed: int = 0,
    resamples: int = DEFAULT_RESAMPLES,
) -> SweepResult:
    """Phi+ fidelity of the dephased e-N state versus delay (us).

    Sampled mode estimates the fidelity from XX, YY and ZZ parity counts.
    """
    np_ = NoiseParams() if np_ is None else np_
    grid = _check_grid(grid)
    prepared = prepare_entangled(np_)
    phi = bell_phi_plus_eN()

    def point(i):
        rho = dephase_eN(prepared, grid[i], np_)
        if shots == 0:
            return state_fidelity(rho, phi), 0.0
        rng = make_rng(seed, i)
        records = [simulate_correlator(rho, b, shots, rng) for b in CORRELATOR_BASES]
        return bootstrap_errorbar(records, bell_fidelity_from_correlators, resamples, seed=(seed, i, 1))

    rows = np.array(_ordered_map(point, range(len(grid))))
    return SweepResult(
        "delay",
        "us",
        grid,
        {"fidelity": (rows[:, 0], rows[:, 1])},
        _metadata(params_snapshot(np_), shots, seed, resamples),
    )


def transfer_summary(
    np_: NoiseParams | None = None,
    shots: int = 0,
    seed: int = 0,
    resamples: int = DEFAULT_RESAMPLES,
) -> TransferSummary:
    """Per-input fidelities, their average and the process chi matrix at zero detuning and delay."""
    np_ = NoiseParams() if np_ is None else np_
    labels = tuple(SIX_INPUTS)
    outcomes = {k: run_qtst(SIX_INPUTS[k], 0.0, 0.0, np_) for k in labels}
    herald = np.array([outcomes[k].herald_prob for k in labels])

    if shots == 0:
        fids = np.array([outcomes[k].fidelity(SIX_INPUTS[k]) for k in labels])
        stds = np.zeros(len(labels))
        leaks = np.array([outcomes[k].leak_prob for k in labels])
        avg, avg_std = float(fids.mean()), 0.0
        chi = qpt([SIX_INPUTS[k] for k in labels], [outcomes[k].rho_nuclear for k in labels])
    else:
        records = _sample_records(outcomes, labels, shots, make_rng(seed, 0))
        n = len(BASES)
        per_input = {k: records[j * n : (j + 1) * n] for j, k in enumerate(labels)}
        fids, stds = np.array(
            [
                bootstrap_errorbar(
                    per_input[k], lambda r, k=k: qst(r).fidelity(SIX_INPUTS[k].ket), resamples, seed=(seed, 1, j)
                )
                for j, k in enumerate(labels)
            ]
        ).T
        avg, avg_std = bootstrap_errorbar(records, _mean_fidelity_estimator(labels), resamples, seed=(seed, 2))
        fits = {k: qst(per_input[k]) for k in labels}
        leaks = np.array([fits[k].leak for k in labels])
        chi = qpt([SIX_INPUTS[k] for k in labels], [fits[k].rho for k in labels])

    return TransferSummary(
        labels=labels,
        fidelities=np.asarray(fids, dtype=float),
        stddevs=np.asarray(stds, dtype=float),
        average=float(avg),
        average_stddev=float(avg_std),
        leaks=leaks,
        herald_probs=herald,
        chi=chi,
        metadata=_metadata(params_snapshot(np_), shots, seed, resamples),
    )


def transmittance(length_km, attenuation_db_per_km: float):
    return 10.0 ** (-attenuation_db_per_km * np.asarray(length_km, dtype=float) / 10.0)


def crossover_transmittance(p_zpl: float) -> float:
    """Transmittance where ``p sqrt(eta) == p^2 eta``, i.e. ``eta = 1/p^2``.

    For ``p < 1`` this lies above 1, so the one-photon rate is larger at every
    physical transmittance and the curves only touch at ``p = 1, eta = 1``.
    """
    return 1.0 / p_zpl**2


def rates_at(rp: RateParams) -> tuple[float, float, float]:
    """``(eta, one-photon rate, two-photon/QTST rate)`` at ``rp.length_km``."""
    eta = float(transmittance(rp.length_km, rp.attenuation_db_per_km))
    return eta, rp.repetition_rate * rp.p_zpl * np.sqrt(eta), rp.repetition_rate * rp.p_zpl**2 * eta


def rate_compare(lengths=DEFAULT_LENGTHS, rp: RateParams | None = None) -> SweepResult:
    """One-photon (``p sqrt(eta)``) versus two-photon and QTST (``p^2 eta``) rates over distance."""
    rp = RateParams() if rp is None else rp
    lengths = _check_grid(lengths)
    if np.any(lengths < 0):
        raise ValueError("lengths must be >= 0")
    rows = np.array([rates_at(dataclasses.replace(rp, length_km=float(L))) for L in lengths])
    zeros = np.zeros(len(lengths))
    eta_star = crossover_transmittance(rp.p_zpl)
    meta = {"params": params_snapshot(rp), "crossover_eta": eta_star, "revision": revision()}
    meta["crossover_physical"] = bool(eta_star <= 1.0)
    if rp.attenuation_db_per_km > 0 and eta_star <= 1.0:
        meta["crossover_length_km"] = float(-10.0 * np.log10(eta_star) / rp.attenuation_db_per_km)
    return SweepResult(
        "length",
        "km",
        lengths,
        {
            "eta": (rows[:, 0], zeros),
            "rate_one_photon": (rows[:, 1], zeros),
            "rate_two_photon": (rows[:, 2], zeros),
        },
        meta,
    )
