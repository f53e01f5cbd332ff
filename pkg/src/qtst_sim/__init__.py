"""Density-matrix simulation of photon-to-nuclear-spin teleportation in an NV center."""

__version__ = "0.1.0"

from .nv import StrainParams  # noqa: E402
from .protocol import NoiseParams, PhotonState, QtstOutcome, QtstTransfer, run_qtst  # noqa: E402
from .quantum import DensityOperator, HilbertLayout, NoHeraldError, QuantumChannel  # noqa: E402
from .tomography import ChiMatrix, MeasurementRecord, ProcessTomography, StateTomography  # noqa: E402

__all__ = [
    "ChiMatrix",
    "DensityOperator",
    "HilbertLayout",
    "MeasurementRecord",
    "NoHeraldError",
    "NoiseParams",
    "PhotonState",
    "ProcessTomography",
    "QtstOutcome",
    "QtstTransfer",
    "QuantumChannel",
    "StateTomography",
    "StrainParams",
    "run_qtst",
]
