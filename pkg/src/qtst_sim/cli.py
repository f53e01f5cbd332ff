"""``qtst-sim`` command line.

::

    qtst-sim <subcommand> [--config PATH] [--seed N] [--shots N] [--out DIR] [--set key=value ...]

Each subcommand writes plot-ready CSV files (one row per grid point) and a
``<name>.meta.json`` sidecar holding every effective parameter. Failures exit
nonzero with one line on stderr: ``qtst-sim: error: <kind>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from ._rng import PRNG_ID
from .config import ConfigError, RunConfig, parse_config
from .experiments import (
    SweepResult,
    entanglement_decay,
    rate_compare,
    revision,
    sweep_arrival_time,
    sweep_frequency,
    transfer_summary,
)
from .tomography import ESTIMATOR_ID

SUBCOMMANDS = ("sweep-freq", "sweep-time", "ent-decay", "transfer", "rates")


def fmt(x) -> str:
    return f"{float(x):.12g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _sweep_rows(result: SweepResult, columns: list[tuple[str, int]]):
    for i, x in enumerate(result.axis):
        yield [x] + [result.series[name][which][i] for name, which in columns]


def _run_sweep_freq(cfg: RunConfig, out: Path) -> dict:
    r = sweep_frequency(cfg.grid("detunings_mhz"), cfg.noise, cfg.shots, cfg.seed, cfg.resamples)
    write_csv(
        out / "sweep_freq.csv",
        ["detuning_mhz", "avg_fidelity", "fidelity_stddev", "herald_prob"],
        _sweep_rows(r, [("avg_fidelity", 0), ("avg_fidelity", 1), ("herald_prob", 0)]),
    )
    return {"sweep_freq.csv": "six-input average fidelity and herald probability"}


def _run_sweep_time(cfg: RunConfig, out: Path) -> dict:
    r = sweep_arrival_time(cfg.grid("delays_us"), cfg.transfer_noise, cfg.shots, cfg.seed, cfg.resamples)
    write_csv(
        out / "sweep_time.csv",
        ["delay_us", "basis_fidelity", "basis_stddev", "superposition_fidelity", "superposition_stddev"],
        _sweep_rows(
            r,
            [("basis_fidelity", 0), ("basis_fidelity", 1), ("superposition_fidelity", 0), ("superposition_fidelity", 1)],
        ),
    )
    return {"sweep_time.csv": "basis (|+-1>) and superposition input fidelities versus delay"}


def _run_ent_decay(cfg: RunConfig, out: Path) -> dict:
    r = entanglement_decay(cfg.grid("delays_us"), cfg.noise, cfg.shots, cfg.seed, cfg.resamples)
    write_csv(
        out / "ent_decay.csv",
        ["delay_us", "fidelity", "fidelity_stddev"],
        _sweep_rows(r, [("fidelity", 0), ("fidelity", 1)]),
    )
    return {"ent_decay.csv": "electron-nuclear Phi+ fidelity versus delay"}


def _run_transfer(cfg: RunConfig, out: Path) -> dict:
    s = transfer_summary(cfg.noise, cfg.shots, cfg.seed, cfg.resamples)
    rows = [[k, f, e, leak, h] for k, f, e, leak, h in zip(s.labels, s.fidelities, s.stddevs, s.leaks, s.herald_probs)]
    rows.append(["average", s.average, s.average_stddev, float(s.leaks.mean()), float(s.herald_probs.mean())])
    write_csv(out / "transfer.csv", ["input", "fidelity", "fidelity_stddev", "leak_prob", "herald_prob"], rows)
    labels = s.chi.LABELS
    chi_rows = [
        [labels[m] + labels[n], s.chi.entries[m, n].real, s.chi.entries[m, n].imag]
        for m in range(4)
        for n in range(4)
    ]
    write_csv(out / "transfer_chi.csv", ["element", "real", "imag"], chi_rows)
    return {
        "transfer.csv": "per-input transfer fidelities and their average",
        "transfer_chi.csv": "process chi matrix over (I, X, Y, Z)",
    }


def _run_rates(cfg: RunConfig, out: Path) -> dict:
    r = rate_compare(cfg.grid("lengths_km"), cfg.rates)
    write_csv(
        out / "rates.csv",
        ["length_km", "eta", "rate_one_photon_hz", "rate_two_photon_hz"],
        _sweep_rows(r, [("eta", 0), ("rate_one_photon", 0), ("rate_two_photon", 0)]),
    )
    return {"rates.csv": "one-photon versus two-photon/QTST entanglement rates", **{
        k: v for k, v in r.metadata.items() if k.startswith("crossover")
    }}


_RUNNERS = {
    "sweep-freq": _run_sweep_freq,
    "sweep-time": _run_sweep_time,
    "ent-decay": _run_ent_decay,
    "transfer": _run_transfer,
    "rates": _run_rates,
}


def run_subcommand(name: str, cfg: RunConfig) -> int:
    """Run one subcommand and write its CSV files plus metadata into ``cfg.out``."""
    if name not in _RUNNERS:
        raise ValueError(f"unknown subcommand {name!r}; expected one of {', '.join(SUBCOMMANDS)}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = _RUNNERS[name](cfg, out)
    meta = {
        "tool": "qtst-sim",
        "version": __version__,
        "revision": revision(),
        "subcommand": name,
        "seed": cfg.seed,
        "shots": cfg.shots,
        "prng": PRNG_ID,
        "estimator": ESTIMATOR_ID,
        "config": cfg.snapshot(),
        "outputs": outputs,
    }
    stem = name.replace("-", "_")
    (out / f"{stem}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtst-sim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=Path, help="TOML configuration file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--shots", type=int, help="readouts per basis; 0 = exact mode")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    return parser


def _fail(kind: str, message: str) -> int:
    print(f"qtst-sim: error: {kind}: {' '.join(str(message).split())}", file=sys.stderr)
    return 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    overrides = list(args.overrides)
    for flag, key in ((args.seed, "run.seed"), (args.shots, "run.shots")):
        if flag is not None:
            overrides.append(f"{key}={flag}")
    if args.out is not None:
        overrides.append(f"run.out={json.dumps(args.out)}")

    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
    except OSError as exc:
        return _fail("io", exc)
    try:
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        return _fail("config", exc)
    try:
        return run_subcommand(args.subcommand, cfg)
    except OSError as exc:
        return _fail("io", exc)
    except Exception as exc:  # noqa: BLE001 - single-line error contract
        return _fail(type(exc).__name__, exc)


if __name__ == "__main__":
    sys.exit(main())
