"""Experiment runner: protocol runs, sweeps, Monte Carlo checks, reports.

Subcommands
-----------
``protocol``      full run per register size: marginals, guess probability,
                  optimum, trade-off number, distinguishable baseline.
``sweep``         guess probability across a size range next to the closed
                  form 1 - 1/(2n) and the absolute deviation.
``montecarlo``    information-gain / entanglement equivalence over sampled
                  gates and device states; nonzero disagreements fail the
                  run with exit code 2.
``verify-kraus``  decide whether a Kraus set from a JSON file is a control
                  gate for the swap settings.
``tradeoff``      the two endpoint measurements of the value/location
                  trade-off per register size.

Reports are JSON objects one per line or CSV with a fixed column order per
command. Floats are printed with 17 significant digits so parsing recovers
every numeric field exactly. Each row carries the master seed; per-cell
PCG64 streams are derived from it with ``SeedSequence`` spawn keys, so a
config plus seed reproduces a report exactly. ``--deterministic`` drops the
timestamp field, making repeated runs byte-identical.

Exit codes: 0 success, 1 usage/config error, 2 theorem-check disagreement,
3 I/O error. The ``SWAPBIT_OUT_DIR`` environment variable supplies a
default output directory when ``--out`` is not given (falling back to
stdout when neither is set).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .entanglement import DEGENERATE_ALPHA_TOL, iff_theorem_check
from .gates import (
    GeneralizedControlGate,
    KrausSet,
    classical_gate,
    ideal_gate,
    kraus_set,
    random_density_operator,
    random_gate,
    verify_membership,
)
from .linalg import trace_distance
from .protocol import (
    build_report,
    canonical_measurement,
    distinguishable_baseline,
    helstrom_bound,
    location_tradeoff,
    reduced_device_states,
    run_protocol,
    setting_outcome_distribution,
    success_probability,
)

OUTPUT_DIR_ENV = "SWAPBIT_OUT_DIR"

KRAUS_FORMAT_VERSION = 1

GATE_FAMILIES = ("ideal", "classical", "random")

_COLUMNS = {
    "protocol": [
        "command", "n", "gate_family", "kraus_rank", "seed", "prior",
        "p_success", "helstrom_bound", "trace_distance_device",
        "location_guess_prob", "distinguishable_max_dev",
        "distinguishable_trace_distance", "rho_d_final_k0", "rho_d_final_k1",
        "artifact_version", "timestamp",
    ],
    "sweep": [
        "command", "n", "gate_family", "kraus_rank", "seed", "prior",
        "p_success", "closed_form", "abs_deviation", "helstrom_bound",
        "artifact_version", "timestamp",
    ],
    "montecarlo": [
        "command", "n", "gate_family", "kraus_rank", "seed", "samples",
        "agree", "disagree", "degenerate", "product_form_ok",
        "artifact_version", "timestamp",
    ],
    "tradeoff": [
        "command", "n", "seed", "setting_basis_location_prob",
        "outcome_distribution_deviation", "post_measurement_location_prob",
        "closed_form", "artifact_version", "timestamp",
    ],
    "verify-kraus": [
        "command", "file", "verdict", "n_settings", "dim", "kraus_rank",
        "gram", "witness_operator", "witness_row", "witness_col", "reason",
        "max_deviation", "artifact_version", "timestamp",
    ],
}


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 1."""


@dataclass
class ExperimentConfig:
    command: str
    n: int = 2
    n_max: int | None = None
    gate_family: str = "ideal"
    kraus_rank: int = 2
    seed: int = 0
    samples: int = 100
    prior: float = 0.5
    output_format: str = "json"
    out: str | None = None
    deterministic: bool = False
    kraus_file: str | None = None

    def validate(self) -> None:
        if self.command not in _COLUMNS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.n < 1:
            raise ConfigError(f"--n must be >= 1, got {self.n}")
        if self.n_max is not None and self.n_max < self.n:
            raise ConfigError(
                f"--n-max must be >= --n, got {self.n_max} < {self.n}"
            )
        if self.gate_family not in GATE_FAMILIES:
            raise ConfigError(
                f"--gate must be one of {'|'.join(GATE_FAMILIES)}, "
                f"got {self.gate_family!r}"
            )
        if self.gate_family == "random" and self.kraus_rank < 1:
            raise ConfigError(
                f"--kraus-rank must be >= 1 for the random family, "
                f"got {self.kraus_rank}"
            )
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"--seed must be a 64-bit integer, got {self.seed}")
        if self.samples < 1:
            raise ConfigError(f"--samples must be >= 1, got {self.samples}")
        if not 0.0 <= self.prior <= 1.0:
            raise ConfigError(f"--prior must be in [0, 1], got {self.prior}")
        if self.output_format not in ("json", "csv"):
            raise ConfigError(
                f"--format must be json or csv, got {self.output_format!r}"
            )
        if self.command == "tradeoff" and self.n < 2:
            raise ConfigError("tradeoff needs --n >= 2")
        if self.command == "verify-kraus" and not self.kraus_file:
            raise ConfigError("verify-kraus needs an input file")

    def n_values(self) -> range:
        hi = self.n if self.n_max is None else self.n_max
        return range(self.n, hi + 1)


def format_float(x: float) -> str:
    """17 significant digits: enough to reparse any double exactly."""
    return f"{x:.17g}"


def _json_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_json_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)!r}")


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (list, tuple)):
        return _json_value(v)
    raise TypeError(f"cannot serialize {type(v)!r}")


class ReportWriter:
    """Emits records in a fixed column order as JSON lines or CSV rows."""

    def __init__(self, stream, output_format: str, columns: list[str]):
        self._stream = stream
        self._format = output_format
        self._columns = columns
        self._csv = None
        if output_format == "csv":
            self._csv = csv.writer(stream, lineterminator="\n")
            self._csv.writerow(columns)

    def write(self, record: dict) -> None:
        if self._csv is not None:
            self._csv.writerow([_csv_cell(record.get(c)) for c in self._columns])
        else:
            body = ",".join(
                f"{json.dumps(c)}:{_json_value(record.get(c))}" for c in self._columns
            )
            self._stream.write("{" + body + "}\n")


def matrix_to_pairs(m: np.ndarray) -> list[list[float]]:
    """Row-major [re, im] pairs, the wire format for complex matrices."""
    flat = np.asarray(m, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def pairs_to_matrix(pairs, rows: int, cols: int, name: str = "matrix") -> np.ndarray:
    if len(pairs) != rows * cols:
        raise ConfigError(
            f"field '{name}': expected {rows * cols} [re, im] pairs, got {len(pairs)}"
        )
    flat = np.empty(rows * cols, dtype=complex)
    for i, pair in enumerate(pairs):
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) for x in pair)
        ):
            raise ConfigError(f"field '{name}[{i}]': expected an [re, im] pair")
        flat[i] = complex(pair[0], pair[1])
    return flat.reshape(rows, cols)


def save_kraus_file(path: str, kraus: KrausSet, n_settings: int) -> None:
    """Write a Kraus set in the versioned JSON wire format."""
    payload = {
        "format_version": KRAUS_FORMAT_VERSION,
        "n_settings": n_settings,
        "dim": kraus.dim,
        "operators": [matrix_to_pairs(op) for op in kraus.operators],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_kraus_file(path: str) -> tuple[KrausSet, int]:
    """Parse the Kraus JSON wire format with field-level diagnostics."""
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    version = data.get("format_version")
    if version != KRAUS_FORMAT_VERSION:
        raise ConfigError(
            f"field 'format_version': expected {KRAUS_FORMAT_VERSION}, got {version!r}"
        )
    n = data.get("n_settings")
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"field 'n_settings': expected a positive integer, got {n!r}")
    dim = data.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError(f"field 'dim': expected a positive integer, got {dim!r}")
    if dim != n * (n + 1):
        raise ConfigError(
            f"field 'dim': expected n_settings*(n_settings+1) = {n * (n + 1)} "
            f"for the swap gate family, got {dim}"
        )
    ops = data.get("operators")
    if not isinstance(ops, list) or not ops:
        raise ConfigError("field 'operators': expected a non-empty list")
    matrices = [
        pairs_to_matrix(op, dim, dim, name=f"operators[{i}]")
        for i, op in enumerate(ops)
    ]
    try:
        return KrausSet(tuple(matrices)), n
    except ValueError as exc:
        raise ConfigError(f"{path}: not a channel: {exc}") from exc


def _cell_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _make_gate(cfg: ExperimentConfig, n: int) -> tuple[GeneralizedControlGate, int]:
    """Gate for one sweep cell plus the kraus rank echoed in the report."""
    if cfg.gate_family == "ideal":
        return ideal_gate(n), 1
    if cfg.gate_family == "classical":
        return classical_gate(n), n
    rng = _cell_rng(cfg.seed, n)
    return random_gate(n, cfg.kraus_rank, rng), cfg.kraus_rank


def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _base_record(cfg: ExperimentConfig) -> dict:
    record = {"command": cfg.command, "artifact_version": __version__}
    if not cfg.deterministic:
        record["timestamp"] = _timestamp()
    return record


def cmd_protocol(cfg: ExperimentConfig, writer: ReportWriter) -> int:
    for n in cfg.n_values():
        gate, rank = _make_gate(cfg, n)
        report = build_report(n, gate, cfg.gate_family, prior=cfg.prior)
        base0 = distinguishable_baseline(n, 0)
        base1 = distinguishable_baseline(n, 1)
        mixed = np.eye(n) / n
        max_dev = max(
            float(np.abs(base0 - mixed).max()), float(np.abs(base1 - mixed).max())
        )
        record = _base_record(cfg)
        record.update(
            n=n,
            gate_family=cfg.gate_family,
            kraus_rank=rank,
            seed=cfg.seed,
            prior=cfg.prior,
            p_success=report.p_success,
            helstrom_bound=report.helstrom_bound,
            trace_distance_device=report.trace_distance_device,
            location_guess_prob=report.location_guess_prob,
            distinguishable_max_dev=max_dev,
            distinguishable_trace_distance=trace_distance(base0, base1),
            rho_d_final_k0=matrix_to_pairs(report.rho_d_final_k0),
            rho_d_final_k1=matrix_to_pairs(report.rho_d_final_k1),
        )
        writer.write(record)
    return 0


def cmd_sweep(cfg: ExperimentConfig, writer: ReportWriter) -> int:
    for n in cfg.n_values():
        gate, rank = _make_gate(cfg, n)
        rho0, rho1 = reduced_device_states(n, gate, _uniform_preparation(n))
        measurement = canonical_measurement(n, _uniform_preparation(n))
        p = success_probability(rho0, rho1, measurement, cfg.prior)
        closed = 1.0 - 1.0 / (2.0 * n)
        record = _base_record(cfg)
        record.update(
            n=n,
            gate_family=cfg.gate_family,
            kraus_rank=rank,
            seed=cfg.seed,
            prior=cfg.prior,
            p_success=p,
            closed_form=closed,
            abs_deviation=abs(p - closed),
            helstrom_bound=helstrom_bound(rho0, rho1, cfg.prior),
        )
        writer.write(record)
    return 0


def _uniform_preparation(n: int) -> np.ndarray:
    phi = np.full(n, 1.0 / np.sqrt(n), dtype=complex)
    return np.outer(phi, phi.conj())


def run_montecarlo_cell(
    n: int, gate_family: str, kraus_rank: int, samples: int, seed: int
) -> dict:
    """One Monte Carlo cell: sampled (gate, device state) equivalence counts.

    Samples whose largest off-diagonal overlap magnitude is at or below the
    degenerate threshold are bucketed separately instead of being forced
    into agree/disagree.
    """
    agree = disagree = degenerate = product_ok = 0
    for i in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, i)))
        if gate_family == "ideal":
            gate = ideal_gate(n)
        elif gate_family == "classical":
            gate = classical_gate(n)
        else:
            gate = random_gate(n, kraus_rank, rng)
        rank = 1 if rng.random() < 0.5 else None
        rho_d = random_density_operator(n, rng, rank=rank)
        rec = iff_theorem_check(gate, rho_d)
        if rec.separable_k0_certified:
            product_ok += 1
        if rec.max_offdiag_alpha <= DEGENERATE_ALPHA_TOL:
            degenerate += 1
        elif rec.info_gain == rec.npt_k1:
            agree += 1
        else:
            disagree += 1
    return {
        "agree": agree,
        "disagree": disagree,
        "degenerate": degenerate,
        "product_form_ok": product_ok,
    }


def cmd_montecarlo(cfg: ExperimentConfig, writer: ReportWriter) -> int:
    total_disagree = 0
    for n in cfg.n_values():
        counts = run_montecarlo_cell(
            n, cfg.gate_family, cfg.kraus_rank, cfg.samples, cfg.seed
        )
        total_disagree += counts["disagree"]
        record = _base_record(cfg)
        record.update(
            n=n,
            gate_family=cfg.gate_family,
            kraus_rank=cfg.kraus_rank if cfg.gate_family == "random" else None,
            seed=cfg.seed,
            samples=cfg.samples,
            **counts,
        )
        writer.write(record)
    return 2 if total_disagree > 0 else 0


def cmd_tradeoff(cfg: ExperimentConfig, writer: ReportWriter) -> int:
    for n in cfg.n_values():
        setting_prob, value_prob = location_tradeoff(n)
        gate = ideal_gate(n)
        rho_d = _uniform_preparation(n)
        p0 = setting_outcome_distribution(run_protocol(n, gate, rho_d, 0), n)
        p1 = setting_outcome_distribution(run_protocol(n, gate, rho_d, 1), n)
        record = _base_record(cfg)
        record.update(
            n=n,
            seed=cfg.seed,
            setting_basis_location_prob=setting_prob,
            outcome_distribution_deviation=float(np.abs(p0 - p1).max()),
            post_measurement_location_prob=value_prob,
            closed_form=1.0 / n,
        )
        writer.write(record)
    return 0


def cmd_verify_kraus(cfg: ExperimentConfig, writer: ReportWriter) -> int:
    kraus, n = load_kraus_file(cfg.kraus_file)
    verdict = verify_membership(kraus, n)
    record = _base_record(cfg)
    record.update(
        file=cfg.kraus_file,
        verdict="member" if verdict.is_member else "not_member",
        n_settings=n,
        dim=kraus.dim,
        kraus_rank=len(kraus),
        gram=matrix_to_pairs(verdict.gram()) if verdict.is_member else None,
        witness_operator=None if verdict.witness is None else verdict.witness[0],
        witness_row=None if verdict.witness is None else verdict.witness[1],
        witness_col=None if verdict.witness is None else verdict.witness[2],
        reason=verdict.reason,
        max_deviation=verdict.max_deviation,
    )
    writer.write(record)
    return 0


_COMMANDS = {
    "protocol": cmd_protocol,
    "sweep": cmd_sweep,
    "montecarlo": cmd_montecarlo,
    "tradeoff": cmd_tradeoff,
    "verify-kraus": cmd_verify_kraus,
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swapbit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, parser_class=_Parser)
        p.add_argument("--n", type=int, default=None, help="register size (default 2)")
        p.add_argument("--n-max", type=int, default=None, dest="n_max",
                       help="sweep up to this size inclusive")
        p.add_argument("--gate", choices=GATE_FAMILIES, default=None,
                       help="gate family (default ideal)")
        p.add_argument("--kraus-rank", type=int, default=None, dest="kraus_rank",
                       help="overlap-vector dimension for the random family (default 2)")
        p.add_argument("--seed", type=int, default=None,
                       help="64-bit master seed (default 0)")
        p.add_argument("--samples", type=int, default=None,
                       help="Monte Carlo samples per cell (default 100)")
        p.add_argument("--prior", type=float, default=None,
                       help="probability the hidden bit is 0 (default 0.5)")
        p.add_argument("--format", choices=("json", "csv"), default=None,
                       dest="output_format", help="report format (default json)")
        p.add_argument("--out", default=None, help="output path")
        p.add_argument("--deterministic", action="store_true", default=None,
                       help="drop the timestamp field for byte-identical reruns")
        p.add_argument("--config", default=None,
                       help="JSON file of defaults, overridden by explicit flags")
        if name == "verify-kraus":
            p.add_argument("kraus_file", help="Kraus-set JSON file to check")
    return parser


_CONFIG_KEYS = (
    "n", "n_max", "gate_family", "kraus_rank", "seed", "samples", "prior",
    "output_format", "out", "deterministic",
)

_CONFIG_ALIASES = {"gate": "gate_family", "format": "output_format"}


def _load_config_file(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config file must hold a JSON object")
    out = {}
    for key, value in data.items():
        key = _CONFIG_ALIASES.get(key, key)
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}: unknown config key {key!r}")
        out[key] = value
    return out


def merge_config(args: argparse.Namespace) -> ExperimentConfig:
    """CLI flags override config-file values override built-in defaults."""
    file_vals = _load_config_file(args.config) if args.config else {}
    cfg = ExperimentConfig(command=args.command)

    def pick(arg_name: str, key: str, default):
        explicit = getattr(args, arg_name, None)
        if explicit is not None:
            return explicit
        if file_vals.get(key) is not None:
            return file_vals[key]
        return default

    cfg.n = pick("n", "n", 2)
    cfg.n_max = pick("n_max", "n_max", None)
    cfg.gate_family = pick("gate", "gate_family", "ideal")
    cfg.kraus_rank = pick("kraus_rank", "kraus_rank", 2)
    cfg.seed = pick("seed", "seed", 0)
    cfg.samples = pick("samples", "samples", 100)
    cfg.prior = pick("prior", "prior", 0.5)
    cfg.output_format = pick("output_format", "output_format", "json")
    cfg.out = pick("out", "out", None)
    cfg.deterministic = bool(pick("deterministic", "deterministic", False))
    cfg.kraus_file = getattr(args, "kraus_file", None)
    cfg.validate()
    return cfg


def _resolve_output(cfg: ExperimentConfig):
    """Output stream per --out, then SWAPBIT_OUT_DIR, then stdout."""
    if cfg.out:
        path = cfg.out
    else:
        out_dir = os.environ.get(OUTPUT_DIR_ENV)
        if not out_dir:
            return sys.stdout, False
        ext = "csv" if cfg.output_format == "csv" else "json"
        path = os.path.join(out_dir, f"{cfg.command}.{ext}")
    return open(path, "w", newline=""), True


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = merge_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    columns = list(_COLUMNS[cfg.command])
    if cfg.deterministic:
        columns.remove("timestamp")

    try:
        stream, owned = _resolve_output(cfg)
    except OSError as exc:
        print(f"error: cannot open output: {exc}", file=sys.stderr)
        return 3

    try:
        writer = ReportWriter(stream, cfg.output_format, columns)
        return _COMMANDS[cfg.command](cfg, writer)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 3
    finally:
        if owned:
            stream.close()


if __name__ == "__main__":
    sys.exit(main())
