"""Command-line entry point.

Subcommands: verify-identity, besov, fab, lipschitz, scan.  Batch
operation only: a config file (JSON or TOML) is the source of truth,
flags override its fields, and every run writes a manifest listing the
produced artifacts with content digests.

Exit codes: 0 success, 2 validation error, 3 numerical capability error.
Reports contain no timestamps, so a rerun with the same seed and thread
count is byte-identical; the manifest (which records wall time) is the
one file excluded from that contract.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .besov import besov_report
from .errors import CapabilityError, NumericalError, ValidationError
from .functions import parse_function_spec
from .integrals import f_of_pair, f_of_pair_sharp
from .lab import (
    ExperimentConfig,
    ExperimentReport,
    identity_experiment,
    lipschitz_experiment,
    p_above_2_scan,
)
from .spectral import hermitian_from_doc


@dataclass(frozen=True)
class RunManifest:
    """Provenance record for one CLI run."""

    command: str
    config_path: str
    output_dir: str
    seed: int
    tool_version: str
    wall_time: float
    files: dict

    def to_doc(self) -> dict:
        return {
            "command": self.command,
            "config_path": self.config_path,
            "output_dir": self.output_dir,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "wall_time": self.wall_time,
            "files": self.files,
        }


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _load_config(path: str) -> dict:
    if path is None:
        raise ValidationError("this command needs --config PATH")
    try:
        raw = open(path, "rb").read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc}") from exc
    if path.endswith(".toml"):
        try:
            import tomllib  # Python >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            return tomllib.loads(raw.decode("utf-8"))
        except Exception as exc:
            raise ValidationError(f"config {path!r} is not valid TOML: {exc}") from exc
    try:
        return json.loads(raw.decode("utf-8"))
    except Exception as exc:
        raise ValidationError(f"config {path!r} is not valid JSON: {exc}") from exc


def emit_plot_data(report: ExperimentReport) -> dict[str, str]:
    """Plot-ready CSV series for an experiment report.

    One file per (p, dim) pair with trial index vs ratio, plus a summary
    file of per-dimension maxima.  An empty report yields header-only
    files.
    """
    out: dict[str, str] = {}
    pairs = sorted({(t.p, t.dim) for t in report.trials})
    for p, dim in pairs:
        rows = [
            (i, t.ratio)
            for i, t in enumerate(report.trials)
            if t.p == p and t.dim == dim
        ]
        out[f"series_p{p:g}_dim{dim}.csv"] = _csv_text(["trial_index", "ratio"], rows)
    summary = []
    if report.trend is not None:
        summary = [(p, dim, mx) for p, dim, mx in report.trend]
    else:
        for p, dim in pairs:
            mx = max(t.ratio for t in report.trials if t.p == p and t.dim == dim)
            summary.append((p, dim, mx))
    out["summary.csv"] = _csv_text(["p", "dim", "max_ratio"], summary)
    if not pairs and not summary:
        out["summary.csv"] = _csv_text(["p", "dim", "max_ratio"], [])
    return out


def _trials_csv(report: ExperimentReport) -> str:
    rows = [
        (t.seed, t.dim, t.p, t.sigma, t.diff_norm, t.pert_norm, t.ratio)
        for t in report.trials
    ]
    return _csv_text(
        ["seed", "dim", "p", "sigma", "diff_norm", "pert_norm", "ratio"], rows
    )


def _identity_csv(report) -> str:
    rows = [
        (
            c.seed,
            c.dim,
            c.f_id,
            c.kind,
            c.lhs_norm,
            c.rhs_norm,
            c.residual_norm,
            c.relative_residual,
        )
        for c in report.checks
    ]
    return _csv_text(
        [
            "seed",
            "dim",
            "f_id",
            "kind",
            "lhs_norm",
            "rhs_norm",
            "residual_norm",
            "relative_residual",
        ],
        rows,
    )


def _cmd_verify_identity(args) -> dict[str, str]:
    doc = _load_config(args.config)
    doc.setdefault("mode", "identity")
    _apply_overrides(doc, args)
    report = identity_experiment(ExperimentConfig.from_doc(doc))
    return {
        "identity_report.json": _dump_json(report.to_doc()),
        "identity_checks.csv": _identity_csv(report),
    }


def _cmd_lipschitz(args) -> dict[str, str]:
    doc = _load_config(args.config)
    _apply_overrides(doc, args)
    report = lipschitz_experiment(ExperimentConfig.from_doc(doc))
    artifacts = {
        "experiment_report.json": _dump_json(report.to_doc()),
        "trials.csv": _trials_csv(report),
    }
    artifacts.update(emit_plot_data(report))
    return artifacts


def _cmd_scan(args) -> dict[str, str]:
    doc = _load_config(args.config)
    doc.setdefault("mode", "scan")
    _apply_overrides(doc, args)
    report = p_above_2_scan(ExperimentConfig.from_doc(doc))
    artifacts = {
        "scan_report.json": _dump_json(report.to_doc()),
        "trials.csv": _trials_csv(report),
    }
    artifacts.update(emit_plot_data(report))
    return artifacts


def _cmd_besov(args) -> dict[str, str]:
    if args.function:
        f = parse_function_spec(args.function)
    else:
        doc = _load_config(args.config)
        from .functions import catalog

        if "function" not in doc:
            raise ValidationError("besov config needs a 'function' field")
        spec = doc["function"]
        f = parse_function_spec(spec) if isinstance(spec, str) else catalog(spec)
    report = besov_report(f)
    rows = [
        (b["n"], b["contribution_lower"], b["contribution_upper"])
        for b in report.to_doc()["blocks"]
    ]
    return {
        "besov_report.json": _dump_json({"function": f.label, **report.to_doc()}),
        "besov_blocks.csv": _csv_text(["n", "lower", "upper"], rows),
    }


def _cmd_fab(args) -> dict[str, str]:
    if not args.A or not args.B or not args.f:
        raise ValidationError("fab needs --A, --B and --f")
    A = hermitian_from_doc(_load_config(args.A))
    B = hermitian_from_doc(_load_config(args.B))
    f = parse_function_spec(args.f)
    value = f_of_pair_sharp(f, A, B) if args.sharp else f_of_pair(f, A, B)
    sym = (value + value.conj().T) / 2
    doc = {
        "dim": value.shape[0],
        "entries": [[float(z.real), float(z.imag)] for z in value.reshape(-1)],
        "function": f.label,
        "route": "sharp" if args.sharp else "direct",
        "hermitian_defect": float(np.abs(value - sym).max()),
    }
    return {"fab_result.json": _dump_json(doc)}


def _apply_overrides(doc: dict, args) -> None:
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    threads = _resolve_threads(args)
    if threads is not None:
        doc["threads"] = threads


def _resolve_threads(args) -> int | None:
    if getattr(args, "threads", None) is not None:
        return args.threads
    env = os.environ.get("OPINT_THREADS")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValidationError(f"OPINT_THREADS must be an integer: {env!r}") from exc
    return None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opint",
        description="Operator-integral laboratory: identity checks, "
        "dyadic-decomposition norms, and perturbation experiments.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="config file (JSON or TOML)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker threads (default: OPINT_THREADS or 1)",
        )
        p.add_argument(
            "--format",
            choices=("json", "csv", "both"),
            default="both",
            help="which report formats to write",
        )

    common(sub.add_parser("verify-identity", help="run difference-identity checks"))
    common(sub.add_parser("lipschitz", help="run the perturbation ratio experiment"))
    common(sub.add_parser("scan", help="run the trend scan (p > 2 or p = inf)"))
    p_besov = sub.add_parser("besov", help="dyadic-decomposition norm of a function")
    common(p_besov)
    p_besov.add_argument("--function", help="catalog shorthand, e.g. plane_wave:2,0")
    p_fab = sub.add_parser("fab", help="assemble f(A, B) from matrix files")
    common(p_fab)
    p_fab.add_argument("--A", help="matrix document for A")
    p_fab.add_argument("--B", help="matrix document for B")
    p_fab.add_argument("--f", help="catalog shorthand for f")
    p_fab.add_argument(
        "--sharp",
        action="store_true",
        help="use the resolvent-weighted route",
    )
    return parser


_COMMANDS = {
    "verify-identity": _cmd_verify_identity,
    "lipschitz": _cmd_lipschitz,
    "scan": _cmd_scan,
    "besov": _cmd_besov,
    "fab": _cmd_fab,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.monotonic()
    try:
        artifacts = _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CapabilityError, NumericalError) as exc:
        print(
            f"error: {type(exc).__module__}.{type(exc).__name__}: {exc}",
            file=sys.stderr,
        )
        return 3

    fmt = args.format
    selected = {
        name: text
        for name, text in artifacts.items()
        if fmt == "both"
        or (fmt == "json" and name.endswith(".json"))
        or (fmt == "csv" and name.endswith(".csv"))
    }
    os.makedirs(args.out, exist_ok=True)
    digests = {}
    for name, text in sorted(selected.items()):
        data = text.encode("utf-8")
        with open(os.path.join(args.out, name), "wb") as fh:
            fh.write(data)
        digests[name] = hashlib.sha256(data).hexdigest()
    manifest = RunManifest(
        command=args.command,
        config_path=getattr(args, "config", None) or "",
        output_dir=args.out,
        seed=args.seed if args.seed is not None else -1,
        tool_version=__version__,
        wall_time=round(time.monotonic() - started, 6),
        files=digests,
    )
    with open(os.path.join(args.out, "run_manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(_dump_json(manifest.to_doc()))
    return 0


if __name__ == "__main__":
    sys.exit(main())
