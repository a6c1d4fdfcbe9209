"""Command-line experiment runner.

Each subcommand runs one verification and writes two files: a CSV table of
result rows and a JSON summary holding the same rows plus the full effective
configuration. The exit status is 0 only if every row passed.

Settings are resolved as: built-in defaults, then a JSON ``--config`` file,
then ``BHH_*`` environment variables, then command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import experiments
from .experiments import ResultRow
from .nnstats import Policy
from .tsp import Mode

log = logging.getLogger("bhh_bounds")

ENV_PREFIX = "BHH_"

COMMANDS = {
    "verify-constants": "VerifyConstants",
    "verify-integrals": "VerifyIntegrals",
    "simulate-nn": "SimulateNN",
    "event-prob": "EventProb",
    "estimate-bounds": "EstimateBounds",
    "estimate-beta": "EstimateBeta",
}

CSV_FIELDS = ["quantity", "paper_value", "computed_value", "error", "passed", "seed", "trials", "n"]


@dataclass
class ExperimentConfig:
    command: str
    intensity: float = 1000.0
    n: int = 500
    trials: int = 200
    seed: int | None = None
    rel_tol: float = 1e-8
    pad: float | None = None
    variant: str = Policy.QUADRANT_MIX.value
    mode: str | None = None
    restarts: int = 1
    workers: int = 1
    out: str | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS.values():
            raise ValueError(f"unknown command {self.command!r}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        stochastic = self.command not in ("VerifyConstants", "VerifyIntegrals")
        if stochastic and self.seed is None:
            raise ValueError("a seed is required for stochastic commands")
        if not (0 < self.rel_tol < 1e-2):
            raise ValueError("rel-tol must lie in (0, 1e-2)")
        if self.intensity <= 0:
            raise ValueError("intensity must be positive")
        if self.pad is not None and self.pad < 0:
            raise ValueError("pad must be nonnegative")
        Policy(self.variant)
        if self.mode is not None:
            Mode(self.mode)

    def effective_pad(self) -> float:
        return self.pad if self.pad is not None else 5.0 / math.sqrt(self.intensity)

    def echo(self) -> dict:
        d = asdict(self)
        d["pad"] = self.effective_pad()
        d["out"] = str(self.output_path())
        return d

    def output_path(self) -> Path:
        if self.out:
            return Path(self.out)
        slug = next(k for k, v in COMMANDS.items() if v == self.command)
        return Path("results") / f"{slug}.csv"


_FIELD_TYPES = {
    "intensity": float, "n": int, "trials": int, "seed": int, "rel_tol": float,
    "pad": float, "variant": str, "mode": str, "restarts": int, "workers": int, "out": str,
}


def _from_env(environ) -> dict:
    out = {}
    for name, typ in _FIELD_TYPES.items():
        key = ENV_PREFIX + name.upper()
        if key in environ and environ[key] != "":
            out[name] = typ(environ[key])
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bhh-bounds", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for slug in COMMANDS:
        p = sub.add_parser(slug)
        p.add_argument("--config", type=Path, help="JSON file with config fields")
        p.add_argument("--n", type=int)
        p.add_argument("--intensity", type=float)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--rel-tol", dest="rel_tol", type=float)
        p.add_argument("--pad", type=float)
        p.add_argument("--variant", choices=[v.value for v in Policy])
        p.add_argument("--mode", choices=[m.value for m in Mode])
        p.add_argument("--restarts", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out")
    return parser


def resolve_config(args: argparse.Namespace, environ=None) -> ExperimentConfig:
    environ = os.environ if environ is None else environ
    settings: dict = {}
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        unknown = set(data) - set(_FIELD_TYPES) - {"command"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.pop("command", None)
        settings.update(data)
    settings.update(_from_env(environ))
    for name in _FIELD_TYPES:
        val = getattr(args, name, None)
        if val is not None:
            settings[name] = val
    cfg = ExperimentConfig(command=COMMANDS[args.subcommand], **settings)
    cfg.validate()
    return cfg


def execute(cfg: ExperimentConfig) -> list[ResultRow]:
    c = cfg.command
    if c == "VerifyConstants":
        return experiments.verify_constants()
    if c == "VerifyIntegrals":
        return experiments.verify_integrals(cfg.rel_tol)
    if c == "SimulateNN":
        return experiments.simulate_nn(cfg.intensity, cfg.trials, cfg.seed, cfg.effective_pad(), cfg.workers)
    if c == "EventProb":
        return experiments.event_prob(cfg.intensity, cfg.trials, cfg.seed, cfg.effective_pad(), cfg.workers)
    if c == "EstimateBounds":
        return experiments.estimate_bounds(cfg.intensity, cfg.trials, cfg.seed, cfg.effective_pad(),
                                           Policy(cfg.variant), cfg.workers)
    if c == "EstimateBeta":
        return experiments.estimate_beta(cfg.n, cfg.trials, cfg.seed, cfg.mode, cfg.restarts)
    raise ValueError(f"unknown command {c!r}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return f"{v:.12g}"


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        d = r.as_dict()
        w.writerow([d["quantity"]] + [_fmt(d[k]) for k in CSV_FIELDS[1:]])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_outputs(cfg: ExperimentConfig, rows: list[ResultRow]) -> tuple[Path, Path]:
    csv_path = cfg.output_path()
    json_path = csv_path.with_suffix(".json")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(rows_to_csv(rows))
    summary = {
        "config": cfg.echo(),
        "all_passed": all(r.passed for r in rows),
        "rows": [{k: _json_safe(v) for k, v in r.as_dict().items()} for r in rows],
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    json_path.write_text(json.dumps(summary, indent=2) + "\n")
    return csv_path, json_path


def run(cfg: ExperimentConfig) -> list[ResultRow]:
    """Execute the configured verification and persist its rows."""
    rows = execute(cfg)
    write_outputs(cfg, rows)
    return rows


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        rows = run(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for r in rows:
        log.info("%s %s computed=%s error=%s", "PASS" if r.passed else "FAIL", r.quantity,
                 _fmt(r.computed_value), _fmt(r.error))
    sys.stdout.write(rows_to_csv(rows))
    return 0 if all(r.passed for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
