#!/usr/bin/env python3
"""
Command-line surface for the point-interaction resolvent toolkit.

    python cli.py kernel --model free --kappa 1 --x 0 --xprime 0
    python cli.py spectrum --beta -1 --a 0.01
    python cli.py series-verify --id dexp --kappa 3 --beta -1
    python cli.py converge --study triple-to-deltaprime --beta -1 --kappa 4
    python cli.py tau --beta -1 --kappa 8 --rule a=eps^0.0625

Exit codes: 0 success, 2 invalid input or violated precondition,
3 acceptance-window or expansion-check failure.
"""

import logging
import math
import os
import re
import sys
from itertools import product
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError, field_validator, model_validator

from convergence import StudyParams, default_params, parse_study_id, study, study_shapes, tau_table
from delta_arrays import CouplingConfig, cs_couplings
from errors import InvalidParameter, PointInteractionError
from export_utils import ReportExporter
from kernel_models import DeltaArrayModel, PotentialModel, make_model
from kernels import DELTA, SIGNED, SpectralPoint, delta_values, signed_values
from potentials import ScaledPotential
from series import parse_expansion_id, verify_expansion
from settings import DEFAULTS, ENV_PREFIX
from spectra import find_bound_states

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_REJECTED = 3

COMMANDS = ("kernel", "spectrum", "series-verify", "converge", "tau")
MODELS = ("free", SIGNED, DELTA, "delta-prime", "dirichlet", "triple", "potential")
RULE_PATTERN = re.compile(r"^\s*a\s*=\s*eps\s*\^\s*(\S+)\s*$")


class RunConfig(BaseModel):
    """Validated parameters of one CLI invocation"""
    command: Literal["kernel", "spectrum", "series-verify", "converge", "tau"]
    model: Optional[str] = None
    beta: Optional[float] = None
    kappa: Optional[float] = None
    alpha: float = 1.0
    a: Optional[float] = None
    epsilon: Optional[float] = None
    y: float = 0.0
    coupling: Optional[float] = None
    x: List[float] = [0.0]
    xprime: List[float] = [0.0]
    shape: List[str] = ["box:h=0.5"]
    expansion_id: Optional[str] = None
    study: Optional[str] = None
    rule_power: Optional[float] = None
    a_grid: Optional[List[float]] = None
    eps_grid: Optional[List[float]] = None
    kappa_max: Optional[float] = None
    order: Optional[int] = None
    threads: int = 1
    cells_per_bump: Optional[int] = None
    format: Literal["csv", "json"] = "csv"
    output: Optional[str] = None

    @field_validator("beta", "kappa", "alpha", "a", "epsilon", "y", "coupling", "kappa_max", "rule_power")
    @classmethod
    def _finite(cls, v):
        if v is not None and not math.isfinite(v):
            raise ValueError("must be a finite number")
        return v

    @field_validator("x", "xprime", "a_grid", "eps_grid")
    @classmethod
    def _finite_list(cls, v):
        if v is not None and not all(math.isfinite(t) for t in v):
            raise ValueError("all entries must be finite")
        return v

    @field_validator("kappa", "kappa_max")
    @classmethod
    def _positive(cls, v):
        if v is not None and v <= 0:
            raise ValueError("must be positive")
        return v

    @field_validator("threads")
    @classmethod
    def _threads(cls, v):
        if v < 1:
            raise ValueError("need at least one thread")
        return v

    @model_validator(mode="after")
    def _model_known(self):
        if self.command == "kernel" and self.model not in MODELS:
            raise ValueError(f"--model must be one of {', '.join(MODELS)}")
        return self

    def need(self, *names: str) -> List[Any]:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            flags = ", ".join("--" + n.replace("_", "-") for n in missing)
            raise InvalidParameter(f"{self.command} needs {flags}")
        return [getattr(self, n) for n in names]


# ---------------------------------------------------------------- parsing

def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise InvalidParameter(f"not a number: {text!r}")


def _float_list(text: str) -> List[float]:
    return [_float(t) for t in text.split(",") if t.strip()]


def parse_rule(text: str) -> float:
    """'a=eps^0.1' -> 0.1; the exponent may be a fraction like 1/16"""
    m = RULE_PATTERN.match(text)
    if not m:
        raise InvalidParameter(f"rule must look like a=eps^p, got {text!r}")
    raw = m.group(1)
    num, sep, den = raw.partition("/")
    p = _float(num) / _float(den) if sep else _float(raw)
    if not (math.isfinite(p) and p > 0):
        raise InvalidParameter(f"rule exponent must be positive, got {raw}")
    return p


def build_parser():
    import argparse

    parser = argparse.ArgumentParser(description="Point-interaction resolvent kernels and convergence studies")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--model", help=f"kernel model: {', '.join(MODELS)}")
    parser.add_argument("--beta", help="delta-prime strength")
    parser.add_argument("--kappa", help="spectral parameter, k = i*kappa")
    parser.add_argument("--alpha", help="coupling disbalance (default 1)")
    parser.add_argument("--a", help="triple spacing")
    parser.add_argument("--epsilon", help="potential width scale")
    parser.add_argument("--y", help="interaction center (default 0)")
    parser.add_argument("--coupling", help="single delta coupling (model delta)")
    parser.add_argument("--x", help="comma-separated x values")
    parser.add_argument("--xprime", help="comma-separated x' values")
    parser.add_argument("--shape", action="append",
                        help="box:h=, gauss:sigma= or triangle:h=; once, or three times for V_-1, V_0, V_+1")
    parser.add_argument("--id", dest="expansion_id", help="expansion id for series-verify")
    parser.add_argument("--study", help="convergence study id")
    parser.add_argument("--rule", help="spacing rule a=eps^p")
    parser.add_argument("--a-grid", help="comma-separated spacings")
    parser.add_argument("--eps-grid", help="comma-separated epsilons")
    parser.add_argument("--kappa-max", help="upper end of the bound-state window")
    parser.add_argument("--order", type=int, help="series truncation order")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for studies")
    parser.add_argument("--cells-per-bump", type=int, help="transfer-matrix cells per bump")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--output", help="write to this file instead of stdout")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default) or ERROR")
    return parser


def to_run_config(args) -> RunConfig:
    data: Dict[str, Any] = {"command": args.command, "format": args.format, "threads": args.threads}
    for name in ("beta", "kappa", "alpha", "a", "epsilon", "y", "coupling", "kappa_max"):
        raw = getattr(args, name)
        if raw is not None:
            data[name] = _float(raw)
    for name in ("x", "xprime", "a_grid", "eps_grid"):
        raw = getattr(args, name)
        if raw is not None:
            data[name] = _float_list(raw)
    for name in ("model", "expansion_id", "study", "order", "cells_per_bump", "output"):
        if getattr(args, name) is not None:
            data[name] = getattr(args, name)
    if args.shape:
        data["shape"] = args.shape
    if args.rule is not None:
        data["rule_power"] = parse_rule(args.rule)
    return RunConfig(**data)


# ---------------------------------------------------------------- commands

def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.output is None:
        sys.stdout.write(text)
    else:
        logger.info(f"Wrote {text}")


def _write_records(records: List[Dict[str, Any]], cfg: RunConfig, meta: Dict[str, Any],
                   columns: Optional[List[str]] = None) -> None:
    exporter = ReportExporter()
    _emit(exporter.export_records(records, cfg.format, cfg.output, meta, columns), cfg)


def _kernel_function(cfg: RunConfig):
    """Vectorized f(x, x') for the requested model"""
    s = SpectralPoint(cfg.kappa)
    model = cfg.model
    if model == SIGNED:
        return lambda x, xp: signed_values(s.kappa, x, xp)
    if model == DELTA:
        (c,) = cfg.need("coupling")
        return lambda x, xp: delta_values(c, cfg.y, s.kappa, x, xp)
    if model == "delta-prime":
        (beta,) = cfg.need("beta")
        km = make_model("delta-prime", beta=beta, y=cfg.y)
    elif model == "triple":
        beta, a = cfg.need("beta", "a")
        km = DeltaArrayModel(arr=cs_couplings(CouplingConfig(beta=beta, a=a, alpha=cfg.alpha, y=cfg.y)))
    elif model == "potential":
        beta, a, eps = cfg.need("beta", "a", "epsilon")
        sp = ScaledPotential(cfg=CouplingConfig(beta=beta, a=a, alpha=cfg.alpha, y=cfg.y),
                             epsilon=eps, shapes=study_shapes(cfg.shape))
        km = PotentialModel(sp=sp, cells_per_bump=cfg.cells_per_bump)
    else:
        km = make_model(model, y=cfg.y)
    return lambda x, xp: km.evaluate(s, x, xp)


def cmd_kernel(cfg: RunConfig) -> int:
    cfg.need("kappa")
    f = _kernel_function(cfg)
    pairs = list(product(cfg.x, cfg.xprime))
    values = f(np.asarray([p[0] for p in pairs]), np.asarray([p[1] for p in pairs]))
    records = [{"x": x, "xprime": xp, "value": float(v)} for (x, xp), v in zip(pairs, values)]
    _write_records(records, cfg, {"model": cfg.model, "kappa": cfg.kappa})
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    beta, a = cfg.need("beta", "a")
    states = find_bound_states(CouplingConfig(beta=beta, a=a, alpha=cfg.alpha, y=cfg.y), cfg.kappa_max)
    records = [{"kappa_star": b.kappa_star, "energy": b.energy, "branch": b.branch} for b in states]
    _write_records(records, cfg, {"beta": beta, "a": a, "alpha": cfg.alpha},
                   columns=["kappa_star", "energy", "branch"])
    return EXIT_OK


def cmd_series_verify(cfg: RunConfig) -> int:
    (target,) = cfg.need("expansion_id")
    target = parse_expansion_id(target)
    kappa, beta = cfg.need("kappa", "beta")
    params = {"kappa": kappa, "beta": beta, "alpha": cfg.alpha}
    report = verify_expansion(target, params, cfg.order)
    records = [dict(vars(r)) for r in report.rows]
    _write_records(records, cfg, {"target": target.value, "passed": report.passed, "order": report.order})
    if not report.passed:
        logger.error(f"{target.value}: expansion check failed")
        return EXIT_REJECTED
    return EXIT_OK


def _study_params(cfg: RunConfig, base: StudyParams) -> StudyParams:
    overrides: Dict[str, Any] = {"threads": cfg.threads}
    for name in ("beta", "kappa", "cells_per_bump"):
        if getattr(cfg, name) is not None:
            overrides[name] = getattr(cfg, name)
    if "alpha" in cfg.model_fields_set:
        overrides["alpha"] = cfg.alpha
    if "y" in cfg.model_fields_set:
        overrides["y"] = cfg.y
    if cfg.a_grid:
        overrides["a_grid"] = tuple(cfg.a_grid)
    if cfg.eps_grid:
        overrides["eps_grid"] = tuple(cfg.eps_grid)
    if cfg.rule_power is not None:
        overrides["rule_power"] = cfg.rule_power
    if "shape" in cfg.model_fields_set:
        overrides["shape"] = tuple(cfg.shape)
    return StudyParams(**{**vars(base), **overrides})


def cmd_converge(cfg: RunConfig) -> int:
    (raw,) = cfg.need("study")
    study_id = parse_study_id(raw)
    params = _study_params(cfg, default_params(study_id))
    report = study(study_id, params)

    exporter = ReportExporter()
    if cfg.format == "json":
        _emit(exporter.export_to_json(report, cfg.output), cfg)
    else:
        _emit(exporter.export_to_csv(report, cfg.output), cfg)
    logger.info(exporter.create_summary_report(report))

    failures = report.failures()
    if failures:
        logger.error(f"{study_id.value} rejected: {'; '.join(failures)}")
        return EXIT_REJECTED
    return EXIT_OK


def cmd_tau(cfg: RunConfig) -> int:
    cfg.need("beta", "kappa")
    params = _study_params(cfg, StudyParams())
    rows = tau_table(params)
    records = [dict(vars(r)) for r in rows]
    _write_records(records, cfg, {"beta": params.beta, "kappa": params.kappa, "alpha": params.alpha,
                                  "rule_power": params.rule_power, "shape": list(params.shape)})
    return EXIT_OK


HANDLERS = {
    "kernel": cmd_kernel,
    "spectrum": cmd_spectrum,
    "series-verify": cmd_series_verify,
    "converge": cmd_converge,
    "tau": cmd_tau,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, dispatch and map failures to exit codes"""
    parser = build_parser()
    args = parser.parse_args(argv)

    level = (args.log_level or os.getenv(ENV_PREFIX + "LOG_LEVEL") or DEFAULTS.log_level).upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format='%(asctime)s - %(levelname)s - %(message)s',
                        stream=sys.stderr)

    try:
        cfg = to_run_config(args)
        return HANDLERS[cfg.command](cfg)
    except ValidationError as e:
        logger.error(f"Invalid arguments: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INVALID
    except PointInteractionError as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return EXIT_INVALID


def main():
    """Main function to run the command-line tool"""
    sys.exit(run())


if __name__ == "__main__":
    main()
