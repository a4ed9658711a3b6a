"""Command line: experiment plans, suite execution and report bundles.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or plan error,
3 resource limit hit (a partial bundle is still written).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .beta_core import DEFAULT_PRECISION_BITS, Beta, BetaVector
from .dimension import DimensionFunction
from .errors import BetaTargetsError, PlanError, ResourceError
from .hitset import LipschitzMap
from .series import ApproxFunction

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("betatargets")

SCHEMA_VERSION = 1
MODES = ("classify", "w2star", "enumerate", "verify-core", "verify-divergence", "measure", "cover-scaling")
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3

# configurations used when no --config is given, and by verify-all
DEFAULTS = {
    "classify": {"betas": [2, 3], "psi": ["exp(-6*n/5)", "exp(-n^2)"], "f": "r^0.9", "n_range": [3, 30]},
    "w2star": {"t": "2", "f": "r^1", "grid": True},
    "enumerate": {"betas": ["golden"], "n_range": [1, 8]},
    "verify-core": {"betas": ["1.5", "golden", "2.5", "pi", "2", "3"], "n_range": [1, 18]},
    "verify-divergence": {"betas": [2, 3], "psi": ["exp(-2*n)", "exp(-n^2)"],
                          "f": "1/2*r^(log(6)/(log(2)+2))", "n_range": [8, 11], "samples": 2000,
                          "frame_max": 200},
    "measure": {"betas": [2], "psi": ["1/n"], "maps": [0], "n_range": [10, 60], "samples": 200000},
    "cover-scaling": {"a": [0, 0], "s": 1.5, "deltas": [1e-1, 1e-2, 1e-3, 1e-4], "samples": 100000},
}


@dataclass
class ExperimentPlan:
    mode: str
    betas: list = field(default_factory=lambda: [2])
    psi: list = field(default_factory=list)
    f: str = "r^1"
    target: str = "rectangle"
    maps: list = field(default_factory=list)
    n_range: list = field(default_factory=lambda: [1, 10])
    samples: int = 10_000
    seed: int = 0
    t: str = "1"
    grid: bool = False
    full_only: bool = False
    frame_max: int = 200
    a: list = field(default_factory=lambda: [0, 0])
    s: float = 1.5
    deltas: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    precision_bits: int = DEFAULT_PRECISION_BITS
    jobs: int = 1
    out: Optional[str] = None
    format: str = "json"

    def canonical(self) -> dict:
        """Plan content that determines results (output options excluded)."""
        data = asdict(self)
        for key in ("out", "format", "jobs"):
            data.pop(key)
        return data

    def plan_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


_FIELDS = {name for name in ExperimentPlan.__dataclass_fields__}
_INT_FIELDS = {"samples": 1, "seed": 0, "frame_max": 2, "precision_bits": 53, "jobs": 1}


def parse_plan(text: str, fmt: Optional[str] = None, mode: Optional[str] = None) -> ExperimentPlan:
    """Validate a TOML or JSON config; raises PlanError listing every problem with its path."""
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "toml"
    try:
        data = json.loads(text) if fmt == "json" else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as err:
        raise PlanError([("$", f"cannot parse {fmt}: {err}")]) from None
    return plan_from_dict(data, mode)


def plan_from_dict(data: dict, mode: Optional[str] = None) -> ExperimentPlan:
    errors = []
    data = dict(data)
    output = data.pop("output", {})
    if not isinstance(output, dict):
        errors.append(("output", "must be a table"))
        output = {}
    for key in output:
        if key not in ("dir", "format"):
            errors.append((f"output.{key}", "unknown key"))
    if mode is not None:
        data.setdefault("mode", mode)
    for key in data:
        if key not in _FIELDS:
            errors.append((key, "unknown key"))
    m = data.get("mode")
    if m not in MODES:
        errors.append(("mode", f"must be one of {', '.join(MODES)}"))
        raise PlanError(errors)
    merged = dict(DEFAULTS.get(m, {}))
    merged.update({k: v for k, v in data.items() if k in _FIELDS})
    merged["out"] = output.get("dir")
    merged["format"] = output.get("format", "json")
    plan = ExperimentPlan(**merged)
    errors.extend(validate_plan(plan))
    errors.sort(key=lambda e: e[0])
    if errors:
        raise PlanError(errors)
    return plan


def validate_plan(plan: ExperimentPlan) -> list:
    errors = []
    betas = None
    if plan.mode in ("verify-core", "enumerate"):
        # independent bases, no ordering required
        for i, b in enumerate(plan.betas):
            try:
                Beta.parse(b, plan.precision_bits)
            except (BetaTargetsError, ValueError, TypeError) as err:
                errors.append((f"betas[{i}]", str(err)))
    elif plan.mode != "w2star" and plan.mode != "cover-scaling":
        try:
            betas = BetaVector.parse(plan.betas, plan.precision_bits)
        except (BetaTargetsError, ValueError, TypeError) as err:
            errors.append(("betas", str(err)))
    if plan.mode in ("classify", "verify-divergence", "measure"):
        k = 1 if plan.target == "multiplicative" else (betas.d if betas else len(plan.psi))
        if len(plan.psi) != k:
            errors.append(("psi", f"need {k} entries, got {len(plan.psi)}"))
        for i, p in enumerate(plan.psi):
            try:
                ApproxFunction.parse(p)
            except (BetaTargetsError, ValueError, TypeError) as err:
                errors.append((f"psi[{i}]", str(err)))
    if plan.mode in ("classify", "w2star", "verify-divergence"):
        try:
            DimensionFunction.parse(str(plan.f))
        except (BetaTargetsError, ValueError, TypeError) as err:
            errors.append(("f", str(err)))
    for i, spec in enumerate(plan.maps):
        try:
            LipschitzMap.from_spec(spec)
        except (BetaTargetsError, ValueError, TypeError, KeyError) as err:
            errors.append((f"maps[{i}]", str(err)))
    if plan.target not in ("rectangle", "multiplicative"):
        errors.append(("target", "must be rectangle or multiplicative"))
    if (not isinstance(plan.n_range, list) or len(plan.n_range) != 2
            or not all(isinstance(v, int) for v in plan.n_range) or not 1 <= plan.n_range[0] <= plan.n_range[1]):
        errors.append(("n_range", "must be [lo, hi] with 1 <= lo <= hi"))
    for key, lo in _INT_FIELDS.items():
        val = getattr(plan, key)
        if not isinstance(val, int) or isinstance(val, bool) or val < lo:
            errors.append((key, f"must be an integer >= {lo}"))
    if plan.format not in ("json", "csv"):
        errors.append(("output.format", "must be json or csv"))
    if plan.mode == "cover-scaling":
        if not all(isinstance(d, (int, float)) and 0 < d < 1 for d in plan.deltas) or len(plan.deltas) < 2:
            errors.append(("deltas", "need at least two values in (0, 1)"))
        if not isinstance(plan.s, (int, float)) or not 1 < plan.s < 2:
            errors.append(("s", "must lie in (1, 2)"))
    return errors


@dataclass
class ReportBundle:
    mode: str
    plan_hash: str
    plan: dict
    checks: list
    verdicts: dict
    tables: dict
    incomplete: bool = False
    error: Optional[str] = None
    run_info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.incomplete and all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION, "mode": self.mode, "plan_hash": self.plan_hash, "plan": self.plan,
            "passed": self.passed, "incomplete": self.incomplete, "error": self.error,
            "checks": [c.to_dict() for c in self.checks], "verdicts": self.verdicts, "tables": self.tables,
            "run_info": self.run_info,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, default=str)


def run(plan: ExperimentPlan) -> ReportBundle:
    from . import suites

    res = suites.SuiteResult()
    incomplete, error = False, None
    try:
        res = suites.SUITES[plan.mode](plan)
    except ResourceError as err:
        incomplete, error = True, str(err)
    return ReportBundle(plan.mode, plan.plan_hash(), _jsonable(plan.canonical()), res.checks, res.verdicts,
                        res.tables, incomplete, error)


def run_all(seed: int = 0, precision_bits: int = DEFAULT_PRECISION_BITS, jobs: int = 1) -> ReportBundle:
    """Every suite with its default plan; passes iff every suite passes."""
    from . import suites

    total = suites.SuiteResult()
    incomplete, errors = False, []
    hashes = []
    for mode in MODES:
        plan = plan_from_dict({"mode": mode, "seed": seed, "precision_bits": precision_bits, "jobs": jobs})
        bundle = run(plan)
        hashes.append(bundle.plan_hash)
        incomplete |= bundle.incomplete
        if bundle.error:
            errors.append(f"{mode}: {bundle.error}")
        part = suites.SuiteResult(bundle.checks, bundle.verdicts, bundle.tables)
        total.extend(part, mode)
    h = hashlib.sha256("".join(hashes).encode()).hexdigest()[:16]
    return ReportBundle("verify-all", h, {"modes": list(MODES), "seed": seed}, total.checks, total.verdicts,
                        total.tables, incomplete, "; ".join(errors) or None)


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=str))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="betatargets",
                                     description="Shrinking-target dichotomies for beta-transformations")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in MODES + ("verify-all",):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML or JSON plan")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, help="directory for report, tables and figures")
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--precision-bits", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--no-figures", action="store_true")
    return parser


def main(argv=None) -> int:
    from . import report

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = {k: v for k, v in (("seed", args.seed), ("precision_bits", args.precision_bits),
                                   ("jobs", args.jobs)) if v is not None}
    try:
        if args.command == "verify-all":
            if args.config is not None:
                raise PlanError([("--config", "verify-all runs the built-in plans")])
            bundle = run_all(**overrides)
            fmt = args.format or "json"
            out = args.out
        else:
            if args.config is not None:
                text = args.config.read_text()
                fmt_in = "json" if args.config.suffix == ".json" else "toml"
                plan = parse_plan(text, fmt_in, mode=args.command)
                if plan.mode != args.command:
                    raise PlanError([("mode", f"config is for {plan.mode}, not {args.command}")])
            else:
                plan = plan_from_dict({"mode": args.command})
            if overrides:
                plan = plan_from_dict({**{k: v for k, v in plan.canonical().items()}, **overrides,
                                       "output": {"format": plan.format, **({"dir": plan.out} if plan.out else {})}})
            bundle = run(plan)
            fmt = args.format or plan.format
            out = args.out or (Path(plan.out) if plan.out else None)
    except PlanError as err:
        for path, msg in err.errors:
            print(f"plan error at {path}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return EXIT_USAGE
    except BetaTargetsError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if out is not None:
        report.write_bundle(bundle, out, fmt, figures=not args.no_figures)
    else:
        print(bundle.to_json() if fmt == "json" else report.checks_csv(bundle))
    for c in bundle.checks:
        log.info("%-50s %s", c.name, c.status)
    if bundle.incomplete:
        print(f"incomplete: {bundle.error}", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK if bundle.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
