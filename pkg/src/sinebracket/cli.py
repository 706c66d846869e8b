"""Command-line interface: simulation runs, identity checks, studies.

Subcommands
-----------
run          integrate a configured initial condition, write state CSVs,
             diagnostics, and a summary JSON
verify       run the identity suite and/or the counterexample evaluation
converge     tabulate the truncation error decay and fit its exponent
jacobi-scan  exhaustively scan for generalized-Jacobi violations

Exit codes: 0 success, 1 check failure, 2 usage or configuration error,
3 runtime failure.  Every output file gains a ``.meta.json`` sidecar
recording version, configuration hash, and seed; outputs are
byte-identical across reruns of the same configuration and seed in
single-worker mode.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path


from .dynamics import (
    IntegratorConfig,
    SimState,
    integrate,
    random_shell_field,
)
from .errors import ConsistencyError, StepConvergenceError, ValidationError
from .grid import ModeField, build_grid, from_physical
from .serialization import (
    load_physical_field,
    save_diagnostics,
    save_mode_field,
    save_violations,
    write_json,
    write_metadata,
)
from .verify import (
    format_reports,
    run_convergence_study,
    run_counterexample,
    run_identity_suite,
    run_jacobi_scan,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

DEFAULT_CONVERGENCE_PAIRS = (
    ((1, 0), (0, 1)),
    ((1, 1), (-1, 2)),
    ((1, 2), (2, 1)),
    ((2, 1), (-1, 1)),
)


@dataclass(frozen=True)
class RunConfig:
    """Validated simulation configuration."""

    n: int
    scheme: str
    dt: float
    steps: int
    record_every: int
    seed: int
    initial_condition: dict
    out_dir: str

    @classmethod
    def from_mapping(cls, raw: dict) -> "RunConfig":
        try:
            cfg = cls(
                n=int(raw["n"]),
                scheme=str(raw.get("scheme", "rk4")),
                dt=float(raw["dt"]),
                steps=int(raw["steps"]),
                record_every=int(raw.get("record_every", max(1, int(raw["steps"]) // 10))),
                seed=int(raw.get("seed", 0)),
                initial_condition=dict(raw.get("initial_condition", {"type": "shell"})),
                out_dir=str(raw.get("out_dir", ".")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad run configuration: {exc}") from exc
        if cfg.n % 2 == 0 or cfg.n < 3:
            raise ValidationError(f"n must be odd and >= 3, got {cfg.n}")
        if not cfg.dt > 0:
            raise ValidationError(f"dt must be positive, got {cfg.dt}")
        if cfg.steps < 1 or cfg.record_every < 1:
            raise ValidationError("steps and record_every must be positive")
        return cfg

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "scheme": self.scheme,
            "dt": self.dt,
            "steps": self.steps,
            "record_every": self.record_every,
            "seed": self.seed,
            "initial_condition": self.initial_condition,
            "out_dir": self.out_dir,
        }


def _build_initial_condition(config: RunConfig) -> ModeField:
    grid = build_grid(config.n)
    spec = config.initial_condition
    kind = spec.get("type", "shell")
    if kind == "shell":
        return random_shell_field(
            grid,
            seed=config.seed,
            shell_min=float(spec.get("shell_min", 1.0)),
            shell_max=float(spec.get("shell_max", 4.0)),
            amplitude=float(spec.get("amplitude", 1.0)),
        )
    if kind == "modes":
        modes = {}
        for row in spec.get("modes", ()):
            i1, i2, re, im = row
            modes[(int(i1), int(i2))] = complex(float(re), float(im))
        if not modes:
            raise ValidationError("mode-list initial condition is empty")
        return ModeField.from_modes(grid, modes)
    if kind == "physical_csv":
        path = spec.get("path")
        if not path:
            raise ValidationError("physical_csv initial condition needs a path")
        return from_physical(load_physical_field(path), grid)
    raise ValidationError(f"unknown initial-condition type {kind!r}")


def cmd_run(args: argparse.Namespace) -> int:
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if args.dt is not None:
            raw["dt"] = args.dt
        if args.steps is not None:
            raw["steps"] = args.steps
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.out is not None:
            raw["out_dir"] = args.out
        config = RunConfig.from_mapping(raw)
        field = _build_initial_condition(config)
        integrator = IntegratorConfig(
            scheme=config.scheme,
            dt=config.dt,
            steps=config.steps,
            record_every=config.record_every,
        )
    except (OSError, json.JSONDecodeError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        started = time.perf_counter()
        final, records = integrate(SimState(0.0, field), integrator)
        wall = time.perf_counter() - started
    except (StepConvergenceError, ConsistencyError, ValidationError) as exc:
        print(f"error: integration failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = config.as_dict()
    seed = config.seed
    paths = {
        "initial_state": out / "initial_state.csv",
        "final_state": out / "final_state.csv",
        "diagnostics": out / "diagnostics.csv",
        "summary": out / "summary.json",
    }
    save_mode_field(paths["initial_state"], field)
    save_mode_field(paths["final_state"], final.field)
    save_diagnostics(paths["diagnostics"], records)
    last = records[-1]
    summary = {
        "n": config.n,
        "scheme": config.scheme,
        "dt": config.dt,
        "steps": config.steps,
        "seed": seed,
        "final_time": last.time,
        "energy_initial": records[0].energy,
        "enstrophy_initial": records[0].enstrophy,
        "energy_final": last.energy,
        "enstrophy_final": last.enstrophy,
        "drift_energy": last.drift_energy,
        "drift_enstrophy": last.drift_enstrophy,
        "wall_time_s": wall,
    }
    write_json(paths["summary"], summary)
    for p in paths.values():
        write_metadata(p, meta, seed)
    print(
        f"wrote {out}/: drift_H={last.drift_energy:.3e} "
        f"drift_E={last.drift_enstrophy:.3e} ({wall:.2f}s)"
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    reports = []
    try:
        if args.counterexample:
            reports.append(run_counterexample(args.n))
        elif args.suite:
            all_reports = run_identity_suite(args.n, seed=args.seed)
            matching = [r for r in all_reports if r.name == args.suite]
            if not matching:
                names = ", ".join(r.name for r in all_reports)
                print(f"error: unknown check {args.suite!r}; one of: {names}", file=sys.stderr)
                return EXIT_USAGE
            reports.extend(matching)
        else:  # --all and the default
            reports.extend(run_identity_suite(args.n, seed=args.seed))
            if args.n >= 5:
                reports.append(run_counterexample(args.n))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    print(format_reports(reports))
    for r in reports:
        if r.name == "jacobi-counterexample":
            for variant in ("zeitlin", "continuum"):
                summands = r.params[f"{variant}_summands"]
                print(f"{variant} summands: {summands[0]!r}, {summands[1]!r}, {summands[2]!r}")
    payload = {"n": args.n, "seed": args.seed, "reports": [r.to_dict() for r in reports]}
    write_json(args.out, payload)
    write_metadata(args.out, {"command": "verify", "n": args.n, "seed": args.seed}, args.seed)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


def _load_pairs_file(path: str) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    pairs = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if row[0].strip().lower() in ("i1", "i"):  # optional header
                continue
            if len(row) != 4:
                raise ValidationError(f"expected i1,i2,j1,j2 rows, got {row!r}")
            i1, i2, j1, j2 = (int(x) for x in row)
            pairs.append(((i1, i2), (j1, j2)))
    if not pairs:
        raise ValidationError(f"no wave-vector pairs in {path}")
    return pairs


def cmd_converge(args: argparse.Namespace) -> int:
    try:
        if args.pairs is not None:
            pairs = _load_pairs_file(args.pairs)
        else:
            pairs = list(DEFAULT_CONVERGENCE_PAIRS)
        n_list = tuple(int(x) for x in args.n_list.split(","))
        report = run_convergence_study(pairs, n_list=n_list)
    except (OSError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = out / "convergence.csv"
    sizes = report.params["n_list"]
    with open(table, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["i1", "i2", "j1", "j2"]
            + [f"err_{n}" for n in sizes]
            + [f"bracket_diff_{n}" for n in sizes]
            + ["exponent"]
        )
        for row in report.params["pairs"]:
            (i1, i2), (j1, j2) = row["pair"]
            exponent = "" if row["exponent"] is None else repr(row["exponent"])
            writer.writerow(
                [i1, i2, j1, j2]
                + [repr(row["errors"][str(n)]) for n in sizes]
                + [repr(row["bracket_diffs"][str(n)]) for n in sizes]
                + [exponent]
            )
    meta = {"command": "converge", "pairs": [list(map(list, p)) for p in pairs], "n_list": list(sizes)}
    write_metadata(table, meta, report.params["seed"])
    for row in report.params["pairs"]:
        exp = row["exponent"]
        label = "collinear, exact" if exp is None else f"exponent {exp:.4f}"
        print(f"pair {tuple(map(tuple, row['pair']))}: {label}")
    print(f"study {'passed' if report.passed else 'FAILED'}; wrote {table}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_jacobi_scan(args: argparse.Namespace) -> int:
    try:
        report, violations = run_jacobi_scan(args.n, workers=args.workers)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = out / f"jacobi_violations_n{args.n}.csv"
    save_violations(table, violations)
    meta = {"command": "jacobi-scan", "n": args.n}
    write_metadata(table, meta, 0)
    p = report.params
    print(
        f"n={args.n}: {p['violations_raw']} violating tuples "
        f"({p['violations_deduplicated']} after symmetry reduction)"
    )
    known = p["known_tuple_residual"]
    flag = "present" if known is not None else "MISSING"
    print(f"known counterexample tuple: {flag} (residual {known!r})")
    print(f"wrote {table}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinebracket",
        description="Structure-preserving truncated vorticity dynamics and its bracket algebra.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a configured initial condition")
    p_run.add_argument("--config", required=True, help="JSON run configuration")
    p_run.add_argument("--dt", type=float, default=None, help="override config dt")
    p_run.add_argument("--steps", type=int, default=None, help="override config steps")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--out", default=None, help="override config output directory")
    p_run.add_argument("--workers", type=int, default=1, help="reserved; runs are sequential")
    p_run.set_defaults(handler=cmd_run)

    p_verify = sub.add_parser("verify", help="run identity checks")
    p_verify.add_argument("--n", type=int, required=True, help="truncation size (odd)")
    p_verify.add_argument("--seed", type=int, default=0)
    group = p_verify.add_mutually_exclusive_group()
    group.add_argument("--all", action="store_true", help="identity suite plus counterexample")
    group.add_argument(
        "--counterexample", action="store_true", help="only the six-index counterexample"
    )
    group.add_argument("--suite", default=None, metavar="NAME", help="a single named check")
    p_verify.add_argument("--out", default="verify_report.json", help="JSON report path")
    p_verify.add_argument("--workers", type=int, default=1)
    p_verify.set_defaults(handler=cmd_verify)

    p_conv = sub.add_parser("converge", help="truncation-error decay study")
    p_conv.add_argument("--pairs", default=None, help="CSV of i1,i2,j1,j2 rows")
    p_conv.add_argument("--n-list", default="11,21,41,81", help="comma-separated odd sizes")
    p_conv.add_argument("--out", default=".", help="output directory")
    p_conv.set_defaults(handler=cmd_converge)

    p_scan = sub.add_parser("jacobi-scan", help="exhaustive generalized-Jacobi scan")
    p_scan.add_argument("--n", type=int, required=True, help="truncation size (5 or 7)")
    p_scan.add_argument("--out", default=".", help="output directory")
    p_scan.add_argument("--workers", type=int, default=1)
    p_scan.set_defaults(handler=cmd_jacobi_scan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (OSError, ConsistencyError, StepConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
