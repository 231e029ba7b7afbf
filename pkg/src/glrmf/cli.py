"""Command-line entry point.

Exit codes: 0 success or pass, 1 quantitative failure (or an invalid spec
for ``validate``), 2 usage, parse or I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, GLRMFError, ParseError, SpecError, ValidationError
from .network import (dump_spec, generate_beyond_pus, halving_targets, load_spec,
                      pus_profile, validate_spec)
from .pdmp.simulate import Sampler, SimConfig, simulate
from .rmf import QuadratureConfig, solve_all_rates
from .specfun import ei
from .stats import compare_rates, estimate_rates, nonincreasing_up_to_ci, pool_rates

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


@dataclass
class RunConfig:
    """Settings of a ``validate-rmf`` run; relative paths resolve against the config file."""
    spec_path: Path
    output_dir: Path
    seeds: list = field(default_factory=lambda: [0])
    M_sweep: list = field(default_factory=lambda: [2, 10, 50])
    horizon_T: float = 2e4
    burn_in: float | None = None
    n_batches: int = 20
    sampler: str = "queue"
    rel_tol: float = 1e-10
    z_max: float = 3.0
    workers: int = 1


_KEYS = set(RunConfig.__dataclass_fields__)


def load_config(path) -> RunConfig:
    """Parse a JSON run configuration.

    Raises:
        ParseError: malformed JSON or an unknown key.
        ValidationError: missing or invalid values.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    unknown = sorted(set(doc) - _KEYS)
    if unknown:
        raise ParseError(f"{path}: unknown key(s) {', '.join(map(repr, unknown))}")
    if "spec_path" not in doc:
        raise ValidationError("spec_path is required")
    base = path.parent
    doc["spec_path"] = base / doc["spec_path"]
    doc["output_dir"] = base / doc.get("output_dir", "out")
    cfg = RunConfig(**doc)
    if not cfg.spec_path.is_file():
        raise ValidationError(f"spec_path {cfg.spec_path} does not exist")
    if not cfg.seeds or not all(isinstance(s, int) and 0 <= s < 2 ** 64 for s in cfg.seeds):
        raise ValidationError("seeds must be a non-empty list of 64-bit unsigned integers")
    if not cfg.M_sweep or not all(isinstance(m, int) and m >= 1 for m in cfg.M_sweep):
        raise ValidationError("M_sweep must be a non-empty list of counts >= 1")
    if cfg.M_sweep != sorted(set(cfg.M_sweep)):
        raise ValidationError("M_sweep must be strictly increasing")
    if cfg.sampler not in {s.value for s in Sampler}:
        raise ValidationError(f"unknown sampler {cfg.sampler!r}")
    if not cfg.horizon_T > 0 or cfg.n_batches < 10 or cfg.workers < 1:
        raise ValidationError("need horizon_T > 0, n_batches >= 10, workers >= 1")
    return cfg


def _estimate_one(spec, M, seed, cfg: RunConfig):
    sim = SimConfig(M, cfg.horizon_T, seed, burn_in=cfg.burn_in, sampler=cfg.sampler)
    log = simulate(spec, sim)
    est = estimate_rates(log, batch_len=(sim.horizon_T - sim.burn_in) / cfg.n_batches)
    return est, log.clip_count, len(log)


def cmd_validate_rmf(cfg: RunConfig, out=sys.stdout) -> int:
    """Solve once, simulate every (M, seed), and compare; returns the exit status."""
    spec = validate_spec(load_spec(cfg.spec_path))
    sol = solve_all_rates(spec, QuadratureConfig(rel_tol=cfg.rel_tol))
    jobs = [(M, s) for M in cfg.M_sweep for s in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_estimate_one, [spec] * len(jobs), *zip(*jobs),
                                    [cfg] * len(jobs)))
    else:
        results = [_estimate_one(spec, M, s, cfg) for M, s in jobs]

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    lines = ["M,neuron,beta,rate,ci,z"]
    errs, cis, reports, clip_frac = [], [], [], {}
    for M in cfg.M_sweep:
        chunk = [r for (m, _), r in zip(jobs, results) if m == M]
        pooled = pool_rates(e for e, _, _ in chunk)
        rep = compare_rates(sol, pooled)
        reports.append(rep)
        errs.append([r.abs_err for r in rep.rows])
        cis.append([r.ci for r in rep.rows])
        clip_frac[M] = sum(c for _, c, _ in chunk) / max(1, sum(k for _, _, k in chunk))
        for r in rep.rows:
            lines.append(f"{M},{r.neuron},{r.beta_analytic!r},{r.rate_sim!r},{r.ci!r},{r.z!r}")
    (cfg.output_dir / "convergence.csv").write_text("\n".join(lines) + "\n")
    (cfg.output_dir / "comparison.csv").write_text(reports[-1].to_csv())
    (cfg.output_dir / "solution.csv").write_text(sol.to_csv())

    trend = nonincreasing_up_to_ci(errs, cis) if len(errs) > 1 else np.ones(spec.n, bool)
    last = reports[-1]
    degenerate = bool(np.any(sol.degenerate))
    passed = last.worst_abs_z <= cfg.z_max and bool(trend.all()) and not last.any_mismatch \
        and not degenerate
    summary = {
        "pass": passed,
        "worst_abs_z_at_largest_M": last.worst_abs_z,
        "trend_ok_per_neuron": trend.tolist(),
        "qualitative_mismatch": last.any_mismatch,
        "degenerate_neurons": [int(i) + 1 for i in np.flatnonzero(sol.degenerate)],
        "clip_fraction": {str(k): v for k, v in clip_frac.items()},
    }
    (cfg.output_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2), file=out)
    return EXIT_OK if passed else EXIT_FAIL


def _cmd_validate(args):
    try:
        vs = validate_spec(load_spec(args.spec))
    except SpecError as exc:
        print(f"invalid: {exc}")
        return EXIT_FAIL
    prof = pus_profile(vs)
    print(json.dumps({
        "n": vs.n,
        "hypothesis": vs.hypothesis.value,
        "interaction": vs.interaction.value,
        "strict_feedforward": vs.strict_feedforward,
        "back_edges": [[i + 1, j + 1] for i, j in vs.back_edges],
        "incoming_abs_sums": prof.incoming_abs_sums.tolist(),
        "pus_sup": prof.sup_value,
    }, indent=2))
    return EXIT_OK


def _cmd_solve(args):
    sol = solve_all_rates(load_spec(args.spec), QuadratureConfig(rel_tol=args.rel_tol),
                          printed_h=args.printed_h)
    text = sol.to_json() if args.format == "json" else sol.to_csv()
    _emit(text, args.out)
    return EXIT_OK


def _cmd_simulate(args):
    sim = SimConfig(args.M, args.T, args.seed, burn_in=args.burn_in, sampler=args.sampler)
    log = simulate(load_spec(args.spec), sim)
    if args.out:
        log.write(args.out)
    else:
        sys.stdout.write(log.to_csv())
        print(json.dumps(log.metadata(), sort_keys=True), file=sys.stderr)
    return EXIT_OK


def _cmd_generate(args):
    targets = halving_targets(args.n) if args.targets == "halving" else None
    vs, report = generate_beyond_pus(args.n, args.a0, targets, args.drift)
    if args.out:
        dump_spec(vs, args.out)
    lines = ["neuron,target,reset,beta,feasible,floor_rate,condition,incoming_abs_sum"]
    for row, s in zip(report.rows, report.pus.incoming_abs_sums):
        floor = "" if row.floor_rate is None else repr(float(row.floor_rate))
        lines.append(f"{row.neuron + 1},{float(row.target)!r},{float(row.reset)!r},"
                     f"{float(row.beta)!r},{int(row.feasible)},{floor},"
                     f"{float(row.condition)!r},{float(s)!r}")
    print("\n".join(lines))
    return EXIT_OK


def _cmd_ei(args):
    res = ei(args.x)
    print(f"{res.value:.17g} {res.est_abs_error:.17g}")
    return EXIT_OK


def _cmd_validate_rmf(args):
    return cmd_validate_rmf(load_config(args.config))


def _emit(text, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glrmf", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network spec")
    p.add_argument("spec")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("solve", help="solve the rate equations")
    p.add_argument("spec")
    p.add_argument("--printed-h", action="store_true",
                   help="use the h_ij form without the 1/a factor (compatibility)")
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("simulate", help="simulate the replicated network")
    p.add_argument("spec")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--burn-in", type=float)
    p.add_argument("--sampler", choices=[s.value for s in Sampler], default="thinning")
    p.add_argument("--out", help="CSV path; metadata goes to <out>.json")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("validate-rmf", help="compare solver and simulation over an M sweep")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate_rmf)

    p = sub.add_parser("generate-example", help="build a dense network beyond uniform summability")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a0", type=float, required=True)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--targets", choices=("halving",), default="halving")
    p.add_argument("--out", help="write the generated spec JSON here")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("ei", help="exponential integral Ei(x)")
    p.add_argument("x", type=float)
    p.set_defaults(func=_cmd_ei)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (OSError, ConfigError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (GLRMFError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
