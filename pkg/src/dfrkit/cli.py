"""Command-line front end: ``dfrkit {bound,sweep,dist,simulate,renyi}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import __version__
from .bounds import METHODS, compute_bound
from .dist import (
    PrecisionPolicy,
    compression_noise_pmf,
    difference_noise_pmf,
    nstar_pmf,
    sum_nstar_pmf,
    total_noise_pmf,
)
from .mc import default_threads, run_trials
from .params import IntegrityError, NumericalError, ParameterError, SchemeParams
from .pke import RngSpec
from .renyi import renyi_sweep, sweep_csv
from .ring import ciphertext_bits

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
FORMATS = ("table", "json", "csv")
DIST_KINDS = {
    "total": total_noise_pmf,
    "compression": lambda p, policy: compression_noise_pmf(p),
    "difference": difference_noise_pmf,
    "nstar": nstar_pmf,
    "sum-nstar": sum_nstar_pmf,
}
SECURITY_GRID = [(n, k, 8) for n in (1024, 512) for k in range(8, 16)]
BANDWIDTH_GRID = [(1024, 8, 8), (1024, 8, 4), (1024, 9, 4), (1024, 10, 4), (512, 8, 8), (512, 8, 4), (512, 9, 4)]
BASELINE_R = 8


def load_schema(name: str) -> dict:
    return json.loads(resources.files("dfrkit").joinpath("schemas", f"{name}.schema.json").read_text())


def load_attack_costs() -> dict[tuple[int, int], dict]:
    doc = json.loads(resources.files("dfrkit").joinpath("data", "attack_costs_reference.json").read_text())
    return {(row["n"], row["k"]): {**row, "label": doc["label"]} for row in doc["rows"]}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: SchemeParams
    fmt: str
    out: Path | None
    threads: int
    policy: PrecisionPolicy
    allow_nonstandard_m: bool


def _config(args) -> RunConfig:
    params = SchemeParams(n=args.n, q=args.q, k=args.k, r=args.r, L=args.L)
    params.check_standard_m(args.allow_nonstandard_m)
    if args.prune < 0 or not math.isfinite(args.prune):
        raise ParameterError("--prune must be a finite non-negative number")
    threads = default_threads() if args.threads is None else args.threads
    if threads < 1:
        raise ParameterError("--threads must be >= 1")
    return RunConfig(
        command=args.command,
        params=params,
        fmt=args.format,
        out=Path(args.out) if args.out else None,
        threads=threads,
        policy=PrecisionPolicy(prune=args.prune),
        allow_nonstandard_m=args.allow_nonstandard_m,
    )


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out is not None:
        cfg.out.write_text(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _table(rows: list[dict]) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.4g}"
        return "-" if v is None else str(v)

    cols = list(rows[0])
    cells = [[fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _render(rows: list[dict], cfg: RunConfig, json_doc) -> str:
    if cfg.fmt == "json":
        return json.dumps(json_doc, indent=2) + "\n"
    if cfg.fmt == "csv":
        return _csv(rows)
    return _table(rows)


# --- commands ---------------------------------------------------------------


def cmd_bound(args, cfg: RunConfig) -> int:
    report = compute_bound(args.method, cfg.params, cfg.policy, cfg.allow_nonstandard_m)
    doc = report.to_dict()
    _emit(_render([doc], cfg, doc), cfg)
    return EXIT_OK


def _ciphertext_reduction(n: int, q: int, r: int) -> float:
    base = ciphertext_bits(SchemeParams(n=n, q=q, k=1, r=BASELINE_R))
    cur = ciphertext_bits(SchemeParams(n=n, q=q, k=1, r=r))
    return round(100.0 * (base - cur) / base, 1)


def cmd_sweep(args, cfg: RunConfig) -> int:
    q = cfg.params.q
    costs = load_attack_costs() if args.table == "security" else {}
    grid = SECURITY_GRID if args.table == "security" else BANDWIDTH_GRID
    rows, flat = [], []
    for n, k, r in grid:
        params = SchemeParams(n=n, q=q, k=k, r=r)
        rep = compute_bound(args.method, params, cfg.policy, cfg.allow_nonstandard_m)
        row = {"n": n, "k": k, "r": r, "log2_dfr": rep.log2_dfr}
        line = dict(row)
        if args.table == "security":
            ref = costs.get((n, k))
            row["reference_attack_costs"] = ref
            line["primal_c/q (reference)"] = f"{ref['primal_classical']}/{ref['primal_quantum']}" if ref else None
            line["dual_c/q (reference)"] = f"{ref['dual_classical']}/{ref['dual_quantum']}" if ref else None
        else:
            row["ciphertext_reduction_pct"] = line["ciphertext_reduction_pct"] = _ciphertext_reduction(n, q, r)
        rows.append(row)
        flat.append(line)
    _emit(_render(flat, cfg, {"table": args.table, "method": args.method, "rows": rows}), cfg)
    return EXIT_OK


def cmd_dist(args, cfg: RunConfig) -> int:
    if args.which == "sum-nstar":
        d = sum_nstar_pmf(cfg.params, cfg.policy, cfg.allow_nonstandard_m)
    else:
        d = DIST_KINDS[args.which](cfg.params, cfg.policy)
    if cfg.fmt == "csv":
        text = d.to_csv()
    elif cfg.fmt == "json":
        text = json.dumps({"name": d.name, "offset": d.offset, "err": d.err, "masses": d.masses.tolist()}) + "\n"
    else:
        summary = {"name": d.name, "min": d.lo, "max": d.hi, "mass": d.total(), "err": d.err, "mean": d.mean(), "var": d.var()}
        text = _table([summary])
    _emit(text, cfg)
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    if args.trials < 1:
        raise ParameterError("--trials must be >= 1")
    report = run_trials(cfg.params, args.trials, RngSpec(args.seed), threads=cfg.threads, zero_noise=args.zero_noise)
    if args.forensics_csv:
        Path(args.forensics_csv).write_text(report.forensics_csv())
    doc = report.to_dict(include_forensics=True)
    lo, hi = report.ci95
    row = {"trials": report.trials, "failures": report.failures, "bit_errors": report.bit_errors,
           "dfr_hat": report.dfr_hat, "ci95_lo": lo, "ci95_hi": hi}
    _emit(_render([row], cfg, doc), cfg)
    return EXIT_OK


def cmd_renyi(args, cfg: RunConfig) -> int:
    results = renyi_sweep(args.k_min, args.k_max, args.a)
    if cfg.fmt == "csv":
        text = sweep_csv(results)
    else:
        text = _render([r.as_dict() for r in results], cfg, [r.as_dict() for r in results])
    _emit(text, cfg)
    return EXIT_OK


COMMANDS = {"bound": cmd_bound, "sweep": cmd_sweep, "dist": cmd_dist, "simulate": cmd_simulate, "renyi": cmd_renyi}


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**256:
        raise argparse.ArgumentTypeError("seed must be a 256-bit non-negative integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("scheme parameters")
    g.add_argument("--n", type=int, default=1024)
    g.add_argument("--q", type=int, default=12289)
    g.add_argument("--k", type=int, default=8)
    g.add_argument("--r", type=int, default=8)
    g.add_argument("--L", type=int, default=256)
    common.add_argument("--format", choices=FORMATS, default="table")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: $DFRKIT_THREADS or 1)")
    common.add_argument("--prune", type=float, default=0.0, help="drop pmf entries below this mass (tracked in err)")
    common.add_argument("--allow-nonstandard-m", action="store_true")

    parser = argparse.ArgumentParser(prog="dfrkit", description="Decryption-failure analysis for ring-LWE with threshold encoding.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="upper bound or estimate of the DFR")
    p.add_argument("--method", choices=METHODS, default="proposed")

    p = sub.add_parser("sweep", parents=[common], help="DFR over a parameter grid")
    p.add_argument("--table", choices=("security", "bandwidth"), required=True)
    p.add_argument("--method", choices=METHODS, default="proposed")

    p = sub.add_parser("dist", parents=[common], help="dump a noise distribution")
    p.add_argument("--which", choices=tuple(DIST_KINDS), default="total")

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo DFR estimate")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--zero-noise", action="store_true")
    p.add_argument("--forensics-csv", help="write per-failure bits and decode sums here")

    p = sub.add_parser("renyi", parents=[common], help="Renyi divergence of psi_k from a rounded Gaussian")
    p.add_argument("--a", type=float, default=9.0)
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=16)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except ParameterError as exc:
        print(f"dfrkit: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, IntegrityError) as exc:
        print(f"dfrkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
