"""Command-line front end.

Exit codes: 0 success / feasible, 2 infeasible, 1 input or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import cgras as cg
from .gaussian import MixingMatrix, region_constraints
from .model import ConfigError, complex_to_doc, enumerate_allocations, load_config
from .optimize import OptimizerSettings, lower_bound, min_power_for_scheme, sweep

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class InputError(Exception):
    pass


def _settings(args) -> OptimizerSettings:
    return OptimizerSettings(grid_resolution=args.grid, max_restarts=args.restarts,
                             scheme_cap=args.scheme_cap, seed=args.seed)


def _load_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: cannot read {what}: {exc}") from exc


def _config(args):
    try:
        return load_config(Path(args.config))
    except ConfigError as exc:
        raise InputError(f"{args.config}:{exc.path}: {exc.message}") from exc
    except OSError as exc:
        raise InputError(f"{args.config}: {exc}") from exc


def _allocation(config, index: int):
    for i, alloc in enumerate(enumerate_allocations(config)):
        if i == index:
            return alloc
    raise InputError(f"allocation index {index} out of range")


def _write(args, name: str, text: str):
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_mixing(doc, n_relays, vertices, path) -> MixingMatrix:
    rows = doc["entries"] if isinstance(doc, dict) else doc
    try:
        a = np.array([[complex(x["re"], x.get("im", 0.0)) if isinstance(x, dict) else complex(x)
                       for x in row] for row in rows], dtype=complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}:entries: malformed complex entry ({exc})") from exc
    if a.shape != (n_relays, len(vertices)):
        raise InputError(f"{path}:entries: expected shape {n_relays}x{len(vertices)}, got {a.shape}")
    m = MixingMatrix(a, vertices)
    bad = m.support_violations()
    if bad:
        raise InputError(f"{path}:entries: nonzero entries outside encoder sets {bad}")
    return m


def constraints_csv(constraints) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["receiver", "closed_set_id", "member_vertices", "bound_bits"])
    counters: dict[int, int] = {}
    for c in constraints:
        k = counters.get(c.receiver, 0)
        counters[c.receiver] = k + 1
        w.writerow([c.receiver, k, " ".join(f"v{v}" for v in c.lhs_vertices), repr(c.bound)])
    return buf.getvalue()


def cmd_evaluate(args) -> int:
    config = _config(args)
    if args.scheme:
        try:
            scheme = cg.scheme_from_dict(_load_json(args.scheme, "scheme"))
        except ConfigError as exc:
            raise InputError(f"{args.scheme}:{exc.path}: {exc.message}") from exc
    else:
        alloc = _allocation(config, args.allocation)
        schemes = list(cg.canonical_schemes(alloc, config, _settings(args).split_grid, args.scheme_cap))
        if not 0 <= args.canonical < len(schemes):
            raise InputError(f"canonical scheme {args.canonical} out of range (0..{len(schemes) - 1})")
        scheme = schemes[args.canonical]
    res = cg.validate(scheme, config.target_rates)
    if not res.ok:
        raise InputError(f"{args.scheme or 'scheme'}: " + "; ".join(res.errors))

    gamma = scheme.gamma
    if args.mixing:
        A = _parse_mixing(_load_json(args.mixing, "mixing matrix"), config.n_relays,
                          scheme.vertices, args.mixing)
    else:
        report = min_power_for_scheme(config, scheme, _settings(args))
        A = MixingMatrix(report.mixing, scheme.vertices)
        gamma = report.gamma
    constraints = region_constraints(config, scheme, A)
    sub = cg.split_rates(gamma, config.target_rates)
    tol = OptimizerSettings().tolerance_feas
    bad = [c for c in constraints if c.slack(sub) < -tol]

    if args.format in ("csv", "both"):
        _write(args, "constraints.csv", constraints_csv(constraints))
    if args.format in ("json", "both"):
        doc = {"feasible": not bad, "subrates": [float(r) for r in sub],
               "row_powers": [float(p) for p in A.row_powers()],
               "mixing": [[complex_to_doc(x) for x in row] for row in A.entries],
               "constraints": [{"id": c.ident(), "bound_bits": c.bound,
                                "required_bits": float(sum(sub[v] for v in c.lhs_vertices))}
                               for c in constraints]}
        _write(args, "evaluation.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if args.emit_dag:
        _write(args, "scheme.dot", cg.to_dot(scheme, sub))
    if args.samples:
        from .oracle import mc_mutual_information
        for i, c in enumerate(constraints):
            est = mc_mutual_information(config.access_gains[c.receiver], A.entries,
                                        c.lhs_vertices, scheme.decoded_by(c.receiver),
                                        args.samples, args.seed + i)
            print(f"# {c.ident()} bound={c.bound:.6f} mc={est.value:.6f}+-{est.stderr:.6f}",
                  file=sys.stderr)
    verdict = "feasible" if not bad else "infeasible"
    print(f"{verdict} ({len(constraints)} constraints, {len(bad)} violated)", file=sys.stderr)
    if args.out_dir:
        print(verdict)
    return EXIT_OK if not bad else EXIT_INFEASIBLE


def cmd_optimize(args) -> int:
    config = _config(args)
    result = sweep(config, _settings(args))
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    if args.format in ("json", "both"):
        (out / "sweep.json").write_text(result.to_json())
    if args.format in ("csv", "both"):
        (out / "sweep.csv").write_text(result.to_csv())
    best = result.global_best
    bound = result.bound.value
    if best is None:
        print(f"best: infeasible   lower bound: {bound!r}")
        return EXIT_INFEASIBLE
    print(f"best: {best.report.total_power!r} (allocation {best.allocation} "
          f"scheme {best.best_scheme_id})   lower bound: {bound!r}")
    if args.emit_dag and best.best_scheme is not None:
        sub = cg.split_rates(best.report.gamma, config.target_rates)
        (out / "best_scheme.dot").write_text(cg.to_dot(best.best_scheme, sub))
    return EXIT_OK


def cmd_bound(args) -> int:
    config = _config(args)
    lb = lower_bound(config, _settings(args))
    text = json.dumps(lb.to_dict(config.n_receivers), indent=2, sort_keys=True) + "\n"
    if args.out_dir:
        _write(args, "bound.json", text)
    else:
        sys.stdout.write(text)
    print(f"lower bound: {lb.value!r}", file=sys.stderr)
    return EXIT_OK if lb.feasible else EXIT_INFEASIBLE


def cmd_enumerate(args) -> int:
    config = _config(args)
    lines = []
    if args.schemes is None:
        for i, alloc in enumerate(enumerate_allocations(config)):
            lines.append(f"{i}\t{alloc.bitmask(config.n_receivers)}\t{alloc}")
    else:
        alloc = _allocation(config, args.schemes)
        for s, scheme in enumerate(cg.canonical_schemes(alloc, config, _settings(args).split_grid,
                                                        args.scheme_cap)):
            lines.append(f"{s}\t{scheme.describe()}")
            if args.emit_dag:
                lines.append(cg.to_dot(scheme, scheme.subrates(config.target_rates)).rstrip())
    _write(args, "listing.txt", "\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="network config JSON")
    common.add_argument("--out-dir", help="write result files here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--scheme-cap", type=int, default=16)
    common.add_argument("--grid", type=int, default=1, help="split fractions k/(grid+1)")
    common.add_argument("--restarts", type=int, default=4)
    common.add_argument("--samples", type=int, default=0, help="Monte-Carlo cross-check samples")
    common.add_argument("--format", choices=("json", "csv", "both"), default="both")
    common.add_argument("--emit-dag", action="store_true", help="also write DOT-style DAG text")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="relay-energy", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", parents=[common], help="rate constraints of one scheme")
    src = ev.add_mutually_exclusive_group(required=True)
    src.add_argument("--scheme", help="scheme JSON file")
    src.add_argument("--canonical", type=int, help="index into the canonical scheme stream")
    ev.add_argument("--allocation", type=int, default=0, help="allocation index for --canonical")
    ev.add_argument("--mixing", help="mixing matrix JSON; optimised when omitted")
    ev.set_defaults(func=cmd_evaluate)

    op = sub.add_parser("optimize", parents=[common], help="sweep allocations and schemes")
    op.set_defaults(func=cmd_optimize)

    bd = sub.add_parser("bound", parents=[common], help="energy lower bound")
    bd.set_defaults(func=cmd_bound)

    en = sub.add_parser("enumerate", parents=[common], help="list allocations or schemes")
    what = en.add_mutually_exclusive_group()
    what.add_argument("--allocations", action="store_true")
    what.add_argument("--schemes", type=int, metavar="ALLOC", help="list schemes of an allocation")
    en.set_defaults(func=cmd_enumerate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, cg.InvalidScheme) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
