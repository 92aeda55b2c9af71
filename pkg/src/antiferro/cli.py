"""Command-line front end emitting CSV or JSON tables.

Exit codes: 0 success, 2 usage error, 3 a statistical check failed,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources

import jsonschema
import numpy as np

from . import analytic, broadcast, dynamics, graphs, interpolation
from ._random import stream

DEFAULT_SEED = 20240917
EXIT_OK, EXIT_USAGE, EXIT_STAT, EXIT_NUMERIC = 0, 2, 3, 4

COLUMNS = {
    "thresholds": ["d", "beta_dagger", "beta_star", "cut_fraction_at_beta_star"],
    "table1": ["d", "first_moment_bound", "interp_bound", "cut_at_beta_star",
               "interp_alpha", "interp_z", "optimizer_flag"],
    "fscan": ["beta", "alpha", "f"],
}
CHECK_COLUMNS = ["check", "estimate", "stderr", "target", "passed"]


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


def _fmt(x):
    """Floats at 10 significant digits; everything else unchanged."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.10g}") if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def _csv_cell(x) -> str:
    x = _fmt(x)
    if x is None:
        return "nan"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def parse_d_range(text: str, lo: int = 3, hi: int = analytic.MAX_DEGREE) -> list:
    """``"5"``, ``"3:10"`` (inclusive) or ``"3,5,8"``."""
    try:
        if ":" in text:
            a, b = (int(t) for t in text.split(":"))
            values = list(range(a, b + 1))
        else:
            values = [int(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse degree range {text!r}") from None
    if not values or any(not lo <= d <= hi for d in values):
        raise UsageError(f"degrees must lie in {lo}..{hi}, got {text!r}")
    return values


def parse_floats(text: str) -> list:
    try:
        values = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None
    if any(not math.isfinite(v) for v in values):
        raise UsageError("values must be finite")
    return values


def _betas(args, default: str) -> list:
    betas = parse_floats(args.beta if args.beta is not None else default)
    if any(b < 0 for b in betas):
        raise UsageError("beta must be >= 0")
    return betas


def cmd_thresholds(args) -> dict:
    rows = []
    for d in parse_d_range(args.d or "3:10"):
        bs = analytic.beta_star(d)
        rows.append([d, analytic.beta_dagger(d), bs, analytic.cut_fraction_at(bs)])
    return {"rows": rows}


def cmd_table1(args) -> dict:
    rows = []
    for d in parse_d_range(args.d or "3:10"):
        res = interpolation.optimize_interp(d, grid_resolution=args.grid)
        values = [analytic.first_moment_maxcut_bound(d), res.maxcut_bound,
                  analytic.cut_fraction_at(analytic.beta_star(d))]
        if not all(math.isfinite(v) for v in values):
            raise NumericFailure(f"non-finite bound at d={d}")
        flag = "ok"
        if res.flagged:
            flag = "alpha_boundary" if res.at_alpha_boundary else "unrefined"
        rows.append([d, *values, res.best.alpha, res.best.z, flag])
    return {"rows": rows}


def cmd_fscan(args) -> dict:
    d = parse_d_range(args.d or "3")
    if len(d) != 1:
        raise UsageError("fscan takes a single degree")
    if args.alpha_steps < 11:
        raise UsageError("--alpha-steps must be >= 11")
    if not 0 < args.alpha_max < 1:
        raise UsageError("--alpha-max must lie in (0, 1); the grid may not touch +-1")
    # integer numerators keep the grid exactly symmetric, with alpha = 0 for odd counts
    steps = args.alpha_steps
    alphas = args.alpha_max * (2 * np.arange(steps) - (steps - 1)) / (steps - 1)
    rows = []
    for b in _betas(args, "1.25,1.40"):
        f = analytic.second_moment_rate(analytic.ModelParams(d[0], b), alphas)
        rows.extend([b, a, v] for a, v in zip(alphas, f))
    return {"rows": rows}


def _check(name, estimate, stderr, target, passed):
    return {"check": name, "estimate": estimate, "stderr": stderr, "target": target,
            "passed": bool(passed)}


def _sim_overlap(args, d):
    n = args.n or 500
    betas = _betas(args, "1.0,2.5")
    g = graphs.sample_configuration_model(n, d, args.seed)
    bs = analytic.beta_star(d)
    results = {}
    checks = []
    for b in betas:
        est = dynamics.estimate_overlap(g, b, replicas=args.trials or 80,
                                        sweeps=args.sweeps or 1000, seed=args.seed,
                                        workers=args.workers)
        results[b] = est
        if b < bs:
            limit = 0.05 if b == 0 else 0.15
            checks.append(_check(f"overlap_small[beta={b:g}]", est.mean, est.stderr,
                                 limit, est.mean <= limit))
    below = [b for b in betas if b < bs]
    above = [b for b in betas if b > bs]
    if below and above:
        lo, hi = results[max(below)], results[max(above)]
        pooled = math.hypot(lo.stderr, hi.stderr)
        checks.append(_check(f"overlap_contrast[beta={max(above):g} vs {max(below):g}]",
                             hi.mean - lo.mean, pooled, 3 * pooled,
                             hi.mean - lo.mean >= 3 * pooled))
    estimates = [{"beta": b, "mean": e.mean, "stderr": e.stderr, "pairs": e.pairs,
                  "qualitative": e.qualitative} for b, e in results.items()]
    return {"n": n, "estimates": estimates}, checks, any(e.qualitative for e in results.values())


def _sim_broadcast(args, d):
    depth = args.depth or 8
    if depth < 2:
        raise UsageError("--depth must be >= 2 for the trend check")
    depths = list(range(2, depth + 1, 2))
    trials = args.trials or 2000
    if trials < 100:
        raise UsageError("--trials must be >= 100")
    bs = analytic.beta_star(d)
    estimates, checks = [], []
    for b in _betas(args, "1.4"):
        errs = [broadcast.reconstruction_error(d, b, lv, trials, args.seed, args.workers)
                for lv in depths]
        estimates.extend({"beta": b, "depth": lv, "mean": m, "stderr": s}
                         for lv, (m, s) in zip(depths, errs))
        if b < bs:
            # non-increasing within 3 pooled standard errors
            steps = [e2[0] - e1[0] - 3 * math.hypot(e1[1], e2[1]) for e1, e2 in zip(errs, errs[1:])]
            worst = max(steps) if steps else -1.0
            checks.append(_check(f"bias_decreasing[beta={b:g}]", errs[-1][0], errs[-1][1],
                                 errs[0][0], worst <= 0))
        else:
            checks.append(_check(f"bias_persists[beta={b:g}]", errs[-1][0], errs[-1][1],
                                 0.05, errs[-1][0] >= 0.05))
    return {"depths": depths, "trials": trials, "estimates": estimates}, checks, False


def _sim_planted(args, d):
    n = args.n or 2000
    (b,) = _betas(args, "1.0")[:1]
    reps = args.trials or 200
    sweeps = args.sweeps or 200
    cuts, loops, doubles = [], [], []
    for r in range(reps):
        g, sigma = graphs.sample_planted(n, d, b, args.seed, sweeps=sweeps, replica=r)
        _, lp, mu = graphs.is_simple(g)
        cuts.append(graphs.cut_size(g, sigma) / g.m)
        loops.append(lp)
        doubles.append(mu)
    stats = []
    for name, vals, target in (("cut_fraction", cuts, analytic.cut_fraction_at(b)),
                               ("loops", loops, graphs.planted_loop_mean(d, b)),
                               ("double_edges", doubles, graphs.planted_double_edge_mean(d, b))):
        vals = np.asarray(vals, dtype=float)
        stats.append((name, float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps)), target))
    checks = [_check("cut_fraction", stats[0][1], stats[0][2], stats[0][3],
                     abs(stats[0][1] - stats[0][3]) <= 0.02)]
    checks += [_check(name, m, s, t, abs(m - t) <= 3 * s) for name, m, s, t in stats[1:]]
    return {"n": n, "beta": b, "replicas": reps, "sweeps": sweeps}, checks, False


def exact_state_law(g, beta: float) -> np.ndarray:
    """Boltzmann probabilities indexed by the bit code of the plus spins."""
    codes = np.arange(1 << g.n)
    e = g.edges()
    h = np.zeros(codes.size)
    for u, v in e:
        h += 1 - (((codes >> u) ^ (codes >> v)) & 1)
    w = np.exp(-beta * (h - h.min()))
    return w / w.sum()


def _sim_glauber(args, d):
    (b,) = _betas(args, "1.0")[:1]
    sweeps = args.sweeps or 10 ** 6
    burn = 1000
    cases = {"P2": graphs.from_edges(2, 1, [(0, 1)]),
             "K4": graphs.from_edges(4, 3, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])}
    checks = []
    for i, (name, g) in enumerate(cases.items()):
        rng = stream(args.seed, i)
        sigma, _ = dynamics.run_glauber(g, np.ones(g.n, dtype=np.int8), b, burn, rng)
        _, snaps = dynamics.run_glauber(g, sigma, b, sweeps, rng, record=True)
        codes = ((snaps == 1).astype(np.int64) << np.arange(g.n)).sum(axis=1)
        emp = np.bincount(codes, minlength=1 << g.n) / sweeps
        tv = 0.5 * float(np.abs(emp - exact_state_law(g, b)).sum())
        checks.append(_check(f"state_law_tv[{name}]", tv, None, 0.01, tv <= 0.01))
    return {"beta": b, "sweeps": sweeps, "burn_in": burn}, checks, False


SIMULATIONS = {"overlap": _sim_overlap, "broadcast": _sim_broadcast,
               "planted-stats": _sim_planted, "glauber-check": _sim_glauber}


def cmd_simulate(args) -> dict:
    d = parse_d_range(args.d or "3")
    if len(d) != 1:
        raise UsageError("simulate takes a single degree")
    details, checks, qualitative = SIMULATIONS[args.kind](args, d[0])
    return {"kind": args.kind, "details": details, "checks": checks,
            "passed": all(c["passed"] for c in checks), "qualitative": qualitative}


def cmd_graph(args) -> dict:
    d = parse_d_range(args.d or "3", lo=1)
    if len(d) != 1 or args.n is None:
        raise UsageError("graph needs --n and a single --d")
    if args.out is None:
        raise UsageError("graph needs --out for the edge list")
    n = args.n
    try:
        if args.beta is None:
            g, sigma = graphs.sample_configuration_model(n, d[0], args.seed), None
        else:
            (b,) = _betas(args, "0")[:1]
            g, sigma = graphs.sample_planted(n, d[0], b, args.seed, sweeps=args.sweeps or 200)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    graphs.write_edge_list(g, args.out)
    if sigma is not None and args.spins_out:
        with open(args.spins_out, "w") as fh:
            fh.write("\n".join(str(int(s)) for s in sigma) + "\n")
    simple, loops, multi = graphs.is_simple(g)
    summary = {"n": n, "d": d[0], "m": g.m, "simple": simple, "loops": loops,
               "multi_edges": multi}
    if args.restarts:
        cut, _ = dynamics.local_search_maxcut(g, args.restarts, args.seed)
        summary["local_search_cut_fraction"] = cut / g.m
    return {"summary": summary}


COMMANDS = {"thresholds": cmd_thresholds, "table1": cmd_table1, "fscan": cmd_fscan,
            "simulate": cmd_simulate, "graph": cmd_graph}


def _schema():
    text = resources.files("antiferro").joinpath("schema/output.schema.json").read_text()
    return json.loads(text)


def _config(args) -> dict:
    skip = {"func", "out", "spins_out", "format", "workers"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


def render(args, result: dict) -> str:
    if args.command in COLUMNS:
        columns = COLUMNS[args.command]
        rows = [[_fmt(x) for x in row] for row in result["rows"]]
    elif args.command == "simulate":
        columns = CHECK_COLUMNS
        rows = [[_fmt(c[k]) for k in columns] for c in result["checks"]]
    else:
        columns = list(result["summary"])
        rows = [[_fmt(result["summary"][k]) for k in columns]]
    if args.format == "csv":
        lines = [",".join(columns)] + [",".join(_csv_cell(x) for x in row) for row in rows]
        return "\n".join(lines) + "\n"
    doc = {"command": args.command, "config": _config(args), "columns": columns, "rows": rows}
    if args.command == "simulate":
        doc.update(kind=result["kind"], passed=result["passed"],
                   qualitative=result["qualitative"], details=_jsonable(result["details"]))
    jsonschema.validate(doc, _schema())
    return json.dumps(doc, indent=2) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return _fmt(x)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", help="degree, 'lo:hi' range or comma list")
    common.add_argument("--beta", help="inverse temperature(s), comma separated")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--trials", type=int)
    common.add_argument("--sweeps", type=int)
    common.add_argument("--depth", type=int)
    common.add_argument("--restarts", type=int)

    p = argparse.ArgumentParser(prog="antiferro", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("thresholds", parents=[common], help="threshold table")
    t1 = sub.add_parser("table1", parents=[common], help="max-cut bound table")
    t1.add_argument("--grid", type=int, default=256, help="coarse grid resolution")
    fs = sub.add_parser("fscan", parents=[common], help="second-moment exponent scan")
    fs.add_argument("--alpha-steps", type=int, default=201)
    fs.add_argument("--alpha-max", type=float, default=0.99)
    sim = sub.add_parser("simulate", parents=[common], help="Monte-Carlo checks")
    sim.add_argument("kind", choices=sorted(SIMULATIONS))
    sim.add_argument("--n", type=int)
    gr = sub.add_parser("graph", parents=[common], help="sample a graph to an edge list")
    gr.add_argument("--n", type=int)
    gr.add_argument("--spins-out", help="planted spins, one per line")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1 or args.seed < 0:
        parser.error("--workers must be >= 1 and --seed >= 0")
    for opt in ("trials", "sweeps", "depth", "restarts", "n"):
        val = getattr(args, opt, None)
        if val is not None and val < 1:
            parser.error(f"--{opt} must be >= 1")
    try:
        result = COMMANDS[args.command](args)
        text = render(args, result)
    except UsageError as exc:
        parser.error(str(exc))
    except (NumericFailure, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out and args.command != "graph":
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.command == "simulate" and not result["passed"]:
        return EXIT_STAT
    return EXIT_OK
