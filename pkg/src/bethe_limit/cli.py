"""Command line front end; every subcommand writes CSV (comment lines start with ``#``).

Exit codes: 0 success, 1 usage error, 2 a verification or assertion
failed, 3 an engine raised.
"""
from __future__ import annotations

import argparse
import sys

from . import bp, correlation, exact, experiments, sampler
from .errors import (
    BetheLimitError,
    HypothesisViolated,
    ParseError,
    PotentialError,
    VerificationFailure,
)
from .factor_graph import cycle_graph, generate_biregular, generate_large_girth, truncated_tree
from .graph_io import format_graph, read_graph
from .potentials import ModelParams, parse_potentials

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_ENGINE = 0, 1, 2, 3

GLOBAL_DEFAULTS = {"potentials": None, "d": None, "seed": 0, "out": None}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(parser: argparse.ArgumentParser) -> None:
    # SUPPRESS lets the flags appear before or after the subcommand without clobbering
    g = parser.add_argument_group("global options")
    g.add_argument("--potentials", default=argparse.SUPPRESS,
                   help="comma separated h_0..h_k, e.g. 0,1,1,0")
    g.add_argument("--d", type=int, default=argparse.SUPPRESS, help="variable degree")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    g.add_argument("--out", default=argparse.SUPPRESS, help="write output here instead of stdout")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bethe-limit", description=__doc__.splitlines()[0])
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a graph file")
    _global_flags(p)
    p.add_argument("--kind", choices=["biregular", "cycle", "tree"], default="biregular")
    p.add_argument("--k", type=int, default=None, help="factor degree (default: from --potentials)")
    p.add_argument("--n-vars", type=int, default=None)
    p.add_argument("--depth", type=int, default=2, help="tree depth (kind=tree)")
    p.add_argument("--simple", action="store_true", help="reject parallel edges")
    p.add_argument("--min-girth", type=float, default=0)

    p = sub.add_parser("exact", help="exact log Z, Phi_G and its beta derivative")
    _global_flags(p)
    p.add_argument("graph")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--max-vars", type=int, default=exact.DEFAULT_MAX_VARS)

    p = sub.add_parser("bp", help="belief propagation and the Bethe value of its beliefs")
    _global_flags(p)
    p.add_argument("graph")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--damping", type=float, default=None)
    p.add_argument("--init", choices=["zero", "plus", "minus"], default="zero")
    p.add_argument("--dump-beliefs", action="store_true")

    p = sub.add_parser("phase", help="symmetric fixed point and Bethe value over a beta grid")
    _global_flags(p)
    p.add_argument("--beta-min", type=float, default=0.0)
    p.add_argument("--beta-max", type=float, default=3.0)
    p.add_argument("--steps", type=int, default=31)

    p = sub.add_parser("sample", help="Glauber estimate of Phi_G'(beta)")
    _global_flags(p)
    p.add_argument("graph")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--sweeps", type=int, default=2000)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--chains", type=int, default=8)

    p = sub.add_parser("converge", help="Phi_G against the Bethe value on growing instances")
    _global_flags(p)
    p.add_argument("--kind", choices=["biregular", "cycle"], default="biregular")
    p.add_argument("--sizes", type=_ints, required=True, help="comma separated n_vars")
    p.add_argument("--betas", type=_floats, required=True, help="comma separated, increasing")
    p.add_argument("--instances", type=int, default=1, help="graphs per size")
    p.add_argument("--min-girth", type=float, default=0)
    p.add_argument("--simple", action="store_true")
    p.add_argument("--exact-cap", type=int, default=18)
    p.add_argument("--sweeps", type=int, default=2000)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--chains", type=int, default=8)

    p = sub.add_parser("verify", help="run the correlation-inequality oracle battery")
    _global_flags(p)
    p.add_argument("--instances", type=int, default=500)
    return parser


def _potentials(args):
    if args.potentials is None:
        raise UsageError("--potentials is required")
    return parse_potentials(args.potentials)


def _d(args, graph=None) -> int:
    if args.d is not None:
        return args.d
    if graph is not None and graph.biregular is not None:
        return graph.biregular[0]
    if graph is not None:
        return max(2, int(graph.var_degrees.max(initial=2)))
    raise UsageError("--d is required")


def _cmd_gen(args) -> str:
    k = args.k
    if k is None:
        k = _potentials(args).k if args.potentials else None
    if args.kind == "cycle":
        if args.n_vars is None:
            raise UsageError("--n-vars is required")
        return format_graph(cycle_graph(args.n_vars))
    if k is None:
        raise UsageError("--k or --potentials is required")
    d = _d(args)
    if args.kind == "tree":
        graph, _ = truncated_tree(d, k, args.depth)
        return format_graph(graph)
    if args.n_vars is None:
        raise UsageError("--n-vars is required")
    if args.min_girth > 0:
        graph = generate_large_girth(d, k, args.n_vars, args.min_girth, seed=args.seed)
    else:
        graph = generate_biregular(d, k, args.n_vars, seed=args.seed, simple=args.simple)
    return format_graph(graph)


def _cmd_exact(args) -> str:
    graph = read_graph(args.graph)
    params = ModelParams(_d(args, graph), _potentials(args), args.beta)
    if graph.is_forest():
        res = exact.tree_partition(graph, params)
    else:
        res, _ = exact.brute_force(graph, params, max_vars=args.max_vars)
    dphi = -(graph.n_factors / graph.n_vars) * res.expected_factor_energy
    row = dict(beta=args.beta, log_z=res.log_partition, phi=res.free_energy_density, dphi=dphi)
    return experiments.to_csv([row], ("beta", "log_z", "phi", "dphi"))


def _cmd_bp(args) -> str:
    graph = read_graph(args.graph)
    params = ModelParams(_d(args, graph), _potentials(args), args.beta)
    msgs, rep = bp.run_bp(graph, params, args.init, tol=args.tol, max_iters=args.max_iters,
                          damping=args.damping)
    tau = bp.beliefs(graph, params, msgs)
    value = bp.bethe_functional(graph, params, tau, check=rep.converged)
    row = dict(converged=rep.converged, iters=rep.iterations, residual=rep.residual, bethe_value=value)
    out = experiments.to_csv([row], ("converged", "iters", "residual", "bethe_value"))
    if args.dump_beliefs:
        rows = [dict(var=v, p_one=float(p)) for v, p in enumerate(tau.tau_v[:, 1])]
        out += "# beliefs\n" + experiments.to_csv(rows, ("var", "p_one"))
    return out


def _cmd_phase(args) -> str:
    config = experiments.ExperimentConfig(
        _d(args), _potentials(args), experiments.beta_grid(args.beta_min, args.beta_max, args.steps))
    rows, crit = experiments.run_phase_scan(config)
    return experiments.phase_csv(rows, crit)


def _cmd_sample(args) -> str:
    graph = read_graph(args.graph)
    params = ModelParams(_d(args, graph), _potentials(args), args.beta)
    est, err = sampler.estimate_expected_energy(graph, params, args.sweeps, args.burn_in,
                                                seed=args.seed, chains=args.chains)
    return experiments.to_csv([dict(beta=args.beta, estimate=est, std_error=err)],
                              ("beta", "estimate", "std_error"))


def _cmd_converge(args) -> str:
    pots = _potentials(args)
    d = 2 if args.kind == "cycle" and args.d is None else _d(args)
    config = experiments.ExperimentConfig(
        d, pots, tuple(args.betas), sizes=tuple(args.sizes), kind=args.kind,
        seeds=tuple(range(args.seed, args.seed + args.instances)), instances=args.instances,
        min_girth=args.min_girth, simple=args.simple, exact_cap=args.exact_cap,
        sweeps=args.sweeps, burn_in=args.burn_in, chains=args.chains, out=args.out)
    rows = experiments.run_convergence_experiment(config)
    return experiments.to_csv(rows, experiments.CONVERGE_COLUMNS)


def _cmd_verify(args) -> tuple[str, bool]:
    rows = correlation.oracle_battery(seed=args.seed, n=args.instances)
    table = correlation.format_battery(rows)
    ok = all(r.failures == 0 for r in rows)
    out = experiments.to_csv(
        [dict(check=r.name, instances=r.instances, failures=r.failures, min_slack=r.min_slack) for r in rows],
        ("check", "instances", "failures", "min_slack"))
    return out + "".join(f"# {line}\n" for line in table.splitlines()), ok


COMMANDS = {"gen": _cmd_gen, "exact": _cmd_exact, "bp": _cmd_bp, "phase": _cmd_phase,
            "sample": _cmd_sample, "converge": _cmd_converge, "verify": _cmd_verify}


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def exit_code_for(exc: BaseException):
    """Map an exception to the documented exit code; ``None`` for genuine bugs."""
    if isinstance(exc, (VerificationFailure, HypothesisViolated)):
        return EXIT_VERIFY
    if isinstance(exc, (UsageError, PotentialError, ParseError, FileNotFoundError)):
        return EXIT_USAGE
    if isinstance(exc, (BetheLimitError, OSError)):
        return EXIT_ENGINE
    if isinstance(exc, ValueError):
        return EXIT_USAGE
    return None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, val in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, val)
    ok = True
    try:
        result = COMMANDS[args.command](args)
        if isinstance(result, tuple):
            result, ok = result
        _emit(result, args.out)
    except Exception as exc:
        code = exit_code_for(exc)
        if code is None:
            raise
        label = {EXIT_USAGE: "usage error", EXIT_VERIFY: "verification failed"}.get(code, "error")
        print(f"{label}: {exc}", file=sys.stderr)
        return code
    if not ok:
        print("verification failed: see the failures column", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
