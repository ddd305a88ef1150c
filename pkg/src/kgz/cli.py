"""Command line interface: solve, sweep, limit-study, check.

Every option of a subcommand can also come from a JSON document passed via
``--config``; values given on the command line win. Exit codes: 0 success,
1 parameter problem, 2 numerical failure.
"""

import argparse
import json
import sys

from .errors import KgzError, ParameterError
from .harness import (
    SweepSpec,
    aligned_tau,
    limit_study,
    make_params,
    run_sweep,
    write_snapshots,
)
from .presets import case_exponents, domain_for_eps, preset_initial_data
from .solver import run


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse exits with 2 by default; map usage problems to 1
        self.print_usage(sys.stderr)
        raise ParameterError(message)


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ParameterError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(p):
    p.add_argument("--config", help="JSON file with defaults for this subcommand")
    p.add_argument("--preset", help="initial data preset (gauss_sech, bump)")
    p.add_argument("--case", help="incompatibility case: I, II or custom")
    p.add_argument("--alpha", type=float, help="custom case exponent alpha")
    p.add_argument("--beta", type=float, help="custom case exponent beta")
    p.add_argument("--T", type=float, dest="T", help="final time")


def build_parser():
    parser = _Parser(prog="kgz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="single run with field snapshots")
    _add_common(p)
    p.add_argument("--eps", type=float, help="acoustic parameter in (0, 1]")
    p.add_argument("--h", type=float, help="target mesh size")
    p.add_argument("--tau", type=float, help="time step")
    p.add_argument("--snapshots", help="comma-separated snapshot times")
    p.add_argument("--domain", help="override domain, written as --domain=a,b")
    p.add_argument("--out", help="output path prefix")
    p.add_argument("--paper-scale", action="store_true", dest="paper_scale")

    p = sub.add_parser("sweep", help="convergence sweep producing a rate table")
    _add_common(p)
    p.add_argument("--mode", choices=["spatial", "temporal", "eps-limit"])
    p.add_argument("--eps-list", dest="eps_list", help="comma-separated eps values")
    p.add_argument("--h0", type=float, help="coarsest mesh size")
    p.add_argument("--tau0", type=float, help="coarsest time step")
    p.add_argument("--levels", type=int, help="number of halving levels")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--paper-scale", action="store_true", dest="paper_scale")
    p.add_argument("--workers", type=int, help="parallel worker processes")

    p = sub.add_parser("limit-study", help="limit-metric curves per eps")
    _add_common(p)
    p.add_argument("--eps-list", dest="eps_list", help="comma-separated eps values")
    p.add_argument("--h", type=float, help="mesh size")
    p.add_argument("--tau", type=float, help="time step")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--workers", type=int, help="parallel worker processes")

    sub.add_parser("check", help="run the property suite")
    return parser


_DEFAULTS = {
    "solve": {
        "preset": "gauss_sech",
        "case": "II",
        "eps": 1.0,
        "h": 0.1,
        "tau": 1e-3,
        "T": 1.0,
        "out": "kgz_solve",
    },
    "sweep": {
        "preset": "gauss_sech",
        "case": "II",
        "mode": "spatial",
        "T": 1.0,
        "workers": 1,
        "out": "kgz_sweep.csv",
    },
    "limit-study": {
        "preset": "bump",
        "case": "custom",
        "alpha": 0.0,
        "beta": 0.0,
        "eps_list": "0.25,0.125,0.0625,0.03125,0.015625",
        "h": 0.05,
        "tau": 1e-3,
        "T": 1.0,
        "workers": 1,
        "out": "kgz_limit.csv",
    },
}


def _merge_config(args):
    """Layer JSON config under the CLI values, then builtin defaults."""
    merged = dict(vars(args))
    config = {}
    if merged.get("config"):
        with open(merged["config"]) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ParameterError("--config must hold a JSON object")
    defaults = _DEFAULTS.get(merged["command"], {})
    for key, value in merged.items():
        if key == "paper_scale":
            # a store_true flag cannot distinguish absent from false
            merged[key] = bool(value) or bool(config.get(key, False))
        elif value is None:
            if key in config:
                merged[key] = config[key]
            elif key in defaults:
                merged[key] = defaults[key]
    return merged


def _cmd_solve(opt):
    alpha, beta = case_exponents(opt["case"], opt.get("alpha"), opt.get("beta"))
    domain = None
    if opt.get("domain"):
        vals = _floats(opt["domain"]) if isinstance(opt["domain"], str) else tuple(opt["domain"])
        if len(vals) != 2:
            raise ParameterError("--domain wants exactly two numbers 'a,b'")
        domain = vals
    tau, _, adjusted = aligned_tau(opt["T"], opt["tau"])
    params = make_params(opt["eps"], alpha, beta, opt["h"], tau, opt["T"], domain)
    data = preset_initial_data(opt["preset"])
    times = None
    if opt.get("snapshots"):
        times = (
            _floats(opt["snapshots"])
            if isinstance(opt["snapshots"], str)
            else tuple(opt["snapshots"])
        )
    if adjusted:
        print(f"adjusted tau to {tau:.17g} to divide T", file=sys.stderr)
    snaps = run(params, data, times)
    paths = write_snapshots(opt["out"], snaps, params)
    a, b = params.grid.a, params.grid.b
    print(
        f"solved eps={params.eps:g} on ({a:g}, {b:g}) with M={params.grid.M}, "
        f"tau={params.tau:g}; wrote {', '.join(paths)}"
    )
    return 0


def _cmd_sweep(opt):
    eps_list = opt.get("eps_list")
    if isinstance(eps_list, str):
        eps_list = _floats(eps_list)
    spec = SweepSpec(
        mode=str(opt["mode"]).replace("-", "_"),
        preset=opt["preset"],
        case=opt["case"],
        alpha=opt.get("alpha"),
        beta=opt.get("beta"),
        eps_list=eps_list,
        h0=opt.get("h0"),
        tau0=opt.get("tau0"),
        levels=opt.get("levels"),
        T=opt["T"],
        out_path=opt["out"],
        workers=int(opt.get("workers") or 1),
        paper_scale=bool(opt.get("paper_scale")),
    )
    table = run_sweep(spec)
    print(f"wrote {opt['out']} with {len(table.rows)} rows", end="")
    if table.failures:
        print(f" and {len(table.failures)} failed runs", end="")
    if "eta_slope" in table.meta:
        print(f"; eta_e slope {table.meta['eta_slope']}", end="")
    print()
    return 0 if not table.failures else 2


def _cmd_limit_study(opt):
    eps_list = opt.get("eps_list")
    if isinstance(eps_list, str):
        eps_list = _floats(eps_list)
    summary = limit_study(
        preset=opt["preset"],
        case=opt["case"],
        eps_list=eps_list,
        h=opt["h"],
        tau=opt["tau"],
        T=opt["T"],
        alpha=opt.get("alpha"),
        beta=opt.get("beta"),
        out_path=opt["out"],
        workers=int(opt.get("workers") or 1),
    )
    slope = summary["slope"]
    print(f"wrote {opt['out']}; eta_e slope vs eps: {slope if slope is None else f'{slope:.3f}'}")
    return 0


def _cmd_check(opt):
    from .checks import run_all

    results = run_all()
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: {r.detail}")
        failed += 0 if r.passed else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 2


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opt = _merge_config(args)
        handler = {
            "solve": _cmd_solve,
            "sweep": _cmd_sweep,
            "limit-study": _cmd_limit_study,
            "check": _cmd_check,
        }[opt["command"]]
        return handler(opt)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 1
    except KgzError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
