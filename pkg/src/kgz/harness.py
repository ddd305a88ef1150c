"""Experiment driver: reference runs, error tables, convergence sweeps.

Self-reference convention: the "exact" solution of a study is the same
scheme run on a grid refined by a power of two in the studied direction and
restricted back by injection at the shared nodes. Reference factors of 8x
(space) and 16x (time) leave the reference error far below the measured one;
a reference-independence check lives in the test suite.
"""

import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateProblemError, KgzError, ParameterError, ShapeError
from .grid import Grid1D, grid_norms
from .limits import limit_metrics, trajectory_kg
from .presets import case_exponents, domain_for_eps, preset_initial_data
from .solver import KgzParams, Snapshot, build_layer, density_at, run, trajectory

ALIGN_RTOL = 1e-9


def _f6(x):
    """Normalize a float to the 6-significant-digit CSV representation."""
    if x is None:
        return None
    return float(f"{x:.5E}")


def _fmt(x):
    return "" if x is None else f"{x:.5E}"


def aligned_tau(T, tau):
    """Largest step <= tau that divides T; flags whether it was adjusted."""
    if tau <= 0 or T <= 0:
        raise ParameterError("T and tau must be positive")
    q = T / tau
    k = round(q)
    if k >= 1 and abs(q - k) <= ALIGN_RTOL * max(1.0, q):
        return tau, int(k), False
    k = math.ceil(q)
    return T / k, int(k), True


def grid_for(eps, h, domain=None):
    """Grid covering the eps-dependent domain with spacing closest to h."""
    a, b = domain_for_eps(eps) if domain is None else domain
    M = round((b - a) / h)
    if M < 2:
        raise ParameterError(f"h={h} is too coarse for the domain ({a}, {b})")
    return Grid1D(a, b, M)


def make_params(eps, alpha, beta, h, tau, T, domain=None):
    return KgzParams(
        eps=eps, alpha=alpha, beta=beta, grid=grid_for(eps, h, domain), tau=tau, T=T
    )


def _check_refine(factor, name):
    if factor < 1 or factor & (factor - 1):
        raise ParameterError(f"{name} must be a power of two >= 1, got {factor}")


def reference_solution(params, data, refine_space=8, refine_time=1, times=None):
    """Refined self-run restricted to the coarse grid by injection."""
    _check_refine(refine_space, "refine_space")
    _check_refine(refine_time, "refine_time")
    grid = params.grid
    fine_grid = Grid1D(grid.a, grid.b, grid.M * refine_space)
    fine = replace(params, grid=fine_grid, tau=params.tau / refine_time)
    snaps = run(fine, data, times)
    s = refine_space
    return [Snapshot(t=sn.t, E=sn.E[::s], F=sn.F[::s], N=sn.N[::s]) for sn in snaps]


def error_metrics(numeric, reference, grid, layer=None):
    """Relative field and density errors of a snapshot against a reference.

    The field error uses the composite discrete H1 norm (L2 plus seminorm)
    in both numerator and denominator; the density error is relative L2.
    """
    if numeric.E.shape != (grid.M + 1,) or reference.E.shape != (grid.M + 1,):
        raise ShapeError("snapshots do not match the grid")
    if abs(numeric.t - reference.t) > ALIGN_RTOL * max(1.0, abs(reference.t)):
        raise ShapeError(
            f"snapshots taken at different times: {numeric.t} vs {reference.t}"
        )

    def _density(snap):
        if snap.N is not None:
            return snap.N
        if layer is None:
            raise ShapeError("snapshot lacks a density field and no layer was given")
        return density_at(snap.E, snap.F, snap.t, layer)

    e = reference.E - numeric.E
    ne = grid_norms(e, grid)
    nE = grid_norms(reference.E, grid)
    denom_e = nE.l2 + nE.h1_semi
    n = _density(reference) - _density(numeric)
    denom_n = grid_norms(_density(reference), grid).l2
    if denom_e <= 0 or denom_n <= 0:
        raise DegenerateProblemError("reference solution is identically zero")
    return (ne.l2 + ne.h1_semi) / denom_e, grid_norms(n, grid).l2 / denom_n


def convergence_rate(coarse_err, fine_err):
    """Observed order log2(coarse/fine); None when undefined."""
    if coarse_err is None or fine_err is None or coarse_err <= 0 or fine_err <= 0:
        return None
    return math.log2(coarse_err / fine_err)


@dataclass(frozen=True)
class ErrorRow:
    eps: float
    h: float
    tau: float
    t: float
    e_err: float
    n_err: float
    rate_e: float = None
    rate_n: float = None

    def __post_init__(self):
        for name in ("e_err", "n_err"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ParameterError(f"{name} must be finite and >= 0, got {v}")
        for name in ("eps", "h", "tau", "t", "e_err", "n_err", "rate_e", "rate_n"):
            object.__setattr__(self, name, _f6(getattr(self, name)))


@dataclass(frozen=True)
class FailedRow:
    eps: float
    h: float
    tau: float
    message: str


@dataclass
class RateTable:
    meta: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def __eq__(self, other):
        return (
            isinstance(other, RateTable)
            and self.meta == other.meta
            and self.rows == other.rows
            and self.failures == other.failures
        )


_HEADER = "eps,h,tau,t,e_err,n_err,rate_e,rate_n"


def write_table(table, path):
    """Atomically write a rate table; byte layout is fully deterministic."""
    lines = ["# kgz sweep table"]
    for key, value in table.meta.items():
        lines.append(f"# {key}={value}")
    for fr in table.failures:
        lines.append(f"# failed eps={_fmt(fr.eps)} h={_fmt(fr.h)} tau={_fmt(fr.tau)} {fr.message}")
    lines.append(_HEADER)
    for r in table.rows:
        lines.append(
            ",".join(
                [
                    _fmt(r.eps),
                    _fmt(r.h),
                    _fmt(r.tau),
                    _fmt(r.t),
                    _fmt(r.e_err),
                    _fmt(r.n_err),
                    _fmt(r.rate_e),
                    _fmt(r.rate_n),
                ]
            )
        )
    for fr in table.failures:
        lines.append(
            ",".join([_fmt(fr.eps), _fmt(fr.h), _fmt(fr.tau), "", "ERROR", "ERROR", "", ""])
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_table(path):
    """Parse a sweep CSV back into a RateTable."""
    meta = {}
    rows = []
    failures = []
    fail_msgs = {}
    with open(path, "r", newline="") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("failed "):
                    parts = body[len("failed ") :].split(" ", 3)
                    key = tuple(p.split("=", 1)[1] for p in parts[:3])
                    fail_msgs[key] = parts[3] if len(parts) > 3 else ""
                elif "=" in body:
                    key, value = body.split("=", 1)
                    meta[key] = value
                continue
            if line == _HEADER:
                continue
            cells = line.split(",")
            if "ERROR" in cells:
                key = (cells[0], cells[1], cells[2])
                failures.append(
                    FailedRow(
                        eps=float(cells[0]),
                        h=float(cells[1]),
                        tau=float(cells[2]),
                        message=fail_msgs.get(key, ""),
                    )
                )
                continue
            vals = [float(c) if c else None for c in cells]
            rows.append(
                ErrorRow(
                    eps=vals[0],
                    h=vals[1],
                    tau=vals[2],
                    t=vals[3],
                    e_err=vals[4],
                    n_err=vals[5],
                    rate_e=vals[6],
                    rate_n=vals[7],
                )
            )
    return RateTable(meta=meta, rows=rows, failures=failures)


@dataclass(frozen=True)
class SweepSpec:
    mode: str
    preset: str = "gauss_sech"
    case: str = "II"
    alpha: float = None
    beta: float = None
    eps_list: tuple = None
    h0: float = None
    tau0: float = None
    levels: int = None
    T: float = 1.0
    out_path: str = None
    refine_space: int = 8
    refine_time: int = 16
    workers: int = 1
    paper_scale: bool = False

    def resolved(self):
        """Fill mode-dependent defaults; an explicit value always wins."""
        if self.mode not in ("spatial", "temporal", "eps_limit"):
            raise ParameterError(f"unknown sweep mode {self.mode!r}")
        d = {}
        if self.mode == "spatial":
            d["h0"], d["tau0"], d["levels"] = 0.2, 1e-4, 4
            d["eps_list"] = (1.0, 0.25, 0.0625)
            if self.paper_scale:
                d["tau0"] = 1e-5
                d["levels"] = 6
                d["eps_list"] = tuple(0.5**i for i in range(9))
        elif self.mode == "temporal":
            d["h0"], d["tau0"], d["levels"] = 0.005, 0.05, 6
            d["eps_list"] = (1.0, 0.0625)
            if self.paper_scale:
                d["h0"] = 2.5e-4
                d["levels"] = 8
                d["eps_list"] = tuple(0.5**i for i in range(9))
        else:
            d["h0"], d["tau0"], d["levels"] = 0.05, 1e-3, 2
            d["eps_list"] = tuple(0.5**i for i in range(2, 7))
        out = replace(
            self,
            h0=self.h0 if self.h0 is not None else d["h0"],
            tau0=self.tau0 if self.tau0 is not None else d["tau0"],
            levels=self.levels if self.levels is not None else d["levels"],
            eps_list=tuple(self.eps_list) if self.eps_list else d["eps_list"],
        )
        if out.levels < 2:
            raise ParameterError(f"levels must be >= 2, got {out.levels}")
        for eps in out.eps_list:
            if not 0 < eps <= 1:
                raise ParameterError(f"eps values must lie in (0, 1], got {eps}")
        return out

    def exponents(self):
        return case_exponents(self.case, self.alpha, self.beta)


def _solve_task(task):
    """Run one (eps, h, tau) case; executed in a worker process."""
    data = preset_initial_data(task["preset"])
    params = make_params(
        task["eps"], task["alpha"], task["beta"], task["h"], task["tau"], task["T"]
    )
    try:
        if task["kind"] == "final":
            snap = run(params, data, [task["T"]])[0]
            return {"ok": True, "E": snap.E, "F": snap.F, "N": snap.N, "t": snap.t}
        if task["kind"] == "reference":
            snap = reference_solution(
                params, data, task["refine_space"], task["refine_time"], [task["T"]]
            )[0]
            return {"ok": True, "E": snap.E, "F": snap.F, "N": snap.N, "t": snap.t}
        if task["kind"] == "limit":
            summary = _limit_summary(
                params, data, want_curves=task.get("want_curves", False)
            )
            summary["ok"] = True
            return summary
        raise ValueError(f"unknown task kind {task['kind']!r}")
    except KgzError as exc:
        return {"ok": False, "message": f"{type(exc).__name__}: {exc}"}


def _limit_summary(params, data, want_curves=False):
    layer = build_layer(params, data)
    coupled = trajectory(params, data)
    limit = trajectory_kg(params, data, layer, use_potential=True)
    metrics = limit_metrics(coupled, limit, params.grid, params.tau)
    k_star = int(np.argmax(metrics.eta_e))
    f_l2 = np.array([grid_norms(Fk, params.grid).l2 for Fk in coupled.F])
    out = {
        "max_eta_e": float(metrics.eta_e[k_star]),
        "t_max": float(metrics.times[k_star]),
        "max_f_over_eps": float(np.max(f_l2) / params.eps),
    }
    if want_curves:
        out["curves"] = metrics
    return out


def _run_tasks(tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_solve_task, tasks))
    return [_solve_task(t) for t in tasks]


def fit_slope(xs, ys):
    """Least-squares slope of ys against xs."""
    return float(np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 1)[0])


def run_sweep(spec):
    """Execute a convergence sweep and return its rate table.

    Spatial and temporal modes refine one direction by halvings and compare
    final-time snapshots against a refined self-reference shared per eps
    (refined from the finest level, which makes it at least the requested
    factor for every level). The eps-limit mode runs the coupled system
    and its limit model per eps and reports the limit metrics; rate columns
    stay empty there and the fitted slope lands in the table metadata.
    """
    spec = spec.resolved()
    alpha, beta = spec.exponents()
    tau, _, adjusted = aligned_tau(spec.T, spec.tau0)
    meta = {
        "mode": spec.mode,
        "preset": spec.preset,
        "case": spec.case,
        "alpha": f"{alpha:g}",
        "beta": f"{beta:g}",
        "T": f"{spec.T:g}",
        "refine_space": str(spec.refine_space),
        "refine_time": str(spec.refine_time),
    }
    if adjusted:
        meta["tau_adjusted"] = f"{tau:.17g}"

    if spec.mode == "eps_limit":
        return _run_eps_limit(spec, alpha, beta, tau, meta)

    eps_order = sorted(spec.eps_list, reverse=True)
    if spec.mode == "spatial":
        scales = [spec.h0 / 2**i for i in range(spec.levels)]
        ref_kw = {"refine_space": spec.refine_space, "refine_time": 1}
    else:
        scales = []
        t = tau
        for _ in range(spec.levels):
            scales.append(t)
            t /= 2.0
        ref_kw = {"refine_space": 1, "refine_time": spec.refine_time}

    tasks = []
    for eps in eps_order:
        base = {
            "preset": spec.preset,
            "alpha": alpha,
            "beta": beta,
            "eps": eps,
            "T": spec.T,
        }
        for s in scales:
            h = s if spec.mode == "spatial" else spec.h0
            tt = tau if spec.mode == "spatial" else s
            tasks.append(dict(base, kind="final", h=h, tau=tt))
        h_fine = scales[-1] if spec.mode == "spatial" else spec.h0
        t_fine = tau if spec.mode == "spatial" else scales[-1]
        tasks.append(dict(base, kind="reference", h=h_fine, tau=t_fine, **ref_kw))

    results = _run_tasks(tasks, spec.workers)

    table = RateTable(meta=meta)
    i = 0
    for eps in eps_order:
        level_results = results[i : i + len(scales)]
        ref = results[i + len(scales)]
        i += len(scales) + 1
        prev_errs = None
        for lvl, (s, res) in enumerate(zip(scales, level_results)):
            h = s if spec.mode == "spatial" else spec.h0
            tt = tau if spec.mode == "spatial" else s
            grid = grid_for(eps, h)
            if not res["ok"] or not ref["ok"]:
                msg = res.get("message") or ref.get("message", "reference failed")
                table.failures.append(
                    FailedRow(eps=_f6(eps), h=_f6(grid.h), tau=_f6(tt), message=msg)
                )
                prev_errs = None
                continue
            if spec.mode == "spatial":
                stride = 2 ** (spec.levels - 1 - lvl)
                ref_snap = Snapshot(
                    t=ref["t"], E=ref["E"][::stride], F=ref["F"][::stride], N=ref["N"][::stride]
                )
            else:
                ref_snap = Snapshot(t=ref["t"], E=ref["E"], F=ref["F"], N=ref["N"])
            num_snap = Snapshot(t=res["t"], E=res["E"], F=res["F"], N=res["N"])
            try:
                e_err, n_err = error_metrics(num_snap, ref_snap, grid)
            except KgzError as exc:
                table.failures.append(
                    FailedRow(
                        eps=_f6(eps), h=_f6(grid.h), tau=_f6(tt),
                        message=f"{type(exc).__name__}: {exc}",
                    )
                )
                prev_errs = None
                continue
            rate_e = rate_n = None
            if prev_errs is not None:
                rate_e = convergence_rate(prev_errs[0], e_err)
                rate_n = convergence_rate(prev_errs[1], n_err)
            table.rows.append(
                ErrorRow(
                    eps=eps, h=grid.h, tau=tt, t=spec.T,
                    e_err=e_err, n_err=n_err, rate_e=rate_e, rate_n=rate_n,
                )
            )
            prev_errs = (e_err, n_err)

    if spec.out_path:
        write_table(table, spec.out_path)
    return table


def _run_eps_limit(spec, alpha, beta, tau, meta):
    eps_order = sorted(spec.eps_list, reverse=True)
    tasks = [
        {
            "preset": spec.preset,
            "alpha": alpha,
            "beta": beta,
            "eps": eps,
            "h": spec.h0,
            "tau": tau,
            "T": spec.T,
            "kind": "limit",
        }
        for eps in eps_order
    ]
    results = _run_tasks(tasks, spec.workers)
    table = RateTable(meta=meta)
    meta["eps_limit_columns"] = "e_err:max_eta_e,n_err:max_f_l2_over_eps"
    points = []
    for eps, res in zip(eps_order, results):
        grid = grid_for(eps, spec.h0)
        if not res["ok"]:
            table.failures.append(
                FailedRow(eps=_f6(eps), h=_f6(grid.h), tau=_f6(tau), message=res["message"])
            )
            continue
        table.rows.append(
            ErrorRow(
                eps=eps, h=grid.h, tau=tau, t=res["t_max"],
                e_err=res["max_eta_e"], n_err=res["max_f_over_eps"],
            )
        )
        points.append((eps, res["max_eta_e"]))
    if len(points) >= 2:
        slope = fit_slope(
            [math.log2(p[0]) for p in points], [math.log2(p[1]) for p in points]
        )
        meta["eta_slope"] = f"{_f6(slope):.5E}"
    if spec.out_path:
        write_table(table, spec.out_path)
    return table


def limit_study(preset, case, eps_list, h, tau, T=1.0, alpha=None, beta=None, out_path=None, workers=1):
    """Full limit-metric curves per eps, written as a long-format CSV."""
    alpha, beta = case_exponents(case, alpha, beta)
    tau, n_steps, _ = aligned_tau(T, tau)
    if n_steps < 3:
        raise ParameterError(
            "limit metrics need at least 4 time levels; decrease tau or increase T"
        )
    tasks = [
        {
            "preset": preset,
            "alpha": alpha,
            "beta": beta,
            "eps": eps,
            "h": h,
            "tau": tau,
            "T": T,
            "kind": "limit",
            "want_curves": True,
        }
        for eps in sorted(eps_list, reverse=True)
    ]
    results = _run_tasks(tasks, workers)
    summary = {"per_eps": {}, "slope": None}
    lines = ["# kgz limit study", f"# preset={preset}", f"# case={case}",
             f"# alpha={alpha:g}", f"# beta={beta:g}", f"# h={h:g}",
             f"# tau={tau:.17g}", f"# T={T:g}"]
    points = []
    body = []
    for task, res in zip(tasks, results):
        eps = task["eps"]
        if not res["ok"]:
            raise KgzError(f"limit run failed for eps={eps}: {res['message']}")
        curves = res["curves"]
        summary["per_eps"][eps] = {
            "max_eta_e": res["max_eta_e"],
            "t_max": res["t_max"],
            "max_f_over_eps": res["max_f_over_eps"],
        }
        points.append((eps, res["max_eta_e"]))
        for k in range(len(curves.times)):
            body.append(
                ",".join(
                    [
                        _fmt(eps),
                        _fmt(curves.times[k]),
                        _fmt(curves.eta_2[k]),
                        _fmt(curves.eta_inf[k]),
                        _fmt(curves.eta_e[k]),
                    ]
                )
            )
    if len(points) >= 2:
        summary["slope"] = fit_slope(
            [math.log2(p[0]) for p in points], [math.log2(p[1]) for p in points]
        )
        lines.append(f"# eta_slope={summary['slope']:.6f}")
    lines.append("eps,t,eta_2,eta_inf,eta_e")
    lines.extend(body)
    if out_path:
        _atomic_write(out_path, "\n".join(lines) + "\n")
    return summary


def write_snapshots(out_prefix, snaps, params):
    """One CSV per snapshot time with node coordinates and all fields."""
    grid = params.grid
    paths = []
    for snap in snaps:
        path = f"{out_prefix}_t{snap.t:g}.csv"
        lines = [
            "# kgz solve snapshot",
            f"# eps={params.eps:g}",
            f"# alpha={params.alpha:g}",
            f"# beta={params.beta:g}",
            f"# domain=({grid.a:g}, {grid.b:g})",
            f"# h={grid.h:.17g}",
            f"# tau={params.tau:.17g}",
            f"# t={snap.t:.17g}",
            "x,E,F,N",
        ]
        for j in range(grid.M + 1):
            lines.append(
                ",".join(
                    [
                        _fmt(grid.nodes[j]),
                        _fmt(snap.E[j]),
                        _fmt(snap.F[j]),
                        _fmt(snap.N[j]),
                    ]
                )
            )
        _atomic_write(path, "\n".join(lines) + "\n")
        paths.append(path)
    return paths
