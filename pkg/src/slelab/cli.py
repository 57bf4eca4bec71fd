"""Command-line entry point: ``slelab <subcommand> [flags]``.

Results go to ``--output`` (CSV or JSON, written atomically) with the resolved
configuration and version embedded; standard output gets one summary line per
result row and progress goes to standard error.

Exit status: 0 on success, 2 for configuration errors, 3 when a statistical
guard trips (low effective sample size, clipping above 5 %, or a check that
misses its tolerance).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from . import exponents as ex
from .drivers import (
    brownian_driver,
    parse_seed,
    theta_process,
    theta_stationary_cdf,
    theta_stationary_density,
)
from .estimators import (
    FlaggedEstimateError,
    box_counting_dimension,
    ims_bulk_estimate,
    ims_default_range,
    mf_spectrum_estimate,
    write_csv,
    write_json,
)
from .exponents import DomainError
from .gff import covariance_exact, covariance_mc, default_modes, truncation_bound
from .loewner import trace
from .martingale import MartingaleParams, check_martingale

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3
CLIP_LIMIT = 0.05
GRID_TOL = 1e-12

# keys that do not change results and are left out of the embedded config
_RUNTIME_KEYS = {"threads", "config", "output", "format", "handler", "quiet"}


class ConfigError(ValueError):
    pass


# --- parsing helpers ----------------------------------------------------------


def parse_grid(text) -> list[float]:
    """``start:stop:step`` (endpoints inclusive within 1e-12), a comma list, or one number."""
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must look like start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step == 0 or (stop - start) * step < 0:
            raise ConfigError(f"grid {text!r} has a step pointing away from stop")
        n = int(math.floor((stop - start) / step + GRID_TOL * max(1.0, abs((stop - start) / step))))
        vals = [start + k * step for k in range(n + 1)]
        if abs(vals[-1] - stop) <= GRID_TOL * max(1.0, abs(stop)):
            vals[-1] = stop
        return [0.0 if abs(v) < GRID_TOL else v for v in vals]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as err:
        raise ConfigError(f"cannot parse grid {text!r}") from err


def parse_complex(text) -> complex:
    """``0.5+0.2i``, ``0.7i``, ``0.3`` and Python's ``0.5+0.2j`` forms."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    try:
        return complex(str(text).strip().replace(" ", "").replace("i", "j"))
    except ValueError as err:
        raise ConfigError(f"cannot parse complex number {text!r}") from err


def load_config(path) -> dict:
    """Read ``key=value`` lines or a JSON object; dashes in keys become underscores."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key=value")
            k, v = line.split("=", 1)
            raw[k.strip()] = v.strip()
    return {k.replace("-", "_"): v for k, v in raw.items()}


# --- argument parser ----------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--kappa", type=float, default=2.0, help="SLE parameter kappa > 0 (dimensionless; default 2)")
    p.add_argument("--seed", default="0", help="master seed, decimal or 0x-hex 64-bit integer (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads >= 1; results do not depend on it (default 1)")
    p.add_argument("--output", "-o", default=None, help="result file path; nothing is written when omitted")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="result file format (default csv)")
    p.add_argument("--config", default=None, help="key=value or JSON file merged under the explicit flags")
    p.add_argument("--quiet", action="store_true", help="suppress progress messages on stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slelab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    common = _common()

    def add(name, handler, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(handler=handler)
        return p

    p = add("exponents", cmd_exponents, "tabulate the closed-form exponents over a parameter grid")
    p.add_argument("--table", choices=("s", "a", "q"), default="s",
                   help="which grid to tabulate: s (derivative exponent), a (integral means) or q (tip spectrum)")
    p.add_argument("--s-grid", default="-0.4:0.9:0.05", help="grid of s values, dimensionless (default -0.4:0.9:0.05)")
    p.add_argument("--a-grid", default="-2:2:0.25", help="grid of integral-means powers a, dimensionless (default -2:2:0.25)")
    p.add_argument("--q-grid", default="-0.5:2:0.25", help="grid of q values, dimensionless (default -0.5:2:0.25)")

    p = add("trace", cmd_trace, "simulate an SLE_kappa trace and write its points")
    p.add_argument("--t", type=float, default=1.0, help="half-plane capacity time of the trace, capacity units (default 1)")
    p.add_argument("--steps", type=int, default=10_000, help="driver time steps (default 10000)")
    p.add_argument("--method", choices=("blocked", "naive"), default="blocked", help="map composition scheme (default blocked)")
    p.add_argument("--offset", type=float, default=1e-4, help="height above the tip at which maps are evaluated, length units (default 1e-4)")
    p.add_argument("--frame", choices=("half-plane", "disk"), default="half-plane", help="coordinate frame of the output (default half-plane)")

    p = add("mf-verify", cmd_mf_verify, "importance-sampled one-point exponents alpha(s) over an s-grid")
    p.add_argument("--s-grid", default="0.2,0.4", help="derivative exponents s inside (s_-, s_+) (default 0.2,0.4)")
    p.add_argument("--eps-grid", default="0.1,0.05,0.025,0.0125", help="decreasing heights eps = Im z, length units (default 0.1,0.05,0.025,0.0125)")
    p.add_argument("--re-z", type=float, default=1.0, help="real part of the start point, length units (default 1)")
    p.add_argument("--t", type=float, default=1.0, help="capacity time of the reverse flow (default 1)")
    p.add_argument("--c", type=float, default=4.0, help="multiplicative window constant c >= 1 (default 4)")
    p.add_argument("--samples", type=int, default=10_000, help="weighted paths per eps (default 10000)")
    p.add_argument("--steps", type=int, default=1000, help="base time steps per path; adaptive refinement near the boundary (default 1000)")
    p.add_argument("--min-height", type=float, default=None,
                   help="optional extra event condition Im f_t^{-1}(z) >= r, length units (default off)")

    p = add("ims-verify", cmd_ims_verify, "bulk integral means slopes over an a-grid")
    p.add_argument("--a-grid", default="0,1", help="integral-means powers a, dimensionless (default 0,1)")
    p.add_argument("--eps-grid", default="0.032,0.016,0.008,0.004,0.002,0.001",
                   help="distances 1-|z| of the circles from the unit circle, disk units, spanning >= 1.5 decades")
    p.add_argument("--zeta", type=float, default=0.2, help="exclusion radius around tip and unit circle, disk units (default 0.2)")
    p.add_argument("--t", type=float, default=1.0, help="capacity time of each curve (default 1)")
    p.add_argument("--steps", type=int, default=10_000, help="driver steps per realisation (default 10000)")
    p.add_argument("--realizations", type=int, default=20, help="independent curves averaged (default 20)")
    p.add_argument("--nodes", type=int, default=2048, help="quadrature nodes per circle (default 2048)")
    p.add_argument("--allow-any-a", action="store_true", help="skip the check that a lies in the measurable range")

    p = add("theta-stationary", cmd_theta, "simulate the theta process and compare with C sin^beta")
    p.add_argument("--rho", type=float, default=2.0, help="interior force-point weight rho (default 2)")
    p.add_argument("--theta0", type=float, default=math.pi / 2, help="initial angle in (0, pi), radians (default pi/2)")
    p.add_argument("--s-horizon", type=float, default=10_000.0, help="length of the log-time run, log-time units (default 10000)")
    p.add_argument("--steps", type=int, default=1_250_000, help="Euler steps; the first 20%% are burn-in (default 1250000)")
    p.add_argument("--bins", type=int, default=50, help="histogram bins on (0, pi) (default 50)")
    p.add_argument("--ks-max", type=float, default=0.02, help="KS distance above which exit status is 3 (default 0.02)")

    p = add("martingale-check", cmd_martingale, "Monte Carlo mean of M_t/M_0 under the reverse flow")
    p.add_argument("--rho", type=float, default=None, help="martingale weight rho (default rho_opt(kappa, 0.5))")
    p.add_argument("--z", default="0.5+0.2i", help="start point in the upper half-plane, e.g. 0.5+0.2i (default 0.5+0.2i)")
    p.add_argument("--t", type=float, default=0.5, help="capacity time, capacity units (default 0.5)")
    p.add_argument("--samples", type=int, default=10_000, help="paths (default 10000)")
    p.add_argument("--steps", type=int, default=10_000, help="time steps per path (default 10000)")
    p.add_argument("--z-max", type=float, default=4.0, help="standard errors tolerated before exit status 3 (default 4)")

    p = add("gff-cov", cmd_gff, "Monte Carlo covariance of the harmonic GFF series at two points")
    p.add_argument("--z", default="0.5", help="first point in the unit disk, e.g. 0.3+0.1i (default 0.5)")
    p.add_argument("--w", default="0.5", help="second point in the unit disk (default 0.5)")
    p.add_argument("--samples", type=int, default=100_000, help="field samples (default 100000)")
    p.add_argument("--modes", type=int, default=None, help="series modes N (default: truncation rule at tolerance --tol)")
    p.add_argument("--tol", type=float, default=1e-6, help="truncation tolerance of the default mode rule (default 1e-6)")

    p = add("dimension", cmd_dimension, "box-counting dimension of a fresh SLE_kappa trace")
    p.add_argument("--t", type=float, default=1.0, help="capacity time of the trace (default 1)")
    p.add_argument("--steps", type=int, default=200_000, help="trace points (default 200000)")
    p.add_argument("--meshes", default="0.4,0.2,0.1,0.05,0.025,0.0125,0.00625",
                   help="box side lengths, length units, spanning >= 1.5 decades")
    return parser


_VALUE_FLAGS = ("--s-grid", "--a-grid", "--q-grid", "--eps-grid", "--meshes", "--z", "--w", "--theta0", "--rho")


def _join_negative_values(argv: list[str]) -> list[str]:
    # argparse takes "-0.4:0.9:0.05" or "-0.3-0.1i" for an option; glue such values to their flag
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if tok in _VALUE_FLAGS and nxt[:1] == "-" and nxt[1:2] in set("0123456789."):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = load_config(args.config)
        except (OSError, ValueError) as err:
            raise ConfigError(f"cannot read config {args.config}: {err}") from err
        sub = parser._subparsers._group_actions[0].choices[args.subcommand]
        known = {a.dest: a for a in sub._actions}
        unknown = sorted(set(cfg) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for k, v in cfg.items():
            act = known[k]
            if isinstance(v, str) and act.type is not None:
                cfg[k] = act.type(v)
            elif isinstance(v, str) and isinstance(act, argparse._StoreTrueAction):
                cfg[k] = v.lower() in ("1", "true", "yes")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# --- helpers -----------------------------------------------------------------


class Run:
    def __init__(self, args):
        self.args = args
        self.t0 = time.perf_counter()

    def progress(self, msg):
        if not self.args.quiet:
            print(f"[{time.perf_counter() - self.t0:8.1f}s] {msg}", file=sys.stderr, flush=True)

    @property
    def config(self) -> dict:
        out = {k: v for k, v in vars(self.args).items() if k not in _RUNTIME_KEYS}
        return {k: (v if isinstance(v, (int, float, str, bool, type(None))) else str(v)) for k, v in out.items()}

    def emit(self, header, rows, payload=None, footer=None, echo=True):
        """Summary lines to stdout; the table (or ``payload`` for JSON) to the output file."""
        for r in rows if echo else ():
            print(" ".join(f"{h}={_fmt(v)}" for h, v in zip(header, r)))
        if footer:
            print(" ".join(f"{h}={_fmt(v)}" for h, v in footer.items()))
        path = self.args.output
        if path is None:
            return
        if self.args.format == "json":
            data = {"schema_version": 1, "subcommand": self.args.subcommand, "columns": list(header),
                    "rows": [list(r) for r in rows]}
            if footer:
                data["summary"] = footer
            if payload:
                data["detail"] = payload
            write_json(data, path, self.config, __version__)
        else:
            body = [list(r) for r in rows]
            if footer:
                body += [list(footer), list(footer.values())]
            comments = [f"config: {json.dumps(self.config, sort_keys=True)}", f"version: {__version__}"]
            write_csv(header, body, path, comments)
        self.progress(f"wrote {path}")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _safe(fn, *a):
    try:
        return float(fn(*a))
    except DomainError:
        return math.nan


def _validate_common(args):
    ex.check_kappa(args.kappa)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    parse_seed(args.seed)
    for name in ("samples", "steps", "realizations", "nodes", "bins"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            raise ConfigError(f"--{name} must be positive")
    for name in ("t", "s_horizon"):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive")


# --- subcommands ---------------------------------------------------------------


def cmd_exponents(run: Run) -> int:
    a, k = run.args, run.args.kappa
    if a.table == "s":
        header = ("s", "xi_tilde", "xi", "alpha", "alpha0", "gamma", "gamma0", "rho_opt")
        fns = (ex.tilde_xi, ex.xi, ex.alpha, ex.alpha0, ex.gamma, ex.gamma0, ex.rho_opt)
        rows = [(s, *(_safe(f, k, s) for f in fns)) for s in parse_grid(a.s_grid)]
    elif a.table == "a":
        header = ("a", "s_star", "ims_star")
        rows = [(x, _safe(ex.s_star, k, x), _safe(ex.ims_star, k, x)) for x in parse_grid(a.a_grid)]
    else:
        header = ("q", "gamma_star")
        rows = [(q, _safe(ex.gamma_star, k, q)) for q in parse_grid(a.q_grid)]
    run.emit(header, rows)
    return EXIT_OK


def cmd_trace(run: Run) -> int:
    a = run.args
    run.progress(f"simulating kappa={a.kappa} trace with {a.steps} steps")
    tr = trace(brownian_driver(a.kappa, a.t, a.steps, parse_seed(a.seed)), a.offset, method=a.method)
    if a.frame == "disk":
        tr = tr.to_disk()
    rows = [(float(t), float(p.real), float(p.imag)) for t, p in zip(tr.capacity_times, tr.points)]
    run.emit(("t", "re", "im"), rows, echo=False)
    print(f"points={len(rows)} tip={_fmt(rows[-1][1])}+{_fmt(rows[-1][2])}i")
    return EXIT_OK


def cmd_mf_verify(run: Run) -> int:
    a = run.args
    s_grid, eps = parse_grid(a.s_grid), parse_grid(a.eps_grid)
    lo, hi = ex.s_bounds(a.kappa)
    if not s_grid or any(not lo < s < hi for s in s_grid):
        raise ConfigError(f"s values must lie in ({lo:.6g}, {hi:.6g})")
    if len(eps) < 4 or any(not 0 < e < 1 for e in eps) or any(np.diff(eps) >= 0):
        raise ConfigError("--eps-grid needs >= 4 decreasing values in (0, 1)")
    if a.c < 1:
        raise ConfigError("--c must be >= 1")
    if a.min_height is not None and not a.min_height > 0:
        raise ConfigError("--min-height must be positive")
    run.progress(f"mf-verify over s={s_grid}, {len(eps)} heights, {a.samples} samples each")
    status = EXIT_OK
    try:
        curve = mf_spectrum_estimate(
            a.kappa, s_grid, eps, seed=parse_seed(a.seed), re_z=a.re_z, t=a.t, c=a.c,
            n_samples=a.samples, steps=a.steps, min_height=a.min_height, threads=a.threads,
        )
    except FlaggedEstimateError as err:
        run.progress(f"guard: {err}")
        curve, status = err.result, EXIT_GUARD
    for rows in curve.extra["rows"]:
        for r in rows:
            rate = r["n_clipped"] / max(1, r["n_clipped"] + r["n_samples"])
            if rate > CLIP_LIMIT:
                run.progress(f"guard: clipping rate {rate:.3f} at eps={r['eps']}")
                status = EXIT_GUARD
    header = ("s", "alpha_hat", "alpha_stderr", "alpha_pred", "xi_tilde_hat", "xi_tilde_pred")
    rows = list(zip(curve.grid, curve.estimated, curve.stderr, curve.predicted,
                    curve.extra["xi_tilde_hat"], curve.extra["xi_tilde_pred"]))
    run.emit(header, rows, payload=curve.to_dict())
    return status


def cmd_ims_verify(run: Run) -> int:
    a = run.args
    a_grid, eps = parse_grid(a.a_grid), parse_grid(a.eps_grid)
    lo, hi = ims_default_range(a.kappa)
    if not a.allow_any_a and any(not lo <= x <= hi for x in a_grid):
        raise ConfigError(f"a values must lie in [{lo:.6g}, {hi:.6g}] (use --allow-any-a to override)")
    if len(eps) < 3 or any(not 0 < e < 1 for e in eps) or math.log10(max(eps) / min(eps)) < 1.5 - 1e-9:
        raise ConfigError("--eps-grid needs >= 3 values in (0, 1) spanning >= 1.5 decades")
    if not 0 < a.zeta < 1:
        raise ConfigError("--zeta must lie in (0, 1)")
    run.progress(f"ims-verify over a={a_grid}, {a.realizations} realisations of {a.steps} steps")
    curve = ims_bulk_estimate(
        a.kappa, a_grid, a.t, eps, zeta=a.zeta, steps=a.steps, seed=parse_seed(a.seed),
        n_realizations=a.realizations, n_nodes=a.nodes, threads=a.threads,
    )
    rows = list(zip(curve.grid, curve.estimated, curve.stderr, curve.predicted))
    run.emit(("a", "slope", "stderr", "ims_pred"), rows, payload=curve.to_dict())
    return EXIT_OK


def cmd_theta(run: Run) -> int:
    a = run.args
    beta = ex.bessel_beta(a.kappa, a.rho)
    if beta <= -1:
        raise ConfigError(f"beta = {beta:.6g} <= -1 has no stationary density")
    if not 0 < a.theta0 < math.pi:
        raise ConfigError("--theta0 must lie in (0, pi)")
    run.progress(f"theta process, beta={beta:.6g}, {a.steps} steps")
    path = theta_process(a.kappa, a.rho, a.theta0, a.s_horizon, a.steps, parse_seed(a.seed))
    sample = np.sort(path.post_burn_in())
    n = sample.size
    cdf = theta_stationary_cdf(a.kappa, a.rho, sample)
    ks = float(max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(n) / n)))
    edges = np.linspace(0.0, math.pi, a.bins + 1)
    hist, _ = np.histogram(sample, bins=edges, density=True)
    mids = 0.5 * (edges[1:] + edges[:-1])
    analytic = theta_stationary_density(a.kappa, a.rho, mids)
    rows = [(float(m), float(h), float(d)) for m, h, d in zip(mids, hist, analytic)]
    footer = {"ks": ks, "n": n, "beta": beta, "reflections": path.reflections}
    run.emit(("theta_bin", "empirical", "analytic"), rows, footer=footer)
    return EXIT_OK if ks < a.ks_max else EXIT_GUARD


def cmd_martingale(run: Run) -> int:
    a = run.args
    rho = ex.rho_opt(a.kappa, 0.5) if a.rho is None else a.rho
    z = parse_complex(a.z)
    params = MartingaleParams(a.kappa, rho, z)
    run.progress(f"martingale check, rho={rho:.6g}, z={z}, {a.samples} paths")
    mean, se = check_martingale(params, a.t, a.steps, a.samples, parse_seed(a.seed), threads=a.threads)
    zscore = (mean - 1.0) / se if se > 0 else 0.0
    run.emit(("mean_ratio", "stderr", "z_score", "rho"), [(mean, se, zscore, float(rho))])
    return EXIT_OK if abs(zscore) <= a.z_max else EXIT_GUARD


def cmd_gff(run: Run) -> int:
    a = run.args
    z, w = parse_complex(a.z), parse_complex(a.w)
    if abs(z) >= 1 or abs(w) >= 1:
        raise ConfigError("--z and --w must lie in the open unit disk")
    if a.samples < 2:
        raise ConfigError("--samples must be >= 2")
    n = a.modes if a.modes is not None else default_modes(max(abs(z), abs(w), 1e-3), a.tol)
    est, se = covariance_mc(n, a.samples, z, w, parse_seed(a.seed))
    exact, bound = covariance_exact(z, w), truncation_bound(n, z, w)
    run.emit(("estimate", "stderr", "exact", "truncation_bound", "modes"), [(est, se, exact, bound, n)])
    return EXIT_OK if abs(est - exact) <= 4.0 * se + bound else EXIT_GUARD


def cmd_dimension(run: Run) -> int:
    a = run.args
    meshes = parse_grid(a.meshes)
    if len(meshes) < 4 or min(meshes) <= 0 or math.log10(max(meshes) / min(meshes)) < 1.5 - 1e-9:
        raise ConfigError("--meshes needs >= 4 positive values spanning >= 1.5 decades")
    run.progress(f"simulating kappa={a.kappa} trace with {a.steps} steps")
    tr = trace(brownian_driver(a.kappa, a.t, a.steps, parse_seed(a.seed)), method="blocked")
    res = box_counting_dimension(tr, meshes)
    footer = {"dimension": res.dimension, "stderr": res.stderr, "predicted": 1.0 + a.kappa / 8.0}
    run.emit(("mesh", "count"), list(zip(res.meshes, res.counts)), footer=footer)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        _validate_common(args)
    except SystemExit as err:  # argparse: --help, --version or a usage error
        return int(err.code or 0)
    except (ConfigError, DomainError, ValueError) as err:
        print(f"slelab: error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    run = Run(args)
    try:
        status = args.handler(run)
    except (ConfigError, DomainError) as err:
        print(f"slelab: error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    run.progress("done")
    return status


if __name__ == "__main__":
    sys.exit(main())
