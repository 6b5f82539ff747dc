"""Command line entry point: run scenarios, validate core properties.

Usage:
    besov-ks run <E1|...|E6|all> [flags]
    besov-ks validate

A flat key-value TOML file may supply any flag default; explicit flags
override the file.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import experiments
from .dyadic import BesovParams, make_dyadic_family, make_initial_data
from .grid import Field, gradient, heat_propagate, lp_norm, make_grid
from .solver import SolverConfig, solve


def _parse_extended(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="besov-ks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run verification scenarios")
    run.add_argument("scenario", choices=list(experiments.SCENARIOS) + ["all"])
    run.add_argument("--config", default=None, help="flat TOML file with flag defaults")
    run.add_argument("--d", type=int, default=None)
    run.add_argument("--s", type=float, default=None)
    run.add_argument("--p", type=_parse_extended, default=None)
    run.add_argument("--r", type=_parse_extended, default=None)
    run.add_argument("--n-min", type=int, default=None)
    run.add_argument("--n-max", type=int, default=None)
    run.add_argument("--grid", type=int, default=None, help="fixed points per axis (default: auto from n)")
    run.add_argument("--half-period", type=float, default=None)
    run.add_argument("--t-grid", default=None, help="comma-separated save times")
    run.add_argument("--dt", type=float, default=None)
    run.add_argument("--quad-steps", type=int, default=None)
    run.add_argument("--out", default="reports")

    sub.add_parser("validate", help="run the core property suites")
    return parser


# d=2 smoke profile: small grid, short period, E1/E2 only; s raised above
# the d=2 critical index d/p + 1 = 2 to stay admissible, and three n values
# so the rate fits are determined
_D2_DEFAULTS = {"grid": 512, "half_period": 2.0 * math.pi, "n_min": 3, "n_max": 5,
                "s": 2.5}


def _spec_kwargs(args) -> dict:
    file_conf = {}
    if args.config:
        with open(args.config, "rb") as fh:
            file_conf = tomllib.load(fh)

    def pick(flag, key, default):
        if flag is not None:
            return flag
        if key in file_conf:
            return file_conf[key]
        return default

    d = int(pick(args.d, "d", 1))
    defaults = dict(_D2_DEFAULTS) if d == 2 else {}
    kwargs = {
        "d": d,
        "s": float(pick(args.s, "s", defaults.get("s", 2.0))),
        "p": float(pick(args.p, "p", 2.0)),
        "r": float(pick(args.r, "r", 2.0)),
        "n_min": int(pick(args.n_min, "n_min", defaults.get("n_min", 3))),
        "n_max": int(pick(args.n_max, "n_max", defaults.get("n_max", 7))),
        "half_period": float(pick(args.half_period, "half_period",
                                  defaults.get("half_period", 16.0 * math.pi))),
        "grid_points": int(pick(args.grid, "grid", defaults.get("grid", 0))),
        "dt": float(pick(args.dt, "dt", 0.0)),
        "quad_steps": int(pick(args.quad_steps, "quad_steps", 64)),
    }
    t_grid = pick(args.t_grid, "t_grid", None)
    if t_grid is not None:
        if isinstance(t_grid, str):
            t_grid = [float(x) for x in t_grid.split(",") if x.strip()]
        kwargs["t_grid"] = tuple(t_grid)
    return kwargs


def _cmd_run(args) -> int:
    kwargs = _spec_kwargs(args)
    names = list(experiments.SCENARIOS) if args.scenario == "all" else [args.scenario]
    if kwargs["d"] != 1:
        names = [n for n in names if n in ("E1", "E2")]
        if not names:
            print(f"scenario {args.scenario} is d=1 only; d={kwargs['d']} covers E1/E2",
                  file=sys.stderr)
            return 2
    all_ok = True
    for name in names:
        spec = experiments.ExperimentSpec(scenario=name, **kwargs)
        t0 = time.time()
        report = experiments.run_scenario(spec)
        csv_path, json_path = experiments.write_report(report, args.out)
        status = "PASS" if report.passed else "FAIL"
        print(f"{name}: {status} ({time.time() - t0:.1f}s) -> {csv_path}, {json_path}")
        for group in (report.fits, report.checks):
            for key, entry in group.items():
                if not entry["passed"]:
                    extra = f" slope={entry['slope']:.3f} target={entry['target']:g}" \
                        if "slope" in entry else ""
                    print(f"  failed: {key}{extra}")
        all_ok = all_ok and report.passed
    return 0 if all_ok else 1


def _cmd_validate() -> int:
    """Quick pass over the core invariants; the pytest suite is the full set."""
    bp = BesovParams(2.0, 2.0, 2.0)
    grid = make_grid(1, 4096, 16.0 * math.pi)
    fam = make_dyadic_family(grid)
    rng = np.random.default_rng(7)
    f = Field(grid, values=rng.standard_normal(grid.shape))
    results = []

    rt = Field(grid, spectrum=f.spectrum)
    results.append(("fft round trip <= 1e-12",
                    float(np.max(np.abs(rt.values - f.values))) <= 1e-12 * lp_norm(f, math.inf)))

    xi = grid.frequency_magnitude()
    cov = fam.coverage()
    sel = xi <= 1.12 * 2.0 ** (fam.j_max + 1)
    results.append(("partition of unity <= 1e-12", float(np.max(np.abs(cov[sel] - 1.0))) <= 1e-12))

    parseval = math.sqrt(float(np.sum(np.abs(f.spectrum) ** 2)) * grid.volume)
    results.append(("parseval <= 1e-10", abs(parseval - lp_norm(f, 2)) <= 1e-10 * lp_norm(f, 2)))

    u0 = make_initial_data(4, bp, grid)
    spec5 = Field(grid, spectrum=u0.spectrum * fam.block_symbol(4))
    off = lp_norm(u0 - spec5, 2) / lp_norm(u0, 2)
    results.append(("single-block data <= 1e-12", off <= 1e-12))

    a = heat_propagate(heat_propagate(f, 0.1), 0.2)
    b = heat_propagate(f, 0.3)
    results.append(("heat semigroup <= 1e-12",
                    lp_norm(a - b, math.inf) <= 1e-12 * lp_norm(f, math.inf)))

    cfg = SolverConfig(epsilon=2.0**-8, dt=0.0125 / 4, T=0.05, save_times=(0.05,))
    traj = solve(u0, cfg)
    m0 = u0.spectrum.flat[0].real * grid.volume
    drift = max(abs(dg["mass"] - m0) for dg in traj.diagnostics)
    results.append(("mass conservation <= 1e-10", drift <= 1e-10 * (1.0 + abs(m0))))

    g = gradient(u0)[0]
    ratio = lp_norm(g, 2) / (2.0**4 * lp_norm(u0, 2))
    results.append(("bernstein ratio in [0.5, 3.0]", 0.5 <= ratio <= 3.0))

    ok = True
    for name, passed in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_validate()


if __name__ == "__main__":
    sys.exit(main())
