"""Verification scenarios E1-E6: run the solver sweeps, fit the rates,
and emit machine-readable CSV/JSON reports.

Every scenario is deterministic (no randomness anywhere), so reruns with
the same configuration produce byte-identical reports.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .dyadic import (
    BesovParams,
    besov_norm,
    make_data_profile,
    make_dyadic_family,
    make_initial_data,
    CARRIER_FACTOR,
)
from .grid import Field, GridSpec, dealias, make_grid
from .solver import SolverConfig, decompose, solve, solve_u1, solve_u2

__all__ = [
    "ExperimentSpec",
    "RateReport",
    "fit_loglog",
    "run_E1_norm_scaling",
    "run_E2_I1_rate",
    "run_E3_I2_rate",
    "run_E4_I3_rate",
    "run_E5_main_theorem",
    "run_E6_uniform_bounds",
    "run_scenario",
    "write_report",
    "SCENARIOS",
]

DEFAULT_T_GRID = (0.0125, 0.025, 0.05, 0.1, 0.2)

# Frozen calibrated constants (measured once on the default d=1 profile,
# then fixed; see the uniform-bound and remainder checks below).
FROZEN_UNIFORM_RATIO_S = 1.5
FROZEN_UNIFORM_RATIO_S1 = 1.5
FROZEN_L2_CONSTANT = 0.01
# relative slack for the E5 floor comparisons: the carrier frequency is
# snapped to the grid lattice, which perturbs D(n, t) at the 1e-3 level
E5_TREND_SLACK = 0.01

# grids the d=1 harness may auto-select from
_AUTO_N = (4096, 8192, 16384, 32768)


@dataclass
class ExperimentSpec:
    scenario: str
    d: int = 1
    s: float = 2.0
    p: float = 2.0
    r: float = 2.0
    n_min: int = 3
    n_max: int = 7
    t_grid: tuple = DEFAULT_T_GRID
    half_period: float = 16.0 * math.pi
    grid_points: int = 0  # 0 = auto-select from n
    dt: float = 0.0  # 0 = auto from the grid
    quad_steps: int = 64
    dealias_fraction: float = 0.5

    def __post_init__(self):
        self.t_grid = tuple(float(t) for t in self.t_grid)
        bp = self.besov()
        if not bp.admissible(self.d):
            raise ValueError(f"(s,p,r)=({self.s},{self.p},{self.r}) is not admissible in d={self.d}")

    def besov(self) -> BesovParams:
        return BesovParams(s=self.s, p=self.p, r=self.r)

    def n_range(self):
        return range(self.n_min, self.n_max + 1)

    def grid_for_n(self, n: int) -> GridSpec:
        """Smallest allowed grid keeping the quadratic band 2*omega_n of
        the nonlinearity below the dealias cutoff."""
        if self.grid_points:
            return make_grid(self.d, self.grid_points, self.half_period)
        carrier = CARRIER_FACTOR * 2.0**n
        need = 2.0 * (carrier + 0.5) + 1.0
        for N in _AUTO_N:
            g = make_grid(self.d, N, self.half_period)
            if need <= self.dealias_fraction * g.kmax:
                return g
        raise ValueError(f"no configured grid resolves n={n}")

    def dt_for(self, grid: GridSpec) -> float:
        if self.dt:
            return self.dt
        dt = self.t_grid[0] if self.t_grid else 0.0125
        while dt > 0.5 / grid.kmax:
            dt /= 2.0
        return dt

    def solver_config(self, grid: GridSpec, epsilon: float) -> SolverConfig:
        T = max(self.t_grid)
        return SolverConfig(
            epsilon=epsilon,
            dt=self.dt_for(grid),
            T=T,
            dealias_fraction=self.dealias_fraction,
            save_times=self.t_grid,
        )

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=float)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class RateReport:
    scenario: str
    rows: list = field(default_factory=list)  # dicts: n, epsilon, t, norm, value
    fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add_row(self, n, epsilon, t, norm, value):
        self.rows.append(
            {"n": int(n), "epsilon": float(epsilon), "t": float(t),
             "norm": str(norm), "value": float(value)}
        )

    def add_fit(self, name, slope, intercept, max_residual, target, tol, kind):
        if kind == "two_sided":
            passed = abs(slope - target) <= tol
        elif kind == "at_most":
            passed = slope <= target + tol
        elif kind == "at_least":
            passed = slope >= target - tol
        else:
            raise ValueError(f"unknown fit kind {kind}")
        self.fits[name] = {
            "slope": float(slope),
            "intercept": float(intercept),
            "max_residual": float(max_residual),
            "target": float(target),
            "tol": float(tol),
            "kind": kind,
            "passed": bool(passed),
        }

    def add_check(self, name, passed, **detail):
        entry = {"passed": bool(passed)}
        for k, v in detail.items():
            entry[k] = float(v) if isinstance(v, (int, float, np.floating)) else v
        self.checks[name] = entry

    @property
    def passed(self) -> bool:
        ok = all(f["passed"] for f in self.fits.values())
        return ok and all(c["passed"] for c in self.checks.values())

    def values(self, norm, **match):
        out = []
        for row in self.rows:
            if row["norm"] != norm:
                continue
            if any(abs(row[k] - v) > 1e-12 for k, v in match.items()):
                continue
            out.append(row)
        return out


def fit_loglog(points):
    """Least-squares line through (log x, log y); residual in log space."""
    points = list(points)
    if len(points) < 3:
        raise ValueError(f"need at least 3 points, got {len(points)}")
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs strictly positive values")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("x values must be strictly increasing")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = np.max(np.abs(ly - (slope * lx + intercept)))
    return float(slope), float(intercept), float(resid)


def _periodization_tail(grid: GridSpec) -> float:
    """Relative size of the data profile near the domain edge |x| = L."""
    prof = make_data_profile(grid)
    vals = np.abs(prof.axis_values)
    x = grid.axis_coordinates()
    near_edge = np.abs(np.abs(x) - grid.half_period) <= 1.0
    return float(vals[near_edge].max() / vals.max())


def _base_meta(spec: ExperimentSpec) -> dict:
    grids = {n: spec.grid_for_n(n).points_per_axis for n in spec.n_range()}
    return {
        "d": spec.d,
        "besov": {"s": spec.s, "p": spec.p, "r": spec.r},
        "n_range": [spec.n_min, spec.n_max],
        "t_grid": list(spec.t_grid),
        "half_period": spec.half_period,
        "grid_points_per_n": {str(n): N for n, N in grids.items()},
        "dealias_fraction": spec.dealias_fraction,
        "quad_steps": spec.quad_steps,
        "periodization_tail": _periodization_tail(spec.grid_for_n(spec.n_min)),
        "config_hash": spec.config_hash(),
    }


def _fit_vs_n(report, name, pairs, target, tol, kind):
    slope, intercept, resid = fit_loglog(pairs)
    # log-log slope against x = 2^n is the per-octave exponent
    report.add_fit(name, slope, intercept, resid, target, tol, kind)
    return slope


def _require_d1(spec: ExperimentSpec):
    if spec.d != 1:
        raise ValueError(
            f"scenario {spec.scenario} runs the full rate suite in d=1 only "
            f"(d={spec.d} profile covers E1/E2)"
        )


def run_E1_norm_scaling(spec: ExperimentSpec) -> RateReport:
    """Besov norms of the data family across three regularity offsets."""
    report = RateReport("E1", meta=_base_meta(spec))
    bp = spec.besov()
    sigmas = (spec.s - 1.0, spec.s, spec.s + 1.0)
    values = {sig: [] for sig in sigmas}
    for n in spec.n_range():
        grid = spec.grid_for_n(n)
        fam = make_dyadic_family(grid)
        u0 = make_initial_data(n, bp, grid)
        for sig in sigmas:
            v = besov_norm(u0, bp.with_s(sig), fam)
            values[sig].append((2.0**n, v))
            report.add_row(n, 2.0 ** (-2 * n), 0.0, f"u0_Bsigma{sig:g}", v)
    for sig in sigmas:
        _fit_vs_n(report, f"n_slope_sigma{sig:g}", values[sig],
                  target=sig - spec.s, tol=0.05, kind="two_sided")
    at_s = [v for _, v in values[spec.s]]
    report.add_check("norm_constant_in_n_at_s", max(at_s) / min(at_s) <= 1.2,
                     ratio=max(at_s) / min(at_s))
    return report


def run_E2_I1_rate(spec: ExperimentSpec) -> RateReport:
    """Linear-in-t growth of the free-flow difference (e^{t eps Lap}-Id)u0."""
    report = RateReport("E2", meta=_base_meta(spec))
    bp = spec.besov()
    c1s, c2s = [], []
    max_oracle_dev = 0.0
    for n in spec.n_range():
        grid = spec.grid_for_n(n)
        fam = make_dyadic_family(grid)
        eps = 2.0 ** (-2 * n)
        u0 = make_initial_data(n, bp, grid)
        ksq = grid.frequency_sq()
        pairs = []
        for t in spec.t_grid:
            diff = solve_u1(u0, eps, t) - u0
            v = besov_norm(diff, bp, fam)
            # independent route: assemble the multiplier (1-e^{-t eps |xi|^2})
            # directly on the data spectrum
            oracle_field = Field(grid, spectrum=(1.0 - np.exp(-t * eps * ksq)) * u0.spectrum)
            oracle = besov_norm(oracle_field, bp, fam)
            max_oracle_dev = max(max_oracle_dev, abs(v - oracle) / oracle)
            pairs.append((t, v))
            report.add_row(n, eps, t, "I1_Bs", v)
        slope, intercept, resid = fit_loglog(pairs)
        report.add_fit(f"t_slope_n{n}", slope, intercept, resid,
                       target=1.0, tol=0.1, kind="two_sided")
        ratios = [v / t for t, v in pairs]
        c1s.append(min(ratios))
        c2s.append(max(ratios))
    report.add_check("oracle_agreement", max_oracle_dev <= 1e-10,
                     max_relative_deviation=max_oracle_dev)
    spread = [c2 / c1 for c1, c2 in zip(c1s, c2s)]
    report.add_check("c2_over_c1_n_stable", max(spread) / min(spread) <= 1.2,
                     min_ratio=min(spread), max_ratio=max(spread))
    report.meta["C1_per_n"] = c1s
    report.meta["C2_per_n"] = c2s
    return report


def run_E3_I2_rate(spec: ExperimentSpec) -> RateReport:
    """Decay in n of the Duhamel term u2 (parabolic and hyperbolic)."""
    _require_d1(spec)
    report = RateReport("E3", meta=_base_meta(spec))
    bp = spec.besov()
    values = {"ubar2_Bs": {}, "u2eps_Bs": {}}
    for n in spec.n_range():
        grid = spec.grid_for_n(n)
        fam = make_dyadic_family(grid)
        eps = 2.0 ** (-2 * n)
        u0 = make_initial_data(n, bp, grid)
        for t in spec.t_grid:
            for name, e in (("ubar2_Bs", 0.0), ("u2eps_Bs", eps)):
                u2 = solve_u2(u0, e, t, quad_steps=spec.quad_steps,
                              dealias_fraction=spec.dealias_fraction)
                v = besov_norm(u2, bp, fam)
                values[name].setdefault(t, []).append((2.0**n, v))
                report.add_row(n, eps, t, name, v)
    target_n = -(spec.s - 1.0)
    for name in values:
        for t in spec.t_grid:
            pairs = values[name][t]
            slope, intercept, resid = fit_loglog(pairs)
            report.add_fit(f"n_slope_{name}_t{t:g}", slope, intercept, resid,
                           target=target_n, tol=0.15, kind="two_sided")
            report.add_fit(f"n_slope_bound_{name}_t{t:g}", slope, intercept, resid,
                           target=target_n, tol=0.15, kind="at_most")
            vals = [v for _, v in pairs]
            report.add_check(f"decreasing_in_n_{name}_t{t:g}",
                             all(b < a for a, b in zip(vals, vals[1:])))
    # linearity in t holds for the hyperbolic ubar2 only; the parabolic u2
    # saturates on the n-independent diffusion timescale 1/(eps (2 omega)^2)
    for i, n in enumerate(spec.n_range()):
        pairs_t = [(t, values["ubar2_Bs"][t][i][1]) for t in spec.t_grid]
        slope, intercept, resid = fit_loglog(pairs_t)
        report.add_fit(f"t_slope_ubar2_Bs_n{n}", slope, intercept, resid,
                       target=1.0, tol=0.1, kind="two_sided")
    return report


def run_E4_I3_rate(spec: ExperimentSpec) -> RateReport:
    """Quadratic-in-t remainder u3 and the intermediate difference bounds."""
    _require_d1(spec)
    report = RateReport("E4", meta=_base_meta(spec))
    bp = spec.besov()
    t_ref = spec.t_grid[-2] if len(spec.t_grid) > 1 else spec.t_grid[-1]
    diff_pairs = {spec.s - 1.0: [], spec.s: [], spec.s + 1.0: []}
    l2_max = 0.0
    for n in spec.n_range():
        grid = spec.grid_for_n(n)
        fam = make_dyadic_family(grid)
        eps = 2.0 ** (-2 * n)
        u0 = make_initial_data(n, bp, grid)
        cfg_p = spec.solver_config(grid, eps)
        cfg_h = spec.solver_config(grid, 0.0)
        traj_p = solve(u0, cfg_p)
        traj_h = solve(u0, cfg_h)
        pairs = {"u3eps_Bs": [], "u3bar_Bs": []}
        for t in spec.t_grid:
            dec_p = decompose(u0, eps, t, cfg_p, trajectory=traj_p,
                              quad_steps=spec.quad_steps)
            dec_h = decompose(u0, 0.0, t, cfg_h, trajectory=traj_h,
                              quad_steps=spec.quad_steps)
            for name, dec in (("u3eps_Bs", dec_p), ("u3bar_Bs", dec_h)):
                v = besov_norm(dec.u3, bp, fam)
                pairs[name].append((t, v))
                report.add_row(n, eps, t, name, v)
            diff = dealias(traj_p.at(t) - dec_p.u1, spec.dealias_fraction)
            for sig in diff_pairs:
                v = besov_norm(diff, bp.with_s(sig), fam)
                report.add_row(n, eps, t, f"diff_Bsigma{sig:g}", v)
                if abs(t - t_ref) <= 1e-12:
                    diff_pairs[sig].append((2.0**n, v))
                if sig == spec.s:
                    l2_max = max(l2_max, v / t)
        for name in pairs:
            slope, intercept, resid = fit_loglog(pairs[name])
            report.add_fit(f"t_slope_{name}_n{n}", slope, intercept, resid,
                           target=2.0, tol=0.15, kind="at_least")
            # the remainder stays below the quadratic level set by the
            # smallest time (the parabolic one saturates under the
            # eps-damped Duhamel kernel, so its fitted slope undershoots)
            t0, v0 = pairs[name][0]
            level = v0 / t0**2
            report.add_check(
                f"quadratic_bound_{name}_n{n}",
                all(v <= 1.5 * level * t**2 for t, v in pairs[name]),
                level_constant=level,
            )
    _fit_vs_n(report, "L1_n_slope", diff_pairs[spec.s - 1.0],
              target=-1.0, tol=0.15, kind="two_sided")
    _fit_vs_n(report, "L1_n_slope_bound", diff_pairs[spec.s - 1.0],
              target=-1.0, tol=0.15, kind="at_most")
    _fit_vs_n(report, "L3_n_slope", diff_pairs[spec.s + 1.0],
              target=1.0, tol=0.15, kind="two_sided")
    _fit_vs_n(report, "L3_n_slope_bound", diff_pairs[spec.s + 1.0],
              target=1.0, tol=0.15, kind="at_most")
    report.add_check("L2_linear_bound", l2_max <= FROZEN_L2_CONSTANT,
                     max_ratio=l2_max, frozen_constant=FROZEN_L2_CONSTANT)
    report.meta["L_slope_reference_t"] = t_ref
    return report


def run_E5_main_theorem(spec: ExperimentSpec) -> RateReport:
    """Non-vanishing gap between the parabolic and hyperbolic flows."""
    _require_d1(spec)
    report = RateReport("E5", meta=_base_meta(spec))
    bp = spec.besov()
    t_ref = 0.1 if 0.1 in spec.t_grid else spec.t_grid[-1]
    d_ref = []
    radius = 0.0
    triangle_ok = True
    triangle_margin = math.inf
    for n in spec.n_range():
        grid = spec.grid_for_n(n)
        fam = make_dyadic_family(grid)
        eps = 2.0 ** (-2 * n)
        u0 = make_initial_data(n, bp, grid)
        radius = max(radius, besov_norm(u0, bp, fam))
        cfg_p = spec.solver_config(grid, eps)
        cfg_h = spec.solver_config(grid, 0.0)
        traj_p = solve(u0, cfg_p)
        traj_h = solve(u0, cfg_h)
        for t in spec.t_grid:
            D = besov_norm(traj_p.at(t) - traj_h.at(t), bp, fam)
            report.add_row(n, eps, t, "D_Bs", D)
            if abs(t - t_ref) <= 1e-12:
                d_ref.append(D)
        # reverse-triangle cross-check at the reference time
        dec_p = decompose(u0, eps, t_ref, cfg_p, trajectory=traj_p,
                          quad_steps=spec.quad_steps)
        dec_h = decompose(u0, 0.0, t_ref, cfg_h, trajectory=traj_h,
                          quad_steps=spec.quad_steps)
        i1 = besov_norm(dec_p.u1 - dec_h.u1, bp, fam)
        i2 = besov_norm(dec_p.u2 - dec_h.u2, bp, fam)
        i3 = besov_norm(dec_p.u3 - dec_h.u3, bp, fam)
        for name, v in (("I1_Bs", i1), ("I2_Bs", i2), ("I3_Bs", i3)):
            report.add_row(n, eps, t_ref, name, v)
        D_ref = d_ref[-1]
        margin = D_ref - (i1 - i2 - i3)
        triangle_ok = triangle_ok and margin >= -1e-12 * max(1.0, D_ref)
        triangle_margin = min(triangle_margin, margin)

    c0 = min(d / t_ref for d in d_ref)
    report.add_check("c0_positive", c0 > 0.0, c0=c0, t_ref=t_ref)
    level = max(d_ref) / min(d_ref)
    report.add_check("level_stable_across_n", level <= 1.3, max_over_min=level)
    last3 = d_ref[-3:]
    trend_ok = all(b >= a * (1.0 - E5_TREND_SLACK) for a, b in zip(last3, last3[1:]))
    report.add_check("no_decreasing_trend_last3", trend_ok,
                     values=[float(v) for v in last3], slack=E5_TREND_SLACK)
    report.add_check("triangle_inequality", triangle_ok, min_margin=triangle_margin)
    report.add_check("data_family_in_U_R", radius < math.inf, realized_radius=radius)

    # complementary fixed-data check: eps down at fixed n, difference -> 0
    n_fix = min(4, spec.n_max)
    grid = spec.grid_for_n(n_fix)
    fam = make_dyadic_family(grid)
    u0 = make_initial_data(n_fix, bp, grid)
    traj_h = solve(u0, spec.solver_config(grid, 0.0))
    u_h = traj_h.at(t_ref)
    fixed = []
    for m in range(n_fix, n_fix + 5):
        eps = 2.0 ** (-2 * m)
        traj_p = solve(u0, spec.solver_config(grid, eps))
        Dm = besov_norm(traj_p.at(t_ref) - u_h, bp, fam)
        fixed.append(Dm)
        report.add_row(n_fix, eps, t_ref, "D_fixed_data_Bs", Dm)
    report.add_check("fixed_data_convergence",
                     all(b < a for a, b in zip(fixed, fixed[1:])),
                     first=fixed[0], last=fixed[-1])
    report.meta["c0"] = c0
    report.meta["realized_radius"] = radius
    return report


def run_E6_uniform_bounds(spec: ExperimentSpec) -> RateReport:
    """eps-uniform solution/data Besov-ratio bounds at exponents s, s+1."""
    _require_d1(spec)
    report = RateReport("E6", meta=_base_meta(spec))
    bp = spec.besov()
    bp1 = bp.with_s(spec.s + 1.0)
    worst_s, worst_s1 = 0.0, 0.0
    for n in spec.n_range():
        grid = spec.grid_for_n(n)
        fam = make_dyadic_family(grid)
        u0 = make_initial_data(n, bp, grid)
        b0_s = besov_norm(u0, bp, fam)
        b0_s1 = besov_norm(u0, bp1, fam)
        for eps in (2.0 ** (-2 * n), 0.0):
            traj = solve(u0, spec.solver_config(grid, eps))
            r_s = max(besov_norm(f, bp, fam) for f in traj.fields) / b0_s
            r_s1 = max(besov_norm(f, bp1, fam) for f in traj.fields) / b0_s1
            report.add_row(n, eps, max(spec.t_grid), "ratio_Bs", r_s)
            report.add_row(n, eps, max(spec.t_grid), "ratio_Bs1", r_s1)
            worst_s = max(worst_s, r_s)
            worst_s1 = max(worst_s1, r_s1)
    report.add_check("uniform_bound_s", worst_s <= FROZEN_UNIFORM_RATIO_S,
                     worst_ratio=worst_s, frozen_constant=FROZEN_UNIFORM_RATIO_S)
    report.add_check("uniform_bound_s1", worst_s1 <= FROZEN_UNIFORM_RATIO_S1,
                     worst_ratio=worst_s1, frozen_constant=FROZEN_UNIFORM_RATIO_S1)
    return report


SCENARIOS = {
    "E1": run_E1_norm_scaling,
    "E2": run_E2_I1_rate,
    "E3": run_E3_I2_rate,
    "E4": run_E4_I3_rate,
    "E5": run_E5_main_theorem,
    "E6": run_E6_uniform_bounds,
}


def run_scenario(spec: ExperimentSpec) -> RateReport:
    try:
        runner = SCENARIOS[spec.scenario]
    except KeyError:
        raise ValueError(f"unknown scenario {spec.scenario!r}") from None
    return runner(spec)


def _fmt(v) -> str:
    return f"{v:.17g}"


def write_report(report: RateReport, out_dir: str):
    """Emit <scenario>.csv (raw table) and <scenario>.json (fits/flags)."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{report.scenario}.csv")
    json_path = os.path.join(out_dir, f"{report.scenario}.json")
    try:
        with open(csv_path, "w", newline="") as fh:
            fh.write("scenario,n,epsilon,t,norm,value\n")
            for row in report.rows:
                fh.write(
                    f"{report.scenario},{row['n']},{_fmt(row['epsilon'])},"
                    f"{_fmt(row['t'])},{row['norm']},{_fmt(row['value'])}\n"
                )
        doc = {
            "scenario": report.scenario,
            "passed": report.passed,
            "fits": report.fits,
            "checks": report.checks,
            "meta": report.meta,
        }
        with open(json_path, "w") as fh:
            json.dump(doc, fh, indent=2, default=float)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing report for {report.scenario} under {out_dir}: {exc}") from exc
    return csv_path, json_path
