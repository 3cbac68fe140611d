"""Executable checks of the lower and upper bounds.

Lower bounds hold "for every constant step size", which is checked here as
a minimum over a log-spaced step-size grid that covers each regime interval
of the construction.  Upper bounds are checked by running the prescribed
schedule and comparing against the explicit constant assembled from the
corresponding proof.  The two synthetic figure experiments are reproduced
as CSV tables together with property checkers.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .constructions import (
    ConstructionSpec,
    build,
    compute_u0_v0,
    concave_pair_block,
    rotated_block,
)
from .quadratic import FiniteSumProblem, audit_assumptions, optimality_gap
from .serialize import dumps, fmt_float
from .shufflers import (
    RunConfig,
    ShuffleStrategy,
    herding_at_opt_strategy,
    prefix_bound,
    recommended_step_size,
    run,
    schedule_log_term,
)

REPORT_SCHEMA = "shuffle-sgd-lab/report/v1"
MIN_POINTS_PER_INTERVAL = 20
# unbounded regime intervals are truncated this many times past their finite end
DEFAULT_SPAN = 1e3
FIGURE_SEEDS = 20
THREADS_ENV = "SHUFFLE_SGD_THREADS"


class CoverageError(ValueError):
    """The step-size grid misses part of a regime interval."""

    def __init__(self, uncovered):
        self.uncovered = list(uncovered)
        parts = [f"[{fmt_float(lo)}, {fmt_float(hi)}) has {cnt} points" for lo, hi, cnt in self.uncovered]
        super().__init__(
            f"eta grid needs >= {MIN_POINTS_PER_INTERVAL} points per regime interval; uncovered: " + "; ".join(parts)
        )


class AssumptionRefusal(ValueError):
    """An upper-bound check was refused because an assumption does not hold."""

    def __init__(self, assumption: str, detail: str):
        self.assumption = assumption
        self.detail = detail
        super().__init__(f"assumption '{assumption}' not satisfied: {detail}")


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    eta_grid: tuple
    K_list: tuple = ()
    repeats: int = 1
    seed: int = 0

    def __post_init__(self):
        grid = tuple(float(e) for e in self.eta_grid)
        object.__setattr__(self, "eta_grid", grid)
        object.__setattr__(self, "K_list", tuple(int(k) for k in self.K_list))
        if not grid:
            raise ValueError("eta grid is empty")
        if any(not (e > 0 and math.isfinite(e)) for e in grid):
            raise ValueError("eta grid must contain positive finite values")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("eta grid must be strictly increasing")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")

    def densified(self) -> "SweepSpec":
        """Grid with every geometric midpoint inserted (a strict superset)."""
        g = np.array(self.eta_grid)
        mids = np.sqrt(g[:-1] * g[1:])
        merged = np.empty(2 * len(g) - 1)
        merged[0::2] = g
        merged[1::2] = mids
        return SweepSpec(tuple(merged.tolist()), self.K_list, self.repeats, self.seed)


def _finite_interval(lo: float, hi: float, span: float) -> tuple:
    if lo <= 0 and not math.isfinite(hi):
        raise ValueError("an interval needs at least one finite positive end")
    if lo <= 0:
        lo = hi / span
    if not math.isfinite(hi):
        hi = lo * span
    return lo, hi


def default_grid(intervals: Sequence, per_interval: int = MIN_POINTS_PER_INTERVAL, span: float = DEFAULT_SPAN) -> tuple:
    """Log grid with ``per_interval`` points in each interval, endpoints included.

    Empty intervals (lo >= hi) are skipped.
    """
    pts = []
    for lo, hi in intervals:
        if hi <= lo:
            continue
        a, b = _finite_interval(lo, hi, span)
        pts.extend(np.geomspace(a, b, per_interval + 1).tolist())
    return tuple(sorted(set(pts)))


def uncovered_intervals(grid: Sequence, intervals: Sequence, min_points: int = MIN_POINTS_PER_INTERVAL) -> list:
    """(lo, hi, count) for each non-empty interval holding fewer than ``min_points`` grid points."""
    g = np.asarray(grid, dtype=float)
    bad = []
    for lo, hi in intervals:
        if hi <= lo:
            continue
        cnt = int(np.count_nonzero((g >= lo) & (g < hi)))
        if cnt < min_points:
            bad.append((lo, hi, cnt))
    return bad


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Ordered map; uses worker processes when SHUFFLE_SGD_THREADS > 1.

    Results come back in input order, so serial and parallel runs reduce
    identically.
    """
    items = list(items)
    workers = min(_threads(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _run_cell(cell) -> tuple:
    problem, strategy, eta, K, x0 = cell
    rec = run(problem, strategy, RunConfig(eta, K, x0))
    return float(rec.final_gap), bool(rec.diverged)


# ---------------------------------------------------------------------------
# reports


@dataclass
class BoundCheckReport:
    theorem_id: str
    kind: str  # "lower" or "upper"
    params: dict
    measured_inf_gap: float
    analytic_bound: float
    margin: float
    passed: bool
    per_eta_table: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "theorem": self.theorem_id,
            "kind": self.kind,
            "params": self.params,
            "measured_inf_gap": self.measured_inf_gap,
            "analytic_bound": self.analytic_bound,
            "margin": self.margin,
            "pass": self.passed,
            "constants": self.constants,
            "per_eta_table": [{"eta": e, "gap": g, "diverged": dv} for e, g, dv in self.per_eta_table],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eta", "gap", "diverged"])
        for e, g, dv in self.per_eta_table:
            w.writerow([fmt_float(e), fmt_float(g), "true" if dv else "false"])
        return buf.getvalue()


def lower_bound_check(theorem_id: str, spec: ConstructionSpec, sweep: Optional[SweepSpec] = None) -> BoundCheckReport:
    """Minimum IGD final gap over the step-size grid versus the analytic bound.

    Without ``sweep`` the default grid of the bundle's regime intervals is
    used.  Divergent runs contribute the gap of their last finite iterate,
    which overflows to inf when that iterate is huge.
    """
    if spec.theorem_id != theorem_id:
        spec = ConstructionSpec(theorem_id, spec.n, spec.kappa, spec.K, spec.G, spec.mu, spec.D)
    bundle = build(spec)
    intervals = bundle.regime_intervals
    if sweep is None:
        sweep = SweepSpec(default_grid(intervals), (spec.K,))
    bad = uncovered_intervals(sweep.eta_grid, intervals)
    if bad:
        raise CoverageError(bad)

    igd = ShuffleStrategy.igd()
    cells = [(bundle.problem, igd, eta, spec.K, bundle.x0) for eta in sweep.eta_grid]
    results = parallel_map(_run_cell, cells)
    table = [(eta, gap, dv) for eta, (gap, dv) in zip(sweep.eta_grid, results)]
    measured = min(g for _, g, _ in table)
    bound = bundle.analytic_lower_bound
    margin = measured / bound if bound > 0 else math.inf
    params = bundle.to_dict()["params"]
    constants = {
        r.label: {"eta_lo": r.lo, "eta_hi": r.hi, "bound": r.value, "constant": r.constant}
        for r in bundle.regime_bounds
    }
    return BoundCheckReport(theorem_id, "lower", params, measured, bound, margin, margin >= 1.0, table, constants)


# ---------------------------------------------------------------------------
# upper bounds

EXPLICIT_UPPER = ("small-ub-idhess", "small-ub-scvx", "herding-at-opt", "large-ub-generalizedgrad")


@dataclass(frozen=True)
class UpperBoundSetup:
    eta: float
    log_term: float
    bound: float
    metric: str  # "gap" or "sqdist"
    constants: dict


def _min_component_curvature(problem: FiniteSumProblem) -> float:
    return float(min(np.linalg.eigvalsh(A)[0] for A in problem.hessians))


def upper_bound_setup(theorem_id: str, problem: FiniteSumProblem, strategy: ShuffleStrategy, K: int, x0) -> UpperBoundSetup:
    """Step size and explicit bound for an upper-bound theorem.

    Raises AssumptionRefusal when the theorem does not apply.  Constants
    come from the final display of each proof:

    * small-ub-idhess: gap <= 4 G*^2 l/(mu K) + 5 G*^2/(2L)
    * small-ub-scvx: ||x - x*||^2 <= e^{-eta mu n K} D^2 + eta^2 L n^2 G*^2/mu
    * herding-at-opt: ||x - x*||^2 <= e^{-eta mu n K} D^2 + H^2 eta^2 L G*^2/mu
    * large-ub-generalizedgrad: gap <= e^{-eta mu n K/2} gap0 + 4 eta^2 n^2 L^2 G^2/mu
    """
    if theorem_id == "large-ub-avg":
        raise AssumptionRefusal(
            "explicit constants", "large-ub-avg is stated only up to unspecified constants, so no finite bound can be checked"
        )
    if theorem_id not in EXPLICIT_UPPER:
        raise KeyError(f"unknown upper-bound theorem id {theorem_id!r}")
    if not strategy.is_permutation:
        raise AssumptionRefusal("permutation-based", f"strategy {strategy.label()} samples with replacement")
    x0 = np.asarray(x0, dtype=float)
    audit = audit_assumptions(problem, x0)
    if not audit.passed:
        name, idx, msg = audit.failures[0]
        raise AssumptionRefusal(name, f"component {idx}: {msg}" if idx is not None and idx >= 0 else msg)

    mu, L, n = problem.mu, problem.ell, problem.n
    kappa = L / mu
    Gs = problem.grad_at_opt_Gstar
    dist = float(np.linalg.norm(x0 - problem.minimizer))
    params = {"mu": mu, "L": L, "n": n, "K": K, "G": Gs, "dist": dist}
    consts: dict = {"mu": mu, "L": L, "n": n, "K": K, "dist": dist}

    if theorem_id in ("small-ub-idhess", "small-ub-scvx", "herding-at-opt") and Gs <= 0:
        raise AssumptionRefusal("bounded gradients at the optimum", "G* = 0, the schedule's log term is undefined")

    if theorem_id == "small-ub-idhess":
        if problem.d != 1:
            raise AssumptionRefusal("one-dimensional", f"problem has d = {problem.d}")
        if not audit.identical_hessians:
            raise AssumptionRefusal("identical Hessians", "components do not share one Hessian")
        if K > kappa:
            raise AssumptionRefusal("small epoch regime", f"K = {K} exceeds kappa = {fmt_float(kappa)}")
        ell = schedule_log_term(theorem_id, params)
        eta = recommended_step_size(theorem_id, params)
        if eta * L >= 1.0:
            raise AssumptionRefusal("step size below 1/L", f"eta L = {fmt_float(eta * L)}; increase K")
        bound = 4.0 * Gs**2 * ell / (mu * K) + 2.5 * Gs**2 / L
        consts.update(G_star=Gs, formula="4 G*^2 l/(mu K) + 5 G*^2/(2 L)")
        metric = "gap"
    elif theorem_id in ("small-ub-scvx", "herding-at-opt"):
        curv = _min_component_curvature(problem)
        if curv < mu * (1.0 - 1e-9):
            raise AssumptionRefusal(
                "strongly convex components", f"smallest component curvature {fmt_float(curv)} < mu = {fmt_float(mu)}"
            )
        if theorem_id == "herding-at-opt":
            if strategy.sigma is None:
                raise AssumptionRefusal("fixed permutation", "herding-at-opt needs a strategy with a fixed sigma")
            g = problem.hessians @ problem.minimizer + problem.linears
            H = prefix_bound(g / Gs, strategy.sigma)
            params["H"] = H
            consts["H"] = H
        ell = schedule_log_term(theorem_id, params)
        if K < 2.0 * kappa / n * ell:
            raise AssumptionRefusal(
                "epoch condition", f"K = {K} < (2 kappa/n) l = {fmt_float(2.0 * kappa / n * ell)}"
            )
        eta = recommended_step_size(theorem_id, params)
        noise = n**2 if theorem_id == "small-ub-scvx" else params["H"] ** 2
        bound = math.exp(-eta * mu * n * K) * dist**2 + noise * eta**2 * L * Gs**2 / mu
        consts.update(
            G_star=Gs,
            formula=(
                "e^{-eta mu n K} D^2 + eta^2 L n^2 G*^2/mu"
                if theorem_id == "small-ub-scvx"
                else "e^{-eta mu n K} D^2 + H^2 eta^2 L G*^2/mu"
            ),
        )
        metric = "sqdist"
    else:  # large-ub-generalizedgrad
        G, P = problem.grad_error_G, problem.grad_error_P
        if G <= 0:
            raise AssumptionRefusal("bounded gradient errors", "G = 0, the schedule's log term is undefined")
        gap0 = optimality_gap(problem, x0)
        params.update(G=G, gap0=gap0)
        ell = schedule_log_term(theorem_id, params)
        need = 8.0 * kappa * max(1.0, P) * ell
        if K < need:
            raise AssumptionRefusal("epoch condition", f"K = {K} < 8 kappa max(1, P) l = {fmt_float(need)}")
        eta = recommended_step_size(theorem_id, params)
        bound = math.exp(-eta * mu * n * K / 2.0) * gap0 + 4.0 * eta**2 * n**2 * L**2 * G**2 / mu
        consts.update(G=G, P=P, gap0=gap0, formula="e^{-eta mu n K/2} gap0 + 4 eta^2 n^2 L^2 G^2/mu")
        metric = "gap"
    consts.update(log_term=ell, eta=eta, metric=metric)
    return UpperBoundSetup(eta, ell, bound, metric, consts)


def upper_bound_check(theorem_id: str, problem: FiniteSumProblem, strategy: ShuffleStrategy, params: dict) -> BoundCheckReport:
    """Run the theorem's schedule and compare with its explicit bound.

    ``params`` must contain K and x0.  The report's margin is bound/measured,
    so margin >= 1 means the bound holds.
    """
    K = int(params["K"])
    x0 = np.atleast_1d(np.asarray(params["x0"], dtype=float))
    setup = upper_bound_setup(theorem_id, problem, strategy, K, x0)
    rec = run(problem, strategy, RunConfig(setup.eta, K, x0))
    if setup.metric == "gap":
        measured = float(rec.final_gap)
    else:
        measured = float(np.sum((rec.final - problem.minimizer) ** 2))
    if rec.diverged:
        measured = math.inf
    margin = setup.bound / measured if measured > 0 else math.inf
    out_params = {"K": K, "x0": x0.tolist(), "n": problem.n, "d": problem.d, "strategy": strategy.label()}
    table = [(setup.eta, float(rec.final_gap), bool(rec.diverged))]
    return BoundCheckReport(theorem_id, "upper", out_params, measured, setup.bound, margin, measured <= setup.bound, table, setup.constants)


# ---------------------------------------------------------------------------
# rate fits


@dataclass(frozen=True)
class RateFit:
    K_values: tuple
    gaps: tuple
    log_log_slope: float
    intercept: float
    r_squared: float


def rate_fit(K_list: Sequence, gap_list: Sequence) -> RateFit:
    """Least-squares line through (log K, log gap)."""
    K = np.asarray(K_list, dtype=float)
    g = np.asarray(gap_list, dtype=float)
    if K.shape != g.shape or K.ndim != 1:
        raise ValueError("K_list and gap_list must be 1D and of equal length")
    if K.size < 3:
        raise ValueError("rate_fit needs at least 3 points")
    if np.any(g <= 0) or np.any(K <= 0):
        raise ValueError("rate_fit needs positive K values and positive gaps")
    x, y = np.log(K), np.log(g)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    if not math.isfinite(slope):
        raise ValueError("fitted slope is not finite")
    return RateFit(tuple(K.tolist()), tuple(g.tolist()), float(slope), float(intercept), r2)


# ---------------------------------------------------------------------------
# figure experiments


def trajectory_problem(mu=1.0, L=1e4, G=1.0, n=1000) -> FiniteSumProblem:
    """Rotated two-dimensional block on its own."""
    return rotated_block(mu, 0.5 * L, G, n, L, "rotated")


def reproduce_fig_trajectory(spec: Optional[ConstructionSpec] = None, start: str = "origin") -> str:
    """Full IGD trace on the rotated block at eta = 1/(mu n K), as CSV.

    Rows ``kind=iterate`` hold every iterate; ``kind=summary`` reports the
    final radius and whether the epoch-start radius is nondecreasing after
    epoch 2.  ``start`` is "origin" (the minimizer) or "polygon" (u0, v0).
    """
    if spec is None:
        spec = ConstructionSpec("small-lb-sc", 1000, 1e4, 20)
    spec.validate()
    mu, L, n, K, G = spec.mu, spec.L, spec.n, spec.K, spec.G
    eta = 1.0 / (mu * n * K)
    if eta >= 2.0 / L:
        raise ValueError(f"eta = 1/(mu n K) = {fmt_float(eta)} is not below 2/L; the rotated block diverges (need n K > kappa/2)")
    problem = trajectory_problem(mu, L, G, n)
    if start == "origin":
        x0 = np.zeros(2)
    elif start == "polygon":
        x0 = np.array(compute_u0_v0(eta, mu, L, n, G))
    else:
        raise ValueError(f"start must be 'origin' or 'polygon', got {start!r}")
    rec = run(problem, ShuffleStrategy.igd(), RunConfig(eta, K, x0, record_every_iterate=True))
    trace = rec.full_trace  # starts with x0
    radii = np.linalg.norm(trace, axis=1)
    start_r = np.linalg.norm(rec.epoch_starts, axis=1)
    tail = start_r[2:]
    nondecreasing = bool(np.all(np.diff(tail) >= 0))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "epoch", "step", "x", "y", "radius", "radius_nondecreasing"])
    for t, (p, r) in enumerate(zip(trace, radii)):
        # iterate t = k n + i is step i of epoch k+1; the final iterate is step 0 of epoch K+1
        epoch, step = divmod(t, n)
        w.writerow(["iterate", str(epoch + 1), str(step), fmt_float(p[0]), fmt_float(p[1]), fmt_float(r), ""])
    w.writerow(["summary", str(K), str(n), fmt_float(trace[-1, 0]), fmt_float(trace[-1, 1]), fmt_float(radii[-1]), "true" if nondecreasing else "false"])
    return buf.getvalue()


def parse_trajectory_csv(text: str) -> dict:
    """Split a trajectory CSV into an (N, 2) iterate array and its summary row."""
    rows = list(csv.DictReader([ln for ln in text.splitlines() if not ln.startswith("#")]))
    pts = np.array([[float(r["x"]), float(r["y"])] for r in rows if r["kind"] == "iterate"])
    summary = [r for r in rows if r["kind"] == "summary"][0]
    return {
        "points": pts,
        "final_radius": float(summary["radius"]),
        "radius_nondecreasing": summary["radius_nondecreasing"] == "true",
    }


def default_gap_K_grid(n: int = 100, kappa: float = 1e4) -> list:
    """Log grid of K for the gap comparison.

    Starts at the first K with eta L <= 4/3 for eta = 1/(mu n K).  Below that
    the randomized runs overflow as well as IGD (at n=100, kappa=1e4 every
    method returns inf for K <= 60), so the comparison carries no signal.
    """
    k_min = int(math.ceil(0.75 * kappa / n))
    k_max = int(kappa // 4)
    return sorted({int(round(k)) for k in np.geomspace(k_min, k_max, 11)})


GAP_STRATEGIES = ("IGD", "RR", "Herding", "WR")


def _gap_cell(cell) -> float:
    problem, kind, seed, eta, K = cell
    if kind == "IGD":
        strat = ShuffleStrategy.igd()
    elif kind == "RR":
        strat = ShuffleStrategy.random_reshuffle(seed)
    elif kind == "WR":
        strat = ShuffleStrategy.with_replacement(seed)
    else:
        strat = herding_at_opt_strategy(problem)
    return float(run(problem, strat, RunConfig(eta, K, np.zeros(problem.d))).final_gap)


def gap_comparison_table(
    K_list: Optional[Sequence] = None, seeds: int = FIGURE_SEEDS, n: int = 100, kappa: float = 1e4,
    mu: float = 1.0, G: float = 1.0, base_seed: int = 0,
) -> list:
    """Rows (K, strategy, mean_gap, q1, q3) on the concave block started at 0."""
    ConstructionSpec("small-lb-concave", n, kappa, 1, G, mu, D=1.0).validate()
    L = kappa * mu
    problem = concave_pair_block(L, G, n, mu, L, "concave")
    if K_list is None:
        K_list = default_gap_K_grid(n, kappa)
    cells, keys = [], []
    for K in K_list:
        eta = 1.0 / (mu * n * K)
        for kind in GAP_STRATEGIES:
            reps = seeds if kind in ("RR", "WR") else 1
            for s in range(reps):
                cells.append((problem, kind, base_seed + s, eta, int(K)))
                keys.append((int(K), kind))
    gaps = parallel_map(_gap_cell, cells)
    rows = []
    for K in K_list:
        for kind in GAP_STRATEGIES:
            vals = np.array([g for (k, s), g in zip(keys, gaps) if k == int(K) and s == kind])
            with np.errstate(invalid="ignore"):
                q1, q3 = np.percentile(vals, [25, 75])
            rows.append((int(K), kind, float(vals.mean()), float(q1), float(q3)))
    return rows


def gap_table_to_csv(rows: Sequence, header: Optional[dict] = None) -> str:
    buf = io.StringIO()
    if header:
        for k, v in header.items():
            buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["K", "strategy", "mean_gap", "q1", "q3"])
    for K, s, m, q1, q3 in rows:
        w.writerow([str(K), s, fmt_float(m), fmt_float(q1), fmt_float(q3)])
    return buf.getvalue()


def parse_gap_csv(text: str) -> list:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    out = []
    for r in csv.DictReader(lines):
        out.append((int(r["K"]), r["strategy"], float(r["mean_gap"]), float(r["q1"]), float(r["q3"])))
    return out


def reproduce_fig_gap_comparison(spec: Optional[ConstructionSpec] = None, seeds: int = FIGURE_SEEDS, K_list=None) -> str:
    """CSV of final gaps of IGD, RR, Herding-at-Optimum and with-replacement SGD."""
    n = 100 if spec is None else spec.n
    kappa = 1e4 if spec is None else spec.kappa
    mu = 1.0 if spec is None else spec.mu
    G = 1.0 if spec is None else spec.G
    rows = gap_comparison_table(K_list, seeds, n, kappa, mu, G)
    header = {"n": n, "kappa": fmt_float(kappa), "mu": fmt_float(mu), "G": fmt_float(G), "seeds": seeds, "eta": "1/(mu n K)"}
    return gap_table_to_csv(rows, header)


@dataclass(frozen=True)
class GapProperties:
    igd_blowup: float  # IGD mean / RR mean at the smallest K
    igd_blowup_ok: bool
    rr_wr_band_ok: bool
    rr_wr_band_failures: tuple  # K values where a mean leaves the other's band
    herding_ok: bool
    herding_failures: tuple


def check_gap_properties(rows: Sequence) -> GapProperties:
    """Evaluate the three qualitative claims on a gap-comparison table."""
    by = {(K, s): (m, q1, q3) for K, s, m, q1, q3 in rows}
    Ks = sorted({K for K, *_ in rows})
    k0 = Ks[0]
    rr0 = by[(k0, "RR")][0]
    blow = by[(k0, "IGD")][0] / rr0 if rr0 > 0 else math.inf
    band_fail, herd_fail = [], []
    for K in Ks:
        rm, rq1, rq3 = by[(K, "RR")]
        wm, wq1, wq3 = by[(K, "WR")]
        if not (wq1 <= rm <= wq3 and rq1 <= wm <= rq3):
            band_fail.append(K)
        if by[(K, "Herding")][0] > rm:
            herd_fail.append(K)
    return GapProperties(blow, blow >= 10.0, not band_fail, tuple(band_fail), not herd_fail, tuple(herd_fail))


# ---------------------------------------------------------------------------
# lower/upper sandwich


@dataclass(frozen=True)
class Sandwich:
    K: int
    lower: float
    measured: float
    upper: float
    eta_upper: float

    @property
    def holds(self) -> bool:
        return self.lower <= self.measured <= self.upper


def scvx_upper_gap(problem: FiniteSumProblem, x0, K: int) -> tuple:
    """(eta, bound) for the strongly-convex-component schedule, as a function gap.

    The squared-distance bound e^{-eta mu n K} D^2 + eta^2 L n^2 G*^2/mu is
    turned into a gap bound by L-smoothness (factor L/2).  The epoch
    condition is not enforced here; callers comparing rates use it as a
    formula.
    """
    mu, L, n = problem.mu, problem.ell, problem.n
    Gs = problem.grad_at_opt_Gstar
    dist = float(np.linalg.norm(np.asarray(x0, dtype=float) - problem.minimizer))
    params = {"mu": mu, "L": L, "n": n, "K": K, "G": Gs, "dist": dist}
    eta = recommended_step_size("small-ub-scvx", params)
    sq = math.exp(-eta * mu * n * K) * dist**2 + eta**2 * L * n**2 * Gs**2 / mu
    return eta, 0.5 * L * sq


def rate_sandwich(K: int, n: int = 100, kappa: float = 1e4, mu: float = 1.0, G: float = 1.0) -> Sandwich:
    """Lower bound, measured IGD inf-gap and upper-bound formula on the rotated instance."""
    spec = ConstructionSpec("small-lb-sc", n, kappa, K, G, mu)
    bundle = build(spec)
    eta_u, upper = scvx_upper_gap(bundle.problem, bundle.x0, K)
    grid = sorted(set(default_grid(bundle.regime_intervals)) | {eta_u})
    rep = lower_bound_check("small-lb-sc", spec, SweepSpec(tuple(grid), (K,)))
    return Sandwich(K, rep.analytic_bound, rep.measured_inf_gap, upper, eta_u)


# ---------------------------------------------------------------------------
# default parameter points used by `verify --all` and the acceptance suite

LOWER_POINTS = {
    "small-lb-idhess": ConstructionSpec("small-lb-idhess", 8, 40.0, 10),
    "small-lb-sc": ConstructionSpec("small-lb-sc", 100, 1e4, 20),
    "small-lb-concave": ConstructionSpec("small-lb-concave", 20, 400.0, 10, D=10.0),
    "large-lb-idhess": ConstructionSpec("large-lb-idhess", 4, 10.0, 20),
    "large-lb-concave": ConstructionSpec("large-lb-concave", 8, 16.0, 64),
}
QUICK_LOWER_POINTS = {
    "small-lb-idhess": ConstructionSpec("small-lb-idhess", 4, 20.0, 5),
    "small-lb-sc": ConstructionSpec("small-lb-sc", 20, 400.0, 5),
    "small-lb-concave": ConstructionSpec("small-lb-concave", 8, 64.0, 4, D=4.0),
    "large-lb-idhess": ConstructionSpec("large-lb-idhess", 4, 8.0, 10),
    "large-lb-concave": ConstructionSpec("large-lb-concave", 4, 4.0, 8),
}


@dataclass(frozen=True)
class UpperInstance:
    problem: FiniteSumProblem
    strategy: ShuffleStrategy
    K: int
    x0: np.ndarray


def default_upper_instance(theorem_id: str, quick: bool = False) -> UpperInstance:
    """A problem on which the theorem's assumptions hold, with a valid K.

    * small-ub-idhess: the identical-Hessian block F2 of the small-K
      identical-Hessian construction (1D), started at 5.
    * small-ub-scvx: the rotated construction, whose components are all
      mu-strongly convex.
    * herding-at-opt: +-G scalar components sharing one curvature, with the
      herding permutation of the gradients at the minimizer.
    * large-ub-generalizedgrad: the large-K concave construction, with K
      above 8 kappa max(1, P) times the schedule's log term.
    """
    if theorem_id == "small-ub-idhess":
        # eta L < 1 needs n K above L times the log term, so quick keeps this point
        b = build(ConstructionSpec("small-lb-idhess", 100, 1000.0, 10))
        return UpperInstance(b.per_dimension[1].problem, ShuffleStrategy.igd(), 500, np.array([5.0]))
    if theorem_id == "small-ub-scvx":
        b = build(ConstructionSpec("small-lb-sc", 20 if quick else 50, 100.0, 1))
        return UpperInstance(b.problem, ShuffleStrategy.igd(), 50 if quick else 100, b.x0)
    if theorem_id == "herding-at-opt":
        n = 10 if quick else 20
        p = pm_scalar_instance(n)
        return UpperInstance(p, herding_at_opt_strategy(p), 100, np.array([3.0]))
    if theorem_id == "large-ub-generalizedgrad":
        b = build(ConstructionSpec("large-lb-concave", 4, 4.0, 8))
        return UpperInstance(b.problem, ShuffleStrategy.igd(), 2000 if quick else 4000, b.x0)
    raise KeyError(f"no default instance for {theorem_id!r}")


def pm_scalar_instance(n: int, a: float = 1.0, G: float = 1.0, L: float = 50.0) -> FiniteSumProblem:
    """Scalar components a/2 x^2 +- G x (n even), declared with smoothness L."""
    from .constructions import twotype_block

    return twotype_block(a, G, n, a, L, "twotype")
