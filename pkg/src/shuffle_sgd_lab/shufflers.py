"""Index schedules and the permutation-based SGD loop.

Component indices are 0-based throughout; epochs are numbered from 1, so
epoch ``k`` of a reshuffling run draws from ``stream(seed, k)``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .quadratic import FiniteSumProblem, optimality_gap
from .rng import fisher_yates, stream
from .serialize import fmt_float


class Kind(str, Enum):
    IGD = "igd"
    RANDOM_RESHUFFLE = "rr"
    SINGLE_SHUFFLE = "ss"
    FIXED_PERMUTATION = "fixed"
    WITH_REPLACEMENT = "wr"
    HERDING_AT_OPTIMUM = "herding"


_SEEDED = {Kind.RANDOM_RESHUFFLE, Kind.SINGLE_SHUFFLE, Kind.WITH_REPLACEMENT}
_SIGMA = {Kind.FIXED_PERMUTATION, Kind.HERDING_AT_OPTIMUM}


@dataclass(frozen=True)
class ShuffleStrategy:
    """Which index order each epoch uses.

    ``sigma`` is a 0-based permutation for the fixed-order kinds;
    ``h_achieved`` records the herding prefix bound when the permutation
    came from ``herding_order``.
    """

    kind: Kind
    seed: int = 0
    sigma: Optional[tuple] = None
    h_achieved: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind in _SIGMA:
            if self.sigma is None:
                raise ValueError(f"{self.kind.value} strategy needs a permutation")
            s = tuple(int(v) for v in self.sigma)
            if sorted(s) != list(range(len(s))):
                raise ValueError("sigma is not a permutation of 0..n-1")
            object.__setattr__(self, "sigma", s)
        elif self.sigma is not None:
            raise ValueError(f"{self.kind.value} strategy does not take a permutation")

    @classmethod
    def igd(cls):
        return cls(Kind.IGD)

    @classmethod
    def random_reshuffle(cls, seed: int):
        return cls(Kind.RANDOM_RESHUFFLE, seed=seed)

    @classmethod
    def single_shuffle(cls, seed: int):
        return cls(Kind.SINGLE_SHUFFLE, seed=seed)

    @classmethod
    def with_replacement(cls, seed: int):
        return cls(Kind.WITH_REPLACEMENT, seed=seed)

    @classmethod
    def fixed(cls, sigma):
        return cls(Kind.FIXED_PERMUTATION, sigma=tuple(sigma))

    @property
    def is_permutation(self) -> bool:
        return self.kind != Kind.WITH_REPLACEMENT

    def label(self) -> str:
        if self.kind in _SEEDED:
            return f"{self.kind.value}:{self.seed}"
        return self.kind.value


def epoch_order(strategy: ShuffleStrategy, k: int, n: int) -> np.ndarray:
    """Component indices visited in epoch ``k`` (k >= 1)."""
    kind = strategy.kind
    if kind == Kind.IGD:
        return np.arange(n)
    if kind == Kind.RANDOM_RESHUFFLE:
        return fisher_yates(stream(strategy.seed, k), n)
    if kind == Kind.SINGLE_SHUFFLE:
        return fisher_yates(stream(strategy.seed, 1), n)
    if kind == Kind.WITH_REPLACEMENT:
        return stream(strategy.seed, k).integers(0, n, size=n)
    if len(strategy.sigma) != n:
        raise ValueError(f"sigma has length {len(strategy.sigma)}, problem has n={n}")
    return np.array(strategy.sigma)


@dataclass(frozen=True)
class RunConfig:
    eta: float
    K: int
    x0: np.ndarray
    record_every_iterate: bool = False

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValueError(f"step size must be positive and finite, got {self.eta!r}")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")
        object.__setattr__(self, "K", int(self.K))
        x0 = np.atleast_1d(np.array(self.x0, dtype=float))
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one run.

    ``epoch_starts[k]`` is the iterate at the start of epoch k+1, so for a
    finished run ``epoch_starts[K]`` is the final iterate.  A diverged run
    keeps only the finite epoch starts, and ``final`` is the last finite
    iterate seen (possibly mid-epoch).
    """

    epoch_starts: np.ndarray
    final: np.ndarray
    gaps: np.ndarray
    final_gap: float
    diverged: bool = False
    full_trace: Optional[np.ndarray] = None

    @property
    def status(self) -> str:
        return "diverged" if self.diverged else "ok"

    def to_csv(self) -> str:
        d = self.final.shape[0]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "gap"] + [f"x_{j + 1}" for j in range(d)])
        for k, (x, g) in enumerate(zip(self.epoch_starts, self.gaps)):
            w.writerow([str(k), fmt_float(g)] + [fmt_float(v) for v in x])
        w.writerow(["final", fmt_float(self.final_gap)] + [fmt_float(v) for v in self.final])
        return buf.getvalue()


def _replay_finite(M, c, order, x):
    """Step through one epoch, returning (last finite iterate, trace)."""
    trace = []
    for i in order:
        with np.errstate(over="ignore", invalid="ignore"):
            y = M[i] @ x + c[i]
        if not np.all(np.isfinite(y)):
            break
        x = y
        trace.append(x)
    return x, trace


def run(problem: FiniteSumProblem, strategy: ShuffleStrategy, config: RunConfig) -> RunRecord:
    """Run K epochs of x <- x - eta * grad f_{sigma_k(i)}(x).

    Each step is evaluated as x <- (I - eta A_i) x - eta b_i.  The run is a
    pure function of its arguments, so repeated calls are bit-identical.
    """
    n, d = problem.n, problem.d
    if config.x0.shape != (d,):
        raise ValueError(f"x0 has shape {config.x0.shape}, problem dimension is {d}")
    eta, K = config.eta, config.K
    M = np.eye(d)[None, :, :] - eta * problem.hessians
    c = -eta * problem.linears
    scalar = d == 1
    if scalar:
        m1 = M[:, 0, 0].tolist()
        c1 = c[:, 0].tolist()

    x = config.x0.copy()
    starts = [x.copy()]
    trace = [x.copy()] if config.record_every_iterate else None
    diverged = False
    for k in range(1, K + 1):
        order = epoch_order(strategy, k, n)
        x_start = x
        if scalar and not config.record_every_iterate:
            v = float(x[0])
            for i in order.tolist():
                v = m1[i] * v + c1[i]
            x = np.array([v])
            if math.isfinite(v):
                starts.append(x)
                continue
            epoch_trace = None
        else:
            epoch_trace = []
            with np.errstate(over="ignore", invalid="ignore"):
                for i in order:
                    x = M[i] @ x + c[i]
                    if config.record_every_iterate:
                        epoch_trace.append(x)
            if np.all(np.isfinite(x)):
                starts.append(x)
                if trace is not None:
                    trace.extend(epoch_trace)
                continue
        # an overflow happened somewhere in this epoch: replay it to find
        # the last finite iterate
        x, partial = _replay_finite(M, c, order, x_start)
        if trace is not None:
            trace.extend(partial)
        diverged = True
        break

    starts_arr = np.array(starts)
    gaps = np.array([optimality_gap(problem, s) for s in starts_arr])
    return RunRecord(
        epoch_starts=starts_arr,
        final=np.array(x, dtype=float),
        gaps=gaps,
        final_gap=optimality_gap(problem, x),
        diverged=diverged,
        full_trace=None if trace is None else np.array(trace),
    )


def herding_order(vectors: Sequence) -> tuple:
    """Greedy vector balancing.

    Repeatedly appends the unused vector that keeps the running prefix sum
    shortest (lowest index on ties).  Returns ``(sigma, H)`` where ``sigma``
    is a 0-based permutation and ``H`` the largest prefix-sum norm it
    attains.

    Args:
        vectors: n vectors of a common dimension, summing to zero, each of
            norm at most 1.
    """
    Z = np.atleast_2d(np.array(vectors, dtype=float))
    if Z.ndim != 2:
        raise ValueError("vectors must form an (n, d) array")
    n = Z.shape[0]
    norms = np.linalg.norm(Z, axis=1)
    worst = int(np.argmax(norms)) if n else 0
    if n and norms[worst] > 1 + 1e-9:
        raise ValueError(f"vector {worst} has norm {norms[worst]!r} > 1")
    total = float(np.linalg.norm(Z.sum(axis=0)))
    if total > 1e-9:
        raise ValueError(f"vectors sum to a vector of norm {total!r}, expected 0")
    used = np.zeros(n, dtype=bool)
    prefix = np.zeros(Z.shape[1])
    sigma = []
    H = 0.0
    for _ in range(n):
        cand = np.linalg.norm(prefix + Z, axis=1)
        cand[used] = np.inf
        j = int(np.argmin(cand))
        used[j] = True
        sigma.append(j)
        prefix = prefix + Z[j]
        H = max(H, float(cand[j]))
    return tuple(sigma), H


def prefix_bound(vectors, sigma) -> float:
    """max_i ||z_sigma(1) + ... + z_sigma(i)|| for a given order."""
    Z = np.atleast_2d(np.array(vectors, dtype=float))
    P = np.cumsum(Z[list(sigma)], axis=0)
    return float(np.max(np.linalg.norm(P, axis=1))) if len(sigma) else 0.0


def exhaustive_prefix_bounds(vectors) -> tuple:
    """(best, worst) prefix bound over all n! orders.  Only for small n."""
    Z = np.atleast_2d(np.array(vectors, dtype=float))
    n = Z.shape[0]
    if n > 9:
        raise ValueError("exhaustive search is limited to n <= 9")
    best, worst = math.inf, 0.0
    for perm in itertools.permutations(range(n)):
        h = prefix_bound(Z, perm)
        best = min(best, h)
        worst = max(worst, h)
    return best, worst


def herding_at_opt_strategy(problem: FiniteSumProblem, use_initial_point: bool = False, x0=None) -> ShuffleStrategy:
    """Fixed permutation obtained by herding the component gradients at x*.

    With ``use_initial_point`` the gradients are taken as
    grad f_i(x0) - grad F(x0), which coincides with grad f_i(x*) whenever
    all components share one Hessian.
    """
    if use_initial_point:
        if x0 is None:
            raise ValueError("use_initial_point requires x0")
        x0 = np.asarray(x0, dtype=float)
        grads = problem.hessians @ x0 + problem.linears
        grads = grads - grads.mean(axis=0)
    else:
        xs = problem.minimizer
        grads = problem.hessians @ xs + problem.linears
    scale = float(np.max(np.linalg.norm(grads, axis=1)))
    if scale == 0.0:
        return ShuffleStrategy(Kind.HERDING_AT_OPTIMUM, sigma=tuple(range(problem.n)), h_achieved=0.0)
    Z = grads / scale
    # remove the rounding residue of the zero-sum property before herding
    Z = Z - Z.mean(axis=0)
    sigma, H = herding_order(Z)
    return ShuffleStrategy(Kind.HERDING_AT_OPTIMUM, sigma=sigma, h_achieved=H)


# ---------------------------------------------------------------------------
# step-size schedules

LOWER_BOUND_THEOREMS = (
    "small-lb-idhess",
    "small-lb-sc",
    "small-lb-concave",
    "large-lb-idhess",
    "large-lb-concave",
)
UPPER_BOUND_THEOREMS = (
    "small-ub-idhess",
    "small-ub-scvx",
    "herding-at-opt",
    "large-ub-avg",
    "large-ub-generalizedgrad",
)


def schedule_log_term(theorem_id: str, params: dict) -> float:
    """The ``max{log(...), 1}`` factor of an upper-bound schedule.

    ``params`` keys: mu, L, n, K, G (the G or G* of the theorem), dist
    (||x0 - x*||), gap0 (F(x0) - F*), H (herding bound).
    """
    mu, L, K = params["mu"], params["L"], params["K"]
    G = params.get("G")
    if theorem_id == "small-ub-idhess":
        arg = L * params["dist"] / G
    elif theorem_id == "small-ub-scvx":
        arg = params["dist"] * mu * K / (math.sqrt(L / mu) * G)
    elif theorem_id == "herding-at-opt":
        arg = params["dist"] * mu * params["n"] * K / (math.sqrt(L / mu) * params["H"] * G)
    elif theorem_id == "large-ub-avg":
        arg = params["dist"] ** 2 * mu**3 * K**2 / (L * G**2 * (1 + math.log(K)))
    elif theorem_id == "large-ub-generalizedgrad":
        arg = params["gap0"] * mu**3 * K**2 / (L**2 * G**2)
    else:
        raise KeyError(f"unknown theorem id {theorem_id!r}")
    if arg <= 0 or not math.isfinite(arg):
        return 1.0
    return max(math.log(arg), 1.0)


def recommended_step_size(theorem_id: str, params: dict) -> float:
    """Constant step size prescribed for ``theorem_id``.

    Lower-bound theorems return the regime boundary 1/(mu n K).
    """
    mu, n, K = params["mu"], params["n"], params["K"]
    base = 1.0 / (mu * n * K)
    if theorem_id in LOWER_BOUND_THEOREMS:
        return base
    scale = {
        "small-ub-idhess": 1.0,
        "small-ub-scvx": 2.0,
        "herding-at-opt": 2.0,
        "large-ub-avg": 1.0,
        "large-ub-generalizedgrad": 2.0,
    }
    if theorem_id not in scale:
        raise KeyError(f"unknown theorem id {theorem_id!r}")
    return scale[theorem_id] * base * schedule_log_term(theorem_id, params)
