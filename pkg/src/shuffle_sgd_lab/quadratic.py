"""Finite-sum quadratic objectives.

Each component is f_i(x) = 1/2 x^T A_i x + b_i^T x + c_i and the objective
is their average F.  Problems are immutable: arrays are copied on
construction and marked read-only, so a problem can be shared freely
between threads or processes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .linalg import spectral_norm_symmetric, symmetric_eigenvalues
from .serialize import dumps

SYMMETRY_RTOL = 1e-12
STATIONARITY_TOL = 1e-10
GAP_CLAMP = -1e-12
# relative slack used when comparing declared constants against measured ones
CONSTANT_RTOL = 1e-9
PROBE_SEED = 20240917
PROBE_COUNT = 1024


class ProblemError(ValueError):
    """Raised when a problem violates one of its structural invariants."""


class NotStronglyConvexError(ProblemError):
    pass


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QuadraticComponent:
    """One summand f(x) = 1/2 x^T A x + b^T x + c.

    The Hessian may be indefinite; only the average of all components has
    to be strongly convex.
    """

    hessian: np.ndarray
    linear: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.hessian, dtype=float))
        b = np.atleast_1d(np.array(self.linear, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ProblemError(f"hessian must be square, got shape {A.shape}")
        if b.shape != (A.shape[0],):
            raise ProblemError(f"linear term has shape {b.shape}, expected ({A.shape[0]},)")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and math.isfinite(self.offset)):
            raise ProblemError("component entries must be finite")
        asym = np.max(np.abs(A - A.T)) if A.size else 0.0
        if asym > SYMMETRY_RTOL * max(1.0, np.max(np.abs(A))):
            raise ProblemError(f"hessian is not symmetric (max asymmetry {asym:.3e})")
        object.__setattr__(self, "hessian", _frozen(A))
        object.__setattr__(self, "linear", _frozen(b))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.linear.shape[0]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.hessian @ x + self.linear @ x + self.offset)

    def gradient(self, x) -> np.ndarray:
        return self.hessian @ np.asarray(x, dtype=float) + self.linear


def _averages(components: Sequence[QuadraticComponent]):
    A_bar = sum(c.hessian for c in components) / len(components)
    b_bar = sum(c.linear for c in components) / len(components)
    return A_bar, b_bar


def solve_minimizer(components: Sequence[QuadraticComponent]) -> np.ndarray:
    """Exact minimizer of the average, via a Cholesky factorization of A_bar.

    Raises NotStronglyConvexError when the averaged Hessian is not
    positive definite.
    """
    if len(components) == 0:
        raise ProblemError("need at least one component")
    A_bar, b_bar = _averages(components)
    try:
        C = np.linalg.cholesky(0.5 * (A_bar + A_bar.T))
    except np.linalg.LinAlgError:
        raise NotStronglyConvexError(
            "not strongly convex: averaged Hessian is singular or indefinite"
        ) from None
    y = np.linalg.solve(C, -b_bar)
    return np.linalg.solve(C.T, y)


@dataclass(frozen=True)
class FiniteSumProblem:
    """Average of n quadratic components together with its constants.

    ``mu``, ``ell`` and the gradient-error constants are the *declared*
    values a theorem is instantiated with.  They are checked against the
    measured spectrum on construction, so a declared constant can be
    looser than the truth but never tighter.
    """

    components: tuple
    mu: float
    ell: float
    minimizer: np.ndarray
    grad_error_G: float
    grad_error_P: float
    grad_at_opt_Gstar: float
    construction: str = "custom"
    kappa: float = field(init=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ProblemError("need at least one component")
        d = comps[0].dim
        if any(c.dim != d for c in comps):
            raise ProblemError("all components must share one dimension")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "minimizer", _frozen(self.minimizer))
        if not (self.mu > 0 and self.ell > 0):
            raise ProblemError("mu and ell must be positive")
        object.__setattr__(self, "kappa", self.ell / self.mu)

        A_bar, b_bar = _averages(comps)
        object.__setattr__(self, "_A_bar", _frozen(A_bar))
        object.__setattr__(self, "_b_bar", _frozen(b_bar))
        lam_min = symmetric_eigenvalues(A_bar)[0]
        if self.mu > lam_min * (1 + CONSTANT_RTOL):
            raise ProblemError(f"mu={float(self.mu):.17g} exceeds the smallest eigenvalue {float(lam_min):.17g} of the averaged Hessian")
        for i, c in enumerate(comps):
            nrm = spectral_norm_symmetric(c.hessian)
            if nrm > self.ell * (1 + CONSTANT_RTOL):
                raise ProblemError(f"component {i} has spectral norm {float(nrm):.17g} > ell={float(self.ell):.17g}")
        resid = np.linalg.norm(A_bar @ self.minimizer + b_bar)
        if resid > STATIONARITY_TOL * (1 + np.linalg.norm(b_bar)):
            raise ProblemError(f"minimizer is not stationary (residual {resid:.3e})")
        gstar = max(np.linalg.norm(c.gradient(self.minimizer)) for c in comps)
        if self.grad_at_opt_Gstar < gstar * (1 - CONSTANT_RTOL):
            raise ProblemError(f"declared G*={float(self.grad_at_opt_Gstar):.17g} below measured {float(gstar):.17g}")

        # per-component arrays used by the hot loop in shufflers.run
        As = np.stack([c.hessian for c in comps])
        bs = np.stack([c.linear for c in comps])
        As.setflags(write=False)
        bs.setflags(write=False)
        object.__setattr__(self, "_As", As)
        object.__setattr__(self, "_bs", bs)

    @classmethod
    def from_components(
        cls,
        components: Sequence[QuadraticComponent],
        mu: Optional[float] = None,
        ell: Optional[float] = None,
        G: Optional[float] = None,
        P: Optional[float] = None,
        Gstar: Optional[float] = None,
        construction: str = "custom",
    ) -> "FiniteSumProblem":
        """Build a problem, filling undeclared constants with measured ones."""
        comps = tuple(components)
        xstar = solve_minimizer(comps)
        m = _measure(comps, xstar)
        return cls(
            components=comps,
            mu=m["mu"] if mu is None else float(mu),
            ell=m["L"] if ell is None else float(ell),
            minimizer=xstar,
            grad_error_G=m["G"] if G is None else float(G),
            grad_error_P=m["P"] if P is None else float(P),
            grad_at_opt_Gstar=m["Gstar"] if Gstar is None else float(Gstar),
            construction=construction,
        )

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def d(self) -> int:
        return self.components[0].dim

    @property
    def mean_hessian(self) -> np.ndarray:
        return self._A_bar

    @property
    def mean_linear(self) -> np.ndarray:
        return self._b_bar

    @property
    def hessians(self) -> np.ndarray:
        return self._As

    @property
    def linears(self) -> np.ndarray:
        return self._bs

    def with_constants(self, **changes) -> "FiniteSumProblem":
        fields = dict(
            components=self.components,
            mu=self.mu,
            ell=self.ell,
            minimizer=self.minimizer,
            grad_error_G=self.grad_error_G,
            grad_error_P=self.grad_error_P,
            grad_at_opt_Gstar=self.grad_at_opt_Gstar,
            construction=self.construction,
        )
        fields.update(changes)
        return FiniteSumProblem(**fields)


@dataclass(frozen=True)
class IterateState:
    x: np.ndarray
    epoch_index: int
    within_epoch_index: int

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        if self.epoch_index < 0:
            raise ValueError("epoch_index must be nonnegative")


def _check_dim(problem: FiniteSumProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.d,):
        raise ValueError(f"dimension mismatch: expected ({problem.d},), got {x.shape}")
    return x


def component_gradient(problem: FiniteSumProblem, i: int, x) -> np.ndarray:
    """Gradient of component ``i`` (0-based) at ``x``."""
    if not 0 <= i < problem.n:
        raise IndexError(f"component index {i} out of range [0, {problem.n})")
    x = _check_dim(problem, x)
    return problem.hessians[i] @ x + problem.linears[i]


def full_gradient(problem: FiniteSumProblem, x) -> np.ndarray:
    x = _check_dim(problem, x)
    return problem.mean_hessian @ x + problem.mean_linear


def objective(problem: FiniteSumProblem, x) -> float:
    x = _check_dim(problem, x)
    c_bar = sum(c.offset for c in problem.components) / problem.n
    return float(0.5 * x @ problem.mean_hessian @ x + problem.mean_linear @ x + c_bar)


def optimality_gap(problem: FiniteSumProblem, x) -> float:
    """F(x) - F(x*), evaluated as 1/2 (x-x*)^T A_bar (x-x*).

    The centred form avoids cancellation between two large objective
    values.  Rounding negatives down to -1e-12 are clamped to zero;
    non-finite inputs give +inf.
    """
    x = _check_dim(problem, x)
    if not np.all(np.isfinite(x)):
        return math.inf
    e = x - problem.minimizer
    with np.errstate(over="ignore", invalid="ignore"):
        g = 0.5 * float(e @ problem.mean_hessian @ e)
    if not math.isfinite(g):
        return math.inf
    if g < 0:
        if g < GAP_CLAMP * max(1.0, abs(float(e @ e))):
            raise ProblemError(f"negative optimality gap {float(g):.17g}; averaged Hessian not positive definite?")
        return 0.0
    return g


def _measure(comps, xstar) -> dict:
    A_bar, _ = _averages(comps)
    A_inv = np.linalg.inv(A_bar)
    grads = [c.hessian @ xstar + c.linear for c in comps]
    gstar = max(float(np.linalg.norm(g)) for g in grads)
    P = 0.0
    for c in comps:
        D = c.hessian - A_bar
        if np.any(D != 0):
            P = max(P, float(np.linalg.norm(D @ A_inv, 2)))
    return {
        "mu": float(symmetric_eigenvalues(A_bar)[0]),
        "L": max(spectral_norm_symmetric(c.hessian) for c in comps),
        "Gstar": gstar,
        # (G, P) = (G*, max ||(A_i - A_bar) A_bar^{-1}||) always satisfies
        # ||grad f_i - grad F|| <= G + P ||grad F|| by the triangle inequality
        "G": gstar,
        "P": P,
    }


@dataclass(frozen=True)
class AuditReport:
    mu_measured: float
    L_measured: float
    Gstar_measured: float
    G_measured: float
    P_measured: float
    identical_hessians: bool
    strong_convexity_ok: bool
    smoothness_ok: bool
    gradient_error_ok: bool
    grad_at_opt_ok: bool
    failures: tuple
    probe_count: int
    probe_radius: float

    @property
    def passed(self) -> bool:
        return self.strong_convexity_ok and self.smoothness_ok and self.gradient_error_ok and self.grad_at_opt_ok

    def as_dict(self) -> dict:
        return {
            "mu_measured": self.mu_measured,
            "L_measured": self.L_measured,
            "Gstar_measured": self.Gstar_measured,
            "G_measured": self.G_measured,
            "P_measured": self.P_measured,
            "identical_hessians": self.identical_hessians,
            "passed": self.passed,
            "failures": [list(f) for f in self.failures],
            "probe_count": self.probe_count,
            "probe_radius": self.probe_radius,
        }


def probe_points(d: int, radius: float, count: int = PROBE_COUNT) -> np.ndarray:
    """Deterministic low-discrepancy points in the ball of given radius.

    Scrambled Halton points with a fixed seed are mapped to [-1, 1]^d and
    those outside the unit ball are discarded until ``count`` remain.
    """
    sampler = qmc.Halton(d=d, scramble=True, seed=PROBE_SEED)
    pts = []
    have = 0
    while have < count:
        u = 2.0 * sampler.random(4 * count) - 1.0
        keep = u[np.sum(u * u, axis=1) <= 1.0]
        pts.append(keep)
        have += keep.shape[0]
    return radius * np.concatenate(pts)[:count]


def audit_assumptions(problem: FiniteSumProblem, x0=None) -> AuditReport:
    """Check the declared constants of ``problem`` against measurement.

    Strong convexity and smoothness are checked from the spectrum; the
    bounded-gradient-error condition
    ||(A_i - A_bar) x + (b_i - b_bar)|| <= G + P ||A_bar x + b_bar||
    is checked analytically (through the sufficient pair measured by
    ``_measure``) and then confirmed pointwise on a probe set: 1024 Halton
    points in the ball of radius 10 ||x* - x0|| around x* plus points at
    geometrically spaced distances along each eigenvector of A_bar.  The
    probe set is a finite surrogate for the "for all x" quantifier.
    """
    comps = problem.components
    xstar = problem.minimizer
    m = _measure(comps, xstar)
    failures = []
    tol = CONSTANT_RTOL

    sc_ok = m["mu"] >= problem.mu * (1 - tol)
    if not sc_ok:
        failures.append(("strong_convexity", -1, f"lambda_min(A_bar)={float(m['mu']):.17g} < mu={float(problem.mu):.17g}"))
    sm_ok = True
    for i, c in enumerate(comps):
        nrm = spectral_norm_symmetric(c.hessian)
        if nrm > problem.ell * (1 + tol):
            sm_ok = False
            failures.append(("smoothness", i, f"||A_i||={float(nrm):.17g} > L={float(problem.ell):.17g}"))
    go_ok = True
    for i, c in enumerate(comps):
        g = float(np.linalg.norm(c.hessian @ xstar + c.linear))
        if g > problem.grad_at_opt_Gstar * (1 + tol) + 1e-15:
            go_ok = False
            failures.append(("grad_at_opt", i, f"||grad f_i(x*)||={float(g):.17g} > G*={float(problem.grad_at_opt_Gstar):.17g}"))

    if x0 is not None and np.linalg.norm(np.asarray(x0, dtype=float) - xstar) > 0:
        radius = 10.0 * float(np.linalg.norm(np.asarray(x0, dtype=float) - xstar))
    else:
        radius = 10.0 * max(1.0, float(np.linalg.norm(xstar)))
    d = problem.d
    Y = probe_points(d, radius)
    _, V = np.linalg.eigh(problem.mean_hessian)
    ts = np.geomspace(1e-6 * radius, 1e3 * radius, 19)
    eig_pts = [s * t * V[:, j] for j in range(d) for t in ts for s in (1.0, -1.0)]
    Y = np.vstack([Y, np.zeros((1, d)), np.array(eig_pts)])

    A_bar = problem.mean_hessian
    G, P = problem.grad_error_G, problem.grad_error_P
    rhs = G + P * np.linalg.norm(Y @ A_bar.T, axis=1)
    # when the declared (G, P) dominates the measured sufficient pair the
    # inequality holds everywhere; otherwise only the probes can refute it
    ge_ok = True
    for i, c in enumerate(comps):
        D = c.hessian - A_bar
        gi = c.hessian @ xstar + c.linear
        lhs = np.linalg.norm(Y @ D.T + gi, axis=1)
        bad = lhs > rhs * (1 + tol) + 1e-12 * max(1.0, G)
        if np.any(bad):
            ge_ok = False
            k = int(np.argmax(bad))
            failures.append(
                ("gradient_error", i, f"violated at probe {k}: {float(lhs[k]):.17g} > G + P||grad F|| = {float(rhs[k]):.17g}")
            )

    identical = all(np.array_equal(c.hessian, comps[0].hessian) for c in comps)
    return AuditReport(
        mu_measured=m["mu"],
        L_measured=m["L"],
        Gstar_measured=m["Gstar"],
        G_measured=m["G"],
        P_measured=m["P"],
        identical_hessians=identical,
        strong_convexity_ok=sc_ok,
        smoothness_ok=sm_ok,
        gradient_error_ok=ge_ok,
        grad_at_opt_ok=go_ok,
        failures=tuple(failures),
        probe_count=int(Y.shape[0]),
        probe_radius=radius,
    )


def problem_to_dict(problem: FiniteSumProblem) -> dict:
    return {
        "d": problem.d,
        "n": problem.n,
        "components": [{"A": c.hessian.tolist(), "b": c.linear.tolist()} for c in problem.components],
        "meta": {
            "mu": problem.mu,
            "L": problem.ell,
            "G": problem.grad_error_G,
            "P": problem.grad_error_P,
            "construction": problem.construction,
        },
    }


def problem_to_json(problem: FiniteSumProblem) -> str:
    return dumps(problem_to_dict(problem))


def problem_from_dict(doc: dict) -> FiniteSumProblem:
    comps = [QuadraticComponent(np.array(c["A"], dtype=float), np.array(c["b"], dtype=float)) for c in doc["components"]]
    if len(comps) != doc["n"] or comps[0].dim != doc["d"]:
        raise ProblemError("declared d/n do not match the component list")
    meta = doc.get("meta", {})
    return FiniteSumProblem.from_components(
        comps,
        mu=meta.get("mu"),
        ell=meta.get("L"),
        G=meta.get("G"),
        P=meta.get("P"),
        construction=meta.get("construction", "custom"),
    )


def problem_from_json(text: str) -> FiniteSumProblem:
    return problem_from_dict(json.loads(text))
