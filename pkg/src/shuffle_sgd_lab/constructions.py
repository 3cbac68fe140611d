"""Adversarial lower-bound instances for incremental gradient descent.

Every builder follows the same pattern.  The positive step-size axis is
cut into a few regime intervals; for each interval a small (1D or 2D)
finite sum is built on which IGD provably stays far from the optimum for
every step size in that interval.  The pieces are then stacked into one
block-diagonal problem, whose optimality gap at any iterate is the sum of
the per-block gaps, so the aggregate defeats every constant step size at
once.

Each bundle carries, per regime, the explicit lower bound proved for its
block.  The analytic lower bound of the bundle is the smallest of them:
whichever regime a step size falls in, the responsible block alone already
has at least that gap.

Conventions: (mu, kappa) are inputs and L = kappa * mu is derived.
Component indices are 0-based.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .quadratic import FiniteSumProblem, QuadraticComponent

E1 = 1.0 - math.exp(-1.0)  # 1 - e^{-1}

THEOREM_IDS = (
    "small-lb-idhess",
    "small-lb-sc",
    "small-lb-concave",
    "large-lb-idhess",
    "large-lb-concave",
)


class SpecError(ValueError):
    """A construction was requested outside its theorem's parameter range."""


@dataclass(frozen=True)
class ConstructionSpec:
    theorem_id: str
    n: int
    kappa: float
    K: int
    G: float = 1.0
    mu: float = 1.0
    D: Optional[float] = None

    @property
    def L(self) -> float:
        return self.kappa * self.mu

    def validate(self) -> None:
        t, n, kappa, K = self.theorem_id, self.n, self.kappa, self.K
        if t not in THEOREM_IDS:
            raise SpecError(f"unknown theorem id {t!r}; expected one of {', '.join(THEOREM_IDS)}")
        if int(n) != n or int(K) != K:
            raise SpecError("n and K must be integers")
        if not (self.mu > 0 and self.G > 0 and kappa > 0 and K >= 1):
            raise SpecError("need mu > 0, G > 0, kappa > 0 and K >= 1")

        def need(ok, text):
            if not ok:
                raise SpecError(f"{t}: requires {text}")

        if t == "small-lb-idhess":
            need(n >= 2, "n >= 2")
            need(kappa >= 2, "kappa >= 2")
            need(K <= kappa / 2, "K <= kappa/2")
        elif t == "small-lb-sc":
            need(n >= 3, "n >= 3")
            need(kappa >= 2, "kappa >= 2")
            need(K <= kappa / (16 * math.pi), "K <= kappa/(16*pi)")
        elif t == "small-lb-concave":
            need(n >= 4, "n >= 4")
            need(kappa >= 4, "kappa >= 4")
            need(K <= kappa / 4, "K <= kappa/4")
            need(self.D is not None, "an initial distance D")
            if n % 2:
                m = n - 1
                need(kappa >= 4 * n / m, "kappa >= 4n/(n-1) for odd n (zero-padded block must stay mu-strongly convex)")
                need(_concave_odd_constant(n) > 0, "odd n >= 7 (the zero-padded block has no blow-up guarantee for n = 5)")
        elif t == "large-lb-idhess":
            need(n >= 2, "n >= 2")
            need(kappa >= 2, "kappa >= 2")
            need(K >= kappa, "K >= kappa")
        elif t == "large-lb-concave":
            need(n >= 4, "n >= 4")
            need(kappa >= n, "kappa >= n")
            need(K >= max(kappa**3 / n**2, kappa**1.5), "K >= max(kappa^3/n^2, kappa^(3/2))")


@dataclass(frozen=True)
class RegimeBound:
    """Lower bound proved on one step-size interval by one block."""

    label: str
    lo: float
    hi: float
    block: int
    value: float
    constant: str


@dataclass(frozen=True)
class DimensionRecord:
    name: str
    problem: FiniteSumProblem
    x0: np.ndarray
    regime: tuple


@dataclass(frozen=True)
class ConstructionBundle:
    spec: ConstructionSpec
    problem: FiniteSumProblem
    x0: np.ndarray
    per_dimension: tuple
    regime_bounds: tuple
    P_measured: float = field(default=float("nan"))

    @property
    def analytic_lower_bound(self) -> float:
        return min(r.value for r in self.regime_bounds)

    @property
    def regime_intervals(self) -> list:
        return [(r.lo, r.hi) for r in self.regime_bounds]

    def block_slices(self) -> list:
        out, start = [], 0
        for rec in self.per_dimension:
            out.append(slice(start, start + rec.problem.d))
            start += rec.problem.d
        return out

    def to_dict(self) -> dict:
        s = self.spec
        return {
            "theorem": s.theorem_id,
            "params": {"n": s.n, "kappa": s.kappa, "K": s.K, "G": s.G, "mu": s.mu, "L": s.L, "D": s.D},
            "x0": self.x0.tolist(),
            "analytic_lower_bound": self.analytic_lower_bound,
            "P_declared": self.problem.grad_error_P,
            "P_measured": self.P_measured,
            "regimes": [
                {
                    "label": r.label,
                    "eta_lo": r.lo,
                    "eta_hi": r.hi,
                    "block": self.per_dimension[r.block].name,
                    "bound": r.value,
                    "constant": r.constant,
                }
                for r in self.regime_bounds
            ],
            "dimensions": [
                {"name": rec.name, "d": rec.problem.d, "x0": np.asarray(rec.x0).tolist(), "regime": list(rec.regime)}
                for rec in self.per_dimension
            ],
        }


# ---------------------------------------------------------------------------
# 1D and 2D building blocks


def _scalar(a: float, g: float) -> QuadraticComponent:
    return QuadraticComponent(np.array([[a]]), np.array([g]))


def _block(comps, mu, L, name) -> FiniteSumProblem:
    return FiniteSumProblem.from_components(comps, mu=mu, ell=L, construction=name)


def quadratic_block(c: float, n: int, mu: float, L: float, name="quadratic") -> FiniteSumProblem:
    """n identical components c/2 x^2."""
    return _block([_scalar(c, 0.0)] * n, mu, L, name)


def twotype_block(a: float, G: float, n: int, mu: float, L: float, name="twotype") -> FiniteSumProblem:
    """a/2 x^2 + G x for the first half, a/2 x^2 - G x for the rest.

    Odd n gets the three-type layout with a leading a/2 x^2 component.
    """
    if n % 2 == 0:
        comps = [_scalar(a, G)] * (n // 2) + [_scalar(a, -G)] * (n // 2)
    else:
        h = (n - 1) // 2
        comps = [_scalar(a, 0.0)] + [_scalar(a, G)] * h + [_scalar(a, -G)] * h
    return _block(comps, mu, L, name)


def padded_twotype_block(a: float, G: float, n: int, mu: float, L: float, name="twotype-padded") -> FiniteSumProblem:
    """Two-type layout on 2*floor(n/2) components, then a zero component if n is odd."""
    h = n // 2
    comps = [_scalar(a, G)] * h + [_scalar(a, -G)] * h + [_scalar(0.0, 0.0)] * (n - 2 * h)
    return _block(comps, mu, L, name)


def concave_pair_block(a: float, G: float, n: int, mu: float, L: float, name="concave") -> FiniteSumProblem:
    """a/2 x^2 + G x then -a/4 x^2 - G x, halves of 2*floor(n/2), zero-padded for odd n."""
    h = n // 2
    comps = [_scalar(a, G)] * h + [_scalar(-0.5 * a, -G)] * h + [_scalar(0.0, 0.0)] * (n - 2 * h)
    return _block(comps, mu, L, name)


def four_block(mu: float, L: float, G: float, n: int, name="four-block") -> FiniteSumProblem:
    """Blocks G x, L/2 x^2, -G x, -(L - 4 mu')/2 x^2 of size m/4, m = 4 floor(n/4).

    The n - m leftover components are zero.  mu' = mu n / m keeps the
    averaged curvature exactly mu when padding is needed.
    """
    m = 4 * (n // 4)
    if m == 0:
        raise SpecError("four-block construction needs n >= 4")
    q = m // 4
    mu_eff = mu * n / m
    a = L - 4.0 * mu_eff
    comps = (
        [_scalar(0.0, G)] * q
        + [_scalar(L, 0.0)] * q
        + [_scalar(0.0, -G)] * q
        + [_scalar(-a, 0.0)] * q
        + [_scalar(0.0, 0.0)] * (n - m)
    )
    return _block(comps, mu, L, name)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotated_block(mu: float, Lp: float, G: float, n: int, L: float, name="rotated") -> FiniteSumProblem:
    """f_i = f_1 composed with the inverse rotation by 2 pi (i-1)/n, 0-based i here.

    f_1(x, y) = mu/2 x^2 + Lp/2 y^2 - G x, so component i has Hessian
    R Lambda R^T and linear term -G R e_1.
    """
    Lam = np.diag([mu, Lp])
    comps = []
    for i in range(n):
        R = rotation(2.0 * math.pi * i / n)
        A = R @ Lam @ R.T
        A = 0.5 * (A + A.T)
        comps.append(QuadraticComponent(A, -G * R[:, 0]))
    return _block(comps, mu, L, name)


def compute_u0_v0(eta: float, mu: float, L: float, n: int, G: float) -> tuple:
    """Starting point from which one IGD epoch on the rotated block closes a polygon.

    With delta = 2 pi/n, L' = L/2 and
    D(eta) = (1 - cos delta)(2 - (mu + L') eta) + eta^2 mu L',
    u0 = (eta L' - (1 - cos delta)) eta G / D and v0 = -sin(delta) eta G / D.
    Signs u0 > 0, v0 < 0 are only guaranteed for moderate step sizes; a
    warning is emitted when they fail.
    """
    Lp = 0.5 * L
    delta = 2.0 * math.pi / n
    omc = 1.0 - math.cos(delta)
    D = omc * (2.0 - (mu + Lp) * eta) + eta * eta * mu * Lp
    if abs(D) < 1e-300:
        raise ZeroDivisionError("polygon denominator vanishes")
    u0 = (eta * Lp - omc) / D * eta * G
    v0 = -math.sin(delta) / D * eta * G
    if not (u0 > 0 and v0 < 0):
        warnings.warn(f"u0/v0 signs not guaranteed at eta={eta!r} (u0={u0!r}, v0={v0!r})", RuntimeWarning)
    return u0, v0


def aggregate_dimensions(sub_problems: Sequence, mu=None, L=None, G=None, P=None, construction="aggregate"):
    """Direct sum of blocks that share n.

    ``sub_problems`` is a sequence of (problem, x0) pairs.  Returns the
    block-diagonal problem and the concatenated starting point.
    """
    sub_problems = list(sub_problems)
    ns = {p.n for p, _ in sub_problems}
    if len(ns) != 1:
        raise ValueError(f"all blocks must share n, got {sorted(ns)}")
    n = ns.pop()
    d = sum(p.d for p, _ in sub_problems)
    comps = []
    for i in range(n):
        A = np.zeros((d, d))
        b = np.zeros(d)
        c = 0.0
        s = 0
        for p, _ in sub_problems:
            comp = p.components[i]
            A[s : s + p.d, s : s + p.d] = comp.hessian
            b[s : s + p.d] = comp.linear
            c += comp.offset
            s += p.d
        comps.append(QuadraticComponent(A, b, c))
    x0 = np.concatenate([np.atleast_1d(np.asarray(x, dtype=float)) for _, x in sub_problems])
    mu = min(p.mu for p, _ in sub_problems) if mu is None else mu
    L = max(p.ell for p, _ in sub_problems) if L is None else L
    problem = FiniteSumProblem.from_components(comps, mu=mu, ell=L, G=G, P=P, construction=construction)
    return problem, x0


def _assemble(spec, blocks, regime_bounds, P_declared) -> ConstructionBundle:
    """Aggregate blocks, declare (G, P) and attach measured P."""
    from .quadratic import _measure

    pairs = [(rec.problem, rec.x0) for rec in blocks]
    raw, x0 = aggregate_dimensions(pairs, mu=spec.mu, L=spec.L, construction=spec.theorem_id)
    m = _measure(raw.components, raw.minimizer)
    # (G, P) are declared at the theorem's values; any extra scalar on G from
    # stacking several offset blocks is absorbed by taking the measured G*
    G_decl = max(spec.G, m["Gstar"])
    problem = raw.with_constants(grad_error_G=G_decl, grad_error_P=float(P_declared))
    return ConstructionBundle(
        spec=spec,
        problem=problem,
        x0=x0,
        per_dimension=tuple(blocks),
        regime_bounds=tuple(regime_bounds),
        P_measured=m["P"],
    )


def _small_boundary(spec) -> float:
    return 1.0 / (spec.mu * spec.n * spec.K)


# ---------------------------------------------------------------------------
# builders


def build_small_lb_idhess(spec: ConstructionSpec) -> ConstructionBundle:
    """Identical-Hessian instance: gap >~ G^2/(mu K) for K <= kappa/2."""
    spec = _with_theorem(spec, "small-lb-idhess")
    mu, L, n, K, G = spec.mu, spec.L, spec.n, spec.K, spec.G
    s = _small_boundary(spec)
    x1 = G / (mu * math.sqrt(K))
    z0 = G / math.sqrt(mu * L * K)
    blocks = [
        DimensionRecord("F1", quadratic_block(mu, n, mu, L, "F1"), np.array([x1]), (0.0, s)),
        DimensionRecord("F2", twotype_block(mu * K, G, n, mu, L, "F2"), np.array([0.0]), (s, 2.0 / L)),
        DimensionRecord("F3", quadratic_block(L, n, mu, L, "F3"), np.array([z0]), (2.0 / L, math.inf)),
    ]
    if n % 2 == 0:
        c2 = E1 * (1.0 - math.exp(-0.5)) / 2.0
        y = c2 * G / (mu * K)
        const2 = "x >= (1-e^-1)(1-e^-1/2)/2 * G/(mu K); gap = (mu K/2) x^2"
    else:
        c2 = E1 * (1.0 - math.exp(-0.25)) ** 2
        y = c2 * G / (mu * K)
        const2 = "x >= (1-e^-1)(1-e^-1/4)^2 * G/(mu K); gap = (mu K/2) x^2"
    bounds = [
        RegimeBound("small", 0.0, s, 0, 0.5 * mu * (x1 / 4) ** 2, "x >= x0/4; gap = (mu/2) x^2 = G^2/(32 mu K)"),
        RegimeBound("moderate", s, 2.0 / L, 1, 0.5 * mu * K * y * y, const2),
        RegimeBound("large", 2.0 / L, math.inf, 2, 0.5 * L * z0 * z0, "|z| >= |z0|; gap = (L/2) z0^2 = G^2/(2 mu K)"),
    ]
    return _assemble(spec, blocks, bounds, P_declared=0.0)


def build_small_lb_sc(spec: ConstructionSpec) -> ConstructionBundle:
    """Strongly convex components with rotated Hessians: gap >~ (L G^2/mu^2) min(1, kappa^2/K^4)."""
    spec = _with_theorem(spec, "small-lb-sc")
    mu, L, n, K, G, kappa = spec.mu, spec.L, spec.n, spec.K, spec.G, spec.kappa
    s = _small_boundary(spec)
    Lp = 0.5 * L
    m = min(1.0, kappa / K**2)
    x1 = math.sqrt(kappa) * m * G / mu
    w0 = G / mu * m
    with warnings.catch_warnings():
        if s >= 2.0 / L:
            # the moderate interval is empty, so the F2 start is never used
            warnings.simplefilter("ignore", RuntimeWarning)
        u0, v0 = compute_u0_v0(s, mu, L, n, G)
    blocks = [
        DimensionRecord("F1", quadratic_block(mu, n, mu, L, "F1"), np.array([x1]), (0.0, s)),
        DimensionRecord("F2", rotated_block(mu, Lp, G, n, L, "F2"), np.array([u0, v0]), (s, 2.0 / L)),
        DimensionRecord("F3", quadratic_block(L, n, mu, L, "F3"), np.array([w0]), (2.0 / L, math.inf)),
    ]
    r2 = (1.0 - 2.0 / math.e) * G / (32.0 * math.pi**2 * mu) * m
    bounds = [
        RegimeBound("small", 0.0, s, 0, 0.5 * mu * (x1 / 4) ** 2, "x >= x0/4; gap = (mu/2) x^2"),
        RegimeBound(
            "moderate", s, 2.0 / L, 1, L / 8.0 * r2 * r2,
            "||(x,y)|| >= (1-2/e) G/(32 pi^2 mu) min(1, kappa/K^2); gap >= (L/8) ||(x,y)||^2",
        ),
        RegimeBound("large", 2.0 / L, math.inf, 2, 0.5 * L * w0 * w0, "|w| >= |w0|; gap = (L/2) w0^2"),
    ]
    return _assemble(spec, blocks, bounds, P_declared=1.0)


def _concave_odd_constant(n: int) -> float:
    # with m = n-1 active components and eta >= 4/(nL):
    # (1 + eta L/2)^{m/2} >= B = (1 + 2/n)^{(n-1)/2}, and y - 2 >= (1 - 2/B) y for y >= B
    B = (1.0 + 2.0 / n) ** ((n - 1) / 2)
    return 1.0 - 2.0 / B


def build_small_lb_concave(spec: ConstructionSpec) -> ConstructionBundle:
    """Concave components: gap >~ min(mu D^2, (G^2/L)(1 + L/(2 mu n K))^n)."""
    spec = _with_theorem(spec, "small-lb-concave")
    mu, L, n, K, G, D = spec.mu, spec.L, spec.n, spec.K, spec.G, float(spec.D)
    s = _small_boundary(spec)
    blocks = [
        DimensionRecord("F1", quadratic_block(mu, n, mu, L, "F1"), np.array([D]), (0.0, s)),
        DimensionRecord("F2", concave_pair_block(L, G, n, mu, L, "F2"), np.array([0.0]), (s, math.inf)),
    ]
    m = 2 * (n // 2)
    growth = (1.0 + L / (2.0 * mu * n * K)) ** (m / 2)
    if n % 2 == 0:
        y = G / (9.0 * L) * growth
        const2 = "y >= G/(9L) (1 + L/(2 mu n K))^(n/2); gap = (L/8) y^2"
    else:
        y = _concave_odd_constant(n) * G / L * growth
        const2 = "y >= (1 - 2/(1+2/n)^((n-1)/2)) G/L (1 + L/(2 mu n K))^((n-1)/2); gap = ((n-1)L/(8n)) y^2"
    curv = m * L / (4.0 * n)  # averaged Hessian of the F2 block
    bounds = [
        RegimeBound("small", 0.0, s, 0, 0.5 * mu * (D / 4) ** 2, "x >= D/4; gap = (mu/2) x^2"),
        RegimeBound("moderate+large", s, math.inf, 1, 0.5 * curv * y * y, const2),
    ]
    return _assemble(spec, blocks, bounds, P_declared=3.0)


def build_large_lb_idhess(spec: ConstructionSpec) -> ConstructionBundle:
    """Identical-Hessian instance for K >= kappa: gap >~ L G^2/(mu^2 K^2)."""
    spec = _with_theorem(spec, "large-lb-idhess")
    mu, L, n, K, G, kappa = spec.mu, spec.L, spec.n, spec.K, spec.G, spec.kappa
    s = _small_boundary(spec)
    Lp = 0.5 * L
    mid = 2.0 / (n * L)  # 1/(n L')
    x1 = math.sqrt(kappa) * G / (mu * K)
    z0 = G / (mu * K)
    blocks = [
        DimensionRecord("F1", quadratic_block(mu, n, mu, L, "F1"), np.array([x1]), (0.0, s)),
        DimensionRecord("F2", twotype_block(Lp, G, n, mu, L, "F2"), np.array([0.0]), (s, 2.0 / L)),
        DimensionRecord("F3", quadratic_block(L, n, mu, L, "F3"), np.array([z0]), (2.0 / L, math.inf)),
    ]
    if n % 2 == 0:
        ya = E1 * G / (8.0 * mu * K)
        yb = E1 * (1.0 - math.exp(-0.5)) * G / (mu * K)
        ca = "y >= (1-e^-1) G/(8 mu K); gap = (L'/2) y^2"
        cb = "y >= (1-e^-1)(1-e^-1/2) G/(mu K); gap = (L'/2) y^2"
    else:
        ya = E1 * G / (32.0 * mu * K)
        yb = E1 * (1.0 - math.exp(-0.25)) * G / (2.0 * mu * K)
        ca = "y >= (1-e^-1) G/(32 mu K); gap = (L'/2) y^2"
        cb = "y >= (1-e^-1)(1-e^-1/4) G/(2 mu K); gap = (L'/2) y^2"
    bounds = [
        RegimeBound("small", 0.0, s, 0, 0.5 * mu * (x1 / 4) ** 2, "x >= x0/4; gap = L G^2/(32 mu^2 K^2)"),
        RegimeBound("moderate-1", s, mid, 1, 0.5 * Lp * ya * ya, ca),
        RegimeBound("moderate-2", mid, 2.0 / L, 1, 0.5 * Lp * yb * yb, cb),
        RegimeBound("large", 2.0 / L, math.inf, 2, 0.5 * L * z0 * z0, "|z| >= |z0|; gap = (L/2) (G/(mu K))^2"),
    ]
    return _assemble(spec, blocks, bounds, P_declared=0.0)


def build_large_lb_concave(spec: ConstructionSpec) -> ConstructionBundle:
    """Instance with concave components for large K: gap >~ L^2 G^2/(mu^3 K^2)."""
    spec = _with_theorem(spec, "large-lb-concave")
    mu, L, n, K, G, kappa = spec.mu, spec.L, spec.n, spec.K, spec.G, spec.kappa
    s = _small_boundary(spec)
    Lp = 0.5 * L
    b1 = 1.0 / (n * L)
    x1 = L * G / (mu**2 * K)
    w0 = math.sqrt(kappa) * G / (mu * K)
    blocks = [
        DimensionRecord("F1", quadratic_block(mu, n, mu, L, "F1"), np.array([x1]), (0.0, s)),
        DimensionRecord("F2", four_block(mu, L, G, n, "F2"), np.array([0.0]), (s, b1)),
        DimensionRecord("F3", padded_twotype_block(Lp, G, n, mu, L, "F3"), np.array([0.0]), (b1, 2.0 / L)),
        DimensionRecord("F4", quadratic_block(L, n, mu, L, "F4"), np.array([w0]), (2.0 / L, math.inf)),
    ]
    m4 = 4 * (n // 4)
    y = (m4 / n) ** 2 * E1 * L * G / (40.0 * mu**2 * K)
    m2 = 2 * (n // 2)
    z = G / Lp * (1.0 - math.exp(-m2 / (4.0 * n))) ** 2 / 2.0
    curv3 = m2 * Lp / n
    bounds = [
        RegimeBound("small", 0.0, s, 0, 0.5 * mu * (x1 / 4) ** 2, "x >= x0/4; gap = (mu/2) (L G/(4 mu^2 K))^2"),
        RegimeBound(
            "moderate-1", s, b1, 1, 0.5 * mu * y * y,
            "y >= (m/n)^2 (1-e^-1) L G/(40 mu^2 K), m = 4 floor(n/4); gap = (mu/2) y^2",
        ),
        RegimeBound(
            "moderate-2", b1, 2.0 / L, 2, 0.5 * curv3 * z * z,
            "z >= (G/L') (1-e^(-m/(4n)))^2/2, m = 2 floor(n/2); gap = (m L'/(2n)) z^2",
        ),
        RegimeBound("large", 2.0 / L, math.inf, 3, 0.5 * L * w0 * w0, "|w| >= |w0|; gap = (L/2) w0^2"),
    ]
    return _assemble(spec, blocks, bounds, P_declared=kappa)


def _with_theorem(spec: ConstructionSpec, theorem_id: str) -> ConstructionSpec:
    if spec.theorem_id != theorem_id:
        raise SpecError(f"spec is for {spec.theorem_id!r}, builder expects {theorem_id!r}")
    spec.validate()
    return spec


BUILDERS = {
    "small-lb-idhess": build_small_lb_idhess,
    "small-lb-sc": build_small_lb_sc,
    "small-lb-concave": build_small_lb_concave,
    "large-lb-idhess": build_large_lb_idhess,
    "large-lb-concave": build_large_lb_concave,
}


def build(spec: ConstructionSpec) -> ConstructionBundle:
    if spec.theorem_id not in BUILDERS:
        raise SpecError(f"unknown theorem id {spec.theorem_id!r}; expected one of {', '.join(THEOREM_IDS)}")
    return BUILDERS[spec.theorem_id](spec)
