"""Closed-form iterate formulas for the one-dimensional constructions.

These give the exact IGD iterate (up to floating point) for the scalar
component families used by the lower-bound instances, and serve as
independent oracles for the simulator in ``shufflers.run``.

Component families, all with identity ordering:

* two-type (n even): first n/2 components a/2 x^2 + G x, rest a/2 x^2 - G x
* three-type (n odd): a/2 x^2, then (n-1)/2 of a/2 x^2 + G x, then
  (n-1)/2 of a/2 x^2 - G x
* concave pair (n even): first n/2 components a/2 x^2 + G x, rest
  -a/4 x^2 - G x
* four-block (n divisible by 4): G x, L/2 x^2, -G x, -(L - 4 mu)/2 x^2,
  each block of size n/4
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DENOM_TOL = 1e-14
# beyond this exponent, bases within this distance of +-1 use exp/log
_FALLBACK_EXPONENT = 10**6
_FALLBACK_CLOSENESS = 1e-6


class OracleError(ValueError):
    pass


def ipow(base: float, m: int) -> float:
    """base**m for integer m >= 0 by repeated squaring.

    For huge exponents with |base| close to 1 the product of many rounded
    squarings drifts, so that case is evaluated as
    sign * exp(m * log1p(|base| - 1)).
    """
    if m < 0:
        raise ValueError("exponent must be nonnegative")
    base = float(base)
    if m > _FALLBACK_EXPONENT and abs(abs(base) - 1.0) < _FALLBACK_CLOSENESS:
        sign = -1.0 if (base < 0 and m % 2 == 1) else 1.0
        return sign * math.exp(m * math.log1p(abs(base) - 1.0))
    result = 1.0
    while m:
        if m & 1:
            result *= base
        m >>= 1
        if m:
            base *= base
    return result


@dataclass(frozen=True)
class OracleParams:
    a: float
    G: float
    n: int
    eta: float
    K: int
    x0: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.K < 0:
            raise OracleError("n must be positive and K nonnegative")


def _guard(value: float, what: str) -> None:
    if abs(value) < DENOM_TOL:
        raise OracleError(f"{what} = {value!r} is too close to zero to divide by")


def closed_form_twotype(p: OracleParams) -> float:
    """Final iterate after K identity-order epochs on the two-type family."""
    if p.n % 2:
        raise OracleError(f"two-type family needs even n, got n={p.n}")
    _guard(p.a, "curvature a")
    r = 1.0 - p.eta * p.a
    half = ipow(r, p.n // 2)
    _guard(1.0 + half, "1 + (1 - eta a)^(n/2)")
    full = ipow(r, p.n * p.K)
    return full * p.x0 + (p.G / p.a) * (1.0 - half) / (1.0 + half) * (1.0 - full)


def twotype_limit(a: float, G: float, n: int, eta: float) -> float:
    """Fixed point of the two-type epoch map (requires |1 - eta a| < 1)."""
    half = ipow(1.0 - eta * a, n // 2)
    return (G / a) * (1.0 - half) / (1.0 + half)


def closed_form_threetype(p: OracleParams) -> float:
    """Final iterate after K identity-order epochs on the three-type family."""
    if p.n % 2 == 0 or p.n < 3:
        raise OracleError(f"three-type family needs odd n >= 3, got n={p.n}")
    _guard(p.a, "curvature a")
    r = 1.0 - p.eta * p.a
    denom = 1.0 - ipow(r, p.n)
    _guard(denom, "1 - (1 - eta a)^n")
    full = ipow(r, p.n * p.K)
    side = 1.0 - ipow(r, (p.n - 1) // 2)
    return full * p.x0 + (p.G / p.a) * (1.0 - full) / denom * side * side


def closed_form_concave_epoch(a: float, G: float, n: int, eta: float, xk: float) -> float:
    """One identity-order epoch of the concave-pair family, started at xk."""
    if n % 2:
        raise OracleError(f"concave family needs even n, got n={n}")
    _guard(a, "curvature a")
    up = ipow(1.0 + 0.5 * eta * a, n // 2)
    down = ipow(1.0 - eta * a, n // 2)
    return up * down * xk + (G / a) * (up * (1.0 + down) - 2.0)


def closed_form_concave(a: float, G: float, n: int, eta: float, K: int, x0: float) -> float:
    """K chained concave epochs."""
    x = float(x0)
    for _ in range(K):
        x = closed_form_concave_epoch(a, G, n, eta, x)
    return x


def large_concave_pq(mu: float, L: float, n: int, eta: float) -> tuple:
    """The contraction p = (1 - eta L)^(n/4) and expansion q = (1 + eta (L - 4 mu))^(n/4)."""
    if n % 4:
        raise OracleError(f"four-block family needs n divisible by 4, got n={n}")
    m = n // 4
    return ipow(1.0 - eta * L, m), ipow(1.0 + eta * (L - 4.0 * mu), m)


def large_concave_epoch_map(mu: float, L: float, n: int, eta: float, G: float, xk: float) -> float:
    """One identity-order epoch of the four-block family, started at xk."""
    p, q = large_concave_pq(mu, L, n, eta)
    return p * q * xk + q * (1.0 - p) * eta * n * G / 4.0


def large_concave_unrolled(mu: float, L: float, n: int, eta: float, G: float, K: int, x0: float) -> float:
    """K epochs of the four-block map via the geometric-series closed form."""
    p, q = large_concave_pq(mu, L, n, eta)
    pq = p * q
    _guard(1.0 - pq, "1 - pq")
    pqK = ipow(pq, K)
    return pqK * x0 + (1.0 - pqK) / (1.0 - pq) * q * (1.0 - p) * eta * n * G / 4.0
