"""Gamma function and Hurwitz zeta for real arguments.

Both are evaluated in double precision without external dependencies:
Gamma by the Lanczos approximation (g=7, 9 terms) with reflection below 1/2,
zeta(s, a) by Euler-Maclaurin summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "SpecFunResult",
    "gamma_fn",
    "log_gamma",
    "hurwitz_zeta",
    "hurwitz_zeta_result",
    "BERNOULLI_EVEN",
]

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# B_2, B_4, ..., B_16
BERNOULLI_EVEN = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)


@dataclass(frozen=True)
class SpecFunResult:
    value: float
    est_abs_error: float


def _lanczos_sum(x: float) -> float:
    # x is the shifted argument (Gamma(x + 1))
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (x + k)
    return acc


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (xm + 0.5) * math.log(t) - t + math.log(_lanczos_sum(xm))


def gamma_fn(x: float) -> float:
    """Gamma(x) for x > 0, relative error around 1e-14 on [1e-3, 50]."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma_fn requires x > 0, got {x!r}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    if x == math.floor(x) and x <= 23.0:
        return float(math.factorial(int(x) - 1))
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * math.exp((xm + 0.5) * math.log(t) - t) * _lanczos_sum(xm)


def hurwitz_zeta_result(s: float, a: float) -> SpecFunResult:
    """zeta(s, a) = sum_{n>=0} (n + a)^-s with an error estimate.

    The first N = 10 + ceil(a) terms (capped at 40) are summed directly; the
    tail is the Euler-Maclaurin integral, half-term and Bernoulli corrections
    through B_16. The estimate is the magnitude of the last correction used.
    """
    s = float(s)
    a = float(a)
    if not s > 1.0:
        raise DomainError(f"hurwitz_zeta requires s > 1, got s={s!r}")
    if not a > 0.0:
        raise DomainError(f"hurwitz_zeta requires a > 0, got a={a!r}")

    n_direct = 10 + min(int(math.ceil(a)), 30)
    direct = math.fsum((n + a) ** (-s) for n in range(n_direct))

    x = n_direct + a
    tail = x ** (1.0 - s) / (s - 1.0) + 0.5 * x ** (-s)
    # rising factorial s (s+1) ... (s+2k-2) times x^(-s-2k+1)
    rising = s
    power = x ** (-s - 1.0)
    inv_x2 = 1.0 / (x * x)
    fact = 2.0
    last = 0.0
    for k, b2k in enumerate(BERNOULLI_EVEN, start=1):
        last = b2k / fact * rising * power
        tail += last
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        power *= inv_x2
        fact *= (2 * k + 1) * (2 * k + 2)
    value = direct + tail
    err = abs(last) + 4.0 * math.ulp(value) * n_direct
    return SpecFunResult(value=value, est_abs_error=err)


def hurwitz_zeta(s: float, a: float) -> float:
    """Generalised Riemann zeta function for real s > 1 and a > 0."""
    return hurwitz_zeta_result(s, a).value
