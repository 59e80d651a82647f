"""Power-law phonon bath: spectral density and the two bath integrals.

All quantities use the cutoff frequency ``omega_c`` as the unit scale. The
vacuum parts have closed forms; every closed form is written through

    f(w) = (1 - exp(-w)) / w,     z = ln(1 - i x)

so that Gamma(s - 1) never appears on its own and s = 1 needs no special
branch.  The thermal part of the decoherence function is a Bose series
sum_n over shifted cutoffs p_n = 1/omega_c + n/T, summed directly for the
first few terms and closed with Euler-Maclaurin.  A quadrature route is
available as ``method="quad"``.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import bernoulli

from .errors import ConvergenceError, DomainError
from .specfun import BERNOULLI_EVEN, gamma_fn, hurwitz_zeta

__all__ = [
    "BathParams",
    "QubitParams",
    "spectral_density",
    "phi",
    "phi_envelope",
    "decoherence_fn",
    "decoherence_vacuum",
    "decoherence_thermal",
    "small_t_moments",
]


@dataclass(frozen=True)
class BathParams:
    """Coupling ``lam``, ohmicity ``s``, temperature and cutoff (units of omega_c)."""

    lam: float
    s: float
    temperature: float = 0.0
    omega_c: float = 1.0

    def __post_init__(self):
        for name in ("lam", "s", "temperature", "omega_c"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if self.lam < 0:
            raise DomainError(f"coupling must be >= 0, got {self.lam!r}")
        if self.s <= 0:
            raise DomainError(f"ohmicity index must be > 0, got {self.s!r}")
        if self.temperature < 0:
            raise DomainError(f"temperature must be >= 0, got {self.temperature!r}")
        if self.omega_c <= 0:
            raise DomainError(f"omega_c must be > 0, got {self.omega_c!r}")

    @property
    def beta(self) -> float:
        return math.inf if self.temperature == 0 else 1.0 / self.temperature


@dataclass(frozen=True)
class QubitParams:
    omega0: float = 0.1

    def __post_init__(self):
        if not (math.isfinite(self.omega0) and self.omega0 > 0):
            raise DomainError(f"omega0 must be > 0, got {self.omega0!r}")


# --- helpers ------------------------------------------------------------------

_SERIES_TERMS = 18
_TINY_T = 1e-280
_INV_FACT = [1.0 / math.factorial(k) for k in range(_SERIES_TERMS + 2)]


def _one_minus_exp_ratio(w):
    """(1 - exp(-w)) / w for complex arrays, exact limit 1 at w = 0."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 0.5
    safe = np.where(small, 1.0, w)
    out = np.atleast_1d(-np.expm1(-safe) / safe)
    if np.any(small):
        ws = w[small]
        acc = np.full(ws.shape, _INV_FACT[_SERIES_TERMS + 1], dtype=complex)
        for k in range(_SERIES_TERMS, 0, -1):
            acc = _INV_FACT[k] - ws * acc
        out[np.atleast_1d(small)] = acc
    return out.reshape(w.shape)


def _log_one_minus_i(x):
    """ln(1 - i x) for real x, accurate for small x."""
    x = np.asarray(x, dtype=float)
    return 0.5 * np.log1p(x * x) - 1j * np.arctan(x)


def _as_times(t):
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("time arguments must be finite and >= 0")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


# --- public surface ------------------------------------------------------------

def spectral_density(omega, bath: BathParams):
    """J(omega) = lam omega_c^(1-s) omega^s exp(-omega/omega_c)."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise DomainError("spectral_density requires omega >= 0")
    val = bath.lam * bath.omega_c ** (1.0 - bath.s) * w**bath.s * np.exp(-w / bath.omega_c)
    return _out(val, omega)


def _vacuum_kernel(t, bath: BathParams):
    # z f((s-1) z) with z = ln(1 - i omega_c t)
    z = _log_one_minus_i(bath.omega_c * t)
    return z * _one_minus_exp_ratio((bath.s - 1.0) * z)


def phi(t, bath: BathParams):
    """Correlation phase Phi(t) = int J(w) sin(w t) / w^2 dw.

    Closed form lam Gamma(s-1) sin((s-1) atan(omega_c t)) / (1+omega_c^2 t^2)^((s-1)/2),
    which is lam atan(omega_c t) at s = 1.
    """
    tt = _as_times(t)
    val = -bath.lam * gamma_fn(bath.s) * np.imag(_vacuum_kernel(tt, bath))
    return _out(val, t)


def phi_envelope(t, bath: BathParams):
    """Upper bound on |Phi(t')| for all t' >= t (s > 1), else +inf."""
    tt = _as_times(t)
    if bath.s <= 1.0:
        return _out(np.full(tt.shape, np.inf), t)
    eps = bath.s - 1.0
    val = bath.lam * gamma_fn(eps) * (1.0 + (bath.omega_c * tt) ** 2) ** (-0.5 * eps)
    return _out(val, t)


def decoherence_vacuum(t, bath: BathParams):
    """T = 0 part of gamma(t): lam Gamma(s-1)[1 - cos((s-1)atan(w_c t))/(1+w_c^2 t^2)^((s-1)/2)]."""
    tt = _as_times(t)
    val = bath.lam * gamma_fn(bath.s) * np.real(_vacuum_kernel(tt, bath))
    return _out(val, t)


@functools.lru_cache(maxsize=256)
def _series_plan(s: float, temp: float, wc: float):
    """Shifted cutoffs, kernel exponents and weights for the thermal series.

    Every term has the form weight * Re[z_p f(mu z_p)] with z_p = ln(1 - i t/p);
    the plan lists (p, mu, weight) so all terms are evaluated in one batch.
    """
    eps = s - 1.0
    g_s = gamma_fn(s)
    n_split = max(1, int(math.ceil(20.0 - temp / wc)))
    p_n = 1.0 / wc + n_split / temp
    u = temp / wc + n_split  # T p_n >= 1, keeps T^(1-2k) p_n^(-mu) finite
    p_eps = p_n ** (-eps)

    cut, mus, weights = [], [], []
    for n in range(1, n_split):  # direct Bose terms
        p = 1.0 / wc + n / temp
        cut.append(p)
        mus.append(eps)
        weights.append(g_s * p ** (-eps))
    # half of the n_split term
    cut.append(p_n)
    mus.append(eps)
    weights.append(0.5 * g_s * p_eps)
    # integral from n_split to infinity; two algebraically equal forms, each
    # free of the pole the other one has (s = 2 and s = 1 respectively)
    form_a = abs(eps - 1.0) < 0.5
    if form_a:
        cut.append(p_n)
        mus.append(-(1.0 - eps))
        weights.append(gamma_fn(eps) * u * p_eps)
    # Bernoulli corrections
    for k, b2k in enumerate(BERNOULLI_EVEN, start=1):
        m = eps + 2 * k - 1
        cut.append(p_n)
        mus.append(m)
        weights.append(b2k / math.factorial(2 * k) * gamma_fn(m + 1.0) * u ** (1 - 2 * k) * p_eps)
    form_b = None if form_a else -g_s * u * p_eps / (1.0 - eps)
    return np.array(cut), np.array(mus), np.array(weights), p_n, form_b


def _thermal_series(tt, bath: BathParams):
    s = bath.s
    temp = bath.temperature
    wc = bath.omega_c
    tt = np.asarray(tt, dtype=float)
    if temp <= _TINY_T * wc or bath.lam == 0.0:
        # below this the shifted cutoffs overflow; the thermal part is far below rounding
        return np.zeros(tt.shape)

    pref = 2.0 * bath.lam * wc ** (1.0 - s)
    cut, mus, weights, p_n, form_b = _series_plan(float(s), float(temp), float(wc))
    tcol = tt.reshape(-1, 1)
    z = _log_one_minus_i(tcol / cut)
    total = np.real(z * _one_minus_exp_ratio(mus * z)) @ weights
    if form_b is not None:
        x = tcol[:, 0] / p_n
        zn = _log_one_minus_i(x)
        total += form_b * np.real(zn * (1.0 - 1j * x) * _one_minus_exp_ratio((s - 1.0) * zn))
    return pref * total.reshape(tt.shape)


def _thermal_quad_one(t: float, bath: BathParams) -> float:
    if t == 0.0 or bath.temperature == 0.0 or bath.lam == 0.0:
        return 0.0
    s = bath.s
    wc = bath.omega_c
    temp = bath.temperature
    beta = 1.0 / temp
    pref = 2.0 * bath.lam * wc ** (1.0 - s)
    w_max = wc * (40.0 + 10.0 * s)
    delta = min(1e-3 * min(wc, temp), 0.1 / t)

    # series segment [0, delta]: integrand is pref w^(s-3) (1 - cos wt) q(w),
    # q(w) = w exp(-w/wc) / (exp(beta w) - 1) expanded in powers of w
    deg = 8
    bern = bernoulli(deg)
    q_bose = np.array([bern[j] * beta**j / math.factorial(j) for j in range(deg + 1)])
    q_cut = np.array([(-1.0 / wc) ** j / math.factorial(j) for j in range(deg + 1)])
    q = temp * np.convolve(q_bose, q_cut)[: deg + 1]
    one_minus_cos = np.zeros(deg + 1)
    for j in range(1, deg // 2 + 1):
        one_minus_cos[2 * j] = (-1) ** (j + 1) * t ** (2 * j) / math.factorial(2 * j)
    poly = np.convolve(one_minus_cos, q)[: deg + 1]
    head = 0.0
    for m in range(2, deg + 1):
        expo = s - 2.0 + m
        head += poly[m] * delta**expo / expo
    head *= pref

    def h(w):
        return pref * w ** (s - 2.0) * math.exp(-w / wc - beta * w) / -math.expm1(-beta * w)

    def full(w):
        return h(w) * 2.0 * math.sin(0.5 * w * t) ** 2

    opts = dict(epsabs=1e-15, epsrel=1e-11, limit=400)
    split = min(w_max, max(delta, 20.0 * math.pi / t))
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            body = integrate.quad(full, delta, split, **opts)[0]
            if split < w_max:
                flat = integrate.quad(h, split, w_max, **opts)[0]
                osc = integrate.quad(h, split, w_max, weight="cos", wvar=t, **opts)[0]
                body += flat - osc
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"thermal quadrature failed at t={t}: {exc}") from exc
    return head + body


def decoherence_thermal(t, bath: BathParams, method: str = "series"):
    """Thermal part of gamma(t): int 2 J (1 - cos wt) / (w^2 (e^{beta w} - 1)) dw."""
    tt = _as_times(t)
    if method == "series":
        val = _thermal_series(tt, bath)
    elif method == "quad":
        val = np.vectorize(lambda x: _thermal_quad_one(float(x), bath), otypes=[float])(tt)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _out(val, t)


def decoherence_fn(t, bath: BathParams, method: str = "series"):
    """Generalised decoherence function gamma(t) (vacuum plus thermal)."""
    tt = _as_times(t)
    val = np.asarray(decoherence_vacuum(tt, bath)) + np.asarray(
        decoherence_thermal(tt, bath, method=method)
    )
    return _out(val, t)


def small_t_moments(bath: BathParams, method: str = "closed") -> tuple[float, float]:
    """(int J coth(beta w / 2) dw, int J / w dw).

    These fix the short-time behaviour gamma ~ m_coth t^2 / 2 and Phi ~ m1 t.
    ``method="quad"`` integrates numerically instead of using Gamma and zeta.
    """
    if method == "quad":
        return _moments_quad(bath)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    s = bath.s
    wc = bath.omega_c
    m1 = bath.lam * wc * gamma_fn(s)
    m_coth = bath.lam * wc**2 * gamma_fn(s + 1.0)
    if bath.temperature > 0:
        a = bath.temperature / wc
        m_coth *= 1.0 + 2.0 * a ** (s + 1.0) * hurwitz_zeta(s + 1.0, 1.0 + a)
    return m_coth, m1


def _moments_quad(bath: BathParams) -> tuple[float, float]:
    s = bath.s
    wc = bath.omega_c
    beta = bath.beta
    c = bath.lam * wc ** (1.0 - s)

    def w_coth(w):
        # w coth(beta w / 2), finite at w = 0
        if beta == math.inf:
            return w
        x = 0.5 * beta * w
        return 2.0 / beta + w * x / 3.0 if x < 1e-8 else w / math.tanh(x)

    # w^(s-1) is handled by the algebraic weight on [0, wc]
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    w_max = wc * (40.0 + 10.0 * s)

    def both(g):
        head = integrate.quad(g, 0.0, wc, weight="alg", wvar=(s - 1.0, 0.0), **opts)[0]
        tail = integrate.quad(lambda w: w ** (s - 1.0) * g(w), wc, w_max, **opts)[0]
        return head + tail

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            m_coth = both(lambda w: c * math.exp(-w / wc) * w_coth(w))
            m1 = both(lambda w: c * math.exp(-w / wc))
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"moment quadrature failed: {exc}") from exc
    return m_coth, m1
