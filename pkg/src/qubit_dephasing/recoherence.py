"""Recoherence observables extracted from gamma_tot(t), and the critical coupling.

A negative branch of gamma_tot needs gamma(t) < |gamma_cor(t)|.  The largest
possible |gamma_cor| is fixed by the scheme (ln coth(beta omega0/2) for a
diagonal Gram operator), and for s > 1 it also shrinks with the envelope of
Phi.  ``analyze`` scans gamma_tot until a lower bound on gamma passes that
ceiling; past that point no new negative branch can open.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .bath import BathParams, QubitParams, decoherence_fn, phi, phi_envelope, small_t_moments
from .dynamics import gamma_cor_diagonal, gamma_cor_general
from .errors import ConvergenceError, DomainError
from .measurement import MeasurementScheme, default_scheme, is_gram_diagonal, nnd_coefficients
from .specfun import gamma_fn, hurwitz_zeta

__all__ = [
    "RecoherenceReport",
    "ThresholdGrid",
    "HorizonWarning",
    "lambda_min",
    "lambda_min_grid",
    "lambda_min_bisect",
    "small_t_curvature",
    "correlation_ceiling",
    "analyze",
    "T_CAP",
]

T_CAP = 1e4  # scan cap in units of 1/omega_c
ROOT_XTOL = 1e-12  # tighter than needed; gamma_tot can be steep at crossings
_CHUNK = 2048
_MAX_POINTS = 4_000_000


class HorizonWarning(RuntimeWarning):
    """The scan hit its time cap before negative branches were ruled out."""


@dataclass(frozen=True)
class RecoherenceReport:
    t_star: float | None
    t_extr: float | None
    gamma_extr: float | None
    intervals: tuple[tuple[float, float], ...]
    t_star_tot: float
    rde_count: int
    truncated: bool = False
    first_t_extr: float | None = None
    first_gamma_extr: float | None = None
    t_horizon: float = 0.0
    t_star_def: str = "crossing"

    def to_json(self) -> dict:
        return {
            "t_star": self.t_star,
            "t_extr": self.t_extr,
            "gamma_extr": self.gamma_extr,
            "intervals": [list(iv) for iv in self.intervals],
            "t_star_tot": self.t_star_tot,
            "rde_count": self.rde_count,
            "truncated": self.truncated,
            "first_t_extr": self.first_t_extr,
            "first_gamma_extr": self.first_gamma_extr,
        }


@dataclass(frozen=True)
class ThresholdGrid:
    s_values: tuple[float, ...]
    t_values: tuple[float, ...]
    lambda_min: np.ndarray = field(repr=False)

    def rows(self):
        for i, s in enumerate(self.s_values):
            for j, temp in enumerate(self.t_values):
                yield s, temp, float(self.lambda_min[i, j])


# --- threshold ------------------------------------------------------------------

def _check_s_t(s: float, temperature: float, omega_c: float = 1.0):
    if not (math.isfinite(s) and s > 0):
        raise DomainError(f"ohmicity index must be > 0, got {s!r}")
    if not (math.isfinite(temperature) and temperature > 0):
        raise DomainError(f"temperature must be > 0, got {temperature!r}")
    if not (math.isfinite(omega_c) and omega_c > 0):
        raise DomainError(f"omega_c must be > 0, got {omega_c!r}")


def lambda_min(s: float, temperature: float, qubit: QubitParams | None = None,
               omega_c: float = 1.0) -> float:
    """Coupling at which the t^2 coefficient of gamma_tot changes sign.

    sinh^2(beta w0/2) Gamma(s+1)/Gamma(s)^2 [1 + 2 a^(s+1) zeta(s+1, 1+a)], a = T/omega_c.
    """
    qubit = qubit or QubitParams()
    _check_s_t(s, temperature, omega_c)
    a = temperature / omega_c
    sh = math.sinh(0.5 * qubit.omega0 / temperature)
    bracket = 1.0 + 2.0 * a ** (s + 1.0) * hurwitz_zeta(s + 1.0, 1.0 + a)
    return sh * sh * gamma_fn(s + 1.0) / gamma_fn(s) ** 2 * bracket


def lambda_min_grid(s_values, t_values, qubit: QubitParams | None = None,
                    omega_c: float = 1.0) -> ThresholdGrid:
    s_values = tuple(float(x) for x in s_values)
    t_values = tuple(float(x) for x in t_values)
    for s in s_values:
        for temp in t_values:
            _check_s_t(s, temp, omega_c)
    mat = np.array([[lambda_min(s, temp, qubit, omega_c) for temp in t_values] for s in s_values])
    return ThresholdGrid(s_values=s_values, t_values=t_values, lambda_min=mat)


def small_t_curvature(bath: BathParams, qubit: QubitParams, method: str = "closed") -> float:
    """c2 in gamma_tot(t) = c2 t^2 + O(t^4) for a diagonal Gram scheme."""
    if bath.temperature <= 0:
        raise DomainError("small_t_curvature needs temperature > 0")
    m_coth, m1 = small_t_moments(bath, method=method)
    sh = math.sinh(0.5 * qubit.omega0 / bath.temperature)
    return 0.5 * (m_coth - (m1 / sh) ** 2)


def lambda_min_bisect(s: float, temperature: float, qubit: QubitParams | None = None,
                      omega_c: float = 1.0, rel_width: float = 1e-6) -> float:
    """Locate the sign flip of the quadrature-based curvature in lambda by bisection."""
    qubit = qubit or QubitParams()
    _check_s_t(s, temperature, omega_c)
    # the moments are linear in lambda, so integrate once at lambda = 1
    base = BathParams(1.0, s, temperature, omega_c)
    m_coth, m1 = small_t_moments(base, method="quad")
    sh2 = math.sinh(0.5 * qubit.omega0 / temperature) ** 2

    def sign_fn(log_lam):
        lam = math.exp(log_lam)
        return 0.5 * (lam * m_coth - (lam * m1) ** 2 / sh2)

    lo, hi = math.log(1e-8), math.log(1e3)
    if sign_fn(lo) * sign_fn(hi) > 0:
        raise ConvergenceError(
            f"no curvature sign change for lambda in [1e-8, 1e3] at s={s}, T={temperature}"
        )
    root = optimize.bisect(sign_fn, lo, hi, xtol=0.5 * rel_width, rtol=4 * np.finfo(float).eps,
                           maxiter=200)
    return math.exp(root)


# --- negative-branch scan -----------------------------------------------------------

def correlation_ceiling(scheme: MeasurementScheme, qubit: QubitParams,
                        temperature: float) -> tuple[float, float, float]:
    """(sup |gamma_cor|, ||A|^2 - 1|, |Im A|) for the scheme.

    exp(-2 gamma_cor) = (cos, sin) M (cos, sin)^T with M = [[1, -Im A], [-Im A, |A|^2]].
    """
    a = nnd_coefficients(scheme, qubit, temperature).a_ratio
    if is_gram_diagonal(scheme):
        x = 0.5 * qubit.omega0 / temperature
        a = complex(1.0 / math.tanh(x), 0.0)
    m = np.array([[1.0, -a.imag], [-a.imag, abs(a) ** 2]])
    lam_max = float(np.linalg.eigvalsh(m)[-1])
    return 0.5 * math.log(max(lam_max, 1.0)), abs(abs(a) ** 2 - 1.0), abs(a.imag)


def _gamma_tot_fn(bath, qubit, scheme):
    if is_gram_diagonal(scheme):
        nnd_coefficients(scheme, qubit, bath.temperature)

        def f(t):
            return np.asarray(decoherence_fn(t, bath)) + np.asarray(gamma_cor_diagonal(t, bath, qubit))
    else:
        def f(t):
            return np.asarray(decoherence_fn(t, bath)) + np.asarray(
                gamma_cor_general(t, scheme, bath, qubit))
    return f


def _gamma_lower(t, bath: BathParams):
    """Lower bound on gamma(t') for every t' >= t."""
    if bath.s <= 2.0:
        return np.asarray(decoherence_fn(t, bath))  # monotone for s <= 2
    eps = bath.s - 1.0
    return bath.lam * gamma_fn(eps) * (1.0 - (1.0 + (bath.omega_c * np.asarray(t)) ** 2) ** (-0.5 * eps))


def _envelope(t, bath, ceiling):
    top, spread, imag = ceiling
    pe = np.asarray(phi_envelope(t, bath))
    if bath.s <= 1.0:
        return np.full(np.shape(t), top)
    bound = 0.5 * np.log1p(spread * np.minimum(1.0, pe * pe) + 2.0 * imag * np.minimum(1.0, pe))
    return np.minimum(top, bound)


def _bisect_many(fun, a, b, fa, xtol):
    """Simultaneous bisection of sign changes fun(a) * fun(b) < 0 (arrays of brackets)."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    neg_a = np.asarray(fa) < 0
    for _ in range(200):
        if np.all(b - a <= xtol):
            break
        m = 0.5 * (a + b)
        if np.all((m == a) | (m == b)):
            break  # brackets down to adjacent floats
        fm = np.asarray(fun(m))
        hit = fm == 0
        same = (fm < 0) == neg_a
        a = np.where(same & ~hit, m, a)
        b = np.where(same & ~hit, b, m)
        a = np.where(hit, m, a)
    return 0.5 * (a + b)


_INV_GOLD = 0.5 * (math.sqrt(5.0) - 1.0)


def _golden_many(f, lo, hi, xtol=1e-10, iters=80):
    """Golden-section minimisation on each [lo_i, hi_i] at once."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    x1 = hi - _INV_GOLD * (hi - lo)
    x2 = lo + _INV_GOLD * (hi - lo)
    f1, f2 = np.asarray(f(x1)), np.asarray(f(x2))
    for _ in range(iters):
        if np.all(hi - lo <= xtol):
            break
        left = f1 < f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        new_x = np.where(left, hi - _INV_GOLD * (hi - lo), lo + _INV_GOLD * (hi - lo))
        new_f = np.asarray(f(new_x))
        x2, f2, x1, f1 = (
            np.where(left, x1, new_x), np.where(left, f1, new_f),
            np.where(left, new_x, x2), np.where(left, new_f, f2),
        )
    return np.where(f1 < f2, x1, x2), np.minimum(f1, f2)


def _scan_times(bath: BathParams):
    _, m1 = small_t_moments(bath)
    step = math.pi / (40.0 * m1) if m1 > 0 else 0.05
    step = min(step, 0.05 / bath.omega_c)
    # log-spaced points ahead of the first uniform step catch very short branches
    head = np.geomspace(step * 1e-6, step, 25)[:-1]
    return step, np.concatenate(([0.0], head))


def analyze(bath: BathParams, qubit: QubitParams, scheme: MeasurementScheme | None = None,
            t_star_def: str = "crossing") -> RecoherenceReport:
    if t_star_def not in ("crossing", "extremum"):
        raise DomainError(f"t_star_def must be 'crossing' or 'extremum', got {t_star_def!r}")
    if bath.temperature <= 0:
        raise DomainError("analyze needs temperature > 0")
    scheme = default_scheme() if scheme is None else scheme
    f = _gamma_tot_fn(bath, qubit, scheme)
    ceiling = correlation_ceiling(scheme, qubit, bath.temperature)
    t_cap = T_CAP / bath.omega_c

    step, head = _scan_times(bath)
    times = [head]
    values = [f(head)]
    t_last = head[-1]
    horizon = None
    n_total = head.size
    while horizon is None and t_last < t_cap and n_total < _MAX_POINTS:
        chunk = t_last + step * np.arange(1, _CHUNK + 1)
        chunk = chunk[chunk <= t_cap] if chunk[-1] > t_cap else chunk
        if chunk.size == 0:
            break
        vals = f(chunk)
        done = np.flatnonzero(_gamma_lower(chunk, bath) >= _envelope(chunk, bath, ceiling))
        if done.size:
            cut = done[0] + 1
            chunk, vals = chunk[:cut], vals[:cut]
            horizon = float(chunk[-1])
        times.append(chunk)
        values.append(vals)
        t_last = float(chunk[-1])
        n_total += chunk.size

    tt = np.concatenate(times)
    gv = np.concatenate(values)
    truncated = horizon is None
    if truncated:
        warnings.warn(
            f"no horizon before t={t_last:.6g}: later negative branches are not ruled out",
            HorizonWarning, stacklevel=2,
        )

    tt, gv = _insert_phase_nodes(f, tt, gv, bath)
    intervals, extrema = _negative_intervals(f, tt, gv)
    if intervals and truncated and gv[-1] < 0:
        intervals[-1] = (intervals[-1][0], float(tt[-1]))

    if not intervals:
        return RecoherenceReport(
            t_star=None, t_extr=None, gamma_extr=None, intervals=(), t_star_tot=0.0,
            rde_count=0, truncated=truncated, t_horizon=t_last, t_star_def=t_star_def,
        )
    k_glob = int(np.argmin([e[1] for e in extrema]))
    t_star = intervals[0][1] if t_star_def == "crossing" else extrema[0][0]
    return RecoherenceReport(
        t_star=t_star,
        t_extr=extrema[k_glob][0],
        gamma_extr=extrema[k_glob][1],
        intervals=tuple(intervals),
        t_star_tot=float(math.fsum(b - a for a, b in intervals)),
        rde_count=len(intervals),
        truncated=truncated,
        first_t_extr=extrema[0][0],
        first_gamma_extr=extrema[0][1],
        t_horizon=t_last,
        t_star_def=t_star_def,
    )


def _insert_phase_nodes(f, tt, gv, bath):
    """Add the times where Phi crosses a multiple of pi.

    gamma_cor vanishes there for every scheme, so gamma_tot = gamma >= 0; the
    positive windows around these nodes can be far narrower than the scan step.
    """
    ph = np.asarray(phi(tt, bath))
    k = np.floor(ph / math.pi)
    idx = np.flatnonzero(k[1:] != k[:-1])
    if idx.size == 0:
        return tt, gv
    brackets = []
    for i in idx:
        lo, hi = sorted((k[i], k[i + 1]))
        brackets.extend((i, m * math.pi) for m in range(int(lo) + 1, int(hi) + 1))
    lo_i = np.array([i for i, _ in brackets])
    target = np.array([m for _, m in brackets])
    fa = ph[lo_i] - target
    nodes = _bisect_many(lambda x: np.asarray(phi(x, bath)) - target,
                         tt[lo_i], tt[lo_i + 1], fa, xtol=0.0)
    nodes = np.setdiff1d(np.asarray(nodes, dtype=float), tt)
    nodes = nodes[nodes > 0]
    if nodes.size == 0:
        return tt, gv
    t_all = np.concatenate((tt, nodes))
    g_all = np.concatenate((gv, f(nodes)))
    order = np.argsort(t_all, kind="stable")
    return t_all[order], g_all[order]


def _negative_intervals(f, tt, gv):
    neg = gv < 0.0
    edges = np.diff(neg.astype(np.int8))
    starts = list(np.flatnonzero(edges == 1) + 1)
    ends = list(np.flatnonzero(edges == -1))
    if neg.size and neg[0]:
        starts.insert(0, 0)
    if neg.size and neg[-1]:
        ends.append(neg.size - 1)
    if not starts:
        return [], []
    starts = np.array(starts)
    ends = np.array(ends)

    # crossings: left edge between starts-1 and starts, right edge between ends and ends+1
    open_left = (starts > 0) & (gv[np.maximum(starts - 1, 0)] != 0)
    t_start = np.where(starts > 0, tt[np.maximum(starts - 1, 0)], tt[0])
    has_right = ends + 1 < tt.size
    right = np.minimum(ends + 1, tt.size - 1)
    open_right = has_right & (gv[right] != 0)
    t_end = np.where(has_right, tt[right], tt[ends])
    # both kinds of edge polished in one batch
    li, ri = np.flatnonzero(open_left), np.flatnonzero(open_right)
    if li.size or ri.size:
        a = np.concatenate((tt[starts[li] - 1], tt[ends[ri]]))
        b = np.concatenate((tt[starts[li]], tt[ends[ri] + 1]))
        fa = np.concatenate((gv[starts[li] - 1], gv[ends[ri]]))
        roots = _bisect_many(f, a, b, fa, ROOT_XTOL)
        t_start[li] = roots[:li.size]
        t_end[ri] = roots[li.size:]

    # golden section around the sampled minimum of each branch
    k_min = np.array([i + int(np.argmin(gv[i:j + 1])) for i, j in zip(starts, ends)])
    lo = np.maximum(np.where(k_min - 1 >= starts, tt[np.maximum(k_min - 1, 0)], t_start), t_start)
    hi = np.minimum(np.where(k_min + 1 <= ends, tt[np.minimum(k_min + 1, tt.size - 1)], t_end), t_end)
    x_g, f_g = _golden_many(f, lo, hi)
    better = f_g < gv[k_min]
    t_ex = np.where(better, x_g, tt[k_min])
    g_ex = np.where(better, f_g, gv[k_min])

    intervals = [(float(a), float(b)) for a, b in zip(t_start, t_end)]
    extrema = [(float(a), float(b)) for a, b in zip(t_ex, g_ex)]
    return intervals, extrema
