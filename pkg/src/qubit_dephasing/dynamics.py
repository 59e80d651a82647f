"""Coherence dynamics: correlation term, phase shift and sampled trajectories.

With A = (N1 - i N2) / D the correlation factor is

    exp(i chi - gamma_cor) = cos Phi + i A sin Phi,

so gamma_cor and chi are the log-modulus and argument of that number.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .bath import BathParams, QubitParams, decoherence_fn, phi, small_t_moments
from .errors import DegenerateSchemeError, DomainError
from .measurement import (
    MeasurementScheme,
    default_scheme,
    initial_observables,
    is_gram_diagonal,
    nnd_coefficients,
)

__all__ = [
    "Trajectory",
    "gamma_cor_diagonal",
    "gamma_cor_general",
    "phase_shift",
    "sigma_plus",
    "coherence_trajectory",
    "refined_grid",
    "LN_ARG_FLOOR",
]

log = logging.getLogger(__name__)

LN_ARG_FLOOR = 1e-14
MAX_GRID_POINTS = 400_000


def _half_beta_omega(bath: BathParams, qubit: QubitParams) -> float:
    if bath.temperature <= 0:
        raise DomainError("correlation terms need temperature > 0")
    return 0.5 * qubit.omega0 / bath.temperature


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def gamma_cor_diagonal(t, bath: BathParams, qubit: QubitParams):
    """-1/2 ln[1 + sin^2 Phi / sinh^2(beta omega0 / 2)]; lies in [-ln coth(beta omega0/2), 0]."""
    x = _half_beta_omega(bath, qubit)
    sin_phi = np.sin(np.asarray(phi(t, bath)))
    val = -0.5 * np.log1p((sin_phi / math.sinh(x)) ** 2)
    return _out(val, t)


def _ln_argument(p, coeffs):
    # N1/D = Re A and N2/D = -Im A; A stays accurate when D is small
    a = coeffs.a_ratio
    sin_p = np.sin(p)
    return 1.0 + (abs(a) ** 2 - 1.0) * sin_p**2 - a.imag * np.sin(2.0 * p)


def _chi(p, coeffs):
    a = coeffs.a_ratio
    return np.arctan2(a.real * np.sin(p), np.cos(p) - a.imag * np.sin(p))


def gamma_cor_general(t, scheme: MeasurementScheme, bath: BathParams, qubit: QubitParams):
    coeffs = nnd_coefficients(scheme, qubit, bath.temperature)
    tt = np.asarray(t, dtype=float)
    arg = np.asarray(_ln_argument(np.asarray(phi(tt, bath)), coeffs))
    bad = arg <= LN_ARG_FLOOR
    if np.any(bad):
        t_bad = float(np.atleast_1d(tt)[np.flatnonzero(np.atleast_1d(bad))[0]])
        log.warning("ln argument %.3e <= %g at t=%r for scheme %s",
                    float(np.min(arg)), LN_ARG_FLOOR, t_bad, scheme.as_dict())
        raise DegenerateSchemeError(
            f"correlation factor vanishes at t={t_bad!r}; the closed form breaks down"
        )
    return _out(-0.5 * np.log(arg), t)


def phase_shift(t, scheme: MeasurementScheme, bath: BathParams, qubit: QubitParams,
                unwrap: bool = False):
    """chi(t) = arctan[N1 sin Phi / (D cos Phi + N2 sin Phi)].

    The principal value lies in (-pi/2, pi/2].  With ``unwrap=True`` the
    branch crossings are accumulated so chi is continuous in t.
    """
    coeffs = nnd_coefficients(scheme, qubit, bath.temperature)
    p = np.asarray(phi(t, bath))
    if unwrap:
        k = np.round(p / math.pi)
        r = p - k * math.pi
        val = _chi(r, coeffs) + k * math.pi * np.sign(coeffs.a_ratio.real)
    else:
        val = _chi(p, coeffs)
        val = np.where(val > 0.5 * math.pi, val - math.pi, val)
        val = np.where(val <= -0.5 * math.pi, val + math.pi, val)
    return _out(val, t)


def sigma_plus(t, scheme: MeasurementScheme, bath: BathParams, qubit: QubitParams):
    """<sigma_+(t)> = <sigma_+> e^{i(omega0 t + chi)} e^{-gamma_tot}."""
    tt = np.asarray(t, dtype=float)
    s0 = initial_observables(scheme, qubit, bath.temperature).sigma_plus_0
    g_tot = np.asarray(decoherence_fn(tt, bath)) + np.asarray(
        gamma_cor_general(tt, scheme, bath, qubit)
    )
    # unwrapped chi keeps the sign of the correlation factor
    chi = np.asarray(phase_shift(tt, scheme, bath, qubit, unwrap=True))
    val = s0 * np.exp(1j * (qubit.omega0 * tt + chi) - g_tot)
    return complex(val) if np.ndim(t) == 0 else val


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    gamma: np.ndarray
    gamma_cor: np.ndarray
    gamma_tot: np.ndarray
    chi: np.ndarray
    abs_sigma: np.ndarray

    COLUMNS = ("t", "gamma", "gamma_cor", "gamma_tot", "chi", "abs_sigma")

    def __len__(self):
        return len(self.times)

    def rows(self):
        cols = [self.times, self.gamma, self.gamma_cor, self.gamma_tot, self.chi, self.abs_sigma]
        return [tuple(float(c[i]) for c in cols) for i in range(len(self.times))]


def refined_grid(t_max: float, samples: int, bath: BathParams) -> np.ndarray:
    """Uniform grid on [0, t_max] with step at most a twentieth of the Phi period 2 pi / m1."""
    if not (math.isfinite(t_max) and t_max > 0):
        raise DomainError(f"t_max must be > 0, got {t_max!r}")
    if samples < 2:
        raise DomainError(f"samples must be >= 2, got {samples!r}")
    n = int(samples)
    _, m1 = small_t_moments(bath)
    if m1 > 0:
        max_step = math.pi / (10.0 * m1)
        n = max(n, int(math.ceil(t_max / max_step)) + 1)
    n = min(n, MAX_GRID_POINTS)
    return np.linspace(0.0, t_max, n)


def coherence_trajectory(t_grid, scheme: MeasurementScheme | None, bath: BathParams,
                         qubit: QubitParams, unwrap: bool = False) -> Trajectory:
    tt = np.asarray(t_grid, dtype=float)
    if tt.ndim != 1 or tt.size == 0:
        raise DomainError("t_grid must be a non-empty 1-d sequence")
    if tt.size > 1 and np.any(np.diff(tt) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    scheme = default_scheme() if scheme is None else scheme

    gamma = np.asarray(decoherence_fn(tt, bath), dtype=float)
    if is_gram_diagonal(scheme):
        # still validates D for the scheme
        nnd_coefficients(scheme, qubit, bath.temperature)
        g_cor = np.asarray(gamma_cor_diagonal(tt, bath, qubit), dtype=float)
    else:
        g_cor = np.asarray(gamma_cor_general(tt, scheme, bath, qubit), dtype=float)
    chi = np.asarray(phase_shift(tt, scheme, bath, qubit, unwrap=unwrap), dtype=float)
    g_tot = gamma + g_cor
    s0 = abs(initial_observables(scheme, qubit, bath.temperature).sigma_plus_0)
    return Trajectory(
        times=tt, gamma=gamma, gamma_cor=g_cor, gamma_tot=g_tot, chi=chi,
        abs_sigma=s0 * np.exp(-g_tot),
    )
