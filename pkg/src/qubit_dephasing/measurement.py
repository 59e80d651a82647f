"""Two-outcome non-selective measurements on a qubit.

Column vectors are ordered (|1>, |0>), so |1> = (1, 0)^T sits on top and
sigma_3 = diag(1, -1).  A state with Euler angles (theta, phi) is

    |a> = (e^{i phi/2} sin(theta/2), e^{-i phi/2} cos(theta/2))^T

and the scheme Omega_1 = |b1><a|, Omega_2 = |b2><-a| prepares the initial
state from the thermal qubit state.

The closed forms for N1, N2, D and the initial observables are written in
angles measured from |1> on the Bloch sphere.  In the column convention above
a state at (theta, phi) sits at Bloch angles (pi - theta, -phi), so every
closed form is evaluated at the mapped angles.  The test-suite checks each
closed form against explicit matrix elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import QubitParams
from .errors import DegenerateSchemeError, DomainError

__all__ = [
    "EulerAngles",
    "PureState",
    "MeasurementScheme",
    "CorrelationCoefficients",
    "SchemeObservables",
    "SIGMA_PLUS",
    "SIGMA_3",
    "state_from_angles",
    "orthogonal_state",
    "omega_operators",
    "effects",
    "gram_operator",
    "is_gram_diagonal",
    "nnd_coefficients",
    "initial_observables",
    "verify_udiag_relation",
    "scheme_i",
    "scheme_ii",
    "scheme_b12",
    "default_scheme",
    "angle_errors",
]

TWO_PI = 2.0 * math.pi
D_FLOOR = 1e-12

SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_3 = np.diag([1.0, -1.0]).astype(complex)
_UP, _DOWN = 0, 1  # row index of |1> and |0>


def angle_errors(theta: float, phi: float, label: str = "") -> list[str]:
    """Human-readable problems with an angle pair; empty when valid."""
    pre = f"{label}: " if label else ""
    out = []
    if not math.isfinite(theta):
        out.append(f"{pre}theta must be finite, got {theta!r}")
    elif not 0.0 <= theta <= math.pi:
        out.append(f"{pre}theta must lie in [0, pi], got {theta!r}")
    if not math.isfinite(phi):
        out.append(f"{pre}phi must be finite, got {phi!r}")
    return out


@dataclass(frozen=True)
class EulerAngles:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        problems = angle_errors(self.theta, self.phi)
        if problems:
            raise DomainError("; ".join(problems))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)


@dataclass(frozen=True)
class PureState:
    amp_up: complex
    amp_down: complex

    def __post_init__(self):
        norm = abs(self.amp_up) ** 2 + abs(self.amp_down) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"state is not normalised (norm^2 = {norm!r})")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp_up, self.amp_down], dtype=complex)


@dataclass(frozen=True)
class MeasurementScheme:
    a: EulerAngles
    b1: EulerAngles
    b2: EulerAngles

    @property
    def delta_phi(self) -> float:
        return self.b1.phi - self.b2.phi

    def as_dict(self) -> dict:
        return {
            "theta_a": self.a.theta, "phi_a": self.a.phi,
            "theta_1": self.b1.theta, "phi_1": self.b1.phi,
            "theta_2": self.b2.theta, "phi_2": self.b2.phi,
        }


@dataclass(frozen=True)
class CorrelationCoefficients:
    """N1, N2, D and the ratio A = (N1 - i N2) / D.

    A is real (and equal to coth(beta omega0 / 2)) only for diagonal Gram
    operators, so it is stored as a complex number.
    """

    n1: float
    n2: float
    d: float
    a_ratio: complex


@dataclass(frozen=True)
class SchemeObservables:
    sigma_plus_0: complex
    sigma3_0: float
    probabilities: tuple[float, float]


# --- states and operators -------------------------------------------------------

def state_from_angles(angles: EulerAngles) -> PureState:
    h = 0.5 * angles.theta
    return PureState(
        amp_up=complex(np.exp(0.5j * angles.phi) * math.sin(h)),
        amp_down=complex(np.exp(-0.5j * angles.phi) * math.cos(h)),
    )


def orthogonal_state(angles: EulerAngles) -> PureState:
    """|-a>, with the phase convention i e^{i phi/2} cos, -i e^{-i phi/2} sin."""
    h = 0.5 * angles.theta
    return PureState(
        amp_up=complex(1j * np.exp(0.5j * angles.phi) * math.cos(h)),
        amp_down=complex(-1j * np.exp(-0.5j * angles.phi) * math.sin(h)),
    )


def omega_operators(scheme: MeasurementScheme) -> tuple[np.ndarray, np.ndarray]:
    a = state_from_angles(scheme.a).vector
    minus_a = orthogonal_state(scheme.a).vector
    b1 = state_from_angles(scheme.b1).vector
    b2 = state_from_angles(scheme.b2).vector
    return np.outer(b1, a.conj()), np.outer(b2, minus_a.conj())


def effects(scheme: MeasurementScheme) -> tuple[np.ndarray, np.ndarray]:
    return tuple(om.conj().T @ om for om in omega_operators(scheme))


def gram_operator(scheme: MeasurementScheme) -> np.ndarray:
    """G = sum_m Omega_m Omega_m^dagger = |b1><b1| + |b2><b2|."""
    return sum(om @ om.conj().T for om in omega_operators(scheme))


def is_gram_diagonal(scheme: MeasurementScheme, tol: float = 1e-10) -> bool:
    if not tol > 0:
        raise DomainError("tol must be > 0")
    return bool(abs(gram_operator(scheme)[0, 1]) <= tol)


# --- closed forms -----------------------------------------------------------------

def _bloch(scheme: MeasurementScheme):
    # angles as measured from |1>; see module docstring
    return (
        math.pi - scheme.a.theta,
        math.pi - scheme.b1.theta,
        math.pi - scheme.b2.theta,
        -scheme.b1.phi,
        -scheme.delta_phi,
    )


def _beta(temperature: float) -> float:
    if not (math.isfinite(temperature) and temperature > 0):
        raise DomainError(f"temperature must be > 0, got {temperature!r}")
    return 1.0 / temperature


def nnd_coefficients(
    scheme: MeasurementScheme, qubit: QubitParams, temperature: float
) -> CorrelationCoefficients:
    bw = _beta(temperature) * qubit.omega0
    ta, t1, t2, _, dphi = _bloch(scheme)
    s4 = math.sin(0.5 * ta) ** 4
    c4 = math.cos(0.5 * ta) ** 4
    sa2 = math.sin(ta) ** 2
    ep, em = math.exp(bw), math.exp(-bw)
    st1, st2 = math.sin(t1), math.sin(t2)
    cross = math.cos(dphi) * st1 * st2

    n1 = (ep * s4 - em * c4) * st1**2 + (ep * c4 - em * s4) * st2**2 + math.sinh(bw) * sa2 * cross
    n2 = 2.0 * math.cos(ta) * math.sin(dphi) * st1 * st2
    d = (
        (0.5 * sa2 + ep * s4 + em * c4) * st1**2
        + (0.5 * sa2 + ep * c4 + em * s4) * st2**2
        + (math.cosh(bw) * sa2 + 2.0 * (s4 + c4)) * cross
    )
    if d <= D_FLOOR:
        raise DegenerateSchemeError(
            f"D = {d:.3e} <= {D_FLOOR:g}: the scheme leaves no initial coherence"
        )
    s0, s1 = _sigma_plus_elements(scheme)
    hp, hm = math.exp(0.5 * bw), math.exp(-0.5 * bw)
    a_ratio = (s0 * hp - s1 * hm) / (s0 * hp + s1 * hm)
    return CorrelationCoefficients(n1=n1, n2=n2, d=d, a_ratio=complex(a_ratio))


def _sigma_plus_elements(scheme: MeasurementScheme) -> tuple[complex, complex]:
    """(sum_m <0|Om^+ s+ Om|0>, sum_m <1|Om^+ s+ Om|1>)."""
    acc = sum(om.conj().T @ SIGMA_PLUS @ om for om in omega_operators(scheme))
    return complex(acc[_DOWN, _DOWN]), complex(acc[_UP, _UP])


def initial_observables(
    scheme: MeasurementScheme, qubit: QubitParams, temperature: float
) -> SchemeObservables:
    half = 0.5 * _beta(temperature) * qubit.omega0
    ta, t1, t2, phi1, dphi = _bloch(scheme)
    s2 = math.sin(0.5 * ta) ** 2
    c2 = math.cos(0.5 * ta) ** 2
    hp, hm = math.exp(half), math.exp(-half)
    w1 = hp * s2 + hm * c2
    w2 = hp * c2 + hm * s2
    norm = 2.0 * math.cosh(half)

    sp = np.exp(1j * phi1) / (2.0 * norm) * (
        math.sin(t1) * w1 + np.exp(-1j * dphi) * math.sin(t2) * w2
    )
    s3 = (math.cos(t1) * w1 + math.cos(t2) * w2) / norm

    # outcome weights from the thermal populations p_1 ~ e^{-half}, p_0 ~ e^{half}
    probs = []
    for f in effects(scheme):
        probs.append(float((f[_DOWN, _DOWN].real * hp + f[_UP, _UP].real * hm) / norm))
    total = probs[0] + probs[1]
    return SchemeObservables(
        sigma_plus_0=complex(sp),
        sigma3_0=float(s3),
        probabilities=(probs[0] / total, probs[1] / total),
    )


# --- unitary construction of diagonal-Gram schemes ------------------------------

def _is_unitary(u: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(2))) <= tol)


def verify_udiag_relation(u1, u2, psi1: PureState, g, tol: float = 1e-10) -> bool:
    """Check U1 P U1^+ - U2 P U2^+ = G - I with P = |psi1><psi1|."""
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    g = np.asarray(g, dtype=complex)
    for name, u in (("u1", u1), ("u2", u2)):
        if u.shape != (2, 2) or not _is_unitary(u, tol):
            raise DomainError(f"{name} is not a 2x2 unitary within tol={tol:g}")
    p = np.outer(psi1.vector, psi1.vector.conj())
    lhs = u1 @ p @ u1.conj().T - u2 @ p @ u2.conj().T
    return bool(np.max(np.abs(lhs - (g - np.eye(2)))) <= tol)


# --- named schemes ------------------------------------------------------------------

def _opposite(angles: EulerAngles) -> EulerAngles:
    return EulerAngles(math.pi - angles.theta, angles.phi + math.pi)


def scheme_i(a: EulerAngles) -> MeasurementScheme:
    """b1 = a, b2 = -a: the device leaves the basis states undisturbed."""
    return MeasurementScheme(a=a, b1=a, b2=_opposite(a))


def scheme_ii(a: EulerAngles, b: EulerAngles) -> MeasurementScheme:
    """b1 = b, b2 = -b."""
    return MeasurementScheme(a=a, b1=b, b2=_opposite(b))


def scheme_b12(a: EulerAngles, theta: float, phi1: float = 0.0) -> MeasurementScheme:
    """b1 = c0|0> + c1|1>, b2 = i(c0|0> - c1|1>): theta_1 = theta_2, phi_1 - phi_2 = pi."""
    return MeasurementScheme(
        a=a, b1=EulerAngles(theta, phi1), b2=EulerAngles(theta, phi1 - math.pi)
    )


def default_scheme() -> MeasurementScheme:
    """Diagonal-Gram scheme used when no angles are given (G = I, |<sigma+>| = tanh/2)."""
    return scheme_b12(EulerAngles(0.0, 0.0), 0.5 * math.pi, 0.0)
