import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubit_dephasing import (
    BathParams,
    ConvergenceError,
    DomainError,
    EulerAngles,
    MeasurementScheme,
    QubitParams,
    analyze,
    decoherence_fn,
    gamma_cor_diagonal,
    gamma_cor_general,
    lambda_min,
    lambda_min_bisect,
    lambda_min_grid,
    small_t_curvature,
)
from qubit_dephasing.recoherence import HorizonWarning, correlation_ceiling

from oracles import dense_negative_intervals, moments_quad

Q = QubitParams(0.1)


def ln_coth(temp, omega0=0.1):
    return math.log(1 / math.tanh(0.5 * omega0 / temp))


def gamma_tot(bath, scheme=None):
    if scheme is None:
        return lambda t: decoherence_fn(t, bath) + gamma_cor_diagonal(t, bath, Q)
    return lambda t: decoherence_fn(t, bath) + gamma_cor_general(t, scheme, bath, Q)


def check_report(rep, bath, f):
    if not rep.intervals:
        assert rep.t_star is None and rep.t_extr is None and rep.gamma_extr is None
        assert rep.t_star_tot == 0.0 and rep.rde_count == 0
        return
    assert rep.rde_count == len(rep.intervals)
    ends = [x for iv in rep.intervals for x in iv]
    assert all(a < b for a, b in zip(ends, ends[1:]))
    assert rep.t_star == rep.intervals[0][1]
    assert rep.t_star_tot == pytest.approx(sum(b - a for a, b in rep.intervals), rel=1e-12)
    assert any(a <= rep.t_extr <= b for a, b in rep.intervals)
    assert -ln_coth(bath.temperature) * (1 + 1e-9) <= rep.gamma_extr < 0
    assert rep.first_gamma_extr >= rep.gamma_extr
    assert rep.t_extr < rep.t_star or rep.rde_count > 1
    assert rep.first_t_extr < rep.t_star
    assert abs(f(rep.t_star)) <= 1e-8
    for a, b in rep.intervals:
        assert f(0.5 * (a + b)) < 0


def test_lambda_min_examples():
    assert lambda_min(1.0, 1.0, Q) == pytest.approx(0.0057295, rel=1e-4)
    from qubit_dephasing import hurwitz_zeta
    assert lambda_min(1.0, 1.0, Q) == pytest.approx(
        math.sinh(0.05) ** 2 * (1 + 2 * hurwitz_zeta(2.0, 2.0)), rel=1e-12)
    assert lambda_min(1.0, 1.0, QubitParams(1e-6)) < 1e-12
    vals = [lambda_min(1.0, t, Q) for t in (1.0, 2.0, 4.0)]
    assert vals[0] > vals[1] > vals[2]
    with pytest.raises(DomainError):
        lambda_min(0.0, 1.0, Q)
    with pytest.raises(DomainError):
        lambda_min(1.0, 0.0, Q)


def test_lambda_min_matches_unregularised_form():
    from qubit_dephasing import gamma_fn, hurwitz_zeta
    for s in (0.5, 1.5, 3.0):
        for temp in (0.25, 2.0):
            a = temp
            plain = math.sinh(0.05 / temp) ** 2 * gamma_fn(s + 1) / gamma_fn(s) ** 2 * (
                1 + 2 * a ** (s + 1) * (hurwitz_zeta(s + 1, a) - a ** (-(s + 1))))
            assert lambda_min(s, temp, Q) == pytest.approx(plain, rel=1e-9)


def test_lambda_min_grid():
    grid = lambda_min_grid([0.5, 2.0], [0.1, 1.0], Q)
    rows = list(grid.rows())
    assert len(rows) == 4
    assert all(v > 0 and math.isfinite(v) for _, _, v in rows)
    with pytest.raises(DomainError):
        lambda_min_grid([0.5, -1.0], [1.0], Q)


@pytest.mark.parametrize("s,temp", [(1.0, 1.0), (2.0, 0.25), (0.5, 4.0), (4.0, 0.1)])
def test_lambda_min_bisect_agrees(s, temp):
    assert lambda_min_bisect(s, temp, Q) == pytest.approx(lambda_min(s, temp, Q), rel=1e-5)


def test_lambda_min_bisect_ordering_and_bracket_failure():
    assert lambda_min_bisect(3.0, 0.25, Q) < lambda_min_bisect(2.0, 0.25, Q)
    with pytest.raises(ConvergenceError):
        lambda_min_bisect(1.0, 0.01, QubitParams(3.0))


def test_small_t_curvature():
    lm = lambda_min(1.5, 0.5, Q)
    bath = BathParams(lm, 1.5, 0.5)
    m_coth, _ = moments_quad(lm, 1.5, 0.5)
    assert abs(small_t_curvature(bath, Q)) <= 1e-9 * m_coth
    assert small_t_curvature(BathParams(0.0, 1.0, 1.0), Q) == 0.0
    bath = BathParams(1.0, 1.0, 1.0)
    c2 = small_t_curvature(bath, Q)
    assert c2 < 0
    h = 1e-3
    f = gamma_tot(bath)
    fd = f(h) / h**2  # gamma_tot(0) = 0 and gamma_tot is even in t
    assert fd == pytest.approx(c2, rel=1e-3)
    assert small_t_curvature(bath, Q, method="quad") == pytest.approx(c2, rel=1e-10)


def test_analyze_below_threshold_is_empty():
    rep = analyze(BathParams(0.001, 1.0, 1.0), Q)
    assert rep.rde_count == 0 and rep.t_star is None and rep.gamma_extr is None
    assert rep.t_star_tot == 0.0 and not rep.truncated
    t = np.linspace(0, 200, 200001)
    assert np.all(gamma_tot(BathParams(0.001, 1.0, 1.0))(t) >= 0)


def test_analyze_ohmic_examples():
    prev = 0.0
    for temp in (0.1, 1.0, 10.0):
        bath = BathParams(1.0, 1.0, temp)
        rep = analyze(bath, Q)
        check_report(rep, bath, gamma_tot(bath))
        assert rep.rde_count == 1
        assert rep.gamma_extr < prev
        prev = rep.gamma_extr


@pytest.mark.parametrize("s,temp", [(7.0, 4.0), (0.05, 0.1)])
def test_analyze_sequences_of_events(s, temp):
    bath = BathParams(1.0, s, temp)
    rep = analyze(bath, Q)
    check_report(rep, bath, gamma_tot(bath))
    assert rep.rde_count >= 2
    # advanced regimes come within 2% of the correlation bound
    assert abs(rep.gamma_extr) >= 0.98 * ln_coth(temp)


def test_analyze_extremum_definition():
    bath = BathParams(1.0, 1.0, 1.0)
    a = analyze(bath, Q)
    b = analyze(bath, Q, t_star_def="extremum")
    assert b.t_star == pytest.approx(a.first_t_extr)
    assert b.intervals == a.intervals
    with pytest.raises(DomainError):
        analyze(bath, Q, t_star_def="peak")
    with pytest.raises(DomainError):
        analyze(BathParams(1.0, 1.0, 0.0), Q)


def test_analyze_matches_dense_scan():
    rng = np.random.default_rng(29)
    done = 0
    while done < 20:
        bath = BathParams(rng.uniform(0.05, 3.0), rng.uniform(0.3, 3.0), rng.uniform(0.1, 4.0))
        rep = analyze(bath, Q)
        if rep.t_horizon > 60:
            continue
        f = gamma_tot(bath)
        want = dense_negative_intervals(f, rep.t_horizon, step=1e-4)
        assert len(want) == rep.rde_count
        for (a, b), (c, d) in zip(rep.intervals, want):
            assert abs(a - c) <= 2e-4 and abs(b - d) <= 2e-4
        check_report(rep, bath, f)
        done += 1


def test_analyze_non_diagonal_scheme():
    scheme = MeasurementScheme(EulerAngles(math.pi / 4), EulerAngles(math.pi / 2, 0),
                               EulerAngles(math.pi / 2, math.pi / 2))
    bath = BathParams(1.0, 1.0, 1.0)
    rep = analyze(bath, Q, scheme=scheme)
    f = gamma_tot(bath, scheme)
    want = dense_negative_intervals(f, rep.t_horizon, step=1e-4)
    assert len(want) == rep.rde_count
    for (a, b), (c, d) in zip(rep.intervals, want):
        assert abs(a - c) <= 2e-4 and abs(b - d) <= 2e-4
    top, _, _ = correlation_ceiling(scheme, Q, 1.0)
    if rep.gamma_extr is not None:
        assert rep.gamma_extr >= -top * (1 + 1e-9)


def test_horizon_warning_when_capped():
    # weak coupling and a tiny qubit splitting: gamma stays far below ln coth up to the cap
    bath = BathParams(1e-3, 1.0, 1e-3)
    with pytest.warns(HorizonWarning):
        rep = analyze(bath, QubitParams(1e-6))
    assert rep.truncated


def test_reports_are_deterministic():
    bath = BathParams(1.0, 7.0, 4.0)
    assert analyze(bath, Q).to_json() == analyze(bath, Q).to_json()


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.3, 4.0), st.floats(0.1, 4.0))
def test_report_invariants_property(lam, s, temp):
    bath = BathParams(lam, s, temp)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HorizonWarning)
        rep = analyze(bath, Q)
    check_report(rep, bath, gamma_tot(bath))
