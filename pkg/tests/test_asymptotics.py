import math
from fractions import Fraction

import numpy as np
import pytest

from src.asymptotics import (
    ZParams,
    convergence_experiment,
    demand_deviation_table,
    gamma,
    phi,
    run_trial,
    summarize_gaps,
    sweep,
    vp_inequality_grid,
    z_value,
    z_value_inverse_form,
)
from src.errors import InputError

ALPHAS = np.round(np.arange(0.01, 1.0, 0.01), 2)


def test_z_value_examples():
    assert z_value(ZParams(0, 1, 3, 0.5)) == pytest.approx(1 / 7)
    assert z_value(ZParams(1, 1, 3, 0.5)) == pytest.approx(2 / 7)


def test_z_forms_agree():
    for N in range(3, 9):
        for M in range(0, N - 1):
            for V in range(1, N - M):
                for alpha in (0.1, 0.5, 0.9):
                    params = ZParams(M, V, N, alpha)
                    assert z_value(params) == pytest.approx(z_value_inverse_form(params), rel=1e-9)


def test_z_increasing_in_v():
    values = [z_value(ZParams(1, V, 8, 0.3)) for V in range(1, 7)]
    assert all(a < b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("kwargs", [{"alpha": 0.0}, {"alpha": 1.0}, {"V": 0}, {"V": 3}, {"M": 3}])
def test_z_params_validation(kwargs):
    base = {"M": 0, "V": 1, "N": 3, "alpha": 0.5}
    with pytest.raises(InputError):
        ZParams(**(base | kwargs))


def test_phi_limits():
    assert phi(1 - 1e-12, 5, 2) == pytest.approx(0.0, abs=1e-9)
    for P in range(2, 8):
        for V in range(1, P):
            assert abs(phi(1e-6, P, V) - V / P) < 1e-4


def test_phi_decreasing_and_gamma_increasing():
    for P in range(2, 10):
        for V in range(1, P):
            values = [phi(float(a), P, V) for a in ALPHAS]
            assert all(a > b for a, b in zip(values, values[1:]))
    # exact arithmetic; in double precision the values near alpha = 1 round to 1.0 once n > 6
    exact_alphas = [Fraction(k, 100) for k in range(1, 100)]
    for n in range(1, 13):
        values = [gamma(a, n) for a in exact_alphas]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert all(v > Fraction(n, n + 1) for v in values)


def test_vp_inequality_holds_on_grid():
    assert vp_inequality_grid() == []


def test_demand_deviation_table_shape():
    rows = demand_deviation_table(4, 1, 0.5, [200], seeds=[0, 1])
    assert len(rows) == 2 * 2
    assert {r.V for r in rows} == {1, 2}
    assert all(0 <= r.empirical <= 1 for r in rows)


def test_run_trial_row():
    row = run_trial(4, 1, 0.5, 40, seed=2)
    assert row.method == "closed-m1"
    assert (row.N, row.M, row.K, row.seed) == (4, 1, 40, 2)
    gap = Fraction(row.closed_total) - Fraction(row.lp_opt)
    assert row.gap_per_packet == pytest.approx(float(gap) / 40)
    if row.feasible_for_full:
        assert gap >= 0


def test_run_trial_general_method():
    assert run_trial(5, 2, 0.5, 20, seed=0).method == "closed-general"


def test_sweep_is_sorted_and_matches_trials():
    rows = sweep(4, 1, 0.5, [30, 10], seeds=[3, 1], workers=1)
    assert [(r.K, r.seed) for r in rows] == [(10, 1), (10, 3), (30, 1), (30, 3)]
    assert rows[0] == run_trial(4, 1, 0.5, 10, 1)


def test_summarize_gaps():
    rows = sweep(4, 1, 0.5, [20], seeds=range(4), workers=1)
    (summary,) = summarize_gaps(rows)
    assert summary.K == 20 and summary.trials == 4
    assert 0 <= summary.zero_gap_fraction <= 1


def test_all_full_regime_has_no_gap():
    # alpha close to 1 makes almost every instance fully replicated
    result = convergence_experiment(3, 1, 0.999, [5], seeds=range(3), workers=1)
    for row in result.rows:
        if row.lp_opt == "0/1":
            assert row.closed_total == "0/1"


@pytest.mark.slow
def test_z_convergence_envelope():
    K = 10_000
    for N in range(3, 7):
        for M in range(0, N - 1):
            for alpha in (0.3, 0.5, 0.7):
                for row in demand_deviation_table(N, M, alpha, [K], seeds=[N * 100 + M]):
                    z = row.expected
                    assert row.deviation < 4 * math.sqrt(z * (1 - z) / K)


def test_gamma_and_phi_accept_fractions():
    assert gamma(Fraction(1, 2), 2) == Fraction(6, 7)
    assert phi(Fraction(1, 2), 2, 1) == Fraction(1, 3)
    assert gamma(0.5, 2) == pytest.approx(6 / 7)
