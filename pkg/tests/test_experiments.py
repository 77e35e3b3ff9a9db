import math

import numpy as np
import pytest

from mz_bayes.bayes import PhaseGrid
from mz_bayes.errors import DivisibilityError, DomainError, FitError
from mz_bayes.experiments import (
    SweepSpec,
    confidence_vs_p,
    cramer_rao_saturation,
    fit_power_law,
    split_budget,
    tail_cancellation_check,
    tail_residual_slope,
    uncertainty_vs_ntotal,
)


def test_split_budget():
    assert split_budget("twin_fock", 2000, 4) == 500
    assert split_budget("noon", 999, 3) == 333
    with pytest.raises(DivisibilityError):
        split_budget("twin_fock", 2000, 3)
    assert split_budget("twin_fock", 2000, 8) == 250
    assert split_budget("twin_fock", 2000, 3, rounding="nearest") == 666
    assert split_budget("twin_fock", 1000, 3, rounding="nearest") == 334
    assert split_budget("yurke", 2000, 2, rounding="nearest") in (999, 1001)
    with pytest.raises(DomainError):
        split_budget("twin_fock", 2000, 2, rounding="floor")


def test_split_budget_odd_runs():
    with pytest.raises(DivisibilityError):
        split_budget("twin_fock", 2000, 16)


def test_fit_exact_power_law():
    xs = [10, 100, 1000, 10000]
    fit = fit_power_law(xs, [3.0 * x ** -0.75 for x in xs])
    assert fit.exponent == pytest.approx(-0.75, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    with pytest.raises(FitError):
        fit_power_law([1, 2], [1, 2])
    with pytest.raises(FitError):
        fit_power_law([1, 2, 3], [1, -2, 3])


def test_sweep_spec_validation():
    with pytest.raises(DomainError):
        SweepSpec("twin_fock", theta_true=0.3)
    with pytest.raises(DomainError):
        SweepSpec("twin_fock", gamma_levels=(1.2,))


def test_twin_one_minimum_at_single_run():
    spec = SweepSpec("twin_one", 2000, p_values=(1, 2, 4, 5), gamma_levels=(0.6827, 0.9545))
    sweep = confidence_vs_p(spec)
    assert sweep.argmin == {0.6827: 1, 0.9545: 1}
    row = next(r for r in sweep.rows if r["p"] == 1 and r["gamma"] == 0.6827)
    assert row["c_gamma_times_nt"] == pytest.approx(2.67, rel=0.02)
    assert set(sweep.rows[0]) == {"gamma", "p", "n_per_run", "c_gamma", "c_gamma_times_nt"}


def test_p_sweep_rejects_bad_split():
    with pytest.raises(DivisibilityError):
        confidence_vs_p(SweepSpec("twin_fock", 2000, p_values=(1, 3)))


def test_p_sweep_minimum_independent_of_budget():
    # the minimizing p stays put when N_T doubles
    argmins = []
    for n_total in (600, 1200):
        spec = SweepSpec("twin_fock", n_total, p_values=tuple(range(1, 7)),
                         gamma_levels=(0.6827, 0.9545), rounding="nearest")
        argmins.append(confidence_vs_p(spec).argmin)
    assert argmins[0] == argmins[1] == {0.6827: 2, 0.9545: 3}


def test_parallel_sweep_matches_serial():
    spec = SweepSpec("twin_fock", 400, p_values=(1, 2, 4), gamma_levels=(0.6827,))
    assert confidence_vs_p(spec, workers=2).rows == confidence_vs_p(spec, workers=1).rows


def test_twin_one_heisenberg_fit():
    fit = uncertainty_vs_ntotal(SweepSpec("twin_one", n_values=(100, 200, 400, 800, 1600)), p=1)
    assert fit.exponent == pytest.approx(-1.0, abs=0.02)
    assert fit.prefactor == pytest.approx(2.67, rel=0.03)
    assert fit.r_squared > 0.999


def test_twin_fock_two_runs_sigma_shot_noise_exponent():
    fit = uncertainty_vs_ntotal(SweepSpec("twin_fock", n_values=(100, 200, 400, 800, 1600)),
                                p=2, metric="sigma")
    assert fit.exponent == pytest.approx(-0.5, abs=0.03)


def test_twin_fock_single_run_sigma_is_sub_power_law():
    fit = uncertainty_vs_ntotal(SweepSpec("twin_fock", n_values=(100, 200, 400, 1000, 2000, 4000)),
                                p=1, metric="sigma")
    assert -0.1 < fit.exponent < 0
    sigmas = [v for _, v in fit.points]
    assert all(a > b for a, b in zip(sigmas, sigmas[1:]))


def test_fit_inputs_checked():
    with pytest.raises(FitError):
        uncertainty_vs_ntotal(SweepSpec("twin_one", n_values=(100, 1000)), p=1)
    with pytest.raises(DomainError):
        uncertainty_vs_ntotal(SweepSpec("twin_one", n_values=(100, 200, 400)), p=1)
    with pytest.raises(DomainError):
        uncertainty_vs_ntotal(SweepSpec("twin_one", n_values=(100, 200, 1000)), p=1, metric="mad")


def test_fit_exponent_grid_stable():
    values = (100, 200, 400, 1000)
    coarse = uncertainty_vs_ntotal(SweepSpec("twin_one", n_values=values), p=1)
    fine = uncertainty_vs_ntotal(SweepSpec("twin_one", n_values=values, grid_resolution=200000), p=1)
    assert abs(coarse.exponent - fine.exponent) < 0.02


@pytest.mark.parametrize("n_total", [400, 1200])
def test_noon_sigma_independent_of_p(n_total):
    for p in (1, 2, 4):
        fit_rows = cramer_rao_saturation("noon", n_total // p, [p])
        assert fit_rows[0]["sigma"] * math.sqrt(n_total) == pytest.approx(math.sqrt(2), rel=0.02)


def test_cramer_rao_rows():
    rows = cramer_rao_saturation("twin_fock", 500, [4, 6, 9, 12])
    by_p = {r["p"]: r for r in rows}
    assert by_p[4]["sigma"] == pytest.approx(4 / 2000, rel=0.05)
    assert not by_p[4]["saturated"] and by_p[6]["saturated"]
    scaled = [by_p[p]["sigma"] * math.sqrt(p) for p in (6, 9, 12)]
    assert max(scaled) / min(scaled) < 1.05
    for p in (6, 9, 12):
        assert by_p[p]["sigma_nt_over_sqrt_p"] == pytest.approx(2.0, rel=0.10)


def test_tail_reports_j20():
    reports = {r.two_m: r for r in tail_cancellation_check(40, [0, 2, 4, 6])}
    assert reports[2].tail_mass < 0.1 * reports[0].tail_mass
    # m = 1 is best among odd m; even m show no comparable cancellation
    assert reports[2].tail_mass < reports[6].tail_mass
    assert reports[2].cancellation_residual < 0.01 * reports[0].cancellation_residual
    assert reports[2].cancellation_residual < 0.01 * reports[4].cancellation_residual
    for r in reports.values():
        assert 0.0 <= r.tail_mass <= 1.0
        assert 0.0 < r.lobe_edge < math.pi / 2


def test_yurke_shows_no_cancellation():
    yurke = tail_cancellation_check(41, [1])[0]
    m1 = tail_cancellation_check(40, [2])[0]
    assert yurke.cancellation_residual > 50 * m1.cancellation_residual
    # the half-integer residual decays like an uncancelled tail, far slower than (j - m)^-3
    assert tail_residual_slope(1, [20, 40, 80]) > -1.5


def test_m1_residual_slope():
    assert tail_residual_slope(2, [20, 40, 80]) == pytest.approx(-3.0, abs=0.5)


def test_tail_check_custom_grid():
    r = tail_cancellation_check(40, [2], grid=PhaseGrid(40000))[0]
    ref = tail_cancellation_check(40, [2])[0]
    assert r.tail_mass == pytest.approx(ref.tail_mass, rel=1e-3)
    assert np.isfinite(r.cancellation_residual)
