import numpy as np
import pytest

from uavlink.optimizer import SweepSpec, build_link, find_optimal_n, optimum_table, sweep_outage


def test_still_nodes_favor_largest_array():
    spec = SweepSpec(n_range=(2, 32), gamma_th=1023.0)
    sw = sweep_outage(spec, sigma=0.0, offset=0.0, snr_db=20.0)
    assert np.all(np.diff(sw.p_analytic) < 0)
    assert find_optimal_n(spec, 0.0, 0.0, 20.0).n_opt == 32


def test_interior_minimum_under_fluctuation():
    spec = SweepSpec(gamma_th=1023.0)
    sw = sweep_outage(spec, sigma=0.02, offset=0.0, snr_db=20.0)
    k = int(np.argmin(sw.p_analytic))
    assert 0 < k < sw.n_values.size - 1


def test_optimum_nonincreasing_in_sigma():
    spec = SweepSpec(sigma_points=(0.01, 0.02, 0.03), snr_points=(20.0,), gamma_th=1023.0)
    n_opt = [r.n_opt for r in optimum_table(spec)]
    assert n_opt == sorted(n_opt, reverse=True)


def test_joint_scaling_leaves_sweep_unchanged():
    # gamma_bar up by 10 dB and threshold up by exactly 10x
    base = SweepSpec(gamma_th=102.3)
    hi = SweepSpec(gamma_th=1023.0)
    a = sweep_outage(base, 0.02, 0.0, 10.0).p_analytic
    b = sweep_outage(hi, 0.02, 0.0, 20.0).p_analytic
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=0)
    assert np.argmin(a) == np.argmin(b)


def test_ties_break_to_smaller_n():
    # still nodes and a zero threshold: outage is exactly 0 for every N
    spec = SweepSpec(n_range=(4, 9), gamma_th=0.0)
    rec = find_optimal_n(spec, 0.0, 0.0, 20.0)
    assert rec.n_opt == 4 and rec.p_out == 0.0


def test_both_evaluators_agree_on_easy_scenario():
    spec = SweepSpec(n_range=(4, 10), evaluator="both", gamma_th=1023.0, trials=300_000,
                     gain_model="sectorized", seed=3)
    sw = sweep_outage(spec, 0.03, 0.0, 20.0)
    assert np.all(np.abs(sw.p_mc - sw.p_analytic) <= 4 * sw.mc_stderr + 1e-12)
    rec = find_optimal_n(spec, 0.03, 0.0, 20.0)
    assert rec.n_opt_mc is not None and rec.evaluator == "both"


@pytest.mark.parametrize("kind", ["u2u", "u2u2u", "g2u2g"])
def test_build_link_kinds(kind):
    assert build_link(kind, 8, 0.01, 0.0, 20.0).kind == kind


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(n_range=(1, 10))
    with pytest.raises(ValueError):
        SweepSpec(n_range=(2, 65))
    with pytest.raises(ValueError):
        SweepSpec(snr_points=())
    with pytest.raises(ValueError):
        SweepSpec(evaluator="mc")
