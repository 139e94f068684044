import math

import numpy as np
import pytest
from scipy import integrate

from uavlink.antenna import (
    OrientationModel,
    UlaPattern,
    build_sector_table,
    cosine_gain,
    exact_gain,
    main_lobe_probability,
    sector_index,
    sector_probabilities,
    sectorized_gain,
)
from uavlink.specfun import RngStream


@pytest.mark.parametrize("n", [2, 4, 8, 16, 31])
def test_fejer_kernel_integrates_to_one(n):
    pat = UlaPattern(n)
    zeros = [k / n - 0.5 for k in range(n + 1)]
    val, _ = integrate.quad(lambda t: exact_gain(pat, t), -0.5, 0.5, points=zeros,
                            limit=400, epsabs=1e-14, epsrel=1e-13)
    assert abs(val - 1.0) < 1e-9


def test_exact_gain_peak_and_nulls():
    pat = UlaPattern(8)
    assert exact_gain(pat, 0.0) == 8.0
    assert exact_gain(pat, 1.0) == 8.0  # period 1 in theta
    assert exact_gain(pat, 1 / 8) < 1e-25
    assert exact_gain(pat, np.array([0.0, 0.05])).shape == (2,)


def test_cosine_gain_support():
    pat = UlaPattern(8)
    assert cosine_gain(pat, 0.0) == 8.0
    assert cosine_gain(pat, 0.125) == 0.0
    assert cosine_gain(pat, -0.2) == 0.0
    # exponent 2.5 follows the main lobe closely
    th = np.linspace(-0.1, 0.1, 41)
    assert np.max(np.abs(cosine_gain(pat, th) - exact_gain(pat, th))) < 0.15


def test_sector_edges_are_left_closed():
    pat = UlaPattern(8, 20)
    nm = 160
    assert sector_index(pat, 0.0) == 0
    assert sector_index(pat, 3 / nm) == 3
    assert sector_index(pat, -3 / nm) == 3
    assert sector_index(pat, math.nextafter(3 / nm, 0)) == 2
    assert sector_index(pat, 1 / 8) == -1
    assert sectorized_gain(pat, 3 / nm) == pytest.approx(8 * math.cos(math.pi * 3 / 40) ** 2.5)
    assert sectorized_gain(pat, 0.2) == 0.0


def test_staircase_dominates_cosine():
    pat = UlaPattern(12, 20)
    th = np.linspace(-0.09, 0.09, 1001)
    assert np.all(sectorized_gain(pat, th) >= cosine_gain(pat, th) - 1e-12)


@pytest.mark.parametrize("n,m,mu,sd", [(4, 20, 0.005, 0.03), (12, 10, 0.02, 0.01),
                                       (18, 4, 0.0, 0.01), (32, 20, -0.01, 0.05)])
def test_sector_probabilities_telescope(n, m, mu, sd):
    pat = UlaPattern(n, m)
    orient = OrientationModel(mu, sd)
    probs, atom = sector_probabilities(pat, orient)
    assert abs(probs.sum() - main_lobe_probability(pat, orient)) < 1e-12
    assert abs(probs.sum() + atom - 1.0) < 1e-15
    assert np.all(probs >= 0)


def test_sector_probabilities_degenerate():
    pat = UlaPattern(8, 20)
    probs, atom = sector_probabilities(pat, OrientationModel(0.0, 0.0))
    assert probs[0] == 1.0 and atom == 0.0
    probs, atom = sector_probabilities(pat, OrientationModel(0.5, 0.0))
    assert probs.sum() == 0.0 and atom == 1.0


def test_sector_probabilities_match_sampling():
    pat = UlaPattern(8, 20)
    orient = OrientationModel.from_mrad(5, 30)
    probs, atom = sector_probabilities(pat, orient)
    theta = RngStream(5).generator.normal(orient.boresight, orient.sigma, 400_000)
    idx = sector_index(pat, theta)
    freq = np.bincount(idx[idx >= 0], minlength=20) / theta.size
    se = np.sqrt(probs * (1 - probs) / theta.size)
    assert np.all(np.abs(freq - probs) <= 4 * se + 1e-12)


def test_sector_table_mass_and_sampling():
    pat = UlaPattern(12, 20)
    o = OrientationModel.from_mrad(5, 30)
    table = build_sector_table(pat, o, o)
    assert table.joint_probs.sum() == pytest.approx(table.main_lobe_mass, abs=1e-14)
    assert table.zero_atom == pytest.approx(1 - table.main_lobe_mass, abs=1e-14)
    with pytest.raises(ValueError):
        table.joint_gains[0, 0] = 1.0
    draws = table.sample(RngStream(2), 200_000)
    zero_frac = np.mean(draws == 0)
    se = math.sqrt(table.zero_atom * (1 - table.zero_atom) / draws.size)
    assert abs(zero_frac - table.zero_atom) < 4 * se


def test_pattern_validation():
    with pytest.raises(ValueError):
        UlaPattern(1)
    with pytest.raises(ValueError):
        UlaPattern(8, 0)
    with pytest.raises(ValueError):
        OrientationModel(0.0, -1.0)
