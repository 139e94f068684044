import math
import warnings

import pytest

from uavlink.linkbudget import (
    LinkBudget,
    capacity_to_threshold,
    path_loss_db,
    reference_snr,
    reference_snr_db,
)


def _path_loss_by_hand(z, fc, hb):
    fs = 20 * math.log10(40 * math.pi * z * fc / 3)
    return (fs + min(0.03 * hb ** 1.73, 10) * math.log10(z)
            - min(0.044 * hb ** 1.73, 14.77) + 0.002 * z * math.log10(hb))


def test_path_loss_reference_point():
    b = LinkBudget()
    assert path_loss_db(b) == pytest.approx(_path_loss_by_hand(500, 60, 25), abs=1e-12)
    assert 133.0 < path_loss_db(b) < 133.2


def test_path_loss_saturating_terms():
    # h_b = 40 m saturates both height caps
    b = LinkBudget(building_height=40.0)
    z = 500.0
    expected = 20 * math.log10(40 * math.pi * z * 60 / 3) + 10 * math.log10(z) - 14.77 \
        + 0.002 * z * math.log10(40.0)
    assert path_loss_db(b) == pytest.approx(expected, abs=1e-12)


def test_reference_snr_modes():
    assert reference_snr(LinkBudget.normalized(20.0)) == pytest.approx(100.0)
    assert reference_snr(LinkBudget(ref_snr_linear=4.0)) == 4.0
    phys = LinkBudget(snr_mode="physical", tx_power_dbm=200.0)
    assert reference_snr_db(phys) == pytest.approx(200.0 - path_loss_db(phys) - 30.0)


def test_validation_and_warning():
    with pytest.raises(ValueError):
        LinkBudget(nakagami_m=0.4)
    with pytest.raises(ValueError):
        LinkBudget(distance_z=0.0)
    with pytest.raises(ValueError):
        LinkBudget(snr_mode="physical")
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        LinkBudget(building_height=200.0)
    assert any("validity" in str(x.message) for x in w)


def test_capacity_threshold():
    assert capacity_to_threshold(0.0) == 0.0
    assert capacity_to_threshold(10.0) == 1023.0
