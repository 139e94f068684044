"""Large-scale link budget: 3GPP-style path loss and the reference SNR.

Instantaneous SNR everywhere in the package factorizes as
``gamma = zeta * G * gamma_bar``: fading times joint array gain times the
reference SNR, which carries transmit power, path loss and noise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

# 3GPP height-dependent terms were fitted for BS heights up to this value
MAX_VALID_HEIGHT_M = 150.0


@dataclass(frozen=True)
class LinkBudget:
    distance_z: float = 500.0
    carrier_ghz: float = 60.0
    building_height: float = 25.0
    noise_dbm: float = 30.0
    nakagami_m: float = 3.0
    snr_mode: str = "normalized"
    ref_snr_db: float = 0.0
    tx_power_dbm: float | None = None
    # normalized mode only: overrides ref_snr_db when an exact linear value matters
    ref_snr_linear: float | None = None

    def __post_init__(self):
        if not self.distance_z > 0:
            raise ValueError("distance_z must be positive")
        if not self.building_height > 0:
            raise ValueError("building_height must be positive")
        if not self.carrier_ghz > 0:
            raise ValueError("carrier_ghz must be positive")
        if not self.nakagami_m >= 0.5:
            raise ValueError("nakagami_m must be >= 0.5")
        if self.snr_mode not in ("normalized", "physical"):
            raise ValueError("snr_mode must be 'normalized' or 'physical'")
        if self.ref_snr_linear is not None and not self.ref_snr_linear > 0:
            raise ValueError("ref_snr_linear must be positive")
        if self.snr_mode == "physical" and self.tx_power_dbm is None:
            raise ValueError("physical snr_mode needs tx_power_dbm")
        if self.building_height > MAX_VALID_HEIGHT_M:
            warnings.warn(
                f"building_height {self.building_height} m exceeds the "
                f"{MAX_VALID_HEIGHT_M:g} m validity range of the path-loss fit",
                stacklevel=3,
            )

    @classmethod
    def normalized(cls, ref_snr_db: float, nakagami_m: float = 3.0, **kw) -> "LinkBudget":
        return cls(snr_mode="normalized", ref_snr_db=ref_snr_db, nakagami_m=nakagami_m, **kw)

    def with_snr_db(self, ref_snr_db: float) -> "LinkBudget":
        """Copy in normalized mode at the given reference SNR."""
        return LinkBudget(
            distance_z=self.distance_z,
            carrier_ghz=self.carrier_ghz,
            building_height=self.building_height,
            noise_dbm=self.noise_dbm,
            nakagami_m=self.nakagami_m,
            snr_mode="normalized",
            ref_snr_db=ref_snr_db,
        )


def path_loss_db(budget: LinkBudget) -> float:
    """Path loss in dB for distance in meters and carrier in GHz."""
    z, fc, hb = budget.distance_z, budget.carrier_ghz, budget.building_height
    if not z > 0:
        raise ValueError("distance must be positive")
    hb173 = hb ** 1.73
    return (20.0 * math.log10(40.0 * math.pi * z * fc / 3.0)
            + min(0.03 * hb173, 10.0) * math.log10(z)
            - min(0.044 * hb173, 14.77)
            + 0.002 * z * math.log10(hb))


def reference_snr_db(budget: LinkBudget) -> float:
    if budget.snr_mode == "normalized":
        if budget.ref_snr_linear is not None:
            return 10.0 * math.log10(budget.ref_snr_linear)
        return float(budget.ref_snr_db)
    return budget.tx_power_dbm - path_loss_db(budget) - budget.noise_dbm


def reference_snr(budget: LinkBudget) -> float:
    """Linear reference SNR: antenna gains and fading excluded."""
    if budget.snr_mode == "normalized" and budget.ref_snr_linear is not None:
        return float(budget.ref_snr_linear)
    return 10.0 ** (reference_snr_db(budget) / 10.0)


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def capacity_to_threshold(c_th: float) -> float:
    """SNR threshold 2^C - 1 for a capacity threshold in bit/s/Hz."""
    return 2.0 ** c_th - 1.0
