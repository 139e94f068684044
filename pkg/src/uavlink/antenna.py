"""Uniform linear array gain models and sector statistics.

Angles are the raw orientation deviations in radians, fed straight into the
array-factor argument. With this convention the main lobe is |theta| < 1/N.
The horizontal (x-z plane) pattern is treated as flat and not modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .specfun import q_function


@dataclass(frozen=True)
class UlaPattern:
    n_elements: int
    n_sectors: int = 20
    lobe_exponent: float = 2.5

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 2:
            raise ValueError("n_elements must be an integer >= 2")
        if int(self.n_sectors) != self.n_sectors or self.n_sectors < 1:
            raise ValueError("n_sectors must be an integer >= 1")
        if not self.lobe_exponent > 0:
            raise ValueError("lobe_exponent must be positive")

    @property
    def main_lobe(self) -> float:
        """Half-width of the main lobe, 1/N."""
        return 1.0 / self.n_elements

    def sector_gains(self) -> np.ndarray:
        """Per-sector single-side gains N cos(pi i / 2M)^d, i = 0..M-1."""
        i = np.arange(self.n_sectors)
        return self.n_elements * np.cos(np.pi * i / (2 * self.n_sectors)) ** self.lobe_exponent


@dataclass(frozen=True)
class OrientationModel:
    """Gaussian orientation deviation N(boresight, sigma^2), radians."""

    boresight: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.boresight) and math.isfinite(self.sigma)):
            raise ValueError("orientation parameters must be finite")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @classmethod
    def from_mrad(cls, boresight_mrad: float = 0.0, sigma_mrad: float = 0.0):
        return cls(boresight_mrad * 1e-3, sigma_mrad * 1e-3)


def exact_gain(pattern: UlaPattern, theta):
    """Fejer-kernel array gain sin^2(pi N theta) / (N sin^2(pi theta))."""
    n = pattern.n_elements
    th = np.asarray(theta, dtype=float)
    s = np.sin(np.pi * th)
    # near integer theta the kernel tends to N; the ratio is lossy there
    near = np.abs(s) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(np.pi * n * th) ** 2 / (n * s ** 2)
    out = np.where(near, float(n), val)
    out = np.clip(out, 0.0, float(n))
    return float(out) if out.ndim == 0 else out


def cosine_gain(pattern: UlaPattern, theta):
    """Main-lobe approximation N cos(pi N theta / 2)^d on |theta| < 1/N."""
    n = pattern.n_elements
    th = np.asarray(theta, dtype=float)
    inside = np.abs(th) < 1.0 / n
    c = np.cos(np.pi * n * np.where(inside, th, 0.0) / 2.0)
    out = np.where(inside, n * np.abs(c) ** pattern.lobe_exponent, 0.0)
    return float(out) if out.ndim == 0 else out


def sector_index(pattern: UlaPattern, theta):
    """Sector i with i/(MN) <= |theta| < (i+1)/(MN); -1 outside the main lobe."""
    n, m = pattern.n_elements, pattern.n_sectors
    th = np.abs(np.asarray(theta, dtype=float))
    nm = m * n
    idx = np.floor(th * nm).astype(np.int64)
    # ties are judged against the edge i/(MN) itself, not the rounded product
    idx = idx + ((idx + 1) / nm <= th) - (idx / nm > th)
    idx = np.where(idx >= m, -1, idx)
    return int(idx) if idx.ndim == 0 else idx


def sectorized_gain(pattern: UlaPattern, theta):
    """Staircase of the cosine model: the cosine value at each sector's left edge."""
    idx = np.asarray(sector_index(pattern, theta))
    gains = pattern.sector_gains()
    out = np.where(idx >= 0, gains[np.clip(idx, 0, None)], 0.0)
    return float(out) if out.ndim == 0 else out


def sector_probabilities(pattern: UlaPattern, orient: OrientationModel):
    """Probabilities of landing in each main-lobe sector, and the outside mass.

    Returns ``(probs, zero_atom)`` with ``probs`` of length M.
    """
    n, m = pattern.n_elements, pattern.n_sectors
    mu, sd = orient.boresight, orient.sigma
    i = np.arange(m, dtype=float)
    if sd == 0.0:
        probs = np.zeros(m)
        k = sector_index(pattern, mu)
        if k >= 0:
            probs[k] = 1.0
        return probs, 1.0 - probs.sum()
    nm = n * m
    probs = (q_function((i + nm * mu) / (nm * sd))
             - q_function((i + 1 + nm * mu) / (nm * sd))
             + q_function((i - nm * mu) / (nm * sd))
             - q_function((i + 1 - nm * mu) / (nm * sd)))
    # the closed form is exact; rounding can leave -1e-17 residue
    probs = np.clip(probs, 0.0, None)
    return probs, max(0.0, 1.0 - float(probs.sum()))


def main_lobe_probability(pattern: UlaPattern, orient: OrientationModel) -> float:
    """Pr{|theta| < 1/N} from the Gaussian tails directly."""
    n, mu, sd = pattern.n_elements, orient.boresight, orient.sigma
    if sd == 0.0:
        return 1.0 if abs(mu) < 1.0 / n else 0.0
    return 1.0 - q_function((1.0 / n - mu) / sd) - q_function((1.0 / n + mu) / sd)


@dataclass(frozen=True)
class SectorGainTable:
    """Discrete joint-gain distribution of a two-ended link."""

    gains: np.ndarray
    joint_gains: np.ndarray
    probs_tx: np.ndarray
    probs_rx: np.ndarray
    zero_atom_tx: float
    zero_atom_rx: float
    joint_probs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "joint_probs", np.outer(self.probs_tx, self.probs_rx))
        for arr in (self.gains, self.joint_gains, self.probs_tx, self.probs_rx,
                    self.joint_probs):
            arr.setflags(write=False)

    @property
    def main_lobe_mass(self) -> float:
        """Probability that both ends fall inside their main lobes."""
        return float(self.probs_tx.sum() * self.probs_rx.sum())

    @property
    def zero_atom(self) -> float:
        """Probability that the joint gain is zero."""
        return 1.0 - (1.0 - self.zero_atom_tx) * (1.0 - self.zero_atom_rx)

    def sample(self, rng, size):
        """Draw joint gains from the discrete distribution (0 carries the atom)."""
        values = np.append(self.joint_gains.ravel(), 0.0)
        p = np.append(self.joint_probs.ravel(), 0.0)
        p[-1] = max(0.0, 1.0 - p.sum())
        p /= p.sum()
        return rng.generator.choice(values, size=size, p=p)


def build_sector_table(pattern: UlaPattern, orient_tx: OrientationModel,
                       orient_rx: OrientationModel) -> SectorGainTable:
    gains = pattern.sector_gains()
    ptx, ztx = sector_probabilities(pattern, orient_tx)
    prx, zrx = sector_probabilities(pattern, orient_rx)
    return SectorGainTable(
        gains=gains,
        joint_gains=np.outer(gains, gains),
        probs_tx=ptx,
        probs_rx=prx,
        zero_atom_tx=ztx,
        zero_atom_rx=zrx,
    )
