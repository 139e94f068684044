"""Sweeps over the array size N and the outage-minimizing choice.

All nodes of a scenario share one fluctuation std and one boresight offset,
as in the reference experiments. Ties in outage go to the smaller N.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytic import G2u2gLink, U2u2uLink, U2uLink, outage_probability
from .antenna import OrientationModel, UlaPattern
from .linkbudget import LinkBudget
from .montecarlo import SimConfig, simulate_link

EVALUATORS = ("analytic", "montecarlo", "both")


@dataclass(frozen=True)
class SweepSpec:
    n_range: tuple = (2, 32)
    snr_points: tuple = (20.0, 30.0)  # dB
    sigma_points: tuple = (0.01,)  # radians
    offset_points: tuple = (0.0,)  # radians
    link_kind: str = "u2u"
    evaluator: str = "analytic"
    gamma_th: float = 10.0
    n_sectors: int = 20
    lobe_exponent: float = 2.5
    nakagami_m: float = 3.0
    relay_method: str = "exact"
    trials: int = 10_000_000
    seed: int = 0
    gain_model: str = "exact"
    workers: int = 1

    def __post_init__(self):
        lo, hi = self.n_range
        if not (2 <= lo <= hi <= 64):
            raise ValueError("n_range must satisfy 2 <= N_min <= N_max <= 64")
        for name in ("snr_points", "sigma_points", "offset_points"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        if self.evaluator not in EVALUATORS:
            raise ValueError(f"evaluator must be one of {EVALUATORS}")
        if self.link_kind not in ("u2u", "u2u2u", "g2u2g"):
            raise ValueError("unknown link kind")
        if self.gamma_th < 0:
            raise ValueError("gamma_th must be nonnegative")

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(self.n_range[0], self.n_range[1] + 1)

    @property
    def uses_analytic(self) -> bool:
        return self.evaluator in ("analytic", "both")

    @property
    def uses_mc(self) -> bool:
        return self.evaluator in ("montecarlo", "both")


@dataclass
class SweepResult:
    n_values: np.ndarray
    p_analytic: np.ndarray | None
    p_mc: np.ndarray | None
    mc_stderr: np.ndarray | None
    scenario: dict


@dataclass(frozen=True)
class OptimumRecord:
    n_opt: int | None
    p_out: float | None
    n_opt_mc: int | None
    p_out_mc: float | None
    scenario: dict = field(default_factory=dict)
    evaluator: str = "analytic"


def build_link(kind: str, n_elements: int, sigma: float, offset: float, snr_db: float, *,
               n_sectors: int = 20, lobe_exponent: float = 2.5, nakagami_m: float = 3.0):
    """Scenario with every node at N(offset, sigma^2) and normalized reference SNR."""
    pat = UlaPattern(int(n_elements), n_sectors, lobe_exponent)
    o = OrientationModel(offset, sigma)
    b = LinkBudget.normalized(snr_db, nakagami_m)
    if kind == "u2u":
        return U2uLink(pat, o, o, b)
    if kind == "u2u2u":
        return U2u2uLink(pat, o, o, o, b)
    if kind == "g2u2g":
        return G2u2gLink(pat, o, b)
    raise ValueError(f"unknown link kind {kind}")


def sweep_outage(spec: SweepSpec, sigma: float, offset: float, snr_db: float) -> SweepResult:
    ns = spec.n_values
    pa = np.full(ns.size, np.nan) if spec.uses_analytic else None
    pm = np.full(ns.size, np.nan) if spec.uses_mc else None
    se = np.full(ns.size, np.nan) if spec.uses_mc else None
    for k, n in enumerate(ns):
        link = build_link(spec.link_kind, n, sigma, offset, snr_db, n_sectors=spec.n_sectors,
                          lobe_exponent=spec.lobe_exponent, nakagami_m=spec.nakagami_m)
        if spec.uses_analytic:
            pa[k] = outage_probability(link, spec.gamma_th, relay_method=spec.relay_method)
        if spec.uses_mc:
            cfg = SimConfig(link_kind=spec.link_kind, trials=spec.trials, seed=spec.seed,
                            gain_model=spec.gain_model, thresholds=(spec.gamma_th,),
                            workers=spec.workers)
            res = simulate_link(cfg, link)
            pm[k] = res.outage[0]
            se[k] = res.outage_stderr[0]
    scenario = {"link_kind": spec.link_kind, "sigma": sigma, "offset": offset,
                "snr_db": snr_db, "gamma_th": spec.gamma_th, "n_sectors": spec.n_sectors}
    return SweepResult(ns, pa, pm, se, scenario)


def _argmin(ns, p):
    # np.argmin returns the first minimum, i.e. the smaller N on ties
    k = int(np.argmin(p))
    return int(ns[k]), float(p[k])


def find_optimal_n(spec: SweepSpec, sigma: float, offset: float, snr_db: float) -> OptimumRecord:
    sw = sweep_outage(spec, sigma, offset, snr_db)
    na = pa = nm = pm = None
    if sw.p_analytic is not None:
        na, pa = _argmin(sw.n_values, sw.p_analytic)
    if sw.p_mc is not None:
        nm, pm = _argmin(sw.n_values, sw.p_mc)
    return OptimumRecord(na, pa, nm, pm, sw.scenario, spec.evaluator)


def optimum_table(spec: SweepSpec) -> list[OptimumRecord]:
    """One record per (sigma, offset, snr) in the spec, in nested order."""
    return [find_optimal_n(spec, s, o, snr)
            for s in spec.sigma_points
            for o in spec.offset_points
            for snr in spec.snr_points]
