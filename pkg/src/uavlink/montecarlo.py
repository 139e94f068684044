"""Trial-level simulation of the three link kinds.

Trials are split into fixed-size chunks and chunk ``k`` always draws from
``RngStream(seed, k)``. Chunk boundaries depend only on the trial count, so
results are bit-identical for any number of worker processes. Aggregation is
by integer counts.

The histogram takes two passes over the chunks: the first finds the positive
SNR range and a Freedman-Diaconis width (IQR from chunk 0, scaled to the full
positive count), the second bins with global edges. Chunks are regenerated
from their streams rather than stored.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .antenna import OrientationModel, UlaPattern, cosine_gain, exact_gain, sectorized_gain
from .linkbudget import LinkBudget, reference_snr
from .specfun import RngStream, sample_gamma, sample_gaussian

GAIN_MODELS = ("exact", "cosine", "sectorized")
LINK_KINDS = ("u2u", "u2u2u", "g2u2g")
DEFAULT_TRIALS = 10_000_000
MAX_BINS = 20_000


@dataclass(frozen=True)
class SimConfig:
    link_kind: str = "u2u"
    trials: int = DEFAULT_TRIALS
    gain_model: str = "exact"
    seed: int = 0
    bins: int | str = "fd"
    thresholds: tuple = ()
    cdf_points: tuple = ()
    chunk_size: int = 1 << 20
    workers: int = 1

    def __post_init__(self):
        if self.link_kind not in LINK_KINDS:
            raise ValueError(f"link_kind must be one of {LINK_KINDS}")
        if self.gain_model not in GAIN_MODELS:
            raise ValueError(f"gain_model must be one of {GAIN_MODELS}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if self.bins != "fd" and (int(self.bins) != self.bins or self.bins < 10):
            raise ValueError("bins must be 'fd' or an integer >= 10")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be positive")
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        object.__setattr__(self, "cdf_points", tuple(float(t) for t in self.cdf_points))


@dataclass(frozen=True)
class Scenario:
    """Everything a chunk needs to draw SNR samples. Picklable."""

    link_kind: str
    pattern: UlaPattern
    orients: tuple  # (tx, rx) | (s, R, d) | (R,)
    gamma_bars: tuple  # one per leg
    nakagami_m: float
    gain_model: str


@dataclass
class EmpiricalResult:
    trials: int
    zero_count: int
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    cdf_points: np.ndarray
    cdf_counts: np.ndarray
    thresholds: np.ndarray
    outage_counts: np.ndarray
    manifest: dict = field(default_factory=dict)

    @property
    def zero_fraction(self) -> float:
        return self.zero_count / self.trials

    @property
    def density(self) -> np.ndarray:
        """Histogram density of the positive part; integrates to 1 - zero_fraction."""
        widths = np.diff(self.bin_edges)
        return self.bin_counts / (self.trials * widths)

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def cdf(self) -> np.ndarray:
        return self.cdf_counts / self.trials

    @property
    def outage(self) -> np.ndarray:
        return self.outage_counts / self.trials

    @property
    def outage_stderr(self) -> np.ndarray:
        p = self.outage
        return np.sqrt(p * (1.0 - p) / self.trials)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

_GAIN_FN = {"exact": exact_gain, "cosine": cosine_gain, "sectorized": sectorized_gain}


def _draw_gain(scn: Scenario, orient: OrientationModel, rng: RngStream, n: int):
    theta = sample_gaussian(orient.boresight, orient.sigma, rng, size=n)
    return np.asarray(_GAIN_FN[scn.gain_model](scn.pattern, theta), dtype=float)


def _harmonic(a, b):
    s = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        out = a * b / s
    return np.where(s > 0, out, 0.0)


def draw_snr(scn: Scenario, rng: RngStream, n: int) -> np.ndarray:
    """Draw ``n`` end-to-end SNR samples in a fixed order from ``rng``."""
    m = scn.nakagami_m
    if scn.link_kind == "u2u":
        gt = _draw_gain(scn, scn.orients[0], rng, n)
        gr = _draw_gain(scn, scn.orients[1], rng, n)
        zeta = sample_gamma(m, m, rng, size=n)
        return zeta * gt * gr * scn.gamma_bars[0]
    if scn.link_kind == "u2u2u":
        gs = _draw_gain(scn, scn.orients[0], rng, n)
        g_r = _draw_gain(scn, scn.orients[1], rng, n)  # one angle, both relay arrays
        gd = _draw_gain(scn, scn.orients[2], rng, n)
        zs = sample_gamma(m, m, rng, size=n)
        zd = sample_gamma(m, m, rng, size=n)
        return _harmonic(zs * gs * g_r * scn.gamma_bars[0], zd * g_r * gd * scn.gamma_bars[1])
    if scn.link_kind == "g2u2g":
        n_el = float(scn.pattern.n_elements)
        g_r = _draw_gain(scn, scn.orients[0], rng, n)
        zs = sample_gamma(m, m, rng, size=n)
        zd = sample_gamma(m, m, rng, size=n)
        return _harmonic(zs * n_el * g_r * scn.gamma_bars[0], zd * n_el * g_r * scn.gamma_bars[0])
    raise ValueError(f"unknown link kind {scn.link_kind}")


def _chunk_sizes(trials: int, chunk: int) -> list[int]:
    full, rest = divmod(trials, chunk)
    return [chunk] * full + ([rest] if rest else [])


def _chunk_samples(scn: Scenario, seed: int, index: int, size: int) -> np.ndarray:
    return draw_snr(scn, RngStream(seed, index), size)


def _pass_range(args):
    scn, seed, index, size, points, want_iqr = args
    x = _chunk_samples(scn, seed, index, size)
    pos = x[x > 0]
    xs = np.sort(x)
    le = np.searchsorted(xs, np.asarray(points), side="right")
    out = {
        "zeros": int(size - pos.size),
        "n_pos": int(pos.size),
        "lo": float(pos.min()) if pos.size else math.inf,
        "hi": float(pos.max()) if pos.size else -math.inf,
        "le": le.astype(np.int64),
    }
    if want_iqr and pos.size >= 2:
        q75, q25 = np.percentile(pos, [75, 25])
        out["iqr"] = float(q75 - q25)
    return out


def _pass_hist(args):
    scn, seed, index, size, edges = args
    x = _chunk_samples(scn, seed, index, size)
    counts, _ = np.histogram(x[x > 0], bins=edges)
    return counts.astype(np.int64)


def _map(fn, jobs, workers):
    if workers == 1 or len(jobs) == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _fd_edges(lo, hi, iqr, n_pos, bins):
    if not math.isfinite(lo):
        return np.linspace(0.0, 1.0, 11)
    if hi <= lo:
        hi = lo * (1 + 1e-9) + 1e-300
    if bins == "fd":
        width = 2.0 * iqr * n_pos ** (-1.0 / 3.0) if iqr else 0.0
        nb = int(math.ceil((hi - lo) / width)) if width > 0 else 10
        nb = min(max(nb, 10), MAX_BINS)
    else:
        nb = int(bins)
    return np.linspace(lo, hi, nb + 1)


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def run(config: SimConfig, scn: Scenario) -> EmpiricalResult:
    sizes = _chunk_sizes(config.trials, config.chunk_size)
    points = np.concatenate([np.asarray(config.cdf_points, float),
                             np.asarray(config.thresholds, float)])
    jobs = [(scn, config.seed, k, s, points, k == 0) for k, s in enumerate(sizes)]
    first = _map(_pass_range, jobs, config.workers)

    zeros = sum(r["zeros"] for r in first)
    n_pos = sum(r["n_pos"] for r in first)
    lo = min(r["lo"] for r in first)
    hi = max(r["hi"] for r in first)
    le = np.sum([r["le"] for r in first], axis=0).astype(np.int64)
    edges = _fd_edges(lo, hi, first[0].get("iqr", 0.0), max(n_pos, 1), config.bins)

    if n_pos:
        hist_jobs = [(scn, config.seed, k, s, edges) for k, s in enumerate(sizes)]
        counts = np.sum(_map(_pass_hist, hist_jobs, config.workers), axis=0)
    else:
        counts = np.zeros(len(edges) - 1, dtype=np.int64)

    n_cdf = len(config.cdf_points)
    manifest = {
        "library_version": __version__,
        "seed": config.seed,
        "trials": config.trials,
        "chunk_size": config.chunk_size,
        "gain_model": config.gain_model,
        "link_kind": config.link_kind,
        "config_hash": config_hash({"config": asdict(config) | {"workers": None},
                                    "scenario": _scenario_dict(scn)}),
    }
    return EmpiricalResult(
        trials=config.trials,
        zero_count=int(zeros),
        bin_edges=edges,
        bin_counts=np.asarray(counts, dtype=np.int64),
        cdf_points=np.asarray(config.cdf_points, float),
        cdf_counts=le[:n_cdf],
        thresholds=np.asarray(config.thresholds, float),
        outage_counts=le[n_cdf:],
        manifest=manifest,
    )


def _scenario_dict(scn: Scenario) -> dict:
    return {
        "link_kind": scn.link_kind,
        "pattern": asdict(scn.pattern),
        "orients": [asdict(o) for o in scn.orients],
        "gamma_bars": list(scn.gamma_bars),
        "nakagami_m": scn.nakagami_m,
        "gain_model": scn.gain_model,
    }


# ---------------------------------------------------------------------------
# per-kind entry points
# ---------------------------------------------------------------------------

def _check_kind(config: SimConfig, kind: str):
    if config.link_kind != kind:
        raise ValueError(f"config is for {config.link_kind}, not {kind}")


def simulate_u2u(config: SimConfig, pattern: UlaPattern, orient_tx: OrientationModel,
                 orient_rx: OrientationModel, budget: LinkBudget) -> EmpiricalResult:
    _check_kind(config, "u2u")
    scn = Scenario("u2u", pattern, (orient_tx, orient_rx), (reference_snr(budget),),
                   budget.nakagami_m, config.gain_model)
    return run(config, scn)


def simulate_u2u2u(config: SimConfig, pattern: UlaPattern, orient_s: OrientationModel,
                   orient_r: OrientationModel, orient_d: OrientationModel,
                   budget_sr: LinkBudget, budget_dr: LinkBudget | None = None) -> EmpiricalResult:
    _check_kind(config, "u2u2u")
    budget_dr = budget_dr or budget_sr
    if budget_dr.nakagami_m != budget_sr.nakagami_m:
        raise ValueError("both legs must share the Nakagami parameter")
    scn = Scenario("u2u2u", pattern, (orient_s, orient_r, orient_d),
                   (reference_snr(budget_sr), reference_snr(budget_dr)),
                   budget_sr.nakagami_m, config.gain_model)
    return run(config, scn)


def simulate_g2u2g(config: SimConfig, pattern: UlaPattern, orient_r: OrientationModel,
                   budget: LinkBudget) -> EmpiricalResult:
    _check_kind(config, "g2u2g")
    scn = Scenario("g2u2g", pattern, (orient_r,), (reference_snr(budget),),
                   budget.nakagami_m, config.gain_model)
    return run(config, scn)


def simulate_link(config: SimConfig, link) -> EmpiricalResult:
    """Simulate from an analytic link description (see :mod:`uavlink.analytic`)."""
    kind = link.kind
    if config.link_kind != kind:
        config = SimConfig(**{**asdict(config), "link_kind": kind})
    if kind == "u2u":
        return simulate_u2u(config, link.pattern, link.orient_tx, link.orient_rx, link.budget)
    if kind == "u2u2u":
        return simulate_u2u2u(config, link.pattern, link.orient_s, link.orient_r,
                              link.orient_d, link.budget_sr, link.budget_dr)
    return simulate_g2u2g(config, link.pattern, link.orient_r, link.budget)
