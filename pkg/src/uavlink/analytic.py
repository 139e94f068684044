"""Closed-form and quadrature SNR distributions for the three link kinds.

Every distribution here is a mixture of Gamma laws indexed by main-lobe
sectors plus a point mass at zero. The zero atom collects the probability that
some antenna on the path points outside its main lobe; it is always reported
and always included in CDFs, so every CDF goes from ``zero_atom`` at 0 to 1.

Normalized form: with reference SNR ``gamma_bar`` and single-side sector gain
``g_i``, a leg whose joint gain is ``g_i g_j`` has Gamma rate
``m / (gamma_bar g_i g_j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, special

from .antenna import (
    OrientationModel,
    SectorGainTable,
    UlaPattern,
    build_sector_table,
    sector_probabilities,
)
from .linkbudget import LinkBudget, capacity_to_threshold, reference_snr
from .specfun import DomainError, NumericalError, meijer_g_20_12, meijer_g_21_23

GRID_POINTS = 400


# ---------------------------------------------------------------------------
# link descriptions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class U2uLink:
    """Direct aerial link between two hovering arrays."""

    pattern: UlaPattern
    orient_tx: OrientationModel
    orient_rx: OrientationModel
    budget: LinkBudget
    kind: str = field(default="u2u", init=False)

    @property
    def table(self) -> SectorGainTable:
        return build_sector_table(self.pattern, self.orient_tx, self.orient_rx)


@dataclass(frozen=True)
class U2u2uLink:
    """Aerial source, aerial relay, aerial destination.

    The relay's receive and transmit arrays share one orientation deviation.
    ``budget_dr`` defaults to ``budget_sr`` (equal leg lengths).
    """

    pattern: UlaPattern
    orient_s: OrientationModel
    orient_r: OrientationModel
    orient_d: OrientationModel
    budget_sr: LinkBudget
    budget_dr: LinkBudget | None = None
    kind: str = field(default="u2u2u", init=False)

    def __post_init__(self):
        if self.budget_dr is None:
            object.__setattr__(self, "budget_dr", self.budget_sr)
        if self.budget_sr.nakagami_m != self.budget_dr.nakagami_m:
            raise ValueError("both legs must share the Nakagami parameter")


@dataclass(frozen=True)
class G2u2gLink:
    """Fixed ground source and destination through a hovering relay."""

    pattern: UlaPattern
    orient_r: OrientationModel
    budget: LinkBudget
    kind: str = field(default="g2u2g", init=False)


@dataclass(frozen=True)
class RelayCoefficients:
    """Sector constants of the aerial-relay density.

    ``k1[n]`` is the per-leg rate factor ``m / (gamma_bar g_n)`` (source leg),
    ``k2[i] = k1[i]^m A_si / Gamma(m)`` and
    ``k3[i, j, k] = k1d[k]^m k2[i] A_dk A_Rj / (g_j^(2m) Gamma(m))``.
    """

    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray
    k1_dest: np.ndarray


@dataclass
class DistributionCurve:
    gamma_grid: np.ndarray
    pdf: np.ndarray
    cdf: np.ndarray
    zero_atom: float
    meta: dict = field(default_factory=dict)

    def outage(self, gamma_th: float) -> float:
        """CDF at a threshold by log-linear interpolation on the grid."""
        if gamma_th < 0:
            raise DomainError("threshold must be nonnegative")
        g = self.gamma_grid
        if gamma_th < g[0]:
            return self.zero_atom
        if gamma_th >= g[-1]:
            return float(self.cdf[-1])
        return float(np.interp(math.log(gamma_th), np.log(g), self.cdf))


# ---------------------------------------------------------------------------
# Gamma-mixture primitives
# ---------------------------------------------------------------------------

def _positive(weights, rates):
    keep = weights > 0
    return weights[keep], rates[keep]


def _gamma_mix_pdf(x, weights, rates, m):
    """sum_k w_k Gamma(m, rate_k) density at x; x > 0, broadcast over x."""
    x = np.asarray(x, dtype=float)[..., None]
    with np.errstate(divide="ignore", under="ignore"):
        logt = (np.log(weights) + m * np.log(rates) + (m - 1.0) * np.log(x)
                - rates * x - special.gammaln(m))
    return np.exp(logt).sum(axis=-1)


def _gamma_mix_cdf(x, weights, rates, m):
    x = np.asarray(x, dtype=float)[..., None]
    return (weights * special.gammainc(m, rates * x)).sum(axis=-1)


def _check_positive(gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g > 0)) or np.any(~np.isfinite(g)):
        raise DomainError("density needs finite gamma > 0")
    return g


def _check_nonnegative(gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g >= 0)) or np.any(np.isnan(g)):
        raise DomainError("CDF needs gamma >= 0")
    return g


def _out(gamma, values):
    values = np.asarray(values, dtype=float)
    return float(values) if np.ndim(gamma) == 0 else values


# ---------------------------------------------------------------------------
# U2U
# ---------------------------------------------------------------------------

def _u2u_mixture(table: SectorGainTable, budget: LinkBudget):
    gbar = reference_snr(budget)
    m = budget.nakagami_m
    w = table.joint_probs.ravel()
    rates = m / (gbar * table.joint_gains.ravel())
    w, rates = _positive(w, rates)
    return w, rates, m


def u2u_pdf(table: SectorGainTable, budget: LinkBudget, gamma):
    """Continuous part of the direct-link SNR density (the zero atom excluded)."""
    g = _check_positive(gamma)
    w, rates, m = _u2u_mixture(table, budget)
    return _out(gamma, _gamma_mix_pdf(g, w, rates, m))


def u2u_cdf(table: SectorGainTable, budget: LinkBudget, gamma):
    g = _check_nonnegative(gamma)
    w, rates, m = _u2u_mixture(table, budget)
    return _out(gamma, table.zero_atom + _gamma_mix_cdf(g, w, rates, m))


# ---------------------------------------------------------------------------
# aerial relay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _RelayMixture:
    """Per relay sector j: source-leg and destination-leg Gamma mixtures.

    ``w_s`` and ``w_d`` are sub-probability weights; their sums are the
    main-lobe probabilities of the end nodes. ``rate_s[j, i]`` and
    ``rate_d[j, k]`` are the leg rates given relay sector j.
    """

    m: float
    w_r: np.ndarray
    w_s: np.ndarray
    w_d: np.ndarray
    rate_s: np.ndarray
    rate_d: np.ndarray

    @property
    def zero_atom(self) -> float:
        return max(0.0, 1.0 - float(self.w_r.sum() * self.w_s.sum() * self.w_d.sum()))


def _relay_mixture(link: U2u2uLink) -> _RelayMixture:
    pat = link.pattern
    gains = pat.sector_gains()
    m = link.budget_sr.nakagami_m
    w_r, _ = sector_probabilities(pat, link.orient_r)
    w_s, _ = sector_probabilities(pat, link.orient_s)
    w_d, _ = sector_probabilities(pat, link.orient_d)
    gs = reference_snr(link.budget_sr)
    gd = reference_snr(link.budget_dr)
    jr, js, jd = w_r > 0, w_s > 0, w_d > 0
    g_r, g_s, g_d = gains[jr], gains[js], gains[jd]
    return _RelayMixture(
        m=m,
        w_r=w_r[jr], w_s=w_s[js], w_d=w_d[jd],
        rate_s=m / (gs * np.outer(g_r, g_s)),
        rate_d=m / (gd * np.outer(g_r, g_d)),
    )


def _ground_mixture(link: G2u2gLink) -> _RelayMixture:
    # ground arrays always point at boresight: one sector with gain N
    pat = link.pattern
    gains = pat.sector_gains()
    m = link.budget.nakagami_m
    w_r, _ = sector_probabilities(pat, link.orient_r)
    gbar = reference_snr(link.budget)
    jr = w_r > 0
    rate = (m / (gbar * gains[jr] * pat.n_elements))[:, None]
    one = np.ones(1)
    return _RelayMixture(m=m, w_r=w_r[jr], w_s=one, w_d=one, rate_s=rate, rate_d=rate)


def relay_coefficients(link: U2u2uLink) -> RelayCoefficients:
    gains = link.pattern.sector_gains()
    m = link.budget_sr.nakagami_m
    w_r, _ = sector_probabilities(link.pattern, link.orient_r)
    w_s, _ = sector_probabilities(link.pattern, link.orient_s)
    w_d, _ = sector_probabilities(link.pattern, link.orient_d)
    k1 = m / (reference_snr(link.budget_sr) * gains)
    k1d = m / (reference_snr(link.budget_dr) * gains)
    gm = math.gamma(m)
    k2 = k1 ** m * w_s / gm
    k3 = (k2[:, None, None] * (w_r / (gains ** (2 * m) * gm))[None, :, None]
          * (k1d ** m * w_d)[None, None, :])
    return RelayCoefficients(k1=k1, k2=k2, k3=k3, k1_dest=k1d)


def _u_limits(z, mix: _RelayMixture, j: slice | None = None):
    """Integration window in u = gamma_dr - gamma_sd outside which nothing is left."""
    m = mix.m
    r_d_min = float(mix.rate_d.min())
    r_d_max = float(mix.rate_d.max())
    u_hi = max(z, (80.0 + 4.0 * m) / r_d_min)
    u_lo = 1e-14 * min(z, 1.0 / r_d_max)
    return u_lo, u_hi


def _quad(fun, lo, hi, epsabs, epsrel, what):
    val, err, info = integrate.quad_vec(fun, lo, hi, epsabs=epsabs, epsrel=epsrel,
                                        norm="max", limit=4000, full_output=True)
    if not info.success:
        raise NumericalError(
            f"{what}: quadrature did not converge (error estimate {err:.3g}, "
            f"{info.intervals.shape[0]} intervals)")
    return val


def _harmonic_pdf_point(z: float, mix: _RelayMixture) -> float:
    m = mix.m
    u_lo, u_hi = _u_limits(z, mix)

    def integrand(v):
        u = math.exp(v)
        y = z + u
        x = z * y / u
        fs = (mix.w_s * _pdf_rows(x, mix.rate_s, m)).sum(axis=1)
        fd = (mix.w_d * _pdf_rows(y, mix.rate_d, m)).sum(axis=1)
        return mix.w_r * fs * fd * (y * y / (u * u)) * u

    val = _quad(integrand, math.log(u_lo), math.log(u_hi),
                epsabs=1e-16 / z, epsrel=1e-9, what="relay density")
    return float(val.sum())


def _harmonic_cdf_point(z: float, mix: _RelayMixture) -> float:
    m = mix.m
    s_mass = mix.w_s.sum()
    if z == 0.0:
        return mix.zero_atom
    u_lo, u_hi = _u_limits(z, mix)

    def integrand(v):
        u = math.exp(v)
        y = z + u
        x = z * y / u
        fs = (mix.w_s * special.gammainc(m, mix.rate_s * x)).sum(axis=1)
        fd = (mix.w_d * _pdf_rows(y, mix.rate_d, m)).sum(axis=1)
        return mix.w_r * fs * fd * u

    tail = _quad(integrand, math.log(u_lo), math.log(u_hi),
                 epsabs=1e-15, epsrel=1e-10, what="relay CDF")
    fd_z = (mix.w_d * special.gammainc(m, mix.rate_d * z)).sum(axis=1)
    # Pr{gamma_dr <= z} plus the sliver u < u_lo where F_sr has saturated
    fd0 = (mix.w_d * _pdf_rows(z, mix.rate_d, m)).sum(axis=1)
    head = mix.w_r * s_mass * (fd_z + fd0 * u_lo)
    return mix.zero_atom + float((head + tail).sum())


def _pdf_rows(x, rates, m):
    """Gamma(m, rate) density at scalar x for every entry of ``rates``."""
    with np.errstate(divide="ignore", under="ignore"):
        logt = m * np.log(rates) + (m - 1.0) * math.log(x) - rates * x - special.gammaln(m)
    return np.exp(logt)


def _pointwise(fun, gamma, mix, density=False):
    # work in units of the largest destination-leg rate: a power-of-two change of
    # gamma_bar then leaves every floating-point operation below unchanged
    ref = float(mix.rate_d.max())
    unit = replace(mix, rate_s=mix.rate_s / ref, rate_d=mix.rate_d / ref)
    flat = np.atleast_1d(gamma).ravel()
    vals = np.array([fun(float(z) * ref, unit) for z in flat])
    if density:
        vals = vals * ref
    return _out(gamma, vals.reshape(np.shape(gamma)))


def u2u2u_pdf(link: U2u2uLink, gamma_sd):
    """End-to-end density of the aerial relay link (continuous part).

    The harmonic combination gamma_sr gamma_dr / (gamma_sr + gamma_dr) is
    integrated over gamma_dr > gamma_sd after the shift u = gamma_dr - gamma_sd,
    on a logarithmic u axis so that sectors with very different gains are all
    resolved by the adaptive rule.
    """
    g = _check_positive(gamma_sd)
    return _pointwise(_harmonic_pdf_point, g, _relay_mixture(link), density=True)


def u2u2u_cdf(link: U2u2uLink, gamma_sd):
    """Exact end-to-end CDF of the aerial relay link, zero atom included."""
    g = _check_nonnegative(gamma_sd)
    return _pointwise(_harmonic_cdf_point, g, _relay_mixture(link))


def _min_cdf(g, mix: _RelayMixture):
    # full conditional CDFs of each leg, their own zero mass included
    gg = np.asarray(g, dtype=float)[..., None, None]
    fs = (1.0 - mix.w_s.sum()) + (mix.w_s * special.gammainc(mix.m, mix.rate_s * gg)).sum(-1)
    fd = (1.0 - mix.w_d.sum()) + (mix.w_d * special.gammainc(mix.m, mix.rate_d * gg)).sum(-1)
    cond = fs + fd - fs * fd
    return (1.0 - mix.w_r.sum()) + (mix.w_r * cond).sum(-1)


def u2u2u_cdf_bound(link: U2u2uLink, gamma_sd):
    """CDF of min(gamma_sr, gamma_dr), the small-SNR approximation of the relay CDF.

    Both leg CDFs are evaluated at the same argument. Since the harmonic
    combination never exceeds the smaller leg, this CDF sits below the exact one.
    """
    g = _check_nonnegative(gamma_sd)
    return _out(gamma_sd, _min_cdf(g, _relay_mixture(link)))


# ---------------------------------------------------------------------------
# G2U2G
# ---------------------------------------------------------------------------

def _g2u2g_terms(link: G2u2gLink):
    pat = link.pattern
    m = link.budget.nakagami_m
    w_r, atom = sector_probabilities(pat, link.orient_r)
    gbar = reference_snr(link.budget)
    keep = w_r > 0
    b2 = 4.0 * m / (gbar * pat.n_elements * pat.sector_gains()[keep])
    scale = math.sqrt(math.pi) / (2.0 ** (2 * m - 1) * math.gamma(m) ** 2)
    return w_r[keep], b2, scale, atom, m


def g2u2g_pdf(link: G2u2gLink, gamma_sd):
    g = _check_positive(gamma_sd)
    w, b2, scale, _, m = _g2u2g_terms(link)
    flat = np.atleast_1d(g).ravel()
    args = np.outer(flat, b2)
    vals = meijer_g_20_12(args.ravel(), m).reshape(args.shape)
    out = (w * scale * b2 * vals).sum(axis=1)
    return _out(gamma_sd, out.reshape(np.shape(g)))


def g2u2g_cdf(link: G2u2gLink, gamma_sd):
    g = _check_nonnegative(gamma_sd)
    w, b2, scale, atom, m = _g2u2g_terms(link)
    flat = np.atleast_1d(g).ravel()
    out = np.full(flat.shape, atom)
    pos = flat > 0
    if np.any(pos):
        args = np.outer(flat[pos], b2)
        vals = meijer_g_21_23(args.ravel(), m).reshape(args.shape)
        out[pos] += (w * scale * args * vals).sum(axis=1)
    return _out(gamma_sd, out.reshape(np.shape(g)))


def g2u2g_cdf_quadrature(link: G2u2gLink, gamma_sd):
    """Same CDF by direct harmonic-combination quadrature; independent route."""
    g = _check_nonnegative(gamma_sd)
    return _pointwise(_harmonic_cdf_point, g, _ground_mixture(link))


# ---------------------------------------------------------------------------
# dispatch, outage and curves
# ---------------------------------------------------------------------------

def zero_atom(link) -> float:
    if isinstance(link, U2uLink):
        return link.table.zero_atom
    if isinstance(link, U2u2uLink):
        return _relay_mixture(link).zero_atom
    if isinstance(link, G2u2gLink):
        return sector_probabilities(link.pattern, link.orient_r)[1]
    raise TypeError(f"unsupported link {type(link).__name__}")


def link_pdf(link, gamma):
    if isinstance(link, U2uLink):
        return u2u_pdf(link.table, link.budget, gamma)
    if isinstance(link, U2u2uLink):
        return u2u2u_pdf(link, gamma)
    if isinstance(link, G2u2gLink):
        return g2u2g_pdf(link, gamma)
    raise TypeError(f"unsupported link {type(link).__name__}")


def link_cdf(link, gamma, relay_method: str = "exact"):
    """CDF for any link kind. ``relay_method`` picks exact or min-bound for U2U2U."""
    if isinstance(link, U2uLink):
        return u2u_cdf(link.table, link.budget, gamma)
    if isinstance(link, U2u2uLink):
        if relay_method == "bound":
            return u2u2u_cdf_bound(link, gamma)
        if relay_method != "exact":
            raise ValueError("relay_method must be 'exact' or 'bound'")
        return u2u2u_cdf(link, gamma)
    if isinstance(link, G2u2gLink):
        return g2u2g_cdf(link, gamma)
    raise TypeError(f"unsupported link {type(link).__name__}")


def outage_probability(source, gamma_th: float | None = None, *, c_th: float | None = None,
                       relay_method: str = "exact") -> float:
    """Pr{gamma <= gamma_th} for a link or a precomputed curve.

    Give exactly one of ``gamma_th`` (linear) or ``c_th`` (bit/s/Hz).
    """
    if (gamma_th is None) == (c_th is None):
        raise ValueError("give exactly one of gamma_th or c_th")
    if c_th is not None:
        if c_th < 0:
            raise DomainError("capacity threshold must be nonnegative")
        gamma_th = capacity_to_threshold(c_th)
    if gamma_th < 0:
        raise DomainError("threshold must be nonnegative")
    if isinstance(source, DistributionCurve):
        return source.outage(gamma_th)
    return float(link_cdf(source, float(gamma_th), relay_method=relay_method))


def default_grid(gamma_bar: float, n_elements: int, points: int = GRID_POINTS) -> np.ndarray:
    """Log-spaced SNR grid from gamma_bar 1e-6 up to gamma_bar N^4 10."""
    lo = gamma_bar * 1e-6
    hi = gamma_bar * float(n_elements) ** 4 * 10.0
    return np.logspace(math.log10(lo), math.log10(hi), points)


def _link_meta(link) -> dict:
    pat = link.pattern
    meta = {"kind": link.kind, "n_elements": pat.n_elements, "n_sectors": pat.n_sectors,
            "lobe_exponent": pat.lobe_exponent}
    budget = link.budget_sr if isinstance(link, U2u2uLink) else link.budget
    meta["nakagami_m"] = budget.nakagami_m
    meta["gamma_bar"] = reference_snr(budget)
    return meta


def distribution_curve(link, grid=None, relay_method: str = "exact") -> DistributionCurve:
    meta = _link_meta(link)
    if grid is None:
        grid = default_grid(meta["gamma_bar"], link.pattern.n_elements)
    grid = np.asarray(grid, dtype=float)
    pdf = np.asarray(link_pdf(link, grid), dtype=float)
    cdf = np.asarray(link_cdf(link, grid, relay_method=relay_method), dtype=float)
    meta["relay_method"] = relay_method if isinstance(link, U2u2uLink) else None
    return DistributionCurve(gamma_grid=grid, pdf=pdf, cdf=cdf, zero_atom=zero_atom(link),
                             meta=meta)
