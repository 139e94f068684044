"""Special-function kernel and reproducible random streams.

The Meijer-G evaluators cover only the two parameter patterns needed by the
ground-relay-ground link model. Both are computed by numerical Mellin-Barnes
integration along a vertical contour placed at the real saddle point of the
integrand, which keeps the integrand non-oscillatory near its peak and avoids
the logarithmic special cases that break Slater-type series for integer m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special


class DomainError(ValueError):
    """Argument outside the domain of a special function or sampler."""


class NumericalError(RuntimeError):
    """A quadrature or root search failed to reach the requested accuracy."""


# ---------------------------------------------------------------------------
# Gaussian Q and incomplete gamma
# ---------------------------------------------------------------------------

def q_function(x):
    """Gaussian tail probability Pr{Z > x} for standard normal Z.

    Accepts scalars or arrays. ``erfc`` keeps full relative precision in the
    upper tail, where ``1 - Phi(x)`` would cancel.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("q_function requires finite input")
    out = 0.5 * special.erfc(arr / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def lower_incomplete_gamma(m, x):
    """Non-regularized lower incomplete gamma: integral of t^(m-1) e^-t on [0, x]."""
    m_arr = np.asarray(m, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if np.any(m_arr <= 0) or not np.all(np.isfinite(m_arr)):
        raise DomainError("shape m must be positive")
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise DomainError("x must be nonnegative")
    out = special.gammainc(m_arr, x_arr) * special.gamma(m_arr)
    return float(out) if out.ndim == 0 else out


def regularized_lower_gamma(m, x):
    """gamma(m, x) / Gamma(m), the Gamma(m, 1) CDF. Same domain as above."""
    m_arr = np.asarray(m, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if np.any(m_arr <= 0):
        raise DomainError("shape m must be positive")
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise DomainError("x must be nonnegative")
    out = special.gammainc(m_arr, x_arr)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Meijer-G via Mellin-Barnes contour integration
# ---------------------------------------------------------------------------
#
# Convention: G(x) = 1/(2 pi i) * integral over Re(s) = c of K(s) x^s ds, with
# right poles coming from Gamma(b_j - s) and left poles from Gamma(1 - a_j + s).
# On s = c + it the integral becomes (1/pi) * int_0^inf Re[K(s) x^s] dt.

_TAIL_LOG_RATIO = math.log(1e-16)
# results below exp(-750) are zero in double precision
_UNDERFLOW_LOG = -750.0


@dataclass(frozen=True)
class _Kernel:
    num_minus: tuple  # b values in Gamma(b - s)
    num_plus: tuple  # (1 - a) values in Gamma(1 - a + s)
    den_minus: tuple  # a values in Gamma(a - s)
    den_plus: tuple  # (1 - b) values in Gamma(1 - b + s)
    lo: float  # contour must satisfy lo < c < hi
    hi: float

    def log_kernel(self, s):
        out = 0.0
        for b in self.num_minus:
            out = out + special.loggamma(b - s)
        for a in self.num_plus:
            out = out + special.loggamma(a + s)
        for a in self.den_minus:
            out = out - special.loggamma(a - s)
        for b in self.den_plus:
            out = out - special.loggamma(b + s)
        return out


def _kernel_20_12(m: float) -> _Kernel:
    # G^{2,0}_{1,2}( . | m-1/2 ; m-1, 2m-1 )
    return _Kernel(
        num_minus=(m - 1.0, 2.0 * m - 1.0),
        num_plus=(),
        den_minus=(m - 0.5,),
        den_plus=(),
        lo=-math.inf,
        hi=m - 1.0,
    )


def _kernel_21_23(m: float) -> _Kernel:
    # G^{2,1}_{2,3}( . | 0, m-1/2 ; m-1, 2m-1, -1 )
    return _Kernel(
        num_minus=(m - 1.0, 2.0 * m - 1.0),
        num_plus=(1.0,),
        den_minus=(m - 0.5,),
        den_plus=(2.0,),
        lo=-1.0,
        hi=m - 1.0,
    )


def _saddle(kernel: _Kernel, logx: float) -> tuple[float, float]:
    """Real saddle point c and log|integrand| there."""

    def real_log(c):
        return float(np.real(kernel.log_kernel(c))) + c * logx

    span = kernel.hi - kernel.lo if math.isfinite(kernel.lo) else None
    eps = 1e-9 if span is None else 1e-9 * max(span, 1.0)
    hi = kernel.hi - eps
    if span is None:
        # saddle sits near c = -x for large x
        lo = kernel.hi - 10.0 - 2.0 * math.exp(min(logx, 700.0))
    else:
        lo = kernel.lo + eps
    res = optimize.minimize_scalar(real_log, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-10})
    c = float(res.x)
    return c, real_log(c)


def _tail_length(kernel: _Kernel, c: float, logx: float, peak: float) -> float:
    t = 4.0
    while True:
        s = complex(c, t)
        val = float(np.real(kernel.log_kernel(s))) + c * logx - peak
        if val < _TAIL_LOG_RATIO:
            return t
        t *= 1.5
        if t > 1e5:
            raise NumericalError("Mellin-Barnes integrand does not decay")


_GL_HI = np.polynomial.legendre.leggauss(24)
_GL_LO = np.polynomial.legendre.leggauss(18)


def _contour_pieces(kernel: _Kernel, c: float, logx: float, tmax: float) -> np.ndarray:
    # near t = 0 the peak width scales with the gap to the nearest pole; further
    # out the phase turns at about |log x| per unit t, so cap the piece length
    gap = min(kernel.hi - c, c - kernel.lo)
    width = min(max(gap, 1e-6), 1.0)
    cap = 15.0 / (abs(logx) + 1.0)
    edges = [0.0]
    t = width
    while edges[-1] < tmax:
        edges.append(min(t, edges[-1] + cap, tmax))
        t = 2.0 * edges[-1]
    return np.asarray(edges)


def _composite_gl(integrand, edges, rule) -> tuple[float, float]:
    """Integral and integral of the absolute value."""
    nodes, weights = rule
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    t = a + half * (nodes + 1.0)
    f = half * weights * integrand(t)
    return float(np.sum(f)), float(np.sum(np.abs(f)))


def _mellin_barnes_one(kernel: _Kernel, logx: float, rtol: float) -> float:
    c, peak = _saddle(kernel, logx)
    if peak < _UNDERFLOW_LOG:
        return 0.0
    tmax = _tail_length(kernel, c, logx, peak)

    def integrand(t):
        s = c + 1j * np.asarray(t)
        return np.exp(kernel.log_kernel(s) + s * logx - peak).real

    # two rule orders on the same pieces; disagreement sends us to adaptive quadrature
    edges = _contour_pieces(kernel, c, logx, tmax)
    hi, l1 = _composite_gl(integrand, edges, _GL_HI)
    lo, _ = _composite_gl(integrand, edges, _GL_LO)
    if abs(hi - lo) > rtol * l1:
        hi = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(lambda u: float(integrand(u)), a, b, epsabs=1e-16,
                                    epsrel=rtol, limit=400)
            hi += val
    with np.errstate(under="ignore"):
        return hi / math.pi * math.exp(peak)


def _mellin_barnes(kernel: _Kernel, x, rtol: float = 1e-12):
    """Contour evaluation, one saddle and one adaptive integral per argument."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(~np.isfinite(xs)) or np.any(xs <= 0):
        raise DomainError("Meijer-G argument must be finite and positive")
    flat = xs.ravel()
    out = np.array([_mellin_barnes_one(kernel, float(lx), rtol) for lx in np.log(flat)])
    return out.reshape(xs.shape)


def _as_output(x, values):
    return float(values[0]) if np.ndim(x) == 0 else values.reshape(np.shape(x))


def meijer_g_20_12(x, m):
    """G^{2,0}_{1,2}(x | m-1/2 ; m-1, 2m-1) for x > 0.

    Accepts a scalar or array ``x``. Values below the double-precision range
    underflow to 0.
    """
    if m < 0.5:
        raise DomainError("shape m must be at least 1/2")
    return _as_output(x, _mellin_barnes(_kernel_20_12(float(m)), x))


def meijer_g_21_23(x, m):
    """G^{2,1}_{2,3}(x | 0, m-1/2 ; m-1, 2m-1, -1) for x > 0.

    The contour lies in the strip -1 < Re(s) < m - 1, so m must exceed 0.
    """
    if m <= 0.0:
        raise DomainError("shape m must be positive")
    return _as_output(x, _mellin_barnes(_kernel_21_23(float(m)), x))


# ---------------------------------------------------------------------------
# Random streams and samplers
# ---------------------------------------------------------------------------

_U64 = (1 << 64) - 1


@dataclass
class RngStream:
    """Philox counter-based stream addressed by ``(seed, stream_id)``.

    The key is derived with :class:`numpy.random.SeedSequence` using the stream
    id as spawn key, so distinct ids give independent sequences and the same
    pair always reproduces the same draws. One instance per worker; never share.
    """

    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not (0 <= self.seed <= _U64 and 0 <= self.stream_id <= _U64):
            raise DomainError("seed and stream_id must be unsigned 64-bit integers")
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(seq))

    def advance(self, n_blocks: int) -> None:
        """Jump the underlying counter forward by ``n_blocks`` Philox blocks."""
        self.generator.bit_generator.advance(n_blocks)


def sample_gamma(m, rate, rng: RngStream, size=None):
    """Draw from the Gamma density rate^m t^(m-1) e^(-rate t) / Gamma(m)."""
    if not (m > 0 and rate > 0 and math.isfinite(m) and math.isfinite(rate)):
        raise DomainError("gamma sampler needs positive finite shape and rate")
    return rng.generator.gamma(m, 1.0 / rate, size=size)


def sample_gaussian(mean, sd, rng: RngStream, size=None):
    """Draw N(mean, sd^2); ``sd == 0`` returns ``mean`` exactly."""
    if sd < 0 or not math.isfinite(sd) or not math.isfinite(mean):
        raise DomainError("gaussian sampler needs finite mean and sd >= 0")
    if sd == 0:
        return float(mean) if size is None else np.full(size, float(mean))
    return rng.generator.normal(mean, sd, size=size)
