"""Environment laws and the closed-form exponents built on them.

All functions here are pure: laws are immutable descriptors and every
quantity is recomputed on demand.  Extended-real results use ``math.inf``
and ``-math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, stats

from .errors import BorderlineCriterion

ROOT_TOL = 1e-10
_BISECT_TOL = 1e-13
_PPF_KNOTS = 2**16 + 1
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# scalar search helpers
# ---------------------------------------------------------------------------

def golden_min(f: Callable[[float], float], lo: float, hi: float, tol: float = ROOT_TOL):
    """Minimise a unimodal ``f`` on ``[lo, hi]``; returns ``(t, f(t))``."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    # the endpoints matter when the minimum sits on the boundary
    cands = [(f(a), a), (f(b), b), (fc, c), (fd, d)]
    val, t = min(cands)
    return t, val


def bisect_root(g: Callable[[float], float], lo: float, hi: float, tol: float = _BISECT_TOL) -> float:
    """Root of ``g`` on ``[lo, hi]`` given ``g(lo) <= 0 <= g(hi)`` (or the reverse)."""
    glo = g(lo)
    sign_lo = glo > 0
    for _ in range(400):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if (g(mid) > 0) == sign_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ALaw:
    """Law of the environment mark ``A``.

    Either a finite support (``values``/``probs``) or a continuous
    distribution ``dist`` (a frozen ``scipy.stats`` object) supported on
    ``[lo, hi]``.  ``alpha`` bounds both ``A`` and ``1/A``.
    """

    values: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None
    dist: object = None
    lo: float = 0.0
    hi: float = 0.0
    alpha: float = 1.0
    name: str = ""
    pdf: Optional[Callable[[float], float]] = field(default=None, repr=False, compare=False)
    _lv: tuple = field(default=(), repr=False, compare=False)
    _lp: tuple = field(default=(), repr=False, compare=False)

    # -- constructors -------------------------------------------------------
    @classmethod
    def finite(cls, values: Sequence[float], probs: Sequence[float], alpha: float | None = None, name: str = ""):
        v = np.asarray(values, dtype=float)
        p = np.asarray(probs, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise ValueError("values and probs must be equal-length 1-d sequences")
        if np.any(v <= 0) or not np.all(np.isfinite(v)):
            raise ValueError("support values must be positive and finite")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        keep = p > 0
        v, p = v[keep], p[keep]
        order = np.argsort(v)
        v, p = v[order], p[order]
        # merge duplicated atoms
        uv, inv = np.unique(v, return_inverse=True)
        up = np.bincount(inv, weights=p)
        need = max(uv[-1], 1.0 / uv[0])
        if alpha is None:
            alpha = need
        elif need > alpha * (1 + 1e-12):
            raise ValueError(f"support {uv.tolist()} not inside [1/alpha, alpha] for alpha={alpha}")
        law = cls(values=uv, probs=up, lo=float(uv[0]), hi=float(uv[-1]), alpha=float(alpha), name=name)
        object.__setattr__(law, "_lv", tuple(np.log(uv).tolist()))
        object.__setattr__(law, "_lp", tuple(np.log(up).tolist()))
        return law

    @classmethod
    def constant(cls, a: float, alpha: float | None = None):
        return cls.finite([a], [1.0], alpha=alpha, name=f"const({a:g})")

    @classmethod
    def two_point(cls, low: float, high: float, p_high: float):
        return cls.finite([low, high], [1.0 - p_high, p_high])

    @classmethod
    def density(cls, dist, lo: float, hi: float, alpha: float | None = None, name: str = "", pdf=None):
        """Continuous law from a frozen scipy distribution supported in ``[lo, hi]``.

        ``pdf`` optionally supplies a fast scalar density; it defaults to
        ``dist.pdf``.
        """
        if not 0 < lo < hi:
            raise ValueError("density support must satisfy 0 < lo < hi")
        mass = dist.cdf(hi) - dist.cdf(lo)
        if abs(mass - 1.0) > 1e-12:
            raise ValueError(f"distribution puts mass {mass!r} on [lo, hi]")
        need = max(hi, 1.0 / lo)
        if alpha is None:
            alpha = need
        elif need > alpha * (1 + 1e-12):
            raise ValueError("density support not inside [1/alpha, alpha]")
        return cls(dist=dist, lo=float(lo), hi=float(hi), alpha=float(alpha), name=name, pdf=pdf or dist.pdf)

    @classmethod
    def uniform(cls, lo: float, hi: float, alpha: float | None = None):
        h = 1.0 / (hi - lo)
        return cls.density(stats.uniform(loc=lo, scale=hi - lo), lo, hi, alpha,
                           name=f"uniform({lo:g},{hi:g})", pdf=lambda a: h)

    @classmethod
    def loguniform(cls, lo: float, hi: float, alpha: float | None = None):
        c = 1.0 / math.log(hi / lo)
        return cls.density(stats.loguniform(lo, hi), lo, hi, alpha,
                           name=f"loguniform({lo:g},{hi:g})", pdf=lambda a: c / a)

    # -- basic properties ----------------------------------------------------
    @property
    def is_finite(self) -> bool:
        return self.values is not None

    @property
    def log_support(self) -> tuple[float, float]:
        """``[ess inf ln A, ess sup ln A]``."""
        return math.log(self.lo), math.log(self.hi)

    @property
    def is_degenerate(self) -> bool:
        return self.is_finite and self.values.size == 1

    def mean_log(self) -> float:
        """``E[ln A]``."""
        return self.dphi(0.0)

    # -- log-moment transform ------------------------------------------------
    def phi(self, t: float) -> float:
        """``ln E[A^t]``; exactly 0 at ``t = 0``."""
        if t == 0:
            return 0.0
        if self.is_finite:
            lv, lp = self._lv, self._lp
            terms = [p + t * v for v, p in zip(lv, lp)]
            m = max(terms)
            return m + math.log(math.fsum(math.exp(x - m) for x in terms))
        shift = max(t * math.log(self.lo), t * math.log(self.hi))
        pdf = self.pdf
        val = self._quad(lambda a: pdf(a) * math.exp(t * math.log(a) - shift))
        return shift + math.log(val)

    def dphi(self, t: float) -> float:
        """Derivative of :meth:`phi`, i.e. ``E[A^t ln A] / E[A^t]``."""
        if self.is_finite:
            lv, lp = self._lv, self._lp
            terms = [p + t * v for v, p in zip(lv, lp)]
            m = max(terms)
            w = [math.exp(x - m) for x in terms]
            return math.fsum(wi * v for wi, v in zip(w, lv)) / math.fsum(w)
        shift = max(t * math.log(self.lo), t * math.log(self.hi))
        pdf = self.pdf
        num = self._quad(lambda a: pdf(a) * math.log(a) * math.exp(t * math.log(a) - shift))
        den = self._quad(lambda a: pdf(a) * math.exp(t * math.log(a) - shift))
        return num / den

    def _quad(self, f) -> float:
        # split at 1 so that integrands carrying ln a keep one sign per piece
        cuts = [self.lo, 1.0, self.hi] if self.lo < 1.0 < self.hi else [self.lo, self.hi]
        return math.fsum(integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-11, limit=400)[0]
                         for a, b in zip(cuts, cuts[1:]))

    def atom_log_prob(self, x: float) -> float:
        """``ln P(ln A = x)`` (``-inf`` when there is no atom at ``x``)."""
        if not self.is_finite:
            return -math.inf
        for v, p in zip(self._lv, self._lp):
            if v == x:
                return p
        return -math.inf

    # -- sampling ------------------------------------------------------------
    def sampling_table(self) -> tuple[int, np.ndarray, np.ndarray]:
        """Tables used by the compiled samplers.

        Returns ``(mode, xs, cdf)``.  Mode 0: finite support, ``xs`` are
        the atoms and ``cdf`` their cumulative probabilities.  Mode 1:
        ``xs`` is the quantile function tabulated on a uniform grid of
        ``[0, 1]`` (``cdf`` unused) and samples are linearly interpolated.
        """
        if self.is_finite:
            cdf = np.cumsum(self.probs)
            cdf[-1] = 1.0
            return 0, self.values.copy(), cdf
        grid = np.linspace(0.0, 1.0, _PPF_KNOTS)
        q = self.dist.ppf(grid)
        q[0], q[-1] = self.lo, self.hi
        return 1, np.clip(q, self.lo, self.hi), grid

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms on [0, 1) to samples of ``A``."""
        mode, xs, cdf = self.sampling_table()
        u = np.asarray(u, dtype=float)
        if mode == 0:
            return xs[np.searchsorted(cdf, u, side="right").clip(max=xs.size - 1)]
        return np.interp(u, cdf, xs)


@dataclass(frozen=True)
class OffspringLaw:
    """Offspring distribution ``q_k``, ``k = 1..K`` (``q_0 = 0``).

    ``q_1 = 1`` (the half-line tree) is accepted for the one-dimensional
    experiments even though it is not a proper supercritical law.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("offspring probs must be a non-empty 1-d sequence (q_1..q_K)")
        if np.any(p < 0):
            raise ValueError("offspring probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"offspring probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    @classmethod
    def regular(cls, b: int):
        p = np.zeros(b)
        p[b - 1] = 1.0
        return cls(p)

    @classmethod
    def line(cls):
        return cls(np.array([1.0]))

    @property
    def q1(self) -> float:
        return float(self.probs[0])

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(1, self.probs.size + 1), self.probs))

    @property
    def min_children(self) -> int:
        return int(np.flatnonzero(self.probs > 0)[0] + 1)

    @property
    def is_line(self) -> bool:
        return self.probs[0] == 1.0

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def moment_transform(law: ALaw, t: float) -> float:
    """``E[A^t]``; exact sum for finite support, quadrature otherwise."""
    if t == 0:
        return 1.0
    if law.is_finite:
        return math.fsum(float(p) * float(v) ** t for v, p in zip(law.values, law.probs))
    return math.exp(law.phi(t))


def _min_moment_on_unit(law: ALaw) -> float:
    _, val = golden_min(lambda t: moment_transform(law, t), 0.0, 1.0, tol=1e-12)
    return min(val, 1.0, moment_transform(law, 1.0))


def is_transient(a_law: ALaw, off: OffspringLaw) -> bool:
    """Transience of the tree walk.

    For a proper Galton-Watson law the test is ``inf_{[0,1]} E[A^t] > 1/m``.
    On the half-line tree (``q_1 = 1``) the walk is transient iff
    ``E[ln A] > 0``.
    """
    if off.is_line:
        mu = a_law.mean_log()
        if abs(mu) < 1e-9:
            raise BorderlineCriterion(f"E[ln A] = {mu:.3e} is numerically zero")
        return mu > 0
    inf = _min_moment_on_unit(a_law)
    thresh = 1.0 / off.mean
    if abs(inf - thresh) < 1e-9:
        raise BorderlineCriterion(f"inf E[A^t] = {inf!r} is within 1e-9 of 1/m = {thresh!r}")
    return inf > thresh


def _expand_until(pred, start: float = 1.0, limit: int = 80) -> float:
    r = start
    for _ in range(limit):
        if pred(r):
            return r
        r *= 2.0
    raise RuntimeError("bracket expansion did not terminate")


def sublevel_roots(law: ALaw, level: float) -> tuple[float, float]:
    """Endpoints of ``{t : phi(t) <= level}`` for ``level > 0``; infinite ends allowed."""
    a, b = law.log_support
    if level < 0:
        raise ValueError("level must be nonnegative")
    if b > 0:
        r = _expand_until(lambda r: law.phi(r) > level)
        right = bisect_root(lambda t: law.phi(t) - level, 0.0, r)
    else:
        right = math.inf
    if a < 0:
        r = _expand_until(lambda r: law.phi(-r) > level)
        left = bisect_root(lambda t: law.phi(t) - level, -r, 0.0)
    else:
        left = -math.inf
    return left, right


def lambda_exponent(a_law: ALaw, q1: float) -> float:
    """Lebesgue measure of ``{t : E[A^t] <= 1/q1}`` (``inf`` when ``q1 = 0``)."""
    if not 0.0 <= q1 < 1.0:
        raise ValueError("q1 must lie in [0, 1)")
    if q1 == 0.0:
        return math.inf
    a, b = a_law.log_support
    if a >= 0 or b <= 0:
        # phi is monotone or tends to a constant at one end: half-line
        return math.inf
    level = math.log(1.0 / q1)
    t_min, phi_min = golden_min(a_law.phi, *_phi_min_bracket(a_law))
    if phi_min > level:
        return 0.0
    left, right = sublevel_roots(a_law, level)
    return right - left


def _phi_min_bracket(law: ALaw) -> tuple[float, float]:
    a, b = law.log_support
    if not a < 0 < b:
        return -1.0, 1.0
    r = _expand_until(lambda r: law.dphi(r) > 0 and law.dphi(-r) < 0)
    return -r, r


def solomon_kappa(a_law: ALaw) -> Optional[float]:
    """Root ``kappa`` in ``(0, 1]`` of ``E[A^-kappa] = 1``; ``None`` if absent."""
    g = lambda k: a_law.phi(-k)
    if a_law.mean_log() <= 0:
        return None
    g1 = g(1.0)
    if abs(g1) < 1e-15:
        return 1.0
    if g1 < 0:
        return None
    k_min, g_min = golden_min(g, 0.0, 1.0, tol=1e-12)
    if g_min >= 0:
        return None
    return bisect_root(g, k_min, 1.0)


@dataclass(frozen=True)
class TransformTable:
    """``phi``, its Legendre transform and the chord root for one law."""

    law: ALaw

    @property
    def support(self) -> tuple[float, float]:
        return self.law.log_support

    def phi(self, t: float) -> float:
        return self.law.phi(t)

    def dphi(self, t: float) -> float:
        return self.law.dphi(t)

    def I(self, x: float) -> float:  # noqa: E743 - conventional name
        return legendre(self, x)

    def t_bar(self, lam: float) -> float:
        return big_L(self, lam)[1]


def transform_table(law: ALaw) -> TransformTable:
    return TransformTable(law)


def legendre(tab: TransformTable, x: float) -> float:
    """``I(x) = sup_t {t x - phi(t)}``, ``+inf`` outside the log-support."""
    law = tab.law
    a, b = law.log_support
    if a == b:
        return 0.0 if x == a else math.inf
    if x < a or x > b:
        return math.inf
    if x == a or x == b:
        # supremum is approached as t -> -inf (resp. +inf)
        return -law.atom_log_prob(x)
    r = _expand_until(lambda r: law.dphi(r) > x and law.dphi(-r) < x)
    t, val = golden_min(lambda t: law.phi(t) - t * x, -r, r)
    return max(0.0, -val)


def big_L(tab: TransformTable, lam: float) -> tuple[float, float]:
    """``(L(lam), t_bar)`` with ``phi(t_bar) = phi(t_bar + lam)``.

    ``t_bar = 0`` when the chord equation has no root (``A`` bounded on
    one side of 1), in which case ``L = max(0, phi(0)) = 0``.
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must lie in (0, 1]")
    law = tab.law
    a, b = law.log_support
    if not a < 0 < b:
        return max(0.0, law.phi(0.0)), 0.0
    chord = lambda t: law.phi(t + lam) - law.phi(t)
    r = _expand_until(lambda r: chord(r) > 0 and chord(-r) < 0)
    t_bar = bisect_root(chord, -r, r)
    return max(0.0, law.phi(t_bar)), t_bar


def big_L_prime(tab: TransformTable, q1: float) -> float:
    """``L' = -Lambda`` (``-inf`` when ``q1 = 0``)."""
    return -lambda_exponent(tab.law, q1)


def big_L_prime_direct(tab: TransformTable, q1: float, grid: int = 48) -> float:
    """``L'`` by maximising its defining objective over ``x1, x2 > 0``.

    The objective ``(x1+x2)/(x1 x2) ln q1 - I(-x1)/x1 - I(x2)/x2`` is
    evaluated on a log-spaced grid and the best cell is refined by
    coordinate ascent with golden-section line searches.  Independent of
    :func:`lambda_exponent`.
    """
    if not 0.0 <= q1 < 1.0:
        raise ValueError("q1 must lie in [0, 1)")
    if q1 == 0.0:
        return -math.inf
    a, b = tab.support
    if a >= 0 or b <= 0:
        # I(-x1) or I(x2) is infinite for every positive argument
        return -math.inf
    lq = math.log(q1)

    def obj(x1, x2):
        i1, i2 = legendre(tab, -x1), legendre(tab, x2)
        if math.isinf(i1) or math.isinf(i2):
            return -math.inf
        return (x1 + x2) / (x1 * x2) * lq - i1 / x1 - i2 / x2

    g1 = np.geomspace(-a * 1e-6, -a, grid)
    g2 = np.geomspace(b * 1e-6, b, grid)
    # the objective is an outer sum, so one Legendre evaluation per axis point
    i1 = np.array([legendre(tab, -u) for u in g1])
    i2 = np.array([legendre(tab, v) for v in g2])
    with np.errstate(invalid="ignore"):
        vals = (g1[:, None] + g2[None, :]) / np.outer(g1, g2) * lq - (i1 / g1)[:, None] - (i2 / g2)[None, :]
    vals = np.where(np.isnan(vals), -np.inf, vals)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    x1, x2 = float(g1[i]), float(g2[j])
    best = vals[i, j]
    lo1, hi1 = float(g1[max(i - 1, 0)]), float(g1[min(i + 1, grid - 1)])
    lo2, hi2 = float(g2[max(j - 1, 0)]), float(g2[min(j + 1, grid - 1)])
    for _ in range(20):
        x1, v1 = golden_min(lambda u: -obj(u, x2), lo1, hi1, tol=1e-12)
        x2, v2 = golden_min(lambda v: -obj(x1, v), lo2, hi2, tol=1e-12)
        new = -v2
        if new - best < 1e-14:
            best = max(best, new)
            break
        best = new
    return best


def transience_margin(a_law: ALaw, off: OffspringLaw) -> float:
    """``inf_{[0,1]} E[A^t] - 1/m``; positive means transient."""
    return _min_moment_on_unit(a_law) - 1.0 / off.mean
