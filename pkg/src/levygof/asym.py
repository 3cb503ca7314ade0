"""Asymptotic constants and local Bahadur efficiencies.

All expectations under the standard Lévy law are computed through the exact
substitution ``X = 1/Z^2`` with ``Z`` standard normal:

    E h(X) = sqrt(2/pi) * int_0^inf h(1/z^2) exp(-z^2/2) dz,

which replaces the heavy ``x^-3/2`` tail by a Gaussian one.  The Laplace
transform ``E exp(-s X) = exp(-sqrt(2 s))`` gives closed forms for the J
projection and covariance, and ``E (c + X)^-5/2`` has a closed form in terms
of ``erfcx`` that yields the R projection without nested quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .dist import Alternative
from .errors import DomainError, QuadratureError, UnsupportedFamilyError
from .stats import R_CONST, StatisticSpec

__all__ = [
    "QuadratureConfig",
    "levy_expectation",
    "levy_expectation_fixed",
    "mean_power_m52",
    "proj_psi",
    "cov_kernel",
    "sup_sigma2",
    "proj_zeta",
    "sigma_R2",
    "phi_I",
    "sigma_0ab",
    "sigma_T2",
    "kl_curvature",
    "kl_integrals",
    "J_numerator",
    "bahadur_slope_coefficient",
    "EfficiencyResult",
    "efficiency",
    "efficiency_table",
    "asymptotic_critical_value",
    "curve_A",
    "curve_sigma2",
]

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_Z_TINY = 1e-150


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for adaptive quadrature (absolute, relative, subdivisions)."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 400

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if int(self.max_subdivisions) < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureConfig()


def _quad(f, lo, hi, cfg: QuadratureConfig, what: str) -> float:
    val, err, *rest = integrate.quad(
        f, lo, hi, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=int(cfg.max_subdivisions), full_output=1
    )
    target = max(cfg.abs_tol, cfg.rel_tol * abs(val))
    if not math.isfinite(val) or err > 50.0 * target:
        raise QuadratureError(f"quadrature for {what} did not converge", val, err)
    return float(val)


def levy_expectation(h: Callable[[float], float], cfg: QuadratureConfig | None = None) -> float:
    """``E h(X)`` for ``X`` standard Lévy, by adaptive quadrature in ``z = X^-1/2``.

    ``h`` is called with scalar arguments.  Raises :class:`QuadratureError`
    if the requested tolerance is not met.
    """
    cfg = cfg or DEFAULT_QUAD

    def integrand(z):
        z = max(z, _Z_TINY)
        return h(1.0 / (z * z)) * math.exp(-0.5 * z * z)

    return _SQRT_2_OVER_PI * _quad(integrand, 0.0, math.inf, cfg, "E h(X)")


def _fixed_nodes(panels: int = 24, order: int = 40, zmax: float = 12.0):
    # composite Gauss-Legendre in z on [0, zmax]; exp(-zmax^2/2) ~ 5e-32
    gx, gw = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, zmax, panels + 1)
    z = np.concatenate([0.5 * (b - a) * gx + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    w = np.concatenate([0.5 * (b - a) * gw for a, b in zip(edges[:-1], edges[1:])])
    w = w * _SQRT_2_OVER_PI * np.exp(-0.5 * z * z)
    return 1.0 / (z * z), w


_FIXED_X, _FIXED_W = _fixed_nodes()


def levy_expectation_fixed(values_at_nodes: np.ndarray) -> np.ndarray:
    """Apply the fixed composite Gauss rule to values ``h(x_k)`` at :data:`FIXED_X`.

    ``values_at_nodes`` may have extra leading axes; the last axis runs over
    nodes.  Used for vectorised scans where thousands of expectations are
    needed; adaptive quadrature is used for anything reported.
    """
    return np.asarray(values_at_nodes) @ _FIXED_W


FIXED_X = _FIXED_X


# ---------------------------------------------------------------------------
# J: projection and covariance
# ---------------------------------------------------------------------------


def _check_t(t):
    ta = np.asarray(t, dtype=float)
    if ta.size and not np.all((ta > 0.0) & (ta < 1.0)):
        raise DomainError("t must lie in (0, 1)")
    return ta


def proj_psi(x, t, a: float = 1.0):
    """First projection of the J kernel at grid point ``t``.

    ``psi(x; t, a) = t^a (-log t)^(3/2) / 2 *
    (-2 t^(x/4) e^{-sqrt(-log t / 2)} + t^x + e^{-sqrt(-2 log t)})``.
    """
    ta = _check_t(t)
    xa = np.asarray(x, dtype=float)
    if xa.size and not np.all(xa > 0):
        raise DomainError("x must be positive")
    L = -np.log(ta)
    w = 0.5 * ta**a * L**1.5
    out = w * (-2.0 * ta ** (xa / 4.0) * np.exp(-np.sqrt(L / 2.0)) + ta**xa + np.exp(-np.sqrt(2.0 * L)))
    return float(out) if out.ndim == 0 else out


def cov_kernel(s, t, a: float = 1.0):
    """Covariance ``K(s, t)`` of the Gaussian limit of ``sqrt(n) D_n(t) t^a (-log t)^(3/2)``.

    Closed form obtained from ``4 E[psi(X; s) psi(X; t)]`` with the Lévy
    Laplace transform.
    """
    sa = _check_t(s)
    ta = _check_t(t)
    ls = -np.log(sa)
    lt = -np.log(ta)
    rs, rt = np.sqrt(ls), np.sqrt(lt)
    # the two cross terms are added as a pair so that K(s, t) == K(t, s) exactly
    cross = np.exp(-np.sqrt(2.0 * (ls + lt / 4.0)) - np.sqrt(lt / 2.0)) + np.exp(
        -np.sqrt(2.0 * (lt + ls / 4.0)) - np.sqrt(ls / 2.0)
    )
    bracket = (
        np.exp(-np.sqrt(2.0 * (ls + lt)))
        + 4.0 * np.exp(-(np.sqrt(ls + lt) + (rs + rt)) / math.sqrt(2.0))
        - np.exp(-math.sqrt(2.0) * (rs + rt))
        - 2.0 * cross
    )
    out = sa**a * ta**a * (ls * lt) ** 1.5 * bracket
    return float(out) if out.ndim == 0 else out


def _scan_then_golden(f: Callable[[float], float], lo: float, hi: float, npts: int, fvec=None, xtol=1e-10):
    """Maximise ``f`` on ``[lo, hi]``: dense scan then golden-section refinement."""
    grid = np.linspace(lo, hi, npts)
    vals = fvec(grid) if fvec is not None else np.array([f(g) for g in grid])
    i = int(np.argmax(vals))
    if i == 0 or i == npts - 1:
        return float(grid[i]), float(f(grid[i]))
    bracket = (grid[i - 1], grid[i], grid[i + 1])
    # golden section requires f(mid) to beat both ends, which holds after re-evaluation
    fl, fm, fh = f(bracket[0]), f(bracket[1]), f(bracket[2])
    if not (fm >= fl and fm >= fh):
        return float(grid[i]), float(fm)
    res = optimize.minimize_scalar(lambda u: -f(u), bracket=bracket, method="golden", options={"xtol": xtol})
    if -res.fun < fm:
        return float(grid[i]), float(fm)
    return float(res.x), float(-res.fun)


_T_LO, _T_HI = 1e-4, 1.0 - 1e-4
SCAN_POINTS = 2000


def sup_sigma2(a: float = 1.0) -> tuple[float, float]:
    """``(argmax, max)`` of ``sigma^2(t) = K(t, t)`` over ``t`` in ``(0, 1)``."""
    return _scan_then_golden(lambda t: cov_kernel(t, t, a), _T_LO, _T_HI, SCAN_POINTS, fvec=lambda g: cov_kernel(g, g, a))


def curve_sigma2(a: float = 1.0, points: int = 999) -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, 1.0, points + 2)[1:-1]
    return t, cov_kernel(t, t, a)


# ---------------------------------------------------------------------------
# R: projection and variance
# ---------------------------------------------------------------------------


def _m52_series(c: np.ndarray) -> np.ndarray:
    # E(1 + X/c)^-5/2 = sum_k (-s)^k Gamma(5/2 + k/2) / (k! Gamma(5/2)), s = sqrt(2/c)
    s = np.sqrt(2.0 / c)
    total = np.zeros_like(c)
    for k in range(13, -1, -1):
        total = total + (-s) ** k * (math.gamma(2.5 + k / 2.0) / (math.factorial(k) * math.gamma(2.5)))
    return c**-2.5 * total


def _m52_closed(c: np.ndarray) -> np.ndarray:
    sp = math.sqrt(math.pi)
    return (sp * (3 * c * c + 6 * c + 1) * special.erfcx(1.0 / np.sqrt(2 * c)) - np.sqrt(2 * c) * (5 * c + 1)) / (
        3 * sp * c**4.5
    )


_M52_SMALL, _M52_LARGE = 0.05, 1e4


def mean_power_m52(c):
    """``E (c + X)^(-5/2)`` for ``X`` standard Lévy, ``c > 0``.

    Closed form in ``erfcx`` on the bulk of the range, a series in
    ``sqrt(2/c)`` for large ``c`` (where ``c^4.5`` would overflow) and
    quadrature for small ``c`` (where the closed form cancels).
    """
    ca = np.atleast_1d(np.asarray(c, dtype=float))
    if ca.size and not np.all(ca > 0):
        raise DomainError("c must be positive")
    out = np.empty_like(ca)
    mid = (ca >= _M52_SMALL) & (ca <= _M52_LARGE)
    big = ca > _M52_LARGE
    small = ca < _M52_SMALL
    out[mid] = _m52_closed(ca[mid])
    out[big] = _m52_series(ca[big])
    for i in np.flatnonzero(small):
        ci = float(ca[i])
        out[i] = ci**-2.5 * levy_expectation(lambda x: (1.0 + x / ci) ** -2.5, QuadratureConfig(1e-14, 1e-12))
    return float(out[0]) if np.ndim(c) == 0 else out


def proj_zeta(x, a: float = 1.0):
    """First projection of the symmetric R kernel.

    ``zeta(x; a) = C [ 32 E(4a + x + X)^-5/2 - (a + x)^-5/2 / 2
    - E(a + X)^-5/2 / 2 ]`` with ``C = 3 sqrt(pi)/4``.
    """
    xa = np.asarray(x, dtype=float)
    if xa.size and not np.all(xa > 0):
        raise DomainError("x must be positive")
    if not a > 0:
        raise DomainError("a must be positive")
    out = R_CONST * (
        32.0 * np.asarray(mean_power_m52(4.0 * a + xa)) - 0.5 * (a + xa) ** -2.5 - 0.5 * mean_power_m52(a)
    )
    return float(out) if out.ndim == 0 else out


def sigma_R2(a: float = 1.0, cfg: QuadratureConfig | None = None) -> float:
    """Asymptotic variance ``sigma_R^2(a) = 4 E zeta(X; a)^2`` of ``sqrt(n) R_{n,a}``."""
    # normalise the integrand so the absolute tolerance is meaningful for large a
    scale = R_CONST * a**-2.5
    return 4.0 * scale**2 * levy_expectation(lambda x: (proj_zeta(x, a) / scale) ** 2, cfg)


def asymptotic_critical_value(a: float = 1.0, alpha: float = 0.05, cfg=None) -> float:
    """Upper ``alpha`` point of ``|N(0, sigma_R^2(a))|``."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must be in (0, 1)")
    return float(special.ndtri(1.0 - alpha / 2.0)) * math.sqrt(sigma_R2(a, cfg))


# ---------------------------------------------------------------------------
# Ibar: projection and variance
# ---------------------------------------------------------------------------


def _F0(x):
    return special.erfc(np.sqrt(0.5 / np.asarray(x, dtype=float)))


def phi_I(x: float, a: float = 1.0, b: float = 1.0, cfg: QuadratureConfig | None = None) -> float:
    """First projection of the kernel of ``Ibar^{[a,b]}``.

    ``2 - P((a x + b X2)/c >= X3) - P((a X2 + b x)/c >= X3) + P(X2 <= x)``
    with ``c = (sqrt a + sqrt b)^2``; each probability is one quadrature.
    """
    if not x > 0:
        raise DomainError("x must be positive")
    c = (math.sqrt(a) + math.sqrt(b)) ** 2
    cfg = cfg or DEFAULT_QUAD
    p1 = levy_expectation(lambda y: float(_F0((a * x + b * y) / c)), cfg)
    p2 = p1 if a == b else levy_expectation(lambda y: float(_F0((a * y + b * x) / c)), cfg)
    return 2.0 - p1 - p2 + float(_F0(x))


def _phi_I_fixed(x: np.ndarray, a: float, b: float) -> np.ndarray:
    c = (math.sqrt(a) + math.sqrt(b)) ** 2
    x = np.asarray(x, dtype=float)
    y = _FIXED_X
    p1 = levy_expectation_fixed(_F0((a * x[:, None] + b * y[None, :]) / c))
    p2 = p1 if a == b else levy_expectation_fixed(_F0((a * y[None, :] + b * x[:, None]) / c))
    return 2.0 - p1 - p2 + _F0(x)


class _PhiTable:
    """``phi_I`` at the outer quadrature abscissae, cached per ``(a, b)``.

    The outer expectation is adaptive; the inner probabilities use the fixed
    composite Gauss rule, which is accurate to ~1e-13 for these smooth
    integrands and keeps nested quadrature affordable.
    """

    _cache: dict = {}

    @classmethod
    def func(cls, a: float, b: float):
        key = (a, b)
        if key not in cls._cache:
            cls._cache[key] = lambda x: float(_phi_I_fixed(np.array([x]), a, b)[0])
        return cls._cache[key]


def sigma_0ab(a: float = 1.0, b: float = 1.0, cfg: QuadratureConfig | None = None) -> float:
    """Asymptotic variance ``Var phi(X)`` of ``sqrt(n) Ibar^{[a,b]}``."""
    if not (a > 0 and b > 0):
        raise DomainError("a and b must be positive")
    phi = _PhiTable.func(float(a), float(b))
    m = levy_expectation(phi, cfg)
    return levy_expectation(lambda x: (phi(x) - m) ** 2, cfg)


def sigma_T2(cfg: QuadratureConfig | None = None) -> float:
    """Asymptotic variance of ``sqrt(n) Ibar^{[1,1]}``."""
    return sigma_0ab(1.0, 1.0, cfg)


# ---------------------------------------------------------------------------
# Kullback-Leibler curvature and slopes
# ---------------------------------------------------------------------------


def _ratio(alt: Alternative) -> Callable[[float], float]:
    if not alt.is_theta_family:
        raise UnsupportedFamilyError(f"{alt.family} is not a local alternative (g1..g5)")
    return lambda x: float(alt.score_ratio(x))


def kl_integrals(alt: Alternative, cfg: QuadratureConfig | None = None) -> tuple[float, float]:
    """``(int g'^2 / f0, int g'/x)``, the two integrals of the KL curvature."""
    r = _ratio(alt)
    i1 = levy_expectation(lambda x: r(x) ** 2, cfg)
    i2 = levy_expectation(lambda x: r(x) / x, cfg)
    return i1, i2


def kl_curvature(alt: Alternative, cfg: QuadratureConfig | None = None) -> float:
    """Coefficient of ``theta^2`` in twice the minimal KL distance to the null family.

    ``int g'^2/f0 - (1/2) (int g'/x)^2`` at ``lam = 1``.
    """
    i1, i2 = kl_integrals(alt, cfg)
    return i1 - 0.5 * i2 * i2


def J_numerator(t: float, a: float, alt: Alternative, cfg: QuadratureConfig | None = None) -> float:
    """``int psi(x; t, a) g'(x) dx``; its square is the curve ``A(t)``."""
    r = _ratio(alt)
    return levy_expectation(lambda x: proj_psi(x, t, a) * r(x), cfg)


def _J_numerator_fixed(tgrid: np.ndarray, a: float, alt: Alternative) -> np.ndarray:
    r = np.asarray(alt.score_ratio(_FIXED_X))
    psi = proj_psi(_FIXED_X[None, :], tgrid[:, None], a)
    return levy_expectation_fixed(psi * r[None, :])


def sup_A(a: float, alt: Alternative, cfg: QuadratureConfig | None = None) -> tuple[float, float]:
    """``(argmax, max)`` of ``A(t) = (int psi(x; t, a) g'(x) dx)^2``."""
    return _scan_then_golden(
        lambda t: J_numerator(t, a, alt, cfg) ** 2,
        _T_LO,
        _T_HI,
        SCAN_POINTS,
        fvec=lambda g: _J_numerator_fixed(g, a, alt) ** 2,
    )


def curve_A(a: float, alt: Alternative, points: int = 999) -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, 1.0, points + 2)[1:-1]
    return t, _J_numerator_fixed(t, a, alt) ** 2


def bahadur_slope_coefficient(spec: StatisticSpec, alt: Alternative, cfg: QuadratureConfig | None = None) -> float:
    """Coefficient of ``theta^2`` in the local approximate Bahadur slope.

    J: ``sup_t (2 |int psi g'|)^2 / sup_t K(t, t)``.
    R: ``(2 int zeta g')^2 / sigma_R^2(a)``.
    Ibar: ``(int phi g')^2 / sigma_0^2(a, b)``.
    """
    fam = spec.family
    if fam == "J":
        _, num = sup_A(spec.a, alt, cfg)
        _, den = sup_sigma2(spec.a)
        return 4.0 * num / den
    if fam in ("R", "Rstd"):
        a = spec.a
        r = _ratio(alt)
        scale = R_CONST * a**-2.5
        m = scale * levy_expectation(lambda x: proj_zeta(x, a) / scale * r(x), cfg)
        return 4.0 * m * m / sigma_R2(a, cfg)
    if fam == "Ibar":
        r = _ratio(alt)
        phi = _PhiTable.func(spec.a, spec.b)
        m = levy_expectation(lambda x: phi(x) * r(x), cfg)
        return m * m / sigma_0ab(spec.a, spec.b, cfg)
    raise UnsupportedFamilyError(f"no Bahadur slope for {fam}")


@dataclass(frozen=True)
class EfficiencyResult:
    statistic: StatisticSpec
    alternative: Alternative
    kl_curvature: float
    slope_coefficient: float
    efficiency: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "efficiency", self.slope_coefficient / self.kl_curvature)

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic.label.split("/")[0],
            "alternative": self.alternative.label,
            "kl_curvature": self.kl_curvature,
            "slope_coefficient": self.slope_coefficient,
            "efficiency": self.efficiency,
        }


def efficiency(spec: StatisticSpec, alt: Alternative, cfg: QuadratureConfig | None = None, _kl=None) -> EfficiencyResult:
    kl = kl_curvature(alt, cfg) if _kl is None else _kl
    return EfficiencyResult(spec, alt, kl, bahadur_slope_coefficient(spec, alt, cfg))


def efficiency_table(
    specs: Sequence[StatisticSpec], alts: Sequence[Alternative], cfg: QuadratureConfig | None = None
) -> list[list[EfficiencyResult | Exception]]:
    """Efficiencies for every (statistic, alternative) pair.

    A failing cell holds the exception instead of a result.
    """
    kls = {}
    for alt in alts:
        try:
            kls[alt] = kl_curvature(alt, cfg)
        except Exception as exc:  # per-cell capture
            kls[alt] = exc
    table = []
    for sp in specs:
        row = []
        for alt in alts:
            kl = kls[alt]
            if isinstance(kl, Exception):
                row.append(kl)
                continue
            try:
                row.append(efficiency(sp, alt, cfg, _kl=kl))
            except Exception as exc:
                row.append(exc)
        table.append(row)
    return table


