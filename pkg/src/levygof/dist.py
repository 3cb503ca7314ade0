"""Lévy law with location 0 and the alternative families used against it.

The standard Lévy density is ``f0(x) = exp(-1/(2x)) / sqrt(2 pi x^3)`` and
the scale family is ``f(x; lam) = f0(x / lam) / lam``.  Samples are drawn as
``lam / Z**2`` with ``Z`` standard normal.

Randomness is always supplied through an :class:`RngStream`, a value type
naming a counter-based Philox substream, so that replication ``r`` of a
simulation is reproducible independently of how work is scheduled.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError, UnsupportedFamilyError

__all__ = [
    "RngStream",
    "levy_pdf",
    "levy_logpdf",
    "levy_cdf",
    "levy_sf",
    "levy_quantile",
    "levy_sample",
    "log_levy_cdf",
    "Alternative",
    "parse_alternative",
    "alt_sample",
    "alt_theta_score",
    "POWER_ALTERNATIVES",
    "BAHADUR_ALTERNATIVES",
]

_LOG_TINY = math.log(np.finfo(float).tiny)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class RngStream:
    """Counter-based random substream identified by ``(seed, stream_id)``.

    Both fields are unsigned 64-bit integers.  The pair is used as the
    128-bit Philox key, so distinct pairs give statistically independent
    streams and the same pair always replays the same draws.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) < 2**64):
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        key = (int(self.stream_id) << 64) | int(self.seed)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def _check_scale(scale: float) -> float:
    scale = float(scale)
    if not (scale > 0.0 and math.isfinite(scale)):
        raise DomainError(f"scale must be positive and finite, got {scale!r}")
    return scale


def _check_positive(x, what: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.size and not np.all(arr > 0.0):
        raise DomainError(f"{what} must be strictly positive")
    return arr


def _scalar_or_array(arr: np.ndarray, like):
    return float(arr) if np.ndim(like) == 0 else arr


def levy_logpdf(x, scale: float = 1.0):
    """Log-density of the Lévy law with scale ``scale`` (location 0)."""
    lam = _check_scale(scale)
    arr = _check_positive(x)
    with np.errstate(over="ignore", divide="ignore"):
        out = 0.5 * np.log(lam) - _HALF_LOG_2PI - lam / (2.0 * arr) - 1.5 * np.log(arr)
    return _scalar_or_array(out, x)


def levy_pdf(x, scale: float = 1.0):
    """Density ``sqrt(lam/(2 pi)) exp(-lam/(2x)) x^(-3/2)``.

    Evaluated in log space; returns exactly 0 where the log-density falls
    below the log of the smallest positive double.
    """
    logp = np.asarray(levy_logpdf(x, scale))
    out = np.where(logp < _LOG_TINY, 0.0, np.exp(np.maximum(logp, _LOG_TINY)))
    return _scalar_or_array(out, x)


def levy_cdf(x, scale: float = 1.0):
    """Distribution function ``erfc(sqrt(lam / (2x)))``."""
    lam = _check_scale(scale)
    arr = _check_positive(x)
    out = special.erfc(np.sqrt(lam / (2.0 * arr)))
    return _scalar_or_array(out, x)


def levy_sf(x, scale: float = 1.0):
    """Survival function ``erf(sqrt(lam / (2x)))``, accurate in the upper tail."""
    lam = _check_scale(scale)
    arr = _check_positive(x)
    out = special.erf(np.sqrt(lam / (2.0 * arr)))
    return _scalar_or_array(out, x)


def log_levy_cdf(x, scale: float = 1.0):
    """``log F(x; lam)`` without underflow for small ``x``."""
    lam = _check_scale(scale)
    arr = _check_positive(x)
    # erfc(u) = 2 Phi(-u sqrt 2)
    out = math.log(2.0) + special.log_ndtr(-np.sqrt(lam / arr))
    return _scalar_or_array(out, x)


def levy_quantile(p, scale: float = 1.0):
    """Quantile function ``lam / (2 erfcinv(p)^2)`` for ``0 < p < 1``."""
    lam = _check_scale(scale)
    parr = np.asarray(p, dtype=float)
    if parr.size and not np.all((parr > 0.0) & (parr < 1.0)):
        raise DomainError("p must lie in the open interval (0, 1)")
    e = special.erfcinv(parr)
    out = lam / (2.0 * e * e)
    return _scalar_or_array(out, p)


def _open_uniform(gen: np.random.Generator, n: int) -> np.ndarray:
    # Uniforms on the open interval (0, 1), so inverse-cdf maps never hit 0 or inf.
    return (gen.integers(0, 2**53, size=n).astype(float) + 0.5) * 2.0**-53


def _standard_normal_nonzero(gen: np.random.Generator, n: int) -> np.ndarray:
    z = gen.standard_normal(n)
    while True:
        bad = z == 0.0
        if not bad.any():
            return z
        z[bad] = gen.standard_normal(int(bad.sum()))


def _standard_levy(gen: np.random.Generator, n: int) -> np.ndarray:
    z = _standard_normal_nonzero(gen, n)
    return 1.0 / (z * z)


def levy_sample(n: int, scale: float = 1.0, rng=None) -> np.ndarray:
    """Draw ``n`` i.i.d. Lévy(0, scale) variates as ``scale / Z**2``."""
    lam = _check_scale(scale)
    if int(n) < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    if rng is None:
        raise TypeError("an RngStream (or numpy Generator) is required")
    gen = _as_generator(rng)
    return lam * _standard_levy(gen, int(n))


def _f0(x):
    return levy_pdf(x, 1.0)


def _F0(x):
    return levy_cdf(x, 1.0)


# ---------------------------------------------------------------------------
# Alternatives
# ---------------------------------------------------------------------------

# family name -> (number of parameters, display template)
_FAMILIES = {
    "Burr": 3,
    "Chen": 2,
    "FR": 2,
    "Gamma": 2,
    "LL": 2,
    "LN": 2,
    "Chi2": 1,
    "HN": 2,
    "LG": 2,
    "W": 2,
    "Levy": 1,
    "g1": 1,
    "g2": 0,
    "g3": 1,
    "g4": 0,
    "g5": 0,
}
_THETA_FAMILIES = ("g1", "g2", "g3", "g4", "g5")


@dataclass(frozen=True)
class Alternative:
    """A named alternative distribution on ``(0, inf)``.

    Parameters follow the densities as written in the power study, e.g.
    ``Alternative("Burr", (1.5, 0.5, 0.5))`` or ``Alternative("W", (2, 1))``.
    Gamma and shifted log-gamma use the *rate* parameterisation.  The
    families ``g1``..``g5`` are one-parameter perturbations of the standard
    Lévy law indexed by ``theta``; ``g1`` carries the mixing scale and ``g3``
    the Lehmann exponent as their single parameter.

    ``Levy`` with parameter ``lam`` is the null law itself, useful for size
    rows in power tables.
    """

    family: str
    params: tuple = ()
    theta: float = 0.0
    _label: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise UnsupportedFamilyError(f"unknown family {self.family!r}")
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if len(params) != _FAMILIES[self.family]:
            raise DomainError(
                f"{self.family} takes {_FAMILIES[self.family]} parameter(s), got {len(params)}"
            )
        fam = self.family
        if fam == "LN":
            if not params[1] > 0:
                raise DomainError("LN requires b > 0")
        elif fam == "HN":
            if not params[1] > 0 or params[0] < 0:
                raise DomainError("HN requires a >= 0 and b > 0")
        elif fam == "Chi2":
            if not params[0] > 0:
                raise DomainError("Chi2 requires positive degrees of freedom")
        elif not all(p > 0 for p in params):
            raise DomainError(f"{fam} parameters must be strictly positive")
        th = float(self.theta)
        object.__setattr__(self, "theta", th)
        if fam in ("g1", "g3"):
            if not (0.0 <= th < 1.0):
                raise DomainError(f"{fam} requires theta in [0, 1)")
        elif fam == "g5":
            if not (0.0 <= th <= 1.0 / math.pi):
                raise DomainError("g5 requires theta in [0, 1/pi]")
        elif fam in ("g2", "g4"):
            if th < 0.0:
                raise DomainError(f"{fam} requires theta >= 0")
        elif th != 0.0:
            raise DomainError(f"theta is meaningless for {fam}")

    @property
    def is_theta_family(self) -> bool:
        return self.family in _THETA_FAMILIES

    @property
    def label(self) -> str:
        if self._label is not None:
            return self._label
        fam, p = self.family, self.params
        fmt = ", ".join(_fmt_num(v) for v in p)
        if fam == "g1":
            base = f"g1[{_fmt_num(p[0])}]"
        elif fam == "g3":
            base = f"g3[{_fmt_num(p[0])}]"
        elif fam in ("g2", "g4", "g5"):
            base = fam
        elif fam == "Levy":
            base = f"Levy(0, {fmt})"
        else:
            base = f"{fam}({fmt})"
        if self.is_theta_family and self.theta:
            base += f"@{_fmt_num(self.theta)}"
        return base

    def with_theta(self, theta: float) -> "Alternative":
        return Alternative(self.family, self.params, theta)

    # -- densities -------------------------------------------------------
    def pdf(self, x):
        """Density at ``x > 0`` (zero outside the support for HN)."""
        xa = _check_positive(x)
        fam, p, th = self.family, self.params, self.theta
        with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
            if fam == "Burr":
                a, b, c = p
                z = xa / a
                out = c * b * z ** (b - 1.0) / (a * (1.0 + z**b) ** (c + 1.0))
            elif fam == "Chen":
                nu, lam = p
                xl = xa**lam
                out = nu * lam * xa ** (lam - 1.0) * np.exp(nu * (1.0 - np.exp(xl)) + xl)
                out = np.where(np.isfinite(out), out, 0.0)
            elif fam == "FR":
                a, b = p
                z = xa / b
                out = (a / b) * z ** (-(a + 1.0)) * np.exp(-(z ** (-a)))
                out = np.where(np.isfinite(out), out, 0.0)
            elif fam == "Gamma":
                a, rate = p
                out = np.exp(
                    a * math.log(rate) + (a - 1.0) * np.log(xa) - rate * xa - special.gammaln(a)
                )
            elif fam == "LL":
                a, b = p
                z = xa / b
                out = (a / b) * z ** (a - 1.0) / (1.0 + z**a) ** 2
            elif fam == "LN":
                m, s = p
                out = np.exp(-((np.log(xa) - m) ** 2) / (2 * s * s)) / (
                    math.sqrt(2 * math.pi) * s * xa
                )
            elif fam == "Chi2":
                k = p[0] / 2.0
                out = np.exp((k - 1.0) * np.log(xa) - xa / 2.0 - k * math.log(2.0) - special.gammaln(k))
            elif fam == "HN":
                a, b = p
                out = np.where(
                    xa > a, 2.0 * np.exp(-((xa - a) ** 2) / (2 * b * b)) / math.sqrt(2 * math.pi * b * b), 0.0
                )
            elif fam == "LG":
                a, rate = p
                lx = np.log1p(xa)
                out = np.exp(
                    a * math.log(rate) + (a - 1.0) * np.log(lx) - (rate + 1.0) * lx - special.gammaln(a)
                )
            elif fam == "W":
                a, b = p
                z = xa / b
                out = (a / b) * z ** (a - 1.0) * np.exp(-(z**a))
            elif fam == "Levy":
                out = np.asarray(levy_pdf(xa, p[0]))
            else:
                out = _f0(xa) * (1.0 + th * self.score_ratio(xa)) if fam in ("g1", "g3", "g5") else self._g_pdf(xa)
        return _scalar_or_array(np.asarray(out, dtype=float), x)

    def _g_pdf(self, xa):
        th = self.theta
        F = _F0(xa)
        if self.family == "g2":
            return (1.0 + th) * F**th * _f0(xa)
        # g4
        return (1.0 + th * F) * _f0(xa) * np.exp(-th * (1.0 - F))

    def cdf(self, x):
        """Distribution function at ``x > 0``."""
        xa = _check_positive(x)
        fam, p, th = self.family, self.params, self.theta
        with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
            if fam == "Burr":
                a, b, c = p
                out = -np.expm1(-c * np.log1p((xa / a) ** b))
            elif fam == "Chen":
                nu, lam = p
                out = -np.expm1(nu * (1.0 - np.exp(xa**lam)))
            elif fam == "FR":
                a, b = p
                out = np.exp(-((xa / b) ** (-a)))
            elif fam == "Gamma":
                a, rate = p
                out = special.gammainc(a, rate * xa)
            elif fam == "LL":
                a, b = p
                out = 1.0 / (1.0 + (xa / b) ** (-a))
            elif fam == "LN":
                m, s = p
                out = special.ndtr((np.log(xa) - m) / s)
            elif fam == "Chi2":
                out = special.gammainc(p[0] / 2.0, xa / 2.0)
            elif fam == "HN":
                a, b = p
                out = np.where(xa > a, special.erf((xa - a) / (b * math.sqrt(2.0))), 0.0)
            elif fam == "LG":
                a, rate = p
                out = special.gammainc(a, rate * np.log1p(xa))
            elif fam == "W":
                a, b = p
                out = -np.expm1(-((xa / b) ** a))
            elif fam == "Levy":
                out = np.asarray(levy_cdf(xa, p[0]))
            else:
                F = _F0(xa)
                if fam == "g1":
                    out = (1.0 - th) * F + th * np.asarray(levy_cdf(xa, p[0]))
                elif fam == "g2":
                    out = F ** (1.0 + th)
                elif fam == "g3":
                    out = (1.0 - th) * F + th * F ** p[0]
                elif fam == "g4":
                    out = F * np.exp(-th * (1.0 - F))
                else:
                    out = F - th * np.sin(math.pi * F)
        return _scalar_or_array(np.asarray(out, dtype=float), x)

    # -- theta score -------------------------------------------------------
    def score_ratio(self, x):
        """``g'_theta(x; 0) / f0(x)`` for the families g1..g5.

        Working with the ratio keeps quadrature integrands bounded near the
        origin, where ``f0`` underflows.
        """
        if not self.is_theta_family:
            raise UnsupportedFamilyError(f"{self.family} has no theta score")
        xa = _check_positive(x)
        fam, p = self.family, self.params
        if fam == "g1":
            lam = p[0]
            # f(x; lam) / f0(x) = sqrt(lam) exp(-(lam - 1) / (2x))
            with np.errstate(over="ignore"):
                out = math.sqrt(lam) * np.exp(-(lam - 1.0) / (2.0 * xa)) - 1.0
        elif fam == "g2":
            out = 1.0 + np.asarray(log_levy_cdf(xa))
        elif fam == "g3":
            beta = p[0]
            out = beta * np.exp((beta - 1.0) * np.asarray(log_levy_cdf(xa))) - 1.0
        elif fam == "g4":
            out = 2.0 * _F0(xa) - 1.0
        else:
            out = -math.pi * np.cos(math.pi * _F0(xa))
        return _scalar_or_array(np.asarray(out, dtype=float), x)

    def theta_score(self, x):
        """Derivative of the density with respect to theta at theta = 0."""
        ratio = np.asarray(self.score_ratio(x))
        out = np.asarray(_f0(np.asarray(x, dtype=float))) * ratio
        return _scalar_or_array(out, x)

    # -- sampling -----------------------------------------------------------
    def sample(self, n: int, rng) -> np.ndarray:
        """Draw ``n`` i.i.d. variates (strictly positive)."""
        if int(n) < 1:
            raise DomainError(f"n must be >= 1, got {n!r}")
        gen = _as_generator(rng)
        n = int(n)
        out = self._draw(gen, n)
        # A zero can only arise from underflow in a shape < 1 sampler; redraw it.
        while True:
            bad = ~(out > 0.0)
            if not bad.any():
                return out
            out[bad] = self._draw(gen, int(bad.sum()))

    def _draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        fam, p, th = self.family, self.params, self.theta
        if fam == "Burr":
            a, b, c = p
            u = _open_uniform(gen, n)
            # F^{-1}(u) = a ((1-u)^{-1/c} - 1)^{1/b}
            return a * np.expm1(-np.log1p(-u) / c) ** (1.0 / b)
        if fam == "Chen":
            nu, lam = p
            u = _open_uniform(gen, n)
            return np.log1p(-np.log1p(-u) / nu) ** (1.0 / lam)
        if fam == "FR":
            a, b = p
            u = _open_uniform(gen, n)
            return b * (-np.log(u)) ** (-1.0 / a)
        if fam == "LL":
            a, b = p
            u = _open_uniform(gen, n)
            return b * (u / (1.0 - u)) ** (1.0 / a)
        if fam == "W":
            a, b = p
            u = _open_uniform(gen, n)
            return b * (-np.log1p(-u)) ** (1.0 / a)
        if fam == "LN":
            m, s = p
            return np.exp(m + s * gen.standard_normal(n))
        if fam == "Gamma":
            a, rate = p
            return gen.gamma(a, 1.0 / rate, size=n)
        if fam == "Chi2":
            return gen.gamma(p[0] / 2.0, 2.0, size=n)
        if fam == "HN":
            a, b = p
            return a + b * np.abs(gen.standard_normal(n))
        if fam == "LG":
            a, rate = p
            return np.expm1(gen.gamma(a, 1.0 / rate, size=n))
        if fam == "Levy":
            return p[0] * _standard_levy(gen, n)
        if fam == "g1":
            mix = gen.random(n) < th
            x = _standard_levy(gen, n)
            return np.where(mix, p[0] * x, x)
        if fam == "g2":
            u = _open_uniform(gen, n)
            return np.asarray(levy_quantile(u ** (1.0 / (1.0 + th))))
        if fam == "g3":
            mix = gen.random(n) < th
            u = _open_uniform(gen, n)
            lehmann = np.asarray(levy_quantile(u ** (1.0 / p[0])))
            return np.where(mix, lehmann, _standard_levy(gen, n))
        raise UnsupportedFamilyError(f"sampling is not implemented for {fam}")


def _fmt_num(v: float) -> str:
    return f"{v:g}"


_ALT_ALIASES = {
    "burr": "Burr",
    "chen": "Chen",
    "fr": "FR",
    "frechet": "FR",
    "gamma": "Gamma",
    "g": "Gamma",
    "ll": "LL",
    "loglogistic": "LL",
    "ln": "LN",
    "lognormal": "LN",
    "chi2": "Chi2",
    "chisq": "Chi2",
    "hn": "HN",
    "halfnormal": "HN",
    "lg": "LG",
    "w": "W",
    "weibull": "W",
    "levy": "Levy",
    "lévy": "Levy",
}

_ALT_RE = re.compile(r"^\s*([A-Za-zé0-9]+?)\s*(?:[\(\[]([^\)\]]*)[\)\]])?\s*(?:@\s*([0-9.eE+-]+))?\s*$")


def parse_alternative(text: str) -> Alternative:
    """Parse labels such as ``"W(2,1)"``, ``"Burr(1.5,0.5,0.5)"``, ``"g1[10]"``,
    ``"g2@0.1"``, ``"Levy(0,2)"`` or ``"chi2(3)"``.
    """
    m = _ALT_RE.match(text)
    if not m:
        raise DomainError(f"cannot parse alternative {text!r}")
    name, args, theta = m.group(1), m.group(2), m.group(3)
    params = [float(s) for s in args.split(",")] if args and args.strip() else []
    low = name.lower()
    if low in ("g1", "g2", "g3", "g4", "g5"):
        fam = low
        if fam == "g1" and not params:
            params = [10.0]
        if fam == "g3" and not params:
            params = [3.0]
    elif low in ("gamma", "g", "γ"):
        fam = "Gamma"
    elif low in _ALT_ALIASES:
        fam = _ALT_ALIASES[low]
    else:
        raise UnsupportedFamilyError(f"unknown alternative family {name!r}")
    if fam == "Levy" and len(params) == 2:
        if params[0] != 0.0:
            raise UnsupportedFamilyError("only location 0 is supported for Levy")
        params = params[1:]
    if fam == "Chi2" and not params:
        raise DomainError("Chi2 needs degrees of freedom")
    return Alternative(fam, tuple(params), float(theta) if theta else 0.0)


def alt_sample(n: int, alt: Alternative, rng) -> np.ndarray:
    """Draw ``n`` variates from ``alt`` (see :meth:`Alternative.sample`)."""
    return alt.sample(n, rng)


def alt_theta_score(x, alt: Alternative):
    """``d g(x; theta) / d theta`` at ``theta = 0`` for g1..g5."""
    return alt.theta_score(x)


# Alternatives of the power study, in table order.
POWER_ALTERNATIVES = tuple(
    parse_alternative(s)
    for s in (
        "Levy(0, 0.5)",
        "Levy(0, 1)",
        "Levy(0, 2)",
        "Burr(1.5, 0.5, 0.5)",
        "LN(0, 1)",
        "Chi2(3)",
        "HN(0, 1)",
        "Gamma(3, 2)",
        "W(2, 1)",
        "Gamma(0.4, 2)",
        "W(0.4, 2)",
        "LN(0, 2)",
        "Chen(2, 0.4)",
        "LG(7, 2)",
        "LL(1, 2)",
        "FR(1, 1)",
    )
)

# Local alternatives of the efficiency tables.
BAHADUR_ALTERNATIVES = (
    Alternative("g1", (10.0,)),
    Alternative("g2"),
    Alternative("g3", (3.0,)),
    Alternative("g4"),
    Alternative("g5"),
)
