"""Goodness-of-fit statistics for the Lévy law with unknown scale.

Every statistic here is scale free: multiplying the sample by ``c > 0``
leaves its value unchanged (up to rounding), so null distributions can be
simulated from the standard Lévy law.

``J`` and ``R`` work on the rescaled sample ``Y = X / lam_hat`` and compare
the V-empirical Laplace transform of ``(Y_i + Y_j)/4`` with that of ``Y``,
which coincide under the null by stability.  ``Ibar`` compares the empirical
df of ``(a X_i + b X_j)/(sqrt a + sqrt b)^2`` with that of ``X`` directly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import special

from . import _kernels
from .errors import DegenerateStatisticError, DomainError
from .estimate import EstimatorKind, as_sample, estimate_lambda

__all__ = [
    "Tail",
    "StatisticSpec",
    "StatisticValue",
    "stat_J",
    "stat_R",
    "stat_R_standardized",
    "stat_Ibar",
    "stat_edf",
    "quantile_cond_variance",
    "stat_N1",
    "evaluate",
    "evaluate_many",
    "kernel_Z",
    "R_CONST",
]

R_CONST = 3.0 * math.sqrt(math.pi) / 4.0

FAMILIES = ("J", "R", "Rstd", "Ibar", "KS", "CVM", "AD", "N1a", "N1b")
_USES_ESTIMATOR = {"J", "R", "Rstd", "KS", "CVM", "AD"}
_USES_A = {"J", "R", "Rstd", "Ibar"}
J_WEIGHTS = ("table", "printed")


class Tail:
    """Rejection directions."""

    UPPER = "upper"
    ABS = "abs"
    EQUAL = "equal"
    ALL = (UPPER, ABS, EQUAL)


_SWITCHABLE_TAIL = {"Ibar", "N1a", "N1b"}

_DEFAULT_TAIL = {
    "J": Tail.UPPER,
    "KS": Tail.UPPER,
    "CVM": Tail.UPPER,
    "AD": Tail.UPPER,
    "R": Tail.ABS,
    "Rstd": Tail.ABS,
    "Ibar": Tail.UPPER,
    "N1a": Tail.EQUAL,
    "N1b": Tail.EQUAL,
}


@dataclass(frozen=True)
class StatisticSpec:
    """Which statistic to compute.

    Parameters
    ----------
    family : str
        One of ``J, R, Rstd, Ibar, KS, CVM, AD, N1a, N1b``.
    a, b : float
        Tuning parameters.  ``J``, ``R`` and ``Rstd`` use ``a``; ``Ibar`` uses
        both.  Ignored otherwise.
    estimator : EstimatorKind
        Scale estimator; ignored by ``Ibar`` and ``N1*``, which need none.
    sigma : float, optional
        Divisor for ``Rstd``.  When omitted, ``sqrt(sigma_R2(a))`` is
        computed by quadrature on first use.
    tail_override : str, optional
        Override of the rejection direction for ``Ibar``, ``N1a`` and ``N1b``.
        ``Ibar`` rejects for large values by default (``"abs"`` gives the
        symmetric two-sided region); ``N1*`` default to equal tails and accept
        ``"abs"``.
    weight : str
        J only.  ``"table"`` (default) weights the grid by
        ``t^a (-log t)^3 / 2``, the convention that reproduces the published
        critical values, powers and p-values.  ``"printed"`` uses
        ``t^a (-log t)^(3/2)``, the weight of the displayed formula and of the
        limiting-process covariance.
    """

    family: str
    a: float = 1.0
    b: float = 1.0
    estimator: EstimatorKind = EstimatorKind.MLE
    sigma: float | None = None
    tail_override: str | None = None
    weight: str = "table"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown statistic family {self.family!r}")
        object.__setattr__(self, "estimator", EstimatorKind.parse(self.estimator))
        a, b = float(self.a), float(self.b)
        if self.family not in _USES_A:
            a = b = 1.0
        elif self.family != "Ibar":
            b = 1.0
        if not (a > 0 and math.isfinite(a) and b > 0 and math.isfinite(b)):
            raise DomainError("a and b must be positive and finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.family not in _USES_ESTIMATOR:
            object.__setattr__(self, "estimator", EstimatorKind.MLE)
        if self.sigma is not None:
            if self.family != "Rstd":
                raise DomainError("sigma only applies to Rstd")
            if not float(self.sigma) > 0:
                raise DomainError("sigma must be positive")
            object.__setattr__(self, "sigma", float(self.sigma))
        if self.weight not in J_WEIGHTS:
            raise DomainError(f"weight must be one of {J_WEIGHTS}")
        if self.family != "J":
            object.__setattr__(self, "weight", "table")
        if self.tail_override is not None:
            if self.tail_override not in Tail.ALL:
                raise DomainError(f"tail must be one of {Tail.ALL}")
            if self.family not in _SWITCHABLE_TAIL and self.tail_override != _DEFAULT_TAIL[self.family]:
                raise DomainError("the rejection direction can only be switched for Ibar, N1a and N1b")

    @property
    def tail(self) -> str:
        return self.tail_override or _DEFAULT_TAIL[self.family]

    @property
    def uses_estimator(self) -> bool:
        return self.family in _USES_ESTIMATOR

    @property
    def label(self) -> str:
        f = self.family
        if f in ("J", "R", "Rstd"):
            base = f"{f}{_fmt(self.a)}"
        elif f == "Ibar":
            base = f"I[{_fmt(self.a)},{_fmt(self.b)}]"
        else:
            base = f
        if self.uses_estimator:
            base += f"/{self.estimator.name}"
        if f == "J" and self.weight != "table":
            base += f"/{self.weight}"
        if self.tail_override and self.tail_override != _DEFAULT_TAIL[f]:
            base += f"/{self.tail_override}"
        return base

    def with_estimator(self, estimator) -> "StatisticSpec":
        return StatisticSpec(self.family, self.a, self.b, estimator, self.sigma, self.tail_override, self.weight)

    @classmethod
    def parse(cls, text: str, estimator=None) -> "StatisticSpec":
        """Parse labels such as ``J1``, ``R0.5/MBE``, ``I[2,3]``, ``KS``, ``N1a``.

        An explicit ``estimator`` argument overrides a ``/MLE`` or ``/MBE``
        suffix.
        """
        parts = [p.strip() for p in str(text).split("/")]
        head, rest = parts[0], parts[1:]
        est = EstimatorKind.MLE
        tail = None
        weight = "table"
        for r in rest:
            if r.lower() in Tail.ALL:
                tail = r.lower()
            elif r.lower() in J_WEIGHTS:
                weight = r.lower()
            else:
                est = EstimatorKind.parse(r)
        if estimator is not None:
            est = EstimatorKind.parse(estimator)
        m = re.fullmatch(r"(?i)(?:I|Ibar)\s*\[?\s*([0-9.eE+-]+)\s*,\s*([0-9.eE+-]+)\s*\]?", head)
        if m:
            return cls("Ibar", float(m.group(1)), float(m.group(2)), est, tail_override=tail)
        m = re.fullmatch(r"(?i)(Rstd|J|R)\s*[_(]?\s*([0-9.eE+-]+)\s*\)?", head)
        if m:
            fam = {"rstd": "Rstd", "j": "J", "r": "R"}[m.group(1).lower()]
            return cls(fam, float(m.group(2)), 1.0, est, tail_override=tail, weight=weight if fam == "J" else "table")
        up = head.upper()
        for fam in ("KS", "CVM", "AD"):
            if up == fam:
                return cls(fam, estimator=est)
        if up in ("N1A", "N1B"):
            return cls("N1" + up[-1].lower(), tail_override=tail)
        if up in ("I", "IBAR", "T"):
            return cls("Ibar", 1.0, 1.0)
        raise DomainError(f"cannot parse statistic {text!r}")


def _fmt(v: float) -> str:
    return f"{v:g}"


@dataclass(frozen=True)
class StatisticValue:
    value: float
    n: int
    spec: StatisticSpec = field(compare=False)

    def __float__(self):
        return self.value


def _rescaled(sample, estimator) -> np.ndarray:
    x = as_sample(sample)
    lam = estimate_lambda(x, estimator)
    return x / lam


def _j_from_diff(diff: np.ndarray, a: float, weight: str) -> float:
    return float(np.max(np.abs(diff * _kernels.j_weights(a, weight))))


def stat_J(sample, a: float = 1.0, estimator=EstimatorKind.MLE, weight: str = "table") -> StatisticValue:
    """Sup-type statistic ``J_{n,a}`` on the grid ``t = k/1000``.

    ``max_t |((1/n) sum t^(Y_i/4))^2 - (1/n) sum t^(Y_i)| w_a(t)`` with
    ``Y = X / lam_hat``, where ``w_a(t) = t^a (-log t)^3 / 2`` by default
    and ``t^a (-log t)^(3/2)`` with ``weight="printed"``.  Large values are
    significant.
    """
    spec = StatisticSpec("J", a, estimator=estimator, weight=weight)
    y = _rescaled(sample, spec.estimator)
    return StatisticValue(_j_from_diff(_kernels.j_grid_diff(y), spec.a, spec.weight), y.size, spec)


def stat_R(sample, a: float = 1.0, estimator=EstimatorKind.MLE) -> StatisticValue:
    """Integral-type statistic ``R_{n,a}``.

    ``(3 sqrt(pi)/4) [ (1/n^2) sum_{i,j} (a + (Y_i+Y_j)/4)^(-5/2)
    - (1/n) sum_i (a + Y_i)^(-5/2) ]``, a V-statistic over all ordered pairs.
    Large values of ``|R|`` are significant.
    """
    spec = StatisticSpec("R", a, estimator=estimator)
    y = _rescaled(sample, spec.estimator)
    val = R_CONST * float(_kernels.r_sums(y, np.array([spec.a]))[0])
    return StatisticValue(val, y.size, spec)


_SIGMA_CACHE: dict[float, float] = {}


def _sigma_R(a: float) -> float:
    if a not in _SIGMA_CACHE:
        from .asym import sigma_R2

        _SIGMA_CACHE[a] = math.sqrt(sigma_R2(a))
    return _SIGMA_CACHE[a]


def stat_R_standardized(sample, a: float = 1.0, estimator=EstimatorKind.MLE, sigma: float | None = None) -> StatisticValue:
    """``sqrt(n) R_{n,a} / sigma``, asymptotically standard normal under the null."""
    spec = StatisticSpec("Rstd", a, estimator=estimator, sigma=sigma)
    r = stat_R(sample, spec.a, spec.estimator)
    s = spec.sigma if spec.sigma is not None else _sigma_R(spec.a)
    return StatisticValue(math.sqrt(r.n) / s * r.value, r.n, spec)


def kernel_Z(x, y, a: float):
    """Symmetric kernel of ``R``: ``C[(a+(x+y)/4)^-5/2 - (a+x)^-5/2/2 - (a+y)^-5/2/2]``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return R_CONST * ((a + (x + y) / 4.0) ** -2.5 - 0.5 * (a + x) ** -2.5 - 0.5 * (a + y) ** -2.5)


def _ibar_sorted(x: np.ndarray, a: float, b: float) -> float:
    n = x.size
    c = (math.sqrt(a) + math.sqrt(b)) ** 2
    pairs = (a * x[:, None] + b * x[None, :]) / c
    off = ~np.eye(n, dtype=bool)
    pv = np.sort(pairs[off])
    xs = np.sort(x)
    G = np.searchsorted(pv, xs, side="right") / (n * (n - 1))
    F = np.searchsorted(xs, xs, side="right") / n
    return float(np.mean(G - F))


def stat_Ibar(sample, a: float = 1.0, b: float = 1.0) -> StatisticValue:
    """Generalised Bhati-Kattumannil statistic ``Ibar^{[a,b]}``.

    ``(1/n) sum_k [G_n(X_k) - F_n(X_k)]`` where ``F_n`` is the empirical df
    and ``G_n`` the empirical df of ``(a X_i + b X_j)/(sqrt a + sqrt b)^2``
    over ordered pairs ``i != j``.  No scale estimate is needed.
    """
    spec = StatisticSpec("Ibar", a, b)
    x = as_sample(sample, min_size=2)
    return StatisticValue(_ibar_sorted(x, spec.a, spec.b), x.size, spec)


_U_CLAMP = 1e-15


def _edf_values(u_sorted: np.ndarray) -> dict:
    n = u_sorted.size
    i = np.arange(1, n + 1)
    ks = float(max(np.max(i / n - u_sorted), np.max(u_sorted - (i - 1) / n)))
    cvm = float(1.0 / (12 * n) + np.sum((u_sorted - (2 * i - 1) / (2.0 * n)) ** 2))
    u = np.clip(u_sorted, _U_CLAMP, 1.0 - _U_CLAMP)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1])))
    ad = float(-n - s / n)
    if not math.isfinite(ad):
        ad = math.inf
    return {"KS": ks, "CVM": cvm, "AD": ad}


def _u_sorted(y: np.ndarray) -> np.ndarray:
    # standard Lévy df at the rescaled sample
    return special.erfc(np.sqrt(0.5 / np.sort(y)))


def stat_edf(sample, which: str = "KS", estimator=EstimatorKind.MLE) -> StatisticValue:
    """Kolmogorov-Smirnov, Cramér-von Mises or Anderson-Darling with estimated scale.

    The probability integral transform uses ``levy_cdf(., lam_hat)``; the
    null distributions (Lilliefors style) come from Monte Carlo.
    """
    which = str(which).upper()
    spec = StatisticSpec(which, estimator=estimator)
    if which not in ("KS", "CVM", "AD"):
        raise DomainError(f"which must be KS, CVM or AD, got {which!r}")
    y = _rescaled(sample, spec.estimator)
    return StatisticValue(_edf_values(_u_sorted(y))[which], y.size, spec)


def _window(n: int, aq: float, bq: float) -> tuple[int, int]:
    # floor(n*q) with a guard against representation error, e.g. 20*0.05
    lo = math.floor(n * aq + 1e-9)
    hi = math.floor(n * bq + 1e-9)
    return lo, hi


def _qcv_sorted(xs: np.ndarray, aq: float, bq: float) -> float:
    lo, hi = _window(xs.size, aq, bq)
    if hi <= lo:
        raise DomainError(f"empty quantile window for n={xs.size}, ({aq}, {bq})")
    w = xs[lo:hi]
    return float(np.mean((w - np.mean(w)) ** 2))


def quantile_cond_variance(sample, aq: float, bq: float) -> float:
    """Variance of the order statistics ``X_(floor(n aq)+1) .. X_(floor(n bq))``.

    Divides by the window length.
    """
    if not (0.0 <= aq < 1.0 and 0.0 < bq <= 1.0):
        raise DomainError("need 0 <= aq < 1 and 0 < bq <= 1")
    xs = np.sort(as_sample(sample))
    return _qcv_sorted(xs, aq, bq)


_N1_COEF = {"a": (1.0, 1.0), "b": (2.00, 1.01)}


def _n1_sorted(xs: np.ndarray, variant: str) -> float:
    c1, c2 = _N1_COEF[variant]
    den = _qcv_sorted(xs, 0.05, 0.95)
    if den == 0.0:
        raise DegenerateStatisticError("central quantile window has zero variance")
    num = c1 * _qcv_sorted(xs, 0.05, 0.25) - c2 * _qcv_sorted(xs, 0.75, 0.95)
    return math.sqrt(xs.size) * num / den


def stat_N1(sample, variant: str = "a") -> StatisticValue:
    """Quantile conditional-variance statistics ``N1a`` and ``N1b``.

    ``sqrt(n) (c1 s2(5%,25%) - c2 s2(75%,95%)) / s2(5%,95%)`` with
    ``(c1, c2) = (1, 1)`` for ``a`` and ``(2.00, 1.01)`` for ``b``.
    """
    variant = str(variant).lower().removeprefix("n1")
    if variant not in _N1_COEF:
        raise DomainError("variant must be 'a' or 'b'")
    xs = np.sort(as_sample(sample))
    return StatisticValue(_n1_sorted(xs, variant), xs.size, StatisticSpec("N1" + variant))


def evaluate(sample, spec: StatisticSpec) -> StatisticValue:
    """Evaluate a single statistic."""
    return StatisticValue(float(evaluate_many(sample, [spec])[0]), np.size(sample), spec)


def evaluate_many(sample, specs: Sequence[StatisticSpec]) -> np.ndarray:
    """Evaluate several statistics on one sample, sharing intermediate work.

    The scale estimate, the J grid differences, the R kernel sums and the
    probability integral transform are each computed once per estimator.
    """
    x = as_sample(sample)
    out = np.empty(len(specs))
    by_est: dict[EstimatorKind, list[int]] = {}
    xs_sorted = None
    for idx, sp in enumerate(specs):
        if sp.uses_estimator:
            by_est.setdefault(sp.estimator, []).append(idx)
        elif sp.family == "Ibar":
            if x.size < 2:
                raise DomainError("Ibar needs at least 2 observations")
            out[idx] = _ibar_sorted(x, sp.a, sp.b)
        else:
            if xs_sorted is None:
                xs_sorted = np.sort(x)
            out[idx] = _n1_sorted(xs_sorted, sp.family[-1])
    for est, idxs in by_est.items():
        y = x / estimate_lambda(x, est)
        fams = {specs[i].family for i in idxs}
        if "J" in fams:
            diff = _kernels.j_grid_diff(y)
            for i in idxs:
                if specs[i].family == "J":
                    out[i] = _j_from_diff(diff, specs[i].a, specs[i].weight)
        r_idx = [i for i in idxs if specs[i].family in ("R", "Rstd")]
        if r_idx:
            avals = np.array(sorted({specs[i].a for i in r_idx}))
            sums = _kernels.r_sums(y, avals)
            lookup = dict(zip(avals.tolist(), (R_CONST * sums).tolist()))
            for i in r_idx:
                sp = specs[i]
                r = lookup[sp.a]
                if sp.family == "Rstd":
                    s = sp.sigma if sp.sigma is not None else _sigma_R(sp.a)
                    r = math.sqrt(x.size) / s * r
                out[i] = r
        if fams & {"KS", "CVM", "AD"}:
            vals = _edf_values(_u_sorted(y))
            for i in idxs:
                if specs[i].family in vals:
                    out[i] = vals[specs[i].family]
    return out


def parse_specs(texts: Iterable[str], estimator=None) -> list[StatisticSpec]:
    return [StatisticSpec.parse(t, estimator) for t in texts]
