"""Scale estimators for the Lévy null family."""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy import special

from .errors import DomainError, EstimationError

__all__ = ["EstimatorKind", "MBE_CONSTANT", "estimate_lambda", "as_sample"]

# 2 erfcinv(1/2)^2: the standard Lévy median is 1 / MBE_CONSTANT.
MBE_CONSTANT = 2.0 * float(special.erfcinv(0.5)) ** 2


class EstimatorKind(enum.Enum):
    """Which estimator of the scale ``lam`` to plug into a statistic."""

    MLE = "mle"
    MBE = "mbe"

    @classmethod
    def parse(cls, value) -> "EstimatorKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        if text in ("med", "median"):
            text = "mbe"
        try:
            return cls(text)
        except ValueError:
            raise DomainError(f"unknown estimator {value!r}; expected 'mle' or 'mbe'") from None


def as_sample(x, min_size: int = 1) -> np.ndarray:
    """Validate ``x`` as a 1-d float sample of strictly positive finite values."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size < min_size:
        raise DomainError(f"sample must contain at least {min_size} observation(s), got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("sample contains non-finite values")
    if not np.all(arr > 0.0):
        bad = int(np.flatnonzero(~(arr > 0.0))[0])
        raise DomainError(f"sample must be strictly positive (entry {bad} is {arr[bad]!r})")
    return arr


def estimate_lambda(sample, kind=EstimatorKind.MLE) -> float:
    """Estimate the Lévy scale ``lam`` from a positive sample.

    Parameters
    ----------
    sample : array_like
        Strictly positive observations.
    kind : EstimatorKind or str
        ``MLE`` gives ``n / sum(1/X)``.  ``MBE`` gives
        ``2 erfcinv(1/2)^2 * median(X)``, with the even-``n`` median taken as
        the midpoint of the two central order statistics.

    Returns
    -------
    float
        Positive estimate.  Both estimators are scale equivariant.
    """
    x = as_sample(sample)
    kind = EstimatorKind.parse(kind)
    if kind is EstimatorKind.MLE:
        with np.errstate(over="ignore"):
            s = float(np.sum(1.0 / x))
        if not math.isfinite(s):
            raise EstimationError("sum of reciprocals overflowed; sample has values too close to 0")
        lam = x.size / s
    else:
        lam = MBE_CONSTANT * float(np.median(x))
    if not (lam > 0.0 and math.isfinite(lam)):
        raise EstimationError(f"scale estimate is not a positive finite number: {lam!r}")
    return lam
