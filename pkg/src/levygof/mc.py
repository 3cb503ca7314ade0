"""Deterministic Monte Carlo engine: null distributions, p-values, power.

Replication ``r`` of a null run draws its sample from ``RngStream(seed, r)``;
alternative samples use ``RngStream(seed, ALT_STREAM_OFFSET + r)``.  Work is
cut into contiguous chunks whose results are written back by replication
index, so the output does not depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dist import Alternative, RngStream
from .errors import DomainError, LevyGofError
from .stats import StatisticSpec, Tail, evaluate_many

__all__ = [
    "MCConfig",
    "NullDistribution",
    "TestReport",
    "ALT_STREAM_OFFSET",
    "simulate",
    "mc_null_distribution",
    "mc_null_distributions",
    "mc_pvalue",
    "mc_pvalues",
    "mc_power",
    "mc_table",
    "mc_critical_values",
    "ResultTable",
]

ALT_STREAM_OFFSET = 1 << 62
_CHUNK = 256


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo settings.

    ``null_lambda`` only sets the scale of the simulated null samples; every
    statistic is scale free, so it changes nothing but rounding.
    """

    replications: int = 10_000
    sample_size: int = 50
    alpha: float = 0.05
    seed: int = 0
    null_lambda: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if int(self.replications) < 1:
            raise DomainError("replications must be >= 1")
        if int(self.sample_size) < 1:
            raise DomainError("sample_size must be >= 1")
        if not 0.0 < float(self.alpha) < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
        if not (0 <= int(self.seed) < 2**64):
            raise DomainError("seed must be an unsigned 64-bit integer")
        if not (float(self.null_lambda) > 0 and math.isfinite(float(self.null_lambda))):
            raise DomainError("null_lambda must be positive")
        if int(self.workers) < 1:
            raise DomainError("workers must be >= 1")

    def replace(self, **kw) -> "MCConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return MCConfig(**d)


def _run_chunk(args):
    specs, n, sampler, seed, base, start, stop = args
    out = np.full((stop - start, len(specs)), np.nan)
    errors: dict[str, int] = {}
    for r in range(start, stop):
        x = sampler.sample(n, RngStream(seed, base + r))
        try:
            out[r - start] = evaluate_many(x, specs)
        except (LevyGofError, ArithmeticError, ValueError):
            # evaluate one by one so a failure only voids its own statistic
            for j, sp in enumerate(specs):
                try:
                    out[r - start, j] = evaluate_many(x, [sp])[0]
                except (LevyGofError, ArithmeticError, ValueError) as exc_j:
                    key = type(exc_j).__name__
                    errors[key] = errors.get(key, 0) + 1
    return start, out, errors


def simulate(
    specs: Sequence[StatisticSpec],
    n: int,
    replications: int,
    seed: int,
    sampler: Alternative,
    stream_base: int = 0,
    workers: int = 1,
) -> tuple[np.ndarray, dict]:
    """Statistic values for ``replications`` samples, shape ``(replications, len(specs))``.

    Failed evaluations are NaN; their exception types are counted in the
    returned dict.
    """
    specs = list(specs)
    jobs = [
        (specs, int(n), sampler, int(seed), int(stream_base), s, min(s + _CHUNK, replications))
        for s in range(0, replications, _CHUNK)
    ]
    out = np.empty((replications, len(specs)))
    errors: dict[str, int] = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_chunk, jobs))
    else:
        results = [_run_chunk(j) for j in jobs]
    for start, block, errs in results:
        out[start : start + block.shape[0]] = block
        for k, v in errs.items():
            errors[k] = errors.get(k, 0) + v
    return out, errors


def _null_sampler(cfg: MCConfig) -> Alternative:
    return Alternative("Levy", (cfg.null_lambda,))


@dataclass(frozen=True)
class NullDistribution:
    """Sorted simulated null values of one statistic.

    ``failures`` counts replications where the statistic could not be
    evaluated; they are excluded from ``values``.
    """

    spec: StatisticSpec
    values: np.ndarray
    sample_size: int
    seed: int
    failures: int = 0

    @property
    def replications(self) -> int:
        return int(self.values.size)

    def _extreme(self, v):
        return np.abs(v) if self.spec.tail == Tail.ABS else v

    @property
    def _sorted_extreme(self) -> np.ndarray:
        if self.spec.tail == Tail.ABS:
            return np.sort(np.abs(self.values))
        return self.values

    def critical_value(self, alpha: float = 0.05):
        """Order-statistic critical value(s) at level ``alpha``.

        Upper and absolute tails return the ``ceil((1-alpha) N)``-th smallest
        (absolute) value.  The equal-tail case returns ``(lower, upper)``
        using ``alpha/2`` in each tail.
        """
        N = self.replications
        if N == 0:
            raise DomainError("empty null distribution")
        if self.spec.tail == Tail.EQUAL:
            hi = self.values[min(N - 1, math.ceil((1.0 - alpha / 2.0) * N) - 1)]
            lo = self.values[max(0, math.floor(alpha / 2.0 * N))]
            return float(lo), float(hi)
        e = self._sorted_extreme
        return float(e[min(N - 1, math.ceil((1.0 - alpha) * N) - 1)])

    def rejects(self, observed, alpha: float = 0.05, critical=None) -> np.ndarray:
        """Whether ``observed`` values fall in the rejection region."""
        obs = np.asarray(observed, dtype=float)
        c = self.critical_value(alpha) if critical is None else critical
        if self.spec.tail == Tail.EQUAL:
            lo, hi = c
            return (obs < lo) | (obs > hi)
        return self._extreme(obs) > c

    def pvalue(self, observed: float) -> float:
        """Monte Carlo p-value ``(1 + #{at least as extreme}) / (N + 1)``."""
        if math.isnan(observed):
            raise DomainError("observed statistic is NaN")
        N = self.replications
        if self.spec.tail == Tail.EQUAL:
            le = int(np.searchsorted(self.values, observed, side="right"))
            ge = N - int(np.searchsorted(self.values, observed, side="left"))
            return min(1.0, 2.0 * min((1 + le) / (N + 1), (1 + ge) / (N + 1)))
        e = self._sorted_extreme
        o = abs(observed) if self.spec.tail == Tail.ABS else observed
        ge = N - int(np.searchsorted(e, o, side="left"))
        return (1 + ge) / (N + 1)


def mc_null_distributions(specs: Sequence[StatisticSpec], cfg: MCConfig) -> list[NullDistribution]:
    """Null distributions of several statistics from one shared set of samples."""
    vals, _ = simulate(specs, cfg.sample_size, cfg.replications, cfg.seed, _null_sampler(cfg), 0, cfg.workers)
    out = []
    for j, sp in enumerate(specs):
        col = vals[:, j]
        ok = np.isfinite(col) | (col == np.inf)
        out.append(NullDistribution(sp, np.sort(col[ok]), cfg.sample_size, cfg.seed, int((~ok).sum())))
    return out


def mc_null_distribution(spec: StatisticSpec, cfg: MCConfig) -> NullDistribution:
    """Simulated null distribution (sorted ascending) of ``spec`` at ``cfg.sample_size``."""
    return mc_null_distributions([spec], cfg)[0]


@dataclass(frozen=True)
class TestReport:
    spec: StatisticSpec
    observed: float
    p_value: float
    replications: int
    seed: int
    alpha: float
    n: int
    failures: int = 0

    __test__ = False  # not a pytest class

    @property
    def reject(self) -> bool:
        return self.p_value <= self.alpha

    @property
    def decision(self) -> str:
        return "reject" if self.reject else "retain"

    def as_dict(self) -> dict:
        return {
            "statistic": self.spec.label,
            "n": self.n,
            "observed": self.observed,
            "p_value": self.p_value,
            "replications": self.replications,
            "failures": self.failures,
            "seed": self.seed,
            "alpha": self.alpha,
            "decision": self.decision,
        }


def mc_pvalues(sample, specs: Sequence[StatisticSpec], cfg: MCConfig) -> list[TestReport]:
    x = np.asarray(sample, dtype=float)
    cfg = cfg.replace(sample_size=x.size)
    observed = evaluate_many(x, specs)
    nulls = mc_null_distributions(specs, cfg)
    return [
        TestReport(sp, float(o), nd.pvalue(float(o)), nd.replications, cfg.seed, cfg.alpha, x.size, nd.failures)
        for sp, o, nd in zip(specs, observed, nulls)
    ]


def mc_pvalue(sample, spec: StatisticSpec, cfg: MCConfig) -> TestReport:
    """Monte Carlo test of the Lévy null for ``sample``.

    The null is simulated at the sample's own size; ``cfg.sample_size`` is
    ignored.
    """
    return mc_pvalues(sample, [spec], cfg)[0]


@dataclass
class PowerCell:
    value: float
    se: float
    replications: int
    error: str | None = None


def _power_from(nd: NullDistribution, alt_values: np.ndarray, alpha: float) -> PowerCell:
    ok = ~np.isnan(alt_values)
    m = int(ok.sum())
    if m == 0:
        return PowerCell(math.nan, math.nan, 0, "no alternative sample could be evaluated")
    p = float(np.mean(nd.rejects(alt_values[ok], alpha)))
    return PowerCell(p, math.sqrt(p * (1 - p) / m), m)


def mc_power(alt: Alternative, spec: StatisticSpec, cfg: MCConfig, null: NullDistribution | None = None) -> float:
    """Rejection rate of ``spec`` against ``alt`` at level ``cfg.alpha``.

    The critical value comes from a null run with the same configuration
    (or ``null`` if given); alternative samples use their own streams.
    """
    nd = null if null is not None else mc_null_distribution(spec, cfg)
    vals, _ = simulate([spec], cfg.sample_size, cfg.replications, cfg.seed, alt, ALT_STREAM_OFFSET, cfg.workers)
    return _power_from(nd, vals[:, 0], cfg.alpha).value


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


@dataclass
class ResultTable:
    """Rows ``(label, n)`` by statistic columns, each cell a value and standard error."""

    kind: str
    columns: list[str]
    rows: list[tuple[str, int]] = field(default_factory=list)
    values: dict = field(default_factory=dict)  # (row_label, n, col) -> (value, se)
    errors: dict = field(default_factory=dict)  # (row_label, n, col) -> message
    meta: dict = field(default_factory=dict)

    def set(self, row: tuple[str, int], col: str, value: float, se: float = math.nan, error: str | None = None):
        if row not in self.rows:
            self.rows.append(row)
        self.values[(row[0], row[1], col)] = (float(value), float(se))
        if error:
            self.errors[(row[0], row[1], col)] = error

    def get(self, row_label: str, n: int, col: str) -> float:
        return self.values[(row_label, n, col)][0]

    def se(self, row_label: str, n: int, col: str) -> float:
        return self.values[(row_label, n, col)][1]

    def to_json(self) -> str:
        rows = []
        for lab, n in self.rows:
            cells = {}
            for c in self.columns:
                if (lab, n, c) in self.values:
                    v, s = self.values[(lab, n, c)]
                    cell = {"value": _jnum(v), "se": _jnum(s)}
                    if (lab, n, c) in self.errors:
                        cell["error"] = self.errors[(lab, n, c)]
                    cells[c] = cell
            rows.append({"row": lab, "n": n, "cells": cells})
        return json.dumps({"kind": self.kind, "columns": self.columns, "rows": rows, "meta": self.meta}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        d = json.loads(text)
        t = cls(d["kind"], list(d["columns"]), meta=d.get("meta", {}))
        for r in d["rows"]:
            row = (r["row"], int(r["n"]))
            t.rows.append(row)
            for c, cell in r["cells"].items():
                t.set(row, c, _fnum(cell["value"]), _fnum(cell["se"]), cell.get("error"))
        return t

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["row", "n"]
        for c in self.columns:
            header += [c, c + ":se"]
        w.writerow(header)
        for lab, n in self.rows:
            line = [lab, n]
            for c in self.columns:
                v, s = self.values.get((lab, n, c), (math.nan, math.nan))
                line += [repr(v), repr(s)]
            w.writerow(line)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: str = "table") -> "ResultTable":
        r = csv.reader(io.StringIO(text))
        header = next(r)
        cols = [h for h in header[2:] if not h.endswith(":se")]
        t = cls(kind, cols)
        for line in r:
            if not line:
                continue
            row = (line[0], int(line[1]))
            t.rows.append(row)
            for k, c in enumerate(cols):
                v, s = float(line[2 + 2 * k]), float(line[3 + 2 * k])
                if not (math.isnan(v) and math.isnan(s)):
                    t.set(row, c, v, s)
        return t

    def to_text(self, fmt: str = ".3f") -> str:
        """Aligned plain-text rendering; the ``n`` column is dropped when all rows have ``n = 0``."""
        show_n = any(n != 0 for _, n in self.rows)
        cells = {k: format(v[0], fmt) if math.isfinite(v[0]) else "-" for k, v in self.values.items()}
        width = max([len(c) for c in self.columns] + [len(c) for c in cells.values()] + [1])
        lab_w = max([len(r[0]) for r in self.rows] + [4])
        nfield = f" {'n':>5}" if show_n else ""
        lines = [f"{'':{lab_w}}{nfield} " + " ".join(f"{c:>{width}}" for c in self.columns)]
        for lab, n in self.rows:
            row = [f"{cells.get((lab, n, c), '-'):>{width}}" for c in self.columns]
            nfield = f" {n:>5}" if show_n else ""
            lines.append(f"{lab:{lab_w}}{nfield} " + " ".join(row))
        return "\n".join(lines)


def _jnum(v: float):
    return v if math.isfinite(v) else repr(v)


def _fnum(v) -> float:
    return float(v)


def mc_table(
    specs: Sequence[StatisticSpec],
    alts: Sequence[Alternative],
    sizes: Sequence[int],
    cfg: MCConfig,
) -> ResultTable:
    """Power/size matrix: one null run per sample size, one alternative run per (alt, n).

    Cells hold rejection fractions with binomial standard errors; a cell
    whose computation fails holds NaN and an error message.
    """
    specs = list(specs)
    table = ResultTable(
        "power",
        [sp.label for sp in specs],
        meta={"replications": cfg.replications, "alpha": cfg.alpha, "seed": cfg.seed},
    )
    for n in sizes:
        ncfg = cfg.replace(sample_size=int(n))
        nulls = mc_null_distributions(specs, ncfg)
        for alt in alts:
            row = (alt.label, int(n))
            try:
                vals, _ = simulate(specs, n, cfg.replications, cfg.seed, alt, ALT_STREAM_OFFSET, cfg.workers)
            except LevyGofError as exc:
                for sp in specs:
                    table.set(row, sp.label, math.nan, math.nan, f"{type(exc).__name__}: {exc}")
                continue
            for j, sp in enumerate(specs):
                cell = _power_from(nulls[j], vals[:, j], cfg.alpha)
                table.set(row, sp.label, cell.value, cell.se, cell.error)
    return table


def mc_critical_values(
    specs: Sequence[StatisticSpec],
    sizes: Sequence[int],
    cfg: MCConfig,
    root_n: bool = True,
) -> ResultTable:
    """Upper ``1 - alpha`` points of ``sqrt(n) T`` (or ``sqrt(n) |T|``) under the null.

    Rows are sample sizes.  The standard error column holds the
    order-statistic spread ``(q_{p+d} - q_{p-d}) / 2`` with
    ``d = sqrt(p (1-p) / N)``, a cheap binomial interval for the quantile.
    """
    specs = list(specs)
    table = ResultTable(
        "critical_values",
        [sp.label for sp in specs],
        meta={"replications": cfg.replications, "alpha": cfg.alpha, "seed": cfg.seed, "lambda": cfg.null_lambda},
    )
    p = 1.0 - cfg.alpha
    for n in sizes:
        ncfg = cfg.replace(sample_size=int(n))
        for sp, nd in zip(specs, mc_null_distributions(specs, ncfg)):
            f = math.sqrt(n) if root_n else 1.0
            N = nd.replications
            if sp.tail == Tail.EQUAL:
                lo, hi = nd.critical_value(cfg.alpha)
                table.set(("n", int(n)), sp.label, f * hi)
                continue
            e = nd._sorted_extreme
            d = math.sqrt(p * (1 - p) / N)
            qa = e[min(N - 1, max(0, math.ceil((p - d) * N) - 1))]
            qb = e[min(N - 1, math.ceil((p + d) * N) - 1)]
            table.set(("n", int(n)), sp.label, f * nd.critical_value(cfg.alpha), f * (qb - qa) / 2)
    return table


def default_workers() -> int:
    return max(1, min(os.cpu_count() or 1, 8))
