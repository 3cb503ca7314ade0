"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line; the lines are repeated in
the terminal summary.  Set ``LEVYGOF_FULL=1`` to run the critical-value check
at the published replication count and every sample size.
"""

import math
import os

import numpy as np
import pytest

from levygof import _kernels, asym
from levygof.datasets import get_dataset
from levygof.dist import BAHADUR_ALTERNATIVES, Alternative, RngStream, levy_sample, parse_alternative
from levygof.estimate import EstimatorKind, estimate_lambda
from levygof.mc import MCConfig, default_workers, mc_critical_values, mc_null_distributions, mc_pvalues, mc_table
from levygof.stats import StatisticSpec, evaluate_many, kernel_Z, stat_Ibar

FULL = os.environ.get("LEVYGOF_FULL", "") not in ("", "0")
WORKERS = default_workers()
RESULTS: list[str] = []

MLE, MBE = EstimatorKind.MLE, EstimatorKind.MBE
J_A = (1.0, 2.0, 5.0, 10.0)
R_A = (0.2, 0.5, 1.0, 2.0, 5.0)


def _report(number, title, failures, detail=""):
    ok = not failures
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
    if detail:
        line += f" ({detail})"
    if failures:
        line += "; " + "; ".join(failures)
    RESULTS.append(line)
    print(line)
    assert ok, line


def _rel(x, ref):
    return abs(x - ref) / abs(ref)


# -- 1 --------------------------------------------------------------------------------

SIGMA_R2 = {0.2: 4.588038, 0.5: 0.2672023, 1.0: 0.02068866, 2.0: 0.001194689, 5.0: 1.925015e-5}
SIGMA0 = {(1, 2): 0.022621, (1, 5): 0.019238, (1, 10): 0.015837, (2, 3): 0.023197, (4, 5): 0.023411, (9, 10): 0.023484, (10, 10): 0.0235051}


def test_criterion_1_variance_constants():
    fails = []
    for a, ref in SIGMA_R2.items():
        v = asym.sigma_R2(a)
        if f"{v:.3e}" != f"{ref:.3e}":
            fails.append(f"sigma_R2({a:g}) = {v:.6g} vs {ref:.6g}")
    st = asym.sigma_T2()
    if _rel(st, 0.0235051) > 1e-3:
        fails.append(f"sigma_T2 = {st:.7g}")
    for (a, b), ref in SIGMA0.items():
        v = asym.sigma_0ab(a, b)
        if _rel(v, ref) > 2e-3:
            fails.append(f"sigma_0({a},{b}) = {v:.7g} vs {ref}")
    _report(1, "variance constants", fails, f"sigma_T2 = {st:.7g}")


# -- 2 --------------------------------------------------------------------------------

INF_ROW = {0.2: 4.19818, 0.5: 1.01314, 1.0: 0.28191, 2.0: 0.06774, 5.0: 0.00860}


def test_criterion_2_asymptotic_row():
    fails = []
    got = {}
    for a, ref in INF_ROW.items():
        v = 1.959964 * math.sqrt(asym.sigma_R2(a))
        got[a] = v
        if abs(v - ref) > 5e-5:
            fails.append(f"a={a:g}: {v:.6f} vs {ref}")
    _report(2, "asymptotic critical values", fails, ", ".join(f"{v:.5f}" for v in got.values()))


# -- 3 --------------------------------------------------------------------------------

# 95th percentiles of sqrt(n) J (columns J1..J10) and |sqrt(n) R| (R0.2..R5),
# each as (MLE, MBE) pairs, keyed by (lambda, n)
CRIT_J = {
    (0.5, 20): (0.14827, 0.14335, 0.02585, 0.02465, 0.00212, 0.00215, 0.00029, 0.00029),
    (0.5, 100): (0.13997, 0.13954, 0.02477, 0.02467, 0.00215, 0.00214, 0.00028, 0.00029),
    (0.5, 500): (0.13778, 0.13719, 0.02471, 0.02461, 0.00211, 0.00210, 0.00029, 0.00029),
    (5.0, 20): (0.14721, 0.14587, 0.02576, 0.02487, 0.00211, 0.00211, 0.00028, 0.00028),
    (5.0, 100): (0.14162, 0.13724, 0.02508, 0.02492, 0.00208, 0.00208, 0.00029, 0.00029),
    (5.0, 500): (0.13690, 0.13597, 0.02492, 0.02454, 0.00208, 0.00209, 0.00029, 0.00029),
}
CRIT_R = {
    (0.5, 20): (4.17008, 5.90912, 1.06865, 1.11926, 0.29687, 0.27948, 0.07024, 0.06797, 0.00862, 0.00868),
    (0.5, 100): (4.22461, 4.45201, 1.02478, 1.01877, 0.28447, 0.28131, 0.06825, 0.06803, 0.00863, 0.00867),
    (0.5, 500): (4.20214, 4.20821, 1.01907, 1.01903, 0.28273, 0.28304, 0.06776, 0.06784, 0.00859, 0.00860),
    (5.0, 20): (4.15862, 5.83832, 1.06027, 1.11188, 0.29661, 0.27925, 0.07042, 0.06805, 0.00866, 0.00873),
    (5.0, 100): (4.19353, 4.43083, 1.02103, 1.02076, 0.28421, 0.28053, 0.06810, 0.06766, 0.00865, 0.00866),
    (5.0, 500): (4.20593, 4.22146, 1.01916, 1.01679, 0.28350, 0.28182, 0.06787, 0.06770, 0.00862, 0.00861),
}


def _crit_reference():
    ref = {}
    for (lam, n), row in CRIT_J.items():
        for i, a in enumerate(J_A):
            ref[(lam, n, StatisticSpec("J", a, estimator=MLE).label)] = row[2 * i]
            ref[(lam, n, StatisticSpec("J", a, estimator=MBE).label)] = row[2 * i + 1]
    for (lam, n), row in CRIT_R.items():
        for i, a in enumerate(R_A):
            ref[(lam, n, StatisticSpec("R", a, estimator=MLE).label)] = row[2 * i]
            ref[(lam, n, StatisticSpec("R", a, estimator=MBE).label)] = row[2 * i + 1]
    return ref


def test_criterion_3_critical_values():
    reps = 100_000 if FULL else 20_000
    specs = [StatisticSpec(f, a, estimator=e) for e in (MLE, MBE) for f, grid in (("J", J_A), ("R", R_A)) for a in grid]
    ref = _crit_reference()
    fails, worst, rounding = [], 0.0, 0
    for lam, seed in ((0.5, 301), (5.0, 302)):
        cfg = MCConfig(replications=reps, seed=seed, null_lambda=lam, workers=WORKERS)
        table = mc_critical_values(specs, [20, 100, 500], cfg)
        for n in (20, 100, 500):
            for sp in specs:
                v = table.get("n", n, sp.label)
                r = ref[(lam, n, sp.label)]
                worst = max(worst, _rel(v, r))
                if _rel(v, r) > 0.03:
                    fails.append(f"lambda={lam:g} n={n} {sp.label}: {v:.6g} vs {r}")
                    # diagnostic only: the published cells carry 5 decimals
                    if abs(v - r) - 5e-6 <= 0.03 * (abs(r) + 5e-6):
                        rounding += 1
    detail = f"N={reps}, {len(ref)} cells, worst {100 * worst:.2f}%"
    if fails:
        detail += f"; {rounding} of {len(fails)} misses within 3% of the cell's rounding interval"
    _report(3, "empirical critical values within 3%", fails, detail)


# -- 4 --------------------------------------------------------------------------------

SIZE_COLUMNS = ("I[1,1]", "J1", "J2", "J5", "J10", "R0.2", "R0.5", "R1", "R2", "R5", "KS", "CVM", "AD", "N1a", "N1b")


def test_criterion_4_size():
    specs = [StatisticSpec.parse(s) for s in SIZE_COLUMNS]
    null = Alternative("Levy", (1.0,))
    t = mc_table(specs, [null], [50], MCConfig(replications=10_000, seed=401, workers=WORKERS))
    fails, rates = [], []
    for sp in specs:
        p = t.get(null.label, 50, sp.label)
        rates.append(p)
        if abs(p - 0.05) > 0.012:
            fails.append(f"{sp.label}: {p:.4f}")
    _report(4, "size at n=50", fails, f"rates {min(rates):.4f}..{max(rates):.4f}")


# -- 5 --------------------------------------------------------------------------------

POWER_CELLS = [
    # alternative, n, statistic, lower, upper
    ("LN(0,1)", 25, "R1", 0.79, 0.85),
    ("W(2,1)", 25, "J1", 0.96, 1.00),
    ("LL(1,2)", 50, "R0.2", 0.74, 0.80),
    ("Burr(1.5,0.5,0.5)", 25, "I[1,1]", 0.00, 0.01),
    ("HN(0,1)", 50, "N1a", 0.99, 1.00),
    ("W(0.4,2)", 25, "J1/MBE", 0.94, 0.98),
]


def test_criterion_5_power():
    fails, got = [], []
    for alt_s, n, stat, lo, hi in POWER_CELLS:
        alt, sp = parse_alternative(alt_s), StatisticSpec.parse(stat)
        t = mc_table([sp], [alt], [n], MCConfig(replications=10_000, seed=501, workers=WORKERS))
        p = t.get(alt.label, n, sp.label)
        got.append(f"{alt.label}/{n}/{sp.label}={p:.3f}")
        if not lo - 1e-12 <= p <= hi + 1e-12:
            fails.append(f"{alt.label} n={n} {sp.label}: {p:.4f} not in [{lo}, {hi}]")
    _report(5, "power spot checks", fails, ", ".join(got))


# -- 6 --------------------------------------------------------------------------------

LABRE = {
    "I[1,1]": (0.59, 0.54, 0.73, 0.53, 0.41),
    "J1": (0.91, 0.66, 0.79, 0.68, 0.69),
    "J2": (0.81, 0.54, 0.71, 0.54, 0.49),
    "J5": (0.56, 0.36, 0.52, 0.35, 0.25),
    "J10": (0.35, 0.24, 0.37, 0.23, 0.13),
    "R0.2": (0.53, 0.79, 0.61, 0.80, 0.86),
    "R0.5": (0.80, 0.86, 0.82, 0.90, 0.97),
    "R1": (0.94, 0.81, 0.89, 0.84, 0.87),
    "R2": (0.93, 0.69, 0.84, 0.70, 0.65),
    "R5": (0.70, 0.48, 0.66, 0.46, 0.35),
}
IBAR_ROWS = {
    "I[2,3]": (0.59, 0.54, 0.73, 0.53, 0.41),
    "I[5,9]": (0.58, 0.54, 0.73, 0.53, 0.41),
    "I[9,6]": (0.59, 0.54, 0.73, 0.53, 0.41),
    "I[10,4]": (0.57, 0.53, 0.72, 0.52, 0.40),
}


def test_criterion_6_bahadur():
    fails = []
    g2 = Alternative("g2")
    kl = asym.kl_curvature(g2)
    if _rel(kl, 0.0233005) > 1e-4:
        fails.append(f"KL curvature {kl:.8g}")
    e = asym.efficiency(StatisticSpec("J", 1.0), g2, _kl=kl).efficiency
    if abs(e - 0.66) > 0.01:
        fails.append(f"eff(J1, g2) = {e:.4f}")
    _, sa = asym.sup_A(1.0, g2)
    if _rel(sa, 1.49667e-5) > 5e-3:
        fails.append(f"sup A = {sa:.6g}")
    _, ss = asym.sup_sigma2(1.0)
    if _rel(ss, 0.00388889) > 5e-3:
        fails.append(f"sup sigma2 = {ss:.6g}")
    rows = {**LABRE, **IBAR_ROWS}
    specs = [StatisticSpec.parse(s) for s in rows]
    cells = asym.efficiency_table(specs, BAHADUR_ALTERNATIVES)
    ncells = 0
    for (lab, ref), row in zip(rows.items(), cells):
        for alt, r, cell in zip(BAHADUR_ALTERNATIVES, ref, row):
            ncells += 1
            if isinstance(cell, Exception):
                fails.append(f"{lab}/{alt.label}: {type(cell).__name__}")
            elif abs(cell.efficiency - r) > 0.01 + 1e-9:
                fails.append(f"{lab}/{alt.label}: {cell.efficiency:.4f} vs {r}")
    _report(6, "Bahadur efficiencies", fails, f"KL {kl:.7g}, eff(J1,g2) {e:.4f}, {ncells} table cells")


# -- 7 --------------------------------------------------------------------------------


def test_criterion_7_real_data():
    fails = []
    cfg = MCConfig(replications=10_000, seed=701, workers=WORKERS)
    rain = get_dataset("rainfall")
    specs = [StatisticSpec("J", a) for a in J_A] + [StatisticSpec("R", a) for a in R_A if a >= 0.5]
    rain_p = {r.spec.label: r.p_value for r in mc_pvalues(rain, specs, cfg)}
    for lab, p in rain_p.items():
        if not p < 0.05:
            fails.append(f"rainfall {lab}: p = {p:.4f}")
    hill = get_dataset("hillside", invert=True)
    checks = [(StatisticSpec("R", 1.0), 0.024, 0.01), (StatisticSpec("J", 5.0), 0.281, 0.02), (StatisticSpec("J", 5.0, estimator=MBE), 0.70, 0.03)]
    hp = {r.spec.label: r.p_value for r in mc_pvalues(hill, [c[0] for c in checks], cfg)}
    for sp, ref, tol in checks:
        p = hp[sp.label]
        if abs(p - ref) > tol:
            fails.append(f"hillside {sp.label}: p = {p:.4f} vs {ref} +- {tol}")
    detail = f"rainfall max p {max(rain_p.values()):.4f}; hillside " + ", ".join(f"{k} {v:.3f}" for k, v in hp.items())
    _report(7, "real data p-values", fails, detail)


# -- 8 --------------------------------------------------------------------------------


def test_criterion_8_properties():
    from test_asym import _gauss_rule
    from test_stats import ALL_SPECS, _ibar_brute

    fails = []
    grid = np.arange(1, 1001) / 1000.0
    for seed in range(5):
        x = parse_alternative("LN(0,1)").sample(40, RngStream(800, seed))
        for c in (0.25, 4.0, 1024.0):
            if not np.array_equal(evaluate_many(x, ALL_SPECS), evaluate_many(c * x, ALL_SPECS)):
                fails.append(f"scale invariance (c={c:g}, seed {seed})")
        for c in (0.3, 7.0):
            u, v = evaluate_many(x, ALL_SPECS), evaluate_many(c * x, ALL_SPECS)
            if not np.allclose(u, v, rtol=1e-9, atol=1e-13):
                fails.append(f"scale invariance (c={c:g}, seed {seed})")
    for n in (1, 5, 17, 30):
        y = levy_sample(n, 1.0, RngStream(801, n))
        y = y / estimate_lambda(y)
        if np.max(np.abs(_kernels.j_grid_diff(y) - _kernels.j_grid_diff_naive(y, grid))) > 1e-12:
            fails.append(f"J factorized vs naive n={n}")
    for n in (1, 8, 20):
        x = levy_sample(n, 1.0, RngStream(802, n))
        y = x / (n / np.sum(1 / x))
        for a in R_A:
            brute = sum(float(kernel_Z(p, q, a)) for p in y for q in y) / n**2
            fast = evaluate_many(x, [StatisticSpec("R", a)])[0]
            if abs(fast - brute) > 1e-12 * max(1.0, abs(brute)):
                fails.append(f"R vs brute force n={n} a={a:g}")
    for n in (2, 9, 15):
        x = list(levy_sample(n, 1.0, RngStream(803, n)))
        for a, b in ((1, 1), (2, 3), (10, 4)):
            if abs(stat_Ibar(x, a, b).value - _ibar_brute(x, a, b)) > 1e-15:
                fails.append(f"Ibar vs brute force n={n} [{a},{b}]")
    for xv, a in ((0.5, 1.0), (3.0, 0.2), (20.0, 5.0)):
        brute = asym.levy_expectation(lambda y: float(kernel_Z(xv, y, a)), asym.QuadratureConfig(1e-13, 1e-11))
        if abs(asym.proj_zeta(xv, a) - brute) > 1e-7:
            fails.append(f"proj_zeta({xv:g}, {a:g})")
    u, w = _gauss_rule(24, 30, 12.0)
    xs, m = 1.0 / u**2, w * 2.0 / u**3 * np.sqrt(1 / (2 * np.pi)) * np.exp(-0.5 * u**2) * u**3
    for t in (0.3, 0.5):
        L = -math.log(t)
        tx, txq = np.exp(-L * xs), np.exp(-L * xs / 4)
        psi = -2.0 * txq[:, None] * txq[None, :] + tx[None, :] + tx[:, None]
        triple = np.einsum("i,j,k,ij,ik->", m, m, m, psi, psi, optimize=True)
        k_oracle = 16.0 * (t**2 / 4) * L**3 * triple / 4.0
        if _rel(asym.cov_kernel(t, t), k_oracle) > 1e-4:
            fails.append(f"K({t},{t}) vs triple integral")
    specs = [StatisticSpec.parse(s) for s in ("J1", "R0.5/MBE", "I[1,1]", "AD", "N1b")]
    cfg = MCConfig(replications=300, sample_size=30, seed=804)
    for a, b in zip(mc_null_distributions(specs, cfg), mc_null_distributions(specs, cfg.replace(workers=3))):
        if not np.array_equal(a.values, b.values):
            fails.append(f"MC determinism {a.spec.label}")
    _report(8, "property suites", fails)
