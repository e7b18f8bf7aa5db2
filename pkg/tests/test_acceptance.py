"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed immediately and repeated in the
terminal summary) before asserting.
"""
import json
import math

import numpy as np
import pytest

from bhdisorder import cli
from bhdisorder import constants as C
from bhdisorder import disorder as dis
from bhdisorder import oracle as orc
from bhdisorder import phase
from bhdisorder import pressure as pr
from bhdisorder import singlesite as ss
from bhdisorder.singlesite import ModelParams
from conftest import ACCEPTANCE, mp_ptilde_dd_fd

INF = math.inf
PM = dis.point_mass()
B2 = dis.bernoulli(0.5, 2.0)
RHO20 = [round(0.1 * k, 12) for k in range(1, 21)]


def check(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def fig1_runs(tmp_path_factory):
    dirs = []
    for k in range(2):
        out = tmp_path_factory.mktemp(f"fig1_{k}")
        code = cli.main(["curve", "--preset", "fig1", "--seed", "7", "--jobs", "1",
                         "--out", str(out)])
        assert code == 0
        dirs.append(out)
    return dirs


def test_1_perfect_nonrandom():
    b1 = phase.perfect_critical_beta(1.0, PM)
    errs = [abs(phase.perfect_critical_beta(r, PM) - math.log1p(1 / r)) for r in RHO20]
    ok = abs(b1 - math.log(2)) <= 1e-9 and max(errs) <= 1e-9
    check(1, ok, f"|beta_c(1) - ln 2| = {abs(b1 - math.log(2)):.1e}, grid max err {max(errs):.1e}")


def test_2_disorder_enhances_perfect():
    worst = -INF
    for spec in (B2, dis.uniform(2.0)):
        for r in RHO20:
            worst = max(worst, phase.perfect_critical_beta(r, spec) - math.log1p(1 / r))
    check(2, worst < 0, f"max beta_c - ln(1 + 1/rho) over 40 points = {worst:.3e}")


def test_3_bernoulli_hardcore_suppression():
    div = phase.critical_beta(0.5, INF, dis.bernoulli(0.5, 2.0), beta_max=500.0)
    conv = phase.critical_beta(0.5, INF, dis.bernoulli(0.5, 1.9))
    ref = 4 / 1.9 * math.atanh(0.95)
    err = abs(conv.beta_c - ref) if conv.beta_c is not None else INF
    ok = div.status == phase.DIVERGENT and conv.status == phase.CONVERGED and err <= 1e-6
    check(3, ok, f"eps=2 {div.status}; eps=1.9 {conv.status}, err {err:.1e}")


@pytest.mark.slow
def test_4_hardcore_beta_c_at_least_two(fig1_runs):
    hard = [name for name, curves in cli.PRESETS.items()
            if any(c["model"]["interaction"] == "hardcore" for c in curves)]
    betas = []
    for name in hard:
        assert name == "fig1"
        doc = json.loads((fig1_runs[0] / "curve_hardcore.json").read_text())
        betas += [p["beta_c"] for p in doc["points"] if p["status"] == phase.CONVERGED]
    ok = len(betas) > 0 and min(betas) >= 2.0
    check(4, ok, f"{len(betas)} converged hard-core points, min beta_c = {min(betas):.6f}")


def test_5_lambda_c1():
    s = {lam: phase.critical_beta(1.0, lam, PM).status for lam in (2.8, 3.2)}
    t = {lam: phase.critical_beta(1.0, lam, B2).status for lam in (3.3, 3.6)}
    ok = (s[2.8] == t[3.3] == phase.CONVERGED and s[3.2] == t[3.6] == phase.DIVERGENT
          and C.lambda_c1(0, 0.5) == 3.0)
    check(5, ok, f"eps=0: {s}; bernoulli(1/2, 2): {t}; lambda_c1(2) = {C.lambda_c1(2, 0.5):.4f}")


def test_6_trinomial():
    hc = {e: phase.critical_beta(1 / 3, INF, dis.trinomial(e)).status for e in (3.0, 3.3)}
    fin = {lam: phase.critical_beta(1.0, lam, dis.trinomial(10.0)).status for lam in (8.0, 6.0)}
    ok = (hc[3.0] == phase.CONVERGED and hc[3.3] == phase.DIVERGENT
          and fin[8.0] == phase.DIVERGENT and fin[6.0] == phase.CONVERGED
          and C.trinomial_eps_cr(6.0) < 10 < C.trinomial_eps_cr(8.0))
    check(6, ok, f"hard-core rho=1/3: {hc}; eps=10 rho=1: {fin}")


def test_7_uniform():
    lc = C.uniform_lambda_ck(3.0, 1)
    ref = 1.5 * (math.e + 1) / (math.e - 1)
    div = phase.critical_beta(1.0, 10.0, dis.uniform(3.0))
    grid = [round(0.02 * k, 12) for k in range(1, 50)]
    curve = phase.curve_sweep(grid, INF, dis.uniform(3.0))
    b = curve.beta_c
    i = int(np.argmin(b))
    interior = 0 < i < len(b) - 1
    unique = np.all(np.diff(b[: i + 1]) < 0) and np.all(np.diff(b[i:]) > 0)
    ok = (abs(lc - ref) <= 1e-9 and div.status == phase.DIVERGENT and np.all(np.isfinite(b))
          and interior and unique and abs(grid[i] - 0.5) <= 0.02 + 1e-12)
    check(7, ok, f"lambda_c1(3) err {abs(lc - ref):.1e}; lam=10 rho=1 {div.status}; "
                 f"hard-core minimum at rho={grid[i]}")


def test_8_small_lambda_reversal():
    grid = np.round(np.linspace(0.15, 0.85, 10), 12)
    diffs = []
    for r in grid:
        cp = phase.critical_beta(float(r), 0.1, B2)
        diffs.append(cp.beta_c - math.log1p(1 / r) if cp.status == phase.CONVERGED else -INF)
    check(8, min(diffs) > 0, f"min beta_c - ln(1 + 1/rho) over 10 points = {min(diffs):.3e}")


def test_9_gap_order_parameter_consistency():
    spec = dis.bernoulli(0.5, 1.0)
    crit = phase.critical_beta(1.0, 1.0, spec)
    bad = boundary = cond = 0
    for beta in np.geomspace(0.3, 3.0, 10):
        for mu in np.linspace(0.5, 4.5, 10):
            gap = phase.gap_function(beta, mu, 1.0, spec)
            res = pr.variational_pressure(ModelParams(beta, mu, 1.0), spec)
            if abs(gap) < 1e-3:
                boundary += 1
                continue
            cond += res.r_star > 1e-8
            bad += (gap > 0) != (res.r_star > 1e-8)
    ok = bad == 0 and 0 < cond < 100 - boundary
    check(9, ok, f"{bad} mismatches, {cond} condensed, {boundary} boundary points skipped "
                 f"(beta_c(rho=1) = {crit.beta_c:.4f})")


def test_10_oracle_gap():
    gaps = [orc.bogoliubov_gap(orc.LatticeRealization(V, 3, (0.0,) * V, 1.0, 0.5, 1.0))
            for V in (2, 3, 4)]
    ok = min(gaps) >= -1e-9 and gaps[1] <= gaps[0] + 1e-6 and gaps[2] <= gaps[1] + 1e-6
    check(10, ok, "gaps " + ", ".join(f"{g:.6f}" for g in gaps))


def test_11_ids():
    V = 500
    out = orc.ids_empirical(V, dis.bernoulli(0.3, 2.0), 50, [0.5, 1.5, 3.5], seed=0)
    n = {E: v for E, v, _ in out}
    # at finite V the rank-one hopping term leaves exactly one level below 1;
    # its weight 1/V is what remains of the step at E < 1
    ok = abs(n[1.5] - 0.7) <= 0.05 and n[0.5] == 1 / V and n[3.5] == 1.0
    check(11, ok, f"N(0.5) = {n[0.5]} (= 1/V), N(1.5) = {n[1.5]:.4f}, N(3.5) = {n[3.5]}")


def test_12_single_site_numerics():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(20):
        beta, mu, lam = rng.uniform(0.2, 5), rng.uniform(-1, 5), rng.uniform(0.2, 5)
        n_max = ss.choose_cutoff(beta, mu, lam, 1e-3) + 8
        fd = mp_ptilde_dd_fd(beta, mu, lam, n_max, h="1e-6")
        worst = max(worst, abs(ss.ptilde_dd(beta, mu, lam) - fd) / abs(fd))
    hc = 0.0
    for mu in (0.2, 1.0, 1.6):
        hc = max(hc, abs(ss.ptilde_dd(2.0, mu, 1e4) - 2 * ss.hc_gap_term(2.0, mu - 1)),
                 abs(ss.site_density(2.0, mu, 1e4) - ss.hc_density_term(2.0, mu - 1)),
                 abs(ss.ptilde(2.0, mu, 1e4, 0.3) - ss.hc_pressure_term(2.0, mu, 0.3)),
                 abs(ss.source_expectation(2.0, mu, 1e4, 0.3) - ss.hc_source_term(2.0, mu, 0.3)))
    check(12, worst <= 1e-6 and hc <= 1e-3,
          f"max FD rel err {worst:.1e}; max hard-core deviation at lam=1e4 {hc:.1e}")


def test_13_upper_bounds():
    p, eps = 0.4, 6.0
    spec = dis.bernoulli(p, eps)
    checked, worst = 0, -INF
    for rho in (1 - p - 0.05, 1 - p + 0.05):
        bound = phase.bernoulli_betac_upper_bound(rho, p, eps)
        if bound is None:
            continue
        cp = phase.critical_beta(rho, INF, spec)
        checked += 1
        worst = max(worst, (cp.beta_c if cp.status == phase.CONVERGED else INF) - bound)
    check(13, checked == 2 and worst <= 0, f"{checked} bounds applicable, max beta_c - bound {worst:.3f}")


@pytest.mark.slow
def test_14_reproducible(fig1_runs):
    a, b = fig1_runs
    names = sorted(f.name for f in a.iterdir())
    same = names == sorted(f.name for f in b.iterdir()) and all(
        (a / n).read_bytes() == (b / n).read_bytes() for n in names)
    check(14, same and len(names) == 18, f"{len(names)} files byte-identical across two runs")
