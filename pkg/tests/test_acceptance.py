"""Acceptance suite: one test per numbered criterion, one pass/fail line each.

Heavy Monte Carlo scenarios are run once per session through the command-line
entry point; the criteria assert against the parsed report artifacts.  Each
test prints a single `CRITERION nn: PASS|FAIL` line summarizing its outcome
before asserting, so the verdict is visible even when a criterion is red.
"""

import json
import math

import numpy as np
import pytest
from scipy import special

from occufluct.cli import main
from occufluct.limits import (CompoundLocalTime, BetaWienerLimit,
                              PotentialConstantLimit, PotentialWienerLimit,
                              StandardNormalConstant, XiLimit,
                              compound_laplace, counterexample_subsequence,
                              cov_grid, extract_constant_K, polynomial_window,
                              psd_defect, sample_gaussian_limit, xi_cov)
from occufluct.moments import mean_decay, log_average, tail_log_average, total_occupation
from occufluct.intensity import PowerLawSmoothed
from occufluct.regimes import classify
from occufluct.simulate import simulate_local_times
from occufluct.stable_motion import (StableLaw, density, sample_increment,
                                     unit_density_at_zero, unit_radial_density)
from occufluct.testfunc import GaussianBump


GRID_PAIRS = [(0.25, 0.5), (0.25, 0.75), (0.25, 1.0),
              (0.5, 0.75), (0.5, 1.0), (0.75, 1.0)]


def _verdict(num: int, ok: bool, detail: str) -> bool:
    print(f"CRITERION {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}",
          flush=True)
    return ok


def _run_scenario(tmp_path_factory, name: str) -> dict:
    out = tmp_path_factory.mktemp(f"accept_{name}")
    rc = main(["verify", "--bundled", name, "--out", str(out)])
    assert rc in (0, 1), f"scenario {name} failed to run (exit {rc})"
    with open(out / f"{name}_report.json") as f:
        return json.load(f)


def _by_name(report: dict) -> dict:
    return {c["name"]: c for c in report["comparisons"]}


@pytest.fixture(scope="session")
def g1_acceptance_report(tmp_path_factory):
    return _run_scenario(tmp_path_factory, "g1_acceptance")


@pytest.fixture(scope="session")
def g1_limit_T100_report(tmp_path_factory):
    return _run_scenario(tmp_path_factory, "g1_limit_T100")


@pytest.fixture(scope="session")
def g1_limit_T1000_report(tmp_path_factory):
    return _run_scenario(tmp_path_factory, "g1_limit_T1000")


@pytest.fixture(scope="session")
def g2_increment_report(tmp_path_factory):
    return _run_scenario(tmp_path_factory, "g2_increment")


@pytest.fixture(scope="session")
def f2_compound_report(tmp_path_factory):
    return _run_scenario(tmp_path_factory, "f2_compound")


# ---------------------------------------------------------------------------


def test_criterion_01_density_correctness():
    x = np.linspace(-10.0, 10.0, 201)
    max_err = 0.0
    for alpha in (1.0, 2.0):
        law = StableLaw(alpha, 1)
        closed = unit_radial_density(law, np.abs(x))
        numeric = unit_radial_density(law, np.abs(x), numeric=True)
        max_err = max(max_err, float(np.max(np.abs(closed - numeric))))
    # scaling identity p_{at}(x) = a^{-1/alpha} p_t(x a^{-1/alpha})
    a, t = 3.0, 0.8
    scale_closed = 0.0
    for alpha in (1.0, 2.0):
        law = StableLaw(alpha, 1)
        lhs = density(law, a * t, x)
        rhs = a ** (-1 / alpha) * density(law, t, x * a ** (-1 / alpha))
        scale_closed = max(scale_closed, float(np.max(np.abs(lhs - rhs))))
    law = StableLaw(1.5, 1)
    lhs = density(law, a * t, x)
    rhs = a ** (-1 / 1.5) * density(law, t, x * a ** (-1 / 1.5))
    scale_numeric = float(np.max(np.abs(lhs - rhs)))
    ok = max_err < 1e-6 and scale_closed < 1e-8 and scale_numeric < 1e-5
    assert _verdict(1, ok, f"inversion err {max_err:.2e} (<1e-6), scaling "
                    f"{scale_closed:.2e} (<1e-8) / {scale_numeric:.2e} (<1e-5)")


def test_criterion_02_sampler_law():
    rng = np.random.default_rng(8675309)
    worst = 0.0
    for alpha in (0.8, 1.5):
        law = StableLaw(alpha, 1)
        xs = sample_increment(law, 1.0, rng, size=1_000_000)
        for z in (0.5, 1.0, 2.0):
            emp = float(np.cos(z * xs).mean())
            worst = max(worst, abs(emp - math.exp(-z ** alpha)))
    ok = worst < 0.005
    assert _verdict(2, ok, f"max |empirical CF - exact| {worst:.4f} (<0.005)")


def test_criterion_03_finite_T_variance_match(g1_acceptance_report):
    cmp = _by_name(g1_acceptance_report)
    devs = []
    ok = True
    for name in ("variance_t0.5", "variance_t1"):
        c = cmp[name]
        n_se = abs(c["observed"] - c["expected"]) / c["se"]
        devs.append(f"{name}: {n_se:.2f} se")
        ok = ok and bool(c["passed"]) and n_se <= 3.0
    assert _verdict(3, ok, "T=50 MC variance vs exact oracle within 3 se ("
                    + ", ".join(devs) + ")")


def test_criterion_04_limit_covariance_shape(g1_limit_T100_report,
                                             g1_limit_T1000_report):
    c100 = _by_name(g1_limit_T100_report)
    c1000 = _by_name(g1_limit_T1000_report)
    bound_ok, decrease_ok = True, True
    worst1000 = 0.0
    for t, s in GRID_PAIRS:
        name = f"corr_t{t:g}_t{s:g}"
        e100 = abs(c100[name]["observed"] - c100[name]["expected"])
        e1000 = abs(c1000[name]["observed"] - c1000[name]["expected"])
        worst1000 = max(worst1000, e1000)
        bound_ok = bound_ok and e1000 < 0.07
        decrease_ok = decrease_ok and e1000 < e100
    ad = c1000["marginal_normality_AD"]
    ad_ok = bool(ad["passed"])
    ok = bound_ok and decrease_ok and ad_ok
    assert _verdict(4, ok, f"corr err at T=1e3 max {worst1000:.4f} (<0.07: "
                    f"{bound_ok}), entrywise decreasing in T: {decrease_ok}, "
                    f"AD normality at 0.01: {ad_ok} "
                    f"(stat {ad['observed']:.1f} vs {ad['tolerance']:.3f})")


def test_criterion_05_increment_decorrelation(g2_increment_report):
    cmp = _by_name(g2_increment_report)
    v1 = cmp["variance_t0.5"]["observed"]
    v2 = cmp["variance_t1"]["observed"]
    c12 = cmp["corr_t0.5_t1"]["observed"] * math.sqrt(v1 * v2)
    # corr(X(1/2), X(1) - X(1/2)) from the simulated second moments
    corr = (c12 - v1) / math.sqrt(v1 * (v2 + v1 - 2.0 * c12))
    ok = abs(corr) <= 0.1
    assert _verdict(5, ok, f"corr(X(1/2), X(1)-X(1/2)) = {corr:+.4f} "
                    "(within +-0.1 of 0)")


def test_criterion_06_constant_extraction():
    g1 = classify("3/2", 1, "1/2")
    law = StableLaw(1.5, 1)
    k0 = extract_constant_K(g1, law, polynomial_window(0))
    k1 = extract_constant_K(g1, law, polynomial_window(1))
    rel = abs(k0 - k1) / abs(k0)
    f1 = classify("3/2", 1, None, finite=True)
    kf = extract_constant_K(f1, law)
    f1_err = abs(kf - 4.0 / (3.0 * math.sqrt(3.0)))
    ok = rel < 1e-4 and f1_err < 1e-10
    assert _verdict(6, ok, f"G1 two-window agreement {rel:.2e} (<1e-4), "
                    f"F1 closed-form error {f1_err:.2e} (<1e-10)")


def test_criterion_07_local_time_mean_and_scaling():
    law = StableLaw(1.5, 1)
    rng = np.random.default_rng(5550123)
    times = [0.25, 0.5, 1.0]
    est = simulate_local_times(law, times, 0.05, 1e-4, 10_000, rng)
    means = est.mean(axis=0)
    target = unit_density_at_zero(1.5, 1) / (1.0 - 1.0 / 1.5) * 1.0 ** (1.0 - 1.0 / 1.5)
    rel_t1 = abs(means[2] - target) / target
    scaled = means / np.asarray(times) ** (1.0 - 1.0 / 1.5)
    spread = float((scaled.max() - scaled.min()) / scaled.mean())
    ok = rel_t1 < 0.05 and spread < 0.05
    assert _verdict(7, ok, f"mean L(1) {means[2]:.4f} vs {target:.4f} "
                    f"(rel {rel_t1:.3f} < 0.05), scaling spread {spread:.3f} "
                    "(< 0.05)")


def test_criterion_08_critical_semigroup_facts():
    law = StableLaw(1.0, 1)
    phi = GaussianBump()
    la = log_average(law, phi, 0.0, 1e8)
    ref = unit_density_at_zero(1.0, 1) * phi.integral
    rel = abs(la - ref) / ref
    hi = tail_log_average(law, phi, 1e6)
    lo = tail_log_average(law, phi, 1e2)
    ratio = hi / lo
    ok = rel < 0.05 and ratio < 0.05
    assert _verdict(8, ok, f"log_average rel err {rel:.4f} (<0.05), "
                    f"tail ratio T=1e6/T=1e2 {ratio:.4f} (<0.05)")


def test_criterion_09_compound_limits(f2_compound_report):
    cmp = _by_name(f2_compound_report)
    lap_ok = all(bool(cmp[f"laplace_theta{z:g}"]["passed"])
                 for z in (0.5, 1.0, 2.0))
    # small-theta slope of the compound local-time Laplace transform
    law = StableLaw(1.5, 1)
    phi = GaussianBump()
    f1 = classify("3/2", 1, None, finite=True)
    K = extract_constant_K(f1, law)
    mu_mass = 2.0
    desc = CompoundLocalTime(mu_mass=mu_mass, alpha=1.5)
    theta = 1e-6
    slope = (1.0 - compound_laplace(desc, theta, 1.0, phi.integral, K)) / theta
    ap = 1.0 - 1.0 / 1.5
    expected = mu_mass * K * phi.integral / special.gamma(1.0 + ap)
    rel = abs(slope - expected) / expected
    ok = lap_ok and rel < 0.10
    assert _verdict(9, ok, f"F2 Laplace transform 3SE+15%: {lap_ok}, "
                    f"F1 small-theta slope rel err {rel:.4f} (<0.10)")


def test_criterion_10_oscillating_counterexample():
    law = StableLaw(1.8, 1)
    vals = counterexample_subsequence(range(2, 8), 0.125, law)
    # odd n doubles the modulation: ratio of consecutive values tends to 2
    ratios = [vals[i + 1] / vals[i] for i in range(len(vals) - 1)]
    r6 = max(ratios[-1], 1.0 / ratios[-1])   # consecutive ratio at n=6 -> 7
    ok = abs(r6 - 2.0) <= 0.2
    assert _verdict(10, ok, f"consecutive subsequence ratio at n=6: {r6:.3f} "
                    "(within 10% of 2); two distinct subsequential limits")


def test_criterion_11_mean_decay_and_bounded_occupation():
    mu = PowerLawSmoothed(2.0)
    law = StableLaw(1.5, 1)
    phi = GaussianBump()
    _, slope = mean_decay(mu, law, phi, np.geomspace(1e2, 1e4, 7))
    slope_ok = abs(slope - (-1.0 / 1.5)) <= 0.05
    mu3 = PowerLawSmoothed(2.0, dim=3)
    law3 = StableLaw(1.0, 3)
    phi3 = GaussianBump(center=(0.0, 0.0, 0.0))
    v64 = total_occupation(mu3, law3, phi3, radius=64.0)
    v128 = total_occupation(mu3, law3, phi3, radius=128.0)
    stab = abs(v128 - v64) / v64
    occ_ok = math.isfinite(v64) and v64 > 0 and stab < 1e-6
    ok = slope_ok and occ_ok
    assert _verdict(11, ok, f"mean decay slope {slope:.4f} vs -2/3 (+-0.05), "
                    f"total occupation {v64:.6f} stable to {stab:.1e}")


def test_criterion_12_limit_law_internal_consistency():
    grid = np.linspace(0.1, 2.0, 8)
    descriptors = [
        XiLimit(0.5, 1, 1.5), XiLimit(1.0, 1, 1.5), XiLimit(0.25, 1, 1.8),
        BetaWienerLimit(0.5, 1.0),
        PotentialWienerLimit(0.5, StableLaw(1.0, 3), spatial=2.0 * math.pi),
        PotentialConstantLimit(StableLaw(1.0, 3), spatial=2.0 * math.pi),
        StandardNormalConstant(),
    ]
    psd_ok = True
    for desc in descriptors:
        C = cov_grid(desc, grid)
        psd_ok = psd_ok and psd_defect(C) >= -1e-10 * np.trace(C)
    # self-similarity: cov(ct, cs) = c^{2 kappa} cov(t, s)
    g, d, al, c = 0.5, 1, 1.5, 3.7
    kap = 1.0 - (d + g) / (2.0 * al)
    ss_err = max(abs(xi_cov(g, d, al, c * t, c * s)
                     - c ** (2 * kap) * xi_cov(g, d, al, t, s))
                 for t, s in [(0.3, 0.9), (1.0, 1.0), (0.5, 2.0)])
    # gamma -> 0 reduces to the fractional Brownian covariance, 2H = 2 - d/a
    H = (2.0 - 1.0 / al) / 2.0
    fbm_err = max(abs(xi_cov(0.0, 1, al, t, s)
                      - (t ** (2 * H) + s ** (2 * H)
                         - abs(t - s) ** (2 * H)) / (2 * H))
                  for t, s in [(0.3, 0.9), (1.0, 1.0), (0.5, 2.0)])
    rng = np.random.default_rng(271828)
    desc = XiLimit(0.5, 1, 1.5)
    small_grid = np.array([0.25, 0.5, 0.75, 1.0])
    samples = sample_gaussian_limit(desc, small_grid, 1.0, rng, size=100_000)
    C_exact = cov_grid(desc, small_grid)
    C_emp = np.cov(samples.T, bias=True)
    samp_err = float(np.max(np.abs(C_emp - C_exact) / np.abs(C_exact)))
    ok = (psd_ok and ss_err < 1e-10 and fbm_err < 1e-10 and samp_err < 0.02)
    assert _verdict(12, ok, f"PSD: {psd_ok}, self-similarity err {ss_err:.1e} "
                    f"(<1e-10), fBm reduction err {fbm_err:.1e} (<1e-10), "
                    f"sampler cov rel err {samp_err:.4f} (<0.02)")


def test_criterion_13_engineering_determinism(tmp_path):
    doc = {"scenario": "determinism", "alpha": "3/2", "d": 1, "gamma": "1/2",
           "T": 5.0, "dt": 0.5, "grid": [0.5, 1.0], "replicas": 120,
           "block_size": 40, "master_seed": 4242}
    cfg_path = tmp_path / "determinism.json"
    cfg_path.write_text(json.dumps(doc))
    blobs = []
    for threads in (1, 4, 16):
        out = tmp_path / f"threads_{threads}"
        out.mkdir()
        rc = main(["verify", "--config", str(cfg_path), "--threads",
                   str(threads), "--out", str(out)])
        assert rc in (0, 1)
        blobs.append((out / "determinism_report.json").read_bytes())
    ok = blobs[0] == blobs[1] == blobs[2]
    assert _verdict(13, ok, "byte-identical reports at thread counts "
                    f"{{1, 4, 16}}: {ok} ({len(blobs[0])} bytes)")
