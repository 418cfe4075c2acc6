"""Command-line entry point: scenario configs, orchestration, artifacts.

Scenario configuration is a single JSON document; the exponents that drive
regime classification are exact rational strings (e.g. "1/2"), because the
regime boundaries are exact arithmetic conditions.  Exit codes: 0 success,
1 failed comparisons, 2 config/schema problems, 3 inadmissible regime,
4 numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

from .errors import ConfigError, DomainError, QuadratureError
from .intensity import (FiniteGeneric, PowerLawSmoothed, PurePower,
                        gaussian_intensity)
from .limits import (BetaWienerLimit, CompoundExponential, CompoundLocalTime,
                     PotentialConstantLimit, PotentialWienerLimit,
                     StandardNormalConstant, XiLimit, compound_laplace,
                     counterexample_subsequence, cov_grid, extract_constant_K,
                     polynomial_window, potential_pairing)
from .moments import IncrementWindow, total_occupation, variance_exact, mean_decay
from .regimes import RegimeSpec, as_fraction, classify, norming
from .simulate import centering_table, truncation_radius
from .stable_motion import StableLaw, unit_density_at_zero
from .stats import (Comparison, SCHEMA_VERSION, collected_final,
                    compare_report, empirical_cov, empirical_corr,
                    empirical_laplace, normality_test, run_ensemble)
from .testfunc import GaussianBump

OUT_DIR_ENV = "OCCUFLUCT_OUT"
CSV_HEADER = ("scenario", "regime", "t", "value", "se")

_DEFAULT_TOLERANCES = {
    "mean_sigma": 3.0,
    "var_sigma": 3.0,
    "corr_abs": 0.07,
    "normality_level": 0.01,
    "laplace_sigma": 3.0,
    "laplace_rel": 0.15,
    "slope_abs": 0.05,
    "ratio_rel": 0.10,
}


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    alpha: Fraction
    d: int
    gamma: Fraction | None
    finite: bool
    intensity: dict
    phi: dict
    T: float
    grid: tuple
    dt: float
    replicas: int
    block_size: int
    truncation_eps: float
    master_seed: int
    tolerances: dict
    theta_grid: tuple
    n_max: int
    t_ladder: tuple

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "alpha": str(self.alpha),
            "d": self.d,
            "gamma": None if self.gamma is None else str(self.gamma),
            "finite": self.finite,
            "intensity": dict(self.intensity),
            "phi": dict(self.phi),
            "T": self.T,
            "grid": list(self.grid),
            "dt": self.dt,
            "replicas": self.replicas,
            "block_size": self.block_size,
            "truncation_eps": self.truncation_eps,
            "master_seed": self.master_seed,
            "tolerances": dict(self.tolerances),
            "theta_grid": list(self.theta_grid),
            "n_max": self.n_max,
            "t_ladder": list(self.t_ladder),
        }


_ALLOWED_KEYS = {
    "schema_version", "scenario", "alpha", "d", "gamma", "finite", "intensity",
    "phi", "T", "grid", "dt", "replicas", "block_size", "truncation_eps",
    "master_seed", "tolerances", "theta_grid", "n_max", "t_ladder",
}


def parse_config(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(doc) - _ALLOWED_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("scenario", "alpha", "d", "T"):
        if key not in doc:
            raise ConfigError(f"missing required config key {key!r}")
    if doc.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {doc['schema_version']}")
    try:
        alpha = as_fraction(doc["alpha"])
        gamma = None if doc.get("gamma") is None else as_fraction(doc["gamma"])
    except DomainError as e:
        raise ConfigError(str(e)) from e
    if not isinstance(doc["d"], int):
        raise ConfigError("d must be a JSON integer")
    intensity = dict(doc.get("intensity", {"kind": "power_smoothed"}))
    if intensity.get("kind") not in ("power_smoothed", "pure_power",
                                    "finite_gaussian"):
        raise ConfigError(f"unknown intensity kind {intensity.get('kind')!r}")
    phi = {"width": 1.0, "amplitude": 1.0, "center": 0.0,
           **doc.get("phi", {})}
    grid = tuple(float(t) for t in doc.get("grid", [0.5, 1.0]))
    if any(t <= 0 or t > 1 for t in grid) or list(grid) != sorted(set(grid)):
        raise ConfigError("grid must be strictly increasing in (0, 1]")
    T = float(doc["T"])
    if T <= 1:
        raise ConfigError("T must exceed 1")
    dt = float(doc.get("dt", T / 1000.0))
    if dt <= 0:
        raise ConfigError("dt must be positive")
    cfg = ScenarioConfig(
        scenario=str(doc["scenario"]),
        alpha=alpha, d=doc["d"], gamma=gamma,
        finite=bool(doc.get("finite", intensity["kind"] == "finite_gaussian")),
        intensity=intensity, phi=phi, T=T, grid=grid, dt=dt,
        replicas=int(doc.get("replicas", 1000)),
        block_size=int(doc.get("block_size", 500)),
        truncation_eps=float(doc.get("truncation_eps", 0.01)),
        master_seed=int(doc.get("master_seed", 0)),
        tolerances={**_DEFAULT_TOLERANCES, **doc.get("tolerances", {})},
        theta_grid=tuple(float(t) for t in doc.get("theta_grid", [0.5, 1.0, 2.0])),
        n_max=int(doc.get("n_max", 11)),
        t_ladder=tuple(float(t) for t in doc.get("t_ladder", [])),
    )
    if cfg.replicas < 2 or cfg.block_size < 1:
        raise ConfigError("replicas must be >= 2 and block_size >= 1")
    return cfg


def load_config(path: str) -> ScenarioConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    return parse_config(doc)


def bundled_config(name: str) -> ScenarioConfig:
    """Load a scenario shipped with the package (see occufluct/configs)."""
    ref = resources.files("occufluct") / "configs" / f"{name}.json"
    if not ref.is_file():
        raise ConfigError(f"no bundled scenario named {name!r}")
    return parse_config(json.loads(ref.read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# scenario materialization


def build_intensity(cfg: ScenarioConfig):
    kind = cfg.intensity["kind"]
    if kind == "finite_gaussian":
        return gaussian_intensity(mass=float(cfg.intensity.get("mass", 1.0)),
                                  width=float(cfg.intensity.get("width", 1.0)),
                                  dim=cfg.d)
    if cfg.gamma is None:
        raise ConfigError("power-law intensities need gamma")
    if kind == "pure_power":
        return PurePower(gamma=float(cfg.gamma), dim=cfg.d)
    return PowerLawSmoothed(gamma=float(cfg.gamma), dim=cfg.d)


def build_phi(cfg: ScenarioConfig) -> GaussianBump:
    center = cfg.phi["center"]
    if cfg.d > 1 and np.isscalar(center):
        center = (float(center),) * cfg.d
    return GaussianBump(width=float(cfg.phi["width"]),
                        amplitude=float(cfg.phi["amplitude"]),
                        center=center)


def classify_config(cfg: ScenarioConfig) -> RegimeSpec:
    return classify(cfg.alpha, cfg.d, cfg.gamma, finite=cfg.finite)


def limit_descriptor(spec: RegimeSpec, law: StableLaw, phi, mu_mass=None):
    """Limit-law descriptor and (when available) the multiplicative constant."""
    g = None if spec.gamma is None else float(spec.gamma)
    window = polynomial_window(0)
    rid = spec.regime_id
    if rid in ("G1", "G4"):
        desc = XiLimit(gamma=g, d=spec.d, alpha=float(spec.alpha))
    elif rid == "G2":
        desc = BetaWienerLimit(gamma=g, alpha=float(spec.alpha))
    elif rid == "G3":
        desc = PotentialWienerLimit(gamma=g, law=law,
                                    spatial=potential_pairing(law, phi, phi))
    elif rid == "C1":
        desc = PotentialConstantLimit(law=law,
                                      spatial=potential_pairing(law, phi, phi))
    elif rid == "C2":
        desc = StandardNormalConstant()
    elif rid == "F1":
        desc = CompoundLocalTime(mu_mass=mu_mass, alpha=float(spec.alpha))
    elif rid == "F2":
        desc = CompoundExponential(mu_mass=mu_mass)
    else:
        raise DomainError(f"regime {rid} has no limit descriptor")
    K = extract_constant_K(spec, law, window)
    return desc, K


# ---------------------------------------------------------------------------
# artifact helpers


def _out_dir(args) -> str:
    out = args.out or os.environ.get(OUT_DIR_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def write_series_csv(path: str, scenario: str, regime: str, rows):
    """rows: iterable of (t, value, se)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        for t, value, se in rows:
            w.writerow([scenario, regime, repr(float(t)),
                        repr(float(value)), repr(float(se))])


def _write_report(out: str, report, runtime: float, threads: int):
    base = os.path.join(out, report.scenario_id)
    with open(base + "_report.json", "w", encoding="utf-8") as f:
        f.write(report.to_json())
    with open(base + "_report.txt", "w", encoding="utf-8") as f:
        f.write(report.to_text() + "\n")
    # wall-clock metadata lives outside the canonical report bytes
    with open(base + "_run_meta.json", "w", encoding="utf-8") as f:
        json.dump({"runtime_seconds": runtime, "threads": threads}, f)


# ---------------------------------------------------------------------------
# subcommands


def cmd_regime(cfg: ScenarioConfig, args) -> int:
    spec = classify_config(cfg)
    print(f"regime: {spec.regime_id}  ({spec.description})")
    print(f"alpha={spec.alpha} d={spec.d} gamma={spec.gamma}")
    if spec.degenerate:
        print("norming: none (total occupation stays bounded)")
    else:
        print(f"kappa={spec.kappa}  log_power={spec.log_power}")
        print(f"F_T at T={cfg.T:g}: {norming(spec, cfg.T):.8g}")
    return 0


def _ensemble(cfg: ScenarioConfig, spec: RegimeSpec, args, centered: bool,
              final_sink: dict | None = None):
    law = StableLaw(float(cfg.alpha), cfg.d)
    mu = build_intensity(cfg)
    phi = build_phi(cfg)
    F = norming(spec, cfg.T)
    radius = truncation_radius(mu, law, cfg.T, phi, eps=cfg.truncation_eps * F)
    sim_grid = np.concatenate(([0.0], cfg.grid))
    cent = (centering_table(mu, law, cfg.T, phi, sim_grid, cfg.dt, radius)
            if centered else None)
    summary = run_ensemble(mu, law, cfg.T, phi, sim_grid, cfg.dt, radius, F,
                           cfg.replicas, cfg.master_seed, centering=cent,
                           block_size=cfg.block_size, threads=args.threads,
                           final_sink=final_sink)
    return summary, law, mu, phi, F, radius


def cmd_simulate(cfg: ScenarioConfig, args) -> int:
    spec = classify_config(cfg)
    if spec.degenerate:
        raise DomainError("regime B has no fluctuation ensemble to simulate")
    t0 = time.perf_counter()
    centered = spec.gaussian
    summary, *_ = _ensemble(cfg, spec, args, centered)
    cov, cov_se = empirical_cov(summary)
    out = _out_dir(args)
    mean = summary.mean
    n = summary.count
    rows_mean = [(t, mean[i + 1], math.sqrt(max(cov[i + 1, i + 1], 0.0) / n))
                 for i, t in enumerate(cfg.grid)]
    rows_var = [(t, cov[i + 1, i + 1], cov_se[i + 1, i + 1])
                for i, t in enumerate(cfg.grid)]
    write_series_csv(os.path.join(out, f"{cfg.scenario}_ensemble_mean.csv"),
                     cfg.scenario, spec.regime_id, rows_mean)
    write_series_csv(os.path.join(out, f"{cfg.scenario}_ensemble_var.csv"),
                     cfg.scenario, spec.regime_id, rows_var)
    with open(os.path.join(out, f"{cfg.scenario}_run_meta.json"), "w",
              encoding="utf-8") as f:
        json.dump({"runtime_seconds": time.perf_counter() - t0,
                   "threads": args.threads}, f)
    print(f"simulated {n} replicas; artifacts in {out}")
    return 0


def cmd_oracle(cfg: ScenarioConfig, args) -> int:
    spec = classify_config(cfg)
    law = StableLaw(float(cfg.alpha), cfg.d)
    mu = build_intensity(cfg)
    phi = build_phi(cfg)
    if spec.degenerate:
        val = total_occupation(mu, law, phi)
        rows = [(0.0, val, 0.0)]
        print(f"total occupation: {val:.8g} (finite)")
    else:
        F = norming(spec, cfg.T)
        rows = []
        for t in cfg.grid:
            r = variance_exact(mu, law, cfg.T, phi, IncrementWindow(0.0, t), F)
            rows.append((t, r.value, r.error))
            print(f"var window (0,{t:g}): {r.value:.8g} +- {r.error:.2g}")
    out = _out_dir(args)
    write_series_csv(os.path.join(out, f"{cfg.scenario}_oracle_variance.csv"),
                     cfg.scenario, spec.regime_id, rows)
    return 0


def cmd_limits(cfg: ScenarioConfig, args) -> int:
    spec = classify_config(cfg)
    if spec.degenerate:
        raise DomainError("regime B has no fluctuation limit law")
    law = StableLaw(float(cfg.alpha), cfg.d)
    phi = build_phi(cfg)
    mass = build_intensity(cfg).mass() if cfg.finite else None
    desc, K = limit_descriptor(spec, law, phi, mu_mass=mass)
    out = _out_dir(args)
    if spec.regime_id in ("F1", "F2"):
        rows = [(th, compound_laplace(desc, th, 1.0, phi.integral, K), 0.0)
                for th in cfg.theta_grid]
        write_series_csv(os.path.join(out, f"{cfg.scenario}_limit_laplace.csv"),
                         cfg.scenario, spec.regime_id, rows)
        print(f"K = {K:.8g}; Laplace values written")
        return 0
    Keff = K if K is not None else 1.0
    C = cov_grid(desc, cfg.grid, Keff)
    with open(os.path.join(out, f"{cfg.scenario}_limit_cov.json"), "w",
              encoding="utf-8") as f:
        json.dump({"schema_version": SCHEMA_VERSION, "scenario": cfg.scenario,
                   "regime": spec.regime_id, "grid": list(cfg.grid),
                   "K": K, "cov": C.tolist()}, f, sort_keys=True)
    rows = [(t, C[i, i], 0.0) for i, t in enumerate(cfg.grid)]
    write_series_csv(os.path.join(out, f"{cfg.scenario}_limit_var.csv"),
                     cfg.scenario, spec.regime_id, rows)
    print(f"K = {K}; covariance grid written")
    return 0


def _verify_bounded(cfg, spec, args, t0) -> int:
    law = StableLaw(float(cfg.alpha), cfg.d)
    mu = build_intensity(cfg)
    phi = build_phi(cfg)
    v1 = total_occupation(mu, law, phi, radius=64.0)
    v2 = total_occupation(mu, law, phi, radius=128.0)
    comps = [
        Comparison("total_occupation_finite", v1, v1,
                   tolerance=0.0, mode="abs",
                   provenance="quadrature of the potential pairing"),
        Comparison("total_occupation_radius_stable", v2, v1,
                   tolerance=1e-4, mode="rel",
                   provenance="outer-radius doubling"),
    ]
    if not (math.isfinite(v1) and math.isfinite(v2)):
        raise QuadratureError("total occupation quadrature diverged")
    report = compare_report(cfg.scenario, spec.regime_id, cfg.master_seed, comps)
    _write_report(_out_dir(args), report, time.perf_counter() - t0, args.threads)
    print(report.to_text())
    return 0 if report.all_passed else 1


def cmd_verify(cfg: ScenarioConfig, args) -> int:
    spec = classify_config(cfg)
    t0 = time.perf_counter()
    tol = cfg.tolerances
    if spec.degenerate:
        return _verify_bounded(cfg, spec, args, t0)

    centered = spec.gaussian
    sink: dict = {}
    summary, law, mu, phi, F, radius = _ensemble(cfg, spec, args, centered,
                                                 final_sink=sink)
    final = collected_final(sink)
    cov, cov_se = empirical_cov(summary)
    mean = summary.mean
    n = summary.count
    comps = []

    if spec.gaussian:
        for i, t in enumerate(cfg.grid):
            se = math.sqrt(max(cov[i + 1, i + 1], 0.0) / n)
            comps.append(Comparison(
                f"mean_t{t:g}", float(mean[i + 1]), 0.0,
                tolerance=tol["mean_sigma"], mode="sigma", se=se,
                provenance="exact centering"))
        for i, t in enumerate(cfg.grid):
            oracle = variance_exact(mu, law, cfg.T, phi,
                                    IncrementWindow(0.0, t), F)
            comps.append(Comparison(
                f"variance_t{t:g}", float(cov[i + 1, i + 1]), oracle.value,
                tolerance=tol["var_sigma"], mode="sigma",
                se=float(cov_se[i + 1, i + 1]),
                provenance="finite-horizon quadrature oracle"))
        desc, K = limit_descriptor(spec, law, phi)
        if not desc.constant_in_time and len(cfg.grid) > 1:
            corr, corr_se = empirical_corr(summary)
            ref = cov_grid(desc, cfg.grid, 1.0)
            dref = np.sqrt(np.diag(ref))
            ref_corr = ref / np.outer(dref, dref)
            for i in range(len(cfg.grid)):
                for j in range(i + 1, len(cfg.grid)):
                    comps.append(Comparison(
                        f"corr_t{cfg.grid[i]:g}_t{cfg.grid[j]:g}",
                        float(corr[i + 1, j + 1]), float(ref_corr[i, j]),
                        tolerance=tol["corr_abs"], mode="abs",
                        se=float(corr_se[i + 1, j + 1]),
                        provenance="limit covariance, K-free"))
        nt = normality_test(final, level=tol["normality_level"])
        comps.append(Comparison(
            "marginal_normality_AD", nt.statistic, 0.0,
            tolerance=nt.critical_value, mode="abs",
            provenance=f"Anderson-Darling at level {nt.level}"))
    else:
        mass = mu.mass()
        desc, K = limit_descriptor(spec, law, phi, mu_mass=mass)
        vals, ses = empirical_laplace(final, cfg.theta_grid)
        for th, v, se in zip(cfg.theta_grid, vals, ses):
            expected = compound_laplace(desc, th, float(cfg.grid[-1]),
                                        phi.integral, K)
            comps.append(Comparison(
                f"laplace_theta{th:g}", float(v), expected,
                tolerance=tol["laplace_sigma"] * se
                + tol["laplace_rel"] * abs(expected),
                mode="abs", se=float(se),
                provenance="compound limit transform + slow-log allowance"))

    report = compare_report(cfg.scenario, spec.regime_id, cfg.master_seed, comps)
    _write_report(_out_dir(args), report, time.perf_counter() - t0, args.threads)
    out = _out_dir(args)
    rows_var = [(t, cov[i + 1, i + 1], cov_se[i + 1, i + 1])
                for i, t in enumerate(cfg.grid)]
    write_series_csv(os.path.join(out, f"{cfg.scenario}_ensemble_var.csv"),
                     cfg.scenario, spec.regime_id, rows_var)
    print(report.to_text())
    return 0 if report.all_passed else 1


def cmd_counterexample(cfg: ScenarioConfig, args) -> int:
    if cfg.d != 1 or cfg.gamma is None:
        raise DomainError("counterexample needs d=1 and a power-law gamma")
    law = StableLaw(float(cfg.alpha), 1)
    phi = build_phi(cfg)
    ns = list(range(2, cfg.n_max + 1))
    vals = counterexample_subsequence(ns, float(cfg.gamma), law,
                                     polynomial_window(0), phi.integral)
    out = _out_dir(args)
    rows = [(n, v, 0.0) for n, v in zip(ns, vals)]
    write_series_csv(os.path.join(out, f"{cfg.scenario}_counterexample.csv"),
                     cfg.scenario, "G1", rows)
    comps = []
    for i in range(len(ns) - 1):
        if ns[i] < 6:
            continue
        r = vals[i + 1] / vals[i]
        comps.append(Comparison(
            f"oscillation_ratio_n{ns[i]}", max(r, 1.0 / r), 2.0,
            tolerance=cfg.tolerances["ratio_rel"], mode="rel",
            provenance="annulus subsequence of the modulated intensity"))
    report = compare_report(cfg.scenario, "G1", cfg.master_seed, comps)
    _write_report(out, report, 0.0, args.threads)
    print(report.to_text())
    return 0 if report.all_passed else 1


def cmd_decay(cfg: ScenarioConfig, args) -> int:
    law = StableLaw(float(cfg.alpha), cfg.d)
    mu = build_intensity(cfg)
    phi = build_phi(cfg)
    ladder = cfg.t_ladder or tuple(np.geomspace(1e2, 1e4, 7))
    vals, slope = mean_decay(mu, law, phi, ladder)
    out = _out_dir(args)
    rows = [(t, v, 0.0) for t, v in zip(ladder, vals)]
    write_series_csv(os.path.join(out, f"{cfg.scenario}_decay.csv"),
                     cfg.scenario, "-", rows)
    target = -cfg.d / float(cfg.alpha)
    comps = [Comparison("mean_decay_slope", slope, target,
                        tolerance=cfg.tolerances["slope_abs"], mode="abs",
                        provenance="log-log fit of the expected occupation")]
    report = compare_report(cfg.scenario, "-", cfg.master_seed, comps)
    _write_report(out, report, 0.0, args.threads)
    print(report.to_text())
    return 0 if report.all_passed else 1


_COMMANDS = {
    "regime": cmd_regime,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
    "limits": cmd_limits,
    "verify": cmd_verify,
    "counterexample": cmd_counterexample,
    "decay": cmd_decay,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="occufluct",
        description="Occupation-time fluctuation simulator and verifier "
                    "for inhomogeneous stable particle systems.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="path to a scenario JSON file")
        src.add_argument("--bundled", help="name of a bundled scenario")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the master seed")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", default=None,
                        help=f"output directory (default ${OUT_DIR_ENV} or cwd)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = (bundled_config(args.bundled) if args.bundled
               else load_config(args.config))
        if args.seed is not None:
            cfg = parse_config({**cfg.to_dict(), "master_seed": args.seed})
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DomainError as e:
        print(f"inadmissible regime/parameters: {e}", file=sys.stderr)
        return 3
    except (QuadratureError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
