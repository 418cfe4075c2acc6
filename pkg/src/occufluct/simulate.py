"""Monte Carlo engine for occupation-time functionals of stable particle systems.

A replica samples a Poisson configuration of initial positions inside a
certified truncation ball, evolves every particle by independent stable
increments on a uniform dt lattice, and accumulates the midpoint-rule
occupation integral of the test function.  Replicas are grouped into blocks;
each block draws its randomness from a counter-based stream derived from
(master seed, block index), so ensembles merge deterministically regardless
of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, interpolate

from .errors import DomainError, QuadratureError
from .intensity import IntensityMeasure, mean_functional
from .quadrature import gauss_panels, graded_edges
from .stable_motion import StableLaw, density, sample_increment, tail_constant
from .testfunc import GaussianBump


@dataclass(frozen=True)
class FluctuationPath:
    """Grid-sampled path of a rescaled occupation functional.

    kind "X": centered fluctuation; "Y"/"Z": uncentered occupation (ensemble
    and single-path variants).  grid holds fractions of the horizon T.
    """

    grid: np.ndarray
    values: np.ndarray
    T: float
    kind: str

    def __post_init__(self):
        if self.kind not in ("X", "Y", "Z"):
            raise DomainError(f"unknown path kind {self.kind!r}")


# ---------------------------------------------------------------------------
# truncation certification


def _time_window_occupation(law: StableLaw, T: float, phi: GaussianBump, x):
    """q(x) = int_0^T (T_s phi)(x) ds, vectorized over x (d=1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    c, rad = phi.center[0], phi.support_radius()
    y, wy = gauss_panels(np.linspace(c - rad, c + rad, 17), 12)
    s, ws = gauss_panels(graded_edges(T, 14, lo_frac=1e-5), 8)
    out = np.zeros_like(x)
    for sk, wk in zip(s, ws):
        # p_s(x - y) over the outer-point/test-point grid
        p = density(law, sk, (x[:, None] - y[None, :]).ravel()).reshape(len(x), len(y))
        out += wk * p @ (wy * phi(y))
    return out


def truncation_radius(mu: IntensityMeasure, law: StableLaw, T: float,
                      phi, eps: float, r_max: float = 2.0**26) -> float:
    """Smallest ladder radius R with a certified bound on the expected
    occupation of all particles started outside the ball of radius R:

        int_{|x|>R} int_0^T (T_s phi)(x) ds mu(dx) < eps.

    The bound is evaluated by quadrature out to a large cutoff, plus an
    analytic power-law remainder from the stable-density tail estimate.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if law.dim != 1 or mu.dim != 1:
        raise DomainError("truncation certification implemented for d=1")
    total = getattr(phi, "integral", None)
    if total == 0.0:
        return max(1.0, 2.0 * T ** (1.0 / law.alpha))
    rad = phi.support_radius()
    R = max(4.0, 2.0 * abs(phi.center[0]) + 2.0 * rad, 2.0 * T ** (1.0 / law.alpha))
    while R <= r_max:
        if _truncation_tail_bound(mu, law, T, phi, R) < eps:
            return R
        R *= 2.0
    raise QuadratureError(f"truncation budget {eps} unreachable below {r_max}")


def _truncation_tail_bound(mu, law, T, phi, R: float) -> float:
    X = 64.0 * R
    r, w = gauss_panels(np.geomspace(R, X, 25), 12)
    q = _time_window_occupation(law, T, phi, r) + _time_window_occupation(law, T, phi, -r)
    dens = mu.radial_density(r)
    val = float(np.sum(w * dens * q))
    # analytic remainder: p_s(u) <= 2 c_alpha s |u|^{-1-alpha} in the far tail
    a = law.alpha
    if a < 2.0:
        c = 2.0 * tail_constant(a) * T**2 / 2.0 * phi.integral
        off = abs(phi.center[0]) + phi.support_radius()
        # compactify x = X / v so the power tail integrates smoothly
        v, wv = gauss_panels(np.linspace(0.0, 1.0, 13), 10)
        x = X / v
        rem = float(np.sum(wv * mu.radial_density(x)
                           * (x - off) ** (-1.0 - a) * X / v**2))
        val += 2.0 * c * rem
    else:
        # Gaussian tails: verify the last decade is already negligible
        lastq = _time_window_occupation(law, T, phi, np.array([X]))[0]
        if lastq * mu.radial_density(X) * X > 1e-6 * max(val, 1e-300):
            raise QuadratureError("gaussian tail cutoff not converged")
    return val


# ---------------------------------------------------------------------------
# grid / lattice bookkeeping


def _grid_step_counts(grid, T: float, dt: float) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0) or grid[-1] > 1.0 + 1e-12:
        raise DomainError("grid must start at 0, increase, and end at <= 1")
    counts = grid * T / dt
    rounded = np.rint(counts)
    if np.max(np.abs(counts - rounded)) > 1e-9:
        raise DomainError("dt must divide every grid time T*t_i")
    return rounded.astype(np.int64)


def replica_stream(master_seed: int, block_index: int) -> np.random.Generator:
    """Counter-based stream for one block, splittable from the master seed."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(block_index,))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# raw occupation simulation


def simulate_block(mu: IntensityMeasure, law: StableLaw, T: float,
                   phi, grid, dt: float, radius: float,
                   master_seed: int, block_index: int,
                   replicas: int) -> np.ndarray:
    """Raw occupation paths int_0^{T t_i} <N_s, phi> ds for one block.

    Returns an array of shape (replicas, len(grid)).  All particles of the
    block evolve together; per-replica sums are separated with bincount.
    The time integral is the midpoint rule: one half step moves positions to
    the first midpoint, then full steps walk midpoint to midpoint.
    """
    if law.dim != 1:
        raise DomainError("simulation engine implemented for d=1")
    steps_at = _grid_step_counts(grid, T, dt)
    n_steps = int(steps_at[-1])
    rng = replica_stream(master_seed, block_index)

    pos_list, rep_ids = [], []
    for b in range(replicas):
        cfg = mu.sample_points(radius, rng)
        pts = np.atleast_1d(cfg.points)
        pos_list.append(pts.astype(float))
        rep_ids.append(np.full(len(pts), b, dtype=np.int64))
    pos = np.concatenate(pos_list) if pos_list else np.zeros(0)
    ids = np.concatenate(rep_ids) if rep_ids else np.zeros(0, dtype=np.int64)

    out = np.zeros((replicas, len(grid)))
    if n_steps == 0:
        return out
    acc = np.zeros(replicas)
    record = {int(s): i for i, s in enumerate(steps_at) if s > 0}
    if len(pos):
        pos = pos + sample_increment(law, dt / 2.0, rng, size=len(pos))
    for k in range(1, n_steps + 1):
        if len(pos):
            acc += dt * np.bincount(ids, weights=phi(pos), minlength=replicas)
        i = record.get(k)
        if i is not None:
            out[:, i] = acc
        if k < n_steps and len(pos):
            pos += sample_increment(law, dt, rng, size=len(pos))
    return out


def centering_table(mu: IntensityMeasure, law: StableLaw, T: float,
                    phi, grid, dt: float, radius: float) -> np.ndarray:
    """Deterministic centering int_0^{T t_i} E<N_s, phi> ds.

    Uses the truncated intensity (mu restricted to the simulation ball) and
    the same midpoint lattice as the simulator, so the centered ensemble has
    exactly zero mean at the discretized level.  The mean s -> E<N_s, phi> is
    evaluated by quadrature at spline nodes and interpolated to midpoints.
    """
    steps_at = _grid_step_counts(grid, T, dt)
    n_steps = int(steps_at[-1])
    if n_steps == 0:
        return np.zeros(len(steps_at))
    mids = (np.arange(n_steps) + 0.5) * dt
    # E<N_s, phi> is smooth; a modest node set resolves it
    nodes = np.unique(np.concatenate((
        [0.0], np.geomspace(dt / 4.0, T, 40), [T])))
    vals = np.array([mean_functional(mu, law, s, phi, radius=radius)
                     for s in nodes])
    mean_at = interpolate.CubicSpline(nodes, vals)(mids)
    cum = dt * np.cumsum(mean_at)
    out = np.zeros(len(steps_at))
    nz = steps_at > 0
    out[nz] = cum[steps_at[nz] - 1]
    return out


def fluctuation_path(raw: np.ndarray, centering: np.ndarray, grid,
                     T: float, F_T: float) -> FluctuationPath:
    """Center the raw occupation path and divide by the norming."""
    if F_T <= 0:
        raise DomainError("norming must be positive")
    if centering is None:
        raise DomainError("centering table is required for fluctuation paths")
    values = (np.asarray(raw, dtype=float) - np.asarray(centering)) / F_T
    return FluctuationPath(grid=np.asarray(grid, dtype=float),
                           values=values, T=T, kind="X")


def occupation_path(raw: np.ndarray, grid, T: float, F_T: float,
                    kind: str = "Y") -> FluctuationPath:
    """Uncentered occupation divided by the norming (kinds Y and Z)."""
    if kind not in ("Y", "Z"):
        raise DomainError("occupation paths have kind Y or Z")
    if F_T <= 0:
        raise DomainError("norming must be positive")
    return FluctuationPath(grid=np.asarray(grid, dtype=float),
                           values=np.asarray(raw, dtype=float) / F_T,
                           T=T, kind=kind)


def simulate_single_path(law: StableLaw, T: float, phi, grid, dt: float,
                         rng, start: float = 0.0) -> np.ndarray:
    """Occupation of phi along one particle path from a deterministic start."""
    steps_at = _grid_step_counts(grid, T, dt)
    n_steps = int(steps_at[-1])
    out = np.zeros(len(grid))
    if n_steps == 0:
        return out
    x = start + float(sample_increment(law, dt / 2.0, rng))
    acc = 0.0
    record = {int(s): i for i, s in enumerate(steps_at) if s > 0}
    for k in range(1, n_steps + 1):
        acc += dt * float(phi(np.array(x)))
        i = record.get(k)
        if i is not None:
            out[i] = acc
        if k < n_steps:
            x += float(sample_increment(law, dt, rng))
    return out


# ---------------------------------------------------------------------------
# local time of a single recurrent stable path


def local_time_estimate(path: np.ndarray, eps_band: float, dt: float) -> float:
    """Occupation-density estimate of the local time at 0 from a discretized
    path: (1 / 2 eps) * (time spent in [-eps, eps])."""
    if eps_band <= 0 or dt <= 0:
        raise DomainError("eps_band and dt must be positive")
    path = np.asarray(path, dtype=float)
    return float(dt * np.count_nonzero(np.abs(path) <= eps_band) / (2.0 * eps_band))


def simulate_local_times(law: StableLaw, times, eps_band: float, dt: float,
                         n_paths: int, rng, start: float = 0.0) -> np.ndarray:
    """Local-time estimates at several times for n_paths independent paths.

    Returns shape (n_paths, len(times)).  Positions are advanced jointly
    across paths; the band time is accumulated online, so memory stays flat
    regardless of the number of steps.
    """
    if law.dim != 1:
        raise DomainError("local time defined for d=1")
    if law.alpha <= 1.0:
        raise DomainError("local time at a point requires alpha > 1")
    times = np.asarray(times, dtype=float)
    steps_at = np.rint(times / dt).astype(np.int64)
    if np.max(np.abs(times / dt - steps_at)) > 1e-9:
        raise DomainError("dt must divide every requested time")
    n_steps = int(steps_at.max())
    counts = np.zeros(n_paths, dtype=np.int64)
    out = np.zeros((n_paths, len(times)))
    record = {int(s): i for i, s in enumerate(steps_at) if s > 0}
    x = start + sample_increment(law, dt / 2.0, rng, size=n_paths)
    for k in range(1, n_steps + 1):
        counts += np.abs(x) <= eps_band
        i = record.get(k)
        if i is not None:
            out[:, i] = counts * dt / (2.0 * eps_band)
        if k < n_steps:
            x += sample_increment(law, dt, rng, size=n_paths)
    return out
