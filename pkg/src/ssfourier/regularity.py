"""Empirical access to the self-similar measure.

Points are drawn as f_{w_1} o ... o f_{w_d}(midpoint of the hull) with
i.i.d. letters; with r_max**d <= 1e-10 the law is within 1e-10 of mu.

The exponent fitted here is the correlation exponent of the pair-counting
function r -> (mu x mu){|x - y| <= r}, a companion to the uniform Hoelder
bound mu(B(x, r)) <= C r**alpha rather than that bound itself.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ifs_core import attractor_hull

SAMPLE_BIAS = 1e-10
CHUNK = 1 << 16


@dataclass(frozen=True)
class MeasureSample:
    points: np.ndarray
    depth: int
    seed: int
    hull: tuple

    def __len__(self):
        return self.points.size


def default_depth(spec, bias=SAMPLE_BIAS):
    return int(math.ceil(math.log(bias) / math.log(spec.r_max)))


def _sample_chunk(spec, count, depth, seed, chunk, mid):
    rng = np.random.default_rng([seed, chunk])
    cum = np.cumsum(spec.weights)
    cum[-1] = 1.0
    letters = np.searchsorted(cum, rng.random((count, depth)), side="right")
    r, b = spec.ratios, spec.translations
    x = np.full(count, mid)
    # innermost map is the last letter
    for k in range(depth - 1, -1, -1):
        col = letters[:, k]
        x = r[col] * x + b[col]
    return x


def sample_measure(spec, n, depth=None, seed=0, workers=1):
    if depth is None:
        depth = default_depth(spec)
    if spec.r_max**depth > SAMPLE_BIAS:
        raise ValueError(f"depth {depth} leaves bias {spec.r_max**depth:.2e} > {SAMPLE_BIAS}")
    lo, hi = attractor_hull(spec)
    mid = 0.5 * (lo + hi)
    bounds = [(c, min(n, c + CHUNK)) for c in range(0, n, CHUNK)]
    job = lambda ab: _sample_chunk(spec, ab[1] - ab[0], depth, seed, ab[0] // CHUNK, mid)
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, bounds))
    else:
        parts = [job(ab) for ab in bounds]
    pts = np.concatenate(parts) if parts else np.zeros(0)
    return MeasureSample(pts, depth, seed, (lo, hi))


def neighbour_counts(sorted_points, r):
    """For each point, how many *other* points lie within distance r."""
    x = sorted_points
    right = np.searchsorted(x, x + r, side="right")
    left = np.searchsorted(x, x - r, side="left")
    return right - left - 1


def pair_mass(sorted_points, r):
    """U-statistic estimate of (mu x mu){|x - y| <= r} and its standard error."""
    n = sorted_points.size
    share = neighbour_counts(sorted_points, r) / (n - 1)
    # Hoeffding projection: Var(U) ~ 4 Var(h_1) / n
    return float(share.mean()), float(2.0 * share.std(ddof=1) / math.sqrt(n))


@dataclass(frozen=True)
class HolderFit:
    alpha: float
    c_constant: float
    radii: np.ndarray
    masses: np.ndarray
    ses: np.ndarray
    residual: float
    intercept: float
    kind: str = "correlation"

    def rows(self):
        return [
            {"radius": float(r), "mass_estimate": float(m), "se": float(s)}
            for r, m, s in zip(self.radii, self.masses, self.ses)
        ]

    def report(self):
        return {
            "alpha": self.alpha,
            "C": self.c_constant,
            "residual": self.residual,
            "radii_range": [float(self.radii.min()), float(self.radii.max())],
            "exponent_kind": self.kind,
        }


def holder_exponent_fit(spec, radii, n, seed=0, workers=1):
    """Fit mass(r) ~ C r**alpha by least squares in log-log coordinates.

    ``c_constant`` is the envelope constant max_r mass(r) / r**alpha over the
    fitted radii, so the fitted curve bounds the estimates from above there.
    """
    radii = np.asarray(radii, dtype=float)
    lo, hi = attractor_hull(spec)
    if radii.size < 2 or np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")
    if radii.min() <= 0 or radii.max() >= hi - lo:
        raise ValueError("radii must lie in (0, hull width)")
    pts = np.sort(sample_measure(spec, n, seed=seed, workers=workers).points)
    est = [pair_mass(pts, r) for r in radii]
    masses = np.array([m for m, _ in est])
    ses = np.array([s for _, s in est])
    if np.any(masses <= 0):
        raise ValueError("some radius saw no pairs; increase n or the radii")
    slope, intercept = np.polyfit(np.log(radii), np.log(masses), 1)
    fitted = intercept + slope * np.log(radii)
    resid = float(np.sqrt(np.mean((np.log(masses) - fitted) ** 2)))
    c_env = float(np.max(masses / radii**slope))
    return HolderFit(float(slope), c_env, radii, masses, ses, resid, float(intercept))


def correlation_mass(spec, delta, n, seed=0, workers=1):
    """Fraction of n independent pairs (x, y) ~ mu x mu with |x - y| <= delta."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    pts = sample_measure(spec, 2 * n, seed=seed, workers=workers).points
    hit = np.abs(pts[:n] - pts[n:]) <= delta
    p = float(hit.mean())
    return p, math.sqrt(p * (1.0 - p) / n)
