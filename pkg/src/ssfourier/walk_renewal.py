"""Random walk with steps -log r_j and its renewal theory.

The step law is lambda = sum_j p_j delta_{x_j} with x_j = -log r_j > 0 and
mean sigma. For a level t the stopping time is n_t = inf{n >= 1 : S_n >= t};
the overshoot S_{n_t} - t converges in law to the density p(x)/sigma with
p(x) = lambda((x, inf)).

Monte Carlo routines draw trajectory i from a counter-based stream keyed by
(seed, i), and work is cut into fixed-size chunks, so results depend only on
the seed and never on the worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import ExplosionError, LatticeResonanceError

MERGE_TOL = 1e-12
RESONANCE_TOL = 1e-13
SERIES_CUTOFF = 1e-4
EXACT_NODE_CAP = 10_000_000


@dataclass(frozen=True)
class StepDistribution:
    steps: np.ndarray  # distinct atoms, ascending
    probs: np.ndarray

    @property
    def mean(self):
        return float(np.dot(self.probs, self.steps))

    sigma = mean

    @property
    def second_moment(self):
        return float(np.dot(self.probs, self.steps**2))

    @property
    def third_moment(self):
        return float(np.dot(self.probs, self.steps**3))

    @property
    def max_step(self):
        return float(self.steps[-1])

    @property
    def min_step(self):
        return float(self.steps[0])

    @property
    def cumulative(self):
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        return cum

    @property
    def atoms(self):
        return list(zip(self.steps.tolist(), self.probs.tolist()))


def make_distribution(steps, probs):
    """Build a step law from raw atoms, merging atoms closer than 1e-12."""
    steps = np.asarray(steps, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if np.any(steps <= 0):
        raise ValueError("steps must be positive")
    if abs(math.fsum(probs) - 1.0) > 1e-12:
        raise ValueError("probabilities must sum to 1")
    order = np.argsort(steps, kind="stable")
    xs, ps = [], []
    for x, p in zip(steps[order], probs[order]):
        if xs and x - xs[-1] <= MERGE_TOL:
            ps[-1] += p
        else:
            xs.append(float(x))
            ps.append(float(p))
    return StepDistribution(np.array(xs), np.array(ps))


def step_distribution(spec):
    return make_distribution(-np.log(spec.ratios), spec.weights)


# -- Monte Carlo plumbing ---------------------------------------------------

def _chunked(fn, n, workers):
    bounds = [(s, min(n, s + kernels.CHUNK)) for s in range(0, n, kernels.CHUNK)]
    if workers <= 1 or len(bounds) == 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


@dataclass(frozen=True)
class ResidueSample:
    stop_index: int
    overshoot: float
    crossing_step: float
    undershoot: float


@dataclass(frozen=True)
class ResidueBatch:
    t: float
    stop_index: np.ndarray
    before: np.ndarray  # S_{n_t - 1}
    crossing_step: np.ndarray

    def __len__(self):
        return self.stop_index.size

    @property
    def overshoot(self):
        return self.before + self.crossing_step - self.t

    @property
    def undershoot(self):
        return self.t - self.before

    def sample(self, i):
        return ResidueSample(
            int(self.stop_index[i]), float(self.overshoot[i]),
            float(self.crossing_step[i]), float(self.undershoot[i]),
        )


def sample_residues(dist, t, n, seed, workers=1, backend=None):
    """n independent stopped walks at level t."""
    steps, cum = dist.steps, dist.cumulative

    def run(a, b):
        return kernels.walk_stop(steps, cum, kernels.stream_keys(seed, a, b - a), float(t), backend=backend)

    parts = _chunked(run, int(n), workers)
    return ResidueBatch(
        float(t),
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
    )


def sample_stopping(dist, t, seed, index=0, backend=None):
    """Trajectory ``index`` of the stream ``seed``, stopped at level t."""
    keys = kernels.stream_keys(seed, index, 1)
    n_t, before, crossing = kernels.walk_stop(dist.steps, dist.cumulative, keys, float(t), backend=backend)
    return ResidueBatch(float(t), n_t, before, crossing).sample(0)


# -- limit law ---------------------------------------------------------------

@dataclass(frozen=True)
class LimitOvershootLaw:
    """Density p(x)/sigma on [0, max_step) with p piecewise constant."""

    breakpoints: np.ndarray  # 0, x_1, ..., x_m
    tail_values: np.ndarray  # p on [breakpoints[k], breakpoints[k+1])
    mean: float

    @property
    def max_step(self):
        return float(self.breakpoints[-1])

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.breakpoints, x, side="right") - 1
        out = np.where((k >= 0) & (k < self.tail_values.size), self.tail_values[np.clip(k, 0, self.tail_values.size - 1)], 0.0)
        return np.where(x < 0, 1.0, out)

    def integral(self, x):
        """int_0^x p(u) du for x >= 0, exact."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.max_step)
        widths = np.diff(self.breakpoints)
        cum = np.concatenate([[0.0], np.cumsum(widths * self.tail_values)])
        k = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0, self.tail_values.size - 1)
        return cum[k] + (x - self.breakpoints[k]) * self.tail_values[k]

    def cdf(self, x):
        return np.minimum(self.integral(x) / self.mean, 1.0)

    def total_mass(self):
        return float(self.integral(self.max_step)) / self.mean

    def overshoot_mean(self):
        # (1/sigma) int x p(x) dx, piece by piece
        a, b = self.breakpoints[:-1], self.breakpoints[1:]
        return float(np.sum(self.tail_values * (b**2 - a**2) / 2.0)) / self.mean


def limit_law(dist):
    breaks = np.concatenate([[0.0], dist.steps])
    # p(x) = lambda((x, inf)) on [x_{k-1}, x_k)
    tails = np.array([dist.probs[k:].sum() for k in range(dist.steps.size)])
    return LimitOvershootLaw(breaks, tails, dist.mean)


def overshoot_cdf_limit(law, x):
    return law.cdf(x)


def ks_statistic(samples, cdf):
    """Kolmogorov-Smirnov distance between a sample and a continuous CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    f = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def overshoot_histogram(batch, law, bins=40):
    edges = np.linspace(0.0, law.max_step, bins + 1)
    counts, _ = np.histogram(batch.overshoot, bins=edges)
    emp = counts / len(batch)
    lim = np.diff(law.cdf(edges))
    return [
        {"bin_left": float(a), "bin_right": float(b), "empirical_mass": float(e), "limit_mass": float(m)}
        for a, b, e, m in zip(edges[:-1], edges[1:], emp, lim)
    ]


# -- renewal, residue and cutoff operators -----------------------------------

def renewal_operator_mc(dist, f, support, t, n, seed, workers=1, backend=None):
    """Estimate R f(t) = sum_{n>=0} E f(S_n - t) for f supported in [a, b].

    ``f`` must accept numpy arrays. Returns (estimate, standard error).
    """
    a, b = support
    lo, hi = t + a, t + b
    steps, cum = dist.steps, dist.cumulative

    def run(i0, i1):
        counts, pos = kernels.walk_window(steps, cum, kernels.stream_keys(seed, i0, i1 - i0), lo, hi, backend=backend)
        vals = np.asarray(f(pos - t), dtype=float) if pos.size else np.zeros(0)
        sums = np.zeros(counts.size)
        nz = counts > 0
        if vals.size:
            starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
            sums[nz] = np.add.reduceat(vals, starts[nz])
        return sums

    per_traj = np.concatenate(_chunked(run, int(n), workers))
    return float(per_traj.mean()), float(per_traj.std(ddof=1) / math.sqrt(per_traj.size))


def renewal_operator_exact(dist, f, support, t, cap=EXACT_NODE_CAP):
    """Exact R f(t) for f supported in [a, b].

    S_n depends only on how many times each atom was used, so the sum over
    all step sequences with S_n <= t + b is regrouped by count vectors with
    multinomial weights. Positions are correctly rounded sums of c_j * x_j.
    """
    a, b = support
    hi = t + b
    if hi < 0:
        return 0.0
    xs = dist.steps.tolist()
    ps = dist.probs.tolist()
    m = len(xs)
    positions, weights = [], []
    visited = 0
    stack = [()]
    while stack:
        counts = stack.pop()
        j = len(counts)
        if j == m:
            visited += 1
            if visited > cap:
                raise ExplosionError(f"more than {cap} count vectors below level {hi}", cap=cap)
            s = math.fsum(c * x for c, x in zip(counts, xs))
            if s - t < a:
                continue
            mult, left = 1, sum(counts)
            for c in counts:
                mult *= math.comb(left, c)
                left -= c
            positions.append(s - t)
            weights.append(float(mult) * math.prod(p**c for p, c in zip(ps, counts)))
            continue
        terms = [c * x for c, x in zip(counts, xs)]
        c = 0
        while math.fsum(terms + [c * xs[j]]) <= hi:
            stack.append(counts + (c,))
            c += 1
    if not positions:
        return 0.0
    vals = np.asarray(f(np.array(positions)), dtype=float)
    return math.fsum(np.array(weights) * vals)


@dataclass(frozen=True)
class CrossingLaw:
    """Exact finite-t law of (X_{n_t}, S_{n_t - 1}) as weighted atoms."""

    t: float
    crossing_step: np.ndarray
    before: np.ndarray
    prob: np.ndarray

    @property
    def overshoot(self):
        return self.before + self.crossing_step - self.t

    def expect(self, f):
        return math.fsum(self.prob * np.asarray(f(self.crossing_step, self.before - self.t), dtype=float))

    def overshoot_cdf(self, x):
        v = self.overshoot
        order = np.argsort(v, kind="stable")
        v, cum = v[order], np.cumsum(self.prob[order])
        k = np.searchsorted(v, np.asarray(x, dtype=float), side="right")
        return np.where(k > 0, cum[np.maximum(k - 1, 0)], 0.0)

    def ks_to(self, cdf):
        """Exact sup-distance between this discrete overshoot law and ``cdf``."""
        v = self.overshoot
        order = np.argsort(v, kind="stable")
        v, m = v[order], self.prob[order]
        F = np.cumsum(m)
        G = cdf(v)
        return float(max(np.max(np.abs(F - G)), np.max(np.abs(F - m - G))))


def exact_crossing_law(dist, t, cap=EXACT_NODE_CAP):
    """Enumerate the crossing step and pre-crossing position at level t > 0.

    A walk visits the count vector c (sum c_j x_j < t) with probability
    multinomial(c) prod p_j^c_j; it then crosses with step x_j whenever
    S + x_j >= t.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    xs = dist.steps.tolist()
    logp = np.log(dist.probs).tolist()
    m = len(xs)
    ys, befores, probs = [], [], []
    visited = 0
    stack = [()]
    while stack:
        counts = stack.pop()
        j = len(counts)
        if j == m:
            visited += 1
            if visited > cap:
                raise ExplosionError(f"more than {cap} count vectors below level {t}", cap=cap)
            s = math.fsum(c * x for c, x in zip(counts, xs))
            n = sum(counts)
            lw = math.lgamma(n + 1) + sum(c * lp - math.lgamma(c + 1) for c, lp in zip(counts, logp))
            for x, lp in zip(xs, logp):
                if s + x >= t:
                    ys.append(x)
                    befores.append(s)
                    probs.append(math.exp(lw + lp))
            continue
        terms = [c * x for c, x in zip(counts, xs)]
        c = 0
        while math.fsum(terms + [c * xs[j]]) < t:
            stack.append(counts + (c,))
            c += 1
    return CrossingLaw(float(t), np.array(ys), np.array(befores), np.array(probs))


def cutoff_indicators(dist, t, n, seed, workers=1, backend=None):
    """Per-trajectory value of sum_n 1{S_n < t <= S_n + X_{n+1}}.

    With S_0 = 0 the walk is taken to start strictly below any level t >= 0
    (the first step may cross), matching n_t >= 1.
    """
    batch = sample_residues(dist, t, n, seed, workers, backend)
    below = (batch.before < t) | (batch.stop_index == 1)
    crosses = batch.before + batch.crossing_step >= t
    # earlier indices never cross: S_{k+1} < t for k + 1 < n_t by definition of n_t
    return (below & crosses).astype(float)


def cutoff_mass(dist, t, n, seed, workers=1, backend=None):
    if t < 0:
        raise ValueError("t must be >= 0")
    return float(cutoff_indicators(dist, t, n, seed, workers, backend).mean())


@dataclass(frozen=True)
class JointResidue:
    estimate: float
    se: float
    limit: float


def joint_residue_limit(dist, f):
    """(1/sigma) sum_j p_j int_{-x_j}^0 f(x_j, u) du."""
    acc = 0.0
    for x, p in zip(dist.steps, dist.probs):
        val, _ = quad(lambda u: float(f(x, u)), -x, 0.0, limit=200, epsabs=1e-13, epsrel=1e-12)
        acc += p * val
    return acc / dist.mean


def joint_residue_check(dist, f, t, n, seed, workers=1, backend=None):
    """Compare E f(X_{n_t}, S_{n_t - 1} - t) with its renewal limit.

    The limit carries the 1/sigma factor so that f = 1 gives total mass one.
    """
    if t <= dist.max_step + 1:
        raise ValueError("need t > max_step + 1")
    batch = sample_residues(dist, t, n, seed, workers, backend)
    vals = np.asarray(f(batch.crossing_step, batch.before - t), dtype=float)
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(vals.size))
    return JointResidue(est, se, joint_residue_limit(dist, f))


# -- Laplace transform diagnostics ------------------------------------------

def laplace(dist, z):
    """L lambda(z) = sum_j p_j exp(-z x_j); accepts scalars or arrays."""
    z = np.asarray(z, dtype=complex)
    out = np.exp(-z[..., None] * dist.steps) @ dist.probs
    return complex(out) if out.ndim == 0 else out


def one_minus_laplace_imag(dist, b):
    """1 - L lambda(ib), written without cancellation near b = 0."""
    b = np.asarray(b, dtype=float)
    theta = b[..., None] * dist.steps
    re = (2.0 * np.sin(theta / 2.0) ** 2) @ dist.probs
    im = np.sin(theta) @ dist.probs
    return re + 1j * im


def u_function(dist, b):
    """u(ib) = 1/(1 - L lambda(ib)) - 1/(sigma i b)."""
    b = float(b)
    sigma, m2, m3 = dist.mean, dist.second_moment, dist.third_moment
    if abs(b) < SERIES_CUTOFF:
        # 1 - L(z) = sigma z - m2 z^2/2 + m3 z^3/6 + O(z^4)
        a = m2 / (2.0 * sigma)
        c = m3 / (6.0 * sigma)
        return complex(a / sigma + (a * a - c) / sigma * 1j * b)
    d = complex(one_minus_laplace_imag(dist, b))
    if abs(d) < RESONANCE_TOL:
        raise LatticeResonanceError(f"1 - L(ib) vanishes at b = {b}", b=b, value=abs(d))
    return 1.0 / d - 1.0 / (sigma * 1j * b)


@dataclass(frozen=True)
class DiophScan:
    l: float
    min_weighted: float
    argmin: float
    min_abs: float
    grid_min_weighted: float
    grid_argmin: float
    n_grid: int


def _weighted(dist, b, l):
    return np.abs(b) ** l * np.abs(one_minus_laplace_imag(dist, b))


def _gauss_newton(dist, b, lo, hi, iters=30):
    """Polish a minimiser of |1 - L(ib)| by Gauss-Newton on the complex residual."""
    x, p = dist.steps, dist.probs
    for _ in range(iters):
        e = np.exp(-1j * b * x)
        g = 1.0 - np.sum(p * e)
        dg = 1j * np.sum(p * x * e)
        step = (np.conj(dg) * g).real / (abs(dg) ** 2)
        nb = min(hi, max(lo, b - step))
        if nb == b:
            break
        b = nb
    return b


def weakly_dioph_scan(dist, l, b_max, grid_step, refine=True, chunk=1_000_000, keep_every=None):
    """Minimise |b|^l |1 - L lambda(ib)| over 1 <= b <= b_max.

    A grid scan with the given step, followed by a bounded local search in
    the grid cell around the best grid point. With ``keep_every`` set, every
    k-th grid row is also returned for CSV output.
    """
    if l <= 0 or b_max <= 1:
        raise ValueError("need l > 0 and b_max > 1")
    n = int(math.floor((b_max - 1.0) / grid_step)) + 1
    best_val, best_b = math.inf, 1.0
    rows = []
    for s in range(0, n, chunk):
        b = 1.0 + grid_step * np.arange(s, min(n, s + chunk))
        absd = np.abs(one_minus_laplace_imag(dist, b))
        w = b**l * absd
        k = int(np.argmin(w))
        if w[k] < best_val:
            best_val, best_b = float(w[k]), float(b[k])
        if keep_every:
            sel = slice((-s) % keep_every, None, keep_every)
            rows.extend(zip(b[sel].tolist(), absd[sel].tolist(), w[sel].tolist()))
    val, arg = best_val, best_b
    if refine:
        lo, hi = max(1.0, best_b - grid_step), min(b_max, best_b + grid_step)
        res = minimize_scalar(
            lambda x: float(_weighted(dist, x, l)), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-14, "maxiter": 500},
        )
        for x in (float(res.x), _gauss_newton(dist, float(res.x), lo, hi)):
            v = float(_weighted(dist, x, l))
            if v < val:
                val, arg = v, x
    arg = float(arg)
    scan = DiophScan(l, val, arg, val / arg**l, best_val, best_b, n)
    return (scan, rows) if keep_every else scan
