"""Fourier transform of self-similar measures, mu_hat(xi) = int e^{-2 pi i xi x} dmu.

The production evaluator expands mu = sum_{w in W_t} p_w f_w mu once, with t
chosen so that every |r_w xi| <= xi0, and evaluates each mu_hat(r_w xi) by a
Taylor series in the exact moments. With supp mu in [0, 1] the truncation
error of that series is at most (2 pi xi0)^(K+1) / (K+1)!, which is the
certified bound reported.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientBandsError, ToleranceError, UnequalRatioError
from .ifs_core import DEFAULT_WORD_CAP, enumerate_stopping_words, moments
from .regularity import sample_measure

XI0 = 0.25
MAX_TAYLOR = 60
TWO_PI = 2.0 * math.pi
MC_BIAS = 1e-12


@dataclass(frozen=True)
class FourierEvaluation:
    frequency: float
    value: complex
    error_bound: float

    def to_dict(self):
        return {"xi": self.frequency, "re": self.value.real, "im": self.value.imag, "error_bound": self.error_bound}


def taylor_degree(tol, xi0=XI0):
    """Smallest K with (2 pi xi0)^(K+1) / (K+1)! <= tol, and that bound."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = TWO_PI * xi0
    for K in range(MAX_TAYLOR + 1):
        bound = a ** (K + 1) / math.factorial(K + 1)
        if bound <= tol:
            return K, bound
    raise ToleranceError(f"tolerance {tol} needs Taylor degree above {MAX_TAYLOR}", tol=tol)


def _require_unit(spec):
    if not spec.normalized:
        raise ValueError("spec must be normalized to [0, 1] (see normalize_to_unit)")


def _taylor(coeffs, z):
    """sum_k coeffs[k] z^k by Horner; z real array."""
    acc = np.full(z.shape, coeffs[-1], dtype=complex)
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    return acc


def _coefficients(spec, K):
    m = moments(spec, K)
    k = np.arange(K + 1)
    return (-2j * math.pi) ** k * m / np.array([math.factorial(int(i)) for i in k], dtype=float)


def fourier_many(spec, xis, tol=1e-10, xi0=XI0, cap=DEFAULT_WORD_CAP, backend=None):
    """Evaluate mu_hat at several frequencies sharing one stopping set.

    The set is built for the largest |xi|, which keeps |r_w xi| <= xi0 for
    every requested frequency.
    """
    _require_unit(spec)
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    K, bound = taylor_degree(tol, xi0)
    coeffs = _coefficients(spec, K)
    peak = float(np.max(np.abs(xis))) if xis.size else 0.0
    out = []
    if peak <= xi0:
        for xi in xis:
            if xi == 0.0:
                out.append(FourierEvaluation(0.0, 1.0 + 0j, 0.0))
            else:
                out.append(FourierEvaluation(float(xi), complex(_taylor(coeffs, np.array([xi]))[0]), bound))
        return out
    W = enumerate_stopping_words(spec, math.log(peak / xi0), cap=cap, with_words=False, backend=backend)
    for xi in xis:
        if xi == 0.0:
            out.append(FourierEvaluation(0.0, 1.0 + 0j, 0.0))
            continue
        phase = np.exp(-TWO_PI * 1j * xi * W.translations)
        val = np.sum(W.weights * phase * _taylor(coeffs, W.ratios * xi))
        out.append(FourierEvaluation(float(xi), complex(val), bound))
    return out


def fourier_recursive(spec, xi, tol=1e-10, xi0=XI0, cap=DEFAULT_WORD_CAP, backend=None):
    return fourier_many(spec, [xi], tol, xi0, cap, backend)[0]


def fourier_product_equal_ratio(spec, xi, depth):
    """prod_{k<depth} phi(r^k xi), phi(xi) = sum_j p_j e^{-2 pi i xi b_j}.

    Valid when every map has the same ratio r; the omitted factor
    mu_hat(r^depth xi) differs from 1 by at most ``product_tail_bound``.
    """
    r = spec.ratios
    if np.max(np.abs(r - r[0])) > 1e-15 * r[0]:
        raise UnequalRatioError("product formula needs equal ratios", ratios=r.tolist())
    if depth < 1:
        raise ValueError("depth must be >= 1")
    b, p = spec.translations, spec.weights
    scales = float(r[0]) ** np.arange(depth) * xi
    factors = np.exp(-TWO_PI * 1j * scales[:, None] * b[None, :]) @ p
    return complex(np.prod(factors))


def product_tail_bound(spec, xi, depth):
    return TWO_PI * float(spec.ratios[0]) ** depth * abs(xi) * float(moments(spec, 1)[1])


def fourier_mc(spec, xi, n, depth=None, seed=0, workers=1):
    """Monte Carlo mean of e^{-2 pi i xi X} over X ~ mu; (estimate, standard error).

    The default depth makes r_max**depth <= 1e-12.
    """
    if depth is None:
        depth = int(math.ceil(math.log(MC_BIAS) / math.log(spec.r_max)))
    x = sample_measure(spec, n, depth=depth, seed=seed, workers=workers).points
    z = np.exp(-TWO_PI * 1j * xi * x)
    est = complex(z.mean())
    se = math.sqrt(float(np.mean(np.abs(z - est) ** 2)) / n)
    return est, se


@dataclass(frozen=True)
class Band:
    xi_low: float
    xi_high: float
    sup_abs: float
    n_samples: int

    @property
    def xi_mid(self):
        return math.sqrt(self.xi_low * self.xi_high)


@dataclass(frozen=True)
class SpectrumScan:
    bands: tuple

    def rows(self):
        return [
            {"xi_low": b.xi_low, "xi_high": b.xi_high, "sup_abs_mu_hat": b.sup_abs, "n_samples": b.n_samples}
            for b in self.bands
        ]

    @classmethod
    def from_rows(cls, rows):
        return cls(tuple(
            Band(float(r["xi_low"]), float(r["xi_high"]), float(r["sup_abs_mu_hat"]), int(r["n_samples"]))
            for r in rows
        ))


def band_edges(xi_max, bands_per_decade, xi_min=1.0):
    n = max(1, int(math.ceil(bands_per_decade * math.log10(xi_max / xi_min) - 1e-9)))
    return np.geomspace(xi_min, xi_max, n + 1)


def _band_frequencies(lo, hi, samples, seed, index):
    n_det = max(2, samples // 2)
    det = np.geomspace(lo, hi, n_det)
    rng = np.random.default_rng([seed, index])
    jit = lo * (hi / lo) ** rng.random(samples - n_det) if samples > n_det else np.zeros(0)
    return np.concatenate([det, jit])


def spectrum_scan(spec, xi_max=None, bands_per_decade=4, samples_per_band=16, seed=0,
                  edges=None, tol=1e-8, workers=1, cap=DEFAULT_WORD_CAP):
    """Sampled band suprema of |mu_hat| over consecutive frequency bands.

    Each band gets log-spaced deterministic frequencies plus seeded random
    ones. The recorded sup is a lower bound on the true band supremum.
    """
    if edges is None:
        edges = band_edges(xi_max, bands_per_decade)
    edges = np.asarray(edges, dtype=float)
    if edges[0] < 1.0 or np.any(np.diff(edges) <= 0):
        raise ValueError("band edges must be increasing and start at xi >= 1")

    def one(i):
        lo, hi = float(edges[i]), float(edges[i + 1])
        xs = _band_frequencies(lo, hi, samples_per_band, seed, i)
        vals = fourier_many(spec, xs, tol=tol, cap=cap)
        return Band(lo, hi, max(abs(v.value) for v in vals), len(xs))

    idx = range(len(edges) - 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            bands = list(pool.map(one, idx))
    else:
        bands = [one(i) for i in idx]
    return SpectrumScan(tuple(bands))


@dataclass(frozen=True)
class DecayFit:
    beta: float
    intercept: float
    residual: float
    n_bands: int

    def to_dict(self):
        return {"beta": self.beta, "intercept": self.intercept, "residual": self.residual, "n_bands": self.n_bands}


def fit_log_decay(scan, min_bands=5):
    """Fit sup ~ exp(intercept) (log xi)^(-beta) over bands with xi_low >= e^2."""
    used = [b for b in scan.bands if b.xi_low >= math.e**2]
    if len(used) < min_bands:
        raise InsufficientBandsError(f"need {min_bands} bands with xi_low >= e^2, got {len(used)}", n_bands=len(used))
    x = np.log(np.log([b.xi_mid for b in used]))
    sups = np.array([b.sup_abs for b in used])
    if np.any(sups <= 0):
        raise ValueError("band suprema must be positive")
    y = np.log(sups)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (intercept + slope * x)) ** 2)))
    return DecayFit(float(-slope), float(intercept), resid, len(used))


def stopping_sum_sides(spec, s, t, x, y, cap=DEFAULT_WORD_CAP, backend=None):
    """Both sides of

        sum_{W_t} p_w e^{-2 pi i s e^t (f_w(x) - f_w(y))}
            = sum_{W_t} p_w g_{s(x-y)}(-log r_w - t),   g_a(r) = exp(-2 pi i a e^{-r}).

    The left side evaluates the composite maps directly in extended precision,
    since f_w(x) - f_w(y) cancels about log10(e^t) digits.
    """
    W = enumerate_stopping_words(spec, t, cap=cap, with_words=False, backend=backend)
    ld = np.longdouble
    r, b = W.ratios.astype(ld), W.translations.astype(ld)
    xi = ld(s) * np.exp(ld(t))
    diff = (r * ld(x) + b) - (r * ld(y) + b)
    ang = ld(2) * ld(np.pi) * xi * diff
    lhs = complex(math.fsum(W.weights * np.cos(ang).astype(float)), -math.fsum(W.weights * np.sin(ang).astype(float)))
    a = s * (x - y)
    g = np.exp(-TWO_PI * 1j * a * np.exp(-(-np.log(W.ratios) - t)))
    rhs = complex(math.fsum(W.weights * g.real), math.fsum(W.weights * g.imag))
    return lhs, rhs


def stopping_sum_identity(spec, s, t, x, y, cap=DEFAULT_WORD_CAP, backend=None):
    lhs, rhs = stopping_sum_sides(spec, s, t, x, y, cap, backend)
    return abs(lhs - rhs)


@dataclass(frozen=True)
class DoubleSum:
    estimate: float
    se: float
    imag: float
    imag_se: float
    n_words: int


def double_sum_bound(spec, xi, t, n_pairs, seed=0, workers=1, cap=DEFAULT_WORD_CAP, backend=None):
    """Monte Carlo over (x, y) ~ mu x mu of sum_{W_t} p_w e^{-2 pi i xi (f_w(x) - f_w(y))}.

    Since f_w(x) - f_w(y) = r_w (x - y) the inner sum is exact per pair. The
    double integral is real; the imaginary part is returned as a check.
    """
    W = enumerate_stopping_words(spec, t, cap=cap, with_words=False, backend=backend)
    pts = sample_measure(spec, 2 * n_pairs, seed=seed, workers=workers).points
    d = pts[:n_pairs] - pts[n_pairs:]
    rows = max(1, 4_000_000 // len(W))
    re = np.empty(n_pairs)
    im = np.empty(n_pairs)
    for i in range(0, n_pairs, rows):
        ang = TWO_PI * xi * np.outer(d[i:i + rows], W.ratios)
        re[i:i + rows] = np.cos(ang) @ W.weights
        im[i:i + rows] = -(np.sin(ang) @ W.weights)
    sq = math.sqrt(n_pairs)
    return DoubleSum(float(re.mean()), float(re.std(ddof=1) / sq), float(im.mean()), float(im.std(ddof=1) / sq), len(W))


def _gauss_legendre_panels(fn, a, b, panels, order=20):
    nodes, wts = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    u = mids[:, None] + half[:, None] * nodes[None, :]
    return complex(np.sum(half[:, None] * wts[None, :] * fn(u)))


def oscillation_integral(dist, s, tol=1e-10):
    """(1/sigma) int_0^inf exp(-2 pi i s e^{-r}) p(r) dr, p(r) = lambda((r, inf)).

    With u = e^{-r} each constant piece of p becomes p_k int e^{-2 pi i s u}/u du
    over [e^{-x_k}, e^{-x_{k-1}}], done by composite Gauss-Legendre with the
    panel count doubled until two successive results agree to ``tol``.
    """
    if s == 0:
        raise ValueError("s must be nonzero")
    breaks = np.concatenate([[0.0], dist.steps])
    tails = np.array([dist.probs[k:].sum() for k in range(dist.steps.size)])
    fn = lambda u: np.exp(-TWO_PI * 1j * s * u) / u
    total = 0j
    for k, pk in enumerate(tails):
        a, b = math.exp(-breaks[k + 1]), math.exp(-breaks[k])
        panels = int(math.ceil(abs(s) * (b - a))) + 2
        prev = _gauss_legendre_panels(fn, a, b, panels)
        for _ in range(12):
            panels *= 2
            cur = _gauss_legendre_panels(fn, a, b, panels)
            if abs(cur - prev) <= tol * 0.1:
                break
            prev = cur
        total += pk * cur
    return total / dist.mean
