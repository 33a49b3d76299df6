"""Iterated function systems of similitudes on the line.

An IFS is a list of maps ``f_j(x) = r_j x + b_j`` with probability weights
``p_j``. This module validates such lists, conjugates them onto [0, 1],
composes words of maps and enumerates the stopping word sets

    W_t = { shortest words w with r_w <= exp(-t) },

which are prefix-free and carry total weight one.
"""

import json
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import (
    EmptyWordError,
    ExplosionError,
    IfsValidationError,
    RatioRangeError,
    SingletonError,
    TooFewMapsError,
    WeightRangeError,
    WeightSumError,
)

WEIGHT_TOL = 1e-12
SINGLETON_TOL = 1e-12
HULL_TOL = 1e-14
HULL_MAX_ITER = 50
DEFAULT_WORD_CAP = 50_000_000


class SpecSchemaError(IfsValidationError):
    """The spec file parsed as JSON but does not follow the map schema."""


@dataclass(frozen=True)
class SimilitudeMap:
    ratio: float
    translation: float
    weight: float

    def __call__(self, x):
        return self.ratio * x + self.translation

    @property
    def fixed_point(self):
        return self.translation / (1.0 - self.ratio)


@dataclass(frozen=True)
class CompositeMap:
    """The similitude f_w(x) = ratio * x + translation with weight p_w."""

    ratio: float
    translation: float
    weight: float

    def __call__(self, x):
        return self.ratio * x + self.translation

    def then(self, other):
        """Return ``self o other`` (apply ``other`` first)."""
        return CompositeMap(
            self.ratio * other.ratio,
            self.ratio * other.translation + self.translation,
            self.weight * other.weight,
        )


@dataclass(frozen=True)
class IfsSpec:
    maps: tuple
    normalized: bool = False

    def __len__(self):
        return len(self.maps)

    @property
    def ratios(self):
        return np.array([m.ratio for m in self.maps])

    @property
    def translations(self):
        return np.array([m.translation for m in self.maps])

    @property
    def weights(self):
        return np.array([m.weight for m in self.maps])

    @property
    def fixed_points(self):
        return np.array([m.fixed_point for m in self.maps])

    @property
    def r_min(self):
        return min(m.ratio for m in self.maps)

    @property
    def r_max(self):
        return max(m.ratio for m in self.maps)

    def hull(self):
        return attractor_hull(self)

    def to_dict(self):
        return {"maps": [{"r": m.ratio, "b": m.translation, "p": m.weight} for m in self.maps]}


def _maps_inside_unit(maps, tol=WEIGHT_TOL):
    return all(m.translation >= -tol and m.ratio + m.translation <= 1.0 + tol for m in maps)


def validate_ifs(raw_spec):
    """Check a list of ``(ratio, translation, weight)`` triples.

    Returns an :class:`IfsSpec`; the maps are not moved. ``normalized`` is set
    when every map already sends [0, 1] into itself.
    """
    raw = [tuple(float(v) for v in item) for item in raw_spec]
    if len(raw) < 2:
        raise TooFewMapsError(f"an IFS needs at least 2 maps, got {len(raw)}", n_maps=len(raw))
    for j, (r, b, p) in enumerate(raw):
        if not (0.0 < r < 1.0) or not math.isfinite(b):
            raise RatioRangeError(f"map {j}: ratio {r} is not in (0, 1)", index=j, ratio=r)
        if not (0.0 < p < 1.0):
            raise WeightRangeError(f"map {j}: weight {p} is not in (0, 1)", index=j, weight=p)
    total = math.fsum(p for _, _, p in raw)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise WeightSumError(f"weights sum to {total!r}, not 1", weight_sum=total)
    maps = tuple(SimilitudeMap(r, b, p) for r, b, p in raw)
    fps = [m.fixed_point for m in maps]
    if max(fps) - min(fps) <= SINGLETON_TOL:
        raise SingletonError("all fixed points coincide; the attractor is a point", fixed_point=fps[0])
    return IfsSpec(maps, normalized=_maps_inside_unit(maps))


def attractor_hull(spec):
    """Endpoints [A, B] of the convex hull of the attractor.

    Iterates A -> min_j f_j(A), B -> max_j f_j(B). Started from the extreme
    fixed points, which for positive ratios are already the fixed points of
    these maps, so the loop normally exits after one pass.
    """
    r, b = spec.ratios, spec.translations
    fps = spec.fixed_points
    lo, hi = float(fps.min()), float(fps.max())
    for _ in range(HULL_MAX_ITER):
        new_lo = float(np.min(r * lo + b))
        new_hi = float(np.max(r * hi + b))
        done = abs(new_lo - lo) <= HULL_TOL * max(1.0, abs(lo)) and abs(new_hi - hi) <= HULL_TOL * max(1.0, abs(hi))
        lo, hi = new_lo, new_hi
        if done:
            break
    return lo, hi


def normalize_to_unit(spec):
    """Affinely conjugate ``spec`` so that its attractor hull is [0, 1]."""
    lo, hi = attractor_hull(spec)
    if abs(lo) <= HULL_TOL and abs(hi - 1.0) <= HULL_TOL:
        return spec if spec.normalized else IfsSpec(spec.maps, normalized=True)
    width = hi - lo
    maps = tuple(
        SimilitudeMap(m.ratio, (m.ratio * lo + m.translation - lo) / width, m.weight) for m in spec.maps
    )
    return IfsSpec(maps, normalized=True)


def load_spec(path, normalize=False):
    """Read an IFS spec file ``{"maps": [{"r":..., "b":..., "p":...}, ...]}``.

    ``json.JSONDecodeError`` propagates for malformed text.
    """
    with open(path) as fh:
        text = fh.read()
    return parse_spec(json.loads(text), normalize=normalize)


def parse_spec(doc, normalize=False):
    if not isinstance(doc, dict) or not isinstance(doc.get("maps"), list):
        raise SpecSchemaError('expected an object with a "maps" list')
    raw = []
    for j, entry in enumerate(doc["maps"]):
        if not isinstance(entry, dict) or not all(k in entry for k in ("r", "b", "p")):
            raise SpecSchemaError(f'map {j} must be an object with keys "r", "b", "p"', index=j)
        try:
            raw.append((float(entry["r"]), float(entry["b"]), float(entry["p"])))
        except (TypeError, ValueError):
            raise SpecSchemaError(f"map {j} has a non-numeric field", index=j) from None
    spec = validate_ifs(raw)
    return normalize_to_unit(spec) if normalize else spec


def compose(spec, word):
    """Composite map f_w = f_{w1} o ... o f_{wn}."""
    word = list(word)
    if not word:
        raise EmptyWordError("cannot compose the empty word")
    n = len(spec.maps)
    for j in word:
        if not 0 <= j < n:
            raise IndexError(f"letter {j} out of range for {n} maps")
    r, b, p = 1.0, 0.0, 1.0
    for j in word:
        m = spec.maps[j]
        b = r * m.translation + b
        r = r * m.ratio
        p = p * m.weight
    return CompositeMap(r, b, p)


@dataclass(frozen=True)
class StoppingWordSet:
    """The stopping word set W_t in depth-first (lexicographic) order.

    Composite maps are stored column-wise; words, when requested, are kept as
    a flat letter array with CSR offsets.
    """

    threshold: float
    ratios: np.ndarray
    translations: np.ndarray
    weights: np.ndarray
    letters: np.ndarray = field(default=None, repr=False)
    offsets: np.ndarray = field(default=None, repr=False)
    prefix_free_by_construction: bool = True

    def __len__(self):
        return self.ratios.size

    @property
    def has_words(self):
        return self.letters is not None

    def word(self, i):
        return tuple(int(j) for j in self.letters[self.offsets[i]:self.offsets[i + 1]])

    @property
    def words(self):
        return [self.word(i) for i in range(len(self))]

    def lengths(self):
        return np.diff(self.offsets)

    def entries(self):
        for i in range(len(self)):
            yield self.word(i), CompositeMap(
                float(self.ratios[i]), float(self.translations[i]), float(self.weights[i])
            )

    def total_weight(self):
        return math.fsum(self.weights)

    def is_prefix_free(self):
        """Explicit check; in sorted order any prefix sits right before an extension.

        Consecutive words are compared letter by letter on the CSR arrays. If
        the stored order is not lexicographic the words are sorted first.
        """
        n = len(self)
        if n < 2:
            return True
        lens = self.lengths()
        a, b = np.arange(n - 1), np.arange(1, n)
        common = np.minimum(lens[a], lens[b])
        first_diff = common.copy()
        for k in range(int(common.max())):
            live = (k < common) & (first_diff == common)
            if not live.any():
                break
            la = self.letters[self.offsets[a[live]] + k]
            lb = self.letters[self.offsets[b[live]] + k]
            idx = np.flatnonzero(live)[la != lb]
            first_diff[idx] = k
        tied = first_diff == common
        da = np.where(tied, 0, self.letters[self.offsets[a] + np.where(tied, 0, first_diff)])
        db = np.where(tied, 0, self.letters[self.offsets[b] + np.where(tied, 0, first_diff)])
        ordered = np.where(tied, lens[a] <= lens[b], da < db)
        if not ordered.all():
            words = sorted(self.words)
            return all(words[i + 1][: len(words[i])] != words[i] for i in range(len(words) - 1))
        return not bool(np.any(tied))


def similarity_dimension(spec):
    """The exponent D with sum_j r_j**D = 1."""
    r = spec.ratios
    f = lambda d: float(np.sum(r**d)) - 1.0
    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=1e-14)


def stopping_count_bounds(spec, t):
    """Bounds e^{Dt} <= |W_t| < (e^t / r_min)^D, from sum_{W_t} r_w^D = 1."""
    d = similarity_dimension(spec)
    lo = math.exp(min(d * t, 700.0))
    hi = math.exp(min(d * (t - math.log(spec.r_min)), 700.0))
    return lo, hi


def enumerate_stopping_words(spec, t, cap=DEFAULT_WORD_CAP, with_words=True, backend=None):
    """Enumerate W_t depth-first, letters in spec order.

    A word stops at the first prefix whose ratio is <= exp(-t), so every
    ratio lies in (r_min e^{-t}, e^{-t}].
    """
    if t < 0:
        raise ValueError("threshold t must be non-negative")
    lo, hi = stopping_count_bounds(spec, t)
    if lo > cap:
        raise ExplosionError(
            f"|W_t| at t={t} is at least {lo:.3g}, above the cap {cap}",
            t=t, estimated_count=hi, lower_bound=lo, cap=cap,
        )
    threshold = math.exp(-t)
    try:
        r, b, p, letters, offsets = kernels.stopping_words(
            spec.ratios, spec.translations, spec.weights, threshold, int(cap), with_words, backend=backend
        )
    except OverflowError:
        raise ExplosionError(
            f"|W_t| at t={t} exceeds the cap {cap}", t=t, estimated_count=hi, lower_bound=lo, cap=cap
        ) from None
    return StoppingWordSet(threshold, r, b, p, letters, offsets)


def moments(spec, K):
    """Moments m_0..m_K of the self-similar measure.

    From mu = sum_j p_j f_j mu:
    m_k (1 - sum_j p_j r_j^k) = sum_j p_j sum_{i<k} C(k,i) r_j^i b_j^(k-i) m_i.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    r, b, p = spec.ratios, spec.translations, spec.weights
    m = np.zeros(K + 1)
    m[0] = 1.0
    for k in range(1, K + 1):
        acc = 0.0
        for i in range(k):
            acc += comb(k, i) * float(np.sum(p * r**i * b ** (k - i))) * m[i]
        m[k] = acc / (1.0 - float(np.sum(p * r**k)))
    return m
