"""Arithmetic of the contraction ratios.

Decides (at working precision) whether the atoms -log r_j generate a lattice
in the reals, estimates diophantine exponents of their quotients from
continued fractions, and recognises Pisot numbers by their polynomial roots.
None of this is a certificate: irrationality cannot be decided in floating
point, so verdicts carry the depth and precision they were reached at.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .errors import NonMonicError, RationalInputError
from .walk_renewal import step_distribution

RATIONAL_TOL = 1e-12
DENOM_CAP = 10**6
LATTICE_TOL = 1e-10
FLOAT_MAX_TERMS = 40


@dataclass(frozen=True)
class ContinuedFractionExpansion:
    value: object
    a0: int
    quotients: tuple
    convergents: tuple  # (p_k, q_k) starting with (a0, 1)
    terminated: bool = False  # remainder hit (numerical) zero

    def to_dict(self):
        return {
            "value": float(self.value),
            "a0": self.a0,
            "quotients": list(self.quotients),
            "convergents": [list(c) for c in self.convergents],
        }


def _is_mp(x):
    return isinstance(x, (mpmath.mpf, mpmath.mpc))


def continued_fraction(x, max_terms=20, tol=None):
    """Partial quotients of x > 0 by the Euclidean algorithm.

    Floats stop when the remainder drops below 1e-12 and allow at most 40
    terms. ``Fraction`` input is expanded exactly; mpmath input runs at the
    current mpmath precision with a tolerance scaled to it.
    """
    if isinstance(x, Fraction):
        exact, frac_tol = True, 0
    elif _is_mp(x):
        exact, frac_tol = False, mpmath.mpf(2) ** (-mpmath.mp.prec + 20) if tol is None else tol
    else:
        x = float(x)
        exact, frac_tol = False, RATIONAL_TOL if tol is None else tol
        if max_terms > FLOAT_MAX_TERMS:
            raise ValueError(f"max_terms {max_terms} is beyond double-precision reach ({FLOAT_MAX_TERMS})")
    if not x > 0:
        raise ValueError("x must be positive")
    a0 = int(math.floor(x)) if not _is_mp(x) else int(mpmath.floor(x))
    frac = x - a0
    quotients = []
    p_prev, q_prev, p, q = 1, 0, a0, 1
    convergents = [(p, q)]
    terminated = frac == 0 if exact else frac < frac_tol
    while not terminated and len(quotients) < max_terms:
        y = 1 / frac
        a = int(mpmath.floor(y)) if _is_mp(y) else int(math.floor(y))
        frac = y - a
        quotients.append(a)
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        convergents.append((p, q))
        terminated = frac == 0 if exact else frac < frac_tol
    return ContinuedFractionExpansion(x, a0, tuple(quotients), tuple(convergents), bool(terminated))


def _abs_error(x, p, q):
    if _is_mp(x):
        return abs(x - mpmath.mpf(p) / q)
    return abs(Fraction(x) - Fraction(p, q))


def _precision_floor(x):
    """Approximation errors below this are representation noise."""
    if _is_mp(x):
        return abs(x) * mpmath.mpf(2) ** (-mpmath.mp.prec + 8)
    if isinstance(x, Fraction):
        return 0
    return 4 * np.finfo(float).eps * max(1.0, abs(x))


def diophantine_exponent_estimate(x, depth=30):
    """Local exponents log(1 / |x - p_k/q_k|) / log q_k along the convergents.

    Returns ``(l_estimate, exponents)`` with l_estimate the maximum. Only
    convergents with q_k >= 2 and an error above the input's precision
    floor are used, so this is a lower bound on the diophantine type.
    """
    cf = continued_fraction(x, depth if _is_mp(x) else min(depth, FLOAT_MAX_TERMS))
    if cf.terminated:
        raise RationalInputError(f"{float(x)!r} is rational at working precision", value=float(x))
    floor = _precision_floor(x)
    exps = []
    for p, q in cf.convergents:
        if q < 2:
            continue
        err = _abs_error(x, p, q)
        if err <= floor:
            break
        if _is_mp(x):
            exps.append(float(-mpmath.log(err) / mpmath.log(q)))
        else:
            exps.append(-math.log(err) / math.log(q))
    if not exps:
        raise RationalInputError("no convergent above the precision floor", value=float(x))
    return max(exps), exps


@dataclass(frozen=True)
class RatioTest:
    pair: tuple
    ratio: float
    status: str  # rational | irrational | undetermined
    approximant: tuple = None
    expansion: ContinuedFractionExpansion = field(default=None, repr=False)


def _test_ratio(pair, x, depth):
    # A good convergent alone proves nothing (|x - p/q| < 1/q^2 always), so
    # rationality means the expansion itself terminates with q <= 1e6.
    cf = continued_fraction(x, min(depth, FLOAT_MAX_TERMS))
    p, q = cf.convergents[-1]
    if cf.terminated and q <= DENOM_CAP and abs(x - p / q) <= RATIONAL_TOL * max(1.0, x):
        return RatioTest(pair, x, "rational", (p, q), cf)
    if any(qq > DENOM_CAP for _, qq in cf.convergents):
        return RatioTest(pair, x, "irrational", None, cf)
    return RatioTest(pair, x, "undetermined", None, cf)


@dataclass(frozen=True)
class GroupClassification:
    verdict: str
    witness: object
    depth: int
    tests: tuple = field(default=(), repr=False)

    @property
    def generator(self):
        return self.witness if self.verdict == "lattice" else None

    @property
    def qualifier(self):
        return f"at working precision, depth {self.depth}"


def classify_group(spec, depth=30):
    """Lattice / non-lattice verdict for the additive group of the atoms.

    Every quotient a_j / a_i of distinct atoms is expanded. It counts as
    rational if the expansion terminates on a convergent with q <= 1e6 that
    matches within 1e-12, and as irrational if the convergents pass q = 1e6
    first; if the depth runs out before either, the verdict is undetermined.
    """
    atoms = step_distribution(spec).steps
    if atoms.size == 1:
        return GroupClassification("lattice", float(atoms[0]), depth)
    tests = []
    for i in range(atoms.size):
        for j in range(i + 1, atoms.size):
            tests.append(_test_ratio((i, j), float(atoms[j] / atoms[i]), depth))
    for tst in tests:
        if tst.status == "irrational":
            return GroupClassification("non-lattice", tst.pair, depth, tuple(tests))
    if any(tst.status == "undetermined" for tst in tests):
        return GroupClassification("undetermined", None, depth, tuple(tests))
    # a_j = (p_j / q_j) a_0; write every atom as n_j * a_0 / L with L = lcm(q_j)
    base = [tst for tst in tests if tst.pair[0] == 0]
    L = math.lcm(*(tst.approximant[1] for tst in base))
    n = [L] + [tst.approximant[0] * L // tst.approximant[1] for tst in base]
    g = float(atoms[0]) * math.gcd(*n) / L
    mult = atoms / g
    if np.max(np.abs(mult - np.round(mult))) > LATTICE_TOL * max(1.0, float(mult.max())):
        return GroupClassification("undetermined", None, depth, tuple(tests))
    return GroupClassification("lattice", g, depth, tuple(tests))


def diagnostic_report(spec, depth=30):
    """Report dict {verdict, witness, convergents, l_estimate, qualifier}."""
    cls = classify_group(spec, depth)
    convergents, l_est = [], None
    if cls.verdict == "non-lattice":
        tst = next(t for t in cls.tests if t.pair == cls.witness)
        convergents = [list(c) for c in tst.expansion.convergents]
        l_est, _ = diophantine_exponent_estimate(tst.ratio, depth)
        witness = list(cls.witness)
    else:
        witness = cls.witness
        for tst in cls.tests:
            convergents.append([list(c) for c in tst.expansion.convergents])
    return {
        "verdict": cls.verdict,
        "witness": witness,
        "convergents": convergents,
        "l_estimate": l_est,
        "qualifier": cls.qualifier,
    }


def pisot_check(poly, tol=1e-9):
    """Numerical Pisot test for a monic integer polynomial (highest degree first).

    True iff exactly one root is real and > 1 and every other root has
    modulus below 1 - tol. Returns (is_pisot, roots by decreasing modulus).
    """
    coeffs = list(poly)
    if len(coeffs) < 2:
        raise ValueError("polynomial must have degree >= 1")
    if any(int(c) != c for c in coeffs):
        raise ValueError("coefficients must be integers")
    if coeffs[0] != 1:
        raise NonMonicError(f"leading coefficient is {coeffs[0]}, not 1", leading=coeffs[0])
    roots = np.roots(np.asarray(coeffs, dtype=float))
    roots = roots[np.argsort(-np.abs(roots), kind="stable")]
    big = [z for z in roots if abs(z.imag) <= tol * max(1.0, abs(z)) and z.real > 1.0]
    if len(big) != 1:
        return False, roots
    rest = np.delete(roots, int(np.flatnonzero(roots == big[0])[0]))
    return bool(np.all(np.abs(rest) < 1.0 - tol)), roots
