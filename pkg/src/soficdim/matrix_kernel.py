"""Exact non-negative integer matrix arithmetic.

Matrices are tuples of row tuples of Python ints, so products over long
strings never overflow.  Floating point only appears in
:func:`spectral_radius` and wherever a caller raises a scalar to a real power.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .graph_model import AdjacencyFamily, Matrix

Vector = Tuple[int, ...]
RowDirection = Tuple[int, ...]


class NotProportionalError(ArithmeticError):
    """A row vector expected to lie on ``span{v}`` does not."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, bracket):
        self.bracket = bracket
        super().__init__(f"{message}; last bracket {bracket}")


def identity(n: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def is_zero(a: Matrix) -> bool:
    return not any(any(row) for row in a)


def multiply(a: Matrix, b: Matrix) -> Matrix:
    if len(a[0]) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)}x{len(a[0])} times {len(b)}x{len(b[0])}")
    cols = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def vec_mat(v: Sequence[int], a: Matrix) -> Vector:
    """Row vector times matrix, ``v^T A``."""
    n = len(a[0])
    return tuple(sum(v[k] * a[k][j] for k in range(len(v)) if v[k]) for j in range(n))


def entry_sum_norm(a) -> int:
    """Sum of all entries; the fixed matrix norm used throughout."""
    if a and isinstance(a[0], (tuple, list)):
        return sum(sum(row) for row in a)
    return sum(a)


def matrix_sum(mats: Iterable[Matrix]) -> Matrix:
    mats = list(mats)
    n = len(mats[0])
    return tuple(tuple(sum(m[i][j] for m in mats) for j in range(n)) for i in range(n))


def is_primitive(a: Matrix) -> bool:
    """True iff some power up to Wielandt's bound ``(n-1)^2 + 1`` is positive."""
    n = len(a)
    skel = np.array([[1 if x else 0 for x in row] for row in a], dtype=np.int64)
    power = skel.copy()
    for _ in range((n - 1) ** 2 + 1):
        if power.all():
            return True
        power = ((power @ skel) > 0).astype(np.int64)
    return False


def normalize_direction(v: Sequence) -> RowDirection:
    """Canonical integer representative of the line spanned by ``v``.

    Rational entries are cleared of denominators, the gcd is divided out and
    the first nonzero entry is made positive.
    """
    fr = [Fraction(x) for x in v]
    if not any(fr):
        raise ValueError("zero vector spans no line")
    lcm = 1
    for x in fr:
        lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in fr]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def image_rank1(a: Matrix) -> Optional[RowDirection]:
    """Spanning row of ``{x^T A}`` when that row space is exactly one-dimensional."""
    rows = [row for row in a if any(row)]
    if not rows:
        return None
    pivot = rows[0]
    for row in rows[1:]:
        # 2x2 minors vanish iff row is parallel to pivot
        for i, j in itertools.combinations(range(len(pivot)), 2):
            if pivot[i] * row[j] != pivot[j] * row[i]:
                return None
    return normalize_direction(pivot)


def product_over_string(family: AdjacencyFamily, s: Sequence) -> Matrix:
    """``A_{s_1} ... A_{s_N}``; the identity for the empty string."""
    out = identity(family.n)
    for key in s:
        out = multiply(out, family[key])
    return out


def proportionality(w: Sequence[int], v: RowDirection) -> Fraction:
    """The scalar ``c`` with ``w = c v``; raises if there is none."""
    j = next(i for i, x in enumerate(v) if x)
    if w[j] % v[j] == 0:
        c = Fraction(w[j] // v[j])
    else:
        c = Fraction(w[j], v[j])
    for wi, vi in zip(w, v):
        if wi * v[j] != vi * w[j]:
            raise NotProportionalError(f"{tuple(w)} is not a multiple of {tuple(v)}")
    return c


def left_scalar(v: RowDirection, mid: Sequence, tail: Sequence, family: AdjacencyFamily) -> Fraction:
    """The ``J >= 0`` with ``v^T A_mid A_tail = J v^T``."""
    w = tuple(v)
    for key in itertools.chain(mid, tail):
        w = vec_mat(w, family[key])
    return proportionality(w, v)


def spectral_radius(a, tol: float = 1e-13, max_iter: int = 1_000_000) -> float:
    """Perron root of a non-negative matrix by power iteration.

    Iterates from the all-ones vector and stops once the Collatz-Wielandt
    bracket ``min (Ax)_i / x_i <= rho <= max (Ax)_i / x_i`` (over the support
    of ``x``) is relatively tighter than ``tol``.  If the plain iteration
    stalls (periodic or slowly mixing matrices) it restarts on ``A + I``,
    which has the same Perron vector.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    if (a < 0).any():
        raise ValueError("spectral_radius expects a non-negative matrix")
    scale = a.max()
    if scale == 0:
        return 0.0
    a = a / scale
    n = a.shape[0]
    plain_budget = min(max_iter, 20_000)
    for shift, budget in ((0.0, plain_budget), (1.0, max_iter)):
        b = a + shift * np.eye(n) if shift else a
        x = np.ones(n)
        lo = hi = 0.0
        for _ in range(budget):
            y = b @ x
            norm = y.sum()
            if norm == 0:
                return 0.0
            support = x > 1e-300
            ratios = y[support] / x[support]
            lo, hi = ratios.min(), ratios.max()
            if hi - lo <= tol * hi:
                return float(scale * (0.5 * (lo + hi) - shift))
            x = y / norm
            # coordinates that die out do not constrain the bracket
            x[x < 1e-280] = 0.0
    raise ConvergenceError(
        "power iteration did not converge", (scale * (lo - 1.0), scale * (hi - 1.0))
    )


def find_rank1_string(family: AdjacencyFamily, max_len: int):
    """Shortest, then lexicographically least, string with a rank-one product.

    Returns ``(s, v)`` or ``None``.  Products equal to the zero matrix do not
    count: their image is zero-dimensional.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    symbols = family.symbols
    layer = {(): identity(family.n)}
    for length in range(1, max_len + 1):
        nxt = {}
        for prefix, mat in layer.items():
            for c in symbols:
                nxt[prefix + (c,)] = multiply(mat, family[c])
        for s in sorted(nxt):
            v = image_rank1(nxt[s])
            if v is not None:
                return s, v
        # zero products cannot become rank one again
        layer = {s: m for s, m in nxt.items() if not is_zero(m)}
    return None


def commutes(a: Matrix, b: Matrix) -> bool:
    return multiply(a, b) == multiply(b, a)
