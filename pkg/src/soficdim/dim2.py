"""Planar sofic sets: tower decomposition and its infinite-degree equation.

Given a string ``s`` whose matrix product has a one-dimensional row image
``span{v}``, the dimension is ``log_{m_1} r`` where ``r`` solves

    r^L = C_0 + C_1 / r + C_2 / r^2 + ...,   C_k = sum_u J_u^alpha

over strings ``u`` of length ``k`` that avoid ``s`` and ``J_u`` is defined by
``v^T A_u A_s = J_u v^T``.  ``r`` is also the spectral radius of the companion
operator built from the ``C_k``; its finite truncations give lower bounds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .graph_model import AdjacencyFamily
from .matrix_kernel import (
    RowDirection,
    find_rank1_string,
    image_rank1,
    is_primitive,
    matrix_sum,
    product_over_string,
    proportionality,
    spectral_radius,
    vec_mat,
)

log = logging.getLogger(__name__)

NEG_INF = float("-inf")


class MethodInapplicable(Exception):
    """The structural hypothesis of a tower method is not met."""


class TruncationError(ArithmeticError):
    """The coefficient series is not summable at the computed root."""


class ExclusionAutomaton:
    """Knuth-Morris-Pratt automaton recognizing strings that avoid ``pattern``.

    States ``0 .. L`` count the matched prefix length; state ``L`` means the
    pattern has been seen and is absorbing.
    """

    def __init__(self, alphabet: Sequence[int], pattern: Sequence[int]):
        self.alphabet = list(alphabet)
        self.pattern = tuple(pattern)
        L = len(self.pattern)
        if L == 0:
            raise ValueError("empty pattern")
        fail = [0] * (L + 1)
        k = 0
        for i in range(1, L):
            while k and self.pattern[i] != self.pattern[k]:
                k = fail[k]
            if self.pattern[i] == self.pattern[k]:
                k += 1
            fail[i + 1] = k
        self.failure = fail
        self.delta: List[Dict[int, int]] = []
        for q in range(L + 1):
            row = {}
            for c in self.alphabet:
                if q == L:
                    row[c] = L
                    continue
                p = q
                while p and self.pattern[p] != c:
                    p = fail[p]
                row[c] = p + 1 if self.pattern[p] == c else 0
            self.delta.append(row)

    @property
    def reject(self) -> int:
        return len(self.pattern)

    @property
    def restart(self) -> int:
        """State reached right after a complete occurrence of the pattern."""
        return self.failure[len(self.pattern)]

    def accepts(self, word: Sequence[int], start: int = 0) -> bool:
        q = start
        for c in word:
            q = self.delta[q][c]
            if q == self.reject:
                return False
        return True


def enumerate_avoiding(alphabet: Sequence[int], s: Sequence[int], k: int, start: int = 0):
    """Yield the length-``k`` strings that avoid ``s``, in lexicographic order.

    Walks the exclusion automaton depth first, so rejected prefixes are never
    extended.
    """
    aut = ExclusionAutomaton(alphabet, s)
    symbols = sorted(aut.alphabet)

    def walk(prefix, q):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for c in symbols:
            nq = aut.delta[q][c]
            if nq != aut.reject:
                prefix.append(c)
                yield from walk(prefix, nq)
                prefix.pop()

    yield from walk([], start)


def log_sum_exp(terms) -> float:
    terms = [t for t in terms if t != NEG_INF]
    if not terms:
        return NEG_INF
    top = max(terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))


def log_power(x, exponent: float) -> float:
    """``log(x ** exponent)`` for a non-negative int or Fraction, exact input."""
    if x == 0:
        return NEG_INF
    if hasattr(x, "numerator") and x.denominator != 1:
        return exponent * (math.log(x.numerator) - math.log(x.denominator))
    return exponent * math.log(int(x))


@dataclass
class CoefficientSeries:
    """Coefficients of ``r^L = sum_k C_k r^-k``, stored as logarithms.

    Coefficients grow geometrically, so ``log_coeffs`` (``-inf`` for zero)
    is the primary storage and :attr:`coeffs` is a float view that may
    overflow to ``inf`` for very long series.
    """

    L: int
    alpha: float
    log_coeffs: List[float]

    @classmethod
    def from_coeffs(cls, coeffs, L=1, alpha=1.0):
        logs = [math.log(c) if c > 0 else NEG_INF for c in coeffs]
        if any(c < 0 for c in coeffs):
            raise ValueError("coefficients must be non-negative")
        return cls(L, alpha, logs)

    @property
    def K(self) -> int:
        return len(self.log_coeffs) - 1

    @property
    def coeffs(self) -> List[float]:
        out = []
        for lc in self.log_coeffs:
            try:
                out.append(math.exp(lc))
            except OverflowError:
                out.append(float("inf"))
        return out

    def truncated(self, K: int) -> "CoefficientSeries":
        return CoefficientSeries(self.L, self.alpha, self.log_coeffs[: K + 1])

    @property
    def growth_estimate(self) -> float:
        """Proxy for ``limsup C_k^(1/k)`` from the trailing coefficients."""
        lc = self.log_coeffs
        K = self.K
        span = min(5, K)
        if span == 0 or lc[K] == NEG_INF or lc[K - span] == NEG_INF:
            return 0.0
        return math.exp((lc[K] - lc[K - span]) / span)

    def log_h(self, x: float) -> float:
        """``log sum_k C_k r^(-k-L)`` at ``r = e^x``; strictly decreasing in ``x``."""
        return log_sum_exp(lc - (k + self.L) * x for k, lc in enumerate(self.log_coeffs))

    def residual(self, r: float) -> float:
        """Relative residual ``|r^L - sum C_k r^-k| / r^L``."""
        return abs(math.expm1(self.log_h(math.log(r))))

    def tail_term(self, r: float) -> float:
        """``C_K r^(-K-L) / r^L``, the size of the last retained term."""
        lc = self.log_coeffs[-1]
        if lc == NEG_INF:
            return 0.0
        return math.exp(lc - (self.K + 2 * self.L) * math.log(r))


def coefficient_layers(family: AdjacencyFamily, s: Sequence[int], v: RowDirection) -> Iterator[Dict]:
    """Multisets ``{(automaton state, v^T A_u): count}`` for ``|u| = 0, 1, ...``.

    Strings landing on the same state and the same integer row vector are
    merged; each distinct pair stands for all strings reaching it, so the
    sums below are exactly the sums over the enumerated strings.  Strings
    start from the post-match state, so ``s u`` contains ``s`` only as its
    prefix (for border-free ``s`` this is plain avoidance).
    """
    aut = ExclusionAutomaton(family.symbols, s)
    layer = {(aut.restart, tuple(v)): 1}
    while True:
        yield layer
        nxt: Dict = {}
        for (q, vec), cnt in layer.items():
            for c in aut.alphabet:
                nq = aut.delta[q][c]
                if nq == aut.reject:
                    continue
                w = vec_mat(vec, family[c])
                if not any(w):
                    continue
                key = (nq, w)
                nxt[key] = nxt.get(key, 0) + cnt
        layer = nxt


def coefficient_from_layer(layer, tail, v, alpha, family) -> float:
    """``log C_k`` from one layer: ``sum count * J^alpha`` with ``J`` from ``vec A_tail``."""
    terms = []
    for (_, vec), cnt in layer.items():
        w = vec
        for c in tail:
            w = vec_mat(w, family[c])
        if not any(w):
            continue
        J = proportionality(w, v)
        terms.append(math.log(cnt) + log_power(J, alpha))
    terms.sort()
    return log_sum_exp(terms)


def coefficient_series(family: AdjacencyFamily, s: Sequence[int], v: RowDirection, K: int,
                       alpha: Optional[float] = None) -> CoefficientSeries:
    """``C_0 .. C_K`` by automaton-driven enumeration of the avoiding strings."""
    if K < 0:
        raise ValueError("K must be non-negative")
    if alpha is None:
        alpha = family.alphabet.exponents[0]
    logs = []
    for k, layer in enumerate(coefficient_layers(family, s, v)):
        logs.append(coefficient_from_layer(layer, s, v, alpha, family))
        if k == K:
            break
    return CoefficientSeries(len(s), alpha, logs)


def solve_series_root(series: CoefficientSeries, rtol: float = 1e-12,
                      check_summable: bool = True) -> float:
    """Unique positive ``r`` with ``r^L = sum_k C_k r^-k`` (finite series).

    Bisection on ``x = log r`` of the decreasing function
    ``log sum C_k r^(-k-L)``, followed by Newton polishing.
    """
    lc = series.log_coeffs
    if all(c == NEG_INF for c in lc):
        raise ValueError("all coefficients are zero")
    L = series.L
    g = series.log_h
    # r^L >= C_0, and r^L <= sum C_k whenever r >= 1
    total = log_sum_exp(lc)
    hi = max(0.0, total / L)
    lo = lc[0] / L if lc[0] != NEG_INF else hi - 1.0
    while g(lo) < 0:
        lo -= 1.0
    while g(hi) > 0:
        hi += 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            break
    x = 0.5 * (lo + hi)
    for _ in range(20):
        terms = [(c - (k + L) * x, k + L) for k, c in enumerate(lc) if c != NEG_INF]
        top = max(t for t, _ in terms)
        w = [math.exp(t - top) for t, _ in terms]
        sw = math.fsum(w)
        gx = top + math.log(sw)
        dg = -math.fsum(wi * m for wi, (_, m) in zip(w, terms)) / sw
        step = gx / dg
        nx = x - step
        if not lo <= nx <= hi:
            break
        x = nx
        if abs(step) < 1e-16:
            break
    r = math.exp(x)
    if series.residual(r) > rtol:
        log.warning("root residual %.3g exceeds %.3g", series.residual(r), rtol)
    if check_summable:
        rho = series.growth_estimate
        if rho >= r:
            raise TruncationError(
                f"growth estimate {rho:.6g} >= root {r:.6g}; increase the truncation order"
            )
    return r


def companion_truncation(series: CoefficientSeries, k: int) -> np.ndarray:
    """Upper-left ``k x k`` block of the companion operator.

    Row 0 holds ``L - 1`` zeros followed by ``C_0, C_1, ...``; row ``i`` has a
    one in column ``i - 1``.
    """
    M = np.zeros((k, k))
    c = series.coeffs
    for j in range(series.L - 1, k):
        idx = j - (series.L - 1)
        if idx < len(c):
            M[0, j] = c[idx]
    for i in range(1, k):
        M[i, i - 1] = 1.0
    return M


def apply_companion(series: CoefficientSeries, phi: Sequence[float]) -> List[float]:
    """One step of the companion operator on a finite level vector.

    Level 0 becomes ``sum_k C_k phi[k + L - 1]``; every other level shifts up
    by one.  The series must reach index ``len(phi) - L``.
    """
    L = series.L
    need = len(phi) - L
    if series.K < need:
        raise ValueError(f"series has {series.K + 1} terms, need {need + 1}")
    c = series.coeffs
    head = math.fsum(c[k] * phi[k + L - 1] for k in range(need + 1) if phi[k + L - 1])
    return [head] + list(phi)


def companion_lower_bounds(series: CoefficientSeries, k_max: int,
                           ks: Optional[Sequence[int]] = None) -> List[Tuple[int, float]]:
    """``(k, r_k)`` with ``r_k`` the Perron root of the ``k x k`` truncation."""
    if k_max < series.L + 1:
        raise ValueError("k_max must be at least L + 1")
    if ks is None:
        ks = range(series.L + 1, k_max + 1)
    return [(k, spectral_radius(companion_truncation(series, k))) for k in ks]


@dataclass
class Dim2Config:
    max_len: int = 6
    K: Optional[int] = None        # None: adaptive
    K_min: int = 40
    K_cap: int = 2000
    tail_tol: float = 1e-14
    layer_budget: int = 2_000_000
    k_max: int = 40
    oracle_N: int = 0
    strict_primitivity: bool = False


@dataclass
class DimensionReport:
    """Outcome of a tower computation; every number is labeled by method."""

    d: int
    m: Tuple[int, ...]
    method: str
    r: Optional[float] = None
    dim: Optional[float] = None
    residual: Optional[float] = None
    truncation_order: Optional[int] = None
    tail_estimate: Optional[float] = None
    lower_bounds: List[Tuple[int, float]] = field(default_factory=list)
    series: Optional[CoefficientSeries] = None
    structure: Dict = field(default_factory=dict)
    oracle: Optional[object] = None
    oracle_delta: Optional[float] = None
    estimator: Optional[object] = None
    alternatives: List[Dict] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    flags: List[Dict] = field(default_factory=list)

    def log_base(self, r: float) -> float:
        return math.log(r) / math.log(self.m[0])


def _primitivity(family: AdjacencyFamily, strict: bool, warnings: List[str]):
    if not is_primitive(matrix_sum(family.matrices.values())):
        msg = "summed adjacency matrix is not primitive; the tower formula assumes a primitive sum"
        if strict:
            raise MethodInapplicable(msg)
        log.warning(msg)
        warnings.append(msg)


def adaptive_series(family, s, v, cfg: Dim2Config) -> Tuple[CoefficientSeries, bool]:
    """Grow the series until the last term is below ``tail_tol`` relative to ``r^L``.

    Returns the series and whether the tail criterion was met (``False`` when
    ``K_cap`` or the layer budget stopped the growth).
    """
    alpha = family.alphabet.exponents[0]
    logs: List[float] = []
    work = 0
    series = CoefficientSeries(len(s), alpha, logs)
    for k, layer in enumerate(coefficient_layers(family, s, v)):
        logs.append(coefficient_from_layer(layer, s, v, alpha, family))
        work += len(layer)
        if cfg.K is not None:
            if k == cfg.K:
                return series, True
            continue
        if k >= cfg.K_min and (k - cfg.K_min) % 10 == 0:
            r = solve_series_root(series, check_summable=False)
            if series.tail_term(r) < cfg.tail_tol:
                return series, True
        if k >= cfg.K_cap or work > cfg.layer_budget:
            return series, False
    raise AssertionError("unreachable")


def dimension2d(family: AdjacencyFamily, cfg: Optional[Dim2Config] = None) -> DimensionReport:
    cfg = cfg or Dim2Config()
    if family.d != 2:
        raise ValueError("dimension2d needs a planar (d = 2) family")
    rep = DimensionReport(2, family.alphabet.m, method="tower")
    _primitivity(family, cfg.strict_primitivity, rep.warnings)
    found = find_rank1_string(family, cfg.max_len)
    if found is None:
        raise MethodInapplicable(f"no string of length <= {cfg.max_len} has a rank-one product")
    s, v = found
    rep.structure = {"rank1_string": list(s), "direction": list(v)}
    series, converged = adaptive_series(family, s, v, cfg)
    r = solve_series_root(series)
    rep.series = series
    rep.r = r
    rep.dim = rep.log_base(r)
    rep.residual = series.residual(r)
    rep.truncation_order = series.K
    rho = series.growth_estimate
    tail = series.tail_term(r)
    rep.tail_estimate = tail / (1 - rho / r) if rho < r else float("inf")
    if not converged:
        rep.warnings.append(
            f"truncation stopped at K={series.K} with relative tail ~{rep.tail_estimate:.3g}"
        )
    if cfg.k_max >= series.L + 1:
        rep.lower_bounds = companion_lower_bounds(series, cfg.k_max)
    if cfg.oracle_N:
        from .oracle import brute_dim2_sequence

        seq = brute_dim2_sequence(family, cfg.oracle_N)
        rep.oracle = seq
        rep.oracle_delta = rep.dim - seq.extrapolated
    return rep


def rank1_check(family: AdjacencyFamily, s: Sequence[int]) -> Optional[RowDirection]:
    return image_rank1(product_over_string(family, s))
