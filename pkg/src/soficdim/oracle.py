"""Brute-force evaluation of the combinatorial dimension formula.

Everything here enumerates matrix products directly and serves as the
independent check on the tower methods.  Products are kept as exact integer
matrices; identical products reached by different strings are merged into
one entry with a multiplicity, which leaves every sum unchanged.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dim2 import NEG_INF, log_power, log_sum_exp
from .graph_model import AdjacencyFamily
from .matrix_kernel import (
    commutes,
    entry_sum_norm,
    identity,
    is_primitive,
    is_zero,
    matrix_sum,
    multiply,
    spectral_radius,
    vec_mat,
)

DEFAULT_BUDGET = 20_000_000


class BudgetExceeded(RuntimeError):
    pass


def aitken(seq: Sequence[float]) -> List[float]:
    """Aitken delta-squared transform; output has ``len(seq) - 2`` entries."""
    out = []
    for x0, x1, x2 in zip(seq, seq[1:], seq[2:]):
        den = x2 - 2 * x1 + x0
        if den == 0 or not math.isfinite(den):
            out.append(x2)
        else:
            out.append(x2 - (x2 - x1) ** 2 / den)
    return out


@dataclass
class EstimateSequence:
    """Finite-``N`` values of ``(1/N) log_{m_1} S_N`` and their extrapolation.

    ``increments`` are ``log_{m_1}(S_N / S_{N-1})``; they share the limit of
    the raw values but converge geometrically instead of like ``1/N``, so the
    Aitken extrapolation is taken on them.
    """

    values: List[Tuple[int, float]]
    increments: List[Tuple[int, float]] = field(default_factory=list)
    extrapolated: Optional[float] = None
    spread: Optional[float] = None
    increment_spread: Optional[float] = None

    @classmethod
    def from_log_sums(cls, log_sums: Dict[int, float], base: int) -> "EstimateSequence":
        lb = math.log(base)
        Ns = sorted(N for N in log_sums if N >= 1)
        values = [(N, log_sums[N] / lb / N) for N in Ns]
        incs = [
            (N, (log_sums[N] - log_sums[N - 1]) / lb)
            for N in Ns
            if N - 1 in log_sums and N - 1 >= 1
        ]
        seq = cls(values, incs)
        tail = [x for _, x in incs]
        if len(tail) >= 3:
            seq.extrapolated = aitken(tail)[-1]
        elif tail:
            seq.extrapolated = tail[-1]
        elif values:
            seq.extrapolated = values[-1][1]
        if seq.extrapolated is not None:
            seq.spread = abs(values[-1][1] - seq.extrapolated)
            if tail:
                seq.increment_spread = abs(tail[-1] - seq.extrapolated)
        return seq

    def as_dict(self):
        return {
            "values": [[N, x] for N, x in self.values],
            "increments": [[N, x] for N, x in self.increments],
            "extrapolated": self.extrapolated,
            "spread": self.spread,
            "increment_spread": self.increment_spread,
        }


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("SOFICDIM_WORKERS", "1")))
    except ValueError:
        return 1


def _log_norm_sum(layer: Dict, exponent: float) -> float:
    terms = [math.log(cnt) + log_power(entry_sum_norm(p), exponent) for p, cnt in layer.items()]
    terms.sort()
    return log_sum_exp(terms)


def brute_log_sums2(family: AdjacencyFamily, N_max: int, budget: int = DEFAULT_BUDGET,
                    extend: str = "right") -> Dict[int, float]:
    """``log S_N`` for ``N = 0 .. N_max`` with ``S_N = sum_u ||A_u||^alpha``."""
    if family.d != 2:
        raise ValueError("brute_dim2 needs a planar family")
    alpha = family.alphabet.exponents[0]
    layer = {identity(family.n): 1}
    out = {0: _log_norm_sum(layer, alpha)}
    work = 0
    for N in range(1, N_max + 1):
        nxt: Dict = {}
        for p, cnt in layer.items():
            for c in family.symbols:
                q = multiply(p, family[c]) if extend == "right" else multiply(family[c], p)
                work += 1
                if is_zero(q):
                    continue
                nxt[q] = nxt.get(q, 0) + cnt
        if work > budget:
            raise BudgetExceeded(f"more than {budget} products at N = {N}")
        layer = nxt
        out[N] = _log_norm_sum(layer, alpha)
    return out


def brute_dim2(family: AdjacencyFamily, N: int, budget: int = DEFAULT_BUDGET,
               extend: str = "right") -> float:
    if N < 1:
        raise ValueError("N must be positive")
    ls = brute_log_sums2(family, N, budget, extend)[N]
    return ls / math.log(family.alphabet.m[0]) / N


def brute_dim2_sequence(family: AdjacencyFamily, N_max: int, budget: int = DEFAULT_BUDGET) -> EstimateSequence:
    return EstimateSequence.from_log_sums(brute_log_sums2(family, N_max, budget), family.alphabet.m[0])


def _dim3_branch(args):
    family, prefix, N_max, budget = args
    a1, a2 = family.alphabet.exponents
    I1 = family.symbols
    I2 = range(family.alphabet.m[1])
    nonzero = {s: [family[(s, t)] for t in I2 if not is_zero(family[(s, t)])] for s in I1}
    terms: Dict[int, List[float]] = {N: [] for N in range(N_max + 1)}
    work = 0

    def extend(layer, s):
        nonlocal work
        nxt: Dict = {}
        for p, cnt in layer.items():
            for a in nonzero[s]:
                q = multiply(p, a)
                work += 1
                if not is_zero(q):
                    nxt[q] = nxt.get(q, 0) + cnt
        if work > budget:
            raise BudgetExceeded(f"more than {budget} products")
        return nxt

    def visit(layer, depth):
        inner = _log_norm_sum(layer, a2)
        terms[depth].append(a1 * inner if inner != NEG_INF else NEG_INF)
        if depth == N_max:
            return
        for s in I1:
            nxt = extend(layer, s)
            if nxt:
                visit(nxt, depth + 1)

    layer = {identity(family.n): 1}
    for s in prefix:
        layer = extend(layer, s)
        if not layer:
            return {}
    if prefix:
        visit(layer, len(prefix))
    else:
        inner = _log_norm_sum(layer, a2)
        terms[0].append(a1 * inner)
    return {N: t for N, t in terms.items() if t}


def brute_log_sums3(family: AdjacencyFamily, N_max: int, budget: int = DEFAULT_BUDGET) -> Dict[int, float]:
    """``log S_N`` with ``S_N = sum_s (sum_t ||A_(s,t)||^a2)^a1`` for ``N <= N_max``.

    Depth-first over ``s``; each node carries the merged multiset of products
    over all compatible ``t`` prefixes.  Zero products are pruned.
    """
    if family.d != 3:
        raise ValueError("brute_dim3 needs a d = 3 family")
    if N_max < 1:
        raise ValueError("N_max must be positive")
    branches = [(family, (s,), N_max, budget) for s in family.symbols]
    workers = worker_count()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_dim3_branch, branches))
    else:
        results = [_dim3_branch(b) for b in branches]
    root = _dim3_branch((family, (), 0, budget))
    out = {0: log_sum_exp(root[0])}
    for N in range(1, N_max + 1):
        collected = []
        for res in results:
            collected.extend(res.get(N, []))
        collected.sort()
        out[N] = log_sum_exp(collected)
    return out


def brute_dim3(family: AdjacencyFamily, N: int, budget: int = DEFAULT_BUDGET) -> float:
    ls = brute_log_sums3(family, N, budget)[N]
    return ls / math.log(family.alphabet.m[0]) / N


def brute_dim3_sequence(family: AdjacencyFamily, N_max: int, budget: int = DEFAULT_BUDGET) -> EstimateSequence:
    return EstimateSequence.from_log_sums(brute_log_sums3(family, N_max, budget), family.alphabet.m[0])


def _row_times_ones(w) -> int:
    return sum(w)


def tower_vector_2d(family: AdjacencyFamily, s: Sequence[int], v: Sequence[int], N: int) -> List[float]:
    """Levels ``0 .. N`` of the planar tower vector, straight from its definition.

    Level ``N`` is ``(v . e)^alpha``, level ``N - L`` is ``(v A_s e)^alpha`` and
    level ``k < N - L`` sums ``(v A_u A_s e)^alpha`` over all ``u`` of length
    ``N - L - k``.  Every string is multiplied out separately.
    """
    L = len(s)
    if N < L:
        raise ValueError("N must be at least the length of s")
    alpha = family.alphabet.exponents[0]
    levels = [0.0] * (N + 1)

    def tail_value(u):
        w = tuple(v)
        for c in itertools.chain(u, s):
            w = vec_mat(w, family[c])
        return _row_times_ones(w) ** alpha

    levels[N] = _row_times_ones(v) ** alpha
    levels[N - L] = tail_value(())
    for k in range(N - L):
        levels[k] = math.fsum(
            tail_value(u) for u in itertools.product(family.symbols, repeat=N - L - k)
        )
    return levels


def tower_vector_3d(family: AdjacencyFamily, structure, s: Sequence[int], gamma_only: bool = False) -> Dict[Tuple[int, ...], float]:
    """Tree tower vector for ``s`` in ``I_1^N``, straight from its definition.

    Entries live at the suffixes ``s[k]`` (last ``k`` letters).  The entry at
    ``s`` itself is ``(v . e)^a2``; for ``0 <= k <= N - 1`` the entry at ``s[k]``
    sums ``(v A_w A_p e)^a2`` over ``p`` in ``Q(s_{N-k})`` and every
    ``w`` whose first coordinates are ``s_1 .. s_{N-k-1}``.

    Suffixes that contain a removable symbol are not tree words; the operator
    recursion never feeds them back, so ``gamma_only`` drops them.
    """
    s = tuple(s)
    N = len(s)
    v = structure.v
    a2 = family.alphabet.exponents[1]
    I2 = range(family.alphabet.m[1])
    out: Dict[Tuple[int, ...], float] = {}
    if N == 0:
        return {(): 1.0}
    out[s] = _row_times_ones(v) ** a2
    for k in range(N):
        head = s[: N - k - 1]
        total = []
        for p in structure.Q[s[N - k - 1]]:
            for ts in itertools.product(I2, repeat=len(head)):
                w = tuple(v)
                for si, ti in zip(head, ts):
                    w = vec_mat(w, family[(si, ti)])
                w = vec_mat(w, family[p])
                total.append(_row_times_ones(w) ** a2)
        word = s[N - k:]
        out[word] = out.get(word, 0.0) + math.fsum(total)
    if gamma_only:
        J = set(structure.J)
        out = {w: x for w, x in out.items() if all(c in J for c in w)}
    return out


def partition_counts(structure, family: AdjacencyFamily, s: Sequence[int]) -> Tuple[int, int]:
    """Both sides of the last-``Q``-position partition of ``W_2^N(s)``.

    The left side enumerates every ``t`` sequence and classifies it by the
    last position whose label lies in ``P``; the right side is the product
    formula ``sum_k |W^(N-k-1)| |Q(s_(N-k))| |R^k(s[k])|`` plus the term
    with no ``P`` position at all.
    """
    s = tuple(s)
    N = len(s)
    m2 = family.alphabet.m[1]
    P = structure.P
    classes: Dict[int, int] = {}
    for ts in itertools.product(range(m2), repeat=N):
        last = None
        for i, (si, ti) in enumerate(zip(s, ts)):
            if ti in P[si]:
                last = i
        classes[last] = classes.get(last, 0) + 1
    lhs = sum(classes.values())

    def r_count(word):
        out = 1
        for c in word:
            out *= m2 - len(P[c])
        return out

    rhs = r_count(s)
    for k in range(N):
        pos = N - k - 1
        rhs += m2 ** pos * len(structure.Q[s[pos]]) * r_count(s[pos + 1:])
    assert sum(classes.values()) == m2 ** N
    return lhs, rhs


def _perron_vector(a: np.ndarray) -> np.ndarray:
    x = np.ones(a.shape[0])
    for _ in range(100_000):
        y = a @ x
        y = y / y.sum()
        if np.abs(y - x).max() < 1e-15:
            break
        x = y
    return y


def _shares_perron_vector(mats) -> bool:
    """Perron vector of the sum is an eigenvector of each matrix, with the
    eigenvalue equal to that matrix's spectral radius."""
    x = _perron_vector(np.array(matrix_sum(mats), dtype=float))
    for m in mats:
        B = np.array(m, dtype=float)
        y = B @ x
        lam = (y @ x) / (x @ x)
        if np.abs(y - lam * x).max() > 1e-9 * max(1.0, np.abs(y).max()):
            return False
        if abs(lam - spectral_radius(m)) > 1e-9 * max(1.0, lam):
            return False
    return True


def trivial_case(family: AdjacencyFamily) -> Optional[str]:
    """``"commuting"`` or ``"common-eigenvector"`` when the closed form applies."""
    mats = list(family.matrices.values())
    if all(commutes(a, b) for a, b in itertools.combinations(mats, 2)) and is_primitive(matrix_sum(mats)):
        return "commuting"
    if _shares_perron_vector(mats) or _shares_perron_vector([tuple(zip(*m)) for m in mats]):
        return "common-eigenvector"
    return None


def trivial_case_dimension(family: AdjacencyFamily) -> Optional[float]:
    """Closed form via spectral radii when the matrices commute or share an eigenvector."""
    if trivial_case(family) is None:
        return None
    lam = {k: spectral_radius(m) for k, m in family.matrices.items()}
    exps = family.alphabet.exponents
    base = math.log(family.alphabet.m[0])
    if family.d == 2:
        total = math.fsum(lam[u] ** exps[0] for u in family.symbols if lam[u] > 0)
    else:
        m2 = family.alphabet.m[1]
        total = math.fsum(
            math.fsum(lam[(s, t)] ** exps[1] for t in range(m2) if lam[(s, t)] > 0) ** exps[0]
            for s in family.symbols
        )
    return math.log(total) / base
