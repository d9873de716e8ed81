"""Sofic sets in three dimensions with a recursive structure.

A direction ``v`` is shared by one rank-one matrix in every first-coordinate
column.  The double sum of the dimension formula then becomes a single sum
of operator products on vectors indexed by words over the non-removable
symbols ``J`` (a rooted tree).  When some symbol is removable its operator
collapses onto the root, and the dimension is ``log_{m_1} r`` with

    r = b_0 + b_1 / r + b_2 / r^2 + ...
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .dim2 import (
    CoefficientSeries,
    DimensionReport,
    MethodInapplicable,
    _primitivity,
    solve_series_root,
)
from .graph_model import AdjacencyFamily
from .matrix_kernel import RowDirection, image_rank1, is_zero, proportionality, vec_mat
from .oracle import EstimateSequence

log = logging.getLogger(__name__)

Word = Tuple[int, ...]


class DepthError(RuntimeError):
    """Tree vectors lost mass beyond the depth cap."""

    def __init__(self, message, required_depth):
        self.required_depth = required_depth
        super().__init__(f"{message}; use a depth of at least {required_depth}")


@dataclass(frozen=True)
class RecursiveStructure:
    v: RowDirection
    P: Dict[int, FrozenSet[int]]
    Q: Dict[int, Tuple[Tuple[int, int], ...]]
    removable: Tuple[int, ...]
    J: Tuple[int, ...]

    def as_dict(self):
        return {
            "direction": list(self.v),
            "P": {str(u): sorted(ts) for u, ts in sorted(self.P.items())},
            "removable": list(self.removable),
            "J": list(self.J),
        }


def structure_for_direction(family: AdjacencyFamily, v: RowDirection) -> Optional[RecursiveStructure]:
    """The structure built on ``v``, or ``None`` if some column lacks a rank-one match."""
    m1, m2 = family.alphabet.m[:2]
    P = {}
    for u in range(m1):
        hits = [t for t in range(m2) if not is_zero(family[(u, t)]) and image_rank1(family[(u, t)]) == v]
        if not hits:
            return None
        P[u] = frozenset(t for t in range(m2) if is_zero(family[(u, t)]) or t in hits)
    # Q(u) keeps zero matrices too: they add nothing to C_s(u) but keep the
    # partition of W_2^N(s) by last P position exact
    Q = {u: tuple((u, t) for t in sorted(P[u])) for u in range(m1)}
    removable = tuple(u for u in range(m1) if len(P[u]) == m2)
    J = tuple(u for u in range(m1) if len(P[u]) < m2)
    return RecursiveStructure(v, P, Q, removable, J)


def detect_recursive_structure(family: AdjacencyFamily) -> Optional[RecursiveStructure]:
    """First candidate direction (keys scanned in order) that works for every column."""
    if family.d != 3:
        raise ValueError("recursive structures are defined for d = 3")
    seen = []
    for key in family.keys():
        a = family[key]
        if is_zero(a):
            continue
        v = image_rank1(a)
        if v is None or v in seen:
            continue
        seen.append(v)
        st = structure_for_direction(family, v)
        if st is not None:
            return st
    return None


@dataclass
class TreeVector:
    """Finitely supported non-negative vector on tree words, capped at ``depth``."""

    entries: Dict[Word, float]
    depth: int
    leak: float = 0.0

    @classmethod
    def root(cls, depth: int) -> "TreeVector":
        return cls({(): 1.0}, depth)

    def l1(self) -> float:
        return math.fsum(self.entries.values())


class TreeOperators:
    """The operators ``M_u`` of one structure, with cached coefficients.

    ``C_s(u)`` sums ``D_w(p)^a2`` over ``p`` in ``Q(u)`` and ``w`` in
    ``R(s)``; the row vectors ``v^T A_w`` for ``w`` in ``R(s)`` are kept as a
    merged multiset per word and extended one letter at a time.
    """

    def __init__(self, structure: RecursiveStructure, family: AdjacencyFamily):
        self.structure = structure
        self.family = family
        self.a2 = family.alphabet.exponents[1]
        self.m2 = family.alphabet.m[1]
        self._layers: Dict[Word, Dict[Tuple[int, ...], int]] = {(): {tuple(structure.v): 1}}
        self._coeff: Dict[Tuple[Word, int], float] = {}
        J = set(structure.J)
        self._J = J

    def layer(self, word: Word) -> Dict:
        word = tuple(word)
        if word in self._layers:
            return self._layers[word]
        prev = self.layer(word[:-1])
        c = word[-1]
        out: Dict = {}
        for t in range(self.m2):
            if t in self.structure.P[c]:
                continue
            a = self.family[(c, t)]
            for vec, cnt in prev.items():
                w = vec_mat(vec, a)
                if any(w):
                    out[w] = out.get(w, 0) + cnt
        self._layers[word] = out
        return out

    def coefficient(self, word: Word, u: int) -> float:
        key = (tuple(word), u)
        if key in self._coeff:
            return self._coeff[key]
        if any(c not in self._J for c in key[0]):
            raise ValueError(f"{key[0]} is not a tree word")
        v = self.structure.v
        terms = []
        for vec, cnt in self.layer(key[0]).items():
            for p in self.structure.Q[u]:
                w = vec_mat(vec, self.family[p])
                if not any(w):
                    continue
                D = proportionality(w, v)
                terms.append(cnt * float(D) ** self.a2)
        val = math.fsum(terms)
        self._coeff[key] = val
        return val

    def apply(self, u: int, x: TreeVector) -> TreeVector:
        root = math.fsum(self.coefficient(w, u) * val for w, val in x.entries.items() if val)
        out: Dict[Word, float] = {}
        leak = x.leak
        if u in self._J:
            for w, val in x.entries.items():
                if len(w) + 1 > x.depth:
                    leak += val
                else:
                    out[w + (u,)] = val
        out[()] = out.get((), 0.0) + root
        return TreeVector(out, x.depth, leak)

    def compose(self, string: Sequence[int], x: TreeVector) -> TreeVector:
        """``M_{s_N} ... M_{s_1} x`` for ``string = (s_1, .., s_N)``."""
        for u in string:
            x = self.apply(u, x)
        return x


def apply_operator(ops: TreeOperators, u: int, x: TreeVector) -> TreeVector:
    return ops.apply(u, x)


def operator_estimates(structure: RecursiveStructure, family: AdjacencyFamily, N_max: int,
                       D: Optional[int] = None, ops: Optional[TreeOperators] = None) -> EstimateSequence:
    """``(1/N) log_{m_1} sum_s ||M_{s_N} .. M_{s_1} Phi_0||_1^a1`` for ``N <= N_max``.

    Plain depth-first enumeration of ``I_1^N``; cost ``|I_1|^N``.
    """
    if D is None:
        D = N_max + 2
    ops = ops or TreeOperators(structure, family)
    a1 = family.alphabet.exponents[0]
    sums: Dict[int, List[float]] = {N: [] for N in range(N_max + 1)}
    worst = 0.0

    def visit(x: TreeVector, depth: int):
        nonlocal worst
        norm = x.l1()
        if norm > 0:
            sums[depth].append(norm ** a1)
            worst = max(worst, x.leak / (norm + x.leak))
        if depth == N_max:
            return
        for u in family.symbols:
            visit(ops.apply(u, x), depth + 1)

    visit(TreeVector.root(D), 0)
    if worst > 1e-9:
        raise DepthError(f"relative leak {worst:.3g} at depth cap {D}", N_max + 1)
    log_sums = {N: math.log(math.fsum(t)) for N, t in sums.items() if t}
    return EstimateSequence.from_log_sums(log_sums, family.alphabet.m[0])


def tree_words(J: Sequence[int], depth: int):
    for k in range(depth + 1):
        yield from itertools.product(J, repeat=k)


def check_l1_increasing(structure: RecursiveStructure, family: AdjacencyFamily, u: int,
                        t: Sequence[int] = (), D: int = 6,
                        ops: Optional[TreeOperators] = None) -> Tuple[bool, Optional[Word]]:
    """Whether ``M_u M_{t_L} .. M_{t_1}`` does not shrink the l1 norm.

    The operator is non-negative, so this holds iff every column sum is at
    least one; columns are checked for all tree words up to length ``D``.
    Returns ``(ok, witness)`` with the first failing word as witness.
    """
    if u not in structure.removable:
        raise ValueError(f"{u} is not removable")
    ops = ops or TreeOperators(structure, family)
    for w in tree_words(structure.J, D):
        x = TreeVector({w: 1.0}, D + len(t) + 1)
        y = ops.apply(u, ops.compose(t, x))
        if y.l1() < 1.0 - 1e-12:
            return False, w
    return True, None


def find_increasing_string(structure, family, u, max_len: int = 2, D: int = 6,
                           ops: Optional[TreeOperators] = None) -> Optional[Word]:
    """Shortest string ``t`` (over ``I_1``, length ``<= max_len``) passing the l1 check."""
    ops = ops or TreeOperators(structure, family)
    for k in range(max_len + 1):
        for t in itertools.product(family.symbols, repeat=k):
            if check_l1_increasing(structure, family, u, t, D, ops)[0]:
                return t
    return None


def return_series(structure: RecursiveStructure, family: AdjacencyFamily, u: int, K: int,
                  D: Optional[int] = None, ops: Optional[TreeOperators] = None) -> CoefficientSeries:
    """``b_0 .. b_K`` with ``b_k = sum c(s)^a1`` over ``s`` in ``(I_1 - {u})^k``.

    ``c(s)`` is the root value of ``M_u M_{s_k} .. M_{s_1} Phi_0``, whose
    support must be the root alone.
    """
    if u not in structure.removable:
        raise ValueError(f"{u} is not removable")
    if D is None:
        D = K + 2
    ops = ops or TreeOperators(structure, family)
    a1 = family.alphabet.exponents[0]
    others = [c for c in family.symbols if c != u]
    b: List[List[float]] = [[] for _ in range(K + 1)]

    def visit(x: TreeVector, k: int):
        y = ops.apply(u, x)
        if any(w != () and val for w, val in y.entries.items()):
            raise AssertionError("removable operator left mass off the root")
        if y.leak > 1e-9 * max(y.l1(), 1e-300):
            raise DepthError("return series lost mass", K + 2)
        c = y.entries.get((), 0.0)
        if c > 0:
            b[k].append(c ** a1)
        if k == K:
            return
        for s in others:
            visit(ops.apply(s, x), k + 1)

    visit(TreeVector.root(D), 0)
    return CoefficientSeries.from_coeffs([math.fsum(t) for t in b], L=1, alpha=a1)


@dataclass
class Dim3Config:
    K: int = 40
    D: Optional[int] = None
    N_max: int = 10
    oracle_N: int = 0
    increasing_len: int = 2
    increasing_depth: int = 6
    strict_primitivity: bool = False
    all_removable: bool = True


def _series_root(structure, family, u, cfg: Dim3Config, ops) -> Dict:
    t = find_increasing_string(structure, family, u, cfg.increasing_len, cfg.increasing_depth, ops)
    if t is None:
        return {"u": u, "applicable": False,
                "reason": f"no string of length <= {cfg.increasing_len} makes M_{u} l1-increasing"}
    series = return_series(structure, family, u, cfg.K, cfg.D, ops)
    r = solve_series_root(series, check_summable=False)
    return {"u": u, "applicable": True, "increasing_string": list(t), "series": series,
            "r": r, "dim": math.log(r) / math.log(family.alphabet.m[0]),
            "residual": series.residual(r), "tail": series.tail_term(r)}


def dimension3d(family: AdjacencyFamily, cfg: Optional[Dim3Config] = None) -> DimensionReport:
    cfg = cfg or Dim3Config()
    if family.d != 3:
        raise ValueError("dimension3d needs a d = 3 family")
    rep = DimensionReport(3, family.alphabet.m, method="return-series")
    _primitivity(family, cfg.strict_primitivity, rep.warnings)
    st = detect_recursive_structure(family)
    if st is None:
        raise MethodInapplicable("no common rank-one direction: the family has no recursive structure")
    rep.structure = st.as_dict()
    ops = TreeOperators(st, family)
    base = math.log(family.alphabet.m[0])

    if not st.J:
        # every operator lands on the root: the sum over I_1^N factorizes
        a1 = family.alphabet.exponents[0]
        r = math.fsum(ops.coefficient((), u) ** a1 for u in family.symbols)
        rep.method = "all-removable"
        rep.r = r
        rep.dim = math.log(r) / base
        rep.flags.append({"kind": "all-removable", "detail": "r is the sum of root coefficients"})
    elif st.removable:
        results = [_series_root(st, family, u, cfg, ops) for u in st.removable]
        good = [res for res in results if res["applicable"]]
        if good:
            best = good[0]
            rep.r = best["r"]
            rep.dim = best["dim"]
            rep.series = best["series"]
            rep.residual = best["residual"]
            rep.tail_estimate = best["tail"]
            rep.truncation_order = best["series"].K
            rep.structure["removable_used"] = best["u"]
            rep.structure["increasing_string"] = best["increasing_string"]
        else:
            rep.method = "estimator-only"
            rep.flags.append({"kind": "no-closed-equation", "detail": results[0]["reason"]})
        for res in results:
            if res is not (good[0] if good else None):
                rep.alternatives.append({k: val for k, val in res.items() if k != "series"})
    else:
        rep.method = "estimator-only"
        rep.flags.append({"kind": "no-closed-equation", "detail": "no removable symbol"})

    if cfg.N_max:
        rep.estimator = operator_estimates(st, family, cfg.N_max, ops=ops)
        if rep.dim is None:
            rep.dim = rep.estimator.extrapolated
    if cfg.oracle_N:
        from .oracle import brute_dim3_sequence

        seq = brute_dim3_sequence(family, cfg.oracle_N)
        rep.oracle = seq
        if rep.dim is not None:
            rep.oracle_delta = rep.dim - seq.extrapolated
    return rep
