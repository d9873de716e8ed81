"""Labeled digraphs, their text formats, and restricted adjacency matrices.

A sofic system is presented by a finite directed graph whose edges carry
labels from ``I_1 x ... x I_d`` with ``I_i = {0, ..., m_i - 1}``.  The
dimension algorithms never look at the graph itself; they consume the family
of restricted adjacency matrices ``A_s`` indexed by the projection of a label
onto its first ``d - 1`` coordinates.

For ``d = 2`` the family keys are plain integers ``s``; for ``d = 3`` they are
pairs ``(s, t)``.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Matrix = Tuple[Tuple[int, ...], ...]


class GraphSpecError(ValueError):
    """Malformed graph or matrix document."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RightResolvingError(GraphSpecError):
    """Two edges leave the same vertex with the same full label."""

    def __init__(self, violations):
        self.violations = list(violations)
        parts = ", ".join(f"vertex {v} label {lab}" for v, lab in self.violations)
        super().__init__(f"labeling is not right-resolving: {parts}")


@dataclass(frozen=True)
class AlphabetSpec:
    m: Tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(x) for x in self.m)
        object.__setattr__(self, "m", m)
        if len(m) not in (2, 3):
            raise GraphSpecError(f"dimension must be 2 or 3, got {len(m)}")
        if any(x <= 1 for x in m):
            raise GraphSpecError(f"alphabet sizes must exceed 1, got {m}")
        if any(a > b for a, b in zip(m, m[1:])):
            raise GraphSpecError(f"alphabet sizes must be non-decreasing, got {m}")

    @property
    def d(self) -> int:
        return len(self.m)

    @property
    def exponents(self) -> Tuple[float, ...]:
        """``a_i = log_{m_{i+1}} m_i``, each in (0, 1]."""
        return tuple(math.log(a) / math.log(b) for a, b in zip(self.m, self.m[1:]))

    def keys(self) -> List:
        """All projected labels ``W_{d-1}`` in lexicographic order."""
        if self.d == 2:
            return list(range(self.m[0]))
        return list(itertools.product(range(self.m[0]), range(self.m[1])))


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    label: Tuple[int, ...]


@dataclass(frozen=True)
class LabeledDigraph:
    """Edge-labeled multigraph on vertices ``0 .. vertex_count - 1``.

    ``orientation`` selects how edges are counted into matrices: ``"out"``
    puts an edge ``i -> j`` at entry ``(i, j)``; ``"in"`` puts it at ``(j, i)``.
    """

    vertex_count: int
    edges: Tuple[Edge, ...]
    alphabet: AlphabetSpec
    orientation: str = "out"

    def __post_init__(self):
        if self.vertex_count < 1:
            raise GraphSpecError("a graph needs at least one vertex")
        if self.orientation not in ("out", "in"):
            raise GraphSpecError(f"unknown orientation {self.orientation!r}")
        object.__setattr__(self, "edges", tuple(self.edges))
        for e in self.edges:
            _check_edge(e, self.vertex_count, self.alphabet)


def _check_edge(e: Edge, n: int, alphabet: AlphabetSpec, line=None):
    for v in (e.source, e.target):
        if not 0 <= v < n:
            raise GraphSpecError(f"vertex index {v} out of range 0..{n - 1}", line)
    if len(e.label) != alphabet.d:
        raise GraphSpecError(
            f"label {e.label} has {len(e.label)} coordinates, expected {alphabet.d}", line
        )
    for i, (c, mi) in enumerate(zip(e.label, alphabet.m)):
        if not 0 <= c < mi:
            raise GraphSpecError(
                f"label coordinate {i + 1} = {c} out of range 0..{mi - 1}", line
            )


@dataclass(frozen=True)
class AdjacencyFamily:
    n: int
    alphabet: AlphabetSpec
    matrices: Dict = field(hash=False)

    def __post_init__(self):
        keys = self.alphabet.keys()
        full = {}
        for k in keys:
            mat = self.matrices.get(k)
            full[k] = zero_matrix(self.n) if mat is None else _as_matrix(mat, self.n)
        extra = set(self.matrices) - set(keys)
        if extra:
            raise GraphSpecError(f"keys outside the alphabet: {sorted(extra)}")
        object.__setattr__(self, "matrices", full)

    def __getitem__(self, key) -> Matrix:
        return self.matrices[key]

    @property
    def d(self) -> int:
        return self.alphabet.d

    @property
    def symbols(self) -> List[int]:
        """First-coordinate alphabet ``I_1``."""
        return list(range(self.alphabet.m[0]))

    def keys(self):
        return list(self.matrices)

    def total(self) -> Matrix:
        n = self.n
        return tuple(
            tuple(sum(m[i][j] for m in self.matrices.values()) for j in range(n))
            for i in range(n)
        )

    def restricted(self, keep: Iterable) -> "AdjacencyFamily":
        """Same alphabet, with every key outside ``keep`` mapped to zero."""
        keep = set(keep)
        mats = {k: (m if k in keep else zero_matrix(self.n)) for k, m in self.matrices.items()}
        return AdjacencyFamily(self.n, self.alphabet, mats)

    def fingerprint(self) -> str:
        """Stable hash of alphabet and matrices."""
        h = hashlib.sha256()
        h.update(repr(self.alphabet.m).encode())
        for k in self.alphabet.keys():
            h.update(repr((k, self.matrices[k])).encode())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, AdjacencyFamily):
            return NotImplemented
        return (
            self.n == other.n
            and self.alphabet == other.alphabet
            and self.matrices == other.matrices
        )

    def __hash__(self):
        return hash(self.fingerprint())


def zero_matrix(n: int) -> Matrix:
    return tuple((0,) * n for _ in range(n))


def _as_matrix(rows, n: int) -> Matrix:
    mat = tuple(tuple(int(x) for x in row) for row in rows)
    if len(mat) != n or any(len(row) != n for row in mat):
        raise GraphSpecError(f"matrix is not {n}x{n}")
    if any(x < 0 for row in mat for x in row):
        raise GraphSpecError("matrix entries must be non-negative")
    return mat


def _tokens(text: str):
    """Yield ``(line_number, tokens)`` for non-blank, comment-stripped lines."""
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def _ints(tokens, line, what):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise GraphSpecError(f"expected integers in {what}, got {' '.join(tokens)!r}", line)


def _parse_header(lines, keyword_last):
    """Consume ``dim`` and ``m`` lines; return ``(alphabet, remaining lines)``."""
    d = None
    m = None
    rest = []
    it = iter(lines)
    for no, tok in it:
        if tok[0] == "dim":
            if len(tok) != 2:
                raise GraphSpecError("usage: dim <d>", no)
            (d,) = _ints(tok[1:], no, "dim")
        elif tok[0] == "m":
            m = _ints(tok[1:], no, "m")
            if d is None:
                raise GraphSpecError("'m' line before 'dim'", no)
            if len(m) != d:
                raise GraphSpecError(f"expected {d} alphabet sizes, got {len(m)}", no)
            try:
                alphabet = AlphabetSpec(tuple(m))
            except GraphSpecError as exc:
                raise GraphSpecError(str(exc), no) from None
        elif tok[0] == keyword_last:
            rest.append((no, tok))
            rest.extend(it)
            break
        else:
            raise GraphSpecError(f"unexpected {tok[0]!r} before header is complete", no)
    if d is None or m is None:
        raise GraphSpecError("missing 'dim' or 'm' header (alphabet)")
    return alphabet, rest


def parse_digraph(text: str, check: bool = True) -> LabeledDigraph:
    """Parse the line-oriented graph format.

    ::

        dim 2
        m 2 3
        vertices 3
        orientation out      # optional
        edge 0 1 1 2         # from to l_1 .. l_d

    With ``check`` set, a right-resolving violation raises
    :class:`RightResolvingError`.
    """
    alphabet, rest = _parse_header(_tokens(text), "vertices")
    if not rest:
        raise GraphSpecError("missing 'vertices' line")
    no, tok = rest[0]
    if len(tok) != 2:
        raise GraphSpecError("usage: vertices <n>", no)
    (n,) = _ints(tok[1:], no, "vertices")
    if n < 1:
        raise GraphSpecError("vertex count must be positive", no)
    orientation = "out"
    edges = []
    for no, tok in rest[1:]:
        if tok[0] == "orientation":
            if len(tok) != 2 or tok[1] not in ("out", "in"):
                raise GraphSpecError("usage: orientation out|in", no)
            orientation = tok[1]
        elif tok[0] == "edge":
            vals = _ints(tok[1:], no, "edge")
            if len(vals) != 2 + alphabet.d:
                raise GraphSpecError(
                    f"edge needs 2 vertices and {alphabet.d} label coordinates", no
                )
            e = Edge(vals[0], vals[1], tuple(vals[2:]))
            _check_edge(e, n, alphabet, no)
            edges.append(e)
        else:
            raise GraphSpecError(f"unknown directive {tok[0]!r}", no)
    g = LabeledDigraph(n, tuple(edges), alphabet, orientation)
    if check:
        bad = validate_right_resolving(g)
        if bad:
            raise RightResolvingError(bad)
    return g


def serialize_digraph(g: LabeledDigraph) -> str:
    lines = [f"dim {g.alphabet.d}", "m " + " ".join(map(str, g.alphabet.m)),
             f"vertices {g.vertex_count}"]
    if g.orientation != "out":
        lines.append(f"orientation {g.orientation}")
    for e in g.edges:
        lines.append(" ".join(map(str, ("edge", e.source, e.target) + e.label)))
    return "\n".join(lines) + "\n"


def validate_right_resolving(g: LabeledDigraph) -> List[Tuple[int, Tuple[int, ...]]]:
    """Every ``(source, label)`` pair that occurs more than once; empty if valid."""
    seen = set()
    bad = []
    for e in g.edges:
        key = (e.source, e.label)
        if key in seen and key not in bad:
            bad.append(key)
        seen.add(key)
    return bad


def build_adjacency_family(g: LabeledDigraph) -> AdjacencyFamily:
    n = g.vertex_count
    counts = {k: [[0] * n for _ in range(n)] for k in g.alphabet.keys()}
    for e in g.edges:
        key = e.label[0] if g.alphabet.d == 2 else tuple(e.label[:-1])
        i, j = (e.source, e.target) if g.orientation == "out" else (e.target, e.source)
        counts[key][i][j] += 1
    return AdjacencyFamily(n, g.alphabet, counts)


def load_matrix_family(text: str) -> AdjacencyFamily:
    """Parse the matrix format::

        dim 2
        m 3 4
        n 2
        matrix 0
        1 0
        2 0

    Keys that are never listed map to the zero matrix.
    """
    alphabet, rest = _parse_header(_tokens(text), "n")
    if not rest:
        raise GraphSpecError("missing 'n' line")
    no, tok = rest[0]
    if len(tok) != 2:
        raise GraphSpecError("usage: n <size>", no)
    (n,) = _ints(tok[1:], no, "n")
    if n < 1:
        raise GraphSpecError("matrix size must be positive", no)
    mats = {}
    body = rest[1:]
    i = 0
    while i < len(body):
        no, tok = body[i]
        if tok[0] != "matrix":
            raise GraphSpecError(f"expected 'matrix', got {tok[0]!r}", no)
        key = _ints(tok[1:], no, "matrix key")
        if len(key) != alphabet.d - 1:
            raise GraphSpecError(f"matrix key needs {alphabet.d - 1} coordinates", no)
        for c, mi in zip(key, alphabet.m):
            if not 0 <= c < mi:
                raise GraphSpecError(f"matrix key coordinate {c} out of range", no)
        key = key[0] if alphabet.d == 2 else tuple(key)
        if key in mats:
            raise GraphSpecError(f"duplicate matrix {key}", no)
        rows = body[i + 1: i + 1 + n]
        if len(rows) < n:
            raise GraphSpecError(f"matrix {key} has fewer than {n} rows", no)
        mat = []
        for rno, rtok in rows:
            row = _ints(rtok, rno, "matrix row")
            if len(row) != n:
                raise GraphSpecError(f"row has {len(row)} entries, expected {n}", rno)
            if any(x < 0 for x in row):
                raise GraphSpecError("negative matrix entry", rno)
            mat.append(row)
        mats[key] = mat
        i += 1 + n
    return AdjacencyFamily(n, alphabet, mats)


def serialize_family(fam: AdjacencyFamily) -> str:
    lines = [f"dim {fam.d}", "m " + " ".join(map(str, fam.alphabet.m)), f"n {fam.n}"]
    for k, mat in fam.matrices.items():
        if not any(any(row) for row in mat):
            continue
        key = (k,) if fam.d == 2 else k
        lines.append("matrix " + " ".join(map(str, key)))
        lines.extend(" ".join(map(str, row)) for row in mat)
    return "\n".join(lines) + "\n"


def load_any(text: str) -> Tuple[AdjacencyFamily, Optional[LabeledDigraph]]:
    """Dispatch on the third header keyword: ``vertices`` (graph) or ``n`` (matrices)."""
    for _, tok in _tokens(text):
        if tok[0] == "vertices":
            g = parse_digraph(text)
            return build_adjacency_family(g), g
        if tok[0] == "n":
            return load_matrix_family(text), None
    raise GraphSpecError("document has neither a 'vertices' nor an 'n' line")


def family_from_matrices(m: Sequence[int], matrices: Dict) -> AdjacencyFamily:
    """Convenience constructor; ``n`` is taken from the first matrix."""
    first = next(iter(matrices.values()))
    return AdjacencyFamily(len(first), AlphabetSpec(tuple(m)), matrices)
