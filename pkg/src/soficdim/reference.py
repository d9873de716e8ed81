"""Published values for the bundled examples and match-or-flag comparison.

The numbers live in ``data/reference.json``; this module only evaluates the
published closed-form series and lines them up against a computed report.
A published value either agrees within the stored tolerance or produces a
flag that carries the suspected cause.  There is no third outcome.
"""

from __future__ import annotations

import itertools
import json
import math
from importlib import resources
from typing import Dict, List, Optional

from .dim2 import CoefficientSeries, DimensionReport, solve_series_root
from .graph_model import AdjacencyFamily


def load_reference() -> Dict:
    return json.loads(resources.files("soficdim").joinpath("data/reference.json").read_text())


def identify(family: AdjacencyFamily, ref: Optional[Dict] = None) -> Optional[str]:
    ref = ref or load_reference()
    fp = family.fingerprint()
    for name, entry in ref["examples"].items():
        if entry["fingerprint"] == fp:
            return name
    return None


def _series_example1(K):
    a = math.log(2, 3)
    s2 = math.sqrt(2)

    def c(N, k):
        return 2 ** (N - k + 1) * ((2 + 2 * s2) * (1 + s2) ** k - (2 - 2 * s2) * (1 - s2) ** k)

    coeffs = [0.0] + [math.fsum(c(N, k) ** a for k in range(N + 1)) for N in range(1, K + 1)]
    return CoefficientSeries.from_coeffs(coeffs, L=2, alpha=a), True


def _series_example2(K):
    a = math.log(3, 4)
    coeffs = [
        math.fsum(math.comb(N, k) * ((3 ** k * 5 ** (N - k) - 1) / 2) ** a for k in range(N + 1))
        for N in range(K + 1)
    ]
    return CoefficientSeries.from_coeffs(coeffs, L=1, alpha=a), True


def _series_example3(K):
    a1, a2 = math.log(2, 3), math.log(3, 4)
    terms = [1.0, 1.0, math.sqrt(2), (2 + 2 ** a2) ** a1, (3 + 2 ** a2 + 3 ** a2) ** a1]
    # only the leading terms are printed
    return CoefficientSeries.from_coeffs(terms[: K + 1], L=1, alpha=a1), False


def _series_example4(K):
    a1, a2 = math.log(3, 4), math.log(4, 5)
    K = min(K, 14)
    coeffs = []
    for N in range(K + 1):
        tot = []
        for s in itertools.product((1, 2), repeat=N):
            inner = (N + s.count(2)) ** a2 + math.fsum(
                2 ** (k - 1) * (N + sum(1 for j in range(k, N + 1) if s[j - 1] == 2)) ** a2
                for k in range(1, N)
            )
            tot.append(inner ** a1)
        coeffs.append(math.fsum(tot))
    return CoefficientSeries.from_coeffs(coeffs, L=1, alpha=a1), True


PUBLISHED_SERIES = {
    "example1": _series_example1,
    "example2": _series_example2,
    "example3": _series_example3,
    "example4": _series_example4,
}


def published_series(name: str, K: int):
    """``(series, complete)``; ``complete`` is False when only leading terms exist."""
    return PUBLISHED_SERIES[name](K)


def compare(report: DimensionReport, name: str, ref: Optional[Dict] = None) -> List[Dict]:
    """Match-or-flag records for ``r``, the dimension and the series coefficients.

    Matches are returned as records with ``match: True``; every mismatch is a
    record with ``match: False`` and the stored suspected cause.  Mismatches
    are also appended to ``report.flags``.
    """
    ref = ref or load_reference()
    entry = ref["examples"][name]
    tol = ref["tolerance"]
    out = []
    base = report.m[0]

    for quantity in ("r", "dim"):
        computed = getattr(report, quantity)
        if computed is None:
            continue
        rec = {
            "kind": "published-comparison",
            "example": name,
            "quantity": quantity,
            "published": entry[quantity],
            "computed": computed,
            "method": report.method,
            "delta": computed - entry[quantity],
        }
        rec["match"] = abs(rec["delta"]) <= tol
        if quantity == "dim" and entry["log_base"] != base:
            rec["published_log_base"] = entry["log_base"]
            rec["rebased_published_dim"] = math.log(entry["r"]) / math.log(base)
        if not rec["match"]:
            rec["suspected"] = entry["suspected"]
        out.append(rec)

    if report.series is not None:
        K = report.series.K
        pub, complete = published_series(entry["series"], K)
        ours = report.series.coeffs
        bad = [
            k for k, (p, c) in enumerate(zip(pub.coeffs, ours))
            if abs(p - c) > 1e-9 * max(abs(p), abs(c), 1e-300)
        ]
        if bad:
            k = bad[0]
            out.append({
                "kind": "coefficient-mismatch",
                "example": name,
                "index": k,
                "published": pub.coeffs[k],
                "computed": ours[k],
                "mismatched_indices": bad,
                "compared_terms": min(len(ours), pub.K + 1),
                "match": False,
                "suspected": entry["suspected"],
            })
        if complete:
            r_pub = solve_series_root(pub, check_summable=False)
            out.append({
                "kind": "published-series-root",
                "example": name,
                "truncation_order": pub.K,
                "r": r_pub,
                "dim": math.log(r_pub) / math.log(base),
                "match": abs(r_pub - entry["r"]) <= tol,
            })

    report.flags.extend(rec for rec in out if rec["kind"] != "published-series-root" and not rec["match"])
    return out
