"""Command-line front end.

    soficdim validate FILE
    soficdim dim2 FILE [--K K] [--kmax K] [--oracle-N N]
    soficdim dim3 FILE [--K K] [--D D] [--N-max N] [--oracle-N N]
    soficdim oracle FILE --N N
    soficdim report FILE

FILE is a path or the name of a bundled example (``example1.graph``,
``example3``, ...).  Reports are JSON (schema 1) or plain text; every number
in them names the method that produced it.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path

from .dim2 import Dim2Config, MethodInapplicable, TruncationError, dimension2d
from .dim3 import DepthError, Dim3Config, dimension3d
from .graph_model import GraphSpecError, RightResolvingError, load_any, serialize_family
from .matrix_kernel import ConvergenceError
from .oracle import BudgetExceeded, brute_dim2_sequence, brute_dim3_sequence, trivial_case, trivial_case_dimension
from .reference import compare, identify

SCHEMA = 1

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_RESOLVING = 4
EXIT_INAPPLICABLE = 5
EXIT_BUDGET = 6
EXIT_TRUNCATION = 7


class CliError(Exception):
    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


def bundled_names():
    data = resources.files("soficdim").joinpath("data")
    return sorted(p.name for p in data.iterdir() if p.name.endswith((".graph", ".matrix")))


def read_input(path: str):
    """Return ``(text, resolved name)``; bundled examples are found by file name."""
    p = Path(path)
    if p.is_file():
        return p.read_text(), str(p)
    data = resources.files("soficdim").joinpath("data")
    for cand in (p.name, p.name + ".graph", p.name + ".matrix"):
        f = data.joinpath(cand)
        if f.is_file():
            return f.read_text(), f"bundled:{cand}"
    raise CliError(EXIT_PARSE, f"{path}: no such file or bundled example ({', '.join(bundled_names())})")


def load(path: str):
    text, name = read_input(path)
    try:
        fam, graph = load_any(text)
    except RightResolvingError as exc:
        raise CliError(EXIT_RESOLVING, f"{name}: {exc}") from None
    except GraphSpecError as exc:
        raise CliError(EXIT_PARSE, f"{name}: {exc}") from None
    echo = {
        "path": name,
        "kind": "graph" if graph is not None else "matrix",
        "sha256": hashlib.sha256(text.encode()).hexdigest(),
        "text": text,
    }
    return fam, graph, echo


def _num(method, quantity, value, **extra):
    rec = {"method": method, "quantity": quantity, "value": value}
    rec.update(extra)
    return rec


def _sequence_doc(seq, method):
    doc = seq.as_dict()
    doc["method"] = method
    return doc


def _report_doc(rep, fam):
    results = []
    if rep.r is not None:
        results.append(_num(rep.method, "r", rep.r))
    if rep.dim is not None:
        method = rep.method if rep.r is not None else "operator-extrapolation"
        results.append(_num(method, "dim", rep.dim))
    doc = {
        "structure": rep.structure,
        "results": results,
        "diagnostics": {
            "method": rep.method,
            "residual": rep.residual,
            "truncation_order": rep.truncation_order,
            "tail_estimate": rep.tail_estimate,
        },
    }
    if rep.series is not None:
        doc["series"] = {
            "method": "enumerated-coefficients",
            "L": rep.series.L,
            "alpha": rep.series.alpha,
            "log_coefficients": rep.series.log_coeffs,
        }
    if rep.lower_bounds:
        doc["lower_bounds"] = [
            {"method": "companion-bound", "k": k, "r": r, "dim": math.log(r) / math.log(fam.alphabet.m[0])}
            for k, r in rep.lower_bounds
        ]
    if rep.estimator is not None:
        doc["operator_estimates"] = _sequence_doc(rep.estimator, "operator-extrapolation")
    if rep.oracle is not None:
        doc["oracle"] = _sequence_doc(rep.oracle, "oracle-extrapolation")
        doc["oracle"]["delta"] = rep.oracle_delta
    if rep.alternatives:
        doc["alternatives"] = [dict(a, method=rep.method) for a in rep.alternatives]
    return doc


def _json_safe(obj):
    if isinstance(obj, float):
        if math.isinf(obj) or math.isnan(obj):
            return str(obj)
        return obj
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def run_validate(args, fam, graph, doc):
    doc["valid"] = True
    doc["family"]["primitive_sum"] = _primitive(fam)


def _primitive(fam):
    from .matrix_kernel import is_primitive

    return is_primitive(fam.total())


def run_dim2(args, fam, graph, doc):
    if fam.d != 2:
        raise CliError(EXIT_INAPPLICABLE, "dim2 needs a d = 2 input")
    cfg = Dim2Config(K=args.K, k_max=args.kmax, oracle_N=args.oracle_N,
                     max_len=args.max_len, strict_primitivity=args.strict)
    rep = dimension2d(fam, cfg)
    return rep


def run_dim3(args, fam, graph, doc):
    if fam.d != 3:
        raise CliError(EXIT_INAPPLICABLE, "dim3 needs a d = 3 input")
    cfg = Dim3Config(K=args.K if args.K is not None else 40, D=args.D, N_max=args.N_max,
                     oracle_N=args.oracle_N, strict_primitivity=args.strict)
    return dimension3d(fam, cfg)


def run_oracle(args, fam, graph, doc):
    seq = brute_dim2_sequence(fam, args.N) if fam.d == 2 else brute_dim3_sequence(fam, args.N)
    doc["oracle"] = _sequence_doc(seq, "oracle-extrapolation")
    doc["results"] = [_num("oracle-extrapolation", "dim", seq.extrapolated),
                      _num("oracle-raw", "dim", seq.values[-1][1], N=seq.values[-1][0])]
    kind = trivial_case(fam)
    if kind:
        doc["results"].append(_num(f"closed-form-{kind}", "dim", trivial_case_dimension(fam)))


def _attach(rep, fam, doc):
    doc.update(_report_doc(rep, fam))
    name = identify(fam)
    if name is not None:
        doc["example"] = name
        doc["comparisons"] = compare(rep, name)
    doc["warnings"] = rep.warnings
    doc["flags"] = rep.flags


def run_report(args, fam, graph, doc):
    kind = trivial_case(fam)
    if kind:
        doc.setdefault("extra_results", []).append(
            _num(f"closed-form-{kind}", "dim", trivial_case_dimension(fam)))
    if fam.d == 2:
        args.oracle_N = args.oracle_N if args.oracle_N is not None else 12
        return run_dim2(args, fam, graph, doc)
    args.oracle_N = args.oracle_N if args.oracle_N is not None else 6
    return run_dim3(args, fam, graph, doc)


def write_csv(path, rep):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "log_coefficient", "coefficient"])
        for k, (lc, c) in enumerate(zip(rep.series.log_coeffs, rep.series.coeffs)):
            w.writerow([k, repr(lc), repr(c)])


def format_text(doc) -> str:
    lines = [f"input  {doc['input']['path']}  sha256 {doc['input']['sha256'][:16]}"]
    fam = doc["family"]
    lines.append(f"family d={fam['d']} m={fam['m']} n={fam['n']}")
    if "structure" in doc:
        lines.append(f"structure {json.dumps(doc['structure'])}")
    for rec in doc.get("results", []) + doc.get("extra_results", []):
        lines.append(f"{rec['quantity']:<4} {rec['value']!r:<22} [{rec['method']}]")
    if doc.get("lower_bounds"):
        k, r = doc["lower_bounds"][-1]["k"], doc["lower_bounds"][-1]["r"]
        lines.append(f"r_{k} {r!r:<22} [companion-bound]")
    for key in ("operator_estimates", "oracle"):
        if key in doc:
            seq = doc[key]
            lines.append(f"{key} N<={seq['values'][-1][0]}: {seq['extrapolated']!r} [{seq['method']}]")
    for rec in doc.get("comparisons", []):
        if rec["kind"] == "published-comparison":
            tag = "match" if rec["match"] else "FLAG"
            lines.append(f"{tag:<5} {rec['quantity']} published {rec['published']} computed {rec['computed']:.6f}")
    for rec in doc.get("flags", []):
        if "suspected" in rec:
            lines.append(f"suspected: {rec['suspected']}")
            break
    for w in doc.get("warnings", []):
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"


def build_parser():
    ap = argparse.ArgumentParser(prog="soficdim", description="Hausdorff dimension of sofic sets")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--csv", help="side file for the coefficient series")
        p.add_argument("--strict", action="store_true", help="treat a non-primitive sum as an error")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    common(sub.add_parser("validate", help="parse and check an input"))
    p = common(sub.add_parser("dim2", help="planar tower method"))
    p.add_argument("--K", type=int, help="truncation order (default: adaptive)")
    p.add_argument("--kmax", type=int, default=40, help="largest companion truncation")
    p.add_argument("--oracle-N", type=int, default=0)
    p.add_argument("--max-len", type=int, default=6, help="longest rank-one string searched")
    p = common(sub.add_parser("dim3", help="tree operators and return series"))
    p.add_argument("--K", type=int, default=40)
    p.add_argument("--D", type=int, help="tree depth cap (default K + 2)")
    p.add_argument("--N-max", type=int, default=10)
    p.add_argument("--oracle-N", type=int, default=0)
    p = common(sub.add_parser("oracle", help="brute-force sums"))
    p.add_argument("--N", type=int, required=True)
    p = common(sub.add_parser("report", help="everything applicable"))
    p.add_argument("--K", type=int)
    p.add_argument("--D", type=int)
    p.add_argument("--kmax", type=int, default=40)
    p.add_argument("--N-max", type=int, default=10)
    p.add_argument("--oracle-N", type=int)
    p.add_argument("--max-len", type=int, default=6)
    return ap


def _check_positive(args):
    for name in ("K", "D", "kmax", "N_max", "N", "max_len"):
        val = getattr(args, name, None)
        if val is not None and val <= 0:
            raise CliError(2, f"--{name.replace('_', '-')} must be positive")
    if getattr(args, "oracle_N", None) is not None and args.oracle_N < 0:
        raise CliError(2, "--oracle-N must be non-negative")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(message)s")
    try:
        _check_positive(args)
        fam, graph, echo = load(args.file)
        doc = {
            "schema": SCHEMA,
            "command": args.command,
            "input": echo,
            "family": {"d": fam.d, "m": list(fam.alphabet.m), "n": fam.n,
                       "fingerprint": fam.fingerprint(), "matrices": serialize_family(fam)},
            "config": {k: v for k, v in vars(args).items()
                       if k not in ("file", "out", "format", "csv", "command", "verbose")},
        }
        runner = {"validate": run_validate, "dim2": run_dim2, "dim3": run_dim3,
                  "oracle": run_oracle, "report": run_report}[args.command]
        try:
            rep = runner(args, fam, graph, doc)
        except MethodInapplicable as exc:
            raise CliError(EXIT_INAPPLICABLE, str(exc)) from None
        except (BudgetExceeded, DepthError) as exc:
            raise CliError(EXIT_BUDGET, str(exc)) from None
        except (TruncationError, ConvergenceError) as exc:
            raise CliError(EXIT_TRUNCATION, str(exc)) from None
        if rep is not None:
            _attach(rep, fam, doc)
            if args.csv and rep.series is not None:
                write_csv(args.csv, rep)
    except CliError as exc:
        print(f"soficdim: error: {exc}", file=sys.stderr)
        return exc.code

    doc = _json_safe(doc)
    out = json.dumps(doc, indent=2) + "\n" if args.format == "json" else format_text(doc)
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
