"""Command line: reproducible experiments with self-describing JSON reports.

Exit status: 0 success, 2 invalid input, 3 resource cap exceeded, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from fractions import Fraction
from typing import Callable, Sequence

from . import __version__
from .errors import CapExceededError, DegenerateFormError, LatticeError, TruncationError
from .lattice_core import Lattice, build_named_lattice, lattice_to_json
from .qseries import QSeries, exact_compare, graded_dims, slope_bound, sturm_equal, sturm_window, theta_genus1

SCHEMA = "lattice_voa.report/1"
EXIT_OK, EXIT_INTERNAL, EXIT_INVALID, EXIT_CAP = 0, 1, 2, 3

log = logging.getLogger("lattice_voa")

ENV_HELP = """environment:
  LATTICE_VOA_MAX_VECTORS  cap on enumerated lattice vectors (default 10^7)
  LATTICE_VOA_MAX_TERMS    cap on rational trace terms in phi/casimir (default 10^6)

exit status: 0 ok, 2 invalid input, 3 resource cap exceeded, 1 internal error
"""


class UsageError(ValueError):
    pass


# ------------------------------------------------------------ argument types


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _pos(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _window(text: str) -> list[list[int]]:
    """'lo:hi,lo:hi,...' in the order a_1, b_1, a_2, b_2, ..."""
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition(":")
        try:
            bounds = [int(lo), int(hi if sep else lo)]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad window bound {part!r}; use lo:hi") from exc
        if bounds[0] > bounds[1]:
            raise argparse.ArgumentTypeError(f"empty window bound {part!r}")
        out.append(bounds)
    return out


def _gram_text(text: str) -> list[list[int]]:
    """'2,1;1,2' or a JSON matrix."""
    text = text.strip()
    try:
        if text.startswith("["):
            rows = json.loads(text)
        else:
            rows = [[int(x) for x in row.split(",")] for row in text.split(";")]
        return [[int(x) for x in row] for row in rows]
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"cannot parse Gram matrix {text!r}") from exc


def _lattice(name: str) -> Lattice:
    return build_named_lattice(name)


# ------------------------------------------------------------------ helpers


def _rational(c) -> str:
    return str(Fraction(c))


def _series_ref(ref: str, order: int) -> tuple[QSeries, dict]:
    """A series JSON file (bare or inside a report), else a lattice whose character is taken."""
    if os.path.isfile(ref) and ref.endswith(".json"):
        with open(ref) as fh:
            doc = json.load(fh)
        if "result" in doc and isinstance(doc["result"], dict) and "series" in doc["result"]:
            doc = doc["result"]["series"]
        return QSeries.from_json(doc), {"file": ref}
    lat = _lattice(ref)
    return graded_dims(lat, order), {"lattice": lat.name, "character_order": order}


def _check_comparable(f: QSeries, g: QSeries) -> None:
    if f.prefactor != g.prefactor:
        raise UsageError(f"incompatible prefactors {f.prefactor} and {g.prefactor}")


# ----------------------------------------------------------------- commands


def cmd_theta(a) -> dict:
    lat = _lattice(a.lattice)
    return {"lattice": lattice_to_json(lat), "series": theta_genus1(lat, a.order, cap=a.max_vectors).to_json()}


def cmd_char(a) -> dict:
    lat = _lattice(a.lattice)
    s = graded_dims(lat, a.order, eta_normalized=a.eta, cap=a.max_vectors)
    return {"lattice": lattice_to_json(lat), "series": s.to_json()}


def cmd_repnum(a) -> dict:
    from .genus_theta import GramTarget, representation_number

    lat = _lattice(a.lattice)
    t = GramTarget(a.gram)
    return {"lattice": lat.name, "target": t.to_json(), "count": representation_number(lat, t, cap=a.max_vectors)}


def cmd_reptable(a) -> dict | str:
    from .genus_theta import rep_table

    lat = _lattice(a.lattice)
    table = rep_table(lat, a.genus, a.max_diag, cap=a.max_vectors)
    if a.format == "tsv":
        g = table.g
        lines = ["\t".join([f"t{i + 1}{j + 1}" for i in range(g) for j in range(g)] + ["count"])]
        for t, c in table.sorted_items():
            lines.append("\t".join(str(x) for x in list(t.flat()) + [c]))
        return "\n".join(lines) + "\n"
    return {
        "lattice": lat.name,
        "genus": a.genus,
        "max_diag": a.max_diag,
        "total": table.total(),
        "entries": [{"t": t.to_json()["t"], "count": c} for t, c in table.sorted_items()],
    }


def cmd_schottky_diff(a) -> dict:
    from .genus_theta import schottky_difference_report

    la, lb = _lattice(a.a), _lattice(a.b)
    diffs = schottky_difference_report(la, lb, a.genus, a.max_diag, cap=a.max_vectors)
    return {
        "a": la.name,
        "b": lb.name,
        "genus": a.genus,
        "max_diag": a.max_diag,
        "count": len(diffs),
        "differences": [{"t": t.to_json()["t"], "a": ca, "b": cb} for t, ca, cb in diffs],
    }


def cmd_phi(a) -> dict:
    from .fock_voa import phi_block

    lat = _lattice(a.lattice)
    k = a.k
    if a.window is None:
        window = []
        for kk in k:
            window += [[-2 * kk - 5, -2 * kk], [0, 5]]
    else:
        window = a.window
    if len(window) != 2 * len(k):
        raise UsageError(f"--window needs {2 * len(k)} bounds (a_i and b_i per pair), got {len(window)}")
    w = phi_block(lat, a.n, k, window, trunc=a.trunc, pairing=a.pairing, max_terms=a.max_terms)
    return {"lattice": lat.name, "window": w.to_json()}


def cmd_casimir(a) -> dict:
    from .fock_voa import casimir_zero_trace

    lat = _lattice(a.lattice)
    return {"lattice": lat.name, "n": a.n, "t": a.t, "trace": _rational(casimir_zero_trace(lat, a.n, a.t, max_terms=a.max_terms))}


def _compare(a, mode: str) -> dict:
    weight = a.weight
    order = a.order if a.order is not None else max(20, sturm_window(weight or 0))
    f, fsrc = _series_ref(a.a, order)
    g, gsrc = _series_ref(a.b, order)
    _check_comparable(f, g)
    if mode == "sturm":
        if weight is None:
            raise UsageError("sturm comparison needs --weight")
        verdict = sturm_equal(f, g, weight, full_window=a.full_window)
    else:
        verdict = exact_compare(f, g)
    out = verdict.to_json()
    out.update({"mode": mode, "a": fsrc, "b": gsrc})
    if mode == "sturm":
        # the full computed expansion, as a cross-check of the windowed verdict
        full = exact_compare(f, g)
        out["full_expansion"] = full.to_json()
    return out


def cmd_sturm(a) -> dict:
    return _compare(a, "sturm")


def cmd_compare(a) -> dict:
    return _compare(a, a.mode)


def cmd_slope(a) -> dict:
    return {"central_charge": a.charge, "vanishing_order": a.order, "bound": _rational(slope_bound(a.charge, a.order))}


# ------------------------------------------------------------------- parser


def _add_caps(p: argparse.ArgumentParser, vectors: bool = True, terms: bool = False) -> None:
    if vectors:
        p.add_argument("--max-vectors", type=_pos, default=None, help="vector enumeration cap (overrides env)")
    if terms:
        p.add_argument("--max-terms", type=_pos, default=None, help="trace term cap (overrides env)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lattice-voa",
        description="Exact lattice VOA computations: theta series, characters, representation numbers, trace functions.",
        epilog=ENV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name: str, func: Callable, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=ENV_HELP,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(func=func)
        p.add_argument("--output", "-o", default=None, help="write the report here instead of stdout")
        p.add_argument("--timing", action="store_true", help="log wall time to stderr (reports stay deterministic)")
        return p

    p = add("theta", cmd_theta, "genus-1 theta series of a lattice")
    p.add_argument("--lattice", required=True)
    p.add_argument("--order", type=_nonneg, required=True)
    _add_caps(p)

    p = add("char", cmd_char, "graded dimensions dim V_n of the lattice VOA")
    p.add_argument("--lattice", required=True)
    p.add_argument("--order", type=_nonneg, required=True)
    p.add_argument("--eta", action="store_true", help="attach the q^{-rank/24} prefactor")
    _add_caps(p)

    p = add("repnum", cmd_repnum, "representation number of one Gram matrix")
    p.add_argument("--lattice", required=True)
    p.add_argument("--gram", type=_gram_text, required=True, help="rows separated by ';', e.g. '2,1;1,2'")
    _add_caps(p)

    p = add("reptable", cmd_reptable, "all representation numbers with diagonal <= max-diag")
    p.add_argument("--lattice", required=True)
    p.add_argument("--genus", type=_pos, required=True)
    p.add_argument("--max-diag", type=_nonneg, required=True)
    p.add_argument("--format", choices=("json", "tsv"), default="json")
    _add_caps(p)

    p = add("schottky-diff", cmd_schottky_diff, "Gram targets where two lattices' theta coefficients differ")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--genus", type=_pos, required=True)
    p.add_argument("--max-diag", type=_nonneg, required=True)
    _add_caps(p)

    p = add("phi", cmd_phi, "window of the trace function Phi_{n,k}")
    p.add_argument("--lattice", required=True)
    p.add_argument("--n", type=_nonneg, required=True)
    p.add_argument("--k", type=_int_list, required=True, help="comma-separated weights k_1,...,k_{g-1}")
    p.add_argument("--window", type=_window, default=None,
                   help="exponent bounds lo:hi for a_1,b_1,a_2,b_2,...; write --window=-7:-2,0:5")
    p.add_argument("--trunc", type=_nonneg, default=None, help="intermediate weight cap (default derived)")
    p.add_argument("--pairing", choices=("vacuum", "form"), default="vacuum")
    _add_caps(p, vectors=False, terms=True)

    p = add("casimir", cmd_casimir, "trace of powers of the weight-1 zero-mode Casimir on V_n")
    p.add_argument("--lattice", required=True)
    p.add_argument("--n", type=_nonneg, required=True)
    p.add_argument("--t", type=_nonneg, default=1)
    _add_caps(p, vectors=False, terms=True)

    for name, func, text in (("sturm", cmd_sturm, "Sturm-window equality of two characters or series files"),
                             ("compare", cmd_compare, "compare two series (sturm window or exact)")):
        p = add(name, func, text)
        p.add_argument("--a", required=True, help="lattice name or series JSON file")
        p.add_argument("--b", required=True, help="lattice name or series JSON file")
        p.add_argument("--weight", type=_nonneg, default=8 if name == "sturm" else None)
        p.add_argument("--order", type=_nonneg, default=None, help="character order for lattice refs (default 20)")
        p.add_argument("--full-window", action="store_true")
        if name == "compare":
            p.add_argument("--mode", choices=("sturm", "exact"), default="exact")

    p = add("slope", cmd_slope, "slope bound c/(2b)")
    p.add_argument("--charge", type=_pos, required=True, help="central charge c")
    p.add_argument("--order", type=_pos, required=True, help="vanishing order b")

    p = add("replay", None, "re-run the configuration echoed in a report")
    p.add_argument("report")
    return parser


_NOT_CONFIG = {"func", "output", "timing"}


def _config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def _argv_from_config(parser: argparse.ArgumentParser, config: dict) -> list[str]:
    command = config["command"]
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = subparsers.choices[command]
    argv = [command]
    for action in sp._actions:
        if not action.option_strings or action.dest in _NOT_CONFIG or action.dest == "help":
            continue
        value = config.get(action.dest)
        if value is None or value is False:
            continue
        flag = action.option_strings[-1] if action.option_strings[0].startswith("-o") else action.option_strings[0]
        if value is True:
            argv.append(flag)
        elif action.dest == "window":
            argv.append(f"{flag}=" + ",".join(f"{lo}:{hi}" for lo, hi in value))
        elif action.dest == "gram":
            argv += [flag, ";".join(",".join(str(x) for x in row) for row in value)]
        elif isinstance(value, list):
            argv.append(f"{flag}=" + ",".join(str(x) for x in value))
        else:
            argv.append(f"{flag}={value}")
    return argv


def _versions() -> dict:
    import numpy
    import scipy

    return {"lattice_voa": __version__, "python": platform.python_version(), "numpy": numpy.__version__, "scipy": scipy.__version__}


def dispatch(args: argparse.Namespace, parser: argparse.ArgumentParser) -> tuple[int, str]:
    if args.command == "replay":
        with open(args.report) as fh:
            doc = json.load(fh)
        if doc.get("schema") != SCHEMA:
            raise UsageError(f"not a {SCHEMA} report")
        replayed = parser.parse_args(doc["argv"])
        replayed.output = args.output
        replayed.timing = args.timing
        return dispatch(replayed, parser)
    start = time.perf_counter()
    result = args.func(args)
    elapsed = time.perf_counter() - start
    if args.timing:
        log.warning("%s finished in %.3f s", args.command, elapsed)
    if isinstance(result, str):
        return EXIT_OK, result
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "config": _config(args),
        "argv": _argv_from_config(parser, _config(args)),
        "caps": {
            "max_vectors": getattr(args, "max_vectors", None) or int(os.environ.get("LATTICE_VOA_MAX_VECTORS", 10**7)),
            "max_terms": getattr(args, "max_terms", None) or int(os.environ.get("LATTICE_VOA_MAX_TERMS", 10**6)),
        },
        "versions": _versions(),
        "result": result,
    }
    return EXIT_OK, json.dumps(report, indent=2, sort_keys=True) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        status, text = dispatch(args, parser)
    except CapExceededError as exc:
        print(f"error: resource cap {exc.cap}={exc.limit} exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except DegenerateFormError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (UsageError, LatticeError, TruncationError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort reporting
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
