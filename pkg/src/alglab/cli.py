"""The ``alglab`` command line.

Every command builds a report (a plain dict) and prints it as JSON, or as
indented text with ``--emit text``.  Reports carry no timing unless
``--timing`` is given, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, catalog, suite
from .algebra import Algebra, hom_check, is_group, is_loop, satisfies
from .birkhoff import VarietySpec, radical
from .commutators import (
    Commutator,
    commutator_categorical,
    commutator_from_smith,
    commutator_words,
    froehlich_commutator,
    higgins_commutator,
    huq_commutator,
)
from .congruence import (
    NormalSubobject,
    congruence_lattice,
    direct_image,
    meet_normal,
    normals_enumerate,
    quotient_by,
)
from .errors import AlgLabError, CrossCheckError, StructureError, ValidationError
from .extensions import (
    Extension,
    central_check,
    centralisation,
    commute_check,
    double_central_check,
    double_extension_check,
    extension_by,
    find_section,
    smith_double_central,
    square_of,
    threefold_criterion,
    trivial_check,
)
from .io import algebra_to_dict, dump_json, load_algebra, load_variety, parse_subobject

METHODS = ("categorical", "words", "froehlich", "higgins", "huq", "smith")
EXIT_CAP = 100


# --- report helpers ---------------------------------------------------------------

def _digest(data) -> str:
    raw = json.dumps(data, sort_keys=True, ensure_ascii=False).encode()
    return hashlib.sha256(raw).hexdigest()[:16]


def _inputs(A: Algebra, B: VarietySpec | None = None, **subs) -> dict:
    out = {"algebra": A.name, "algebra_digest": _digest(algebra_to_dict(A))}
    if B is not None:
        out["variety"] = B.name
        out["variety_digest"] = _digest(B.to_dict())
    for key, S in subs.items():
        if S is not None:
            out[key] = _names(S)
    return out


def _names(S) -> list[str]:
    if isinstance(S, (NormalSubobject, Commutator)):
        return S.names()
    return S


def _partition(theta) -> list[list[str]]:
    A = theta.algebra
    return [A.names(block) for block in theta.blocks()]


def _is_abelian(A: Algebra, B: VarietySpec) -> bool:
    return B.key == catalog.abelian_for(A).key


# --- argument handling ------------------------------------------------------------

def _algebra(args) -> Algebra:
    if not args.algebra:
        raise ValidationError("this command needs an algebra (-A)")
    return load_algebra(args.algebra)


def _variety(args, A: Algebra) -> VarietySpec:
    if not args.variety:
        raise ValidationError("this command needs a variety (-B)")
    return load_variety(args.variety, A)


def _sub(A: Algebra, spec: str | None, flag: str) -> NormalSubobject:
    if spec is None:
        raise ValidationError(f"this command needs a normal subobject ({flag})")
    try:
        return parse_subobject(A, spec)
    except ValidationError as exc:
        raise ValidationError(f"{flag} {spec!r}: {exc}") from None


# --- commands ---------------------------------------------------------------------

def cmd_inspect(args) -> tuple[dict, int]:
    A = _algebra(args)
    B = _variety(args, A) if args.variety else None
    normals = normals_enumerate(A, args.bound)
    results = {
        "size": A.size,
        "elements": list(A.elements),
        "unit": A.elements[A.unit],
        "operations": [f"{s}/{k}" for s, k in A.signature.operations],
        "is_group": bool(is_group(A)) if "inv" in A.signature else False,
        "is_loop": bool(is_loop(A)) if "rdiv" in A.signature else False,
        "normal_subobjects": [N.names() for N in normals],
        "congruences": [_partition(t) for t in congruence_lattice(A, args.bound)],
    }
    if B is not None:
        results["in_variety"] = bool(satisfies(A, B.identities))
    return {"inputs": _inputs(A, B), "results": results}, 0


def cmd_radical(args) -> tuple[dict, int]:
    A = _algebra(args)
    B = _variety(args, A)
    R = radical(A, B)
    results = {"radical": R.radical.names(), "reflection_size": R.reflected.size}
    return {"inputs": _inputs(A, B), "results": results}, 0


def cmd_reflect(args) -> tuple[dict, int]:
    A = _algebra(args)
    B = _variety(args, A)
    R = radical(A, B)
    unit = {A.elements[a]: R.reflected.elements[int(b)] for a, b in enumerate(R.unit_map.map)}
    results = {
        "reflection": algebra_to_dict(R.reflected),
        "unit_map": unit,
        "is_isomorphism": R.reflected.size == A.size,
    }
    return {"inputs": _inputs(A, B), "results": results}, 0


def _kernel_side(M: NormalSubobject, N: NormalSubobject) -> NormalSubobject | None:
    """For ``[K, A]``: the side that is not the whole algebra."""
    n = M.algebra.size
    if len(N) == n:
        return M
    if len(M) == n:
        return N
    return None


def _by_method(method: str, A, M, N, B, args) -> tuple[Commutator | None, str]:
    """The commutator by ``method``, or ``None`` with the reason it does not apply."""
    if method == "categorical":
        return commutator_categorical(A, M, N, B), ""
    if method == "words":
        if not B.word_scheme:
            return None, f"variety {B.name} has no word scheme"
        return commutator_words(A, M, N, B.word_scheme), ""
    if method == "froehlich":
        K = _kernel_side(M, N)
        if K is None:
            return None, "needs -M all or -N all"
        f = extension_by(K).map
        value = froehlich_commutator(f, B, words=False).categorical
        return Commutator(A, frozenset(range(A.size)), value.members, "froehlich"), ""
    if not _is_abelian(A, B):
        return None, f"needs the abelian variety, not {B.name}"
    if method == "higgins":
        try:
            value, converged = higgins_commutator(A, M, N, depth=args.depth)
        except StructureError as exc:
            return None, str(exc)
        return value, "" if converged else f"not stable at depth {args.depth}"
    if method == "huq":
        return huq_commutator(A, M, N, B, cross_check=True, bound=args.bound), ""
    return commutator_from_smith(A, M, N), ""


def cmd_commutator(args) -> tuple[dict, int]:
    A = _algebra(args)
    B = _variety(args, A)
    M, N = _sub(A, args.M, "-M"), _sub(A, args.N, "-N")
    report = {"inputs": _inputs(A, B, M=M, N=N)}
    value, note = _by_method(args.method, A, M, N, B, args)
    if value is None:
        raise ValidationError(f"method {args.method} does not apply: {note}")
    results = {"method": args.method, "commutator": value.names(),
               "trivial": value.is_trivial()}
    if note:
        results["note"] = note
    report["results"] = results
    if not args.cross_check:
        return report, 0
    table, agree = {}, True
    for method in METHODS:
        try:
            other, why = _by_method(method, A, M, N, B, args)
        except StructureError as exc:
            other, why = None, str(exc)
        if other is None:
            table[method] = {"applicable": False, "reason": why}
            continue
        same = other == value
        agree = agree and same
        table[method] = {"applicable": True, "value": other.names(), "agrees": same}
    report["cross_check"] = table
    results["agreement"] = agree
    return report, 0 if agree else CrossCheckError.exit_code


def _extension(args, A: Algebra) -> Extension:
    if args.map:
        return _extension_from_file(Path(args.map), A)
    if args.quotient_by is None:
        raise ValidationError("central needs --quotient-by or --map")
    return extension_by(_sub(A, args.quotient_by, "--quotient-by"))


def _extension_from_file(path: Path, A: Algebra) -> Extension:
    """A map file: ``{"target": <algebra ref>, "map": {source name: target name}}``."""
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        target = load_algebra(str(raw["target"]))
        mapping = raw["map"]
    except FileNotFoundError:
        raise ValidationError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg})") from None
    except KeyError as exc:
        raise ValidationError(f"{path}: missing field {exc}") from None
    try:
        arr = np.array([target.index(str(mapping[a])) for a in A.elements], dtype=np.int64)
    except KeyError as exc:
        raise ValidationError(f"{path}: no image given for element {exc}") from None
    try:
        f = hom_check(arr, A, target)
        return Extension(f)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def cmd_central(args) -> tuple[dict, int]:
    A = _algebra(args)
    B = _variety(args, A)
    e = _extension(args, A)
    value = froehlich_commutator(e.map, B, words=False).categorical
    results = {
        "kernel": e.kernel.names(),
        "codomain_size": e.codomain.size,
        "commutator": value.names(),
        "central": central_check(e, B),
        "trivial": trivial_check(e, B),
        "split": find_section(e.map) is not None,
        "centralisation_size": centralisation(e, B).domain.size,
    }
    return {"inputs": _inputs(A, B, K=e.kernel), "results": results}, 0


def cmd_double_central(args) -> tuple[dict, int]:
    A = _algebra(args)
    B = _variety(args, A)
    M, N = _sub(A, args.M, "-M"), _sub(A, args.N, "-N")
    sq = square_of(A, M, N)
    central = double_central_check(sq, B, cross_check=False)
    results = {
        "double_extension": double_extension_check(sq),
        "double_central": central,
        "commute": commute_check(A, M, N, B),
    }
    table = {"commute": {"value": results["commute"], "agrees": results["commute"] == central}}
    if _is_abelian(A, B) and B.signature == catalog.GROUP_SIGNATURE:
        smith = smith_double_central(sq)
        table["smith"] = {"value": smith, "agrees": smith == central}
    agree = all(row["agrees"] for row in table.values())
    results["agreement"] = agree
    report = {"inputs": _inputs(A, B, M=M, N=N), "results": results, "cross_check": table}
    return report, 0 if agree else CrossCheckError.exit_code


def cmd_threefold(args) -> tuple[dict, int]:
    A = _algebra(args)
    J, M, N = _sub(A, args.J, "-J"), _sub(A, args.M, "-M"), _sub(A, args.N, "-N")
    _, q = quotient_by(J)
    lhs = direct_image(q, meet_normal(M, N))
    rhs = meet_normal(direct_image(q, M), direct_image(q, N))
    results = {
        "image_of_meet": lhs.names(),
        "meet_of_images": rhs.names(),
        "threefold": threefold_criterion(A, J, M, N),
    }
    return {"inputs": _inputs(A, J=J, M=M, N=N), "results": results}, 0


def cmd_suite(args) -> tuple[dict, int]:
    names = [suite.resolve(n) for n in args.only] if args.only else list(suite.FAMILIES)
    families, failed = [], 0
    for name in dict.fromkeys(names):
        start = time.perf_counter()
        tally = suite.FAMILIES[name](suite.Scope(quick=args.quick, bound=args.bound))
        lines = list(tally.lines.values())
        ok = all(line.ok for line in lines)
        failed += not ok
        entry = {"family": name, "ok": ok, "lines": [line.to_dict() for line in lines]}
        if args.timing:
            entry["seconds"] = round(time.perf_counter() - start, 3)
        families.append(entry)
        if args.emit == "text":
            for line in lines:
                print(line.text(), flush=True)
    report = {"inputs": {"quick": args.quick, "bound": args.bound},
              "results": {"families": families, "failed_families": failed}}
    return report, min(failed, EXIT_CAP)


COMMANDS = {
    "inspect": (cmd_inspect, "list elements, normal subobjects and congruences"),
    "radical": (cmd_radical, "radical of an algebra relative to a variety"),
    "reflect": (cmd_reflect, "reflection of an algebra into a variety"),
    "commutator": (cmd_commutator, "relative commutator of two normal subobjects"),
    "central": (cmd_central, "classify an extension as trivial, central or split"),
    "double-central": (cmd_double_central, "classify the square of two normal subobjects"),
    "threefold": (cmd_threefold, "three-fold extension criterion for J, M, N"),
    "suite": (cmd_suite, "run the property suite over the catalog"),
}


# --- output -----------------------------------------------------------------------

def _text(value, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(value, dict):
        out = []
        for k, v in value.items():
            if isinstance(v, (dict, list)) and not _flat(v):
                out.append(f"{pad}{k}:")
                out.extend(_text(v, indent + 1))
            else:
                out.append(f"{pad}{k}: {_scalar(v)}")
        return out
    if isinstance(value, list) and not _flat(value):
        out = []
        for v in value:
            lines = _text(v, indent + 1)
            out.append(f"{pad}-" + (" " + lines[0].lstrip() if lines else ""))
            out.extend(lines[1:])
        return out
    return [f"{pad}{_scalar(value)}"]


def _flat(value) -> bool:
    return isinstance(value, list) and all(not isinstance(v, (dict, list)) for v in value)


def _scalar(v) -> str:
    if isinstance(v, list):
        return "{" + ", ".join(str(x) for x in v) + "}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def emit(report: dict, mode: str) -> None:
    if mode == "json":
        print(dump_json(report))
    else:
        print("\n".join(_text(report)))


# --- entry point ------------------------------------------------------------------

def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies suppress defaults so flags given before the command survive
    common = argparse.ArgumentParser(add_help=False,
                                     argument_default=argparse.SUPPRESS if suppress else None)
    common.add_argument("-A", dest="algebra", help="algebra file or catalog name")
    common.add_argument("-B", dest="variety", help="variety file or catalog name")
    common.add_argument("-M", help="generators of M, 'all' or '1'")
    common.add_argument("-N", help="generators of N, 'all' or '1'")
    common.add_argument("-J", help="generators of J, 'all' or '1'")
    common.add_argument("--emit", choices=("json", "text"), default="json")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for random term generation (parser tests)")
    common.add_argument("--bound", type=int, default=24, help="lattice enumeration cap")
    common.add_argument("--timing", action="store_true", help="include wall-clock timings")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alglab", parents=[_common(False)],
                                     description="Relative commutators in finite algebras.")
    parser.add_argument("--version", action="version", version=f"alglab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    parsers = {name: sub.add_parser(name, parents=[_common(True)], help=text)
               for name, (_, text) in COMMANDS.items()}
    p = parsers["commutator"]
    p.add_argument("--method", choices=METHODS, default="categorical")
    p.add_argument("--cross-check", action="store_true", help="run every applicable method")
    p.add_argument("--depth", type=int, default=2, help="word depth for --method higgins")
    p = parsers["central"]
    p.add_argument("--quotient-by", help="generators of the kernel")
    p.add_argument("--map", help="JSON file with target algebra and element map")
    p = parsers["suite"]
    p.add_argument("--quick", action="store_true", help="only algebras of size at most 8")
    p.add_argument("--only", action="append", default=[], help="family to run (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    fn, _ = COMMANDS[args.command]
    start = time.perf_counter()
    try:
        report, code = fn(args)
    except AlgLabError as exc:
        print(f"alglab {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    out = {"command": ["alglab", *argv], **report}
    if args.timing:
        out["timing"] = {"seconds": round(time.perf_counter() - start, 3)}
    if not (args.command == "suite" and args.emit == "text"):
        emit(out, args.emit)
    elif code:
        print(f"{code} famil{'y' if code == 1 else 'ies'} failed")
    return code


if __name__ == "__main__":
    sys.exit(main())
