"""Reading and writing algebra and variety files, and subobject arguments."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import catalog
from .algebra import Algebra, FiniteAlgebra
from .birkhoff import VarietySpec, load_variety_dict
from .congruence import NormalSubobject, normal_closure, trivial, whole
from .errors import ValidationError
from .terms import LOOP_SIGNATURE, Signature


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def algebra_from_dict(raw: dict, source: str = "<algebra>") -> FiniteAlgebra:
    try:
        names = [str(e) for e in raw["elements"]]
        ops = raw["operations"]
        unit_name = str(raw["unit"])
    except KeyError as exc:
        raise ValidationError(f"{source}: missing field {exc}") from None
    if "size" in raw and raw["size"] != len(names):
        raise ValidationError(f"{source}: size {raw['size']} but {len(names)} elements")
    index = {e: i for i, e in enumerate(names)}
    if len(index) != len(names):
        raise ValidationError(f"{source}: duplicate element names")
    if unit_name not in index:
        raise ValidationError(f"{source}: unit {unit_name!r} is not an element")
    signature = []
    tables = {}
    for sym, spec in ops.items():
        k = int(spec["arity"])
        signature.append((sym, k))
        table = np.asarray(spec["table"], dtype=object)
        if table.shape != (len(names),) * k:
            raise ValidationError(
                f"{source}: table of {sym!r} has shape {table.shape}, expected {(len(names),) * k}"
            )
        try:
            tables[sym] = np.vectorize(lambda e: index[str(e)], otypes=[np.int64])(table) \
                if k else np.asarray(index[str(table.item())])
        except KeyError as exc:
            raise ValidationError(f"{source}: table of {sym!r} names unknown element {exc}") from None
    if not any(k == 0 for _, k in signature):
        signature.append(("1", 0))
        tables["1"] = np.asarray(index[unit_name])
    constants = [s for s, k in signature if k == 0]
    if len(constants) != 1:
        raise ValidationError(f"{source}: expected exactly one constant, found {constants}")
    sig = Signature(tuple(signature), unit_symbol=constants[0])
    try:
        return FiniteAlgebra(str(raw.get("name", source)), sig, names, index[unit_name], tables)
    except ValidationError as exc:
        raise ValidationError(f"{source}: {exc}") from None


def algebra_to_dict(A: Algebra) -> dict:
    names = A.elements
    ops = {}
    for sym, k in A.signature.operations:
        if k == 0:
            table = names[A.unit]
        else:
            table = np.vectorize(lambda i: names[i], otypes=[object])(
                np.asarray(A.apply(sym, *np.indices((A.size,) * k)))).tolist()
        ops[sym] = {"arity": k, "table": table}
    return {"name": A.name, "size": A.size, "elements": names,
            "unit": names[A.unit], "operations": ops}


def load_algebra(ref: str) -> FiniteAlgebra:
    """A catalog name, or the path of an algebra file."""
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise ValidationError(f"{ref}: no such file")
        return algebra_from_dict(_read_json(path), source=str(path))
    return catalog.algebra(ref)


def load_variety(ref: str, A: Algebra) -> VarietySpec:
    """A catalog variety name, or the path of a variety file, over ``A``'s signature."""
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise ValidationError(f"{ref}: no such file")
        try:
            return load_variety_dict(_read_json(path), A.signature)
        except ValidationError as exc:
            raise ValidationError(f"{path}: {exc}") from None
    B = catalog.variety_for(ref, A)
    if not B.applies_to(A):
        kind = "loops" if B.signature == LOOP_SIGNATURE else "groups"
        raise ValidationError(f"variety {B.name} is stated for {kind}; it does not apply to {A.name}")
    return B


def variety_to_dict(B: VarietySpec) -> dict:
    return B.to_dict()


def split_generators(spec: str) -> list[str]:
    """Split ``"g1,g2"`` at commas that are not inside parentheses."""
    out, depth, cur = [], 0, []
    for ch in spec:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur).strip())
    return [g for g in out if g]


def parse_subobject(A: FiniteAlgebra, spec: str) -> NormalSubobject:
    """``all``, ``1`` (the trivial subobject) or generator names; normal closure is taken."""
    s = spec.strip()
    if s.lower() == "all":
        return whole(A)
    if s == "1" and "1" not in A.elements:
        return trivial(A)
    gens = [A.index(g) for g in split_generators(s)]
    return normal_closure(A, gens)


def dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=False, ensure_ascii=False)


__all__ = [
    "algebra_from_dict", "algebra_to_dict", "load_algebra", "load_variety",
    "variety_to_dict", "split_generators", "parse_subobject", "dump_json",
]
