"""Command-line front end.

Exit codes: 0 success, 1 property falsified, 2 input error.  All JSON output is
canonical (sorted keys, rationals as "p/q") so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import resources
from math import factorial
from pathlib import Path

import jsonschema

from .arrangement import (INTERSECTION_ORDER, SIZE_ORDER, AffinePSub, PCleanFamily, diagonal_family,
                          enumerate_orders, intersection_closure, is_closed, is_p_clean, size_order,
                          three_coplanar_lines)
from .atlas import Atlas
from .blowup import TRUE, check_equivalence, face_lattice, resolve
from .errors import DomainError, ModelError, PreconditionError, StepError
from .linalg import fstr
from .orthant import OrthantChart

EXIT_OK, EXIT_FALSIFIED, EXIT_INPUT = 0, 1, 2
SCHEMA_VERSION = "v1"
DEFAULT_CAP = factorial(10)


class InputError(Exception):
    pass


# --- canonical JSON ----------------------------------------------------------


def _default(obj):
    if isinstance(obj, Fraction):
        return fstr(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=_default) + "\n"


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- inputs ------------------------------------------------------------------


def load_schema(name: str) -> dict:
    path = resources.files("corner_calculus") / "schema" / SCHEMA_VERSION / f"{name}.json"
    return json.loads(path.read_text())


def _read_json(path: str, schema: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        jsonschema.validate(data, load_schema(schema))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"{path}: schema violation at {where}: {exc.message}") from exc
    return data


def family_from_json(data: dict) -> PCleanFamily:
    jsonschema.validate(data, load_schema("family"))
    ch = data["chart"]
    chart = OrthantChart(ch["boundary_count"], ch["interior_count"], tuple(ch.get("labels", ())))
    names = data.get("names") or sorted(data["elements"])
    if sorted(names) != sorted(data["elements"]):
        raise InputError("names must list exactly the element keys")
    els = []
    for a in names:
        e = data["elements"][a]
        eq = e.get("equations", {"matrix": [], "rhs": []})
        if len(eq["matrix"]) != len(eq["rhs"]) or any(len(r) != chart.n for r in eq["matrix"]):
            raise InputError(f"element {a!r}: equation matrix must be {len(eq['rhs'])} x {chart.n}")
        unknown = set(e["zero_hypersurfaces"]) - set(chart.labels)
        if unknown:
            raise InputError(f"element {a!r}: unknown hypersurfaces {sorted(unknown)}")
        els.append(AffinePSub.from_json(chart, e))
    return PCleanFamily(tuple(els), tuple(names))


def family_to_json(fam: PCleanFamily) -> dict:
    data = fam.to_json()
    data["chart"] = fam.chart.to_json()
    return data


def corner_family(b: int = 2) -> PCleanFamily:
    """The corner {x_1 = ... = x_b = 0} of [0, inf)^b."""
    chart = OrthantChart(b, 0)
    return PCleanFamily((AffinePSub(chart, tuple(range(b)), (), ()),), ("corner",))


def builtin_family(spec: str) -> PCleanFamily:
    """coplanar-lines | corner[:b] | diagonal:k:kappa[:scl][:disc]"""
    parts = spec.split(":")
    try:
        if parts[0] == "coplanar-lines" and len(parts) == 1:
            return three_coplanar_lines()
        if parts[0] == "corner" and len(parts) <= 2:
            return corner_family(int(parts[1]) if len(parts) == 2 else 2)
        if parts[0] == "diagonal" and len(parts) >= 3:
            flags = set(parts[3:])
            if flags - {"scl", "disc"}:
                raise InputError(f"unknown diagonal flags {sorted(flags - {'scl', 'disc'})}")
            return diagonal_family(int(parts[1]), int(parts[2]), "scl" in flags, "disc" in flags)
    except ValueError as exc:
        raise InputError(f"bad builtin family {spec!r}: {exc}") from exc
    raise InputError(f"unknown builtin family {spec!r}")


def _family(args) -> PCleanFamily:
    if bool(args.family) == bool(args.builtin):
        raise InputError("give exactly one of --family FILE or --builtin NAME")
    fam = builtin_family(args.builtin) if args.builtin else family_from_json(_read_json(args.family, "family"))
    if getattr(args, "close", False):
        fam = intersection_closure(fam)
    return fam


def _order(fam: PCleanFamily, text: str | None) -> tuple[str, ...]:
    if text is None:
        return tuple(fam.names)
    order = tuple(a.strip() for a in text.split(",") if a.strip())
    if sorted(order) != sorted(fam.names):
        raise InputError(f"order must be a permutation of {list(fam.names)}")
    return order


def model_from_spec(spec: dict):
    from . import genprod as gp

    jsonschema.validate(spec, load_schema("model_spec"))
    kind, K = spec["kind"], spec["K"]
    if kind == "fibre-product":
        return gp.fibre_product_model(spec["fibre_dim"], spec["base_dim"], K)
    if kind == "scl":
        return gp.scl_construct(gp.fibre_product_model(spec["fibre_dim"], spec["base_dim"], K), K)
    if kind == "group":
        return gp.group_model(spec["group"], K, spec.get("n", 1))
    if kind == "bphi":
        return gp.bphi_construct(K)
    ifib = gp.IteratedFibrationModel(spec["z_dim"], spec["q_dim"], spec["y_dim"])
    return gp.ad_construct(ifib, K) if kind == "ad" else gp.twoscl_construct(ifib, K)


def _model_spec(args) -> dict:
    if args.spec:
        return _read_json(args.spec, "model_spec")
    if not args.kind:
        raise InputError("give --spec FILE or --kind")
    spec = {"kind": args.kind, "K": args.K}
    for key in ("fibre_dim", "base_dim", "group", "n", "z_dim", "q_dim", "y_dim"):
        v = getattr(args, key)
        if v is not None:
            spec[key] = v
    try:
        jsonschema.validate(spec, load_schema("model_spec"))
    except jsonschema.ValidationError as exc:
        raise InputError(f"model flags: {exc.message}") from exc
    return spec


# --- worker pool -------------------------------------------------------------


def threads() -> int:
    raw = os.environ.get("CORNER_CALCULUS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise InputError(f"CORNER_CALCULUS_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise InputError("CORNER_CALCULUS_THREADS must be >= 1")
    return n


def _pool_map(fn, items: list) -> list:
    n = threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _resolve_task(task):
    fam, order = task
    try:
        return order, resolve(Atlas.from_chart(fam.chart), fam, order).result, None
    except StepError as exc:
        return order, None, exc


def _equiv_task(task):
    A, B = task
    return check_equivalence(A, B).status


# --- verbs -------------------------------------------------------------------


def cmd_build(args) -> int:
    spec = _model_spec(args)
    model = model_from_spec(spec)
    manifest = {"schema_version": SCHEMA_VERSION, "spec": spec, "model": model.to_json()}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        files = {}
        for k in range(1, model.K + 1):
            name = f"atlas_k{k}.json"
            (out / name).write_text(canonical_json(model.space(k).to_json()))
            files[str(k)] = name
        manifest["atlas_files"] = files
        (out / "manifest.json").write_text(canonical_json(manifest))
    else:
        sys.stdout.write(canonical_json(manifest))
    return EXIT_OK


def _step_error_json(exc: StepError) -> dict:
    return {"step": exc.index, "reason": str(exc), "cause": type(exc.cause).__name__ if exc.cause else None,
            "not_p_positioned": exc.not_p_positioned}


def cmd_resolve(args) -> int:
    fam = _family(args)
    order = _order(fam, args.order)
    try:
        seq = resolve(Atlas.from_chart(fam.chart), fam, order)
    except StepError as exc:
        _emit(canonical_json({"order": list(order), "step_error": _step_error_json(exc)}), args.out)
        return EXIT_FALSIFIED
    report = {"order": list(order), "steps": seq.step_results, "front_faces": seq.result.front_faces(),
              "charts": len(seq.result.charts)}
    if args.atlas:
        report["atlas"] = seq.result.to_json()
    _emit(canonical_json(report), args.out)
    return EXIT_OK


def cmd_orders(args) -> int:
    fam = _family(args)
    if not is_closed(fam):
        raise InputError("family is not intersection-closed (use --close)")
    if not is_p_clean(fam):
        raise InputError("family is not p-clean")
    cap = args.cap
    orders = enumerate_orders(fam, cap)
    report = {"family": list(fam.names), "mode": args.mode, "count": len(orders),
              "truncated": cap is not None and len(orders) >= cap and factorial(len(fam)) > cap}
    status = EXIT_OK
    if args.mode == "enumerate":
        report["orders"] = [{"order": list(o), "class": c} for o, c in orders]
    else:
        wanted = orders if args.mode == "classify" else [(o, c) for o, c in orders if c != "Neither"]
        results = _pool_map(_resolve_task, [(fam, o) for o, _ in wanted])
        rows = []
        for (o, c), (_, atlas, err) in zip(wanted, results):
            row = {"order": list(o), "class": c}
            if err is not None:
                row["class"] = "StepError"
                row["order_class"] = c
                row["step_error"] = _step_error_json(err)
            rows.append(row)
        if args.mode == "equiv-all":
            ok = [(o, a) for (o, _), (_, a, e) in zip(wanted, results) if e is None]
            failed = len(ok) != len(wanted)
            # equivalence is transitive: comparing with one reference covers all pairs
            ref_order = size_order(fam)
            ref = next((a for o, a in ok if tuple(o) == ref_order), ok[0][1] if ok else None)
            statuses = _pool_map(_equiv_task, [(ref, a) for _, a in ok]) if ref is not None else []
            by_order = {tuple(o): s for (o, _), s in zip(ok, statuses)}
            for row in rows:
                row["equivalent_to_reference"] = by_order.get(tuple(row["order"]))
            all_equiv = not failed and all(s == TRUE for s in statuses)
            report["reference"] = list(ref_order)
            report["all_equivalent"] = all_equiv
            if not all_equiv:
                status = EXIT_FALSIFIED
        report["orders"] = rows
        report["summary"] = {k: sum(1 for r in rows if r["class"] == k)
                             for k in (SIZE_ORDER, INTERSECTION_ORDER, "Neither", "StepError")}
    _emit(canonical_json(report), args.out)
    return status


def cmd_equiv(args) -> int:
    fam = _family(args)
    a, b = _order(fam, args.first), _order(fam, args.second)
    res = []
    for o in (a, b):
        _, atlas, err = _resolve_task((fam, o))
        if err is not None:
            _emit(canonical_json({"order": list(o), "step_error": _step_error_json(err)}), args.out)
            return EXIT_FALSIFIED
        res.append(atlas)
    eq = check_equivalence(res[0], res[1])
    _emit(canonical_json({"first": list(a), "second": list(b), "status": eq.status, "detail": eq.detail}), args.out)
    return EXIT_OK if eq.status == TRUE else EXIT_FALSIFIED


def cmd_axioms(args) -> int:
    from .genprod import check_axioms

    spec = _model_spec(args)
    report = check_axioms(model_from_spec(spec))
    data = {"spec": spec, "report": report.to_json(), "all_simple": report.all_simple(), "failures": report.failures()}
    _emit(canonical_json(data), args.out)
    return EXIT_OK if report.passed else EXIT_FALSIFIED


def cmd_lattice(args) -> int:
    if args.kind or args.spec:
        model = model_from_spec(_model_spec(args))
        level = args.level or model.K
        if not 1 <= level <= model.K:
            raise InputError(f"--level must lie in 1..{model.K}")
        atlas = model.space(level)
    else:
        fam = _family(args)
        atlas = resolve(Atlas.from_chart(fam.chart), fam, _order(fam, args.order)).result
    poset = face_lattice(atlas)
    text = poset.to_dot() if args.format == "dot" else canonical_json(poset.to_json())
    _emit(text, args.out)
    return EXIT_OK


def _parse_components(text: str, symbols: tuple, count: int) -> list:
    import sympy as sp

    names = {str(s): s for s in symbols}
    parts = [p.strip() for p in text.split(";")]
    if len(parts) != count:
        raise InputError(f"expected {count} ';'-separated components, got {len(parts)}")
    out = []
    for p in parts:
        try:
            e = sp.sympify(p, locals=names)
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise InputError(f"cannot parse {p!r}: {exc}") from exc
        if not isinstance(e, sp.Expr):
            raise InputError(f"{p!r} is not an expression")
        out.append(e)
    return out


def cmd_bracket(args) -> int:
    from . import liealg as la

    if args.model == "fibre-product":
        m = la.fibre_product_linear(args.fibre_dim, args.base_dim)
    elif args.model == "translation":
        m = la.translation_linear(args.fibre_dim)
    else:
        m = la.scl_rescaled_linear(args.fibre_dim, args.base_dim)
    x = m.coords[0]
    r = len(m.null_basis)
    V1 = la.AlgebroidSection(m, tuple(_parse_components(args.v1, x, r)))
    V2 = la.AlgebroidSection(m, tuple(_parse_components(args.v2, x, r)))
    B = la.bracket(V1, V2, m)
    data = {
        "model": m.name,
        "coords": [str(s) for s in x],
        "bracket": [str(c) for c in B.components],
        "anchor": {"V1": str(la.anchor(V1, m)), "V2": str(la.anchor(V2, m)), "bracket": str(la.anchor(B, m))},
        "section": B.to_json(),
    }
    _emit(canonical_json(data), args.out)
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def _add_family(p):
    p.add_argument("--family", help="family JSON file")
    p.add_argument("--builtin", help="coplanar-lines | corner[:b] | diagonal:k:kappa[:scl][:disc]")
    p.add_argument("--close", action="store_true", help="replace the family by its intersection closure")


def _add_model(p):
    p.add_argument("--spec", help="model spec JSON file")
    p.add_argument("--kind", choices=["fibre-product", "group", "scl", "ad", "2scl", "bphi"])
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--fibre-dim", dest="fibre_dim", type=int)
    p.add_argument("--base-dim", dest="base_dim", type=int)
    p.add_argument("--group", choices=["translation", "positive-reals"])
    p.add_argument("--n", type=int)
    p.add_argument("--z-dim", dest="z_dim", type=int)
    p.add_argument("--q-dim", dest="q_dim", type=int)
    p.add_argument("--y-dim", dest="y_dim", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corner-calculus", description="Resolutions, generalized products and their algebroids.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("build", help="build a generalized product and write its manifest")
    _add_model(p)
    p.add_argument("--out", help="output directory for manifest.json and atlas_k*.json")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("resolve", help="resolve a family in a given order")
    _add_family(p)
    p.add_argument("--order", help="comma-separated element names")
    p.add_argument("--atlas", action="store_true", help="include the resulting atlas")
    p.add_argument("--out")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("orders", help="enumerate, classify or compare blow-up orders")
    _add_family(p)
    p.add_argument("--mode", choices=["enumerate", "classify", "equiv-all"], default="enumerate")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximum number of orders")
    p.add_argument("--out")
    p.set_defaults(func=cmd_orders)

    p = sub.add_parser("equiv", help="check two resolution orders for equivalence")
    _add_family(p)
    p.add_argument("--first", required=True)
    p.add_argument("--second", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("axioms", help="check the generalized product axioms of a model")
    _add_model(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("lattice", help="export the boundary face lattice")
    _add_family(p)
    p.add_argument("--order")
    _add_model(p)
    p.add_argument("--level", type=int)
    p.add_argument("--format", choices=["json", "dot"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("bracket", help="algebroid bracket and anchor of two sections")
    p.add_argument("--model", choices=["fibre-product", "translation", "scl"], default="fibre-product")
    p.add_argument("--fibre-dim", dest="fibre_dim", type=int, default=1)
    p.add_argument("--base-dim", dest="base_dim", type=int, default=0)
    p.add_argument("--v1", required=True, help="';'-separated components in the M[1] coordinates")
    p.add_argument("--v2", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bracket)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "cap", 1) is not None and getattr(args, "cap", 1) < 1:
        print("error: --cap must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        threads()
        return args.func(args)
    except (InputError, jsonschema.ValidationError, DomainError, PreconditionError, ModelError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
