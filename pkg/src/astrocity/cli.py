"""``astrocity`` command line.

Exit codes: 0 success, 1 the operation ran but found problems (validation
errors, nothing to upgrade), 2 usage or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import crs as crs_mod
from .issues import ERROR, WARNING
from .model import AlreadyCurrent, ParseError, read_document, upgrade_document, write_document
from .recipe import RecipeError, load_recipe, run_recipe
from .registry import RegistryInvalid, builtin_registry, emit_extension_schema, load_extension_schema
from .validator import validate

EXIT_OK, EXIT_PROBLEMS, EXIT_USAGE = 0, 1, 2


class _UsageError(Exception):
    pass


def _fail(msg: str) -> int:
    print(f"astrocity: {msg}", file=sys.stderr)
    return EXIT_USAGE


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise _UsageError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _load_doc(path: str, strict: bool = False):
    try:
        return read_document(_read_text(path), strict=strict)
    except (ParseError, ValueError, TypeError) as exc:
        raise _UsageError(f"{path}: {exc}") from exc


# -- subcommands ----------------------------------------------------------------

def cmd_extension_emit(args) -> int:
    text = emit_extension_schema(builtin_registry())
    if args.output:
        _write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_project(args) -> int:
    try:
        spec = crs_mod.lookup_crs(args.crs)
    except crs_mod.UnknownCRS as exc:
        raise _UsageError(str(exc.args[0])) from exc
    try:
        if args.inverse:
            if args.x is None or args.y is None:
                raise _UsageError("--inverse needs --x and --y")
            lat, lon = crs_mod.inverse(spec, args.x, args.y)
            print(f"{lat:.8f} {lon:.8f}")
        else:
            if args.lat is None or args.lon is None:
                raise _UsageError("forward projection needs --lat and --lon")
            x, y = crs_mod.forward(spec, args.lat, args.lon)
            print(f"{x:.4f} {y:.4f}")
    except crs_mod.OutOfDomain as exc:
        raise _UsageError(str(exc)) from exc
    return EXIT_OK


def _seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ASTROCITY_SEED")
    if env is None or env == "":
        return None
    try:
        return int(env)
    except ValueError as exc:
        raise _UsageError(f"ASTROCITY_SEED must be an integer, got {env!r}") from exc


def cmd_build(args) -> int:
    try:
        recipe = load_recipe(args.recipe)
    except OSError as exc:
        raise _UsageError(f"cannot read {args.recipe}: {exc.strerror or exc}") from exc
    except RecipeError as exc:
        raise _UsageError(str(exc)) from exc
    try:
        doc = run_recipe(recipe, _seed(args))
    except (crs_mod.UnknownCRS, OSError, ValueError) as exc:
        raise _UsageError(str(exc)) from exc
    out = args.output or str(recipe.output)
    _write_text(out, write_document(doc))
    errs = [i for i in validate(doc) if i.severity == ERROR]
    for issue in errs:
        print(issue, file=sys.stderr)
    counts = ", ".join(f"{n} {t}" for t, n in doc.count_by_type().items())
    print(f"wrote {out}: {counts}")
    return EXIT_PROBLEMS if errs else EXIT_OK


def cmd_validate(args) -> int:
    registry = builtin_registry()
    if args.extension:
        try:
            registry = load_extension_schema(_read_text(args.extension))
        except (RegistryInvalid, ValueError, KeyError) as exc:
            raise _UsageError(f"{args.extension}: not a usable extension file ({exc})") from exc
    doc = _load_doc(args.file)
    issues = validate(doc, registry, strict=args.strict)
    n_err = sum(i.severity == ERROR for i in issues)
    n_warn = sum(i.severity == WARNING for i in issues)
    if args.report == "json":
        report = {
            "file": args.file,
            "valid": n_err == 0,
            "errors": n_err,
            "warnings": n_warn,
            "issues": [i.to_dict() for i in issues],
        }
        print(json.dumps(report, indent=2))
    else:
        for issue in issues:
            print(issue)
        print(f"{args.file}: {n_err} error(s), {n_warn} warning(s)")
    return EXIT_PROBLEMS if n_err else EXIT_OK


def cmd_upgrade(args) -> int:
    doc = _load_doc(args.input, strict=True)
    try:
        upgraded = upgrade_document(doc)
    except AlreadyCurrent as exc:
        print(f"astrocity: {args.input}: {exc}", file=sys.stderr)
        return EXIT_PROBLEMS
    except ValueError as exc:
        raise _UsageError(f"{args.input}: {exc}") from exc
    _write_text(args.output, write_document(upgraded))
    return EXIT_OK


def cmd_info(args) -> int:
    doc = _load_doc(args.file)
    print(f"version: {doc.version}")
    print(f"reference system: {doc.reference_system_url or '(none)'}")
    if doc.extensions:
        for name, ext in doc.extensions.items():
            print(f"extension: {name} {ext.get('version', '')} {ext.get('url', '')}".rstrip())
    else:
        print("extension: (none)")
    print(f"vertices: {len(doc.vertices)}")
    print(f"objects: {len(doc.objects)}")
    for t, n in doc.count_by_type().items():
        print(f"  {t}: {n}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="astrocity", description="Planetary 3D city models in CityJSON.")
    sub = p.add_subparsers(dest="command", required=True)

    ext = sub.add_parser("extension", help="extension schema tools")
    ext_sub = ext.add_subparsers(dest="ext_command", required=True)
    emit = ext_sub.add_parser("emit", help="write the 3DSpace extension file")
    emit.add_argument("-o", "--output", help="output path (default: stdout)")
    emit.set_defaults(func=cmd_extension_emit)

    proj = sub.add_parser("project", help="project lat/lon to map coordinates, or back with --inverse")
    proj.add_argument("--crs", required=True, help="authority:code, e.g. IAU_2015:30185")
    proj.add_argument("--lat", type=float)
    proj.add_argument("--lon", type=float)
    proj.add_argument("--inverse", action="store_true")
    proj.add_argument("--x", type=float)
    proj.add_argument("--y", type=float)
    proj.set_defaults(func=cmd_project)

    build = sub.add_parser("build", help="build a document from a recipe file")
    build.add_argument("recipe")
    build.add_argument("-o", "--output", help="override the recipe's output path")
    build.add_argument("--seed", type=int, help="seed for generated ids (fallback: ASTROCITY_SEED)")
    build.set_defaults(func=cmd_build)

    val = sub.add_parser("validate", help="check a document against core rules and the extension")
    val.add_argument("file")
    val.add_argument("--extension", help="extension file to validate against (default: built-in)")
    val.add_argument("--strict", action="store_true", help="treat unknown attributes as errors")
    val.add_argument("--report", choices=["text", "json"], default="text")
    val.set_defaults(func=cmd_validate)

    up = sub.add_parser("upgrade", help="upgrade a CityJSON 1.0 document to 2.0")
    up.add_argument("input")
    up.add_argument("-o", "--output", required=True)
    up.set_defaults(func=cmd_upgrade)

    info = sub.add_parser("info", help="summarise a document")
    info.add_argument("file")
    info.set_defaults(func=cmd_info)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        return _fail(str(exc))


def main() -> None:
    sys.exit(run())
