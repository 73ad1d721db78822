"""Command-line entry point.

Exit codes: 0 success, 1 validation or guard failure, 2 parse error,
3 path search failure, 4 enumeration budget exhausted.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Any, Sequence

import numpy as np

from . import homotopy, kgraph, ktheory, skeleton, unitary_cocycle

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_SEARCH, EXIT_TRUNCATED = 0, 1, 2, 3, 4


class ParseFailure(Exception):
    pass


class GuardFailure(Exception):
    pass


def write_json(obj: Any, output: str | None) -> None:
    text = json.dumps(obj, ensure_ascii=False)
    if output is None or output == "-":
        sys.stdout.write(text + "\n")
        return
    directory = os.path.dirname(os.path.abspath(output))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        os.replace(tmp, output)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseFailure(f"{path}: {exc}") from exc


def _parsed(loader, *args):
    try:
        return loader(*args)
    except (skeleton.SkeletonFormatError, kgraph.FactorisationFormatError,
            unitary_cocycle.CocycleFormatError, KeyError, TypeError, ValueError) as exc:
        raise ParseFailure(str(exc)) from exc


def _skeleton(path: str) -> skeleton.Skeleton:
    return _parsed(skeleton.Skeleton.from_dict, _read(path))


def _cocycle(s: skeleton.Skeleton, path: str) -> unitary_cocycle.UnitaryCocycle:
    return _parsed(unitary_cocycle.UnitaryCocycle.from_dict, s, _read(path))


def cmd_validate(args: argparse.Namespace) -> int:
    s = _skeleton(args.skeleton)
    layers: dict[str, Any] = {"skeleton": skeleton.validate_skeleton(s).to_dict()}
    ok = layers["skeleton"]["ok"]
    if args.factorisation:
        if not ok:
            raise GuardFailure("skeleton is invalid; factorisation not checked")
        F = _parsed(kgraph.FactorisationRule.from_dict, s, _read(args.factorisation))
        layers["factorisation"] = kgraph.validate_factorisation(s, F).to_dict()
        ok = ok and layers["factorisation"]["ok"]
        if args.cocycle:
            phi = _parsed(kgraph.CubicalCocycle.from_list, s, _read(args.cocycle))
            layers["cocycle"] = kgraph.validate_cubical_cocycle(s, F, phi).to_dict()
            ok = ok and layers["cocycle"]["ok"]
    write_json({"ok": ok, "layers": layers}, args.output)
    return EXIT_OK if ok else EXIT_INVALID


def cmd_ktheory(args: argparse.Namespace) -> int:
    s = _skeleton(args.skeleton)
    if s.k != 2:
        raise GuardFailure("Evans formula requires k=2")
    report = skeleton.validate_skeleton(s)
    if not report.ok:
        raise GuardFailure(f"invalid skeleton: {report.violations}")
    k0, k1 = ktheory.ktheory_2graph(skeleton.adjacency_matrix(s, 1), skeleton.adjacency_matrix(s, 2))
    write_json({"K0": k0.to_dict(), "K1": k1.to_dict()}, args.output)
    return EXIT_OK


def cmd_cocycle_derive(args: argparse.Namespace) -> int:
    s = _skeleton(args.skeleton)
    F = _parsed(kgraph.FactorisationRule.from_dict, s, _read(args.factorisation))
    phi = _parsed(kgraph.CubicalCocycle.from_list, s, _read(args.phases)) if args.phases else None
    try:
        U = unitary_cocycle.from_kgraph(s, F, phi)
    except ValueError as exc:
        raise GuardFailure(str(exc)) from exc
    write_json(U.to_dict(), args.output)
    return EXIT_OK


def cmd_cocycle_check(args: argparse.Namespace) -> int:
    s = _skeleton(args.skeleton)
    U = _cocycle(s, args.cocycle)
    defect = U.unitarity_defect()
    report = unitary_cocycle.residual_report(U)
    report["unitarity_defect"] = defect
    report["tol"] = args.tol
    ok = defect <= unitary_cocycle.UNITARY_TOL and report["residual"] <= args.tol
    report["ok"] = ok
    write_json(report, args.output)
    return EXIT_OK if ok else EXIT_INVALID


def cmd_cocycle_random(args: argparse.Namespace) -> int:
    s = _skeleton(args.skeleton)
    U = unitary_cocycle.random_cocycle(s, np.random.default_rng(args.seed))
    write_json(U.to_dict(), args.output)
    return EXIT_OK


def _endpoints(args: argparse.Namespace):
    s = _skeleton(args.skeleton)
    if args.end_skeleton:
        s1 = _skeleton(args.end_skeleton)
        if s1 != s:
            raise GuardFailure("endpoints live on different skeletons")
    return s, _cocycle(s, args.start), _cocycle(s, args.end)


def cmd_path_geodesic(args: argparse.Namespace) -> int:
    _, U0, U1 = _endpoints(args)
    path = homotopy.geodesic_path(U0, U1, args.samples)
    write_json(path.to_dict(), args.output)
    return EXIT_OK


def cmd_path_search(args: argparse.Namespace) -> int:
    _, U0, U1 = _endpoints(args)
    cfg = homotopy.SearchConfig(
        samples=args.samples, tol=args.tol, max_iters=args.max_iters, seed=args.seed,
        continuity=args.continuity, max_samples=args.max_samples,
    )
    try:
        path = homotopy.path_search(U0, U1, cfg)
    except homotopy.PathSearchFailed as exc:
        write_json(exc.report.to_dict(), args.output)
        return EXIT_SEARCH
    except ValueError as exc:
        raise GuardFailure(str(exc)) from exc
    write_json(path.to_dict(), args.output)
    return EXIT_OK


def cmd_enumerate(args: argparse.Namespace) -> int:
    s = _skeleton(args.skeleton)
    report = skeleton.validate_skeleton(s)
    if not report.ok:
        raise GuardFailure(f"invalid skeleton: {report.violations}")
    count = 0
    lines = []
    try:
        for F in kgraph.enumerate_factorisations(s, limit=args.limit, budget=args.budget):
            count += 1
            if not args.count_only:
                lines.append(json.dumps(F.to_dict()))
    except kgraph.SearchTruncated as exc:
        status = {"status": "truncated", "count": count, "nodes": exc.nodes}
        _emit_lines(lines + [json.dumps(status)], args.output)
        print(f"search truncated after {exc.nodes} nodes", file=sys.stderr)
        return EXIT_TRUNCATED
    if args.count_only:
        lines = [json.dumps({"count": count})]
    _emit_lines(lines, args.output)
    return EXIT_OK


def _emit_lines(lines: list[str], output: str | None) -> None:
    if output is None or output == "-":
        for line in lines:
            sys.stdout.write(line + "\n")
        return
    directory = os.path.dirname(os.path.abspath(output))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.writelines(line + "\n" for line in lines)
    os.replace(tmp, output)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", default=None, help="write result here instead of stdout")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for stochastic steps")

    parser = argparse.ArgumentParser(prog="hrgraph", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check skeleton, factorisation and cubical cocycle files")
    p.add_argument("skeleton")
    p.add_argument("factorisation", nargs="?")
    p.add_argument("cocycle", nargs="?")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("ktheory", parents=[common], help="K-groups of a 2-graph C*-algebra")
    p.add_argument("skeleton")
    p.set_defaults(func=cmd_ktheory)

    p = sub.add_parser("cocycle", help="unitary cocycles")
    csub = p.add_subparsers(dest="action", required=True)
    q = csub.add_parser("derive", parents=[common], help="unitary cocycle of a k-graph with cubical cocycle")
    q.add_argument("skeleton")
    q.add_argument("factorisation")
    q.add_argument("phases", nargs="?")
    q.set_defaults(func=cmd_cocycle_derive)
    q = csub.add_parser("check", parents=[common], help="residual of the cocycle identity")
    q.add_argument("skeleton")
    q.add_argument("cocycle")
    q.add_argument("--tol", type=float, default=1e-9)
    q.set_defaults(func=cmd_cocycle_check)
    q = csub.add_parser("random", parents=[common], help="independent random unitary blocks")
    q.add_argument("skeleton")
    q.set_defaults(func=cmd_cocycle_random)

    p = sub.add_parser("path", help="paths of unitary cocycles")
    psub = p.add_subparsers(dest="action", required=True)
    for name, func in (("geodesic", cmd_path_geodesic), ("search", cmd_path_search)):
        q = psub.add_parser(name, parents=[common])
        q.add_argument("skeleton")
        q.add_argument("start")
        q.add_argument("end")
        q.add_argument("--end-skeleton", default=None, help="skeleton of the end point, if stored separately")
        q.add_argument("--samples", type=int, default=64)
        q.set_defaults(func=func)
        if name == "search":
            q.add_argument("--tol", type=float, default=1e-8)
            q.add_argument("--max-iters", type=int, default=5000)
            q.add_argument("--continuity", type=float, default=0.2)
            q.add_argument("--max-samples", type=int, default=1024)

    p = sub.add_parser("enumerate", parents=[common], help="list valid factorisation rules")
    p.add_argument("skeleton")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--budget", type=int, default=kgraph.DEFAULT_BUDGET, help="maximum search nodes")
    p.set_defaults(func=cmd_enumerate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseFailure as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GuardFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
