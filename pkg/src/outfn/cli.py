"""Command line front end: verification sweeps with JSON reports.

Exit codes: 0 when every check passes, 1 when some check fails (the report
carries a witness), 2 for invalid input or usage errors.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import torelli
from .freegroup import InvalidInput, RankMismatch, Unsupported
from .graphs import LabelledGraph, canonical_labelling, two_vertex_example, from_canonical, rose_graph, to_dot
from .lattice import ImpossibleState, RoseCoset, enumerate_roses, identity_rose, standard_representative
from .morse import (
    EmptyLinkError,
    ResourceLimit,
    cdlk_homology,
    completely_descending_complex,
    descending_edges,
    descending_link,
    descending_witness,
    rank2_tree,
    rank2_tree_dot,
)
from .toymodel import TorusClass, sphere_intersection, toy_homology_report, torus_certificate, window_square


@dataclass
class Check:
    name: str
    passed: bool
    witness: Any = None

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "witness": self.witness}


@dataclass
class RunReport:
    command: str
    parameters: dict
    checks: list[Check] = field(default_factory=list)
    data: Any = None
    wall_time: float = 0.0
    error: str | None = None
    print_json: bool = field(default=False, repr=False)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return 2
        return 1 if self.failures else 0

    def add(self, name: str, passed: bool, witness: Any = None) -> None:
        self.checks.append(Check(name, bool(passed), None if passed else witness))

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "checks": [c.to_json() for c in self.checks],
            "failures": len(self.failures),
            "data": self.data,
            "error": self.error,
            "exit_code": self.exit_code,
            "wall_time": round(self.wall_time, 3),
        }


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit; report instead
        raise UsageError(f"{self.prog}: {message}")


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read JSON from {path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _rose_from_json(data: Any) -> RoseCoset:
    if isinstance(data, dict) and "matrix" in data:
        data = data["matrix"]
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise InvalidInput("a rose is a JSON array of row arrays")
    return standard_representative(data)


def _graph_from_json(data: Any) -> LabelledGraph:
    """Graph JSON, or a matrix (rose), or a wrapper {"graph": ...}."""
    if isinstance(data, dict) and "graph" in data:
        data = data["graph"]
    if isinstance(data, list):
        return rose_graph(_rose_from_json(data))
    if not isinstance(data, dict):
        raise InvalidInput("graph JSON must be an object")
    try:
        return LabelledGraph.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed graph JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands

def cmd_torelli(args, rep: RunReport) -> None:
    if args.n < 3:
        raise InvalidInput("--n must be at least 3")
    if args.action == "verify-appendix":
        for l in range(3, args.n + 1):
            rep.add(f"delta12 conjugation identity l={l} n={args.n}", torelli.verify_appendix_identity(l, args.n),
                    {"l": l, "n": args.n})
    elif args.action == "verify-conjugation":
        n = args.n
        bad = []
        count = 0
        for i, k, l in itertools.permutations(range(1, n + 1), 3):
            letters = [s * a for a in range(1, n + 1) if a != i for s in (1, -1)]
            for length in range(args.hmax + 1):
                for h in itertools.product(letters, repeat=length):
                    if any(h[j] == -h[j + 1] for j in range(length - 1)):
                        continue
                    count += 1
                    if not torelli.verify_conjugation_formula(i, k, l, h, n):
                        bad.append({"i": i, "k": k, "l": l, "h": list(h)})
        rep.add(f"conjugation formula n={n} |h|<={args.hmax}", not bad, bad[:5])
        rep.data = {"cases": count}
    else:
        results = torelli.verify_normality(args.n)
        methods: dict[str, int] = {}
        for r in results:
            methods[r.method] = methods.get(r.method, 0) + 1
        outside = [r for r in results if not r.passed]
        rep.add(f"conjugates lie in Torelli n={args.n}", not outside,
                [f"{r.generator} by {r.conjugator}" for r in outside[:5]])
        kernel_only = [f"{r.generator} by {r.conjugator}" for r in results if not r.rewritten]
        rep.data = {"conjugates": len(results), "methods": dict(sorted(methods.items())),
                    "kernel_condition_only": kernel_only}


def cmd_roses(args, rep: RunReport) -> None:
    if args.rank < 1 or args.bound < 0:
        raise InvalidInput("--rank must be positive and --bound non-negative")
    roses = enumerate_roses(args.rank, args.bound)
    rows = [r.to_json() for r in roses]
    if args.out:
        _write_text(args.out, json.dumps(rows) + "\n")
    rep.data = {"count": len(roses), "roses": rows if not args.out else args.out}
    strictly = all(a.sort_key() < b.sort_key() for a, b in zip(roses, roses[1:]))
    rep.add("cosets sorted and distinct", strictly)


def _sweep(args) -> list[RoseCoset]:
    if args.matrix:
        return [_rose_from_json(_read_json(args.matrix))]
    if args.rank is None or args.bound is None:
        raise InvalidInput("give --matrix or both --rank and --bound")
    return enumerate_roses(args.rank, args.bound)


def cmd_dlk(args, rep: RunReport) -> None:
    roses = _sweep(args)
    table = []
    bad = []
    for rho in roses:
        row: dict = {"rose": rho.to_json()}
        trivial = rho == identity_rose(rho.rank)
        if args.check == "nonempty":
            w = descending_witness(rho)
            row["witness"] = None if w is None else list(w.coefficients)
            ok = (w is None) == trivial
        elif args.check == "connected":
            if trivial:
                row["connected"] = None
                ok = True
            else:
                model = descending_link(rho)
                row["descending_edges"] = len(model.edges)
                row["connected"] = model.connected
                ok = model.connected
        else:
            X = completely_descending_complex(rho)
            H = cdlk_homology(X) if X.cells else []
            row["descending_edges"] = [list(e.coefficients) for e in descending_edges(rho)]
            row["homology"] = [h.to_json() for h in H]
            top = 2 * rho.rank - 5
            ok = X.dim <= 2 * rho.rank - 4 and all(h.rank == 0 and not h.torsion for h in H if h.dim > top)
        table.append(row)
        if not ok:
            bad.append(row)
    rep.add(f"descending links {args.check}", not bad, bad[:3])
    rep.data = {"roses": len(roses), "table": table}


def cmd_cdlk(args, rep: RunReport) -> None:
    rho = _rose_from_json(_read_json(args.matrix))
    X = completely_descending_complex(rho)
    H = cdlk_homology(X) if X.cells else []
    counts: dict[int, int] = {}
    for c in X.cells:
        counts[X.dimension[c]] = counts.get(X.dimension[c], 0) + 1
    rep.data = {
        "rose": rho.to_json(),
        "cells": {str(d): counts[d] for d in sorted(counts)},
        "homology": [h.to_json() for h in H],
    }
    rep.add("faces stay in the complex", X.closure_ok())
    rep.add("cell dimension at most 2n-4", X.dim <= 2 * rho.rank - 4, X.dim)
    top = 2 * rho.rank - 5
    rep.add("no homology above 2n-5", all(h.rank == 0 and not h.torsion for h in H if h.dim > top),
            [h.to_json() for h in H if h.dim > top])


def cmd_rank2(args, rep: RunReport) -> None:
    tree = rank2_tree(args.bound)
    if args.dot:
        _write_text(args.dot, rank2_tree_dot(tree))
    rep.data = {"roses": len(tree.roses), "thetas": len(tree.thetas), "core": len(tree.core)}
    rep.add("star graph is a forest", tree.acyclic)
    rep.add("norm-closed core connected", tree.core_connected)
    rep.add("adjacent stars share a Farey fraction", tree.farey_ok)


def cmd_toy(args, rep: RunReport) -> None:
    if args.rank not in (3, 4):
        raise InvalidInput("toy certify supports rank 3 and 4")
    if args.window < 0:
        raise InvalidInput("--window must be non-negative")
    W = window_square(args.window)
    rows = []
    for p, q in W:
        t = TorusClass(p, q, args.rank)
        s = sphere_intersection(t)
        row = {"pq": [p, q], "max_rose": s.rose.to_json(), "sphere_ok": s.passed, "cells": len(s.cells)}
        if args.rank == 3:
            cert = torus_certificate(TorusClass(p, q, 3))
            row["torus"] = cert
        rows.append(row)
        rep.add(f"sphere at ({p},{q})", s.passed, s.to_json()["checks"])
        if args.rank == 3:
            cert = row["torus"]
            ok = (cert["two_cells"] == 16 and cert["euler_characteristic"] == 0 and cert["closed_surface"]
                  and cert["boundary_squared_zero"] and cert["graphs_valid"] and cert["in_block_stars"]
                  and cert["corners_match_action"])
            rep.add(f"torus at ({p},{q})", ok, cert)
    summary = toy_homology_report(args.rank, W)
    rep.add("maximal roses distinct", summary.injective)
    rep.add("top classes counted", summary.count == len(W), {"count": summary.count, "census": summary.census})
    rep.data = {"rank": args.rank, "window": args.window, "count": summary.count, "tori": rows}
    if args.dot_dir:
        Path(args.dot_dir).mkdir(parents=True, exist_ok=True)
        s = sphere_intersection(TorusClass(args.dot_pq[0], args.dot_pq[1], args.rank))
        for k, code in enumerate(s.cells):
            _write_text(str(Path(args.dot_dir) / f"cell{k:03d}.dot"), to_dot(from_canonical(code), f"cell{k}"))


def export_dot(data: Any, name: str = "G") -> str:
    """Deterministic DOT for a graph given as JSON (or a rose matrix)."""
    G = from_canonical(canonical_labelling(_graph_from_json(data)).code)
    # orient each edge so its label reads with a positive leading entry
    edges = sorted((e if next(x for x in e.label if x) > 0 else e.reversed() for e in G.edges),
                   key=lambda e: (e.src, e.dst, e.label))
    return to_dot(LabelledGraph(G.rank, G.vertices, tuple(edges)), name)


def cmd_export(args, rep: RunReport) -> None:
    data = two_vertex_example().to_json() if args.example else _read_json(args.graph)
    text = export_dot(data)
    if args.out:
        _write_text(args.out, text)
        rep.data = {"out": args.out}
    else:
        rep.data = {"dot": text}
    rep.add("graph exported", True)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="outfn", description="Exact checks for the Torelli group and the rose complex.")
    parser.add_argument("--report", help="write the JSON report here")
    parser.add_argument("--json", action="store_true", help="print the full JSON report")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("torelli", help="free group automorphism identities")
    p.add_argument("action", choices=["verify-appendix", "verify-conjugation", "verify-normality"])
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--hmax", type=int, default=1)
    p.set_defaults(func=cmd_torelli)

    p = sub.add_parser("roses", help="rose cosets up to an entry bound")
    p.add_argument("action", choices=["enumerate"])
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--bound", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_roses)

    p = sub.add_parser("dlk", help="descending link sweeps")
    p.add_argument("--matrix")
    p.add_argument("--rank", type=int)
    p.add_argument("--bound", type=int)
    p.add_argument("--check", choices=["nonempty", "connected", "homology"], default="nonempty")
    p.set_defaults(func=cmd_dlk)

    p = sub.add_parser("cdlk", help="completely descending link of one rose")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_cdlk)

    p = sub.add_parser("rank2-tree", help="the rank 2 star graph")
    p.add_argument("--bound", type=int, default=3)
    p.add_argument("--dot")
    p.set_defaults(func=cmd_rank2)

    p = sub.add_parser("toy", help="toy model certificates")
    p.add_argument("action", choices=["certify"])
    p.add_argument("--rank", type=int, default=3)
    p.add_argument("--window", type=int, default=1)
    p.add_argument("--dot-dir", help="write DOT files for the sphere cells of --dot-pq")
    p.add_argument("--dot-pq", type=int, nargs=2, default=(1, 1))
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("export", help="graph JSON to DOT")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--graph")
    g.add_argument("--example", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


def run(argv: Sequence[str] | None = None) -> RunReport:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    start = time.perf_counter()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        rep = RunReport("usage", {"argv": argv}, error=str(exc))
        rep.data = {"usage": parser.format_usage()}
        return rep
    if not getattr(args, "command", None):
        return RunReport("usage", {"argv": argv}, error="no subcommand", data={"usage": parser.format_usage()})
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "report", "json", "command")}
    params = {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}
    name = args.command + (f" {args.action}" if hasattr(args, "action") else "")
    rep = RunReport(name, params)
    try:
        args.func(args, rep)
    except (InvalidInput, RankMismatch, Unsupported, EmptyLinkError, ResourceLimit) as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    except ImpossibleState as exc:
        rep.add("internal consistency", False, str(exc))
    rep.wall_time = time.perf_counter() - start
    if args.report:
        _write_text(args.report, json.dumps(rep.to_json(), indent=2) + "\n")
    rep.print_json = args.json
    return rep


def _print(rep: RunReport) -> None:
    if rep.print_json:
        print(json.dumps(rep.to_json(), indent=2))
        return
    if rep.error:
        print(rep.error, file=sys.stderr)
        if isinstance(rep.data, dict) and "usage" in rep.data:
            print(rep.data["usage"], file=sys.stderr, end="")
        return
    data = rep.data
    if isinstance(data, dict) and "dot" in data:
        print(data["dot"], end="")
    elif rep.command == "roses enumerate" and isinstance(data["roses"], list):
        for r in data["roses"]:
            print(json.dumps(r))
    elif isinstance(data, dict) and "table" in data:
        for row in data["table"]:
            print(json.dumps(row))
    elif data is not None:
        print(json.dumps(data))
    for c in rep.checks:
        line = f"{'PASS' if c.passed else 'FAIL'}  {c.name}"
        if not c.passed and c.witness is not None:
            line += f"  witness={json.dumps(c.witness)}"
        print(line)


def main(argv: Sequence[str] | None = None) -> int:
    rep = run(argv)
    _print(rep)
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
