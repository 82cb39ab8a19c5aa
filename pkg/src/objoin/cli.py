"""Command-line front end.

Subcommands: gen, load-edges, join, pkjoin, sort, expand, audit, serve.
Every run subcommand executes in-process by default; pass --server URL to
send the same request to a running service instead. Reports are
timestamp-free JSON so a fixed seed reproduces them byte for byte.

Exit codes: 0 success, 2 input error, 3 padding overflow, 4 audit failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional, Sequence, Tuple

from .audit import check_comm_oblivious, check_comp_oblivious, failure_probe
from .cluster import ClusterConfig
from .errors import (BoundExceeded, DuplicateLocalKey, DuplicatePrimaryKey,
                     DuplicateTarget, ObJoinError, PaddingOverflow, ParseError,
                     TargetOutOfRange, UnknownOperator)
from .runner import RunSpec, execute
from .tables import (edges_to_table, gen_zipf, load_edges, max_degree,
                     read_table, table_column, write_table)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OVERFLOW = 3
EXIT_AUDIT = 4

_INPUT_ERRORS = (ParseError, DuplicatePrimaryKey, DuplicateLocalKey,
                 DuplicateTarget, TargetOutOfRange, BoundExceeded,
                 UnknownOperator, ValueError)


def _default_seed() -> int:
    return int(os.environ.get("OBJOIN_SEED", "0"))


def _add_cluster_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--servers", "-p", type=int, default=4,
                    help="number of simulated servers")
    sp.add_argument("--sigma", type=int, default=40,
                    help="security parameter in bits")
    sp.add_argument("--seed", type=int, default=None,
                    help="master seed (default: $OBJOIN_SEED or 0)")
    sp.add_argument("--report", help="write the cost report JSON here")
    sp.add_argument("--server", help="base URL of a running service; "
                                     "execute there instead of in-process")


def _emit_report(doc: dict, path: Optional[str]) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_pairs(path: str, key_col: str, payload_col: str
                ) -> List[Tuple[str, int]]:
    header, rows = read_table(path)
    keys = table_column(header, rows, key_col, path)
    payloads = table_column(header, rows, payload_col, path)
    try:
        return [(v, int(k)) for v, k in zip(payloads, keys)]
    except ValueError as exc:
        raise ParseError(f"{path}: non-integer key: {exc}")


def _run_remote(server: str, payload: dict, report: Optional[str],
                output: Optional[str], columns: Sequence[str]) -> int:
    import httpx

    resp = httpx.post(server.rstrip("/") + "/run", json=payload, timeout=600.0)
    if resp.status_code == 409:
        print(f"error: {resp.json().get('detail')}", file=sys.stderr)
        return EXIT_OVERFLOW
    if resp.status_code >= 400:
        print(f"error: {resp.text}", file=sys.stderr)
        return EXIT_INPUT
    body = resp.json()
    doc = {"report": body["report"], "info": body["info"]}
    _emit_report(doc, report)
    if output:
        write_table(output, columns, body["output_rows"])
    return EXIT_OK


def _run_local(spec: RunSpec, left, right, degrees, report, output,
               columns) -> int:
    result = execute(spec, left, right, degrees)
    doc = {"report": result.report.to_dict(), "info": result.info}
    _emit_report(doc, report)
    if output:
        write_table(output, columns, result.output_rows)
    return EXIT_OK


def _cmd_gen(args) -> int:
    pairs = gen_zipf(args.rows, args.domain, args.z,
                     args.seed if args.seed is not None else _default_seed(),
                     out_path=args.out)
    alpha = max_degree(k for k, _ in pairs)
    print(json.dumps({"rows": args.rows, "domain": args.domain, "z": args.z,
                      "alpha": alpha, "out": args.out}))
    return EXIT_OK


def _cmd_load_edges(args) -> int:
    edges = load_edges(args.path)
    edges_to_table(edges, args.out)
    print(json.dumps({"edges": len(edges), "out": args.out}))
    return EXIT_OK


def _cmd_join(args, operator: str) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    left = _load_pairs(args.left, args.left_on, args.left_payload)
    right_pairs = _load_pairs(args.right, args.right_on, args.right_payload)
    right = [(k, v) for v, k in right_pairs]
    padding, m_bound = "infer", None
    if operator == "join" and args.padding != "infer":
        padding, m_bound = "given", int(args.padding)
    if args.server:
        return _run_remote(args.server, {
            "operator": operator, "p": args.servers, "sigma": args.sigma,
            "seed": seed, "padding": padding, "m_bound": m_bound,
            "left": [[a, b] for a, b in left],
            "right": [[b, c] for b, c in right],
        }, args.report, args.output, ("a", "b", "c"))
    spec = RunSpec(operator=operator, p=args.servers, sigma=args.sigma,
                   seed=seed, padding=padding, m_bound=m_bound)
    return _run_local(spec, left, right, None, args.report, args.output,
                      ("a", "b", "c"))


def _cmd_sort(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    rows = _load_pairs(args.table, args.on, args.payload)
    if args.server:
        return _run_remote(args.server, {
            "operator": "sort", "p": args.servers, "sigma": args.sigma,
            "seed": seed, "left": [[a, b] for a, b in rows],
        }, args.report, args.output, ("a", "b"))
    spec = RunSpec(operator="sort", p=args.servers, sigma=args.sigma, seed=seed)
    return _run_local(spec, rows, None, None, args.report, args.output,
                      ("a", "b"))


def _cmd_expand(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    header, raw = read_table(args.table)
    keys = table_column(header, raw, args.on, args.table)
    payloads = table_column(header, raw, args.payload, args.table)
    degs = table_column(header, raw, args.degree_col, args.table)
    try:
        rows = [(v, int(k)) for v, k in zip(payloads, keys)]
        degrees = [int(d) for d in degs]
    except ValueError as exc:
        raise ParseError(f"{args.table}: non-integer field: {exc}")
    padding, m_bound = "infer", None
    if args.bound != "infer":
        padding, m_bound = "given", int(args.bound)
    if args.server:
        return _run_remote(args.server, {
            "operator": "expand", "p": args.servers, "sigma": args.sigma,
            "seed": seed, "padding": padding, "m_bound": m_bound,
            "left": [[a, b] for a, b in rows], "degrees": degrees,
        }, args.report, args.output, ("a", "b"))
    spec = RunSpec(operator="expand", p=args.servers, sigma=args.sigma,
                   seed=seed, padding=padding, m_bound=m_bound)
    return _run_local(spec, rows, None, degrees, args.report, args.output,
                      ("a", "b"))


def _cmd_audit(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.server:
        import httpx

        route = {"comm": "/audit/communication", "comp": "/audit/computation",
                 "probe": "/audit/failure-probe"}[args.kind]
        if args.kind == "comm":
            payload = {"operator": args.operator, "p": args.servers,
                       "sigma": args.sigma, "seed": seed,
                       "trials": args.trials, "n": args.size}
        elif args.kind == "comp":
            payload = {"primitive": args.primitive, "size": args.size,
                       "trials": args.trials, "seed": seed}
        else:
            payload = {"sigma": args.sigma, "trials": args.trials,
                       "n": args.size, "p": args.servers, "seed": seed}
        resp = httpx.post(args.server.rstrip("/") + route, json=payload,
                          timeout=600.0)
        if resp.status_code >= 400:
            print(f"error: {resp.text}", file=sys.stderr)
            return EXIT_INPUT
        doc = resp.json()
        _emit_report(doc, args.report)
        if args.kind == "probe":
            ok = doc["overflows"] == 0 or doc["rate"] <= doc["bound"] * 2
        else:
            ok = doc["passed"]
        return EXIT_OK if ok else EXIT_AUDIT

    if args.kind == "comm":
        config = ClusterConfig(p=args.servers, sigma=args.sigma,
                               master_seed=seed)
        verdict = check_comm_oblivious(args.operator, config,
                                       {"n": args.size}, trials=args.trials,
                                       seed=seed)
        _emit_report(verdict.as_dict(), args.report)
        return EXIT_OK if verdict.passed else EXIT_AUDIT
    if args.kind == "comp":
        verdict = check_comp_oblivious(args.primitive, args.size,
                                       trials=args.trials, seed=seed)
        _emit_report(verdict.as_dict(), args.report)
        return EXIT_OK if verdict.passed else EXIT_AUDIT
    probe = failure_probe(args.sigma, args.trials, n=args.size,
                          p=args.servers, seed=seed)
    _emit_report(probe.as_dict(), args.report)
    ok = probe.rate <= probe.bound * 2 or probe.overflows == 0
    return EXIT_OK if ok else EXIT_AUDIT


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("objoin.service:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="objoin",
        description="Oblivious distributed join simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen", help="generate a Zipf-keyed table CSV")
    sp.add_argument("--rows", type=int, required=True)
    sp.add_argument("--domain", type=int, required=True)
    sp.add_argument("--z", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=_cmd_gen)

    sp = sub.add_parser("load-edges", help="convert an edge list to a CSV table")
    sp.add_argument("path")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=_cmd_load_edges)

    sp = sub.add_parser("join", help="general oblivious equi-join")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("--left-on", default="key")
    sp.add_argument("--left-payload", default="value")
    sp.add_argument("--right-on", default="key")
    sp.add_argument("--right-payload", default="value")
    sp.add_argument("--padding", default="infer",
                    help="'infer' or an integer output-size bound")
    sp.add_argument("--output", help="write joined rows CSV here")
    _add_cluster_flags(sp)
    sp.set_defaults(fn=lambda a: _cmd_join(a, "join"))

    sp = sub.add_parser("pkjoin", help="primary-key join")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("--left-on", default="key")
    sp.add_argument("--left-payload", default="value")
    sp.add_argument("--right-on", default="key")
    sp.add_argument("--right-payload", default="value")
    sp.add_argument("--output")
    _add_cluster_flags(sp)
    sp.set_defaults(fn=lambda a: _cmd_join(a, "pkjoin"))

    sp = sub.add_parser("sort", help="distributed oblivious sort")
    sp.add_argument("table")
    sp.add_argument("--on", default="key")
    sp.add_argument("--payload", default="value")
    sp.add_argument("--output")
    _add_cluster_flags(sp)
    sp.set_defaults(fn=_cmd_sort)

    sp = sub.add_parser("expand", help="oblivious expansion by a degree column")
    sp.add_argument("table")
    sp.add_argument("--on", default="key")
    sp.add_argument("--payload", default="value")
    sp.add_argument("--degree-col", required=True)
    sp.add_argument("--bound", default="infer",
                    help="'infer' (sum of degrees) or an integer")
    sp.add_argument("--output")
    _add_cluster_flags(sp)
    sp.set_defaults(fn=_cmd_expand)

    sp = sub.add_parser("audit", help="obliviousness and failure-rate checks")
    kinds = sp.add_subparsers(dest="kind", required=True)
    ka = kinds.add_parser("comm", help="transcript equality check")
    ka.add_argument("--operator", required=True)
    ka.add_argument("--trials", type=int, default=20)
    ka.add_argument("--size", type=int, default=64)
    _add_cluster_flags(ka)
    ka.set_defaults(fn=_cmd_audit)
    kb = kinds.add_parser("comp", help="access-trace equality check")
    kb.add_argument("--primitive", required=True)
    kb.add_argument("--trials", type=int, default=50)
    kb.add_argument("--size", type=int, default=256)
    _add_cluster_flags(kb)
    kb.set_defaults(fn=_cmd_audit)
    kc = kinds.add_parser("probe", help="padding failure-rate Monte Carlo")
    kc.add_argument("--trials", type=int, default=10000)
    kc.add_argument("--size", type=int, default=4096,
                    help="records per server")
    _add_cluster_flags(kc)
    kc.set_defaults(fn=_cmd_audit)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.set_defaults(fn=_cmd_serve)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except PaddingOverflow as exc:
        print(f"error: padding overflow: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ObJoinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
