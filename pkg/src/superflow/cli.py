"""Command-line front end.

Exit codes: 0 success, 1 bad input (parse errors, I/O, invalid flags),
2 semantic refusal (hypothesis outside the monitorable fragment).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .decompose import (
    Decomposition, Superflow, attach_summaries, brute_force_decompose, decompose,
    format_decomposition, infer_summary_kind, parse_decomposition,
)
from .errors import DecompositionSizeError, SuperflowError, UnsupportedHypothesisError
from .flows import read_flow_stream, write_compact, write_flow_csv
from .footprint import MODES, footprint_report
from .hypothesis import BUILTINS, classify, format_expr, parse_hypothesis
from .scenarios import ScenarioSpec, generate_scenario
from .summaries import SUMMARIZERS

EXIT_OK, EXIT_INPUT, EXIT_REFUSED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


class InputError(Exception):
    pass


def _open_in(path: str):
    if path == "-":
        return sys.stdin.buffer
    try:
        return open(path, "rb")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc.strerror}") from None


def _write_text(path: str | None, text: str, default=None):
    if path is None:
        stream = default or sys.stdout
        stream.write(text)
    elif path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_flows(args):
    src = _open_in(args.input)
    try:
        return list(read_flow_stream(src, args.format))
    finally:
        if src is not sys.stdin.buffer:
            src.close()


def _hypothesis_args(p):
    g = p.add_argument_group("hypothesis")
    g.add_argument("--hypothesis", metavar="FILE", help="hypothesis DSL file")
    g.add_argument("--builtin", choices=sorted(BUILTINS), help="builtin hypothesis")
    g.add_argument("--prefix", default="192.168.1.0/24", help="scan: target prefix")
    g.add_argument("--window", type=float, help="scan/web: time window in seconds")
    g.add_argument("-c", "--c", dest="threshold", type=int, default=256, help="scan: distinct-address threshold")
    g.add_argument("--mtu", type=int, default=1500, help="chat: largest message size")
    g.add_argument("--kind", choices=sorted(SUMMARIZERS), help="summary record kind (inferred by default)")


def _resolve_hypothesis(args, required=True):
    """Return (hypothesis AST, identifier); validates builtin parameters before any I/O."""
    if args.hypothesis and args.builtin:
        raise InputError("give either --hypothesis or --builtin, not both")
    if args.builtin:
        try:
            if args.builtin == "scan":
                h = BUILTINS["scan"](args.prefix, args.window if args.window is not None else 10, args.threshold)
            elif args.builtin == "web":
                h = BUILTINS["web"](args.window if args.window is not None else 300)
            else:
                h = BUILTINS["chat"](args.mtu)
        except SuperflowError as exc:
            raise InputError(str(exc)) from None
        return h, args.builtin
    if args.hypothesis:
        try:
            text = Path(args.hypothesis).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {args.hypothesis}: {exc.strerror}") from None
        return parse_hypothesis(text), Path(args.hypothesis).stem
    if required:
        raise InputError("a hypothesis is required (--hypothesis FILE or --builtin NAME)")
    return None, None


def _format_qualification(q) -> str:
    where = f" where {format_expr(q.filter)}" if q.filter is not None else ""
    return f"distinct({q.attr}){where} {q.op} {q.bound}"


def cmd_check(args) -> int:
    try:
        text = Path(args.file).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {args.file}: {exc.strerror}") from None
    cls = classify(parse_hypothesis(text))
    quals = ", ".join(_format_qualification(q) for q in cls.qualification) or "none"
    print(f"monitorable: {'yes' if cls.monitorable else 'no'}; qualifications: {quals}")
    compat = format_expr(cls.compatibility) if cls.compatibility is not None else "true"
    print(f"compatibility: {compat}")
    print(f"families: {', '.join(cls.families) or 'none'}")
    for reason in cls.reasons:
        print(f"refused: {reason}")
    return EXIT_OK if cls.monitorable else EXIT_REFUSED


def _sharded(flows, cls, args, hyp_id, kind) -> Decomposition:
    if "srcip" not in cls.plan.key_parts:
        raise UnsupportedHypothesisError("--shard-by srcip needs a hypothesis that forces equal srcip")
    shards: dict[int, list[int]] = {}
    for i, f in enumerate(flows):
        shards.setdefault(f.src_ip, []).append(i)
    keys = sorted(shards)

    def run(k):
        idx = shards[k]
        return decompose((flows[i] for i in idx), cls, args.policy, hyp_id, kind, not args.no_repair)

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(run, keys))
    superflows, rest = [], []
    for k, d in zip(keys, results):
        idx = shards[k]
        for sf in d.superflows:
            superflows.append(Superflow(hyp_id, tuple(idx[j] for j in sf.member_indices), sf.summary))
        rest.extend(idx[j] for j in d.rest_indices)
    return Decomposition(superflows, tuple(sorted(rest)), len(flows), hyp_id)


def cmd_decompose(args) -> int:
    h, hyp_id = _resolve_hypothesis(args)
    if args.mode not in MODES:
        raise InputError(f"unknown accounting mode {args.mode}")
    flows = _load_flows(args)
    cls = classify(h)
    kind = args.kind or infer_summary_kind(cls)
    if args.oracle:
        try:
            d = brute_force_decompose(flows, h, hypothesis_id=hyp_id)
        except DecompositionSizeError as exc:
            raise InputError(str(exc)) from None
        attach_summaries(d, flows, kind)
    elif not cls.monitorable:
        raise UnsupportedHypothesisError(
            "hypothesis is not efficiently monitorable: " + "; ".join(cls.reasons)
            + " (use --oracle for inputs of at most 10 flows)")
    elif args.shard_by:
        d = _sharded(flows, cls, args, hyp_id, kind)
    else:
        d = decompose(flows, cls, args.policy, hyp_id, kind, not args.no_repair)

    _write_text(args.output, format_decomposition(d))
    report = footprint_report(d, flows, args.mode)
    _write_text(args.report, _render_report(report, args.report_format), default=sys.stderr)
    return EXIT_OK


def _render_report(report, fmt: str) -> str:
    if fmt == "kv":
        return report.to_kv()
    if fmt == "table":
        return report.to_table()
    return report.to_table() + "\n" + report.to_kv()


def cmd_report(args) -> int:
    h, _ = _resolve_hypothesis(args, required=False)
    try:
        text = Path(args.decomposition).read_text() if args.decomposition != "-" else sys.stdin.read()
    except OSError as exc:
        raise InputError(f"cannot read {args.decomposition}: {exc.strerror}") from None
    flows = _load_flows(args)
    try:
        d = parse_decomposition(text, len(flows))
        d.check_partition()
    except (SuperflowError, AssertionError) as exc:
        raise InputError(f"decomposition does not match the flow file: {exc}") from None
    if args.kind:
        kind = args.kind
    elif h is not None:
        kind = infer_summary_kind(classify(h))
    else:
        kind = _KIND_BY_ID.get(d.hypothesis_id, "generic")
    attach_summaries(d, flows, kind)
    sys.stdout.write(_render_report(footprint_report(d, flows, args.mode), args.report_format))
    return EXIT_OK


_KIND_BY_ID = {"scan": "scan", "scan256": "scan", "allotted_scan256": "scan", "web": "web", "chat": "chat"}


def cmd_generate(args) -> int:
    kind = args.kind
    if kind == "scan":
        params = {"scanner_ip": args.scanner, "target_prefix": args.prefix,
                  "addresses_hit": args.hits, "window_s": args.window, "dst_port": args.port}
    elif kind == "web":
        params = {"client_ip": args.client, "site_count": args.sites, "flows_per_site": args.flows_per_site,
                  "dns_lead_ms": args.dns_lead_ms, "resolver_ip": args.resolver}
    elif kind == "chat":
        params = {"peer_a": args.peer_a, "peer_b": args.peer_b, "message_count": args.messages,
                  "max_payload": args.max_payload}
    else:
        params = {"flow_count": args.count, "ip_pool": args.pool, "dst_pool": args.dst_pool or args.pool,
                  "duration_s": args.duration}
    if args.t0_ms is not None:
        params["t0_ms"] = args.t0_ms
    try:
        flows = generate_scenario(ScenarioSpec(kind, params, args.seed))
    except SuperflowError as exc:
        raise InputError(str(exc)) from None
    if args.output and args.output != "-":
        with open(args.output, "w") as out:
            write_flow_csv(flows, out, header=not args.no_header)
    else:
        write_flow_csv(flows, sys.stdout, header=not args.no_header)
    return EXIT_OK


def cmd_encode(args) -> int:
    flows = _load_flows(args)
    if args.to == "compact":
        if args.output in (None, "-"):
            write_compact(flows, sys.stdout.buffer)
            sys.stdout.buffer.flush()
        else:
            with open(args.output, "wb") as out:
                write_compact(flows, out)
    else:
        if args.output in (None, "-"):
            write_flow_csv(flows, sys.stdout)
        else:
            with open(args.output, "w") as out:
                write_flow_csv(flows, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="superflow", description="Hypothesis-driven superflow aggregation of flow records.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="classify a hypothesis file")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    def flow_input(p):
        p.add_argument("input", help="flow file, or - for standard input")
        p.add_argument("--format", choices=("csv", "compact"), default="csv")

    def report_opts(p):
        p.add_argument("--mode", choices=MODES, default="per-flow", help="footprint accounting")
        p.add_argument("--report-format", choices=("table", "kv", "both"), default="both")

    p = sub.add_parser("decompose", help="split flows into superflows and a residual set")
    flow_input(p)
    _hypothesis_args(p)
    report_opts(p)
    p.add_argument("--policy", choices=("first-match", "best-match"), default="first-match")
    p.add_argument("-o", "--output", help="decomposition file (default: standard output)")
    p.add_argument("--report", help="footprint report file, - for standard output (default: standard error)")
    p.add_argument("--oracle", action="store_true", help="exhaustive decomposition (at most 10 flows)")
    p.add_argument("--shard-by", choices=("srcip",), help="decompose each source independently")
    p.add_argument("--jobs", type=int, default=4, help="worker threads for --shard-by")
    p.add_argument("--no-repair", action="store_true", help="skip the maximality repair after the greedy pass")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("report", help="footprint report for an existing decomposition")
    flow_input(p)
    p.add_argument("decomposition", help="decomposition file produced by 'decompose'")
    _hypothesis_args(p)
    report_opts(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("generate", help="write a synthetic scenario as CSV")
    p.add_argument("kind", choices=("scan", "web", "chat", "noise"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t0-ms", type=int)
    p.add_argument("-o", "--output")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--scanner", default="203.0.113.7")
    p.add_argument("--prefix", default="192.168.1.0/24")
    p.add_argument("--hits", default="all", help="probed last octets, e.g. all or 0-223")
    p.add_argument("--window", type=float, default=10)
    p.add_argument("--port", type=int, default=22)
    p.add_argument("--client", default="10.1.2.3")
    p.add_argument("--sites", type=int, default=36)
    p.add_argument("--flows-per-site", type=int, default=6)
    p.add_argument("--dns-lead-ms", type=int, default=500)
    p.add_argument("--resolver")
    p.add_argument("--peer-a", default="10.0.0.1")
    p.add_argument("--peer-b", default="10.0.0.2")
    p.add_argument("--messages", type=int, default=20)
    p.add_argument("--max-payload", type=int, default=1400)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--pool", default="10.0.0.0/8")
    p.add_argument("--dst-pool")
    p.add_argument("--duration", type=float, default=3600)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("encode", help="convert flows between CSV and 32-byte compact records")
    flow_input(p)
    p.add_argument("--to", choices=("compact", "csv"), default="compact")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_encode)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedHypothesisError as exc:
        print(f"superflow: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (InputError, SuperflowError, OSError) as exc:
        print(f"superflow: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
