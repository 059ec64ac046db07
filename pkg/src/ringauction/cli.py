"""Command-line front end: setup, run, verify, trace.

Exit codes: 0 success, 1 a protocol-level negative (invalid transcript,
failed signature, no unique traced member), 2 bad usage or unreadable input.
"""

from __future__ import annotations

import argparse
import random
import sys

from .auction import MalformedBid, parse_bid_payload
from .group import InvalidPoint, gen_group_params
from .harness import parse_scenario, run_scenario, verify_transcript
from .registry import BID_POSTED, MalformedBoard, parse_board_text
from .ringsig import (
    TraceKey,
    public_params_from_json,
    public_params_to_json,
    setup,
    trace,
    verify,
)

_PHASE_ORDER = ("initial", "registration", "bidding", "winner", "open")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringauction",
        description="Anonymous English auctions over revocable ring signatures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_setup = sub.add_parser("setup", help="generate public parameters and a trace key")
    p_setup.add_argument("--p-bits", type=int, default=16)
    p_setup.add_argument("--q-bits", type=int, default=16)
    p_setup.add_argument("--k", type=int, default=16, help="message-hash output bits")
    p_setup.add_argument("--seed", type=int, default=0)
    p_setup.add_argument("--out", required=True, help="public parameters file (JSON)")
    p_setup.add_argument("--tracekey-out", default=None,
                         help="trace key file (default: OUT + '.tracekey')")

    p_run = sub.add_parser("run", help="run a scenario file and write its transcript")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out", required=True, help="transcript file")
    p_run.add_argument("--counts", action="store_true",
                       help="print per-phase operation counts")
    p_run.add_argument("--params-out", default=None,
                       help="also write the public parameters to this file")
    p_run.add_argument("--tracekey-out", default=None,
                       help="also write the trace key to this file")

    p_verify = sub.add_parser("verify", help="replay a transcript from public data")
    p_verify.add_argument("--transcript", required=True)

    p_trace = sub.add_parser("trace", help="trace one posted bid to its ring member")
    p_trace.add_argument("--transcript", required=True)
    p_trace.add_argument("--seq", type=int, required=True)
    p_trace.add_argument("--params", default=None,
                         help="public parameters file (default: transcript header)")
    p_trace.add_argument("--tracekey", required=True)
    return parser


def _cmd_setup(args) -> int:
    rng = random.Random(f"{args.seed}:group")
    try:
        params = gen_group_params(args.p_bits, args.q_bits, rng)
    except ValueError as exc:
        print(f"setup failed: {exc}", file=sys.stderr)
        return 2
    pp, tk = setup(params, args.k, random.Random(f"{args.seed}:setup"))
    with open(args.out, "wb") as fh:
        fh.write(public_params_to_json(pp))
    tracekey_path = args.tracekey_out or args.out + ".tracekey"
    with open(tracekey_path, "w") as fh:
        fh.write(f"{tk.q}\n")
    print(f"wrote public parameters to {args.out} "
          f"(group order {params.n}, field size {params.ell})")
    print(f"wrote trace key to {tracekey_path}")
    return 0


def _cmd_run(args) -> int:
    try:
        with open(args.scenario) as fh:
            config = parse_scenario(fh.read())
    except (OSError, ValueError) as exc:
        print(f"bad scenario: {exc}", file=sys.stderr)
        return 2
    result = run_scenario(config, counted=args.counts)
    with open(args.out, "wb") as fh:
        fh.write(result.transcript)
    for win in result.winners:
        identity = win.identity.decode("utf-8", "replace")
        print(f"auction {win.auction_id}: winner {identity} "
              f"at price {win.price} (bid seq {win.seq})")
    for key_hex in result.evicted:
        print(f"evicted key {key_hex}")
    if args.params_out:
        with open(args.params_out, "wb") as fh:
            fh.write(public_params_to_json(result.public_params))
    if args.tracekey_out:
        with open(args.tracekey_out, "w") as fh:
            fh.write(f"{result.trace_key.q}\n")
    if args.counts:
        print("operation counts by phase:")
        for phase in _PHASE_ORDER:
            counts = result.report.phase(phase)
            if not counts:
                continue
            joined = " ".join(f"{op}={counts[op]}" for op in sorted(counts))
            print(f"  {phase}: {joined}")
    print(f"transcript written to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    try:
        with open(args.transcript, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        print(f"cannot read transcript: {exc}", file=sys.stderr)
        return 2
    report = verify_transcript(data)
    if report.valid:
        print(f"transcript valid: {report.records} records, "
              f"{len(report.winners)} announced winner(s)")
        for auction_id, seq, price in report.winners:
            print(f"  auction {auction_id}: bid seq {seq} at price {price}")
        return 0
    where = "" if report.failing_seq is None else f" at seq {report.failing_seq}"
    print(f"transcript INVALID{where}: {report.reason}")
    return 1


def _cmd_trace(args) -> int:
    try:
        with open(args.transcript, "rb") as fh:
            text = fh.read().decode("utf-8")
        with open(args.tracekey) as fh:
            tk = TraceKey(int(fh.read().strip()))
    except (OSError, ValueError, UnicodeDecodeError) as exc:
        print(f"cannot read inputs: {exc}", file=sys.stderr)
        return 2

    lines = text.splitlines(keepends=True)
    params_hex = None
    if lines and lines[0].startswith("params "):
        params_hex = lines[0].split(" ", 1)[1].strip()
        lines = lines[1:]
    if args.params is not None:
        try:
            with open(args.params, "rb") as fh:
                params_json = fh.read()
        except OSError as exc:
            print(f"cannot read params: {exc}", file=sys.stderr)
            return 2
    elif params_hex is not None:
        params_json = bytes.fromhex(params_hex)
    else:
        print("no --params given and the transcript has no params header",
              file=sys.stderr)
        return 2
    try:
        pp = public_params_from_json(params_json)
    except (ValueError, KeyError, InvalidPoint) as exc:
        print(f"bad public parameters: {exc}", file=sys.stderr)
        return 2

    try:
        entries = parse_board_text("".join(lines))
    except MalformedBoard as exc:
        print(f"bad transcript: {exc}", file=sys.stderr)
        return 2
    entry = next((e for e in entries if e.seq == args.seq), None)
    if entry is None or entry.kind != BID_POSTED:
        print(f"seq {args.seq} is not a posted bid", file=sys.stderr)
        return 2
    try:
        bid = parse_bid_payload(pp.group, entry.payload)
    except MalformedBid as exc:
        print(f"unreadable bid payload: {exc}", file=sys.stderr)
        return 2

    outcome = verify(pp, bid.ring, bid.message_bytes(), bid.signature)
    if not outcome:
        print(f"bid seq {args.seq} does not verify: {outcome.reason}")
        return 1
    traced = trace(tk, pp, bid.ring, bid.signature)
    if traced is None:
        print(f"bid seq {args.seq}: no unique ring member matched")
        return 1
    index, pub_key = traced
    print(f"bid seq {args.seq} traced to ring member {index}: "
          f"{pp.group.encode_point(pub_key).hex()}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on --help and usage errors
        code = exc.code
        return code if isinstance(code, int) else 2
    handlers = {
        "setup": _cmd_setup,
        "run": _cmd_run,
        "verify": _cmd_verify,
        "trace": _cmd_trace,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
