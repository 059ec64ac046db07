"""Deterministic protocol simulator, public transcript replay, cost reports.

Scenarios are fully seeded: every random draw comes from a stream derived
from the master seed and a structural label (bidder index, auction, round),
so a configuration always produces byte-identical transcripts — including
under the concurrent scheduler, which computes bid signatures in worker
threads but admits them in a fixed order.

A transcript is one ``params`` header line (the public parameters, hex of
canonical JSON) followed by the bulletin-board records.  Replaying it needs
no secrets and re-derives the winner of every announced auction.
"""

from __future__ import annotations

import json
import random
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping

from .auction import (
    AuctionManager,
    Bid,
    BidderAgent,
    MessageEvent,
    open_protocol,
    parse_bid_payload,
)
from .group import InvalidPoint, OpCounter, count_ops, gen_group_params
from .registry import (
    BID_POSTED,
    ENTRY_KINDS,
    KEY_EVICTED,
    KEY_PUBLISHED,
    WINNER_ANNOUNCED,
    BulletinBoard,
    RegistrationManager,
    board_to_text,
    make_registration,
)
from .ringsig import (
    Ring,
    keygen,
    public_params_from_json,
    public_params_to_json,
    setup,
    sign,
    verify,
)

HONEST = "honest-increment"
SNIPER = "sniper"
INVALID_SIGNATURE = "invalid-signature"
REPUDIATOR = "repudiator"
STRATEGIES = (HONEST, SNIPER, INVALID_SIGNATURE, REPUDIATOR)

# Price jumps over the round-start high bid, per strategy.  The bidder index
# is added on top so simultaneous bids never tie.
_PRICE_BUMPS = {HONEST: 1, REPUDIATOR: 150, INVALID_SIGNATURE: 100, SNIPER: 500}

RING_ALL_ACTIVE = "all-active"
RING_RANDOM_SUBSET = "random-subset"

_TRANSCRIPT_HEADER = "params"


class ScenarioError(Exception):
    """A scenario failed mid-run; the message names the failing actor/phase."""


@dataclass
class ScenarioConfig:
    p_bits: int = 16
    q_bits: int = 16
    k: int = 16
    seed: int = 0
    bidders: int = 3
    rounds: int = 1
    auctions: int = 1
    strategies: tuple[str, ...] = ()
    ring_policy: str = RING_ALL_ACTIVE
    ring_size: int | None = None
    monotonic: bool = True
    scheduler: str = "sequential"  # 'sequential' | 'concurrent'

    def strategy_of(self, index: int) -> str:
        if index < len(self.strategies):
            return self.strategies[index]
        return HONEST

    def validate(self) -> None:
        if self.bidders < 1:
            raise ValueError("need at least one bidder")
        if self.rounds < 1 or self.auctions < 1:
            raise ValueError("rounds and auctions must be at least 1")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if len(self.strategies) > self.bidders:
            raise ValueError("more strategies than bidders")
        for strategy in self.strategies:
            if strategy not in STRATEGIES:
                raise ValueError(f"unknown strategy {strategy!r}")
        if self.ring_policy not in (RING_ALL_ACTIVE, RING_RANDOM_SUBSET):
            raise ValueError(f"unknown ring policy {self.ring_policy!r}")
        if self.ring_policy == RING_RANDOM_SUBSET:
            if self.ring_size is None or self.ring_size < 1:
                raise ValueError("random-subset needs a positive ring size")
            if self.ring_size > self.bidders:
                raise ValueError("ring size exceeds the number of bidders")
        if self.scheduler not in ("sequential", "concurrent"):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse the line-oriented key=value scenario format (# for comments)."""
    config = ScenarioConfig()
    strategies: dict[int, str] = {}
    int_keys = {"p_bits", "q_bits", "k", "seed", "bidders", "rounds", "auctions"}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in int_keys:
            setattr(config, key, int(value))
        elif key.startswith("strategy."):
            strategies[int(key.split(".", 1)[1])] = value
        elif key == "ring_policy":
            if value.startswith(RING_RANDOM_SUBSET + ":"):
                config.ring_policy = RING_RANDOM_SUBSET
                config.ring_size = int(value.split(":", 1)[1])
            else:
                config.ring_policy = value
        elif key == "monotonic_prices":
            if value not in ("on", "off"):
                raise ValueError(f"line {lineno}: monotonic_prices must be on or off")
            config.monotonic = value == "on"
        elif key == "scheduler":
            config.scheduler = value
        else:
            raise ValueError(f"line {lineno}: unknown scenario key {key!r}")
    if strategies:
        if min(strategies) < 0 or max(strategies) >= config.bidders:
            raise ValueError("strategy index out of range")
        config.strategies = tuple(
            strategies.get(i, HONEST) for i in range(max(strategies) + 1)
        )
    config.validate()
    return config


@dataclass(frozen=True)
class OpCountReport:
    """Per-phase operation tallies collected during a run."""

    phases: Mapping[str, Mapping[str, int]]

    def phase(self, name: str) -> dict[str, int]:
        return dict(self.phases.get(name, {}))


@dataclass(frozen=True)
class WinnerSummary:
    auction_id: int
    seq: int
    price: int
    pub_key_hex: str
    identity: bytes


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    transcript: bytes
    report: OpCountReport
    messages: tuple[MessageEvent, ...]
    winners: tuple[WinnerSummary, ...]
    evicted: tuple[str, ...]  # hex encodings of evicted keys
    public_params: object
    trace_key: object


@dataclass
class _Actor:
    name: str
    index: int
    strategy: str
    agent: BidderAgent
    last_admitted: Bid | None = None


def _child_rng(seed: int, label: str) -> random.Random:
    return random.Random(f"{seed}:{label}")


def _wants_to_bid(strategy: str, round_no: int, rounds: int) -> bool:
    if strategy == SNIPER:
        return round_no == rounds - 1
    return True


def _choose_ring(group, board, actor: _Actor, config: ScenarioConfig, rng) -> Ring:
    active_sorted = sorted(board.active_keys())
    own = group.encode_point(actor.agent.keypair.pub_key)
    if config.ring_policy == RING_ALL_ACTIVE:
        chosen = active_sorted
    else:
        others = [key for key in active_sorted if key != own]
        take = min(config.ring_size - 1, len(others))
        chosen = [own] + rng.sample(others, take)
    return Ring(group, [group.decode_point(encoding) for encoding in chosen])


def run_scenario(config: ScenarioConfig, *, counted: bool = True) -> ScenarioResult:
    """Run a fully seeded scenario and return its transcript and reports.

    ``counted=False`` disables instrumentation entirely; the transcript is
    byte-identical either way.
    """
    config.validate()
    counter = OpCounter() if counted else None
    with count_ops(counter):
        return _run(config, counter)


def _run(config: ScenarioConfig, counter: OpCounter | None) -> ScenarioResult:
    def phase(name: str) -> None:
        if counter is not None:
            counter.set_phase(name)

    seed = config.seed
    phase("initial")
    try:
        params = gen_group_params(config.p_bits, config.q_bits, _child_rng(seed, "group"))
    except Exception as exc:
        raise ScenarioError(f"group generation failed: {exc}") from exc
    pp, trace_key = setup(params, config.k, _child_rng(seed, "setup"))
    group = params.group
    board = BulletinBoard()
    rm = RegistrationManager(group, board)
    am = AuctionManager(pp, trace_key, board)
    messages: list[MessageEvent] = []

    phase("registration")
    actors: list[_Actor] = []
    for index in range(config.bidders):
        name = f"bidder-{index}"
        keypair = keygen(pp, _child_rng(seed, f"key:{index}"))
        proof = make_registration(keypair.x, keypair.pub_key, name.encode(),
                                  group, _child_rng(seed, f"reg:{index}"))
        messages.append(MessageEvent(sender=name, phase="registration"))
        try:
            rm.register(keypair.pub_key, name.encode(), proof)
        except Exception as exc:
            raise ScenarioError(f"{name}: registration failed: {exc}") from exc
        actors.append(_Actor(name=name, index=index, strategy=config.strategy_of(index),
                             agent=BidderAgent(name, keypair, pp, board)))

    winners: list[WinnerSummary] = []
    evicted: list[str] = []
    for auction_no in range(config.auctions):
        am.open_auction(auction_no, monotonic=config.monotonic)
        phase("bidding")
        for round_no in range(config.rounds):
            high = am.current_high(auction_no)
            jobs: list[tuple[_Actor, Callable[[], Bid]]] = []
            active_view = board.active_keys()
            for actor in actors:
                own = group.encode_point(actor.agent.keypair.pub_key)
                if own not in active_view:
                    continue  # evicted bidders are out
                if not _wants_to_bid(actor.strategy, round_no, config.rounds):
                    continue
                price = high + _PRICE_BUMPS[actor.strategy] + actor.index
                jobs.append((actor, _bid_builder(actor, auction_no, round_no, price,
                                                 config, group, board, seed)))
            if config.scheduler == "concurrent" and jobs:
                with ThreadPoolExecutor(max_workers=min(8, len(jobs))) as pool:
                    built = list(pool.map(lambda job: job[1](), jobs))
            else:
                built = [build() for _, build in jobs]
            for (actor, _), bid in zip(jobs, built):
                messages.append(MessageEvent(sender=actor.name, phase="bidding"))
                admitted = am.admit_bid(bid)
                if admitted:
                    state = am.state(auction_no)
                    actor.last_admitted = state.bids[-1]
        am.close_auction(auction_no)

        phase("winner")
        try:
            winner_bid = am.determine_winner(auction_no)
        except Exception as exc:
            raise ScenarioError(f"auction {auction_no}: {exc}") from exc

        phase("open")
        pub_key, identity = open_protocol(am, rm, winner_bid)
        winners.append(WinnerSummary(
            auction_id=auction_no,
            seq=winner_bid.seq,
            price=winner_bid.price,
            pub_key_hex=group.encode_point(pub_key).hex(),
            identity=identity,
        ))
        for actor in actors:
            if actor.strategy != REPUDIATOR or actor.last_admitted is None:
                continue
            if actor.last_admitted.auction_id != auction_no:
                continue
            encoded = group.encode_point(actor.agent.keypair.pub_key)
            if encoded not in board.active_keys():
                continue
            traced_key, _ = open_protocol(am, rm, actor.last_admitted, malicious=True)
            evicted.append(group.encode_point(traced_key).hex())

    transcript = render_transcript(pp, board)
    report = OpCountReport(phases=counter.snapshot() if counter is not None else {})
    return ScenarioResult(
        config=config,
        transcript=transcript,
        report=report,
        messages=tuple(messages),
        winners=tuple(winners),
        evicted=tuple(evicted),
        public_params=pp,
        trace_key=trace_key,
    )


def _bid_builder(actor: _Actor, auction_no: int, round_no: int, price: int,
                 config: ScenarioConfig, group, board, seed: int) -> Callable[[], Bid]:
    # One self-contained closure per bid: its own rng stream makes the built
    # bid independent of scheduling order.
    def build() -> Bid:
        rng = _child_rng(seed, f"bid:{auction_no}:{round_no}:{actor.index}")
        ring = _choose_ring(group, board, actor, config, rng)
        bid = actor.agent.place_bid(auction_no, round_no, price, ring, rng)
        if actor.strategy == INVALID_SIGNATURE:
            broken = group.add(bid.signature.s1, group.g)
            bid = replace(bid, signature=replace(bid.signature, s1=broken))
        return bid

    return build


# ---------------------------------------------------------------------------
# transcript rendering and public replay

def render_transcript(pp, board: BulletinBoard) -> bytes:
    header = f"{_TRANSCRIPT_HEADER} {public_params_to_json(pp).hex()}\n"
    return (header + board_to_text(board.entries())).encode()


@dataclass(frozen=True)
class TranscriptReport:
    valid: bool
    failing_seq: int | None = None
    reason: str | None = None
    records: int = 0
    winners: tuple[tuple[int, int, int], ...] = ()  # (auction_id, seq, price)

    def __bool__(self) -> bool:
        return self.valid


@dataclass
class _ReplayBid:
    auction_id: int
    price: int
    seq: int
    payload: bytes
    verifies: bool


def verify_transcript(data: bytes) -> TranscriptReport:
    """Replay a transcript using public data only.

    Checks record structure, sequence monotonicity, the active-key view at
    every step, and every announced winner: its payload must byte-match the
    referenced bid, its signature must verify, and it must be the best
    verifying bid of its auction.  Bids whose signatures fail are legitimate
    content — admission is lazy — but they can never be announced winners.
    """
    def invalid(seq: int | None, reason: str) -> TranscriptReport:
        return TranscriptReport(False, failing_seq=seq, reason=reason)

    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        return invalid(None, "transcript is not utf-8 text")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        return TranscriptReport(True)
    head = lines[0].split(" ", 1)
    if len(head) != 2 or head[0] != _TRANSCRIPT_HEADER:
        return invalid(None, "missing params header")
    try:
        pp = public_params_from_json(bytes.fromhex(head[1]))
    except (ValueError, KeyError, InvalidPoint, json.JSONDecodeError) as exc:
        return invalid(None, f"bad params header: {exc}")
    group = pp.group

    active: set[bytes] = set()
    bids: dict[int, _ReplayBid] = {}
    announced: set[int] = set()
    winners: list[tuple[int, int, int]] = []
    previous_seq = -1
    for line in lines[1:]:
        parts = line.split(" ")
        if len(parts) != 3:
            return invalid(None, "record is not 'seq kind payload'")
        try:
            seq = int(parts[0])
        except ValueError:
            return invalid(None, "bad sequence number")
        if seq <= previous_seq:
            return invalid(seq, "sequence numbers must increase")
        previous_seq = seq
        kind = parts[1]
        if kind not in ENTRY_KINDS:
            return invalid(seq, f"unknown record kind {kind!r}")
        try:
            payload = bytes.fromhex(parts[2])
        except ValueError:
            return invalid(seq, "payload is not hex")

        if kind == KEY_PUBLISHED:
            try:
                key = group.decode_point(payload)
            except InvalidPoint as exc:
                return invalid(seq, f"unreadable key: {exc}")
            if key is None:
                return invalid(seq, "identity point published as a key")
            if group.encode_point(key) != payload:
                return invalid(seq, "non-canonical key encoding")
            if payload in active:
                return invalid(seq, "key is already active")
            active.add(payload)
        elif kind == KEY_EVICTED:
            if payload not in active:
                return invalid(seq, "evicting a key that is not active")
            active.discard(payload)
        elif kind == BID_POSTED:
            try:
                bid = parse_bid_payload(group, payload)
            except Exception as exc:
                return invalid(seq, f"unreadable bid: {exc}")
            if bid.price < 1:
                return invalid(seq, "non-positive price")
            for key in bid.ring:
                if group.encode_point(key) not in active:
                    return invalid(seq, "ring key not in the active view")
            verifies = bool(verify(pp, bid.ring, bid.message_bytes(), bid.signature))
            bids[seq] = _ReplayBid(auction_id=bid.auction_id, price=bid.price,
                                   seq=seq, payload=payload, verifies=verifies)
        else:  # WINNER_ANNOUNCED
            if len(payload) < 8:
                return invalid(seq, "winner record too short")
            ref = int.from_bytes(payload[:8], "big")
            body = payload[8:]
            known = bids.get(ref)
            if known is None:
                return invalid(seq, "winner references an unknown bid")
            if body != known.payload:
                return invalid(seq, "winner payload differs from the referenced bid")
            if not known.verifies:
                return invalid(seq, "announced winner's signature does not verify")
            if known.auction_id in announced:
                return invalid(seq, "auction already has an announced winner")
            candidates = [b for b in bids.values()
                          if b.auction_id == known.auction_id and b.verifies]
            best = min(candidates, key=lambda b: (-b.price, b.seq))
            if best.seq != ref:
                return invalid(seq, "a better verifying bid exists than the announced winner")
            announced.add(known.auction_id)
            winners.append((known.auction_id, ref, known.price))

    return TranscriptReport(True, records=len(lines) - 1, winners=tuple(winners))


# ---------------------------------------------------------------------------
# cost accounting

@dataclass(frozen=True)
class EfficiencyRow:
    ring_size: int
    exponentiations: int
    point_adds: int
    negations: int
    hashes: int
    pairings: int
    budget: int  # nominal signing budget: 5*l + k + 2 exponentiations
    within_budget: bool


@dataclass(frozen=True)
class EfficiencySummary:
    k: int
    rows: tuple[EfficiencyRow, ...]
    slope: float
    slope_ok: bool  # exponentiations grow by an integer per added member
    all_within_budget: bool
    one_hash_per_signing: bool
    table: str


def report_efficiency(report: OpCountReport, ring_size: int, k: int) -> EfficiencyRow:
    """Summarize one instrumented signing run against the nominal budget.

    The budget 5*l + k + 2 is an upper bound, not a prediction: the measured
    exponentiation count is the exact tally and is reported beside it.
    """
    counts = report.phase("bidding")
    exps = counts.get("exp", 0)
    budget = 5 * ring_size + k + 2
    return EfficiencyRow(
        ring_size=ring_size,
        exponentiations=exps,
        point_adds=counts.get("mul", 0),
        negations=counts.get("inv", 0),
        hashes=counts.get("hash", 0),
        pairings=counts.get("pair", 0),
        budget=budget,
        within_budget=exps <= budget,
    )


def measure_signing(ring_size: int, k: int, *, seed: int = 2024,
                    p_bits: int = 16, q_bits: int = 16) -> OpCountReport:
    """Instrument exactly one signing over a fresh ring of ``ring_size`` keys."""
    params = gen_group_params(p_bits, q_bits, _child_rng(seed, "group"))
    pp, _ = setup(params, k, _child_rng(seed, "setup"))
    keypairs = [keygen(pp, _child_rng(seed, f"key:{i}")) for i in range(ring_size)]
    ring = Ring(params.group, [kp.pub_key for kp in keypairs])
    signer = keypairs[0]
    counter = OpCounter()
    with count_ops(counter):
        counter.set_phase("bidding")
        sign(pp, ring, ring.index_of(signer.pub_key), signer, b"cost probe", _child_rng(seed, "sig"))
    return OpCountReport(phases=counter.snapshot())


def efficiency_sweep(ring_sizes: tuple[int, ...] = (1, 2, 4, 8), k: int = 160,
                     *, seed: int = 2024) -> EfficiencySummary:
    """Measure signing cost across ring sizes and fit the growth rate."""
    rows = tuple(
        report_efficiency(measure_signing(l, k, seed=seed), l, k) for l in ring_sizes
    )
    xs = [float(row.ring_size) for row in rows]
    ys = [float(row.exponentiations) for row in rows]
    slope = statistics.linear_regression(xs, ys).slope
    slope_ok = abs(slope - round(slope)) <= 0.01
    header = (
        f"signing cost, k={k} (budget = 5*l + k + 2 exponentiations; the budget is\n"
        f"an upper bound — measured counts are exact tallies and run well below it)\n"
        f"{'l':>3} {'exp':>6} {'budget':>7} {'adds':>6} {'negs':>6} {'hashes':>7} {'pairings':>9}\n"
    )
    body = "".join(
        f"{row.ring_size:>3} {row.exponentiations:>6} {row.budget:>7} "
        f"{row.point_adds:>6} {row.negations:>6} {row.hashes:>7} {row.pairings:>9}\n"
        for row in rows
    )
    footer = f"exponentiations per added ring member: {slope:.3f}\n"
    return EfficiencySummary(
        k=k,
        rows=rows,
        slope=slope,
        slope_ok=slope_ok,
        all_within_budget=all(row.within_budget for row in rows),
        one_hash_per_signing=all(row.hashes == 1 for row in rows),
        table=header + body + footer,
    )
