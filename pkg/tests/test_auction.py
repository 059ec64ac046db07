"""Bid admission, winner determination, identity opening, message counts.

These run over a 16-bit group: big enough that degenerate keys and hash
collisions cannot occur by accident, small enough that a test signs in
well under a millisecond.
"""

import random
from dataclasses import replace
from types import SimpleNamespace

import pytest

from ringauction.auction import (
    BID_MESSAGE_LEN,
    AuctionError,
    AuctionManager,
    Bid,
    BidderAgent,
    MalformedBid,
    MalformedTranscript,
    MessageEvent,
    NoValidBid,
    OwnKeyNotInRing,
    RingKeyNotOnBoard,
    count_messages,
    decode_bid_message,
    encode_bid_message,
    open_protocol,
    parse_bid_payload,
    serialize_bid_payload,
)
from ringauction.registry import (
    BID_POSTED,
    WINNER_ANNOUNCED,
    BulletinBoard,
    RegistrationManager,
    make_registration,
)
from ringauction.ringsig import (
    NotVerified,
    Ring,
    Untraceable,
    keygen,
    setup,
    sign,
)

from .support import naive_add, naive_mul, naive_neg


@pytest.fixture()
def env(setup16, keys16):
    """Fresh board with all five keys registered and one all-member ring."""
    pp, tk = setup16
    board = BulletinBoard()
    rm = RegistrationManager(pp.group, board)
    am = AuctionManager(pp, tk, board)
    rng = random.Random(99)
    agents = []
    for i, kp in enumerate(keys16):
        name = f"agent-{i}"
        proof = make_registration(kp.x, kp.pub_key, name.encode(), pp.group, rng)
        rm.register(kp.pub_key, name.encode(), proof)
        agents.append(BidderAgent(name, kp, pp, board))
    ring = Ring(pp.group, [kp.pub_key for kp in keys16])
    return SimpleNamespace(pp=pp, tk=tk, board=board, rm=rm, am=am,
                           agents=agents, ring=ring, rng=rng)


def craft_bid(env, agent, price, *, auction_id=1, round_no=0, ring=None):
    ring = ring if ring is not None else env.ring
    message = encode_bid_message(auction_id, round_no, price)
    sig = sign(env.pp, ring, ring.index_of(agent.keypair.pub_key),
               agent.keypair, message, env.rng)
    return Bid(auction_id=auction_id, round_no=round_no, price=price,
               ring=ring, signature=sig)


# ---------------------------------------------------------------------------
# bid message and payload codecs

class TestBidCodec:
    def test_message_roundtrip(self):
        data = encode_bid_message(3, 1, 250)
        assert len(data) == BID_MESSAGE_LEN
        assert decode_bid_message(data) == (3, 1, 250)

    def test_message_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            encode_bid_message(-1, 0, 10)
        with pytest.raises(ValueError):
            encode_bid_message(0, 0, 1 << 64)

    def test_decode_rejects_wrong_length(self):
        with pytest.raises(MalformedBid):
            decode_bid_message(b"\x00" * (BID_MESSAGE_LEN - 1))

    def test_payload_roundtrip(self, env):
        bid = craft_bid(env, env.agents[0], 40)
        payload = serialize_bid_payload(bid)
        back = parse_bid_payload(env.pp.group, payload)
        assert (back.auction_id, back.round_no, back.price) == (1, 0, 40)
        assert back.ring == bid.ring
        assert back.signature == bid.signature

    def test_payload_rejects_truncation_and_slack(self, env):
        payload = serialize_bid_payload(craft_bid(env, env.agents[0], 41))
        with pytest.raises(MalformedBid):
            parse_bid_payload(env.pp.group, payload[:-1])
        with pytest.raises(MalformedBid):
            parse_bid_payload(env.pp.group, payload + b"\x00")

    def test_payload_rejects_empty_ring(self, env):
        data = encode_bid_message(1, 0, 5) + (0).to_bytes(4, "big")
        with pytest.raises(MalformedBid):
            parse_bid_payload(env.pp.group, data)

    def test_payload_rejects_non_canonical_ring_order(self, env):
        bid = craft_bid(env, env.agents[0], 42)
        payload = serialize_bid_payload(bid)
        width = env.pp.group.point_bytes
        start = BID_MESSAGE_LEN + 4
        first = payload[start: start + width]
        second = payload[start + width: start + 2 * width]
        swapped = payload[:start] + second + first + payload[start + 2 * width:]
        with pytest.raises(MalformedBid):
            parse_bid_payload(env.pp.group, swapped)

    def test_payload_rejects_undecodable_point(self, env):
        bid = craft_bid(env, env.agents[0], 43)
        payload = bytearray(serialize_bid_payload(bid))
        payload[-1] = 0x09  # break the last parity tag
        with pytest.raises(MalformedBid):
            parse_bid_payload(env.pp.group, bytes(payload))


# ---------------------------------------------------------------------------
# bidder agent

class TestBidderAgent:
    def test_placed_bid_verifies(self, env):
        from ringauction.ringsig import verify
        bid = env.agents[1].place_bid(1, 0, 17, env.ring, env.rng)
        assert verify(env.pp, bid.ring, bid.message_bytes(), bid.signature)

    def test_rejects_ring_without_own_key(self, env, keys16):
        others = Ring(env.pp.group, [kp.pub_key for kp in keys16[1:]])
        with pytest.raises(OwnKeyNotInRing):
            env.agents[0].place_bid(1, 0, 17, others, env.rng)

    def test_rejects_ring_with_unpublished_key(self, env, keys16):
        stranger = keygen(env.pp, random.Random(1234))
        ring = Ring(env.pp.group, [keys16[0].pub_key, stranger.pub_key])
        with pytest.raises(RingKeyNotOnBoard):
            env.agents[0].place_bid(1, 0, 17, ring, env.rng)

    def test_rejects_ring_with_evicted_key(self, env, keys16):
        env.rm.evict(keys16[4].pub_key)
        with pytest.raises(RingKeyNotOnBoard):
            env.agents[0].place_bid(1, 0, 17, env.ring, env.rng)


# ---------------------------------------------------------------------------
# admission

class TestAdmission:
    def test_admits_and_posts(self, env):
        env.am.open_auction(1)
        bid = craft_bid(env, env.agents[0], 10)
        result = env.am.admit_bid(bid)
        assert result
        entry = env.board.entries()[result.seq]
        assert entry.kind == BID_POSTED
        assert entry.payload == serialize_bid_payload(bid)
        assert env.am.current_high(1) == 10

    def test_unknown_auction(self, env):
        bid = craft_bid(env, env.agents[0], 10, auction_id=9)
        result = env.am.admit_bid(bid)
        assert not result
        assert result.reason == "unknown-auction"

    def test_closed_auction(self, env):
        env.am.open_auction(1)
        env.am.close_auction(1)
        result = env.am.admit_bid(craft_bid(env, env.agents[0], 10))
        assert result.reason == "auction-closed"

    def test_closed_wins_over_malformed(self, env):
        # precedence: the auction lifecycle is checked before bid structure
        env.am.open_auction(1)
        env.am.close_auction(1)
        result = env.am.admit_bid(craft_bid(env, env.agents[0], 0))
        assert result.reason == "auction-closed"

    def test_nonpositive_price_malformed(self, env):
        env.am.open_auction(1)
        result = env.am.admit_bid(craft_bid(env, env.agents[0], 0))
        assert result.reason == "malformed"

    def test_member_count_mismatch_malformed(self, env):
        env.am.open_auction(1)
        bid = craft_bid(env, env.agents[0], 10)
        broken = replace(bid, signature=replace(bid.signature,
                                                members=bid.signature.members[:-1]))
        assert env.am.admit_bid(broken).reason == "malformed"

    def test_off_curve_component_malformed(self, env):
        env.am.open_auction(1)
        bid = craft_bid(env, env.agents[0], 10)
        broken = replace(bid, signature=replace(bid.signature, s1=(1, 1)))
        assert env.am.admit_bid(broken).reason == "malformed"

    def test_ring_key_not_on_board(self, env, keys16):
        env.am.open_auction(1)
        stranger = keygen(env.pp, random.Random(4321))
        ring = Ring(env.pp.group, [keys16[0].pub_key, stranger.pub_key])
        bid = craft_bid(env, env.agents[0], 10, ring=ring)
        assert env.am.admit_bid(bid).reason == "ring-key-not-on-BBS"

    def test_evicted_ring_key_not_on_board(self, env, keys16):
        env.am.open_auction(1)
        bid = craft_bid(env, env.agents[0], 10)
        env.rm.evict(keys16[2].pub_key)
        assert env.am.admit_bid(bid).reason == "ring-key-not-on-BBS"

    def test_replayed_bid(self, env):
        env.am.open_auction(1, monotonic=False)
        bid = craft_bid(env, env.agents[0], 10)
        assert env.am.admit_bid(bid)
        again = env.am.admit_bid(bid)
        assert again.reason == "replayed-bid"

    def test_same_price_new_signature_is_not_a_replay(self, env):
        # a fresh signature over the same message is a different payload
        env.am.open_auction(1, monotonic=False)
        assert env.am.admit_bid(craft_bid(env, env.agents[0], 10))
        assert env.am.admit_bid(craft_bid(env, env.agents[0], 10))

    def test_monotonic_price_enforced_by_default(self, env):
        env.am.open_auction(1)
        assert env.am.admit_bid(craft_bid(env, env.agents[0], 10))
        low = env.am.admit_bid(craft_bid(env, env.agents[1], 10))
        assert low.reason == "price-not-monotonic"
        assert env.am.admit_bid(craft_bid(env, env.agents[1], 11))

    def test_monotonic_off_allows_lower_price(self, env):
        env.am.open_auction(1, monotonic=False)
        assert env.am.admit_bid(craft_bid(env, env.agents[0], 10))
        assert env.am.admit_bid(craft_bid(env, env.agents[1], 7))

    def test_invalid_signature_is_admitted_lazily(self, env):
        # admission checks structure only; signature verification is
        # deferred to winner determination
        env.am.open_auction(1)
        bid = craft_bid(env, env.agents[0], 10)
        broken = replace(bid, signature=replace(
            bid.signature, s1=env.pp.group.add(bid.signature.s1, env.pp.group.g)))
        assert env.am.admit_bid(broken)


# ---------------------------------------------------------------------------
# winner determination

class TestWinner:
    def test_highest_valid_bid_wins(self, env):
        env.am.open_auction(1, monotonic=False)
        for agent, price in zip(env.agents, (10, 20, 15)):
            assert env.am.admit_bid(craft_bid(env, agent, price))
        env.am.close_auction(1)
        winner = env.am.determine_winner(1)
        assert winner.price == 20

    def test_invalid_top_bid_is_skipped(self, env):
        env.am.open_auction(1, monotonic=False)
        assert env.am.admit_bid(craft_bid(env, env.agents[0], 10))
        top = craft_bid(env, env.agents[1], 20)
        broken = replace(top, signature=replace(
            top.signature, s1=env.pp.group.add(top.signature.s1, env.pp.group.g)))
        assert env.am.admit_bid(broken)
        assert env.am.admit_bid(craft_bid(env, env.agents[2], 15))
        env.am.close_auction(1)
        winner = env.am.determine_winner(1)
        assert winner.price == 15

    def test_tie_goes_to_earlier_posting(self, env):
        env.am.open_auction(1, monotonic=False)
        first = env.am.admit_bid(craft_bid(env, env.agents[0], 20))
        assert env.am.admit_bid(craft_bid(env, env.agents[1], 20))
        env.am.close_auction(1)
        winner = env.am.determine_winner(1)
        assert winner.seq == first.seq

    def test_no_bids_raises(self, env):
        env.am.open_auction(1)
        env.am.close_auction(1)
        with pytest.raises(NoValidBid):
            env.am.determine_winner(1)

    def test_all_invalid_raises(self, env):
        env.am.open_auction(1)
        bid = craft_bid(env, env.agents[0], 10)
        broken = replace(bid, signature=replace(
            bid.signature, s1=env.pp.group.add(bid.signature.s1, env.pp.group.g)))
        assert env.am.admit_bid(broken)
        env.am.close_auction(1)
        with pytest.raises(NoValidBid):
            env.am.determine_winner(1)

    def test_winner_requires_closed_auction(self, env):
        env.am.open_auction(1)
        env.am.admit_bid(craft_bid(env, env.agents[0], 10))
        with pytest.raises(AuctionError):
            env.am.determine_winner(1)

    def test_winner_announcement_payload(self, env):
        env.am.open_auction(1)
        bid = craft_bid(env, env.agents[3], 10)
        seq = env.am.admit_bid(bid).seq
        env.am.close_auction(1)
        winner = env.am.determine_winner(1)
        entry = env.board.entries()[-1]
        assert entry.kind == WINNER_ANNOUNCED
        assert int.from_bytes(entry.payload[:8], "big") == seq
        assert entry.payload[8:] == serialize_bid_payload(winner)

    def test_reopening_same_auction_id_rejected(self, env):
        env.am.open_auction(1)
        with pytest.raises(AuctionError):
            env.am.open_auction(1)


# ---------------------------------------------------------------------------
# identity opening

class TestOpenProtocol:
    def run_auction(self, env, prices):
        env.am.open_auction(1, monotonic=False)
        for agent, price in zip(env.agents, prices):
            assert env.am.admit_bid(craft_bid(env, agent, price))
        env.am.close_auction(1)
        return env.am.determine_winner(1)

    def test_opens_winner_identity(self, env):
        winner = self.run_auction(env, (10, 20, 15))
        pub_key, identity = open_protocol(env.am, env.rm, winner)
        assert identity == b"agent-1"
        assert pub_key == env.agents[1].keypair.pub_key
        # an honest winner keeps its key
        assert env.rm.lookup_identity(pub_key).status == "active"

    def test_malicious_opening_evicts(self, env):
        winner = self.run_auction(env, (10, 20, 15))
        pub_key, _ = open_protocol(env.am, env.rm, winner, malicious=True)
        assert env.rm.lookup_identity(pub_key).status == "evicted"
        assert env.pp.group.encode_point(pub_key) not in env.board.active_keys()

    def test_unverified_bid_cannot_be_opened(self, env):
        winner = self.run_auction(env, (10, 20, 15))
        broken = replace(winner, signature=replace(
            winner.signature,
            s1=env.pp.group.add(winner.signature.s1, env.pp.group.g)))
        with pytest.raises(NotVerified):
            open_protocol(env.am, env.rm, broken)

    def test_ambiguous_trace_raises_untraceable(self, tiny_params):
        # Built over the toy group, where a ring member whose offset key has
        # order dividing the secret factor is easy to find; the signature
        # verifies, but tracing cannot single anyone out.
        pp, tk = setup(tiny_params, 8, random.Random(0))
        group = tiny_params.group
        ell = tiny_params.ell
        rng = random.Random(31)

        def degenerate(pub):
            offset = naive_add(pub, naive_neg(pp.commit_offset, ell), ell)
            return naive_mul(7, offset, ell) is None

        signer = keygen(pp, rng)
        while degenerate(signer.pub_key):
            signer = keygen(pp, rng)
        decoy = keygen(pp, rng)
        while not degenerate(decoy.pub_key) or decoy.pub_key == signer.pub_key:
            decoy = keygen(pp, rng)
        ring = Ring(group, [signer.pub_key, decoy.pub_key])
        message = encode_bid_message(1, 0, 10)
        sig = sign(pp, ring, ring.index_of(signer.pub_key), signer, message, rng)
        bid = Bid(auction_id=1, round_no=0, price=10, ring=ring, signature=sig)
        board = BulletinBoard()
        am = AuctionManager(pp, tk, board)
        rm = RegistrationManager(group, board)
        with pytest.raises(Untraceable):
            open_protocol(am, rm, bid)

    def test_board_carries_no_identities(self, env):
        # conditional anonymity: the public record contains ring signatures
        # and keys, never identity strings; identities come out only through
        # the two-party opening
        self.run_auction(env, (10, 20, 15))
        text = env.board.to_text()
        assert "agent-" not in text
        for entry in env.board.entries():
            if entry.kind == BID_POSTED:
                parsed = parse_bid_payload(env.pp.group, entry.payload)
                assert len(parsed.ring) == len(env.agents)


# ---------------------------------------------------------------------------
# message accounting

class TestMessageCounting:
    def test_fold_and_query(self):
        events = [
            MessageEvent("alice", "registration"),
            MessageEvent("alice", "bidding"),
            MessageEvent("alice", "bidding"),
            MessageEvent("bob", "registration"),
        ]
        counter = count_messages(events)
        assert counter.count("alice", "registration") == 1
        assert counter.count("alice", "bidding") == 2
        assert counter.total("alice") == 3
        assert counter.total("bob") == 1
        assert counter.count("carol", "bidding") == 0
        assert counter.senders() == ("alice", "bob")

    def test_unknown_phase_rejected(self):
        counter = count_messages([])
        with pytest.raises(MalformedTranscript):
            counter.add("alice", "gossip")
