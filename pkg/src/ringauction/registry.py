"""Registration authority, key-possession proofs, and the bulletin board.

The bulletin board is the single public artifact of the protocol: an
append-only sequenced log of key publications, evictions, posted bids and
winner announcements.  Its replay defines the canonical state — in
particular the *active-key view*, the only thing admission ever consults.
There is no black list: eviction appends a record and the key simply drops
out of the active view.

The registration manager privately keeps the (published key -> identity)
table.  Nothing on the board links a key to an identity.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable

from .group import PairingGroup, Point

KEY_PUBLISHED = "key-published"
KEY_EVICTED = "key-evicted"
BID_POSTED = "bid-posted"
WINNER_ANNOUNCED = "winner-announced"
ENTRY_KINDS = (KEY_PUBLISHED, KEY_EVICTED, BID_POSTED, WINNER_ANNOUNCED)


class RegistryError(Exception):
    """Base class for registration failures."""


class DuplicateKey(RegistryError):
    """The key already has a record (active or evicted)."""


class InvalidProof(RegistryError):
    """The possession proof or the key itself failed checks."""


class UnknownKey(RegistryError):
    """No record exists for the key."""


class AlreadyEvicted(RegistryError):
    """The key was evicted before."""


class MalformedBoard(RegistryError):
    """A serialized board record failed to parse."""


# ---------------------------------------------------------------------------
# possession proofs

@dataclass(frozen=True)
class RegistrationProof:
    """Schnorr-style proof of knowledge of the key exponent, bound to the
    claimed identity through the scalar hash."""

    a_resp: int  # hash of the commitment and the identity
    b_resp: int  # masked exponent response


def make_registration(x: int, pub_key: Point, identity: bytes,
                      group: PairingGroup, rng) -> RegistrationProof:
    if group.mul(x, group.g) != pub_key:
        raise ValueError("pub_key does not match the exponent")
    t = rng.randrange(group.n)
    commitment = group.mul(t, group.g)
    a_resp = group.hash_to_zn(group.encode_point(commitment) + identity)
    b_resp = (t + x * a_resp) % group.n
    return RegistrationProof(a_resp=a_resp, b_resp=b_resp)


def verify_registration(pub_key: Point, identity: bytes,
                        proof: RegistrationProof, group: PairingGroup) -> bool:
    """Recompute the commitment as [b]g - [a]pub_key and re-derive the hash."""
    if pub_key is None or not group.is_on_curve(pub_key):
        return False
    if not (0 <= proof.a_resp < group.n and 0 <= proof.b_resp < group.n):
        return False
    commitment = group.add(
        group.mul(proof.b_resp, group.g),
        group.neg(group.mul(proof.a_resp, pub_key)),
    )
    return proof.a_resp == group.hash_to_zn(group.encode_point(commitment) + identity)


# ---------------------------------------------------------------------------
# bulletin board

@dataclass(frozen=True)
class BoardEntry:
    seq: int
    kind: str
    payload: bytes


class BulletinBoard:
    """Append-only sequenced public log.

    Appends are serialized through an internal lock; reads hand out immutable
    snapshots, so they are safe from any thread.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._entries: list[BoardEntry] = []
        self._active: set[bytes] = set()

    def append(self, kind: str, payload: bytes) -> int:
        if kind not in ENTRY_KINDS:
            raise ValueError(f"unknown entry kind {kind!r}")
        with self._lock:
            seq = len(self._entries)
            self._entries.append(BoardEntry(seq=seq, kind=kind, payload=payload))
            if kind == KEY_PUBLISHED:
                self._active.add(payload)
            elif kind == KEY_EVICTED:
                self._active.discard(payload)
            return seq

    def entries(self) -> tuple[BoardEntry, ...]:
        with self._lock:
            return tuple(self._entries)

    def active_keys(self) -> frozenset[bytes]:
        """Snapshot of currently active key encodings."""
        with self._lock:
            return frozenset(self._active)

    def to_text(self) -> str:
        return board_to_text(self.entries())


def replay_active_view(entries: Iterable[BoardEntry]) -> frozenset[bytes]:
    """Recompute the active-key view from genesis; the board's incremental
    view must always equal this."""
    active: set[bytes] = set()
    for entry in entries:
        if entry.kind == KEY_PUBLISHED:
            active.add(entry.payload)
        elif entry.kind == KEY_EVICTED:
            active.discard(entry.payload)
    return frozenset(active)


def board_to_text(entries: Iterable[BoardEntry]) -> str:
    """One record per line: seq, kind, hex payload."""
    return "".join(f"{e.seq} {e.kind} {e.payload.hex()}\n" for e in entries)


def parse_board_text(text: str) -> tuple[BoardEntry, ...]:
    entries: list[BoardEntry] = []
    previous = -1
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(" ")
        if len(parts) != 3:
            raise MalformedBoard(f"line {lineno}: expected 'seq kind payload'")
        try:
            seq = int(parts[0])
        except ValueError:
            raise MalformedBoard(f"line {lineno}: bad sequence number") from None
        if seq <= previous:
            raise MalformedBoard(f"line {lineno}: sequence numbers must increase")
        previous = seq
        kind = parts[1]
        if kind not in ENTRY_KINDS:
            raise MalformedBoard(f"line {lineno}: unknown kind {kind!r}")
        try:
            payload = bytes.fromhex(parts[2])
        except ValueError:
            raise MalformedBoard(f"line {lineno}: payload is not hex") from None
        entries.append(BoardEntry(seq=seq, kind=kind, payload=payload))
    return tuple(entries)


# ---------------------------------------------------------------------------
# registration manager

@dataclass
class IdentityRecord:
    pub_key: Point
    identity: bytes
    status: str = "active"  # 'active' | 'evicted'


class RegistrationManager:
    """Owns the private identity table and publishes keys on the board.

    Single-owner actor: every mutation goes through this object.  Records
    survive eviction so audits can still resolve a key; only the board's
    active view shrinks.
    """

    def __init__(self, group: PairingGroup, board: BulletinBoard) -> None:
        self.group = group
        self.board = board
        self._records: dict[bytes, IdentityRecord] = {}

    def register(self, pub_key: Point, identity: bytes, proof: RegistrationProof) -> int:
        """Verify the possession proof, store the record, publish the key.

        Returns the board sequence number of the key publication.
        """
        if pub_key is None:
            raise InvalidProof("the identity point cannot be registered")
        if not identity:
            raise InvalidProof("identity must be non-empty")
        # Order sanity: the key must live in the subgroup of exponent n.
        if self.group.mul(self.group.n, pub_key) is not None:
            raise InvalidProof("key order does not divide the group order")
        if not verify_registration(pub_key, identity, proof, self.group):
            raise InvalidProof("possession proof failed")
        encoded = self.group.encode_point(pub_key)
        if encoded in self._records:
            raise DuplicateKey("key already registered")
        self._records[encoded] = IdentityRecord(pub_key=pub_key, identity=identity)
        return self.board.append(KEY_PUBLISHED, encoded)

    def lookup_identity(self, pub_key: Point) -> IdentityRecord:
        """Resolve a published key to its record (evicted keys stay resolvable)."""
        record = self._records.get(self.group.encode_point(pub_key))
        if record is None:
            raise UnknownKey("no record for this key")
        return record

    def evict(self, pub_key: Point) -> int:
        """Remove the key from the active view; the record is kept for audit."""
        record = self.lookup_identity(pub_key)
        if record.status == "evicted":
            raise AlreadyEvicted("key was already evicted")
        record.status = "evicted"
        return self.board.append(KEY_EVICTED, self.group.encode_point(pub_key))
