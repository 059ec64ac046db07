"""Composite-order symmetric pairing group over a supersingular curve.

The curve y^2 = x^3 + x over F_ell, with ell prime and ell = 3 (mod 4), is
supersingular and its group of rational points is cyclic of order ell + 1.
Choosing ell = n*r - 1 therefore embeds a cyclic subgroup of a chosen
composite order n = p*q, containing order-p and order-q subgroups.  The
distortion map (x, y) -> (-x, i*y), with i^2 = -1 in F_ell^2, turns the
Tate pairing into a symmetric bilinear map that is non-degenerate on that
subgroup, with values in the order-n subgroup of F_ell^2*.

Everything is plain big-integer arithmetic on affine coordinates.  The
parameter sizes used throughout this package are study material: breaking
anonymity only requires factoring n, and nothing here is constant-time.
"""

from __future__ import annotations

import hashlib
import math
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator, Optional

Point = Optional[tuple[int, int]]  # affine (x, y); None is the identity


class GroupError(Exception):
    """Base class for parameter-construction and arithmetic failures."""


class ParameterSearchExhausted(GroupError):
    """No prime ell = n*r - 1 was found within the configured search bound."""


class InvalidPoint(GroupError):
    """A point is not on the curve or not decodable."""


# ---------------------------------------------------------------------------
# operation counting
#
# The counter is passive instrumentation: installing one never changes any
# computed value, it only tallies the counted entry points below.

class OpCounter:
    """Per-phase tallies of group operations and hash calls.

    Keys: "exp" scalar multiplications, "mul" point additions, "inv" point
    negations, "hash" hash invocations, "pair" pairing evaluations.  A scalar
    multiplication or pairing counts once; their internal point arithmetic is
    part of that single operation and is not tallied separately.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._phase = "default"
        self._phases: dict[str, dict[str, int]] = {}

    def set_phase(self, name: str) -> None:
        with self._lock:
            self._phase = name

    def bump(self, op: str) -> None:
        with self._lock:
            tally = self._phases.setdefault(self._phase, {})
            tally[op] = tally.get(op, 0) + 1

    def phase_counts(self, name: str) -> dict[str, int]:
        with self._lock:
            return dict(self._phases.get(name, {}))

    def snapshot(self) -> dict[str, dict[str, int]]:
        with self._lock:
            return {phase: dict(t) for phase, t in self._phases.items()}


_ACTIVE_COUNTER: OpCounter | None = None


def _bump(op: str) -> None:
    counter = _ACTIVE_COUNTER
    if counter is not None:
        counter.bump(op)


@contextmanager
def count_ops(counter: OpCounter | None) -> Iterator[OpCounter | None]:
    """Install ``counter`` as the active tally for the duration of the block."""
    global _ACTIVE_COUNTER
    previous = _ACTIVE_COUNTER
    _ACTIVE_COUNTER = counter
    try:
        yield counter
    finally:
        _ACTIVE_COUNTER = previous


# ---------------------------------------------------------------------------
# primality

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _mr_composite_witness(a: int, d: int, s: int, m: int) -> bool:
    x = pow(a, d, m)
    if x == 1 or x == m - 1:
        return False
    for _ in range(s - 1):
        x = x * x % m
        if x == m - 1:
            return False
    return True


def is_probable_prime(m: int) -> bool:
    """Deterministic Miller-Rabin at the sizes used here.

    The fixed base set decides every m below 3.3e24 exactly; beyond that,
    extra bases derived from m keep the error chance negligible.
    """
    if m < 2:
        return False
    for p in _SMALL_PRIMES:
        if m % p == 0:
            return m == p
    d, s = m - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        if _mr_composite_witness(a, d, s, m):
            return False
    if m >= 3_317_044_064_679_887_385_961_981:
        seed = m.to_bytes((m.bit_length() + 7) // 8, "big")
        for i in range(16):
            digest = hashlib.sha256(seed + bytes([i])).digest()
            a = int.from_bytes(digest, "big") % (m - 3) + 2
            if _mr_composite_witness(a, d, s, m):
                return False
    return True


def _sample_prime(bits: int, rng) -> int:
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if is_probable_prime(candidate):
            return candidate


# ---------------------------------------------------------------------------
# raw curve arithmetic (uncounted; the curve is always y^2 = x^3 + x)

def _on_curve(P: Point, ell: int) -> bool:
    if P is None:
        return True
    x, y = P
    return (y * y - (x * x * x + x)) % ell == 0


def _point_neg(P: Point, ell: int) -> Point:
    if P is None:
        return None
    x, y = P
    return (x, (-y) % ell)


def _point_add(P: Point, Q: Point, ell: int) -> Point:
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % ell == 0:
            return None
        lam = (3 * x1 * x1 + 1) * pow(2 * y1, -1, ell) % ell
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, ell) % ell
    x3 = (lam * lam - x1 - x2) % ell
    y3 = (lam * (x1 - x3) - y1) % ell
    return (x3, y3)


def _point_mul(k: int, P: Point, ell: int) -> Point:
    if P is None:
        return None
    if k < 0:
        k, P = -k, _point_neg(P, ell)
    acc: Point = None
    while k:
        if k & 1:
            acc = _point_add(acc, P, ell)
        P = _point_add(P, P, ell)
        k >>= 1
    return acc


def decode_point_bytes(data: bytes, ell: int) -> Point:
    """Decode the canonical fixed-width encoding for a curve modulus ell."""
    width = (ell.bit_length() + 7) // 8
    if len(data) != width + 1:
        raise InvalidPoint("wrong point encoding length")
    x = int.from_bytes(data[:-1], "big")
    tag = data[-1]
    if tag == 0x00:
        if x != 0:
            raise InvalidPoint("identity encoding must be all zero")
        return None
    if tag not in (0x02, 0x03):
        raise InvalidPoint(f"unknown parity tag {tag:#04x}")
    if x >= ell:
        raise InvalidPoint("x coordinate out of range")
    z = (x * x * x + x) % ell
    y = pow(z, (ell + 1) // 4, ell)
    if y * y % ell != z:
        raise InvalidPoint("x coordinate is not on the curve")
    want_odd = 1 if tag == 0x03 else 0
    if (y & 1) != want_odd:
        y = ell - y
    return (x, y)


def _random_point(ell: int, rng) -> tuple[int, int]:
    # Uniform over finite points with y != 0; odd-order work never needs the
    # single 2-torsion point (0, 0).
    exp = (ell + 1) // 4
    while True:
        x = rng.randrange(ell)
        z = (x * x * x + x) % ell
        if z == 0:
            continue
        y = pow(z, exp, ell)
        if y * y % ell != z:
            continue
        if rng.getrandbits(1):
            y = ell - y
        return (x, y)


# ---------------------------------------------------------------------------
# F_ell^2 = F_ell(i) with i^2 = -1 (irreducible because ell = 3 mod 4)

_FP2_ONE = (1, 0)


def _fp2_mul(u, v, ell):
    a, b = u
    c, d = v
    return ((a * c - b * d) % ell, (a * d + b * c) % ell)


def _fp2_sqr(u, ell):
    a, b = u
    return ((a * a - b * b) % ell, 2 * a * b % ell)


def _fp2_pow(u, e, ell):
    if e == 0:
        return _FP2_ONE
    acc = _FP2_ONE
    for bit in bin(e)[2:]:
        acc = _fp2_sqr(acc, ell)
        if bit == "1":
            acc = _fp2_mul(acc, u, ell)
    return acc


def _fp2_inv(u, ell):
    a, b = u
    norm_inv = pow((a * a + b * b) % ell, -1, ell)
    return (a * norm_inv % ell, (-b) * norm_inv % ell)


@dataclass(frozen=True)
class GtElement:
    """Element of the order-n target subgroup of F_ell^2*."""

    re: int
    im: int
    ell: int

    def __mul__(self, other: "GtElement") -> "GtElement":
        if self.ell != other.ell:
            raise ValueError("cannot mix target fields")
        re, im = _fp2_mul((self.re, self.im), (other.re, other.im), self.ell)
        return GtElement(re, im, self.ell)

    def __pow__(self, exponent: int) -> "GtElement":
        base = (self.re, self.im)
        if exponent < 0:
            base = _fp2_inv(base, self.ell)
            exponent = -exponent
        re, im = _fp2_pow(base, exponent, self.ell)
        return GtElement(re, im, self.ell)

    def inverse(self) -> "GtElement":
        re, im = _fp2_inv((self.re, self.im), self.ell)
        return GtElement(re, im, self.ell)

    def is_one(self) -> bool:
        return self.re == 1 and self.im == 0


# ---------------------------------------------------------------------------
# pairing internals

def _line_at(R: Point, S: Point, tx: int, ty: int, ell: int):
    # Value at the distorted point (tx, i*ty) of the line through R and S.
    # Verticals and lines at infinity take values in F_ell* (or are constant
    # 1), and the final exponentiation kills every F_ell* factor, so they are
    # simply skipped.  A non-vertical line value has imaginary part ty != 0,
    # hence is never zero.
    if R is None or S is None:
        return _FP2_ONE
    xr, yr = R
    xs, ys = S
    if xr == xs and (yr + ys) % ell == 0:
        return _FP2_ONE
    if R == S:
        lam = (3 * xr * xr + 1) * pow(2 * yr, -1, ell) % ell
    else:
        lam = (ys - yr) * pow(xs - xr, -1, ell) % ell
    return ((-yr - lam * (tx - xr)) % ell, ty)


def _miller(P: Point, tx: int, ty: int, n: int, ell: int):
    f = _FP2_ONE
    R = P
    for bit in bin(n)[3:]:
        f = _fp2_mul(_fp2_sqr(f, ell), _line_at(R, R, tx, ty, ell), ell)
        R = _point_add(R, R, ell)
        if bit == "1":
            f = _fp2_mul(f, _line_at(R, P, tx, ty, ell), ell)
            R = _point_add(R, P, ell)
    return f


def _pair_value(P: Point, Q: Point, n: int, ell: int):
    """Raw pairing value in F_ell^2 (already final-exponentiated)."""
    if P is None or Q is None:
        return _FP2_ONE
    tx = (-Q[0]) % ell  # distorted image of Q
    ty = Q[1] % ell
    f = _miller(P, tx, ty, n, ell)
    return _fp2_pow(f, (ell * ell - 1) // n, ell)


# ---------------------------------------------------------------------------
# hashing

_SCALAR_TAG = b"\x01"
_BITS_TAG = b"\x02"


def _expand(tag: bytes, data: bytes, nbytes: int) -> bytes:
    blocks = []
    for ctr in range((nbytes + 31) // 32):
        blocks.append(hashlib.sha256(tag + ctr.to_bytes(4, "big") + data).digest())
    return b"".join(blocks)[:nbytes]


def hash_to_bits(data: bytes, k: int) -> tuple[int, ...]:
    """Hash arbitrary bytes to exactly k bits (MSB of each byte first)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    _bump("hash")
    raw = _expand(_BITS_TAG, data, (k + 7) // 8)
    bits = []
    for byte in raw:
        for shift in range(7, -1, -1):
            bits.append((byte >> shift) & 1)
    return tuple(bits[:k])


@dataclass(frozen=True)
class HashDescriptor:
    """Parameters of the two protocol hashes.

    Both expand SHA-256 in counter mode under distinct domain tags.  The
    scalar hash expands to 64 bits beyond the modulus before reducing, which
    keeps the modular bias below 2**-64; the bit hash truncates the stream to
    exactly k bits.
    """

    k: int
    algorithm: str = "sha256"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.algorithm != "sha256":
            raise ValueError(f"unsupported hash algorithm {self.algorithm!r}")

    def bits(self, data: bytes) -> tuple[int, ...]:
        return hash_to_bits(data, self.k)


# ---------------------------------------------------------------------------
# the public group context

class PairingGroup:
    """Public arithmetic context: curve modulus, subgroup generators, codecs.

    This object carries exactly what verifiers see — n, ell, the order-n
    generator g and the order-q generator h — and none of the factorization.
    All point arithmetic, the pairing, and the canonical encodings hang off
    it.  The counted methods (add/neg/mul/pair/hash_to_zn) are the
    instrumentation points; internal steps of a single operation are not
    tallied separately.
    """

    def __init__(self, n: int, ell: int, g: Point, h: Point) -> None:
        if n < 2:
            raise ValueError("n must exceed 1")
        if ell % 4 != 3 or (ell + 1) % n != 0:
            raise ValueError("need ell = 3 (mod 4) with n dividing ell + 1")
        self.n = n
        self.ell = ell
        self.coord_bytes = (ell.bit_length() + 7) // 8
        self.point_bytes = self.coord_bytes + 1
        for name, pt in (("g", g), ("h", h)):
            if pt is None or not _on_curve(pt, ell):
                raise InvalidPoint(f"generator {name} is not a finite curve point")
        self.g = g
        self.h = h

    # -- point arithmetic ---------------------------------------------------

    def is_on_curve(self, P: Point) -> bool:
        return _on_curve(P, self.ell)

    def add(self, P: Point, Q: Point) -> Point:
        _bump("mul")
        return _point_add(P, Q, self.ell)

    def neg(self, P: Point) -> Point:
        _bump("inv")
        return _point_neg(P, self.ell)

    def mul(self, k: int, P: Point) -> Point:
        """Scalar multiple [k]P (one counted exponentiation)."""
        _bump("exp")
        return _point_mul(k, P, self.ell)

    def random_point(self, rng) -> tuple[int, int]:
        return _random_point(self.ell, rng)

    def random_scalar(self, rng) -> int:
        return rng.randrange(self.n)

    # -- pairing --------------------------------------------------------------

    def pair(self, P: Point, Q: Point) -> GtElement:
        """Symmetric pairing through the distortion map; bilinear on <g>."""
        for pt in (P, Q):
            if not _on_curve(pt, self.ell):
                raise InvalidPoint("pairing input is not on the curve")
        _bump("pair")
        re, im = _pair_value(P, Q, self.n, self.ell)
        return GtElement(re, im, self.ell)

    def gt_one(self) -> GtElement:
        return GtElement(1, 0, self.ell)

    # -- canonical encodings --------------------------------------------------

    def encode_point(self, P: Point) -> bytes:
        """Fixed-width big-endian x plus a parity byte; identity is all zero."""
        if P is None:
            return bytes(self.point_bytes)
        x, y = P
        tag = b"\x03" if y & 1 else b"\x02"
        return x.to_bytes(self.coord_bytes, "big") + tag

    def decode_point(self, data: bytes) -> Point:
        return decode_point_bytes(data, self.ell)

    # -- hashing ----------------------------------------------------------------

    def hash_to_zn(self, data: bytes) -> int:
        """Counter-mode SHA-256 expanded to bitlen(n)+64 bits, reduced mod n."""
        _bump("hash")
        nbytes = (self.n.bit_length() + 64 + 7) // 8
        return int.from_bytes(_expand(_SCALAR_TAG, data, nbytes), "big") % self.n

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"PairingGroup(n={self.n}, ell={self.ell})"


@dataclass(frozen=True)
class GroupParams:
    """Full parameter set, including the secret factorization n = p*q.

    ``group`` is the public part; handing it out does not reveal p or q.
    """

    p: int
    q: int
    r: int
    group: PairingGroup

    @property
    def n(self) -> int:
        return self.group.n

    @property
    def ell(self) -> int:
        return self.group.ell

    @property
    def g(self) -> Point:
        return self.group.g

    @property
    def h(self) -> Point:
        return self.group.h

    def validate(self) -> None:
        """Re-check every structural invariant; raises GroupError on failure."""
        grp = self.group
        if self.p == self.q:
            raise GroupError("p and q must be distinct")
        if not (is_probable_prime(self.p) and is_probable_prime(self.q)):
            raise GroupError("p and q must be prime")
        if self.p * self.q != grp.n:
            raise GroupError("n != p*q")
        if grp.n * self.r != grp.ell + 1:
            raise GroupError("n*r != ell + 1")
        if grp.ell % 4 != 3 or not is_probable_prime(grp.ell):
            raise GroupError("ell must be a prime = 3 (mod 4)")
        ell = grp.ell
        if _point_mul(grp.n, grp.g, ell) is not None:
            raise GroupError("g order does not divide n")
        for factor in (self.p, self.q):
            if _point_mul(grp.n // factor, grp.g, ell) is None:
                raise GroupError("g order is a proper divisor of n")
        if grp.h is None or _point_mul(self.q, grp.h, ell) is not None:
            raise GroupError("h order does not divide q")
        if _point_mul(1, grp.h, ell) is None:
            raise GroupError("h is the identity")


def group_from_primes(p: int, q: int, rng, *, r_search_limit: int = 100_000) -> GroupParams:
    """Build the curve and generators for composite order n = p*q.

    Searches r = 4, 8, 12, ... for a prime ell = n*r - 1 (n is odd, so
    ell = 3 mod 4 forces 4 | r), then cofactor-multiplies random points into
    a generator g of exact order n whose self-pairing also has exact order n,
    and finally forms the order-q generator h = [alpha*p]g.
    """
    if p == q:
        raise ValueError("the two prime factors must be distinct")
    if not (is_probable_prime(p) and is_probable_prime(q)):
        raise ValueError("both factors must be prime")
    n = p * q
    for r in range(4, r_search_limit + 1, 4):
        ell = n * r - 1
        if is_probable_prime(ell):
            break
    else:
        raise ParameterSearchExhausted(
            f"no prime of the form {n}*r - 1 with r <= {r_search_limit}"
        )

    while True:
        base = _random_point(ell, rng)
        g = _point_mul(r, base, ell)
        if g is None:
            continue
        if _point_mul(n // p, g, ell) is None or _point_mul(n // q, g, ell) is None:
            continue
        # Defensive: insist the self-pairing generates the whole target
        # subgroup, so the pairing separates both prime-order components.
        z = _pair_value(g, g, n, ell)
        if z == _FP2_ONE:
            continue
        if _fp2_pow(z, p, ell) == _FP2_ONE or _fp2_pow(z, q, ell) == _FP2_ONE:
            continue
        break

    while True:
        alpha = rng.randrange(n)
        if math.gcd(alpha, q) == 1:
            break
    h = _point_mul(alpha * p % n, g, ell)

    return GroupParams(p=p, q=q, r=r, group=PairingGroup(n, ell, g, h))


def gen_group_params(p_bits: int, q_bits: int, rng, *, r_search_limit: int = 100_000) -> GroupParams:
    """Sample fresh primes of the requested sizes and build the group."""
    if p_bits < 8 or q_bits < 8:
        raise ValueError("prime sizes below 8 bits are not supported")
    p = _sample_prime(p_bits, rng)
    while True:
        q = _sample_prime(q_bits, rng)
        if q != p:
            break
    return group_from_primes(p, q, rng, r_search_limit=r_search_limit)
